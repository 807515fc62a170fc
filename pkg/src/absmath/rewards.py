"""Abstraction rewards: exact-rational answer and symbolic-distance scores.

Two components per graded answer:
  r_answer   in {0, r_correct}: paid iff the candidate's derivations solve
             and the final answer equals gold exactly.
  r_symbolic = r_max * (1 - EditDistance(candidate, gold) / max(len, len)),
             a token-level Levenshtein similarity over the derivation
             token lists. Both lists empty counts as identical (full marks).

Everything here stays in exact rationals; floats only appear once these
totals cross into the policy-gradient math.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import Abstraction, ConditionSet, Number, number_equals
from .errors import AbsMathError, GoldInvalid
from .retrieval import Delimiters, Token, retrieve, tokenize
from .solver import solve

DEFAULT_R_CORRECT = Fraction(5, 2)
DEFAULT_R_MAX = Fraction(3, 2)


@dataclass(frozen=True)
class RewardConfig:
    r_correct: Fraction = DEFAULT_R_CORRECT
    r_max: Fraction = DEFAULT_R_MAX

    def __post_init__(self):
        for name in ("r_correct", "r_max"):
            value = getattr(self, name)
            if not isinstance(value, Fraction):
                object.__setattr__(self, name, Fraction(str(value)))
        if self.r_correct < 0 or self.r_max < 0:
            raise ValueError("reward magnitudes must be nonnegative")


def answer_reward(
    candidate: Abstraction,
    conditions: ConditionSet,
    gold_answer: Number,
    config: RewardConfig = RewardConfig(),
) -> Fraction:
    """r_correct iff the candidate solves to the gold answer, else 0."""
    derived, _ = _derive(candidate, conditions)
    if derived is not None and number_equals(derived, gold_answer):
        return config.r_correct
    return Fraction(0)


def _derive(
    candidate: Abstraction, conditions: ConditionSet
) -> tuple[Optional[Number], Optional[str]]:
    try:
        result = solve(candidate, conditions)
    except AbsMathError as exc:
        return None, exc.describe()
    return result.final_answer, None


def edit_distance(a: Sequence[Token], b: Sequence[Token]) -> int:
    """Levenshtein distance over token lists, unit costs."""
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, tok_a in enumerate(a, start=1):
        current = [i]
        for j, tok_b in enumerate(b, start=1):
            cost = 0 if tok_a == tok_b else 1
            current.append(
                min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
            )
        previous = current
    return previous[-1]


def token_reward(
    candidate_tokens: Sequence[Token],
    gold_tokens: Sequence[Token],
    config: RewardConfig = RewardConfig(),
) -> Fraction:
    """r_max * (1 - d / maxlen); two empty lists score full marks."""
    max_len = max(len(candidate_tokens), len(gold_tokens))
    if max_len == 0:
        return config.r_max
    d = edit_distance(candidate_tokens, gold_tokens)
    return config.r_max * (1 - Fraction(d, max_len))


def symbolic_reward(
    candidate: Abstraction,
    gold: Abstraction,
    config: RewardConfig = RewardConfig(),
) -> Fraction:
    return token_reward(tokenize(candidate), tokenize(gold), config)


@dataclass(frozen=True)
class RewardBreakdown:
    r_answer: Fraction
    r_symbolic: Fraction
    total: Fraction
    edit_distance: int
    max_len: int
    derived_answer: Optional[Number] = None
    failure: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "r_answer": _render_fraction(self.r_answer),
            "r_symbolic": _render_fraction(self.r_symbolic),
            "total": _render_fraction(self.total),
            "edit_distance": self.edit_distance,
            "max_len": self.max_len,
            "derived_answer": (
                self.derived_answer.render() if self.derived_answer is not None else None
            ),
            "failure": self.failure,
        }


def _render_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def grade(
    answer_text: str,
    gold_text: str,
    conditions: ConditionSet,
    gold_answer: Number,
    config: RewardConfig = RewardConfig(),
    delimiters: Optional[Delimiters] = None,
) -> RewardBreakdown:
    """Grade one answer against gold text. Total over candidate errors, not
    exceptions: a malformed candidate scores like an empty abstraction.

    Raises GoldInvalid if the gold text itself fails retrieval; that is a
    data bug, not a model behavior.
    """
    try:
        gold = retrieve(gold_text, delimiters)
    except AbsMathError as exc:
        raise GoldInvalid(exc.describe()) from exc
    gold_tokens = tokenize(gold)

    failure: Optional[str] = None
    derived: Optional[Number] = None
    candidate_tokens: list[Token] = []
    r_answer = Fraction(0)
    try:
        candidate = retrieve(answer_text, delimiters)
    except AbsMathError as exc:
        failure = exc.describe()
    else:
        candidate_tokens = tokenize(candidate)
        derived, failure = _derive(candidate, conditions)
        if derived is not None and number_equals(derived, gold_answer):
            r_answer = config.r_correct

    max_len = max(len(candidate_tokens), len(gold_tokens))
    if max_len == 0:
        d = 0
        r_symbolic = config.r_max
    else:
        d = edit_distance(candidate_tokens, gold_tokens)
        r_symbolic = config.r_max * (1 - Fraction(d, max_len))

    return RewardBreakdown(
        r_answer=r_answer,
        r_symbolic=r_symbolic,
        total=r_answer + r_symbolic,
        edit_distance=d,
        max_len=max_len,
        derived_answer=derived,
        failure=failure,
    )
