"""Robustness evaluation: score reasoners over rounds of perturbed instances.

Two scoring modes:
  abstral     retrieve the answer's derivations, solve them against the
              instance's conditions, compare the final value to gold exactly
  lastnumber  take the rightmost numeral in the answer text and compare

evaluate() fans reasoner calls out over a bounded thread pool (results keep
input order) and then computes all metrics single-threaded: per-round
accuracy, the mean across rounds, and the population std across rounds.
delta_drop() is the percentage accuracy drop of a perturbed variant against
its unperturbed baseline.
"""

from __future__ import annotations

import hashlib
import math
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Protocol, Sequence

from .core import Instance, Number, number_equals
from .errors import AbsMathError, EmptyRound, ZeroBaseline
from .retrieval import SEP, Token, render_tokens, retrieve, tokenize
from .solver import solve

MODE_ABSTRAL = "abstral"
MODE_LAST_NUMBER = "lastnumber"
SCORING_MODES = (MODE_ABSTRAL, MODE_LAST_NUMBER)


class Reasoner(Protocol):
    """Anything that maps an instance to answer text."""

    def answer(self, instance: Instance) -> str: ...


_LAST_NUMBER_RE = re.compile(r"-?\d[\d,]*(?:\.\d+)?(?:/\d+)?")


def score_answer(answer_text: str, instance: Instance, mode: str) -> bool:
    """True iff the answer is correct for the instance under the mode."""
    if instance.gold_answer is None:
        raise ValueError(f"instance {instance.id} has no gold answer")
    if mode == MODE_ABSTRAL:
        if instance.conditions is None:
            raise ValueError(f"instance {instance.id} has no conditions")
        try:
            abstraction = retrieve(answer_text)
            result = solve(abstraction, instance.conditions)
        except AbsMathError:
            return False
        if result.final_answer is None:
            return False
        return number_equals(result.final_answer, instance.gold_answer)
    if mode == MODE_LAST_NUMBER:
        last = None
        for last in _LAST_NUMBER_RE.finditer(answer_text):
            pass
        if last is None:
            return False
        try:
            value = Number.parse(last.group().replace(",", ""))
        except AbsMathError:
            return False
        return number_equals(value, instance.gold_answer)
    raise ValueError(f"unknown scoring mode {mode!r}")


@dataclass(frozen=True)
class EvalReport:
    per_round_accuracy: tuple[float, ...]
    mean: float
    std: float
    n_rounds: int
    n_per_round: tuple[int, ...]
    mode: str
    std_kind: str = "population"
    delta_vs_baseline: Optional[float] = None
    baseline_mean: Optional[float] = None

    def to_json(self) -> dict:
        return {
            "per_round_accuracy": list(self.per_round_accuracy),
            "mean": self.mean,
            "std": self.std,
            "n_rounds": self.n_rounds,
            "n_per_round": list(self.n_per_round),
            "mode": self.mode,
            "std_kind": self.std_kind,
            "delta_vs_baseline": self.delta_vs_baseline,
            "baseline_mean": self.baseline_mean,
        }

    def with_baseline(self, origin_mean: float) -> "EvalReport":
        return EvalReport(
            per_round_accuracy=self.per_round_accuracy,
            mean=self.mean,
            std=self.std,
            n_rounds=self.n_rounds,
            n_per_round=self.n_per_round,
            mode=self.mode,
            std_kind=self.std_kind,
            delta_vs_baseline=delta_drop(self.mean, origin_mean),
            baseline_mean=origin_mean,
        )


def evaluate(
    reasoner: Reasoner,
    rounds: Sequence[Sequence[Instance]],
    mode: str = MODE_ABSTRAL,
    max_workers: int = 8,
) -> EvalReport:
    """Score a reasoner over instance rounds.

    Reasoner calls run concurrently (bounded by max_workers) with results
    collected in input order; metrics are computed after collection.
    """
    if not rounds:
        raise EmptyRound("no rounds given")
    for i, rnd in enumerate(rounds):
        if not rnd:
            raise EmptyRound(f"round {i} is empty")

    answers: list[list[str]] = []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        for rnd in rounds:
            answers.append(list(pool.map(reasoner.answer, rnd)))

    accuracies: list[Fraction] = []
    for rnd, round_answers in zip(rounds, answers):
        correct = sum(
            1
            for inst, text in zip(rnd, round_answers)
            if score_answer(text, inst, mode)
        )
        accuracies.append(Fraction(correct, len(rnd)))

    n = len(accuracies)
    mean = sum(accuracies) / n  # exact, floats only at the report boundary
    variance = sum((a - mean) ** 2 for a in accuracies) / n
    return EvalReport(
        per_round_accuracy=tuple(float(a) for a in accuracies),
        mean=float(mean),
        std=math.sqrt(float(variance)),
        n_rounds=n,
        n_per_round=tuple(len(r) for r in rounds),
        mode=mode,
    )


def delta_drop(variant_mean: float, origin_mean: float) -> float:
    """Percentage accuracy drop relative to the unperturbed baseline."""
    if origin_mean <= 0:
        raise ZeroBaseline(f"baseline mean is {origin_mean}")
    return 100.0 * (origin_mean - variant_mean) / origin_mean


# ---------------------------------------------------------------------------
# Reference reasoners
# ---------------------------------------------------------------------------


class OracleReasoner:
    """Answers with the instance's own gold abstraction text."""

    def answer(self, instance: Instance) -> str:
        if instance.gold_abstract_answer is None:
            raise ValueError(f"instance {instance.id} carries no gold abstraction")
        return instance.gold_abstract_answer


class NoisyReasoner:
    """Oracle that corrupts one abstraction token with a given probability.

    Deterministic per (seed, instance id). A corrupted token usually makes
    the derivations wrong or unparseable; on rare crafted inputs a mutation
    can be answer-preserving, so measured accuracy may sit slightly above
    1 - corruption.
    """

    def __init__(self, corruption: float, seed: int = 0):
        if not 0.0 <= corruption <= 1.0:
            raise ValueError("corruption must be within [0, 1]")
        self.corruption = corruption
        self.seed = seed

    def _rng(self, instance: Instance) -> random.Random:
        digest = hashlib.sha256(f"{self.seed}:{instance.id}".encode()).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def answer(self, instance: Instance) -> str:
        if instance.gold_abstract_answer is None:
            raise ValueError(f"instance {instance.id} carries no gold abstraction")
        text = instance.gold_abstract_answer
        rng = self._rng(instance)
        if rng.random() >= self.corruption:
            return text
        abstraction = retrieve(text)
        tokens = tokenize(abstraction)
        if not tokens:
            return text
        mutated = _mutate_one_token(tokens, rng)
        suffix = ""
        if abstraction.final is not None:
            suffix = f" The final answer is {abstraction.final.render()}."
        return render_tokens(mutated) + suffix


def _mutate_one_token(tokens: list[Token], rng: random.Random) -> list[Token]:
    out = list(tokens)
    pos = rng.randrange(len(out))
    tok = out[pos]
    if tok == SEP:
        out[pos] = ("op", "+")
    elif tok[0] == "op":
        choices = [c for c in "+-*/=" if c != tok[1]]
        out[pos] = ("op", rng.choice(choices))
    elif tok[0] == "sym":
        if rng.random() < 0.5:
            out[pos] = ("sym", tok[1], tok[2] + 1)
        else:
            out[pos] = ("sym", "out" if tok[1] == "in" else "in", tok[2])
    else:  # literal
        out[pos] = ("lit", tok[1] + 1)
    return out


# ---------------------------------------------------------------------------
# Report formatting
# ---------------------------------------------------------------------------


def format_table(
    reports: dict[str, EvalReport], origin: Optional[EvalReport] = None
) -> str:
    """Plain-text accuracy table: one row per perturbation kind, with the
    baseline column and the percentage drop when a baseline is given."""
    lines = []
    header = f"{'kind':<16} {'accuracy':>9} {'std':>7}"
    if origin is not None:
        header += f" {'origin':>8} {'drop %':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for kind, report in reports.items():
        row = f"{kind:<16} {report.mean:>9.4f} {report.std:>7.4f}"
        if origin is not None:
            row += f" {origin.mean:>8.4f} {delta_drop(report.mean, origin.mean):>8.2f}"
        lines.append(row)
    return "\n".join(lines)
