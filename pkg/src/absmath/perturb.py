"""Perturbation generation from hand-written problem templates.

A template is an abstract question (with [inK] number slots and {name}
word slots), a gold abstraction over those slots, base condition values,
numeric constraints, name pools, and optional distractor clauses. The
generator draws perturbed instances deterministically from (template,
kind, seed) and recomputes every gold answer through the solver, so the
instance's answer is always consistent with its stated conditions.

Kinds:
  vary-num         redraw every number slot under the template constraints
  vary-name        redraw the {name} slots only
  vary-both        both of the above
  digit-expansion  multiply one integer condition by 10^k, k in {1, 2}
  int-dec-fra      turn one integer condition into a half-integer
                   (decimal or fraction surface form)
  num-sub          redraw integer slots keeping each digit count
  distract         splice in a distractor clause whose values are new
                   conditions unused by the gold abstraction
"""

from __future__ import annotations

import hashlib
import math
import random
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .core import (
    Abstraction,
    BinOp,
    ConditionSet,
    Derivation,
    Expr,
    Group,
    Instance,
    Number,
    NumberForm,
    Ref,
    Symbol,
    SymbolKind,
    reinstantiate,
)
from .errors import AbsMathError, ExhaustedRetries, InvalidTemplate
from .retrieval import render_answer, retrieve
from .solver import solve

MAX_RETRIES = 32


class Perturbation(str, Enum):
    VARY_NUM = "vary-num"
    VARY_NAME = "vary-name"
    VARY_BOTH = "vary-both"
    DIGIT_EXPANSION = "digit-expansion"
    INT_DEC_FRA = "int-dec-fra"
    NUM_SUB = "num-sub"
    DISTRACT = "distract"


@dataclass(frozen=True)
class SlotConstraint:
    """One numeric predicate. range/choice also drive drawing for inputs;
    integer and out-symbol constraints are checked after solving."""

    symbol: Symbol
    kind: str  # "range" | "choice" | "multiple-of" | "integer"
    low: Optional[Fraction] = None
    high: Optional[Fraction] = None
    pool: tuple[Number, ...] = ()
    divisor: Optional[object] = None  # int or Symbol

    @staticmethod
    def parse(text: str) -> "SlotConstraint":
        parts = text.split()
        if len(parts) < 2:
            raise InvalidTemplate(f"constraint too short: {text!r}")
        symbol = Symbol.parse(parts[0])
        kind = parts[1]
        if kind == "range":
            if len(parts) != 4:
                raise InvalidTemplate(f"range needs low and high: {text!r}")
            lo, hi = Number.parse(parts[2]).value, Number.parse(parts[3]).value
            if lo > hi:
                raise InvalidTemplate(f"empty range: {text!r}")
            return SlotConstraint(symbol, "range", low=lo, high=hi)
        if kind == "choice":
            if len(parts) < 3:
                raise InvalidTemplate(f"choice needs values: {text!r}")
            pool = tuple(Number.parse(p) for p in parts[2:])
            return SlotConstraint(symbol, "choice", pool=pool)
        if kind == "multiple-of":
            if len(parts) != 3:
                raise InvalidTemplate(f"multiple-of needs a divisor: {text!r}")
            raw = parts[2]
            divisor: object
            if raw.isdigit():
                divisor = int(raw)
                if divisor == 0:
                    raise InvalidTemplate("multiple-of 0 is meaningless")
            else:
                divisor = Symbol.parse(raw)
            return SlotConstraint(symbol, "multiple-of", divisor=divisor)
        if kind == "integer":
            return SlotConstraint(symbol, "integer")
        raise InvalidTemplate(f"unknown constraint kind {kind!r}")

    def render(self) -> str:
        if self.kind == "range":
            return f"{self.symbol} range {self.low} {self.high}"
        if self.kind == "choice":
            return f"{self.symbol} choice " + " ".join(v.render() for v in self.pool)
        if self.kind == "multiple-of":
            return f"{self.symbol} multiple-of {self.divisor}"
        return f"{self.symbol} integer"


@dataclass(frozen=True)
class NameSlot:
    slot: str
    pool: tuple[str, ...]


@dataclass(frozen=True)
class Distractor:
    """A clause spliced into the question; [dK] slots become new conditions
    that the gold abstraction never references."""

    anchor: str  # "after:inK" or "end"
    text: str
    ranges: tuple[tuple[int, Fraction, Fraction], ...]  # (d index, low, high)

    @staticmethod
    def parse(text: str) -> "Distractor":
        parts = [p.strip() for p in text.split("|")]
        if len(parts) < 2:
            raise InvalidTemplate(f"distractor needs anchor | clause: {text!r}")
        anchor, clause = parts[0], parts[1]
        if anchor != "end" and not re.fullmatch(r"after:in\d+", anchor):
            raise InvalidTemplate(f"bad distractor anchor {anchor!r}")
        ranges = []
        for spec in parts[2:]:
            toks = spec.split()
            if len(toks) != 4 or not re.fullmatch(r"d\d+", toks[0]) or toks[1] != "range":
                raise InvalidTemplate(f"bad distractor slot spec {spec!r}")
            ranges.append(
                (int(toks[0][1:]), Number.parse(toks[2]).value, Number.parse(toks[3]).value)
            )
        return Distractor(anchor=anchor, text=clause, ranges=tuple(ranges))


_NAME_SLOT_RE = re.compile(r"\{(\w+)\}")
_ANY_PLACEHOLDER_RE = re.compile(r"\[(in|d)(\d+)\]")
_SENTENCE_END_RE = re.compile(r"[.!?](?=\s|$)")


@dataclass(frozen=True)
class ProblemTemplate:
    id: str
    abstract_question: str
    abstraction: Abstraction
    base_conditions: ConditionSet
    name_slots: tuple[NameSlot, ...] = ()
    constraints: tuple[SlotConstraint, ...] = ()
    distractors: tuple[Distractor, ...] = ()
    answer_kind: str = "integer"  # or "rational"

    def constraints_for(self, symbol: Symbol) -> list[SlotConstraint]:
        return [c for c in self.constraints if c.symbol == symbol]

    def validate(self) -> None:
        n = len(self.base_conditions)
        placeholders = _ANY_PLACEHOLDER_RE.findall(self.abstract_question)
        in_indices = sorted({int(idx) for kind, idx in placeholders if kind == "in"})
        if any(kind == "d" for kind, _ in placeholders):
            raise InvalidTemplate(f"{self.id}: [dK] slots belong in distractors")
        if in_indices != list(range(n)):
            raise InvalidTemplate(
                f"{self.id}: question placeholders {in_indices} do not cover "
                f"the {n} base conditions"
            )
        if self.abstraction.final is None:
            raise InvalidTemplate(f"{self.id}: abstraction has no final symbol")
        used_inputs = {s.index for s in self.abstraction.input_symbols()}
        if used_inputs - set(range(n)):
            raise InvalidTemplate(f"{self.id}: abstraction references unknown inputs")
        declared = {ns.slot for ns in self.name_slots}
        texts = [self.abstract_question] + [d.text for d in self.distractors]
        for text in texts:
            for slot in _NAME_SLOT_RE.findall(text):
                if slot not in declared:
                    raise InvalidTemplate(f"{self.id}: undeclared name slot {{{slot}}}")
        for ns in self.name_slots:
            if not ns.pool:
                raise InvalidTemplate(f"{self.id}: empty name pool for {ns.slot}")
        for k in range(n):
            sym = Symbol.input(k)
            kinds = {c.kind for c in self.constraints_for(sym)}
            if not kinds & {"range", "choice"}:
                raise InvalidTemplate(
                    f"{self.id}: in{k} needs a range or choice constraint"
                )
        for c in self.constraints:
            if c.kind == "multiple-of" and isinstance(c.divisor, Symbol):
                if (
                    c.divisor.kind is not SymbolKind.INPUT
                    or c.symbol.kind is not SymbolKind.INPUT
                    or c.divisor == c.symbol
                ):
                    raise InvalidTemplate(
                        f"{self.id}: multiple-of divisor must be a different input"
                    )
        _draw_order(self)  # raises on divisor dependency cycles
        for d in self.distractors:
            indices = sorted(
                int(idx) for kind, idx in _ANY_PLACEHOLDER_RE.findall(d.text) if kind == "d"
            )
            if any(kind == "in" for kind, _ in _ANY_PLACEHOLDER_RE.findall(d.text)):
                raise InvalidTemplate(f"{self.id}: distractor may not use [inK]")
            declared_d = sorted(r[0] for r in d.ranges)
            if indices != declared_d or indices != list(range(len(indices))):
                raise InvalidTemplate(
                    f"{self.id}: distractor slots {indices} vs ranges {declared_d}"
                )
            if d.anchor.startswith("after:"):
                k = int(d.anchor.split(":in")[1])
                if f"[in{k}]" not in self.abstract_question:
                    raise InvalidTemplate(f"{self.id}: anchor {d.anchor} not in question")
        try:
            result = solve(self.abstraction, self.base_conditions)
        except AbsMathError as exc:
            raise InvalidTemplate(f"{self.id}: base conditions do not solve: {exc}")
        if result.final_answer is None:
            raise InvalidTemplate(f"{self.id}: final symbol never defined")
        if self.answer_kind == "integer" and not result.final_answer.is_integer:
            raise InvalidTemplate(
                f"{self.id}: base answer {result.final_answer.render()} is not an "
                "integer; declare 'answer: rational' if that is intended"
            )


def parse_template(text: str, source: str = "<string>") -> ProblemTemplate:
    fields: dict[str, str] = {}
    conditions: list[tuple[int, Number]] = []
    constraints: list[SlotConstraint] = []
    names: list[NameSlot] = []
    distractors: list[Distractor] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if ":" not in line:
            raise InvalidTemplate(f"{source}:{lineno}: expected 'key: value'")
        key, _, value = line.partition(":")
        key = key.strip().lower()
        value = value.strip()
        if key in ("id", "question", "abstraction", "answer"):
            if key in fields:
                raise InvalidTemplate(f"{source}:{lineno}: duplicate {key}")
            fields[key] = value
        elif key == "condition":
            m = re.fullmatch(r"in(\d+)\s*=\s*(\S+)", value)
            if not m:
                raise InvalidTemplate(f"{source}:{lineno}: bad condition {value!r}")
            conditions.append((int(m.group(1)), Number.parse(m.group(2))))
        elif key == "constraint":
            constraints.append(SlotConstraint.parse(value))
        elif key == "names":
            m = re.fullmatch(r"(\w+)\s*=\s*(.+)", value)
            if not m:
                raise InvalidTemplate(f"{source}:{lineno}: bad names line {value!r}")
            pool = tuple(p.strip() for p in m.group(2).split("|") if p.strip())
            names.append(NameSlot(m.group(1), pool))
        elif key == "distractor":
            distractors.append(Distractor.parse(value))
        else:
            raise InvalidTemplate(f"{source}:{lineno}: unknown key {key!r}")

    for required in ("id", "question", "abstraction"):
        if required not in fields:
            raise InvalidTemplate(f"{source}: missing {required}")
    indices = sorted(idx for idx, _ in conditions)
    if indices != list(range(len(conditions))):
        raise InvalidTemplate(f"{source}: condition indices {indices} not contiguous")
    ordered = [v for _, v in sorted(conditions, key=lambda kv: kv[0])]
    try:
        abstraction = retrieve(fields["abstraction"])
    except AbsMathError as exc:
        raise InvalidTemplate(f"{source}: abstraction does not parse: {exc}")
    template = ProblemTemplate(
        id=fields["id"],
        abstract_question=fields["question"],
        abstraction=abstraction,
        base_conditions=ConditionSet(tuple(ordered)),
        name_slots=tuple(names),
        constraints=tuple(constraints),
        distractors=tuple(distractors),
        answer_kind=fields.get("answer", "integer"),
    )
    template.validate()
    return template


def load_template(path) -> ProblemTemplate:
    p = Path(path)
    return parse_template(p.read_text(encoding="utf-8"), source=str(p))


def load_templates(directory) -> list[ProblemTemplate]:
    paths = sorted(Path(directory).glob("*.txt"))
    if not paths:
        raise InvalidTemplate(f"no *.txt templates under {directory}")
    templates = [load_template(p) for p in paths]
    seen = set()
    for t in templates:
        if t.id in seen:
            raise InvalidTemplate(f"duplicate template id {t.id}")
        seen.add(t.id)
    return templates


# ---------------------------------------------------------------------------
# Drawing helpers
# ---------------------------------------------------------------------------


def _digit_count(value: int) -> int:
    return len(str(abs(value)))


def _draw_int_in(rng: random.Random, lo: Fraction, hi: Fraction) -> Optional[int]:
    low = math.ceil(lo)
    high = math.floor(hi)
    if low > high:
        return None
    return rng.randint(low, high)


def _draw_slot(
    rng: random.Random,
    template: ProblemTemplate,
    index: int,
    drawn: dict[int, Number],
    digit_lock: Optional[int] = None,
    avoid: Optional[Number] = None,
) -> Optional[Number]:
    """Draw one input slot honoring choice/range/multiple-of constraints.

    digit_lock restricts integer draws to that decimal digit count; avoid
    rejects one value (used by num-sub to force an actual substitution).
    """
    sym = Symbol.input(index)
    cons = template.constraints_for(sym)
    choice = next((c for c in cons if c.kind == "choice"), None)
    if choice is not None:
        pool = [v for v in choice.pool if avoid is None or v != avoid]
        if not pool:
            return None
        return rng.choice(pool)

    ranged = next((c for c in cons if c.kind == "range"), None)
    if ranged is None:
        return None
    lo, hi = ranged.low, ranged.high
    if digit_lock is not None:
        lo = max(lo, Fraction(10 ** (digit_lock - 1) if digit_lock > 1 else 0))
        hi = min(hi, Fraction(10**digit_lock - 1))
    multiple = next((c for c in cons if c.kind == "multiple-of"), None)
    for _ in range(8):
        if multiple is not None:
            div = multiple.divisor
            if isinstance(div, Symbol):
                bound = drawn.get(div.index)
                if bound is None or not bound.is_integer or bound.value == 0:
                    return None
                step = abs(int(bound.value))
            else:
                step = int(div)
            if step == 0:
                return None
            q = _draw_int_in(rng, lo / step, hi / step)
            if q is None:
                return None
            value = Number(Fraction(q * step))
        else:
            v = _draw_int_in(rng, lo, hi)
            if v is None:
                return None
            value = Number(Fraction(v))
        if avoid is not None and value == avoid:
            continue
        return value
    return None


def _check_constraints(
    template: ProblemTemplate,
    values: dict[int, Number],
    assignments,
    skip_range_for: frozenset[int] = frozenset(),
) -> bool:
    def lookup(sym: Symbol) -> Optional[Number]:
        if sym.kind is SymbolKind.INPUT:
            return values.get(sym.index)
        return assignments.get(sym)

    for c in template.constraints:
        value = lookup(c.symbol)
        if value is None:
            return False
        if c.kind == "range":
            if c.symbol.kind is SymbolKind.INPUT and c.symbol.index in skip_range_for:
                continue
            if not (c.low <= value.value <= c.high):
                return False
        elif c.kind == "choice":
            if c.symbol.kind is SymbolKind.INPUT and c.symbol.index in skip_range_for:
                continue
            if value not in c.pool:
                return False
        elif c.kind == "integer":
            if not value.is_integer:
                return False
        elif c.kind == "multiple-of":
            if c.symbol.kind is SymbolKind.INPUT and c.symbol.index in skip_range_for:
                continue  # the perturbed slot is exempt from its own draw rules
            div = c.divisor
            divisor_value = (
                lookup(div).value if isinstance(div, Symbol) else Fraction(int(div))
            )
            if divisor_value == 0:
                return False
            if (value.value / divisor_value).denominator != 1:
                return False
    return True


def _draw_order(template: ProblemTemplate) -> list[int]:
    """Slot indices ordered so each multiple-of divisor is drawn before its user."""
    n = len(template.base_conditions)
    needs: dict[int, set[int]] = {k: set() for k in range(n)}
    for c in template.constraints:
        if (
            c.kind == "multiple-of"
            and isinstance(c.divisor, Symbol)
            and c.symbol.kind is SymbolKind.INPUT
        ):
            needs[c.symbol.index].add(c.divisor.index)
    order: list[int] = []
    placed: set[int] = set()
    while len(order) < n:
        ready = [k for k in range(n) if k not in placed and needs[k] <= placed]
        if not ready:
            raise InvalidTemplate(f"{template.id}: circular multiple-of constraints")
        for k in ready:
            order.append(k)
            placed.add(k)
    return order


def _integer_slots(template: ProblemTemplate) -> list[int]:
    out = []
    for k, v in enumerate(template.base_conditions.values):
        if not v.is_integer:
            continue
        sym = Symbol.input(k)
        if any(c.kind == "choice" for c in template.constraints_for(sym)):
            continue
        out.append(k)
    return out


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


def _choose_names(
    rng: random.Random, template: ProblemTemplate, randomize: bool
) -> dict[str, str]:
    chosen = {}
    for ns in template.name_slots:
        default = ns.pool[0]
        if not randomize or len(ns.pool) == 1:
            chosen[ns.slot] = default
            continue
        pick = rng.choice(ns.pool)
        for _ in range(8):
            if pick != default:
                break
            pick = rng.choice(ns.pool)
        chosen[ns.slot] = pick
    return chosen


def _substitute_names(text: str, names: dict[str, str]) -> str:
    return _NAME_SLOT_RE.sub(lambda m: names.get(m.group(1), m.group(0)), text)


def _splice_distractor(question: str, distractor: Distractor, clause: str) -> str:
    if distractor.anchor == "end":
        return f"{question} {clause}"
    k = distractor.anchor.split(":in")[1]
    pos = question.find(f"[in{k}]")
    if pos < 0:
        raise InvalidTemplate(f"anchor [in{k}] missing from question")
    m = _SENTENCE_END_RE.search(question, pos)
    if m is None:
        return f"{question} {clause}"
    cut = m.end()
    return f"{question[:cut]} {clause}{question[cut:]}"


@dataclass(frozen=True)
class _DrawResult:
    abstract_question: str
    conditions: ConditionSet
    abstraction: Abstraction


def _remap_placeholders(
    spliced: str,
    base_values: dict[int, Number],
    distractor_values: dict[int, Number],
    abstraction: Abstraction,
) -> _DrawResult:
    """Renumber [inK]/[dK] placeholders in textual order and remap the
    abstraction's input symbols to the new indices."""
    mapping: dict[tuple[str, int], int] = {}
    values: list[Number] = []

    def renumber(m: re.Match) -> str:
        key = (m.group(1), int(m.group(2)))
        if key not in mapping:
            mapping[key] = len(values)
            source = base_values if key[0] == "in" else distractor_values
            values.append(source[key[1]])
        return f"[in{mapping[key]}]"

    new_question = _ANY_PLACEHOLDER_RE.sub(renumber, spliced)

    def remap_expr(expr: Expr) -> Expr:
        if isinstance(expr, Ref) and expr.symbol.kind is SymbolKind.INPUT:
            return Ref(Symbol.input(mapping[("in", expr.symbol.index)]))
        if isinstance(expr, Group):
            return Group(remap_expr(expr.inner))
        if isinstance(expr, BinOp):
            return BinOp(expr.op, remap_expr(expr.left), remap_expr(expr.right))
        return expr

    new_derivs = tuple(
        Derivation(remap_expr(d.lhs), d.defines) for d in abstraction.derivations
    )
    return _DrawResult(
        abstract_question=new_question,
        conditions=ConditionSet(tuple(values)),
        abstraction=Abstraction(new_derivs, final=abstraction.final),
    )


def generate(
    template: ProblemTemplate, kind: Perturbation, seed: int
) -> Instance:
    """Draw one perturbed instance; deterministic in (template, kind, seed).

    Retries bounded draws up to 32 times on constraint violations or
    division by zero, then raises ExhaustedRetries.
    """
    rng = random.Random(seed)
    randomize_names = kind in (Perturbation.VARY_NAME, Perturbation.VARY_BOTH)
    names = _choose_names(rng, template, randomize_names)
    base = dict(enumerate(template.base_conditions.values))

    if kind is Perturbation.DISTRACT and not template.distractors:
        raise InvalidTemplate(f"{template.id}: no distractors declared")

    last_problem = "constraints never satisfied"
    for _ in range(MAX_RETRIES):
        values = dict(base)
        skip_range: frozenset[int] = frozenset()
        ok = True

        if kind in (Perturbation.VARY_NUM, Perturbation.VARY_BOTH):
            for k in _draw_order(template):
                drawn = _draw_slot(rng, template, k, values)
                if drawn is None:
                    ok = False
                    break
                values[k] = drawn
        elif kind is Perturbation.NUM_SUB:
            for k in _draw_order(template):
                original = base[k]
                if original.is_integer and k in set(_integer_slots(template)):
                    drawn = _draw_slot(
                        rng,
                        template,
                        k,
                        values,
                        digit_lock=_digit_count(int(original.value)),
                        avoid=original,
                    )
                else:
                    drawn = _draw_slot(rng, template, k, values, avoid=original)
                    if drawn is None and not original.is_integer:
                        drawn = original  # no pool to redraw from; keep
                if drawn is None:
                    ok = False
                    break
                values[k] = drawn
        elif kind is Perturbation.DIGIT_EXPANSION:
            slots = [k for k in _integer_slots(template) if base[k].value != 0]
            if not slots:
                raise InvalidTemplate(f"{template.id}: no integer slot to expand")
            k = rng.choice(slots)
            power = rng.choice([1, 2])
            values[k] = Number(base[k].value * 10**power)
            skip_range = frozenset([k])
        elif kind is Perturbation.INT_DEC_FRA:
            slots = [k for k in _integer_slots(template) if base[k].value >= 1]
            if not slots:
                raise InvalidTemplate(f"{template.id}: no integer slot to convert")
            k = rng.choice(slots)
            v = base[k].value
            candidates = [
                Number(v + Fraction(1, 2), NumberForm.DECIMAL),
                Number(v + Fraction(1, 2), NumberForm.FRACTION),
                Number(v - Fraction(1, 2), NumberForm.FRACTION),
            ]
            values[k] = rng.choice(candidates)
            skip_range = frozenset([k])

        if not ok:
            last_problem = "slot draw failed"
            continue

        distractor_values: dict[int, Number] = {}
        spliced_question = template.abstract_question
        if kind is Perturbation.DISTRACT:
            distractor = rng.choice(template.distractors)
            for d_index, lo, hi in distractor.ranges:
                v = _draw_int_in(rng, lo, hi)
                if v is None:
                    ok = False
                    break
                distractor_values[d_index] = Number(Fraction(v))
            if not ok:
                last_problem = "distractor draw failed"
                continue
            spliced_question = _splice_distractor(
                template.abstract_question, distractor, distractor.text
            )

        result = _remap_placeholders(
            spliced_question, values, distractor_values, template.abstraction
        )
        try:
            solved = solve(result.abstraction, result.conditions)
        except AbsMathError:
            last_problem = "solve failed on drawn values"
            continue
        if solved.final_answer is None:
            raise InvalidTemplate(f"{template.id}: final symbol never defined")
        if not _check_constraints(template, values, _base_assignments(solved), skip_range):
            last_problem = "constraint violation"
            continue

        question = reinstantiate(
            _substitute_names(result.abstract_question, names), result.conditions
        )
        return Instance(
            id=f"{template.id}-{kind.value}-{seed & 0xFFFFFFFF:08x}",
            question=question,
            gold_answer=solved.final_answer,
            abstract_question=_substitute_names(result.abstract_question, names),
            conditions=result.conditions,
            gold_abstract_answer=render_answer(result.abstraction),
        )

    raise ExhaustedRetries(MAX_RETRIES, f"{template.id} {kind.value}: {last_problem}")


def _base_assignments(solved) -> dict:
    # constraint checks refer to out symbols in the template's own index
    # space; outputs are never remapped so the assignments carry over
    return dict(solved.assignments)


def baseline_instance(template: ProblemTemplate) -> Instance:
    """The unperturbed instance: base conditions, default names."""
    names = {ns.slot: ns.pool[0] for ns in template.name_slots}
    abstract = _substitute_names(template.abstract_question, names)
    solved = solve(template.abstraction, template.base_conditions)
    return Instance(
        id=f"{template.id}-origin",
        question=reinstantiate(abstract, template.base_conditions),
        gold_answer=solved.final_answer,
        abstract_question=abstract,
        conditions=template.base_conditions,
        gold_abstract_answer=render_answer(template.abstraction),
    )


def derive_seed(master_seed: int, round_no: int, template_id: str) -> int:
    """Stable per-(round, template) seed; disjoint across rounds."""
    digest = hashlib.sha256(
        f"{master_seed}:{round_no}:{template_id}".encode()
    ).digest()
    return int.from_bytes(digest[:8], "big")


def generate_round(
    templates: Sequence[ProblemTemplate],
    kind: Perturbation,
    round_no: int,
    master_seed: int,
) -> list[Instance]:
    """One instance per template, seeded by (master_seed, round, template)."""
    out = []
    for t in templates:
        seed = derive_seed(master_seed, round_no, t.id)
        out.append(generate(t, kind, seed))
    return out


def instance_record(
    instance: Instance, kind: str, round_no: int, seed: int
) -> dict:
    """The JSON-lines record shape used by the perturb CLI.

    Carries everything downstream scoring needs: the question, the exact
    gold answer, the abstract question with its conditions, and the gold
    abstract answer text.
    """
    return {
        "id": instance.id,
        "question": instance.question,
        "answer": instance.gold_answer.render(),
        "kind": kind,
        "round": round_no,
        "seed": seed,
        "abstract_question": instance.abstract_question,
        "conditions": instance.conditions.to_mapping() if instance.conditions else None,
        "gold_abstract_answer": instance.gold_abstract_answer,
    }


def instance_from_record(record: Mapping) -> Instance:
    """Rebuild an Instance from an instance_record row."""
    conditions = record.get("conditions")
    return Instance(
        id=str(record["id"]),
        question=record["question"],
        gold_answer=Number.parse(str(record["answer"])),
        abstract_question=record.get("abstract_question"),
        conditions=ConditionSet.from_mapping(conditions) if conditions else None,
        gold_abstract_answer=record.get("gold_abstract_answer"),
    )
