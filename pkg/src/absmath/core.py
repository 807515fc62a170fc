"""Core value types: exact numbers, symbols, conditions, expressions.

All numerics are exact rationals (stdlib Fraction underneath). Floats never
enter the pipeline before the policy-gradient boundary: parsing rejects
anything outside the surface grammar instead of rounding it.

Surface grammars accepted here:
  number      := [-]?digits | [-]?digits.digits | [-]?digits/digits
  symbol      := "in" digits | "out" digits
  expression  := infix over numbers and symbols with + - * / and parens
  derivation  := expression "=" out-symbol
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence, Union

from .errors import (
    DuplicateDefinition,
    MalformedExpression,
    MalformedNumber,
    UnboundPlaceholder,
)

# ---------------------------------------------------------------------------
# Numbers
# ---------------------------------------------------------------------------


class NumberForm(Enum):
    """Preferred surface rendering; never affects the value."""

    INTEGER = "integer"
    DECIMAL = "decimal"
    FRACTION = "fraction"


_INT_RE = re.compile(r"^-?\d+$")
_DEC_RE = re.compile(r"^-?\d+\.\d+$")
_FRA_RE = re.compile(r"^-?\d+/\d+$")


@dataclass(frozen=True, eq=False)
class Number:
    """Exact rational with a rendering hint.

    Equality, hashing, and ordering look at the reduced fraction alone, so
    Number.parse("1/2") == Number.parse("0.5") == Number.parse("2/4").
    The form hint only decides how render() writes the value back out.
    """

    value: Fraction
    form: NumberForm = None  # type: ignore[assignment]

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))
        if self.form is None:
            inferred = (
                NumberForm.INTEGER
                if self.value.denominator == 1
                else NumberForm.FRACTION
            )
            object.__setattr__(self, "form", inferred)

    @staticmethod
    def parse(text: str) -> "Number":
        s = text.strip()
        if _INT_RE.match(s):
            form = NumberForm.INTEGER
        elif _DEC_RE.match(s):
            form = NumberForm.DECIMAL
        elif _FRA_RE.match(s):
            form = NumberForm.FRACTION
        else:
            raise MalformedNumber(text)
        try:
            value = Fraction(s)
        except ZeroDivisionError:
            raise MalformedNumber(f"zero denominator: {text}") from None
        return Number(value, form)

    def render(self) -> str:
        num, den = self.value.numerator, self.value.denominator
        if den == 1:
            return str(num)
        if self.form is NumberForm.DECIMAL:
            rendered = self._decimal_render()
            if rendered is not None:
                return rendered
        return f"{num}/{den}"

    def _decimal_render(self) -> Optional[str]:
        # terminating decimal exists iff the reduced denominator is 2^a * 5^b
        den = self.value.denominator
        twos = fives = 0
        while den % 2 == 0:
            den //= 2
            twos += 1
        while den % 5 == 0:
            den //= 5
            fives += 1
        if den != 1:
            return None
        k = max(twos, fives)
        mantissa = abs(self.value.numerator) * 10**k // self.value.denominator
        whole, frac = divmod(mantissa, 10**k)
        sign = "-" if self.value < 0 else ""
        return f"{sign}{whole}.{frac:0{k}d}"

    @property
    def is_integer(self) -> bool:
        return self.value.denominator == 1

    def __eq__(self, other):
        if isinstance(other, Number):
            return self.value == other.value
        if isinstance(other, (Fraction, int)):
            return self.value == other
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __lt__(self, other):
        return self.value < _as_fraction(other)

    def __le__(self, other):
        return self.value <= _as_fraction(other)

    def __gt__(self, other):
        return self.value > _as_fraction(other)

    def __ge__(self, other):
        return self.value >= _as_fraction(other)

    def __repr__(self):
        return f"Number({self.render()!r})"


def _as_fraction(x) -> Fraction:
    if isinstance(x, Number):
        return x.value
    return Fraction(x)


def number_equals(a: Number, b: Number) -> bool:
    """True iff the reduced fractions are identical."""
    return a.value == b.value


# ---------------------------------------------------------------------------
# Symbols and conditions
# ---------------------------------------------------------------------------


class SymbolKind(Enum):
    INPUT = "in"
    OUTPUT = "out"


_SYMBOL_RE = re.compile(r"^(in|out)(\d+)$")


@dataclass(frozen=True)
class Symbol:
    kind: SymbolKind
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise MalformedExpression(f"negative symbol index: {self.index}")

    @staticmethod
    def input(index: int) -> "Symbol":
        return Symbol(SymbolKind.INPUT, index)

    @staticmethod
    def output(index: int) -> "Symbol":
        return Symbol(SymbolKind.OUTPUT, index)

    @staticmethod
    def parse(text: str) -> "Symbol":
        m = _SYMBOL_RE.match(text.strip())
        if not m:
            raise MalformedExpression(f"not a symbol: {text!r}")
        kind = SymbolKind.INPUT if m.group(1) == "in" else SymbolKind.OUTPUT
        return Symbol(kind, int(m.group(2)))

    def render(self) -> str:
        return f"{self.kind.value}{self.index}"

    def __str__(self):
        return self.render()


@dataclass(frozen=True)
class ConditionSet:
    """Ordered input bindings: index k holds the value of in<k>."""

    values: tuple[Number, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    @staticmethod
    def from_values(values: Sequence) -> "ConditionSet":
        out = []
        for v in values:
            if isinstance(v, Number):
                out.append(v)
            elif isinstance(v, str):
                out.append(Number.parse(v))
            elif isinstance(v, int):
                out.append(Number(Fraction(v)))
            elif isinstance(v, Fraction):
                out.append(Number(v))
            else:
                raise MalformedNumber(repr(v))
        return ConditionSet(tuple(out))

    @staticmethod
    def from_mapping(mapping: Mapping[str, object]) -> "ConditionSet":
        """Build from {"in0": "24", ...}; indices must cover 0..n-1."""
        by_index: dict[int, Number] = {}
        for key, raw in mapping.items():
            sym = Symbol.parse(key)
            if sym.kind is not SymbolKind.INPUT:
                raise MalformedExpression(f"condition key must be an input: {key}")
            if sym.index in by_index:
                raise DuplicateDefinition(sym)
            if isinstance(raw, Number):
                by_index[sym.index] = raw
            elif isinstance(raw, str):
                by_index[sym.index] = Number.parse(raw)
            elif isinstance(raw, int):
                by_index[sym.index] = Number(Fraction(raw))
            elif isinstance(raw, float):
                by_index[sym.index] = Number.parse(repr(raw))
            else:
                raise MalformedNumber(repr(raw))
        if sorted(by_index) != list(range(len(by_index))):
            raise MalformedExpression(
                f"condition indices must be contiguous from 0, got {sorted(by_index)}"
            )
        return ConditionSet(tuple(by_index[i] for i in range(len(by_index))))

    def get(self, symbol: Symbol) -> Optional[Number]:
        if symbol.kind is SymbolKind.INPUT and 0 <= symbol.index < len(self.values):
            return self.values[symbol.index]
        return None

    def bindings(self) -> list[tuple[Symbol, Number]]:
        return [(Symbol.input(k), v) for k, v in enumerate(self.values)]

    def to_mapping(self) -> dict[str, str]:
        return {f"in{k}": v.render() for k, v in enumerate(self.values)}

    def render(self) -> str:
        return "  ".join(f"in{k}={v.render()}" for k, v in enumerate(self.values))

    def __len__(self):
        return len(self.values)

    def __iter__(self) -> Iterator[Number]:
        return iter(self.values)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lit:
    value: Number


@dataclass(frozen=True)
class Ref:
    symbol: Symbol


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Group:
    inner: "Expr"


Expr = Union[Lit, Ref, BinOp, Group]

_EXPR_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<sym>in\d+|out\d+)|(?P<punct>[-+*/()=])|(?P<bad>\S))"
)


def _lex_expr(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _EXPR_TOKEN_RE.match(text, pos)
        if not m:
            break
        if m.group("bad"):
            raise MalformedExpression(f"unexpected character {m.group('bad')!r} in {text!r}")
        if m.group("num"):
            tokens.append(("num", m.group("num")))
        elif m.group("sym"):
            tokens.append(("sym", m.group("sym")))
        else:
            tokens.append(("punct", m.group("punct")))
        pos = m.end()
    return tokens


class _ExprParser:
    """Recursive descent over the infix grammar.

    expr   := term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := number | symbol | "(" expr ")" | "-" number

    Exponents and every other operator are rejected. Parenthesized groups
    become explicit Group nodes so rendering is lossless.
    """

    def __init__(self, tokens: list[tuple[str, str]], source: str):
        self.tokens = tokens
        self.pos = 0
        self.source = source

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is None:
            raise MalformedExpression(f"unexpected end of expression: {self.source!r}")
        self.pos += 1
        return tok

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek() is not None:
            raise MalformedExpression(
                f"trailing input at token {self.pos} in {self.source!r}"
            )
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek() and self.peek()[1] in "+-" and self.peek()[0] == "punct":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek() and self.peek()[1] in "*/" and self.peek()[0] == "punct":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        kind, text = self.take()
        if kind == "num":
            return Lit(Number.parse(text))
        if kind == "sym":
            return Ref(Symbol.parse(text))
        if kind == "punct" and text == "(":
            inner = self.expr()
            closing = self.take()
            if closing != ("punct", ")"):
                raise MalformedExpression(f"missing ')' in {self.source!r}")
            return Group(inner)
        if kind == "punct" and text == "-":
            nxt = self.take()
            if nxt[0] != "num":
                raise MalformedExpression(
                    f"unary minus must precede a number in {self.source!r}"
                )
            return Lit(Number.parse("-" + nxt[1]))
        raise MalformedExpression(f"unexpected token {text!r} in {self.source!r}")


def parse_expr(text: str) -> Expr:
    tokens = _lex_expr(text)
    if not tokens:
        raise MalformedExpression(f"empty expression: {text!r}")
    return _ExprParser(tokens, text).parse()


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Lit):
        return expr.value.render()
    if isinstance(expr, Ref):
        return expr.symbol.render()
    if isinstance(expr, Group):
        return f"({render_expr(expr.inner)})"
    if isinstance(expr, BinOp):
        return f"{render_expr(expr.left)}{expr.op}{render_expr(expr.right)}"
    raise TypeError(f"not an expression node: {expr!r}")


def expr_symbols(expr: Expr) -> Iterator[Symbol]:
    """Yield referenced symbols in left-to-right order, with repeats."""
    if isinstance(expr, Ref):
        yield expr.symbol
    elif isinstance(expr, Group):
        yield from expr_symbols(expr.inner)
    elif isinstance(expr, BinOp):
        yield from expr_symbols(expr.left)
        yield from expr_symbols(expr.right)


# ---------------------------------------------------------------------------
# Derivations and abstractions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Derivation:
    """One assignment step: lhs expression defining a fresh output symbol."""

    lhs: Expr
    defines: Symbol

    def __post_init__(self):
        if self.defines.kind is not SymbolKind.OUTPUT:
            raise MalformedExpression(
                f"derivation must define an output symbol, got {self.defines}"
            )
        if any(s == self.defines for s in expr_symbols(self.lhs)):
            raise MalformedExpression(
                f"derivation references its own output {self.defines}"
            )

    @staticmethod
    def parse(text: str) -> "Derivation":
        if text.count("=") != 1:
            raise MalformedExpression(f"derivation needs exactly one '=': {text!r}")
        lhs_text, rhs_text = text.split("=")
        rhs = rhs_text.strip()
        if not _SYMBOL_RE.match(rhs):
            raise MalformedExpression(f"right side must be a symbol: {text!r}")
        return Derivation(parse_expr(lhs_text), Symbol.parse(rhs))

    def render(self) -> str:
        return f"{render_expr(self.lhs)}={self.defines.render()}"

    def references(self) -> list[Symbol]:
        return list(expr_symbols(self.lhs))


@dataclass(frozen=True)
class Abstraction:
    """Ordered derivations plus the output designated as the final answer.

    final_literal records a bare number that appeared in the final-answer
    statement instead of a symbol; in that case final stays None.
    """

    derivations: tuple[Derivation, ...]
    final: Optional[Symbol] = None
    final_literal: Optional[Number] = None

    def __post_init__(self):
        object.__setattr__(self, "derivations", tuple(self.derivations))
        seen = set()
        for d in self.derivations:
            if d.defines in seen:
                raise DuplicateDefinition(d.defines)
            seen.add(d.defines)
        if self.final is not None and self.final.kind is not SymbolKind.OUTPUT:
            raise MalformedExpression(f"final must be an output symbol: {self.final}")

    def defined_symbols(self) -> set[Symbol]:
        return {d.defines for d in self.derivations}

    def input_symbols(self) -> set[Symbol]:
        return {
            s
            for d in self.derivations
            for s in d.references()
            if s.kind is SymbolKind.INPUT
        }

    def __len__(self):
        return len(self.derivations)


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    """One word problem with whatever gold artifacts are known for it."""

    id: str
    question: str
    gold_answer: Optional[Number] = None
    gold_socratic: Optional[str] = None
    gold_abstract_answer: Optional[str] = None
    abstract_question: Optional[str] = None
    conditions: Optional[ConditionSet] = None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "gold_answer": self.gold_answer.render() if self.gold_answer else None,
            "gold_socratic": self.gold_socratic,
            "gold_abstract_answer": self.gold_abstract_answer,
            "abstract_question": self.abstract_question,
            "conditions": self.conditions.to_mapping() if self.conditions else None,
        }

    @staticmethod
    def from_json(record: Mapping) -> "Instance":
        conditions = record.get("conditions")
        gold = record.get("gold_answer")
        return Instance(
            id=str(record["id"]),
            question=record["question"],
            gold_answer=Number.parse(str(gold)) if gold is not None else None,
            gold_socratic=record.get("gold_socratic"),
            gold_abstract_answer=record.get("gold_abstract_answer"),
            abstract_question=record.get("abstract_question"),
            conditions=ConditionSet.from_mapping(conditions) if conditions else None,
        )


_PLACEHOLDER_RE = re.compile(r"\[in(\d+)\]")


def reinstantiate(abstract_question: str, conditions: ConditionSet) -> str:
    """Substitute rendered condition values back into [inK] placeholders."""

    def repl(m: re.Match) -> str:
        k = int(m.group(1))
        if k >= len(conditions.values):
            raise UnboundPlaceholder(f"in{k}")
        return conditions.values[k].render()

    return _PLACEHOLDER_RE.sub(repl, abstract_question)
