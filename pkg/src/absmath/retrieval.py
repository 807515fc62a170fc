"""Abstraction retrieval: pull derivation chains out of generated answers.

An answer text carries derivations inside double angle brackets, e.g.
``<<in0*in2=out0>> <<in1-out0=out1>>``, and names its result with a fixed
statement ("The final answer is out1."). Models sometimes emit the
delimiters with internal whitespace ("< <" / "> >"), so the scanner
tolerates that. retrieve() aborts on the first malformed region; callers
that need totality (grading) catch the error and treat the answer as empty.

tokenize() flattens an abstraction into the symbol token list used by the
edit-distance reward: per-derivation infix tokens including '=' and parens,
with a separator token between derivations and none at the ends.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import (
    Abstraction,
    BinOp,
    Derivation,
    Expr,
    Group,
    Lit,
    Number,
    Ref,
    Symbol,
)
from .errors import AbsMathError, DuplicateDefinition, MalformedDerivation

# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------

# Tokens are plain tuples so equality is exact and cheap:
#   ("sym", "in"|"out", index) | ("op", ch) | ("lit", Fraction) | SEP
Token = tuple
SEP: Token = ("sep",)

OPERATOR_CHARS = "+-*/=()"


def sym_token(symbol: Symbol) -> Token:
    return ("sym", symbol.kind.value, symbol.index)


def op_token(ch: str) -> Token:
    if ch not in OPERATOR_CHARS:
        raise ValueError(f"not an operator: {ch!r}")
    return ("op", ch)


def lit_token(value) -> Token:
    if isinstance(value, Number):
        return ("lit", value.value)
    return ("lit", Fraction(value))


def _expr_tokens(expr: Expr) -> list[Token]:
    if isinstance(expr, Lit):
        return [lit_token(expr.value)]
    if isinstance(expr, Ref):
        return [sym_token(expr.symbol)]
    if isinstance(expr, Group):
        return [op_token("(")] + _expr_tokens(expr.inner) + [op_token(")")]
    if isinstance(expr, BinOp):
        return _expr_tokens(expr.left) + [op_token(expr.op)] + _expr_tokens(expr.right)
    raise TypeError(f"not an expression node: {expr!r}")


def tokenize(abstraction: Abstraction) -> list[Token]:
    """Flatten derivations to tokens with SEP between them, none at the ends."""
    out: list[Token] = []
    for i, d in enumerate(abstraction.derivations):
        if i:
            out.append(SEP)
        out.extend(_expr_tokens(d.lhs))
        out.append(op_token("="))
        out.append(sym_token(d.defines))
    return out


def render_token(token: Token) -> str:
    if token == SEP:
        return ""
    kind = token[0]
    if kind == "sym":
        return f"{token[1]}{token[2]}"
    if kind == "op":
        return token[1]
    if kind == "lit":
        return Number(token[1]).render()
    raise ValueError(f"not a token: {token!r}")


def render_tokens(tokens: list[Token], delimiters: "Delimiters" = None) -> str:
    """Join tokens back into delimited derivation text, splitting on SEP.

    The result need not be grammatical (mutated token lists usually are not);
    it is whatever the token list spells.
    """
    d = delimiters or Delimiters()
    groups: list[list[Token]] = [[]]
    for tok in tokens:
        if tok == SEP:
            groups.append([])
        else:
            groups[-1].append(tok)
    return " ".join(
        f"{d.open}{''.join(render_token(t) for t in group)}{d.close}"
        for group in groups
        if group
    )


# ---------------------------------------------------------------------------
# Retrieval
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Delimiters:
    open: str = "<<"
    close: str = ">>"

    def region_pattern(self) -> re.Pattern:
        # tolerate whitespace between delimiter characters: "< <" == "<<"
        open_pat = r"\s*".join(re.escape(c) for c in self.open)
        close_pat = r"\s*".join(re.escape(c) for c in self.close)
        return re.compile(rf"{open_pat}(.*?){close_pat}", re.DOTALL)


_FINAL_RE = re.compile(
    r"the\s+(?:final\s+)?answer\s+is\s*:?\s*\$?\[?\s*"
    r"(?:(?P<sym>out\d+)|(?P<num>-?\d+(?:\.\d+)?(?:/\d+)?))\s*\]?",
    re.IGNORECASE,
)


def retrieve(answer_text: str, delimiters: Optional[Delimiters] = None) -> Abstraction:
    """Extract the ordered derivations and the final-answer designation.

    Raises MalformedDerivation(i) on the first region that fails the
    derivation grammar and DuplicateDefinition if an output is defined twice.
    The final symbol comes from the last final-answer statement; a bare
    number there leaves final unset and is recorded as final_literal.
    """
    d = delimiters or Delimiters()
    derivations: list[Derivation] = []
    seen: set[Symbol] = set()
    for i, m in enumerate(d.region_pattern().finditer(answer_text)):
        body = m.group(1).strip()
        try:
            deriv = Derivation.parse(body)
        except AbsMathError as exc:
            raise MalformedDerivation(i, str(exc)) from exc
        if deriv.defines in seen:
            raise DuplicateDefinition(deriv.defines)
        seen.add(deriv.defines)
        derivations.append(deriv)

    final: Optional[Symbol] = None
    final_literal: Optional[Number] = None
    last = None
    for last in _FINAL_RE.finditer(answer_text):
        pass
    if last is not None:
        if last.group("sym"):
            final = Symbol.parse(last.group("sym"))
        else:
            final_literal = Number.parse(last.group("num"))
    return Abstraction(tuple(derivations), final=final, final_literal=final_literal)


def render_answer(
    abstraction: Abstraction,
    delimiters: Optional[Delimiters] = None,
    include_final: bool = True,
) -> str:
    """Write an abstraction back out as answer text retrieve() can re-read."""
    d = delimiters or Delimiters()
    parts = [f"{d.open}{deriv.render()}{d.close}" for deriv in abstraction.derivations]
    text = " ".join(parts)
    if include_final and abstraction.final is not None:
        suffix = f"The final answer is {abstraction.final.render()}."
        text = f"{text} {suffix}" if text else suffix
    return text
