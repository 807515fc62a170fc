"""Symbolic derivation: evaluate an abstraction's equation system exactly.

The system is assignment-form (every derivation defines one fresh output),
so solving is dependency-ordered evaluation over exact rationals. solve()
builds the dependency order explicitly; brute_force_check() is a deliberately
naive fixpoint loop with no dependency analysis, kept as a differential
oracle for the solver. Both classify a stall the same way: scan the stuck
derivations in list order and report the first reference that nothing
defines, else a cycle.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .core import (
    Abstraction,
    BinOp,
    ConditionSet,
    Expr,
    Group,
    Lit,
    Number,
    Ref,
    Symbol,
    SymbolKind,
    number_equals,
)
from .errors import AbsMathError, CyclicDependency, DivisionByZero, UndefinedSymbol
from .retrieval import retrieve


@dataclass(frozen=True)
class SolveResult:
    """Assignments for every input and every evaluated output.

    final_answer is present iff the abstraction designated a final symbol
    and that symbol ended up defined.
    """

    assignments: Mapping[Symbol, Number]
    final_answer: Optional[Number]


def _eval_expr(expr: Expr, env: dict[Symbol, Fraction]) -> Fraction:
    if isinstance(expr, Lit):
        return expr.value.value
    if isinstance(expr, Ref):
        return env[expr.symbol]
    if isinstance(expr, Group):
        return _eval_expr(expr.inner, env)
    if isinstance(expr, BinOp):
        left = _eval_expr(expr.left, env)
        right = _eval_expr(expr.right, env)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if expr.op == "/":
            return left / right  # ZeroDivisionError mapped by the caller
        raise ValueError(f"unknown operator {expr.op!r}")
    raise TypeError(f"not an expression node: {expr!r}")


def _classify_stall(abstraction: Abstraction, remaining: list[int], env) -> AbsMathError:
    """Shared stall policy: first nowhere-defined reference wins, else cycle."""
    all_defines = abstraction.defined_symbols()
    for i in remaining:
        for ref in abstraction.derivations[i].references():
            if ref in env:
                continue
            if ref.kind is SymbolKind.INPUT or ref not in all_defines:
                return UndefinedSymbol(ref)
    return CyclicDependency(
        f"{len(remaining)} derivation(s) form a dependency cycle"
    )


def solve(abstraction: Abstraction, conditions: ConditionSet) -> SolveResult:
    """Evaluate all derivations in dependency order over exact rationals.

    Raises UndefinedSymbol for references nothing binds, CyclicDependency
    when no evaluation order exists, and DivisionByZero(i) when derivation
    i divides by exact zero.
    """
    env: dict[Symbol, Fraction] = {
        sym: value.value for sym, value in conditions.bindings()
    }

    n = len(abstraction.derivations)
    waiting: dict[Symbol, list[int]] = {}
    missing = [0] * n
    ready: list[int] = []
    for i, deriv in enumerate(abstraction.derivations):
        unmet = {ref for ref in deriv.references() if ref not in env}
        missing[i] = len(unmet)
        for ref in unmet:
            waiting.setdefault(ref, []).append(i)
        if not unmet:
            heapq.heappush(ready, i)

    done = 0
    while ready:
        i = heapq.heappop(ready)
        deriv = abstraction.derivations[i]
        try:
            value = _eval_expr(deriv.lhs, env)
        except ZeroDivisionError:
            raise DivisionByZero(i) from None
        env[deriv.defines] = value
        done += 1
        for j in waiting.pop(deriv.defines, []):
            missing[j] -= 1
            if missing[j] == 0:
                heapq.heappush(ready, j)

    if done < n:
        remaining = [i for i in range(n) if missing[i] > 0]
        raise _classify_stall(abstraction, remaining, env)

    assignments = {sym: Number(value) for sym, value in env.items()}
    final = None
    if abstraction.final is not None and abstraction.final in assignments:
        final = assignments[abstraction.final]
    return SolveResult(assignments=assignments, final_answer=final)


def brute_force_check(abstraction: Abstraction, conditions: ConditionSet) -> SolveResult:
    """Naive repeated substitution to fixpoint; differential oracle for solve().

    No dependency analysis: sweep the derivation list, evaluating whatever
    has all references bound, until a full pass makes no progress. Capped at
    32 derivations because the oracle is for tests, not production use.
    """
    if len(abstraction.derivations) > 32:
        raise ValueError("brute_force_check is limited to 32 derivations")

    env: dict[Symbol, Fraction] = {}
    for k, value in enumerate(conditions.values):
        env[Symbol.input(k)] = value.value

    n = len(abstraction.derivations)
    evaluated = [False] * n
    progress = True
    while progress:
        progress = False
        for i, deriv in enumerate(abstraction.derivations):
            if evaluated[i]:
                continue
            refs = deriv.references()
            if not all(r in env for r in refs):
                continue
            try:
                result = _brute_eval(deriv.lhs, env)
            except ZeroDivisionError:
                raise DivisionByZero(i) from None
            env[deriv.defines] = result
            evaluated[i] = True
            progress = True

    if not all(evaluated):
        remaining = [i for i in range(n) if not evaluated[i]]
        raise _classify_stall(abstraction, remaining, env)

    assignments = {sym: Number(value) for sym, value in env.items()}
    final = None
    if abstraction.final is not None and abstraction.final in assignments:
        final = assignments[abstraction.final]
    return SolveResult(assignments=assignments, final_answer=final)


def _brute_eval(expr: Expr, env: dict[Symbol, Fraction]) -> Fraction:
    # kept separate from _eval_expr on purpose: the oracle should not share
    # the code path it is checking
    if isinstance(expr, Lit):
        return expr.value.value
    if isinstance(expr, Group):
        return _brute_eval(expr.inner, env)
    if isinstance(expr, Ref):
        return env[expr.symbol]
    if isinstance(expr, BinOp):
        ops = {
            "+": lambda a, b: a + b,
            "-": lambda a, b: a - b,
            "*": lambda a, b: a * b,
            "/": lambda a, b: a / b,
        }
        return ops[expr.op](_brute_eval(expr.left, env), _brute_eval(expr.right, env))
    raise TypeError(f"not an expression node: {expr!r}")


@dataclass(frozen=True)
class VerifyResult:
    passed: bool
    reason: Optional[str] = None
    derived: Optional[Number] = None

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "reason": self.reason,
            "derived": self.derived.render() if self.derived is not None else None,
        }


def verify_instance(
    gold_text: str, conditions: ConditionSet, gold_answer: Number
) -> VerifyResult:
    """Check that answer text derives the gold answer under the conditions.

    Passes iff retrieval succeeds, the system solves, a final answer is
    defined, and it equals the gold answer exactly.
    """
    try:
        abstraction = retrieve(gold_text)
    except AbsMathError as exc:
        return VerifyResult(False, reason=exc.describe())
    try:
        result = solve(abstraction, conditions)
    except AbsMathError as exc:
        return VerifyResult(False, reason=exc.describe())
    if result.final_answer is None:
        if abstraction.final is not None:
            return VerifyResult(
                False, reason=UndefinedSymbol(abstraction.final).describe()
            )
        return VerifyResult(False, reason="NoFinalAnswer")
    if not number_equals(result.final_answer, gold_answer):
        return VerifyResult(
            False,
            reason=f"AnswerMismatch(derived {result.final_answer.render()}, "
            f"expected {gold_answer.render()})",
            derived=result.final_answer,
        )
    return VerifyResult(True, derived=result.final_answer)
