"""Equation-system evaluation: heap scheduler, naive oracle, verification."""

from fractions import Fraction

import pytest

from absmath import (
    Abstraction,
    ConditionSet,
    Derivation,
    Number,
    Symbol,
    brute_force_check,
    retrieve,
    solve,
    verify_instance,
)
from absmath.errors import CyclicDependency, DivisionByZero, UndefinedSymbol


def _abs(*texts, final=None):
    derivs = tuple(Derivation.parse(t) for t in texts)
    return Abstraction(derivs, final=Symbol.parse(final) if final else None)


class TestSolve:
    def test_straight_line(self):
        a = _abs("in0*in2=out0", "in1-out0=out1", final="out1")
        res = solve(a, ConditionSet.from_values(["24", "64", "2"]))
        assert res.final_answer == Number.parse("16")
        assert res.assignments[Symbol.output(0)] == Number.parse("48")

    def test_forward_reference(self):
        a = _abs("out1+in0=out0", "in0*in0=out1", final="out0")
        res = solve(a, ConditionSet.from_values(["3"]))
        assert res.final_answer == Number.parse("12")

    def test_exact_rationals_no_float_drift(self):
        a = _abs("in0/in1=out0", "out0*in1=out1", final="out1")
        res = solve(a, ConditionSet.from_values(["1", "3"]))
        assert res.final_answer.value == Fraction(1)

    def test_fraction_arithmetic(self):
        a = _abs("in0*in1=out0", final="out0")
        res = solve(a, ConditionSet.from_values(["48", "1/2"]))
        assert res.final_answer == Number.parse("24")

    def test_undefined_input(self):
        a = _abs("in0+in5=out0")
        with pytest.raises(UndefinedSymbol) as exc:
            solve(a, ConditionSet.from_values(["1"]))
        assert exc.value.symbol == Symbol.input(5)

    def test_undefined_output_reference(self):
        a = _abs("out7+in0=out0")
        with pytest.raises(UndefinedSymbol) as exc:
            solve(a, ConditionSet.from_values(["1"]))
        assert exc.value.symbol == Symbol.output(7)

    def test_cycle(self):
        a = _abs("out1+in0=out0", "out0+in0=out1")
        with pytest.raises(CyclicDependency):
            solve(a, ConditionSet.from_values(["1"]))

    def test_division_by_zero_carries_index(self):
        a = _abs("in0-in0=out0", "in1/out0=out1")
        with pytest.raises(DivisionByZero) as exc:
            solve(a, ConditionSet.from_values(["5", "7"]))
        assert exc.value.index == 1

    def test_literal_division_by_zero(self):
        a = _abs("in0/0=out0")
        with pytest.raises(DivisionByZero):
            solve(a, ConditionSet.from_values(["5"]))

    def test_final_none_when_unset(self):
        a = _abs("in0+in1=out0")
        res = solve(a, ConditionSet.from_values(["1", "2"]))
        assert res.final_answer is None
        assert res.assignments[Symbol.output(0)] == Number.parse("3")

    def test_empty_abstraction(self):
        res = solve(Abstraction(()), ConditionSet.from_values(["9"]))
        assert res.final_answer is None
        assert res.assignments[Symbol.input(0)] == Number.parse("9")

    def test_unused_inputs_still_reported(self):
        a = _abs("in0+in0=out0", final="out0")
        res = solve(a, ConditionSet.from_values(["2", "99"]))
        assert res.assignments[Symbol.input(1)] == Number.parse("99")


class TestBruteForceAgreement:
    def test_same_results_on_forward_reference(self):
        a = _abs("out1+in0=out0", "in0*in0=out1", final="out0")
        c = ConditionSet.from_values(["3"])
        assert solve(a, c).assignments == brute_force_check(a, c).assignments

    def test_same_error_class_on_cycle(self):
        a = _abs("out1+in0=out0", "out0+in0=out1")
        c = ConditionSet.from_values(["1"])
        for fn in (solve, brute_force_check):
            with pytest.raises(CyclicDependency):
                fn(a, c)

    def test_same_error_class_on_undefined(self):
        a = _abs("in3+in0=out0")
        c = ConditionSet.from_values(["1"])
        for fn in (solve, brute_force_check):
            with pytest.raises(UndefinedSymbol) as exc:
                fn(a, c)
            assert exc.value.symbol == Symbol.input(3)

    def test_oracle_caps_size(self):
        derivs = tuple(Derivation.parse(f"in0+0=out{k}") for k in range(33))
        with pytest.raises(ValueError):
            brute_force_check(Abstraction(derivs), ConditionSet.from_values(["1"]))


class TestVerifyInstance:
    CONDITIONS = ConditionSet.from_values(["24", "64", "2"])
    GOLD = "<<in0*in2=out0>> <<in1-out0=out1>> The final answer is out1."

    def test_pass(self):
        v = verify_instance(self.GOLD, self.CONDITIONS, Number.parse("16"))
        assert v.passed and v.derived == Number.parse("16") and v.reason is None

    def test_answer_mismatch(self):
        v = verify_instance(self.GOLD, self.CONDITIONS, Number.parse("17"))
        assert not v.passed
        assert v.reason == "AnswerMismatch(derived 16, expected 17)"
        assert v.derived == Number.parse("16")

    def test_malformed_region(self):
        v = verify_instance("<<in0++=out0>> The final answer is out0.",
                            self.CONDITIONS, Number.parse("16"))
        assert not v.passed and v.reason.startswith("MalformedDerivation")

    def test_undefined_symbol(self):
        v = verify_instance("<<in9+in0=out0>> The final answer is out0.",
                            self.CONDITIONS, Number.parse("16"))
        assert not v.passed and v.reason.startswith("UndefinedSymbol")

    def test_dangling_final(self):
        v = verify_instance("<<in0+in1=out0>> The final answer is out5.",
                            self.CONDITIONS, Number.parse("88"))
        assert not v.passed and "out5" in v.reason

    def test_no_final_statement(self):
        v = verify_instance("<<in0+in1=out0>>", self.CONDITIONS, Number.parse("88"))
        assert not v.passed and v.reason == "NoFinalAnswer"

    def test_to_json(self):
        v = verify_instance(self.GOLD, self.CONDITIONS, Number.parse("16"))
        assert v.to_json() == {"passed": True, "reason": None, "derived": "16"}


def test_retrieve_then_solve_composes():
    text = ("Q1: distance left? < < in0-in1=out0 > > miles.\n"
            "Q2: after the break? < < out0-in2=out1 > > miles.\n"
            "The final answer is out1.")
    a = retrieve(text)
    res = solve(a, ConditionSet.from_values(["240", "80", "60"]))
    assert res.final_answer == Number.parse("100")
