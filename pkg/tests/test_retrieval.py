"""Abstraction retrieval from answer text, and the token layer."""

from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from absmath import (
    Abstraction,
    Delimiters,
    Derivation,
    Number,
    Symbol,
    render_answer,
    retrieve,
    tokenize,
)
from absmath.errors import DuplicateDefinition, MalformedDerivation
from absmath.retrieval import SEP, lit_token, op_token, render_tokens, sym_token


GOLD_EGGS = (
    "Q1: How many eggs does she eat? < < in0*in2=out0 > > out0 eggs.\n"
    "Q2: How many remain? < < in1-out0=out1 > > out1 eggs.\n"
    "The final answer is out1."
)


class TestRetrieve:
    def test_two_regions_and_final(self):
        a = retrieve(GOLD_EGGS)
        assert [d.render() for d in a.derivations] == ["in0*in2=out0", "in1-out0=out1"]
        assert a.final == Symbol.output(1)
        assert a.final_literal is None

    def test_tight_delimiters_equivalent(self):
        tight = GOLD_EGGS.replace("< <", "<<").replace("> >", ">>")
        assert retrieve(tight).derivations == retrieve(GOLD_EGGS).derivations

    def test_whitespace_inside_region(self):
        a = retrieve("<< in0 + in1 = out0 >> The final answer is out0.")
        assert a.derivations[0].render() == "in0+in1=out0"

    def test_no_regions_no_final(self):
        a = retrieve("There is nothing symbolic here.")
        assert len(a) == 0 and a.final is None and a.final_literal is None

    def test_final_literal(self):
        a = retrieve("<<in0+in1=out0>> The final answer is 42.")
        assert a.final is None
        assert a.final_literal == Number.parse("42")

    def test_last_final_statement_wins(self):
        text = "The answer is out0. <<in0-in1=out0>> The final answer is out0. No wait, the final answer is 7."
        a = retrieve(text)
        assert a.final is None and a.final_literal == Number.parse("7")

    def test_final_with_dollar_and_colon(self):
        a = retrieve("<<in0*in1=out0>> The final answer is: $out0")
        assert a.final == Symbol.output(0)

    def test_malformed_region_reports_position(self):
        with pytest.raises(MalformedDerivation) as exc:
            retrieve("<<in0+in1=out0>> then <<in0+=out1>>")
        assert exc.value.index == 1

    def test_duplicate_definition(self):
        with pytest.raises(DuplicateDefinition):
            retrieve("<<in0+in1=out0>> <<in0-in1=out0>>")

    def test_region_missing_equals(self):
        with pytest.raises(MalformedDerivation):
            retrieve("<<in0+in1>>")

    def test_custom_delimiters(self):
        d = Delimiters("[[", "]]")
        a = retrieve("[[in0/in1=out0]] The final answer is out0.", d)
        assert a.derivations[0].render() == "in0/in1=out0"


class TestRenderAnswer:
    def test_roundtrip(self):
        a = retrieve(GOLD_EGGS)
        text = render_answer(a)
        again = retrieve(text)
        assert again.derivations == a.derivations
        assert again.final == a.final

    def test_no_final(self):
        a = Abstraction((Derivation.parse("in0+in1=out0"),))
        assert render_answer(a) == "<<in0+in1=out0>>"

    def test_includes_final_sentence(self):
        a = retrieve(GOLD_EGGS)
        assert render_answer(a).endswith("The final answer is out1.")


class TestTokens:
    def test_gold_eggs_token_count(self):
        a = retrieve(GOLD_EGGS)
        tokens = tokenize(a)
        assert len(tokens) == 11
        assert tokens.count(SEP) == 1

    def test_token_identity(self):
        a = retrieve("<<in0*in2=out0>>")
        assert tokenize(a) == [
            sym_token(Symbol.input(0)),
            op_token("*"),
            sym_token(Symbol.input(2)),
            op_token("="),
            sym_token(Symbol.output(0)),
        ]

    def test_literal_tokens_compare_by_value(self):
        a = retrieve("<<0.5*in0=out0>>")
        b = retrieve("<<0.50*in0=out0>>")
        assert tokenize(a) == tokenize(b)
        assert tokenize(a)[0] == lit_token(Fraction(1, 2))

    def test_slash_between_literals_is_division(self):
        a = retrieve("<<1/2*in0=out0>>")
        assert tokenize(a)[:3] == [
            lit_token(1),
            op_token("/"),
            lit_token(2),
        ]

    def test_render_tokens_regroups_on_sep(self):
        a = retrieve(GOLD_EGGS)
        text = render_tokens(tokenize(a))
        assert text == "<<in0*in2=out0>> <<in1-out0=out1>>"

    def test_render_tokens_custom_delimiters(self):
        toks = [sym_token(Symbol.input(0)), op_token("="), sym_token(Symbol.output(0))]
        assert render_tokens(toks, Delimiters("{", "}")) == "{in0=out0}"

    def test_op_token_rejects_unknown(self):
        with pytest.raises(ValueError):
            op_token("^")


# -- properties --------------------------------------------------------------

_sym = st.one_of(
    st.integers(min_value=0, max_value=9).map(Symbol.input),
    st.integers(min_value=0, max_value=9).map(Symbol.output),
)


@st.composite
def _abstractions(draw):
    n = draw(st.integers(min_value=1, max_value=5))
    derivs = []
    for k in range(n):
        refs = draw(st.lists(_sym, min_size=1, max_size=4))
        refs = [s for s in refs if not (s.kind.value == "out" and s.index == k)]
        if not refs:
            refs = [Symbol.input(0)]
        ops = draw(
            st.lists(st.sampled_from("+-*/"), min_size=len(refs) - 1, max_size=len(refs) - 1)
        )
        text = "".join(
            r.render() + (ops[i] if i < len(ops) else "")
            for i, r in enumerate(refs)
        )
        derivs.append(Derivation.parse(f"{text}=out{k}"))
    final = Symbol.output(draw(st.integers(min_value=0, max_value=n - 1)))
    return Abstraction(tuple(derivs), final=final)


@given(_abstractions())
def test_retrieve_inverts_render_answer(abstraction):
    text = render_answer(abstraction)
    again = retrieve(text)
    assert again.derivations == abstraction.derivations
    assert again.final == abstraction.final


@given(_abstractions())
def test_tokenize_render_tokens_retrieve_roundtrip(abstraction):
    text = render_tokens(tokenize(abstraction))
    again = retrieve(text)
    assert again.derivations == abstraction.derivations
