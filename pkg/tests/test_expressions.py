"""Expression and derivation grammar: parsing, rendering, structure."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from absmath import (
    Abstraction,
    ConditionSet,
    Derivation,
    Number,
    Symbol,
    SymbolKind,
    parse_expr,
    reinstantiate,
    render_expr,
)
from absmath.core import BinOp, Group, Lit, Ref, expr_symbols
from absmath.errors import (
    DuplicateDefinition,
    MalformedExpression,
    UnboundPlaceholder,
)


class TestSymbols:
    def test_parse_input(self):
        s = Symbol.parse("in3")
        assert s.kind is SymbolKind.INPUT and s.index == 3

    def test_parse_output(self):
        s = Symbol.parse("out0")
        assert s.kind is SymbolKind.OUTPUT and s.index == 0

    @pytest.mark.parametrize("bad", ["in", "out", "x1", "in-1", "In0", "in 2"])
    def test_rejects_non_symbols(self, bad):
        with pytest.raises(MalformedExpression):
            Symbol.parse(bad)

    def test_render(self):
        assert Symbol.input(12).render() == "in12"
        assert Symbol.output(4).render() == "out4"


class TestExprParsing:
    def test_precedence(self):
        node = parse_expr("in0+in1*in2")
        assert isinstance(node, BinOp) and node.op == "+"
        assert isinstance(node.right, BinOp) and node.right.op == "*"

    def test_left_associativity(self):
        node = parse_expr("in0-in1-in2")
        assert node.op == "-"
        assert isinstance(node.left, BinOp) and node.left.op == "-"

    def test_parens_are_explicit_nodes(self):
        node = parse_expr("(in0+in1)*in2")
        assert isinstance(node, BinOp) and node.op == "*"
        assert isinstance(node.left, Group)

    def test_literals_and_symbols(self):
        node = parse_expr("2*in0")
        assert isinstance(node.left, Lit) and node.left.value == Number.parse("2")
        assert isinstance(node.right, Ref)

    def test_unary_minus_number(self):
        node = parse_expr("-3+in0")
        assert isinstance(node.left, Lit)
        assert node.left.value == Number.parse("-3")

    @pytest.mark.parametrize(
        "bad", ["", "in0+", "*in0", "in0**in1", "(in0", "in0)", "in0 in1", "a+b", "2^3"]
    )
    def test_rejects_malformed(self, bad):
        with pytest.raises(MalformedExpression):
            parse_expr(bad)

    def test_render_roundtrip_examples(self):
        for text in ["in0*in2", "in0-in1", "(in0+in1)/2", "1/2*in3", "in0*in1-in2"]:
            assert render_expr(parse_expr(text)) == text

    def test_symbols_in_reading_order(self):
        syms = list(expr_symbols(parse_expr("in1*(out0+in0)")))
        assert [s.render() for s in syms] == ["in1", "out0", "in0"]


class TestDerivations:
    def test_parse(self):
        d = Derivation.parse("in0*in2=out0")
        assert d.defines == Symbol.output(0)
        assert d.render() == "in0*in2=out0"

    def test_must_define_output(self):
        with pytest.raises(MalformedExpression):
            Derivation.parse("in0+in1=in2")

    def test_needs_exactly_one_equals(self):
        with pytest.raises(MalformedExpression):
            Derivation.parse("in0+in1")
        with pytest.raises(MalformedExpression):
            Derivation.parse("in0=out0=out1")

    def test_no_self_reference(self):
        with pytest.raises(MalformedExpression):
            Derivation.parse("out0+in1=out0")

    def test_references(self):
        d = Derivation.parse("in1-out0=out1")
        assert [s.render() for s in d.references()] == ["in1", "out0"]


class TestAbstraction:
    def test_duplicate_definition_rejected(self):
        d0 = Derivation.parse("in0+in1=out0")
        d1 = Derivation.parse("in0-in1=out0")
        with pytest.raises(DuplicateDefinition):
            Abstraction((d0, d1))

    def test_defined_and_input_symbols(self):
        a = Abstraction(
            (Derivation.parse("in0*in2=out0"), Derivation.parse("in1-out0=out1")),
            final=Symbol.output(1),
        )
        assert a.defined_symbols() == {Symbol.output(0), Symbol.output(1)}
        assert a.input_symbols() == {Symbol.input(0), Symbol.input(1), Symbol.input(2)}
        assert len(a) == 2

    def test_final_must_be_output(self):
        with pytest.raises(MalformedExpression):
            Abstraction((Derivation.parse("in0+in1=out0"),), final=Symbol.input(0))


class TestReinstantiate:
    def test_substitutes_placeholders(self):
        conditions = ConditionSet.from_mapping({"in0": "24", "in1": "1/2"})
        text = reinstantiate("Ate [in0] eggs, sold [in1] of them.", conditions)
        assert text == "Ate 24 eggs, sold 1/2 of them."

    def test_unbound_placeholder_raises(self):
        conditions = ConditionSet.from_mapping({"in0": "24"})
        with pytest.raises(UnboundPlaceholder):
            reinstantiate("Needs [in1] too.", conditions)


class TestConditionSet:
    def test_from_mapping_orders_by_index(self):
        c = ConditionSet.from_mapping({"in1": "64", "in0": "24", "in2": "2"})
        assert [v.render() for v in c] == ["24", "64", "2"]
        assert c.render() == "in0=24  in1=64  in2=2"

    def test_from_mapping_requires_contiguous_indices(self):
        with pytest.raises(MalformedExpression):
            ConditionSet.from_mapping({"in0": "1", "in2": "3"})

    def test_from_mapping_rejects_output_keys(self):
        with pytest.raises(MalformedExpression):
            ConditionSet.from_mapping({"out0": "1"})

    def test_get(self):
        c = ConditionSet.from_values(["5", "7"])
        assert c.get(Symbol.input(1)) == Number.parse("7")
        assert c.get(Symbol.input(9)) is None
        assert c.get(Symbol.output(0)) is None

    def test_to_mapping_roundtrip(self):
        c = ConditionSet.from_values(["240", "80", "60"])
        assert ConditionSet.from_mapping(c.to_mapping()) == c


# -- property: parse(render(tree)) == tree for generated trees --------------

_leaf = st.one_of(
    st.integers(min_value=0, max_value=99).map(lambda n: Lit(Number.parse(str(n)))),
    st.integers(min_value=0, max_value=9).map(lambda k: Ref(Symbol.input(k))),
    st.integers(min_value=0, max_value=9).map(lambda k: Ref(Symbol.output(k))),
)


def _combine(children):
    left, right, op, grouped = children
    node = BinOp(op, left, right)
    return Group(node) if grouped else node


_expr_trees = st.recursive(
    _leaf,
    lambda inner: st.tuples(
        inner, inner, st.sampled_from("+-*/"), st.booleans()
    ).map(_combine),
    max_leaves=12,
)


@given(_expr_trees)
def test_expr_render_parse_roundtrip(tree):
    text = render_expr(tree)
    rendered_again = render_expr(parse_expr(text))
    assert rendered_again == text
