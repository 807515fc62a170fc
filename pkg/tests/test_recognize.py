"""Condition recognition: numeral extraction and implicit-number rewrites."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from absmath import ImplicitNumberLexicon, Number, recognize, reinstantiate
from absmath.errors import NoNumbersFound


def test_basic_extraction():
    res = recognize("Janet has 24 eggs and sells 16 of them.", ImplicitNumberLexicon.empty())
    assert res.abstract_question == "Janet has [in0] eggs and sells [in1] of them."
    assert res.conditions.to_mapping() == {"in0": "24", "in1": "16"}


def test_indices_follow_reading_order():
    res = recognize("First 7, then 3, then 11.", ImplicitNumberLexicon.empty())
    assert [v.render() for v in res.conditions] == ["7", "3", "11"]
    assert res.abstract_question == "First [in0], then [in1], then [in2]."


def test_fraction_beats_decimal_beats_integer():
    res = recognize("Mix 1/2 cup with 2.5 liters and 3 spoons.", ImplicitNumberLexicon.empty())
    assert [v.render() for v in res.conditions] == ["1/2", "2.5", "3"]


def test_money_sign_stays_outside_placeholder():
    res = recognize("Tickets cost $12 each.", ImplicitNumberLexicon.empty())
    assert res.abstract_question == "Tickets cost $[in0] each."
    assert res.conditions.to_mapping() == {"in0": "12"}


def test_no_numbers_raises():
    with pytest.raises(NoNumbersFound):
        recognize("Nothing numeric here.", ImplicitNumberLexicon.empty())


def test_spans_point_at_source_text():
    question = "Buy 4 apples and 15 pears."
    res = recognize(question, ImplicitNumberLexicon.empty())
    for start, end, sym in res.spans:
        assert question[start:end] in {"4", "15"}
    assert [sym.render() for _, _, sym in res.spans] == ["in0", "in1"]


class TestLexicon:
    def test_word_numbers(self):
        res = recognize("Seven friends shared twelve cookies.")
        assert [v.render() for v in res.conditions] == ["7", "12"]

    def test_half_becomes_fraction(self):
        res = recognize("She sold half of the 48 clips.")
        assert [v.render() for v in res.conditions] == ["1/2", "48"]

    def test_twice_rewrites_to_two_times(self):
        res = recognize("He ran twice as far.")
        assert res.conditions.to_mapping() == {"in0": "2"}
        assert "[in0] times" in res.abstract_question

    def test_dozen(self):
        res = recognize("A dozen donuts.")
        assert res.conditions.to_mapping() == {"in0": "12"}

    def test_longest_surface_wins(self):
        res = recognize("About a hundred geese.")
        assert res.conditions.to_mapping() == {"in0": "100"}

    def test_case_insensitive(self):
        res = recognize("Half of Ten.")
        assert [v.render() for v in res.conditions] == ["1/2", "10"]

    def test_empty_lexicon_leaves_words_alone(self):
        with pytest.raises(NoNumbersFound):
            recognize("Seven friends.", ImplicitNumberLexicon.empty())

    def test_save_load_roundtrip(self, tmp_path):
        lex = ImplicitNumberLexicon.default()
        path = tmp_path / "lex.tsv"
        lex.save(path)
        again = ImplicitNumberLexicon.load(path)
        assert again.entries == lex.entries

    def test_load_skips_comments_and_blanks(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("# comment\n\nhalf\t1/2\n", encoding="utf-8")
        lex = ImplicitNumberLexicon.load(path)
        assert lex.entries == (("half", "1/2"),)


def test_to_json_shape():
    res = recognize("Pick 5 flowers.", ImplicitNumberLexicon.empty())
    doc = res.to_json()
    assert doc["abstract_question"] == "Pick [in0] flowers."
    assert doc["conditions"] == {"in0": "5"}
    assert doc["spans"] == [[5, 6, "in0"]]


@given(
    st.lists(
        st.one_of(
            st.integers(min_value=0, max_value=9999).map(str),
            st.tuples(
                st.integers(min_value=0, max_value=999),
                st.integers(min_value=1, max_value=99),
            )
            .map(lambda t: f"{t[0]}/{t[1]}")
            .filter(lambda s: Number.parse(s).render() == s),
        ),
        min_size=1,
        max_size=6,
    )
)
def test_reinstantiate_inverts_recognition(numerals):
    question = "Start with " + " and then ".join(numerals) + " at the end."
    res = recognize(question, ImplicitNumberLexicon.empty())
    assert reinstantiate(res.abstract_question, res.conditions) == question
    assert [v for v in res.conditions] == [Number.parse(n) for n in numerals]
