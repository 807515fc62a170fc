"""Condition recognition: turn explicit and implicit numerals into [inK] slots.

recognize() scans a question left to right, replaces every maximal numeral
with an indexed placeholder, and collects the values as an ordered condition
set. Implicit numerals ("twice", "half", "dozen", spelled-out numbers) are
first rewritten to explicit form through a lexicon, then replaced like any
other numeral. Dollar signs stay outside the placeholder ("$[in0]").

reinstantiate() is the inverse substitution; for questions containing only
explicit numerals the round trip reproduces the input byte for byte.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .core import ConditionSet, Number, Symbol, reinstantiate  # noqa: F401
from .errors import MalformedNumber, NoNumbersFound

_WORD_NUMBERS = {
    "one": "1", "two": "2", "three": "3", "four": "4", "five": "5",
    "six": "6", "seven": "7", "eight": "8", "nine": "9", "ten": "10",
    "eleven": "11", "twelve": "12", "thirteen": "13", "fourteen": "14",
    "fifteen": "15", "sixteen": "16", "seventeen": "17", "eighteen": "18",
    "nineteen": "19", "twenty": "20", "thirty": "30", "forty": "40",
    "fifty": "50", "sixty": "60", "seventy": "70", "eighty": "80",
    "ninety": "90", "hundred": "100",
}

_DEFAULT_ENTRIES: list[tuple[str, str]] = [
    ("one hundred", "100"),
    ("a hundred", "100"),
    ("a dozen", "12"),
    ("dozen", "12"),
    ("twice", "2 times"),
    ("thrice", "3 times"),
    ("half", "1/2"),
    ("a third", "1/3"),
    ("a quarter", "1/4"),
] + sorted(_WORD_NUMBERS.items())


@dataclass(frozen=True)
class ImplicitNumberLexicon:
    """Ordered surface -> explicit rewrites applied before numeral extraction.

    Matching is case-insensitive on word boundaries, longest surface first.
    The file format is one entry per line, surface TAB explicit, UTF-8;
    blank lines and lines starting with '#' are skipped.
    """

    entries: tuple[tuple[str, str], ...]

    @staticmethod
    def default() -> "ImplicitNumberLexicon":
        return ImplicitNumberLexicon(tuple(_DEFAULT_ENTRIES))

    @staticmethod
    def empty() -> "ImplicitNumberLexicon":
        return ImplicitNumberLexicon(())

    @staticmethod
    def load(path) -> "ImplicitNumberLexicon":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                if "\t" not in line:
                    raise MalformedNumber(f"lexicon line missing TAB: {line!r}")
                surface, explicit = line.split("\t", 1)
                entries.append((surface.strip(), explicit.strip()))
        return ImplicitNumberLexicon(tuple(entries))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for surface, explicit in self.entries:
                fh.write(f"{surface}\t{explicit}\n")

    def mapping(self) -> dict[str, str]:
        return {surface.lower(): explicit for surface, explicit in self.entries}

    def pattern(self) -> Optional[re.Pattern]:
        if not self.entries:
            return None
        alts = sorted((s for s, _ in self.entries), key=len, reverse=True)
        joined = "|".join(re.escape(a) for a in alts)
        return re.compile(rf"\b(?:{joined})\b", re.IGNORECASE)


@dataclass(frozen=True)
class RecognitionResult:
    abstract_question: str
    conditions: ConditionSet
    spans: tuple[tuple[int, int, Symbol], ...]

    def to_json(self) -> dict:
        return {
            "abstract_question": self.abstract_question,
            "conditions": self.conditions.to_mapping(),
            "spans": [[start, end, sym.render()] for start, end, sym in self.spans],
        }


# A maximal explicit numeral: fraction beats decimal beats integer.
_NUMERAL = r"\d+/\d+|\d+\.\d+|\d+"
_EXPLICIT_RE = re.compile(rf"(?P<money>\$)?(?P<num>{_NUMERAL})")
_NUM_IN_EXPLICIT = re.compile(_NUMERAL)


def recognize(
    question: str, lexicon: Optional[ImplicitNumberLexicon] = None
) -> RecognitionResult:
    """Extract conditions from a question, replacing numerals with [inK].

    Placeholder indices increase with span start offsets. Raises
    NoNumbersFound when nothing numeric is present.
    """
    if lexicon is None:
        lexicon = ImplicitNumberLexicon.default()

    lex_pattern = lexicon.pattern()
    lex_map = lexicon.mapping()
    if lex_pattern is not None:
        combined = re.compile(
            rf"(?P<lex>{lex_pattern.pattern})|{_EXPLICIT_RE.pattern}", re.IGNORECASE
        )
    else:
        combined = _EXPLICIT_RE

    out_parts: list[str] = []
    values: list[Number] = []
    spans: list[tuple[int, int, Symbol]] = []
    cursor = 0

    for m in combined.finditer(question):
        sym = Symbol.input(len(values))
        out_parts.append(question[cursor : m.start()])
        if lex_pattern is not None and m.group("lex"):
            explicit = lex_map[m.group("lex").lower()]
            num_m = _NUM_IN_EXPLICIT.search(explicit)
            if num_m is None:
                # lexicon rewrite with no numeral inside: keep the text as is
                out_parts.append(explicit)
                cursor = m.end()
                continue
            values.append(Number.parse(num_m.group()))
            out_parts.append(
                explicit[: num_m.start()] + f"[{sym.render()}]" + explicit[num_m.end() :]
            )
            spans.append((m.start(), m.end(), sym))
        else:
            if m.group("money"):
                out_parts.append("$")
            values.append(Number.parse(m.group("num")))
            out_parts.append(f"[{sym.render()}]")
            num_start = m.start("num")
            spans.append((num_start, m.end(), sym))
        cursor = m.end()

    out_parts.append(question[cursor:])
    if not values:
        raise NoNumbersFound(question)
    return RecognitionResult(
        abstract_question="".join(out_parts),
        conditions=ConditionSet(tuple(values)),
        spans=tuple(spans),
    )
