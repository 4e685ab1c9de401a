"""Deterministic grammar tagger for callsign/command/value spans and speaker role.

Spans use the same model as the gold XML markup, so either this tagger or
an external one can be scored against annotations with
:func:`atcdp.metrics.entity_eval`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping, Sequence

from atcdp.callsign import ICAO_WORDS, default_designators
from atcdp.errors import ParseError
from atcdp.markup import UNK, EntitySpan, render_markup

SECTIONS = ("command", "value_prefix", "value_suffix", "value_word", "atco", "pilot")
CALLSIGN_DIGITS = frozenset(
    ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"))

_ACRONYM_TOKEN = re.compile(r"[a-z](_[a-z])+")
_HEADER = re.compile(r"\[(\w+)\]")


@dataclass(frozen=True)
class TagGrammar:
    command: tuple[tuple[str, ...], ...]
    value_prefix: tuple[tuple[str, ...], ...]
    value_suffix: tuple[tuple[str, ...], ...]
    value_word: frozenset[str]
    atco: tuple[tuple[str, ...], ...]
    pilot: tuple[tuple[str, ...], ...]


def load_grammar(document: str) -> TagGrammar:
    sections: dict[str, list[tuple[str, ...]]] = {name: [] for name in SECTIONS}
    current = None
    for line_no, line in enumerate(document.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        m = _HEADER.fullmatch(line)
        if m:
            if m.group(1) not in sections:
                raise ParseError(f"unknown grammar section [{m.group(1)}]", line_no)
            current = m.group(1)
            continue
        if current is None:
            raise ParseError("keyword before any section header", line_no)
        sections[current].append(tuple(line.lower().split()))

    def phrases(name):
        # longest first so prefix matching is greedy
        return tuple(sorted(dict.fromkeys(sections[name]), key=lambda p: (-len(p), p)))

    return TagGrammar(
        command=phrases("command"),
        value_prefix=phrases("value_prefix"),
        value_suffix=phrases("value_suffix"),
        value_word=frozenset(w for p in sections["value_word"] for w in p),
        atco=phrases("atco"),
        pilot=phrases("pilot"),
    )


_default_grammar = None


def default_grammar() -> TagGrammar:
    global _default_grammar
    if _default_grammar is None:
        text = resources.files("atcdp").joinpath("data/tag_grammar.txt").read_text(encoding="utf-8")
        _default_grammar = load_grammar(text)
    return _default_grammar


def read_grammar(path) -> TagGrammar:
    with open(path, encoding="utf-8") as f:
        return load_grammar(f.read())


def _phrase_at(tokens, i, phrases) -> int:
    for p in phrases:
        if tuple(tokens[i : i + len(p)]) == p:
            return len(p)
    return 0


def _callsign_spans(tokens, telephony) -> list[EntitySpan]:
    spans = []
    i = 0
    tail_words = CALLSIGN_DIGITS | ICAO_WORDS
    while i < len(tokens):
        t = tokens[i]
        starter = t in telephony or t in ICAO_WORDS or _ACRONYM_TOKEN.fullmatch(t)
        j = i + 1
        if starter:
            while j < len(tokens) and tokens[j] in tail_words:
                j += 1
        if starter and j > i + 1:
            spans.append(EntitySpan("callsign", i, j))
            i = j
        else:
            i += 1
    return spans


def _value_spans(tokens, free, g: TagGrammar) -> list[EntitySpan]:
    spans = []
    i = 0
    n = len(tokens)
    while i < n:
        if not free[i]:
            i += 1
            continue
        k = _phrase_at(tokens, i, g.value_prefix)
        if k and not all(free[i : i + k]):
            k = 0
        j = i + k
        while j < n and free[j] and tokens[j] in g.value_word:
            j += 1
        if j == i + k:
            i += 1
            continue
        s = _phrase_at(tokens, j, g.value_suffix)
        if s and all(free[j : j + s]):
            j += s
        spans.append(EntitySpan("value", i, j))
        i = j
    return spans


def _command_spans(tokens, free, g: TagGrammar) -> list[EntitySpan]:
    spans = []
    i = 0
    n = len(tokens)
    while i < n:
        if not free[i] or tokens[i] == UNK:
            i += 1
            continue
        j = i
        while j < n and free[j] and tokens[j] != UNK:
            j += 1
        if any(_phrase_at(tokens[:j], k, g.command) for k in range(i, j)):
            spans.append(EntitySpan("command", i, j))
        i = j
    return spans


def tag_entities(tokens: Sequence[str], table: Mapping[str, str] | None = None,
                 rules: TagGrammar | None = None) -> list[EntitySpan]:
    """Label callsign, value and command spans in normalized tokens.

    Callsigns are a telephony word, spelled acronym or ICAO letter followed by
    one or more digit words or ICAO letters. Values are digit-word runs with
    an optional unit phrase before (and ``knots``/``feet`` after). Commands
    are the leftover stretches between other spans and ``[unk]`` that
    contain a command keyword. Earlier classes win overlaps.
    """
    g = rules or default_grammar()
    table = default_designators() if table is None else table
    tokens = [t.lower() if t != UNK else t for t in tokens]
    telephony = table.telephony_tokens() if hasattr(table, "telephony_tokens") else frozenset(table.values())

    spans = _callsign_spans(tokens, telephony)
    free = [True] * len(tokens)
    for s in spans:
        free[s.start_token : s.end_token] = [False] * (s.end_token - s.start_token)
    values = _value_spans(tokens, free, g)
    for s in values:
        free[s.start_token : s.end_token] = [False] * (s.end_token - s.start_token)
    commands = _command_spans(tokens, free, g)
    return sorted(spans + values + commands, key=lambda s: s.key)


def tag_text(text: str, table=None, rules=None) -> str:
    """Normalized text -> text with inline entity markup."""
    tokens = text.split()
    return render_markup(tokens, tag_entities(tokens, table, rules))


class SpeakerRole(str, Enum):
    ATCO = "atco"
    PILOT = "pilot"
    UNKNOWN = "unknown"


def _count_phrases(tokens, phrases) -> int:
    count = 0
    for i in range(len(tokens)):
        if _phrase_at(tokens, i, phrases):
            count += 1
    return count


def role_votes(tokens: Sequence[str], rules: TagGrammar | None = None) -> tuple[int, int]:
    g = rules or default_grammar()
    tokens = [t.lower() for t in tokens]
    return _count_phrases(tokens, g.atco), _count_phrases(tokens, g.pilot)


def classify_speaker_role(tokens: Sequence[str], rules: TagGrammar | None = None) -> SpeakerRole:
    atco, pilot = role_votes(tokens, rules)
    if atco > pilot:
        return SpeakerRole.ATCO
    if pilot > atco:
        return SpeakerRole.PILOT
    return SpeakerRole.UNKNOWN


def tag_lines(lines: Iterable[str], table=None, rules=None):
    for line in lines:
        tokens = line.split()
        yield classify_speaker_role(tokens, rules), render_markup(tokens, tag_entities(tokens, table, rules))
