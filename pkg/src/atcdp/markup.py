"""Inline entity markup of the form ``[#callsign]quebec lima[/#callsign]``.

Only ``[#tag]``/``[/#tag]`` pairs from the closed label set and the ``[unk]``
token are markup; any other bracket is an error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from atcdp.errors import ParseError

LABELS = ("callsign", "command", "value")
UNK = "[unk]"

_LEX_RE = re.compile(r"(?P<sp>\s+)|\[(?P<close>/)?#(?P<tag>[^\]\s]*)\]|(?P<unk>\[unk\])|(?P<bad>[\[\]])|(?P<word>[^\s\[\]]+)")


@dataclass(frozen=True)
class EntitySpan:
    label: str
    start_token: int
    end_token: int

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown entity label {self.label!r}")
        if not (0 <= self.start_token < self.end_token):
            raise ValueError(f"invalid span [{self.start_token}, {self.end_token})")

    @property
    def key(self):
        return (self.start_token, self.end_token, self.label)

    def text(self, tokens) -> str:
        return " ".join(tokens[self.start_token : self.end_token])


@dataclass
class MarkedToken:
    """A word with the markup glued before and after it."""

    word: str
    opens: list[str] = field(default_factory=list)
    closes: list[str] = field(default_factory=list)


def tokenize_markup(text: str) -> list[MarkedToken]:
    """Split transcript text into words, attaching each tag to its neighbouring word.

    Opening tags attach to the following word and closing tags to the
    preceding one. ``[unk]`` is kept as an ordinary word. Nesting is checked
    separately by :func:`parse_markup`.
    """
    tokens: list[MarkedToken] = []
    pending: list[str] = []
    for m in _LEX_RE.finditer(text):
        if m.group("sp"):
            continue
        if m.group("bad"):
            raise ParseError(f"stray bracket at offset {m.start()} in {text!r}")
        if m.group("tag") is not None:
            label = m.group("tag")
            if not m.group("close"):
                pending.append(label)
            elif pending or not tokens:
                raise ParseError(f"tag [/#{label}] closes before any word")
            else:
                tokens[-1].closes.append(label)
            continue
        tokens.append(MarkedToken(m.group(0), pending))
        pending = []
    if pending:
        raise ParseError(f"tag [#{pending[0]}] encloses no words")
    return tokens


def parse_markup(text: str) -> tuple[list[str], list[EntitySpan]]:
    """Return the plain token list and the entity spans encoded in ``text``."""
    marked = tokenize_markup(text)
    words = [t.word for t in marked]
    spans = []
    stack: list[tuple[str, int]] = []
    for i, t in enumerate(marked):
        for label in t.opens:
            if label not in LABELS:
                raise ParseError(f"unknown tag [#{label}]")
            if stack:
                raise ParseError(f"[#{label}] opened inside [#{stack[-1][0]}]")
            stack.append((label, i))
        for label in t.closes:
            if not stack or stack[-1][0] != label:
                raise ParseError(f"unbalanced closing tag [/#{label}]")
            open_label, start = stack.pop()
            spans.append(EntitySpan(open_label, start, i + 1))
    if stack:
        raise ParseError(f"unclosed tag [#{stack[-1][0]}]")
    return words, spans


def render_markup(tokens, spans) -> str:
    """Inverse of :func:`parse_markup` for non-overlapping spans."""
    opens: dict[int, str] = {}
    closes: dict[int, str] = {}
    for s in spans:
        opens[s.start_token] = s.label
        closes[s.end_token - 1] = s.label
    out = []
    for i, w in enumerate(tokens):
        piece = w
        if i in opens:
            piece = f"[#{opens[i]}]" + piece
        if i in closes:
            piece = piece + f"[/#{closes[i]}]"
        out.append(piece)
    return " ".join(out)


def render_marked(tokens: list[MarkedToken]) -> str:
    return " ".join(
        "".join(f"[#{o}]" for o in t.opens) + t.word + "".join(f"[/#{c}]" for c in t.closes)
        for t in tokens
    )


def strip_markup(text: str) -> str:
    """Remove entity tags, keeping ``[unk]`` and the words."""
    return " ".join(t.word for t in tokenize_markup(text))


def check_spans(spans) -> list[EntitySpan]:
    """Sort spans and reject overlaps."""
    ordered = sorted(spans, key=lambda s: s.key)
    for a, b in zip(ordered, ordered[1:]):
        if b.start_token < a.end_token:
            raise ValueError(f"overlapping spans {a} and {b}")
    return ordered
