"""Word-token inventory for OOV checking and language scoring.

Tokens are lowercase; spelled acronyms become single underscore-joined
tokens (``KLM`` -> ``k_l_m``). Pronunciations are carried when supplied but
never synthesized.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from atcdp.errors import InvalidInputError, ParseError
from atcdp.markup import UNK, tokenize_markup

SOURCES = ("transcripts", "designators", "waypoints", "manual")

_ACRONYM_RE = re.compile(r"[A-Z]{2,4}")
_LETTERS_RE = re.compile(r"[A-Za-z]+")


def acronym_token(spelled: str) -> str:
    """``"KLM"`` -> ``"k_l_m"``; accepts 2 to 4 Latin letters."""
    if not _LETTERS_RE.fullmatch(spelled or "") or not 2 <= len(spelled) <= 4:
        raise InvalidInputError(f"{spelled!r} is not a 2-4 letter acronym")
    return "_".join(spelled.lower())


def lexicon_token(raw: str) -> str:
    if _ACRONYM_RE.fullmatch(raw):
        return acronym_token(raw)
    return raw.lower()


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, tuple[tuple[str, ...], ...]]
    sources: Mapping[str, str]
    counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for tok in self.entries:
            if tok != tok.lower() or not tok or any(c.isspace() for c in tok):
                raise ValueError(f"invalid lexicon token {tok!r}")
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))
        object.__setattr__(self, "sources", MappingProxyType(dict(self.sources)))
        object.__setattr__(self, "counts", MappingProxyType(dict(self.counts)))

    def __contains__(self, token) -> bool:
        return token in self.entries

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries))


def _resource_token(item: str) -> str:
    # multi-word items are ligatured like multi-word airline telephony
    words = item.split()
    if len(words) == 1:
        return lexicon_token(words[0])
    return "_".join(w.lower() for w in words)


def build_lexicon(
    transcripts: Iterable[str] = (),
    extra: Mapping[str, Iterable[str]] | None = None,
    pronunciations: Mapping[str, Iterable[Iterable[str]]] | None = None,
) -> Lexicon:
    """Union of transcript words and resource lists, each tagged with a source.

    ``transcripts`` are lines of text; markup and ``[unk]`` are skipped and
    uppercase 2-4 letter words are treated as spelled acronyms. ``extra`` maps
    a source name (designators, waypoints, manual) to one item per element.
    A token found in several sources keeps the first one in ``SOURCES``
    order, so the result does not depend on input order.
    """
    found: dict[str, set[str]] = {}
    counts: Counter = Counter()

    def add(tok, source):
        found.setdefault(tok, set()).add(source)

    for line in transcripts:
        for t in tokenize_markup(line):
            if t.word == UNK:
                continue
            add(lexicon_token(t.word), "transcripts")
    for source, items in (extra or {}).items():
        if source not in SOURCES:
            raise InvalidInputError(f"unknown lexicon source {source!r}")
        for item in items:
            if item.strip():
                add(_resource_token(item.strip()), source)

    sources = {}
    for tok, srcs in found.items():
        sources[tok] = next(s for s in SOURCES if s in srcs)
        for s in srcs:
            counts[s] += 1
    prons = pronunciations or {}
    entries = {tok: tuple(tuple(p) for p in prons.get(tok, ())) for tok in found}
    return Lexicon(entries, sources, {s: counts.get(s, 0) for s in SOURCES})


def check_oov(tokens: Iterable[str], lex: Lexicon) -> list[str]:
    """Tokens missing from ``lex``, deduplicated, in first-occurrence order."""
    seen = set()
    out = []
    for t in tokens:
        if t == UNK or t in lex or t in seen:
            continue
        seen.add(t)
        out.append(t)
    return out


def merge(*lexicons: Lexicon) -> Lexicon:
    entries: dict = {}
    srcs: dict = {}
    for lex in lexicons:
        for tok, prons in lex.entries.items():
            entries[tok] = tuple(dict.fromkeys(entries.get(tok, ()) + prons))
            prev = srcs.get(tok)
            cur = lex.sources[tok]
            srcs[tok] = cur if prev is None else min(prev, cur, key=SOURCES.index)
    counts = Counter(srcs.values())
    return Lexicon(entries, srcs, {s: counts.get(s, 0) for s in SOURCES})


def read_lexicon(path) -> Lexicon:
    """Read ``token<TAB>source[<TAB>phones]`` lines; repeated tokens add pronunciations."""
    entries: dict[str, list[tuple[str, ...]]] = {}
    sources: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2 or parts[1] not in SOURCES:
                raise ParseError("expected token<TAB>source[<TAB>phones]", line_no)
            tok = parts[0]
            if tok != tok.lower():
                raise ParseError(f"token {tok!r} is not lowercase", line_no)
            entries.setdefault(tok, [])
            sources.setdefault(tok, parts[1])
            if len(parts) > 2 and parts[2].strip():
                entries[tok].append(tuple(parts[2].split()))
    counts = Counter(sources.values())
    return Lexicon({k: tuple(v) for k, v in entries.items()}, sources, {s: counts.get(s, 0) for s in SOURCES})


def write_lexicon(lex: Lexicon, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for tok in sorted(lex.entries):
            prons = lex.entries[tok] or ((),)
            for p in prons:
                line = f"{tok}\t{lex.sources[tok]}"
                if p:
                    line += "\t" + " ".join(p)
                f.write(line + "\n")


def read_word_list(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip() and not line.startswith("#")]
