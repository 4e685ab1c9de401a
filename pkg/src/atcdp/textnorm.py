"""Rule-based transcript unification.

Rules map word sequences to word sequences (``niner`` -> ``nine``,
``take off`` -> ``takeoff``, ``klm`` -> ``k_l_m``). They are applied
longest pattern first, left to right, and repeated until nothing changes.
Entity markup survives normalization: tags stay attached to the words they
enclosed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from atcdp.errors import ParseError
from atcdp.markup import UNK, MarkedToken, render_marked, tokenize_markup

CATEGORIES = ("icao_alphabet", "common_expression", "airline_designator", "digit")
MAX_PASSES = 5

_DIGIT_RE = re.compile(r"\d")
_DEFAULT_DIGITS = ("zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine")


@dataclass(frozen=True)
class Rule:
    pattern: tuple[str, ...]
    replacement: tuple[str, ...]
    category: str


class RuleTable:
    """Immutable, indexed collection of normalization rules."""

    def __init__(self, rules):
        rules = tuple(rules)
        seen = {}
        for r in rules:
            if not r.pattern:
                raise ValueError("empty rule pattern")
            if not r.replacement:
                raise ValueError(f"empty replacement for {' '.join(r.pattern)!r}")
            if r.category not in CATEGORIES:
                raise ValueError(f"unknown rule category {r.category!r}")
            if any(t != t.lower() for t in r.replacement):
                raise ValueError(f"replacement {' '.join(r.replacement)!r} is not lowercase")
            if r.pattern in seen:
                raise ValueError(f"duplicate rule pattern {' '.join(r.pattern)!r}")
            seen[r.pattern] = r
        self._rules = rules
        by_first: dict[str, list[Rule]] = {}
        for r in rules:
            by_first.setdefault(r.pattern[0], []).append(r)
        for lst in by_first.values():
            lst.sort(key=lambda r: -len(r.pattern))
        self._by_first = by_first
        digits = {r.pattern[0]: r.replacement for r in rules if r.category == "digit" and len(r.pattern) == 1}
        self._digits = {str(i): digits.get(str(i), (_DEFAULT_DIGITS[i],)) for i in range(10)}

    @property
    def rules(self) -> tuple[Rule, ...]:
        return self._rules

    def __len__(self):
        return len(self._rules)

    def __iter__(self):
        return iter(self._rules)

    def lookup(self, pattern: str) -> str | None:
        key = tuple(pattern.lower().split())
        for r in self._by_first.get(key[0], ()) if key else ():
            if r.pattern == key:
                return " ".join(r.replacement)
        return None

    def digit_word(self, digit: str) -> tuple[str, ...]:
        return self._digits[digit]

    def match_at(self, words, i):
        for r in self._by_first.get(words[i], ()):
            n = len(r.pattern)
            if tuple(words[i : i + n]) == r.pattern:
                return r
        return None


def load_rules(document: str) -> RuleTable:
    """Parse ``pattern<TAB>replacement<TAB>category`` lines."""
    rules = []
    patterns = {}
    for line_no, line in enumerate(document.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 3:
            raise ParseError("expected pattern<TAB>replacement<TAB>category", line_no)
        pattern = tuple(parts[0].lower().split())
        replacement = tuple(parts[1].split())
        if not replacement:
            raise ParseError(f"empty replacement for {parts[0]!r}", line_no)
        if pattern in patterns:
            raise ParseError(f"duplicate pattern {parts[0]!r} (first on line {patterns[pattern]})", line_no)
        patterns[pattern] = line_no
        try:
            rules.append(Rule(pattern, replacement, parts[2].strip()))
            RuleTable(rules[-1:])
        except ValueError as e:
            raise ParseError(str(e), line_no) from None
    return RuleTable(rules)


_default = None


def default_rules() -> RuleTable:
    global _default
    if _default is None:
        text = resources.files("atcdp").joinpath("data/normalization_rules.tsv").read_text(encoding="utf-8")
        _default = load_rules(text)
    return _default


def read_rules(path) -> RuleTable:
    with open(path, encoding="utf-8") as f:
        return load_rules(f.read())


def _apply_pass(tokens: list[MarkedToken], table: RuleTable):
    """One left-to-right pass of longest-match rewriting.

    Markup is flat, so the open entity is tracked while scanning. A
    replacement belongs to the entity open at (or first opened within) its
    span; an entity that is still open after the span but started inside it
    is reopened on the following token, so nesting stays valid.
    """
    words = [t.word for t in tokens]
    out: list[MarkedToken] = []
    changed = False
    state = None
    pending = None
    i = 0
    while i < len(tokens):
        rule = table.match_at(words, i) if words[i] != UNK else None
        if rule is None:
            t = tokens[i]
            if pending is not None:
                t = MarkedToken(t.word, [pending] + list(t.opens), list(t.closes))
                pending = None
            for label in t.opens:
                state = label
            if t.closes:
                state = None
            out.append(t)
            i += 1
            continue
        span = tokens[i : i + len(rule.pattern)]
        reopen = pending is not None
        owner = before = state
        for t in span:
            for label in t.opens:
                state = label
                owner = owner or label
            if t.closes:
                state = None
        new = [MarkedToken(w) for w in rule.replacement]
        if (before is None or reopen) and owner is not None:
            new[0].opens = [owner]
        if owner is not None and state != owner:
            new[-1].closes = [owner]
        pending = state if state is not None and state != owner else None
        out.extend(new)
        changed = changed or rule.pattern != rule.replacement
        i += len(rule.pattern)
    return out, changed


def _lower(tokens):
    return [MarkedToken(t.word if t.word == UNK else t.word.lower(), t.opens, t.closes) for t in tokens]


def normalize_text(text: str, table: RuleTable | None = None, digits: bool = False) -> str:
    """Lowercase ``text`` and apply ``table`` to a fixed point.

    With ``digits=True`` digit characters are verbalized first.
    """
    table = table or default_rules()
    if digits:
        text = verbalize_digits(text, table)
    tokens = _lower(tokenize_markup(text))
    for _ in range(MAX_PASSES):
        tokens, changed = _apply_pass(tokens, table)
        if not changed:
            break
    return render_marked(tokens)


def verbalize_digits(text: str, table: RuleTable | None = None) -> str:
    """Spell every digit as a word, one word per digit (``134`` -> ``one three four``)."""
    table = table or default_rules()
    tokens = tokenize_markup(text)
    if not any(_DIGIT_RE.search(t.word) for t in tokens):
        return text
    out = []
    for t in tokens:
        if not _DIGIT_RE.search(t.word):
            out.append(t)
            continue
        pieces = _DIGIT_RE.sub(lambda m: " " + " ".join(table.digit_word(m.group(0))) + " ", t.word).split()
        new = [MarkedToken(p) for p in pieces]
        new[0].opens = list(t.opens)
        new[-1].closes = list(t.closes)
        out.extend(new)
    return render_marked(out)


def normalize_tokens(tokens, table: RuleTable | None = None) -> list[str]:
    return normalize_text(" ".join(tokens), table, digits=True).split()
