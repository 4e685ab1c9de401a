"""ICAO callsigns: spoken expansion, shortened variants, ranked matching."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

from atcdp.errors import InvalidInputError, ParseError
from atcdp.lexicon import lexicon_token
from atcdp.metrics import edit_distance
from atcdp.textnorm import RuleTable, default_rules, normalize_text

ICAO_ALPHABET = {
    "A": "alfa", "B": "bravo", "C": "charlie", "D": "delta", "E": "echo",
    "F": "foxtrot", "G": "golf", "H": "hotel", "I": "india", "J": "juliett",
    "K": "kilo", "L": "lima", "M": "mike", "N": "november", "O": "oscar",
    "P": "papa", "Q": "quebec", "R": "romeo", "S": "sierra", "T": "tango",
    "U": "uniform", "V": "victor", "W": "whiskey", "X": "x-ray", "Y": "yankee",
    "Z": "zulu",
}
ICAO_WORDS = frozenset(ICAO_ALPHABET.values())

_CODE_RE = re.compile(r"[A-Z0-9]+")


def telephony_token(raw: str, rules: RuleTable | None = None) -> str:
    """Spoken designator as one token: normalized, multi-word ligatured by ``_``."""
    words = [lexicon_token(w) if w.isupper() else w for w in raw.split()]
    if not words:
        raise InvalidInputError("empty telephony")
    normalized = normalize_text(" ".join(words), rules or default_rules()).split()
    return "_".join(normalized)


class DesignatorTable(Mapping):
    """Immutable ICAO 3-letter airline code -> telephony token."""

    def __init__(self, mapping: Mapping[str, str], rules: RuleTable | None = None):
        self._map = MappingProxyType({k.upper(): telephony_token(v, rules) for k, v in mapping.items()})

    def __getitem__(self, key):
        return self._map[key.upper()]

    def __iter__(self):
        return iter(self._map)

    def __len__(self):
        return len(self._map)

    def telephony_tokens(self) -> frozenset[str]:
        return frozenset(self._map.values())


def load_designators(document: str, rules: RuleTable | None = None) -> DesignatorTable:
    mapping = {}
    for line_no, line in enumerate(document.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not re.fullmatch(r"[A-Za-z]{3}", parts[0].strip()):
            raise ParseError("expected icao_3letter<TAB>telephony", line_no)
        code = parts[0].strip().upper()
        if code in mapping:
            raise ParseError(f"duplicate designator {code}", line_no)
        mapping[code] = parts[1].strip()
    return DesignatorTable(mapping, rules)


_default_table = None


def default_designators() -> DesignatorTable:
    global _default_table
    if _default_table is None:
        text = resources.files("atcdp").joinpath("data/designators.tsv").read_text(encoding="utf-8")
        _default_table = load_designators(text)
    return _default_table


def read_designators(path, rules=None) -> DesignatorTable:
    with open(path, encoding="utf-8") as f:
        return load_designators(f.read(), rules)


@dataclass(frozen=True)
class CallsignEntry:
    icao_code: str
    designator: str = ""
    telephony: str = ""
    suffix: str = ""

    def __post_init__(self):
        if not self.icao_code or not _CODE_RE.fullmatch(self.icao_code):
            raise InvalidInputError(f"callsign code {self.icao_code!r} must be uppercase alphanumeric")
        if self.designator and not self.icao_code.startswith(self.designator):
            raise InvalidInputError(f"designator {self.designator} does not prefix {self.icao_code}")

    @classmethod
    def from_code(cls, code: str, table: Mapping[str, str] | None = None, telephony: str = "") -> "CallsignEntry":
        """Split a compact code into airline designator and suffix.

        ``SWR2689`` has designator ``SWR``; codes whose first three letters are
        neither a known designator nor followed by a digit (``OKABC``) are
        treated as registrations.
        """
        code = (code or "").strip().upper().replace("-", "")
        if not code:
            raise InvalidInputError("empty callsign code")
        table = default_designators() if table is None else table
        head = code[:3]
        is_airline = (
            len(code) > 3 and head.isalpha()
            and (head in table or code[3].isdigit())
        )
        if is_airline:
            return cls(code, head, telephony, code[3:])
        return cls(code, "", telephony, code)


def _spell(chars: str, rules: RuleTable) -> list[str]:
    out = []
    for c in chars:
        if c.isdigit():
            out.extend(rules.digit_word(c))
        elif c.isalpha():
            out.append(ICAO_ALPHABET[c.upper()])
        else:
            raise InvalidInputError(f"cannot verbalize {c!r}")
    return out


def expand_callsign(e: CallsignEntry, table: Mapping[str, str] | None = None,
                    rules: RuleTable | None = None) -> list[str]:
    """Primary spoken form: telephony then the suffix spelled character by character."""
    if not e.icao_code:
        raise InvalidInputError("empty callsign code")
    rules = rules or default_rules()
    table = default_designators() if table is None else table
    if not e.designator:
        return _spell(e.icao_code, rules)
    if e.telephony:
        tel = telephony_token(e.telephony, rules)
    elif e.designator in table:
        tel = table[e.designator]
    else:
        tel = lexicon_token(e.designator)
    suffix = e.suffix or e.icao_code[len(e.designator):]
    return [tel] + _spell(suffix, rules)


def shorten_variants(expansion: Sequence[str]) -> list[tuple[str, ...]]:
    """Full form, then its last 2 and 3 tail tokens, then telephony + last 2.

    The first token is taken as the telephony (multi-word telephony is a
    single ligatured token); for a registration that gives the usual
    first-letter-plus-last-two abbreviation.
    """
    full = tuple(expansion)
    variants = [full]
    if len(full) > 1:
        head, tail = full[0], full[1:]
        for k in (2, 3):
            if len(tail) >= k:
                variants.append(tail[-k:])
        variants.append((head,) + tail[-2:])
    return list(dict.fromkeys(variants))


def callsign_variants(e: CallsignEntry, table=None, rules=None) -> list[tuple[str, ...]]:
    return shorten_variants(expand_callsign(e, table, rules))


@dataclass(frozen=True)
class SurveillanceContext:
    callsigns: tuple[CallsignEntry, ...]
    timestamp: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "callsigns", tuple(self.callsigns))
        codes = [c.icao_code for c in self.callsigns]
        if len(set(codes)) != len(codes):
            raise InvalidInputError("surveillance context has duplicate callsigns")

    @classmethod
    def from_codes(cls, codes: Iterable[str], table=None, timestamp=None) -> "SurveillanceContext":
        entries = {}
        for c in codes:
            e = CallsignEntry.from_code(c, table)
            entries.setdefault(e.icao_code, e)
        return cls(tuple(entries.values()), timestamp)


def load_surveillance(document: str, timestamp: float | None = None, table=None) -> SurveillanceContext:
    """JSON list of ``{"icao_code", "start"?, "end"?, "telephony"?}``.

    With a ``timestamp``, only entries whose [start, end] window contains it
    are kept; entries without a window are always kept.
    """
    items = json.loads(document)
    if not isinstance(items, list):
        raise ParseError("surveillance context must be a JSON list")
    entries = {}
    for i, item in enumerate(items):
        if isinstance(item, str):
            item = {"icao_code": item}
        if not isinstance(item, dict) or "icao_code" not in item:
            raise ParseError(f"entry {i} lacks icao_code")
        if timestamp is not None:
            start = item.get("start", float("-inf"))
            end = item.get("end", float("inf"))
            if not start <= timestamp <= end:
                continue
        e = CallsignEntry.from_code(item["icao_code"], table, telephony=item.get("telephony", ""))
        entries.setdefault(e.icao_code, e)
    return SurveillanceContext(tuple(entries.values()), timestamp)


class CallsignMatch(NamedTuple):
    icao_code: str
    distance: int
    variant: tuple[str, ...] = ()
    full_form: bool = False

    @property
    def rank_key(self):
        return (self.distance, -len(self.variant), not self.full_form, self.icao_code)


def match_callsign(span: Sequence[str], ctx: SurveillanceContext, table=None,
                   rules=None) -> list[CallsignMatch]:
    """Rank every context callsign by token-level edit distance to ``span``.

    Each entry's distance is its minimum over all shortened variants. Ties
    go to the entry whose closest variant is longer, then to an entry matched
    by its full form rather than a shortening (``swiss eight nine`` is both
    SWR89 in full and SWR2689 shortened), then to the smaller code, so the
    ranking does not depend on context order.
    """
    span = tuple(span)
    if not span:
        raise InvalidInputError("empty callsign span")
    if not ctx.callsigns:
        raise InvalidInputError("empty surveillance context")
    results = []
    for e in ctx.callsigns:
        variants = callsign_variants(e, table, rules)
        best = min((CallsignMatch(e.icao_code, edit_distance(span, v), v, k == 0)
                    for k, v in enumerate(variants)), key=lambda m: m.rank_key)
        results.append(best)
    results.sort(key=lambda m: m.rank_key)
    return results


def context_ngrams(ctx: SurveillanceContext, table=None, rules=None, min_len: int = 2) -> list[tuple[str, ...]]:
    """Per-utterance boosting list: every variant and its contiguous sub-sequences of length >= 2."""
    out: dict[tuple[str, ...], None] = {}
    for e in ctx.callsigns:
        for v in callsign_variants(e, table, rules):
            for n in range(len(v), min_len - 1, -1):
                for i in range(len(v) - n + 1):
                    out.setdefault(v[i : i + n])
    return list(out)
