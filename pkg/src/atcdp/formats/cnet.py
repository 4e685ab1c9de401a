"""Extended-CTM confusion networks: one bin per line, alternatives inline.

    <wav-id> <speaker> <t_begin> <dur> <word1> <conf1> <word2> <conf2> ...
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from atcdp.errors import ParseError

CONF_MASS_EPS = 1e-3
EPSILON = "<eps>"
_OVERLAP_TOL = 1e-6


def format_number(value: float, raw: str | None = None) -> str:
    """Original decimal string when known, else 3 decimals if that is exact."""
    if raw is not None:
        return raw
    s = f"{value:.3f}"
    if float(s) != value:
        s = repr(float(value))
    return s


@dataclass(frozen=True)
class Alternative:
    word: str
    conf: float
    raw_conf: str | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Bin:
    t_begin: float
    dur: float
    alternatives: tuple[Alternative, ...]
    raw_t_begin: str | None = field(default=None, compare=False, repr=False)
    raw_dur: str | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        alts = tuple(
            a if isinstance(a, Alternative) else Alternative(a[0], float(a[1])) for a in self.alternatives
        )
        object.__setattr__(self, "alternatives", alts)
        if self.dur <= 0:
            raise ValueError(f"bin duration must be positive, got {self.dur}")
        if not alts:
            raise ValueError("bin has no alternatives")
        for a in alts:
            if not (0 < a.conf <= 1):
                raise ValueError(f"confidence {a.conf} for {a.word!r} outside (0, 1]")
        if sum(a.conf for a in alts) > 1 + CONF_MASS_EPS:
            raise ValueError("bin confidences sum to more than one")
        if any(x.conf < y.conf for x, y in zip(alts, alts[1:])):
            raise ValueError("alternatives not sorted by descending confidence")

    @property
    def t_end(self) -> float:
        return self.t_begin + self.dur

    @property
    def best(self) -> Alternative:
        return self.alternatives[0]


@dataclass(frozen=True)
class ConfusionNetwork:
    wav_id: str
    channel: str
    bins: tuple[Bin, ...]

    def __post_init__(self):
        object.__setattr__(self, "bins", tuple(self.bins))
        for a, b in zip(self.bins, self.bins[1:]):
            if b.t_begin < a.t_begin or b.t_begin < a.t_end - _OVERLAP_TOL:
                raise ValueError(f"bins at {a.t_begin} and {b.t_begin} overlap or are out of order")

    def best_words(self, skip_epsilon=True) -> list[str]:
        words = [b.best.word for b in self.bins]
        if skip_epsilon:
            words = [w for w in words if w != EPSILON]
        return words

    def average_best_confidence(self) -> float:
        """The CNET score: mean confidence of the best word per bin."""
        if not self.bins:
            return 0.0
        return sum(b.best.conf for b in self.bins) / len(self.bins)


def _parse_line(line: str, line_no: int):
    fields = line.split()
    if len(fields) < 4:
        raise ParseError("expected <wav-id> <speaker> <t_begin> <dur> ...", line_no)
    wav_id, channel, t_str, d_str = fields[:4]
    rest = fields[4:]
    if len(rest) % 2:
        raise ParseError(f"word {rest[-1]!r} has no confidence", line_no)
    try:
        t_begin, dur = float(t_str), float(d_str)
    except ValueError:
        raise ParseError(f"non-numeric time field in {t_str!r} {d_str!r}", line_no) from None
    alts = []
    for word, c_str in zip(rest[::2], rest[1::2]):
        try:
            conf = float(c_str)
        except ValueError:
            raise ParseError(f"non-numeric confidence {c_str!r} for {word!r}", line_no) from None
        if not (0 < conf <= 1):
            raise ParseError(f"confidence {c_str} for {word!r} outside (0, 1]", line_no)
        alts.append(Alternative(word, conf, c_str))
    # stable sort keeps the original order (and bytes) for already sorted input
    alts.sort(key=lambda a: -a.conf)
    try:
        b = Bin(t_begin, dur, tuple(alts), raw_t_begin=t_str, raw_dur=d_str)
    except ValueError as e:
        raise ParseError(str(e), line_no) from None
    return wav_id, channel, b


def parse_cnet(lines: Iterable[str]) -> list[ConfusionNetwork]:
    """Parse extended-CTM lines into networks grouped by (wav_id, channel).

    Groups appear in order of first occurrence; bins within a group are
    sorted by start time. Blank lines and ``#`` comments are skipped.
    """
    groups: dict[tuple[str, str], list[tuple[int, Bin]]] = {}
    for line_no, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        wav_id, channel, b = _parse_line(line, line_no)
        groups.setdefault((wav_id, channel), []).append((line_no, b))
    nets = []
    for (wav_id, channel), items in groups.items():
        items.sort(key=lambda it: it[1].t_begin)
        for (_, a), (n2, b) in zip(items, items[1:]):
            if b.t_begin < a.t_end - _OVERLAP_TOL:
                raise ParseError(f"bin overlaps the previous bin of {wav_id} {channel}", n2)
        nets.append(ConfusionNetwork(wav_id, channel, tuple(b for _, b in items)))
    return nets


def write_cnet(nets: Iterable[ConfusionNetwork]) -> Iterator[str]:
    """Yield one line per bin (without trailing newline)."""
    for net in nets:
        for b in net.bins:
            parts = [net.wav_id, net.channel, format_number(b.t_begin, b.raw_t_begin),
                     format_number(b.dur, b.raw_dur)]
            for a in b.alternatives:
                parts += [a.word, format_number(a.conf, a.raw_conf)]
            yield " ".join(parts)


def read_cnet_file(path) -> list[ConfusionNetwork]:
    with open(path, encoding="utf-8") as f:
        return parse_cnet(f)


def write_cnet_file(nets, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for line in write_cnet(nets):
            f.write(line + "\n")
