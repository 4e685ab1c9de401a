"""WER, precision/recall/F1, exact-span entity scoring and per-airport statistics."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from atcdp.errors import InvalidInputError
from atcdp.markup import LABELS, check_spans


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Unit-cost Levenshtein distance between two token sequences."""
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j - 1] + (x != y), prev[j] + 1, cur[j - 1] + 1))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    insertions: int
    deletions: int
    reference_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return 100.0 * self.errors / self.reference_words if self.reference_words else 0.0

    def __add__(self, other: "WerBreakdown") -> "WerBreakdown":
        return WerBreakdown(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
            self.reference_words + other.reference_words,
        )


def align(ref: Sequence[str], hyp: Sequence[str]) -> list[tuple[str, str | None, str | None]]:
    """Minimum-edit alignment as (op, ref_word, hyp_word) with op in C/S/D/I.

    Among minimum-edit alignments the one with the most substitutions wins
    (cost is compared as (edits, deletions + insertions)); for fixed edits
    and substitutions the D and I totals are then fully determined. The
    backtrace prefers a diagonal move, then a deletion, then an insertion.
    """
    n, m = len(ref), len(hyp)
    d = [[(0, 0)] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = (i, i)
    for j in range(m + 1):
        d[0][j] = (j, j)

    def diag(i, j):
        e, g = d[i - 1][j - 1]
        return (e + (ref[i - 1] != hyp[j - 1]), g)

    def up(i, j):
        e, g = d[i - 1][j]
        return (e + 1, g + 1)

    def left(i, j):
        e, g = d[i][j - 1]
        return (e + 1, g + 1)

    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i][j] = min(diag(i, j), up(i, j), left(i, j))
    ops = []
    i, j = n, m
    while i or j:
        if i and j and d[i][j] == diag(i, j):
            ops.append(("C" if ref[i - 1] == hyp[j - 1] else "S", ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i and d[i][j] == up(i, j):
            ops.append(("D", ref[i - 1], None))
            i -= 1
        else:
            ops.append(("I", None, hyp[j - 1]))
            j -= 1
    ops.reverse()
    return ops


def wer(ref: Sequence[str], hyp: Sequence[str]) -> WerBreakdown:
    if not ref:
        raise InvalidInputError("empty reference")
    counts = {"S": 0, "I": 0, "D": 0}
    for op, _, _ in align(ref, hyp):
        if op in counts:
            counts[op] += 1
    return WerBreakdown(counts["S"], counts["I"], counts["D"], len(ref))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


class PRF(NamedTuple):
    precision: Fraction
    recall: Fraction
    f1: Fraction
    # True when a zero denominator forced one of the values to 0
    degenerate: bool = False


def prf1(c: ConfusionCounts) -> PRF:
    """Exact precision, recall and F1 (harmonic mean) as fractions."""
    degenerate = False
    if c.tp + c.fp:
        p = Fraction(c.tp, c.tp + c.fp)
    else:
        p, degenerate = Fraction(0), True
    if c.tp + c.fn:
        r = Fraction(c.tp, c.tp + c.fn)
    else:
        r, degenerate = Fraction(0), True
    f1 = 2 * p * r / (p + r) if p + r else Fraction(0)
    return PRF(p, r, f1, degenerate)


def entity_eval(gold: Iterable[Sequence], pred: Iterable[Sequence]) -> dict[str, tuple[ConfusionCounts, PRF]]:
    """Exact-match span scoring per label, summed over aligned segments.

    ``gold`` and ``pred`` are parallel sequences with one span list per
    segment. The result also carries an ``"overall"`` micro-average.
    """
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise InvalidInputError(f"{len(gold)} gold segments but {len(pred)} predicted")
    counts = {label: ConfusionCounts() for label in LABELS}
    for g_spans, p_spans in zip(gold, pred):
        try:
            g_set = {s.key for s in check_spans(g_spans)}
            p_set = {s.key for s in check_spans(p_spans)}
        except ValueError as e:
            raise InvalidInputError(str(e)) from None
        for label in LABELS:
            g = {k for k in g_set if k[2] == label}
            p = {k for k in p_set if k[2] == label}
            counts[label] += ConfusionCounts(len(g & p), len(p - g), len(g - p))
    out = {label: (c, prf1(c)) for label, c in counts.items()}
    total = sum(counts.values(), ConfusionCounts())
    out["overall"] = (total, prf1(total))
    return out


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    """Mean and population standard deviation."""
    if not values:
        return 0.0, 0.0
    mu = math.fsum(values) / len(values)
    var = math.fsum((v - mu) ** 2 for v in values) / len(values)
    return mu, math.sqrt(var)


def render_cell(mean: float, std: float, digits: int = 1) -> str:
    return f"{mean:.{digits}f}/{std:.{digits}f}"


@dataclass(frozen=True)
class AirportStats:
    airport: str
    segments: int
    total_speech: float  # hours
    duration_mean: float
    duration_std: float
    snr_mean: float
    snr_std: float
    lang_mean: float
    lang_std: float
    recordings: int = 0
    group: str = "all"

    def cells(self) -> dict[str, str]:
        return {
            "airport": self.airport,
            "segments": str(self.segments),
            "speech_hours": f"{self.total_speech:.2f}",
            "duration": render_cell(self.duration_mean, self.duration_std, 1),
            "snr": render_cell(self.snr_mean, self.snr_std, 1),
            "lang": render_cell(self.lang_mean, self.lang_std, 2),
        }


def corpus_stats(records, split_language: float | None = None) -> list[AirportStats]:
    """Per-airport mean/std of duration, SNR and language score.

    ``records`` are :class:`atcdp.quality.Record` objects (or anything with
    ``airport``, ``segments`` and ``quality`` attributes). With
    ``split_language`` the records are first split into an ``english`` group
    (score >= threshold) and a ``non_english`` group.
    """
    groups = defaultdict(list)
    for r in records:
        g = "all"
        if split_language is not None:
            g = "english" if r.quality.lid_score >= split_language else "non_english"
        groups[(g, r.airport)].append(r)
    order = {"english": 0, "non_english": 1, "all": 2}
    out = []
    for (g, airport), rs in sorted(groups.items(), key=lambda kv: (order[kv[0][0]], kv[0][1])):
        # sort so float summation order is independent of input order
        rs = sorted(rs, key=lambda r: r.wav_id)
        dur = mean_std([r.quality.audio_len for r in rs])
        snr = mean_std([r.quality.avg_snr for r in rs])
        lang = mean_std([r.quality.lid_score for r in rs])
        out.append(AirportStats(
            airport, sum(r.segments for r in rs), math.fsum(r.quality.speech_len for r in rs) / 3600.0,
            dur[0], dur[1], snr[0], snr[1], lang[0], lang[1], recordings=len(rs), group=g,
        ))
    return out


def stats_report(stats: Sequence[AirportStats]) -> str:
    lines = ["# mean/std per recording; std is the population estimator (divide by n)",
             "group\tairport\trecordings\tsegments\tspeech_hours\tduration_s\tsnr_db\tlang_score"]
    for s in stats:
        c = s.cells()
        lines.append("\t".join([s.group, c["airport"], str(s.recordings), c["segments"],
                                c["speech_hours"], c["duration"], c["snr"], c["lang"]]))
    return "\n".join(lines) + "\n"


def wer_report(per_utt: dict[str, WerBreakdown]) -> str:
    lines = ["utt_id\tN\tS\tD\tI\twer"]
    total = WerBreakdown(0, 0, 0, 0)
    for utt in sorted(per_utt):
        b = per_utt[utt]
        total += b
        lines.append(f"{utt}\t{b.reference_words}\t{b.substitutions}\t{b.deletions}\t{b.insertions}\t{b.wer:.2f}")
    lines.append(f"TOTAL\t{total.reference_words}\t{total.substitutions}\t{total.deletions}\t"
                 f"{total.insertions}\t{total.wer:.2f}")
    return "\n".join(lines) + "\n"


def entity_report(result: dict[str, tuple[ConfusionCounts, PRF]]) -> str:
    lines = ["label\ttp\tfp\tfn\tprecision\trecall\tf1"]
    for label, (c, m) in result.items():
        lines.append(f"{label}\t{c.tp}\t{c.fp}\t{c.fn}\t{float(m.precision):.4f}\t"
                     f"{float(m.recall):.4f}\t{float(m.f1):.4f}")
    return "\n".join(lines) + "\n"
