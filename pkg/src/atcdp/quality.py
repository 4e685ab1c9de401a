"""Per-recording quality score, threshold filtering and annotation ranking."""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Iterable, Sequence

from atcdp.errors import InvalidInputError, ValidationError

E = math.e

RANGES = {
    "avg_snr": (0.0, 40.0),
    "num_spk": (1, 10),
    "lid_score": (0.0, 1.0),
    "avg_word_conf": (0.0, 1.0),
    "wrd_cnt": (0, 150),
}


@dataclass(frozen=True)
class QualityMetadata:
    avg_snr: float = 0.0
    num_spk: int = 1
    speech_len: float = 0.0
    audio_len: float = 1.0
    lid_score: float = 0.0
    avg_word_conf: float = 0.0
    wrd_cnt: int = 0

    def clamped(self) -> "QualityMetadata":
        """Copy with every field inside its documented range."""
        values = {}
        for name, (lo, hi) in RANGES.items():
            values[name] = min(max(getattr(self, name), lo), hi)
        values["speech_len"] = min(max(self.speech_len, 0.0), max(self.audio_len, 0.0))
        return replace(self, **values)

    @property
    def speech_fraction(self) -> float:
        return self.speech_len / self.audio_len


def quality_terms(m: QualityMetadata, clamp: bool = True) -> dict[str, float]:
    """The six additive terms of :func:`quality_score`, keyed by field."""
    if m.audio_len <= 0:
        raise InvalidInputError("audio_len must be positive")
    if clamp:
        m = m.clamped()
    return {
        "avg_snr": math.log(m.avg_snr + E),
        "num_spk": math.log(m.num_spk + E),
        "speech_ratio": math.log(m.speech_len / m.audio_len + E),
        "lid_score": m.lid_score * 3,
        "avg_word_conf": m.avg_word_conf * 3,
        "wrd_cnt": math.log(m.wrd_cnt + E),
    }


def quality_score(m: QualityMetadata, clamp: bool = True) -> float:
    """ln(snr+e) + ln(spk+e) + ln(speech/audio+e) + 3 lid + 3 conf + ln(words+e)."""
    return math.fsum(quality_terms(m, clamp).values())


@dataclass(frozen=True)
class Record:
    wav_id: str
    quality: QualityMetadata
    airport: str = ""  # derived from wav_id when empty
    segments: int = 1

    def __post_init__(self):
        if not self.airport:
            object.__setattr__(self, "airport", airport_of(self.wav_id))

    @property
    def score(self) -> float:
        return quality_score(self.quality)

    def to_dict(self) -> dict:
        d = {"wav_id": self.wav_id, "airport": self.airport, "segments": self.segments}
        d.update(asdict(self.quality))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Record":
        q = {f.name: d[f.name] for f in fields(QualityMetadata) if f.name in d}
        if "wav_id" not in d:
            raise InvalidInputError("metadata record lacks wav_id")
        return cls(str(d["wav_id"]), QualityMetadata(**q), d.get("airport", ""),
                   int(d.get("segments", 1)))


def airport_of(wav_id: str) -> str:
    """ICAO location prefix of ids like ``LKPR_Tower_134_560MHz_20211223_154543``."""
    head = wav_id.split("_", 1)[0]
    return head if len(head) == 4 and head.isalpha() and head.isupper() else "unknown"


def read_records(path) -> list[Record]:
    """Read a JSON list or JSON-lines file of metadata records."""
    with open(path, encoding="utf-8") as f:
        text = f.read()
    stripped = text.lstrip()
    if stripped.startswith("["):
        items = json.loads(text)
    else:
        items = [json.loads(line) for line in text.splitlines() if line.strip()]
    return [Record.from_dict(d) for d in items]


def write_records(records: Iterable[Record], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            f.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


@dataclass(frozen=True)
class SelectionPolicy:
    """Thresholds are strict lower bounds; ``None`` disables a check."""

    min_eld: float | None = None
    min_snr: float | None = None
    min_cnet: float | None = None
    random_target_hours: float | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("min_eld", "min_cnet"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} {v} outside [0, 1]")
        if self.random_target_hours is not None and self.random_target_hours < 0:
            raise ValidationError("random_target_hours must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionPolicy":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown policy keys: {sorted(unknown)}")
        return cls(**d)


# Data-selection rows: the English filter, the low-confidence filter and the SNR filter
SELECTION_PRESETS = {
    "remove_non_english": SelectionPolicy(min_eld=0.5),
    "remove_low_confidence": SelectionPolicy(min_eld=0.7, min_snr=0.0, min_cnet=0.8),
    "remove_low_snr": SelectionPolicy(min_eld=0.5, min_snr=16.0),
}


def read_policy(path) -> SelectionPolicy:
    with open(path, encoding="utf-8") as f:
        return SelectionPolicy.from_dict(json.load(f))


def rejection_reasons(m: QualityMetadata, p: SelectionPolicy) -> tuple[str, ...]:
    reasons = []
    if p.min_eld is not None and not m.lid_score > p.min_eld:
        reasons.append("non_english")
    if p.min_snr is not None and not m.avg_snr > p.min_snr:
        reasons.append("low_snr")
    if p.min_cnet is not None and not m.avg_word_conf > p.min_cnet:
        reasons.append("low_confidence")
    return tuple(reasons)


@dataclass
class FilterResult:
    kept: list[Record] = field(default_factory=list)
    rejected: list[tuple[Record, tuple[str, ...]]] = field(default_factory=list)


def filter_recordings(records: Sequence[Record], p: SelectionPolicy) -> FilterResult:
    """Split records into kept and rejected (with reasons).

    With ``random_target_hours`` the passing records are shuffled with the
    policy seed and taken whole while their speech stays within the target;
    the rest are rejected as ``not_sampled``.
    """
    out = FilterResult()
    passing = []
    for r in records:
        reasons = rejection_reasons(r.quality, p)
        if reasons:
            out.rejected.append((r, reasons))
        else:
            passing.append(r)
    if p.random_target_hours is None:
        out.kept = passing
        return out
    pool = sorted(passing, key=lambda r: r.wav_id)
    random.Random(p.seed).shuffle(pool)
    budget = p.random_target_hours * 3600.0
    used = 0.0
    chosen = set()
    for r in pool:
        if used + r.quality.speech_len <= budget + 1e-9:
            used += r.quality.speech_len
            chosen.add(r.wav_id)
    for r in passing:
        if r.wav_id in chosen:
            out.kept.append(r)
        else:
            out.rejected.append((r, ("not_sampled",)))
    return out


def rank_for_annotation(records: Sequence[Record], top_hours: float) -> list[tuple[Record, float]]:
    """Highest quality first; the longest prefix whose speech fits in ``top_hours``."""
    scored = sorted(((r, r.score) for r in records), key=lambda rs: (-rs[1], rs[0].wav_id))
    budget = top_hours * 3600.0
    used = 0.0
    out = []
    for r, s in scored:
        if used + r.quality.speech_len > budget + 1e-9:
            break
        used += r.quality.speech_len
        out.append((r, s))
    return out


def selection_report(records: Sequence[Record], result: FilterResult) -> str:
    """TSV ``wav_id score decision reason``, one line per input record, in input order."""
    decisions = {r.wav_id: ("keep", "") for r in result.kept}
    for r, reasons in result.rejected:
        decisions[r.wav_id] = ("reject", ",".join(reasons))
    lines = ["wav_id\tscore\tdecision\treason"]
    for r in records:
        d, reason = decisions[r.wav_id]
        lines.append(f"{r.wav_id}\t{r.score:.4f}\t{d}\t{reason}")
    return "\n".join(lines) + "\n"
