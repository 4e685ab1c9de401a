"""RTTM speaker segments (10-field ``SPEAKER`` records)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from atcdp.errors import ParseError
from atcdp.formats.cnet import format_number


@dataclass(frozen=True)
class RttmSegment:
    file_id: str
    channel: str
    onset: float
    duration: float
    speaker_name: str

    def __post_init__(self):
        if self.onset < 0 or self.duration <= 0:
            raise ValueError(f"invalid timing onset={self.onset} duration={self.duration}")

    @property
    def end(self) -> float:
        return self.onset + self.duration


def parse_rttm(lines: Iterable[str]) -> list[RttmSegment]:
    out = []
    for line_no, line in enumerate(lines, 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 10:
            raise ParseError(f"expected 10 fields, got {len(fields)}", line_no)
        if fields[0] != "SPEAKER":
            raise ParseError(f"unsupported record type {fields[0]!r}", line_no)
        try:
            onset, duration = float(fields[3]), float(fields[4])
            out.append(RttmSegment(fields[1], fields[2], onset, duration, fields[7]))
        except ValueError as e:
            raise ParseError(str(e), line_no) from None
    return out


def write_rttm(segments: Iterable[RttmSegment]) -> Iterator[str]:
    for s in segments:
        yield (f"SPEAKER {s.file_id} {s.channel} {format_number(s.onset)} "
               f"{format_number(s.duration)} <NA> <NA> {s.speaker_name} <NA> <NA>")


def read_rttm_file(path) -> list[RttmSegment]:
    with open(path, encoding="utf-8") as f:
        return parse_rttm(f)


def speakers_by_file(segments: Iterable[RttmSegment]) -> dict[str, list[RttmSegment]]:
    out: dict[str, list[RttmSegment]] = {}
    for s in segments:
        out.setdefault(s.file_id, []).append(s)
    return out
