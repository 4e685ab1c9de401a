"""XML annotation documents: ``<data>`` holding ``<segment>`` elements."""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from atcdp.errors import ParseError
from atcdp.markup import EntitySpan, parse_markup

FLAG_NAMES = ("correct", "correct_transcript", "correct_tagging", "non_english")
UNKNOWN_SPEAKER = "UNK"
_FIELDS = ("start", "end", "speaker", "speaker_label", "text")


def format_seconds(value: float) -> str:
    s = repr(float(value))
    return s[:-2] if s.endswith(".0") else s


@dataclass(frozen=True)
class Flags:
    correct: int = 0
    correct_transcript: int = 0
    correct_tagging: int = 0
    non_english: int = 0

    def __post_init__(self):
        for name in FLAG_NAMES:
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"flag {name} must be 0 or 1")


@dataclass(frozen=True)
class AnnSegment:
    start: float
    end: float
    speaker: str = UNKNOWN_SPEAKER
    speaker_label: str = ""
    text: str = ""
    flags: Flags = field(default_factory=Flags)

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid segment timing [{self.start}, {self.end}]")
        # validates markup as a side effect
        parse_markup(self.text)

    @property
    def tokens(self) -> list[str]:
        return parse_markup(self.text)[0]

    @property
    def spans(self) -> list[EntitySpan]:
        return parse_markup(self.text)[1]

    def span_texts(self) -> list[tuple[str, str]]:
        words, spans = parse_markup(self.text)
        return [(s.label, s.text(words)) for s in spans]


@dataclass(frozen=True)
class AnnotationDoc:
    segments: tuple[AnnSegment, ...] = ()

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if any(b.start < a.start for a, b in zip(segs, segs[1:])):
            raise ValueError("segments not ordered by start time")


def _child_text(elem, name, index):
    child = elem.find(name)
    if child is None:
        raise ParseError(f"missing <{name}>", segment_index=index)
    return child.text or ""


def parse_annotation_xml(document: str | bytes) -> AnnotationDoc:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as e:
        raise ParseError(f"malformed XML: {e}") from None
    if root.tag != "data":
        raise ParseError(f"root element is <{root.tag}>, expected <data>")
    segments = []
    for i, seg in enumerate(root.findall("segment")):
        values = {name: _child_text(seg, name, i) for name in _FIELDS}
        try:
            start, end = float(values["start"]), float(values["end"])
        except ValueError:
            raise ParseError("non-numeric start/end", segment_index=i) from None
        tags = seg.find("tags")
        flags = {}
        if tags is not None:
            for name in FLAG_NAMES:
                el = tags.find(name)
                if el is not None:
                    try:
                        flags[name] = int((el.text or "0").strip())
                    except ValueError:
                        raise ParseError(f"flag <{name}> is not an integer", segment_index=i) from None
        try:
            segments.append(AnnSegment(
                start, end,
                speaker=values["speaker"].strip(),
                speaker_label=values["speaker_label"].strip(),
                text=values["text"].strip(),
                flags=Flags(**flags),
            ))
        except (ValueError, ParseError) as e:
            raise ParseError(str(e), segment_index=i) from None
    try:
        return AnnotationDoc(tuple(segments))
    except ValueError as e:
        raise ParseError(str(e)) from None


def write_annotation_xml(doc: AnnotationDoc) -> str:
    root = ET.Element("data")
    for seg in doc.segments:
        el = ET.SubElement(root, "segment")
        ET.SubElement(el, "start").text = format_seconds(seg.start)
        ET.SubElement(el, "end").text = format_seconds(seg.end)
        ET.SubElement(el, "speaker").text = seg.speaker or UNKNOWN_SPEAKER
        ET.SubElement(el, "speaker_label").text = seg.speaker_label
        ET.SubElement(el, "text").text = seg.text
        tags = ET.SubElement(el, "tags")
        for name in FLAG_NAMES:
            ET.SubElement(tags, name).text = str(getattr(seg.flags, name))
    ET.indent(root, space="        ")
    body = ET.tostring(root, encoding="unicode", short_empty_elements=False)
    return '<?xml version="1.0" encoding="utf-8"?>\n' + body + "\n"


def read_annotation_file(path) -> AnnotationDoc:
    with open(path, "rb") as f:
        return parse_annotation_xml(f.read())
