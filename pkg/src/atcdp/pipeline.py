"""Batch orchestration of all stages with dataflow-yield accounting.

Stage order per recording::

    read -> length gate -> segmentation -> gain -> SNR gate -> diarization
         -> CNET ingestion -> ELD gate -> textnorm -> tagging
         -> callsign matching -> quality scoring

followed by one corpus-level selection step. Recordings are independent;
the report is a deterministic merge of the per-recording outcomes sorted by
``wav_id``.
"""

from __future__ import annotations

import calendar
import json
import logging
import math
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from atcdp import signal
from atcdp.callsign import (
    ICAO_WORDS,
    DesignatorTable,
    SurveillanceContext,
    context_ngrams,
    default_designators,
    expand_callsign,
    match_callsign,
)
from atcdp.eld import EnglishScorer, ExternalScores, LexicalScorer
from atcdp.errors import InvalidInputError
from atcdp.formats.annotation import AnnotationDoc, AnnSegment, Flags, write_annotation_xml
from atcdp.formats.cnet import ConfusionNetwork
from atcdp.formats.rttm import RttmSegment
from atcdp.formats.settings import JobSettings
from atcdp.lexicon import Lexicon, build_lexicon, merge
from atcdp.markup import render_markup
from atcdp.quality import (
    FilterResult,
    QualityMetadata,
    Record,
    SelectionPolicy,
    airport_of,
    filter_recordings,
    rank_for_annotation,
    selection_report,
)
from atcdp.tagger import TagGrammar, classify_speaker_role, default_grammar, tag_entities
from atcdp.textnorm import RuleTable, default_rules, normalize_text

log = logging.getLogger(__name__)

STAGES = (
    ("read", ("io_error",)),
    ("length_gate", ("too_short", "too_long")),
    ("snr_gate", ("low_snr",)),
    ("eld_gate", ("non_english",)),
)
REJECT_REASONS = tuple(r for _, reasons in STAGES for r in reasons)

_TS_RE = re.compile(r"(\d{8})_(\d{6})")


def base_lexicon(rules: RuleTable | None = None, designators=None, grammar=None) -> Lexicon:
    """Vocabulary for the reference language scorer built from the bundled resources."""
    rules = rules or default_rules()
    designators = default_designators() if designators is None else designators
    grammar = grammar or default_grammar()
    words = resources.files("atcdp").joinpath("data/atc_words.txt").read_text(encoding="utf-8")
    manual = [w for w in words.split() if not w.startswith("#")]
    manual += [t for r in rules for t in r.replacement]
    manual += sorted(ICAO_WORDS) + sorted(grammar.value_word)
    for section in (grammar.command, grammar.value_prefix, grammar.value_suffix, grammar.atco, grammar.pilot):
        manual += [t for p in section for t in p]
    return build_lexicon(extra={
        "designators": sorted(designators.telephony_tokens()),
        "manual": manual,
    })


def timestamp_of(wav_id: str) -> float | None:
    """Epoch seconds (UTC) from a ``YYYYMMDD_HHMMSS`` part of the id."""
    m = _TS_RE.search(wav_id)
    if not m:
        return None
    try:
        return float(calendar.timegm(time.strptime(m.group(1) + m.group(2), "%Y%m%d%H%M%S")))
    except ValueError:
        return None


@dataclass(frozen=True)
class RecordingInput:
    wav_id: str
    path: Path | None = None
    waveform: signal.Waveform | None = None


@dataclass
class PipelineContext:
    settings: JobSettings = field(default_factory=JobSettings)
    segmentation: signal.SegmentationConfig = field(default_factory=signal.SegmentationConfig)
    gain: signal.GainConfig = field(default_factory=signal.GainConfig)
    cnets: Mapping[str, Sequence[ConfusionNetwork]] = field(default_factory=dict)
    rttm: Mapping[str, Sequence[RttmSegment]] = field(default_factory=dict)
    rules: RuleTable | None = None
    designators: DesignatorTable | None = None
    grammar: TagGrammar | None = None
    lexicon: Lexicon | None = None
    eld_scores: Mapping[str, float] | None = None
    surveillance: str | None = None  # raw JSON document, filtered per recording

    def __post_init__(self):
        self.rules = self.rules or default_rules()
        self.designators = default_designators() if self.designators is None else self.designators
        self.grammar = self.grammar or default_grammar()
        if self.lexicon is None:
            self.lexicon = base_lexicon(self.rules, self.designators, self.grammar)
        scorer: EnglishScorer = LexicalScorer(self.lexicon)
        if self.eld_scores:
            scorer = ExternalScores(self.eld_scores, fallback=scorer)
        self.scorer = scorer


@dataclass
class RecordingOutcome:
    wav_id: str
    state: str  # "processed" or "rejected"
    reason: str = ""
    duration: float = 0.0
    airport: str = "unknown"
    flags: list[str] = field(default_factory=list)
    snr: float | None = None
    english: float | None = None
    record: Record | None = None
    segments: list[dict] = field(default_factory=list)
    callsigns: list[dict] = field(default_factory=list)
    ngrams: list[list[str]] = field(default_factory=list)

    @property
    def processed(self) -> bool:
        return self.state == "processed"


def _reject(outcome: RecordingOutcome, reason: str) -> RecordingOutcome:
    outcome.state = "rejected"
    outcome.reason = reason
    return outcome


def _measure_snr(w: signal.Waveform, segments) -> float | None:
    x = signal.speech_samples(w, segments)
    if x.size < signal.WADA_MIN_SAMPLES:
        x = w.samples
    try:
        return signal.estimate_wada_snr(x).value
    except InvalidInputError:
        return None


def _annotation_segments(nets, rttm, ctx: PipelineContext):
    """Group best words into per-speaker segments (RTTM turns when available)."""
    bins = sorted(((b, net.channel) for net in nets for b in net.bins), key=lambda bc: bc[0].t_begin)
    groups = []
    if rttm:
        for turn in sorted(rttm, key=lambda s: (s.onset, s.speaker_name)):
            words = [b for b, _ in bins if turn.onset <= b.t_begin + b.dur / 2 < turn.end]
            groups.append((turn.onset, turn.end, turn.speaker_name, words))
    else:
        for net in nets:
            if net.bins:
                groups.append((net.bins[0].t_begin, net.bins[-1].t_end, net.channel, list(net.bins)))
    out = []
    for start, end, speaker, words in groups:
        raw = " ".join(b.best.word for b in words if b.best.word != "<eps>")
        text = normalize_text(raw, ctx.rules, digits=True)
        tokens = text.split()
        spans = tag_entities(tokens, ctx.designators, ctx.grammar)
        role = classify_speaker_role(tokens, ctx.grammar)
        out.append({
            "start": start, "end": max(end, start + 1e-3), "speaker": speaker,
            "role": role.value, "tokens": tokens, "spans": spans,
            "text": render_markup(tokens, spans),
        })
    return out


def process_recording(item: RecordingInput, ctx: PipelineContext) -> RecordingOutcome:
    """Run one recording through every per-recording stage; never raises on bad data."""
    out = RecordingOutcome(item.wav_id, "processed", airport=airport_of(item.wav_id))
    try:
        w = item.waveform if item.waveform is not None else signal.Waveform.from_wav(item.path)
    except (OSError, EOFError, ValueError) as e:
        log.warning("cannot read %s: %r", item.wav_id, e)
        return _reject(out, "io_error")
    out.duration = w.duration
    s = ctx.settings
    if w.duration < s.min_audio_len:
        return _reject(out, "too_short")
    if w.duration > s.max_audio_len:
        return _reject(out, "too_long")

    segments = signal.segment_by_energy(w, ctx.segmentation)
    w = signal.apply_segment_gain(w, ctx.gain)
    out.snr = _measure_snr(w, segments)
    if out.snr is None or out.snr < s.min_snr:
        return _reject(out, "low_snr")

    turns = ctx.rttm.get(item.wav_id, ())
    num_spk = len({t.speaker_name for t in turns}) if turns else 1
    if turns:
        out.flags.append("diarized")

    nets = list(ctx.cnets.get(item.wav_id, ()))
    nets = [n for n in nets if n.bins]
    speech_len = sum(seg.duration for seg in segments)
    if not nets:
        out.flags.append("no_cnet")
        q = QualityMetadata(out.snr, num_spk, speech_len, w.duration, 0.0, 0.0, 0)
        out.record = Record(item.wav_id, q, out.airport, max(1, len(turns) or len(segments)))
        return out

    n_bins = sum(len(n.bins) for n in nets)
    if item.wav_id in (ctx.eld_scores or {}):
        english = float(ctx.eld_scores[item.wav_id])
    else:
        english = sum(ctx.scorer.score(n).value * len(n.bins) for n in nets) / n_bins
    out.english = english
    if english < s.min_english_score:
        return _reject(out, "non_english")

    out.segments = _annotation_segments(nets, turns, ctx)
    conf = sum(b.best.conf for n in nets for b in n.bins) / n_bins
    wrd_cnt = sum(len(n.best_words()) for n in nets)

    if ctx.surveillance:
        from atcdp.callsign import load_surveillance

        sctx = load_surveillance(ctx.surveillance, timestamp_of(item.wav_id), ctx.designators)
        if sctx.callsigns:
            out.ngrams = [list(g) for g in context_ngrams(sctx, ctx.designators, ctx.rules)]
            for seg in out.segments:
                for span in seg["spans"]:
                    if span.label != "callsign":
                        continue
                    words = seg["tokens"][span.start_token : span.end_token]
                    ranked = match_callsign(words, sctx, ctx.designators, ctx.rules)
                    out.callsigns.append({
                        "span": " ".join(words), "icao_code": ranked[0].icao_code,
                        "distance": ranked[0].distance,
                    })

    q = QualityMetadata(out.snr, num_spk, speech_len, w.duration, english, conf, wrd_cnt)
    out.record = Record(item.wav_id, q, out.airport, max(1, len(out.segments)))
    return out


@dataclass
class StageCount:
    name: str
    items_in: int
    items_out: int
    rejected: dict[str, int]


@dataclass
class PipelineReport:
    input_count: int = 0
    input_hours: float = 0.0
    rejected: dict[str, int] = field(default_factory=lambda: {r: 0 for r in REJECT_REASONS})
    processed_count: int = 0
    processed_hours: float = 0.0
    flagged: dict[str, int] = field(default_factory=dict)
    selection_rejected: dict[str, int] = field(default_factory=dict)
    selected_for_annotation_count: int = 0
    selected_hours: float = 0.0
    selected_ids: list[str] = field(default_factory=list)
    seed: int = 0
    stages: list[StageCount] = field(default_factory=list)

    def check_conservation(self) -> bool:
        if self.input_count != self.processed_count + sum(self.rejected.values()):
            return False
        prev = self.input_count
        for st in self.stages:
            if st.items_in != prev or st.items_in != st.items_out + sum(st.rejected.values()):
                return False
            prev = st.items_out
        return prev >= self.selected_for_annotation_count

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(outcomes: Sequence[RecordingOutcome], policy: SelectionPolicy | None = None,
              annotation_hours: float | None = None) -> tuple[PipelineReport, FilterResult, list]:
    """Merge per-recording outcomes into a report and run corpus-level selection."""
    policy = policy or SelectionPolicy()
    outcomes = sorted(outcomes, key=lambda o: o.wav_id)
    rep = PipelineReport(seed=policy.seed)
    rep.input_count = len(outcomes)
    rep.input_hours = math.fsum(o.duration for o in outcomes) / 3600.0
    for o in outcomes:
        if o.processed:
            rep.processed_count += 1
            for fl in o.flags:
                rep.flagged[fl] = rep.flagged.get(fl, 0) + 1
        else:
            rep.rejected[o.reason] = rep.rejected.get(o.reason, 0) + 1
    rep.processed_hours = math.fsum(o.duration for o in outcomes if o.processed) / 3600.0
    rep.flagged = dict(sorted(rep.flagged.items()))

    remaining = rep.input_count
    for name, reasons in STAGES:
        rej = {r: rep.rejected.get(r, 0) for r in reasons}
        out_n = remaining - sum(rej.values())
        rep.stages.append(StageCount(name, remaining, out_n, rej))
        remaining = out_n

    records = [o.record for o in outcomes if o.processed and o.record is not None]
    filtered = filter_recordings(records, policy)
    for _, reasons in filtered.rejected:
        for r in reasons:
            rep.selection_rejected[r] = rep.selection_rejected.get(r, 0) + 1
    rep.selection_rejected = dict(sorted(rep.selection_rejected.items()))
    if annotation_hours is not None:
        chosen = [r for r, _ in rank_for_annotation(filtered.kept, annotation_hours)]
    else:
        chosen = sorted(filtered.kept, key=lambda r: (-r.score, r.wav_id))
    rep.stages.append(StageCount("selection", remaining, len(chosen),
                                 {"not_selected": remaining - len(chosen)}))
    rep.selected_for_annotation_count = len(chosen)
    rep.selected_hours = math.fsum(r.quality.speech_len for r in chosen) / 3600.0
    rep.selected_ids = [r.wav_id for r in chosen]
    return rep, filtered, chosen


def run_pipeline(recordings: Sequence[RecordingInput], settings: JobSettings | None = None,
                 policy: SelectionPolicy | None = None, ctx: PipelineContext | None = None,
                 annotation_hours: float | None = None, jobs: int = 1):
    """Process every recording and return ``(outcomes, report)``.

    ``settings`` overrides the gate thresholds of ``ctx``. Outcomes are
    sorted by wav_id whatever the completion order of the workers.
    """
    ctx = ctx or PipelineContext()
    if settings is not None:
        ctx.settings = settings
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda r: process_recording(r, ctx), recordings))
    else:
        outcomes = [process_recording(r, ctx) for r in recordings]
    outcomes.sort(key=lambda o: o.wav_id)
    report, _, _ = summarize(outcomes, policy, annotation_hours)
    return outcomes, report


def _pct(n: float, d: float) -> str:
    return f"{100.0 * n / d:.1f}%" if d else "0.0%"


def dataflow_report(r: PipelineReport) -> tuple[str, str]:
    """Human-readable text and machine-readable JSON renderings of a report."""
    lines = [
        "dataflow yield",
        f"input recordings      {r.input_count:8d}  {r.input_hours:10.3f} h",
    ]
    for st in r.stages:
        rej = ", ".join(f"{k}={v}" for k, v in st.rejected.items())
        lines.append(f"  {st.name:<20}in {st.items_in:6d}  out {st.items_out:6d}  "
                     f"({_pct(st.items_out, r.input_count)} of input)  rejected: {rej}")
    lines += [
        f"processed             {r.processed_count:8d}  {r.processed_hours:10.3f} h  "
        f"({_pct(r.processed_count, r.input_count)})",
        f"selected              {r.selected_for_annotation_count:8d}  {r.selected_hours:10.3f} h  "
        f"({_pct(r.selected_for_annotation_count, r.input_count)})",
        f"flags                 {json.dumps(r.flagged, sort_keys=True)}",
        f"seed                  {r.seed}",
    ]
    text = "\n".join(lines) + "\n"
    doc = r.to_dict()
    doc["yield_percent"] = {
        "processed": round(100.0 * r.processed_count / r.input_count, 4) if r.input_count else 0.0,
        "selected": round(100.0 * r.selected_for_annotation_count / r.input_count, 4) if r.input_count else 0.0,
    }
    return text, json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_outputs(out_dir, outcomes: Sequence[RecordingOutcome], report: PipelineReport,
                  policy: SelectionPolicy | None = None, figures: bool = True) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text, doc = dataflow_report(report)
    (out / "report.txt").write_text(text)
    (out / "report.json").write_text(doc)

    lines = ["wav_id\tstate\treason\tflags\tduration\tsnr\tenglish"]
    for o in outcomes:
        lines.append("\t".join([
            o.wav_id, o.state, o.reason, ",".join(o.flags), f"{o.duration:.3f}",
            "" if o.snr is None else f"{o.snr:.2f}", "" if o.english is None else f"{o.english:.4f}",
        ]))
    (out / "outcomes.tsv").write_text("\n".join(lines) + "\n")

    records = [o.record for o in outcomes if o.record is not None]
    with open(out / "quality.jsonl", "w", encoding="utf-8") as f:
        for r in records:
            d = r.to_dict()
            d["score"] = round(r.score, 6)
            f.write(json.dumps(d, sort_keys=True) + "\n")
    sel = filter_recordings(records, policy or SelectionPolicy())
    (out / "selection.tsv").write_text(selection_report(records, sel))

    ann_dir = out / "annotations"
    ann_dir.mkdir(exist_ok=True)
    for o in outcomes:
        if not o.segments:
            continue
        segs = tuple(
            AnnSegment(s["start"], s["end"], s["speaker"], s["role"], s["text"], Flags())
            for s in o.segments
        )
        (ann_dir / f"{o.wav_id}.xml").write_text(write_annotation_xml(AnnotationDoc(segs)), encoding="utf-8")
        if o.ngrams:
            ng_dir = out / "ngrams"
            ng_dir.mkdir(exist_ok=True)
            (ng_dir / f"{o.wav_id}.txt").write_text("".join(" ".join(g) + "\n" for g in o.ngrams))

    with open(out / "transcripts.txt", "w", encoding="utf-8") as f:
        for o in outcomes:
            if o.segments:
                f.write(o.wav_id + " " + " ".join(" ".join(s["tokens"]) for s in o.segments) + "\n")
    if any(o.callsigns for o in outcomes):
        rows = ["wav_id\tspan\ticao_code\tdistance"]
        for o in outcomes:
            rows += [f"{o.wav_id}\t{c['span']}\t{c['icao_code']}\t{c['distance']}" for c in o.callsigns]
        (out / "callsigns.tsv").write_text("\n".join(rows) + "\n")

    if figures:
        from atcdp import plotting

        fig_dir = out / "figures"
        plotting.plot_dataflow(report, fig_dir / "dataflow.png")
        if records:
            plotting.plot_distributions(records, fig_dir / "distributions.png")
