import json
import math

import numpy as np
import pytest

from atcdp import signal
from atcdp.formats.cnet import parse_cnet
from atcdp.formats.rttm import parse_rttm
from atcdp.formats.settings import JobSettings
from atcdp.pipeline import (
    PipelineContext,
    RecordingInput,
    RecordingOutcome,
    dataflow_report,
    run_pipeline,
    summarize,
    timestamp_of,
    write_outputs,
)
from atcdp.quality import QualityMetadata, Record, SelectionPolicy
from synth import ENGLISH, bursty, ctm_lines, gate_corpus


def nets_of(lines):
    out = {}
    for net in parse_cnet(lines):
        out.setdefault(net.wav_id, []).append(net)
    return out


def run_gate_corpus(jobs=1, **kw):
    inputs, lines = gate_corpus()
    ctx = PipelineContext(cnets=nets_of(lines), **kw)
    return run_pipeline([RecordingInput(i, waveform=w) for i, w in inputs], ctx=ctx, jobs=jobs)


@pytest.fixture(scope="module")
def gate_run():
    return run_gate_corpus()


def test_empty_input():
    outcomes, rep = run_pipeline([])
    assert outcomes == [] and rep.input_count == rep.processed_count == 0
    assert set(rep.rejected.values()) == {0}
    assert rep.check_conservation()
    text, doc = dataflow_report(rep)
    assert "0.0%" in text
    assert json.loads(doc)["yield_percent"] == {"processed": 0.0, "selected": 0.0}


def test_gate_corpus_counts(gate_run):
    outcomes, rep = gate_run
    assert rep.input_count == 10 and rep.processed_count == 5
    assert {k: v for k, v in rep.rejected.items() if v} == {"too_short": 2, "non_english": 3}
    assert rep.check_conservation()
    for st in rep.stages:
        assert st.items_in == st.items_out + sum(st.rejected.values())


def test_gate_corpus_outcomes(gate_run):
    outcomes, _ = gate_run
    assert [o.reason for o in outcomes[:5]] == ["too_short"] * 2 + ["non_english"] * 3
    for o in outcomes[5:]:
        assert o.processed and o.record.airport == "LKPR"
        assert o.record.quality.wrd_cnt == len(ENGLISH)
        assert o.segments[0]["tokens"][:2] == ["swiss", "two"]
        assert any(s.label == "callsign" for s in o.segments[0]["spans"])


def test_yield_percentages(gate_run):
    _, rep = gate_run
    text, doc = dataflow_report(rep)
    d = json.loads(doc)
    assert d["yield_percent"]["processed"] == 50.0
    assert "eld_gate" in text and "(50.0% of input)" in text


def test_reports_deterministic(gate_run):
    _, rep = gate_run
    _, rep2 = run_gate_corpus()
    assert dataflow_report(rep) == dataflow_report(rep2)


def test_jobs_equal_serial(gate_run):
    outcomes, rep = gate_run
    par_out, par_rep = run_gate_corpus(jobs=4)
    assert dataflow_report(rep) == dataflow_report(par_rep)
    assert [(o.wav_id, o.state, o.snr) for o in outcomes] == [(o.wav_id, o.state, o.snr) for o in par_out]


def test_io_error(tmp_path):
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"not a wav file")
    outcomes, rep = run_pipeline([RecordingInput("LKPR_x", path=bad),
                                  RecordingInput("LKPR_y", path=tmp_path / "missing.wav")])
    assert rep.rejected["io_error"] == 2 and rep.check_conservation()


def test_wav_path_input(tmp_path):
    rng = np.random.default_rng(3)
    p = tmp_path / "a.wav"
    bursty(4.0, [(1.0, 1.5)], rng).to_wav(p)
    outcomes, rep = run_pipeline([RecordingInput("LSZH_a", path=p)])
    assert outcomes[0].processed and outcomes[0].flags == ["no_cnet"]


def test_gate_isolation():
    rng = np.random.default_rng(5)
    # pure noise scores near the bottom of the table
    noisy = signal.Waveform(rng.normal(size=32000) * 0.1, 16000)
    items = [RecordingInput("LKPR_n", waveform=noisy)]
    _, strict = run_pipeline(items, settings=JobSettings(min_snr=30.0))
    assert strict.rejected["low_snr"] == 1
    _, open_ = run_pipeline(items, settings=JobSettings(min_snr=-math.inf))
    assert open_.rejected["low_snr"] == 0 and open_.processed_count == 1


def test_english_gate_disabled():
    _, rep = run_gate_corpus(settings=JobSettings(min_english_score=0.0))
    assert rep.rejected["non_english"] == 0 and rep.processed_count == 8


def test_too_long():
    rng = np.random.default_rng(0)
    w = bursty(3.0, [(0.5, 1.0)], rng)
    _, rep = run_pipeline([RecordingInput("LKPR_l", waveform=w)],
                          settings=JobSettings(max_audio_len=2.0))
    assert rep.rejected["too_long"] == 1


def test_external_eld_scores():
    inputs, lines = gate_corpus()
    scores = {i: 0.9 for i, _ in inputs}
    ctx = PipelineContext(cnets=nets_of(lines), eld_scores=scores)
    outcomes, rep = run_pipeline([RecordingInput(i, waveform=w) for i, w in inputs], ctx=ctx)
    assert rep.rejected["non_english"] == 0
    assert all(o.english == 0.9 for o in outcomes if o.processed)


def test_rttm_speakers():
    rng = np.random.default_rng(1)
    wid = "LKPR_Tower_134_560MHz_20211223_154505"
    w = bursty(4.0, [(0.1, 1.2), (2.4, 3.0)], rng)
    rttm = parse_rttm([
        f"SPEAKER {wid} 1 0.00 1.30 <NA> <NA> atco <NA> <NA>",
        f"SPEAKER {wid} 1 1.30 2.00 <NA> <NA> pilot <NA> <NA>",
    ])
    ctx = PipelineContext(cnets=nets_of(ctm_lines(wid, ENGLISH)), rttm={wid: rttm})
    (o,), _ = run_pipeline([RecordingInput(wid, waveform=w)], ctx=ctx)
    assert o.record.quality.num_spk == 2 and "diarized" in o.flags
    assert [s["speaker"] for s in o.segments] == ["atco", "pilot"]
    assert sum(len(s["tokens"]) for s in o.segments) == len(ENGLISH)


def test_surveillance_matching():
    surv = json.dumps([{"icao_code": "SWR2689"}, {"icao_code": "RYR89P"}])
    outcomes, _ = run_gate_corpus(surveillance=surv)
    done = [o for o in outcomes if o.processed]
    assert all(o.callsigns[0]["icao_code"] == "SWR2689" for o in done)
    assert all(o.callsigns[0]["distance"] == 0 for o in done)
    assert ["swiss", "two", "six", "eight", "nine"] in done[0].ngrams


def test_timestamp_of():
    assert timestamp_of("LKPR_Tower_134_560MHz_20211223_154543") == 1640274343.0
    assert timestamp_of("nodate") is None


def pool_outcomes(n=260, speech=360.0):
    out = []
    for i in range(n):
        q = QualityMetadata(10 + i % 20, 1, speech, speech * 1.2, 0.6 + (i % 7) * 0.05, 0.9, 20)
        wid = f"LSZH_{i:04d}"
        out.append(RecordingOutcome(wid, "processed", duration=speech * 1.2, airport="LSZH",
                                    record=Record(wid, q)))
    return out


def test_day_pool_selection():
    outcomes = pool_outcomes()
    rep, filtered, chosen = summarize(outcomes, SelectionPolicy(min_eld=0.5), annotation_hours=0.6)
    assert math.isclose(sum(o.record.quality.speech_len for o in outcomes) / 3600, 26.0)
    assert rep.selected_for_annotation_count == 6
    assert rep.selected_hours == pytest.approx(0.6)
    assert rep.check_conservation()
    scores = [r.score for r in chosen]
    best_rest = max(r.score for r in filtered.kept if r not in chosen)
    assert scores == sorted(scores, reverse=True) and min(scores) >= best_rest


def test_selection_stage_accounting():
    rep, _, _ = summarize(pool_outcomes(20), SelectionPolicy(min_eld=0.8))
    sel = rep.stages[-1]
    assert sel.name == "selection" and sel.items_in == 20
    assert rep.selection_rejected == {"non_english": sel.rejected["not_selected"]}


def test_write_outputs(tmp_path, gate_run):
    outcomes, rep = gate_run
    write_outputs(tmp_path, outcomes, rep)
    names = {p.name for p in tmp_path.iterdir()}
    assert {"report.txt", "report.json", "outcomes.tsv", "quality.jsonl", "selection.tsv",
            "annotations", "transcripts.txt", "figures"} <= names
    assert len(list((tmp_path / "annotations").iterdir())) == 5
    assert (tmp_path / "figures" / "dataflow.png").stat().st_size > 0
    assert len((tmp_path / "outcomes.tsv").read_text().splitlines()) == 11
    first = (tmp_path / "report.json").read_bytes()
    write_outputs(tmp_path, outcomes, rep, figures=False)
    assert (tmp_path / "report.json").read_bytes() == first


def test_annotation_output_parses(tmp_path, gate_run):
    from atcdp.formats.annotation import parse_annotation_xml

    outcomes, rep = gate_run
    write_outputs(tmp_path, outcomes, rep, figures=False)
    doc = parse_annotation_xml(next((tmp_path / "annotations").iterdir()).read_text())
    assert doc.segments[0].text.startswith("[#callsign]swiss")
