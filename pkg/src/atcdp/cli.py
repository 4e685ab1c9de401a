"""Command-line entry point: batch processing plus per-stage tools."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

from atcdp.errors import ParseError, ValidationError

log = logging.getLogger("atcdp")

ENV_PREFIX = "ATCDP_"


def _read_lines(path):
    if path in (None, "-"):
        return sys.stdin.read().splitlines()
    with open(path, encoding="utf-8") as f:
        return f.read().splitlines()


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _env(args, name, default=None):
    """Command-line value, else ``ATCDP_<NAME>``, else the default."""
    v = getattr(args, name, None)
    if v is not None:
        return v
    return os.environ.get(ENV_PREFIX + name.upper(), default)


def _rules(args):
    from atcdp.textnorm import default_rules, read_rules

    path = _env(args, "rules")
    return read_rules(path) if path else default_rules()


def _designators(args, rules=None):
    from atcdp.callsign import default_designators, read_designators

    path = _env(args, "designators")
    return read_designators(path, rules) if path else default_designators()


def _grammar(args):
    from atcdp.tagger import default_grammar, read_grammar

    path = getattr(args, "grammar", None)
    return read_grammar(path) if path else default_grammar()


def _read_config(path):
    """Split a settings document into job settings and signal stage configs."""
    from atcdp import signal
    from atcdp.formats.settings import JobSettings, parse_job_settings

    seg, gain = signal.SegmentationConfig(), signal.GainConfig()
    if not path:
        return JobSettings(), seg, gain
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict):
        raise ValidationError("settings document must be a JSON object")
    for key, cls in (("segmentation", signal.SegmentationConfig), ("gain", signal.GainConfig)):
        sub = doc.pop(key, None)
        if sub is None:
            continue
        known = {f.name for f in fields(cls)}
        if not isinstance(sub, dict) or set(sub) - known:
            raise ValidationError(f"bad {key} section; allowed keys {sorted(known)}")
        if key == "segmentation":
            seg = replace(seg, **sub)
        else:
            gain = replace(gain, **sub)
    return parse_job_settings(doc), seg, gain


def cmd_process(args) -> int:
    from atcdp.eld import read_scores
    from atcdp.formats.cnet import read_cnet_file
    from atcdp.formats.rttm import read_rttm_file, speakers_by_file
    from atcdp.formats.settings import apply_env_overrides
    from atcdp.lexicon import read_lexicon
    from atcdp.pipeline import PipelineContext, RecordingInput, run_pipeline, write_outputs
    from atcdp.quality import SelectionPolicy, read_policy

    settings, seg, gain = _read_config(_env(args, "settings"))
    settings = apply_env_overrides(settings)
    policy = read_policy(_env(args, "policy")) if _env(args, "policy") else SelectionPolicy()
    seed = _env(args, "seed")
    if seed is not None:
        policy = replace(policy, seed=int(seed))

    cnets = {}
    for path in args.cnet or ():
        for net in read_cnet_file(path):
            cnets.setdefault(net.wav_id, []).append(net)
    rttm = {}
    for path in args.rttm or ():
        for k, v in speakers_by_file(read_rttm_file(path)).items():
            rttm.setdefault(k, []).extend(v)

    rules = _rules(args)
    ctx = PipelineContext(
        settings=settings, segmentation=seg, gain=gain, cnets=cnets, rttm=rttm,
        rules=rules, designators=_designators(args, rules), grammar=_grammar(args),
        lexicon=read_lexicon(args.lexicon) if args.lexicon else None,
        eld_scores=read_scores(args.eld_scores) if args.eld_scores else None,
        surveillance=Path(args.surveillance).read_text(encoding="utf-8") if args.surveillance else None,
    )
    audio_dir = Path(_env(args, "audio_dir"))
    if not audio_dir.is_dir():
        raise ValidationError(f"audio directory {audio_dir} does not exist")
    recordings = [RecordingInput(p.stem, p) for p in sorted(audio_dir.glob(f"*.{settings.audio_format}"))]
    jobs = int(_env(args, "jobs", 1))
    outcomes, report = run_pipeline(recordings, policy=policy, ctx=ctx,
                                    annotation_hours=args.annotation_hours, jobs=jobs)
    write_outputs(args.out, outcomes, report, policy, figures=not args.no_figures)
    log.info("processed %d of %d recordings, %d selected", report.processed_count,
             report.input_count, report.selected_for_annotation_count)
    return 2 if report.rejected.get("io_error") else 0


def cmd_normalize(args) -> int:
    from atcdp.textnorm import normalize_text

    rules = _rules(args)
    out = [normalize_text(line, rules, digits=args.digits) for line in _read_lines(args.input)]
    _write(args.output, "".join(line + "\n" for line in out))
    return 0


def cmd_tag(args) -> int:
    from atcdp.tagger import tag_lines

    rules = _rules(args)
    rows = []
    for role, text in tag_lines(_read_lines(args.input), _designators(args, rules), _grammar(args)):
        rows.append(f"{role.value}\t{text}" if args.role else text)
    _write(args.output, "".join(r + "\n" for r in rows))
    return 0


def cmd_match_callsign(args) -> int:
    from atcdp.callsign import SurveillanceContext, load_surveillance, match_callsign

    rules = _rules(args)
    table = _designators(args, rules)
    if args.context:
        ctx = load_surveillance(Path(args.context).read_text(encoding="utf-8"), args.timestamp, table)
    else:
        ctx = SurveillanceContext.from_codes(args.codes.split(","), table)
    span = args.span.lower().split()
    rows = ["icao_code\tdistance\tvariant"]
    for m in match_callsign(span, ctx, table, rules)[: args.top]:
        rows.append(f"{m.icao_code}\t{m.distance}\t{' '.join(m.variant)}")
    _write(args.output, "\n".join(rows) + "\n")
    return 0


def cmd_score(args) -> int:
    from atcdp.quality import read_records

    rows = ["wav_id\tscore"]
    for r in read_records(args.metadata):
        rows.append(f"{r.wav_id}\t{r.score:.6f}")
    _write(args.output, "\n".join(rows) + "\n")
    return 0


def cmd_select(args) -> int:
    from atcdp.quality import (
        SELECTION_PRESETS,
        SelectionPolicy,
        filter_recordings,
        rank_for_annotation,
        read_policy,
        read_records,
        selection_report,
    )

    records = read_records(args.metadata)
    if args.preset:
        policy = SELECTION_PRESETS[args.preset]
    elif _env(args, "policy"):
        policy = read_policy(_env(args, "policy"))
    else:
        policy = SelectionPolicy()
    seed = _env(args, "seed")
    if seed is not None:
        policy = replace(policy, seed=int(seed))
    result = filter_recordings(records, policy)
    if args.top_hours is not None:
        chosen = {r.wav_id for r, _ in rank_for_annotation(result.kept, args.top_hours)}
        dropped = [(r, ("below_rank",)) for r in result.kept if r.wav_id not in chosen]
        result.kept = [r for r in result.kept if r.wav_id in chosen]
        result.rejected += dropped
    _write(args.output, selection_report(records, result))
    return 0


def _load_texts(path):
    """``utt_id text`` lines into a dict."""
    out = {}
    for line in _read_lines(path):
        if not line.strip():
            continue
        utt, _, text = line.partition(" ")
        out[utt] = text
    return out


def cmd_eval_wer(args) -> int:
    from atcdp.markup import strip_markup
    from atcdp.metrics import wer, wer_report
    from atcdp.textnorm import normalize_text

    rules = _rules(args)
    ref, hyp = _load_texts(args.ref), _load_texts(args.hyp)

    def prep(t):
        return normalize_text(strip_markup(t), rules, digits=True).split()

    per_utt = {}
    for utt in sorted(ref):
        r = prep(ref[utt])
        if not r:
            log.warning("skipping %s: empty reference", utt)
            continue
        per_utt[utt] = wer(r, prep(hyp.get(utt, "")))
    _write(args.output, wer_report(per_utt))
    return 0


def cmd_eval_ner(args) -> int:
    from atcdp.formats.annotation import read_annotation_file
    from atcdp.metrics import entity_eval, entity_report
    from atcdp.tagger import tag_entities

    gold_doc = read_annotation_file(args.gold)
    gold = [s.spans for s in gold_doc.segments]
    if args.pred:
        pred_doc = read_annotation_file(args.pred)
        if [s.tokens for s in pred_doc.segments] != [s.tokens for s in gold_doc.segments]:
            raise ValidationError("predicted segments do not have the gold tokens")
        pred = [s.spans for s in pred_doc.segments]
    else:
        rules = _rules(args)
        table, grammar = _designators(args, rules), _grammar(args)
        pred = [tag_entities(s.tokens, table, grammar) for s in gold_doc.segments]
    _write(args.output, entity_report(entity_eval(gold, pred)))
    return 0


def cmd_stats(args) -> int:
    from atcdp.metrics import corpus_stats, stats_report
    from atcdp.quality import read_records

    records = read_records(args.metadata)
    _write(args.output, stats_report(corpus_stats(records, args.split_language)))
    if args.figures:
        from atcdp import plotting

        plotting.plot_distributions(records, Path(args.figures) / "distributions.png")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="atcdp", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def resources(p):
        p.add_argument("--rules", help="normalization rule TSV (default: bundled)")
        p.add_argument("--designators", help="designator TSV (default: bundled)")
        p.add_argument("--grammar", help="tag grammar file (default: bundled)")

    def io(p):
        p.add_argument("-i", "--input", default="-")
        p.add_argument("-o", "--output", default="-")

    p = sub.add_parser("process", help="run the full pipeline over a directory of recordings")
    p.add_argument("--audio-dir")
    p.add_argument("--cnet", action="append", help="extended-CTM file (repeatable)")
    p.add_argument("--rttm", action="append", help="RTTM file (repeatable)")
    p.add_argument("--settings", help="JSON job settings")
    p.add_argument("--policy", help="JSON selection policy")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--eld-scores", help="wav_id<TAB>score file overriding the lexical scorer")
    p.add_argument("--lexicon", help="lexicon file for the lexical english scorer")
    p.add_argument("--surveillance", help="JSON callsign context")
    p.add_argument("--annotation-hours", type=float, help="speech budget for annotation ranking")
    p.add_argument("--no-figures", action="store_true")
    resources(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("normalize", help="normalize transcript lines")
    p.add_argument("--digits", action="store_true", help="also spell out digits")
    io(p)
    resources(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("tag", help="add entity markup to normalized lines")
    p.add_argument("--role", action="store_true", help="prefix each line with the speaker role")
    io(p)
    resources(p)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("match-callsign", help="rank context callsigns for a spoken span")
    p.add_argument("span")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--codes", help="comma-separated ICAO callsigns")
    g.add_argument("--context", help="JSON surveillance context")
    p.add_argument("--timestamp", type=float)
    p.add_argument("--top", type=int, default=5)
    p.add_argument("-o", "--output", default="-")
    resources(p)
    p.set_defaults(func=cmd_match_callsign)

    p = sub.add_parser("score", help="quality score per metadata record")
    p.add_argument("metadata")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("select", help="threshold filtering and ranking of metadata records")
    p.add_argument("metadata")
    p.add_argument("--policy")
    p.add_argument("--preset", choices=["remove_non_english", "remove_low_confidence", "remove_low_snr"])
    p.add_argument("--seed", type=int)
    p.add_argument("--top-hours", type=float)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval-wer", help="WER of hypothesis against reference text files")
    p.add_argument("ref")
    p.add_argument("hyp")
    p.add_argument("-o", "--output", default="-")
    resources(p)
    p.set_defaults(func=cmd_eval_wer)

    p = sub.add_parser("eval-ner", help="exact-span entity scores against a gold XML document")
    p.add_argument("gold")
    p.add_argument("--pred", help="predicted XML (default: run the grammar tagger)")
    p.add_argument("-o", "--output", default="-")
    resources(p)
    p.set_defaults(func=cmd_eval_ner)

    p = sub.add_parser("stats", help="per-airport corpus statistics")
    p.add_argument("metadata")
    p.add_argument("--split-language", type=float)
    p.add_argument("--figures", help="directory for histogram figures")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "process" and not _env(args, "audio_dir"):
        print("atcdp: error: --audio-dir (or ATCDP_AUDIO_DIR) is required", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ValidationError, ParseError, ValueError, OSError, KeyError) as e:
        print(f"atcdp: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
