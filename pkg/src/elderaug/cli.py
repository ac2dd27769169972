"""Command-line entry point: one executable, one subcommand per stage.

Exit codes: 0 success, 1 data/validation failure, 2 backend or
configuration failure (argparse usage errors also exit 2).
"""

from __future__ import annotations

import argparse
import collections
import json
import logging
import sys
from pathlib import Path

from elderaug import metrics
from elderaug import paraphrase as para
from elderaug import pipeline as pipe
from elderaug import synth as syn
from elderaug.config import load_run_config
from elderaug.corpus import (
    Manifest,
    ValidationPolicy,
    age_histogram,
    load_manifest,
    save_manifest,
    validate_manifest,
)
from elderaug.errors import BackendError, ConfigError, DataError
from elderaug.util import atomic_write_text, read_jsonl, stable_dumps

log = logging.getLogger("elderaug")


def _add_validate(sub):
    p = sub.add_parser("validate", help="check a manifest against schema and policy rules")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", default="unsplit")
    p.add_argument("--min-age", type=int, default=None)
    p.add_argument("--check-audio", action="store_true")
    p.add_argument("--sample-rate", type=int, default=None, help="required audio rate")
    p.set_defaults(func=_cmd_validate)


def _cmd_validate(args) -> int:
    m = load_manifest(args.manifest, split=args.split)
    policy = ValidationPolicy(
        min_age=args.min_age,
        check_audio=args.check_audio,
        required_sample_rate=args.sample_rate,
    )
    violations = validate_manifest(m, policy)
    for v in violations:
        print(f"{v.utt_id}\t{v.rule}\t{v.message}")
    if violations:
        print(f"{len(violations)} violation(s) in {len(m)} entries", file=sys.stderr)
        return 1
    print(f"ok: {len(m)} entries")
    return 0


def _add_stats(sub):
    p = sub.add_parser("stats", help="corpus statistics incl. age histogram")
    p.add_argument("--manifest", required=True)
    p.add_argument("--bucket-width", type=int, default=10)
    p.set_defaults(func=_cmd_stats)


def _cmd_stats(args) -> int:
    m = load_manifest(args.manifest)
    print(f"entries: {len(m)}")
    durations = [u.duration_s for u in m if u.duration_s is not None]
    if durations:
        print(f"audio: {sum(durations) / 3600.0:.2f} h over {len(durations)} timed entries")
    for name, counter in (
        ("origin", collections.Counter(u.origin for u in m)),
        ("gender", collections.Counter(u.gender or "unknown" for u in m)),
        ("lang", collections.Counter(u.lang or "unknown" for u in m)),
    ):
        parts = ", ".join(f"{k}={v}" for k, v in sorted(counter.items()))
        print(f"{name}: {parts}")
    print("age histogram:")
    for bucket, count in age_histogram(m, args.bucket_width).items():
        print(f"  {bucket}: {count}")
    return 0


def _add_paraphrase(sub):
    p = sub.add_parser("paraphrase", help="generate paraphrase records for a manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mock-backends", action="store_true")
    p.add_argument("--set", dest="overrides", action="append", default=[])
    p.set_defaults(func=_cmd_paraphrase)


def _cmd_paraphrase(args) -> int:
    cfg = load_run_config(args.config, args.overrides)
    base = Path(args.config).parent
    m = load_manifest(args.manifest)
    backend = pipe.build_paraphrase_backend(cfg, args.mock_backends)
    stage = pipe.ParaphraseStage(
        backend=backend,
        template=pipe.template_from_config(cfg),
        params=para.generation_profile(
            cfg.get("paraphrase", {}).get("profile", "default")
        ),
        cache=para.ParaphraseCache(base / "cache"),
    )
    records = stage.run(list(m.entries))
    para.save_paraphrase_records(args.out, records)
    print(f"wrote {len(records)} paraphrase records to {args.out}")
    return 0


def _add_synth(sub):
    p = sub.add_parser("synth", help="synthesize audio for paraphrase records")
    p.add_argument("--config", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mock-backends", action="store_true")
    p.add_argument("--set", dest="overrides", action="append", default=[])
    p.set_defaults(func=_cmd_synth)


def _cmd_synth(args) -> int:
    cfg = load_run_config(args.config, args.overrides)
    base = Path(args.config).parent
    records = para.load_paraphrase_records(args.records)
    pool = syn.load_speaker_pool(
        base / str(cfg.get("synth", {}).get("pool_file", "pool.jsonl")),
        preset=cfg.get("synth", {}).get("pool_preset"),
        size=cfg.get("synth", {}).get("pool_size_override"),
    )
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    plan = syn.plan_assignments(len(records), pool, seed)
    backend = pipe.build_tts_backend(cfg, args.mock_backends)
    out_dir = Path(args.out_dir)
    manifest = syn.run_batch(backend, records, plan, pool, out_dir)
    save_manifest(manifest, out_dir / "d_aug.jsonl")
    print(f"wrote {len(manifest)} synthetic entries to {out_dir / 'd_aug.jsonl'}")
    return 0


def _add_augment(sub):
    p = sub.add_parser("augment", help="run the full augmentation pipeline end to end")
    p.add_argument("--config", required=True)
    p.add_argument("--mock-backends", action="store_true")
    p.add_argument("--set", dest="overrides", action="append", default=[])
    p.set_defaults(func=_cmd_augment)


def _cmd_augment(args) -> int:
    cfg = load_run_config(args.config, args.overrides)
    paths = pipe.run_augment(cfg, Path(args.config).parent, mock_backends=args.mock_backends)
    print(f"d_aug: {paths.d_aug}")
    print(f"d_train: {paths.d_train}")
    print(f"run record: {paths.run_record}")
    return 0


def _add_merge(sub):
    p = sub.add_parser("merge", help="merge original and synthetic manifests")
    p.add_argument("--orig", required=True)
    p.add_argument("--aug", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ordering", choices=pipe.ORDERINGS, default="append")
    p.set_defaults(func=_cmd_merge)


def _cmd_merge(args) -> int:
    orig = load_manifest(args.orig, split="train")
    aug = load_manifest(args.aug)
    out_path = Path(args.out)
    merged = pipe.merge_train_set(
        pipe.rebase_manifest(orig, out_path.parent),
        pipe.rebase_manifest(aug, out_path.parent),
        ordering=args.ordering,
    )
    save_manifest(merged, out_path)
    print(f"wrote {len(merged)} entries to {out_path}")
    return 0


def _scored_pairs(ref_manifest: Manifest, hyp_path: str):
    hyps = metrics.read_hyp_records(hyp_path)
    missing = [u.id for u in ref_manifest if u.id not in hyps]
    if missing:
        raise DataError(
            f"hypothesis file lacks {len(missing)} reference id(s), e.g. {missing[:3]}"
        )
    pairs = [(u.text, hyps[u.id]) for u in ref_manifest]
    ids = [u.id for u in ref_manifest]
    return pairs, ids


def _add_score(sub):
    p = sub.add_parser("score", help="WER/CER of a hypothesis file against a manifest")
    p.add_argument("--ref", required=True, help="reference manifest")
    p.add_argument("--hyp", required=True, help="hypothesis record file")
    p.add_argument("--unit", choices=("word", "char"), default="word")
    p.add_argument("--lang", choices=("en", "ko"), default="en")
    p.add_argument("--name", default=None, help="row name when appending to results")
    p.add_argument("--append-results", default=None, help="results JSONL to append a row to")
    p.set_defaults(func=_cmd_score)


def _cmd_score(args) -> int:
    ref = load_manifest(args.ref)
    pairs, ids = _scored_pairs(ref, args.hyp)
    policy = metrics.NormPolicy.for_language(args.lang)
    report = metrics.corpus_error_rate(pairs, args.unit, policy, ids=ids)
    label = "WER" if args.unit == "word" else "CER"
    print(
        f"{label} {100.0 * report.error_rate:.1f}% "
        f"(S={report.substitutions} D={report.deletions} I={report.insertions} "
        f"N={report.n_ref}, {report.n_utterances} utterances)"
    )
    if args.append_results:
        row = {
            "name": args.name or Path(args.hyp).stem,
            "wer": report.error_rate if args.unit == "word" else None,
            "cer": report.error_rate if args.unit == "char" else None,
        }
        with open(args.append_results, "a", encoding="utf-8") as f:
            f.write(stable_dumps(row) + "\n")
    return 0


def _add_sigtest(sub):
    p = sub.add_parser(
        "sigtest", help="paired Wilcoxon signed-rank test between two hypothesis files"
    )
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp-a", required=True)
    p.add_argument("--hyp-b", required=True)
    p.add_argument("--unit", choices=("word", "char"), default="word")
    p.add_argument("--lang", choices=("en", "ko"), default="en")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument(
        "--signal-exit",
        action="store_true",
        help="exit 0 when significant, 1 when not",
    )
    p.set_defaults(func=_cmd_sigtest)


def _cmd_sigtest(args) -> int:
    ref = load_manifest(args.ref)
    policy = metrics.NormPolicy.for_language(args.lang)
    pairs_a, ids = _scored_pairs(ref, args.hyp_a)
    pairs_b, _ = _scored_pairs(ref, args.hyp_b)
    report_a = metrics.corpus_error_rate(pairs_a, args.unit, policy, ids=ids)
    report_b = metrics.corpus_error_rate(pairs_b, args.unit, policy, ids=ids)
    diffs = [
        a.error_rate - b.error_rate
        for a, b in zip(report_a.per_utterance, report_b.per_utterance)
    ]
    result = metrics.wilcoxon_signed_rank(diffs, alpha=args.alpha)
    verdict = "significant" if result.significant else "not significant"
    if not result.applicable:
        verdict = "not applicable (no nonzero differences)"
    print(
        f"W={result.w_statistic:g} n_nonzero={result.n_nonzero} "
        f"p={result.p_value:.6g} ({result.method}) -> {verdict} at alpha={args.alpha}"
    )
    if args.signal_exit:
        return 0 if result.significant else 1
    return 0


def _add_report(sub):
    p = sub.add_parser("report", help="render a results file as a table or CSV")
    p.add_argument("--results", required=True, help="JSONL of rows: name, wer, cer, ...")
    p.add_argument("--format", choices=("table_text", "csv"), default="table_text")
    p.add_argument("--out", default=None, help="write to file instead of stdout")
    p.set_defaults(func=_cmd_report)


def _cmd_report(args) -> int:
    rows: dict[str, metrics.RowResult] = {}
    try:
        for lineno, rec in read_jsonl(args.results):
            name = rec.get("name")
            if not name:
                raise DataError(f"{args.results}:{lineno}: row needs a 'name'")
            rows[str(name)] = metrics.RowResult(
                wer=rec.get("wer"),
                cer=rec.get("cer"),
                p_value=rec.get("p_value"),
                significant=rec.get("significant"),
            )
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    except FileNotFoundError:
        raise DataError(f"results file not found: {args.results}") from None
    document = metrics.emit_report(rows, format=args.format)
    if args.out:
        atomic_write_text(args.out, document)
    else:
        sys.stdout.write(document)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="elderaug",
        description="Elderly-speech augmentation workbench: paraphrase, synthesize, merge, evaluate.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (
        _add_validate,
        _add_stats,
        _add_paraphrase,
        _add_synth,
        _add_augment,
        _add_merge,
        _add_score,
        _add_sigtest,
        _add_report,
    ):
        add(sub)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (DataError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BackendError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
