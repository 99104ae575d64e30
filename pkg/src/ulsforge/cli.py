"""Command-line entry points.

Run directories produced by ``eval`` and ``robustness`` contain
``records.csv`` (per-lesion scores, fixed column order) and
``report.json`` (stratified aggregate with run metadata); ``compare``
and ``report`` read those back. ``ULSFORGE_WORKERS`` caps parallel
workers for any run.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline
from .clicks import build_click_plan, generate_shifted_samples
from .errors import UlsforgeError
from .segmenter import GrowParams, SegmenterRef
from .voi import VOICfg, crop_voi, isolate_central_lesion
from .volume import write_volume

RECORDS_NAME = "records.csv"
REPORT_NAME = "report.json"
INDEX_NAME = "index.json"


def _parse_voi(text: str) -> tuple[int, int, int]:
    try:
        parts = tuple(int(p) for p in text.lower().split("x"))
        if len(parts) != 3:
            raise ValueError
    except ValueError:
        raise argparse.ArgumentTypeError("VOI size must look like 128x128x64, got %r" % text)
    return parts


def _parse_segmenter(text: str, hu_window: str | None, timeout_s: float) -> SegmenterRef:
    if text == "builtin":
        params = GrowParams()
        if hu_window:
            lo, hi = (float(v) for v in hu_window.split(":"))
            params = GrowParams(hu_window=(lo, hi))
        return SegmenterRef.builtin(params)
    if text.startswith("exec:"):
        return SegmenterRef.external(text[len("exec:"):], timeout_s=timeout_s)
    raise UlsforgeError(
        "segmenter must be 'builtin' or 'exec:\"CMD {image} {x} {y} {z} {output}\"'")


def _add_segmenter_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--segmenter", required=True,
                     help="'builtin' or 'exec:\"CMD {image} {x} {y} {z} {output}\"'")
    sub.add_argument("--hu-window", default=None,
                     help="builtin growth window as LO:HI (HU)")
    sub.add_argument("--timeout", type=float, default=60.0,
                     help="external segmenter timeout in seconds")


def _add_common_run_args(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--manifest", required=True)
    sub.add_argument("--voi", type=_parse_voi, default=(128, 128, 64),
                     help="VOI size, default 128x128x64")
    sub.add_argument("--connectivity", type=int, default=26, choices=(6, 18, 26))
    sub.add_argument("--workers", type=int, default=None)
    sub.add_argument("--out", required=True, help="output run directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ulsforge",
        description="Click-centered lesion segmentation evaluation toolkit",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("validate", help="check manifest schema and file existence")
    p.add_argument("--manifest", required=True)

    p = subs.add_parser("split", help="patient-level train/test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--test-fraction", type=float, default=pipeline.DEFAULT_TEST_FRACTION)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)

    p = subs.add_parser("extract", help="persist click-centered VOI pairs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--voi", type=_parse_voi, default=(128, 128, 64))
    p.add_argument("--connectivity", type=int, default=26, choices=(6, 18, 26))
    p.add_argument("--out", required=True)
    p.add_argument("--augment", type=int, default=0,
                   help="additional sampled-click VOIs per lesion")
    p.add_argument("--seed", type=int, default=0)

    p = subs.add_parser("eval", help="centered-click Dice run")
    _add_common_run_args(p)
    _add_segmenter_args(p)

    p = subs.add_parser("robustness", help="click-shift robustness run")
    _add_common_run_args(p)
    _add_segmenter_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=2, help="sampled clicks per lesion")

    p = subs.add_parser("compare", help="paired t-tests between two runs")
    p.add_argument("--run-a", required=True)
    p.add_argument("--run-b", required=True)
    p.add_argument("--alpha", type=float, default=pipeline.DEFAULT_SIGNIFICANCE_ALPHA)
    p.add_argument("--bonferroni-m", default="AUTO",
                   help="correction factor, or AUTO for the number of comparisons")
    p.add_argument("--out", required=True)

    p = subs.add_parser("report", help="stratified aggregate from a run directory")
    p.add_argument("--run", required=True)
    p.add_argument("--by", default="location", choices=("location",))
    p.add_argument("--format", default="csv", choices=("csv", "json"))
    p.add_argument("--out", required=True)

    return parser


# ---------------------------------------------------------------------------
# command bodies
# ---------------------------------------------------------------------------


def _cmd_validate(args) -> int:
    manifest = pipeline.load_manifest(args.manifest)
    print("OK: %d entries, %d patients, datasets: %s"
          % (len(manifest.entries), len(manifest.patients()),
             ", ".join(manifest.datasets()) or "-"))
    return 0


def _cmd_split(args) -> int:
    manifest = pipeline.load_manifest(args.manifest)
    train, test = pipeline.split_patients(manifest, args.test_fraction, args.seed)
    pipeline.save_manifest(train, args.out_train)
    pipeline.save_manifest(test, args.out_test)
    print("train: %d lesions / %d patients -> %s"
          % (len(train.entries), len(train.patients()), args.out_train))
    print("test:  %d lesions / %d patients -> %s"
          % (len(test.entries), len(test.patients()), args.out_test))
    return 0


def _cmd_extract(args) -> int:
    manifest = pipeline.load_manifest(args.manifest)
    cfg = VOICfg(size=args.voi)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    plans = []
    n_written = 0
    for entry in manifest.entries:
        try:
            image, mask, instance = pipeline._resolve_lesion(entry, args.connectivity)
            if args.augment > 0:
                plans.append(build_click_plan(instance, args.seed, entry.lesion_id,
                                              k=args.augment).to_record())
                samples = generate_shifted_samples(
                    image, mask, instance, cfg, args.seed, k=args.augment,
                    lesion_id=entry.lesion_id, connectivity=args.connectivity)
            else:
                sample = crop_voi(image, mask, instance.center, cfg)
                sample.mask = isolate_central_lesion(sample.mask, sample.local_click,
                                                     args.connectivity)
                sample.lesion_id = entry.lesion_id
                samples = [sample]
            for i, sample in enumerate(samples):
                stem = entry.lesion_id if i == 0 else "%s_aug%d" % (entry.lesion_id, i)
                img_path = out / ("%s_img.nii.gz" % stem)
                mask_path = out / ("%s_mask.nii.gz" % stem)
                write_volume(sample.image, img_path)
                write_volume(sample.mask, mask_path)
                index.append({
                    "lesion_id": entry.lesion_id,
                    "sample": "normal" if i == 0 else "aug%d" % i,
                    "click": list(sample.click.pos),
                    "offset": list(sample.offset),
                    "seed_root": args.seed if args.augment > 0 else None,
                    "image": img_path.name,
                    "mask": mask_path.name,
                })
                n_written += 1
        except (UlsforgeError, OSError) as e:
            index.append({"lesion_id": entry.lesion_id,
                          "error": " ".join(str(e).split())})
    doc = {"samples": index}
    if plans:
        doc["plans"] = plans
    (out / INDEX_NAME).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    print("wrote %d VOI pairs for %d lesions -> %s"
          % (n_written, len(manifest.entries), out))
    return 0


def _write_run(records, metadata, out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pipeline.write_records_csv(records, out / RECORDS_NAME)
    report = pipeline.aggregate_by_location(records, metadata)
    report.records = []  # records live in records.csv, not the aggregate
    pipeline.emit_report(report, "json", out / REPORT_NAME)


def _cmd_eval(args) -> int:
    manifest = pipeline.load_manifest(args.manifest)
    seg = _parse_segmenter(args.segmenter, args.hu_window, args.timeout)
    cfg = VOICfg(size=args.voi)
    records = pipeline.run_dice_eval(manifest, seg, cfg,
                                     connectivity=args.connectivity,
                                     workers=args.workers)
    metadata = pipeline.run_metadata(seg, cfg, args.connectivity)
    _write_run(records, metadata, args.out)
    mean = sum(r.dice for r in records) / len(records) if records else float("nan")
    print("evaluated %d lesions, mean dice %.4f -> %s" % (len(records), mean, args.out))
    return 0


def _cmd_robustness(args) -> int:
    manifest = pipeline.load_manifest(args.manifest)
    seg = _parse_segmenter(args.segmenter, args.hu_window, args.timeout)
    cfg = VOICfg(size=args.voi)
    records = pipeline.run_robustness_eval(manifest, seg, cfg, args.seed,
                                           k=args.k, connectivity=args.connectivity,
                                           workers=args.workers)
    metadata = pipeline.run_metadata(seg, cfg, args.connectivity,
                                     seed_root=args.seed, k=args.k)
    _write_run(records, metadata, args.out)
    scored = [r.robustness for r in records if r.robustness is not None]
    mean = sum(scored) / len(scored) if scored else float("nan")
    print("evaluated %d lesions, mean robustness %.4f -> %s"
          % (len(records), mean, args.out))
    return 0


def _cmd_compare(args) -> int:
    rec_a = pipeline.read_records_csv(Path(args.run_a) / RECORDS_NAME)
    rec_b = pipeline.read_records_csv(Path(args.run_b) / RECORDS_NAME)
    m = None if str(args.bonferroni_m).upper() == "AUTO" else int(args.bonferroni_m)
    results = pipeline.compare_models(rec_a, rec_b, m_comparisons=m, alpha=args.alpha)
    doc = {
        "metadata": {
            "run_a": str(args.run_a), "run_b": str(args.run_b),
            "alpha": args.alpha,
            "bonferroni_m": m if m is not None else max(1, len(results)),
            "pairing": "per-lesion within dataset",
        },
        "comparisons": [pipeline._test_result_record(t) for t in results],
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    for t in results:
        if t.degenerate:
            print("%s: degenerate (all differences equal), n=%d"
                  % (t.comparison_id, t.n_pairs))
        else:
            print("%s: t=%.4f df=%d p=%.3g adj=%.3g%s"
                  % (t.comparison_id, t.t_stat, t.df, t.p_two_tailed, t.p_adjusted,
                     " *" if t.significant else ""))
    return 0


def _cmd_report(args) -> int:
    run = Path(args.run)
    records = pipeline.read_records_csv(run / RECORDS_NAME)
    metadata = {}
    report_path = run / REPORT_NAME
    if report_path.exists():
        metadata = pipeline.read_report(report_path).metadata
    report = pipeline.aggregate_by_location(records, metadata)
    pipeline.emit_report(report, args.format, args.out)
    print("wrote %s report for %d records -> %s" % (args.format, len(records), args.out))
    return 0


_COMMANDS = {
    "validate": _cmd_validate,
    "split": _cmd_split,
    "extract": _cmd_extract,
    "eval": _cmd_eval,
    "robustness": _cmd_robustness,
    "compare": _cmd_compare,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (UlsforgeError, OSError, ValueError) as e:
        print("error: %s" % e, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
