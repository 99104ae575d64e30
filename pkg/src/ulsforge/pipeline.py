"""End-to-end evaluation runs over a lesion manifest.

A manifest row binds one lesion (image file, mask file, patient,
dataset, location) to a unique lesion id. Runs crop a click-centered
VOI per lesion, segment it, place the prediction back into the global
frame, and score Dice and click-shift robustness. Per-lesion failures
become flagged records; a run only aborts on manifest-level problems.

All randomness is keyed per lesion id, and records are sorted by
lesion id before anything is written, so a run's per-lesion CSV is
byte-identical across repeats and worker counts.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import shuffle_key
from .clicks import DEFAULT_AUGMENT_COUNT, build_click_plan
from .errors import (
    DuplicateLesionIdError,
    EmptyRecordsError,
    ManifestParseError,
    MissingFileError,
    NoPatientsError,
    PairingMismatchError,
    TooFewPairsError,
    UlsforgeError,
    ZeroVarianceError,
)
from .lesions import LesionInstance, _instance_from_voxels, label_components
from .metrics import dice, mean_pairwise_dice
from .segmenter import SegmenterRef, segment
from .stats import TestResult, degenerate_result, paired_ttest
from .voi import VOICfg, crop_voi, isolate_central_lesion, place_back
from .volume import Volume3D, read_volume

DEFAULT_TEST_FRACTION = 0.2
DEFAULT_SIGNIFICANCE_ALPHA = 0.0001
UNDEFINED_LOCATION = "undefined"
OVERALL_LOCATION = "(all)"

FLAG_EMPTY_PREDICTION = "empty-prediction"
FLAG_TRUNCATED = "truncated"
FLAG_LENIENT_ISOLATION = "lenient-isolation"
FLAG_ERROR = "error"


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    lesion_id: str
    patient_id: str
    image_path: str
    mask_path: str
    dataset: str = "default"
    location: str = UNDEFINED_LOCATION
    component_label: int | None = None
    click: tuple[int, int, int] | None = None

    def to_record(self) -> dict:
        rec = {
            "lesion_id": self.lesion_id,
            "patient_id": self.patient_id,
            "dataset": self.dataset,
            "location": self.location,
            "image_path": self.image_path,
            "mask_path": self.mask_path,
        }
        if self.component_label is not None:
            rec["component_label"] = self.component_label
        if self.click is not None:
            rec["click"] = list(self.click)
        return rec


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.lesion_id in seen:
                raise DuplicateLesionIdError("duplicate lesion_id %r" % e.lesion_id)
            seen.add(e.lesion_id)
            if not e.patient_id:
                raise ManifestParseError("entry %r has empty patient_id" % e.lesion_id)

    def patients(self) -> list[str]:
        return sorted({e.patient_id for e in self.entries})

    def datasets(self) -> list[str]:
        return sorted({e.dataset for e in self.entries})

    def missing_files(self) -> list[str]:
        missing = []
        for e in self.entries:
            for p in (e.image_path, e.mask_path):
                if not Path(p).is_file() and p not in missing:
                    missing.append(p)
        return missing

    def validate_files(self) -> None:
        missing = self.missing_files()
        if missing:
            raise MissingFileError(missing)


def _entry_from_record(rec: dict, base: Path) -> ManifestEntry:
    try:
        lesion_id = str(rec["lesion_id"])
        patient_id = str(rec["patient_id"])
        image_path = str(rec["image_path"])
        mask_path = str(rec["mask_path"])
    except KeyError as e:
        raise ManifestParseError("manifest entry missing required field %s" % e)
    location = str(rec.get("location") or UNDEFINED_LOCATION).strip() or UNDEFINED_LOCATION
    comp = rec.get("component_label")
    click = rec.get("click")
    if click not in (None, "") and len(click) != 3:
        raise ManifestParseError("entry %r: click must have 3 components, got %r"
                                 % (lesion_id, click))
    return ManifestEntry(
        lesion_id=lesion_id,
        patient_id=patient_id,
        image_path=str((base / image_path)) if not os.path.isabs(image_path) else image_path,
        mask_path=str((base / mask_path)) if not os.path.isabs(mask_path) else mask_path,
        dataset=str(rec.get("dataset") or "default"),
        location=location,
        component_label=None if comp in (None, "") else int(comp),
        click=None if click in (None, "") else tuple(int(c) for c in click),
    )


def load_manifest(path: str | Path) -> Manifest:
    """Load and validate a manifest (JSON canonical, CSV import path).

    Relative volume paths resolve against the manifest's directory.
    Duplicate lesion ids and missing volume files are rejected; the
    MissingFileError lists every absent path.
    """
    path = Path(path)
    base = path.parent
    try:
        if path.suffix.lower() == ".csv":
            with open(path, newline="", encoding="utf-8") as f:
                rows = list(csv.DictReader(f))
            records = []
            for row in rows:
                rec = {k: v for k, v in row.items() if v not in (None, "")}
                cx, cy, cz = (rec.pop("click_x", None), rec.pop("click_y", None),
                              rec.pop("click_z", None))
                if cx is not None and cy is not None and cz is not None:
                    rec["click"] = (int(cx), int(cy), int(cz))
                records.append(rec)
        else:
            with open(path, encoding="utf-8") as f:
                doc = json.load(f)
            records = doc["entries"] if isinstance(doc, dict) else doc
    except (json.JSONDecodeError, csv.Error, KeyError, ValueError) as e:
        raise ManifestParseError("cannot parse manifest %s: %s" % (path, e))
    manifest = Manifest([_entry_from_record(r, base) for r in records])
    manifest.validate_files()
    return manifest


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"entries": [e.to_record() for e in manifest.entries]}
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def split_patients(manifest: Manifest, test_fraction: float = DEFAULT_TEST_FRACTION,
                   seed: int = 0) -> tuple[Manifest, Manifest]:
    """Deterministic patient-level split into (train, test).

    Patients are ordered by a seed-keyed digest (a stable shuffle);
    the test side takes ceil(test_fraction * #patients) patients, and
    every lesion follows its patient.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1), got %r" % test_fraction)
    patients = manifest.patients()
    if not patients:
        raise NoPatientsError("manifest has no patients")
    shuffled = sorted(patients, key=lambda p: shuffle_key(seed, "split:%s" % p))
    n_test = math.ceil(test_fraction * len(patients))
    test_set = set(shuffled[:n_test])
    train = Manifest([e for e in manifest.entries if e.patient_id not in test_set])
    test = Manifest([e for e in manifest.entries if e.patient_id in test_set])
    return train, test


# ---------------------------------------------------------------------------
# evaluation records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalRecord:
    lesion_id: str
    model_id: str
    dice: float
    robustness: float | None = None
    location: str = UNDEFINED_LOCATION
    dataset: str = "default"
    flags: frozenset[str] = frozenset()
    seed_root: int | None = None
    error: str | None = None

    def to_row(self) -> list[str]:
        return [
            self.lesion_id,
            self.model_id,
            self.dataset,
            self.location,
            repr(float(self.dice)),
            "" if self.robustness is None else repr(float(self.robustness)),
            ";".join(sorted(self.flags)),
            "" if self.seed_root is None else str(self.seed_root),
            self.error or "",
        ]

    @classmethod
    def from_row(cls, row: dict) -> EvalRecord:
        return cls(
            lesion_id=row["lesion_id"],
            model_id=row["model_id"],
            dataset=row["dataset"],
            location=row["location"],
            dice=float(row["dice"]),
            robustness=float(row["robustness"]) if row.get("robustness") else None,
            flags=frozenset(f for f in row.get("flags", "").split(";") if f),
            seed_root=int(row["seed_root"]) if row.get("seed_root") else None,
            error=row.get("error") or None,
        )

    def to_record(self) -> dict:
        return {
            "lesion_id": self.lesion_id,
            "model_id": self.model_id,
            "dataset": self.dataset,
            "location": self.location,
            "dice": self.dice,
            "robustness": self.robustness,
            "flags": sorted(self.flags),
            "seed_root": self.seed_root,
            "error": self.error,
        }


CSV_COLUMN_ORDER = ("lesion_id", "model_id", "dataset", "location",
                    "dice", "robustness", "flags", "seed_root", "error")


def write_records_csv(records: list[EvalRecord], path: str | Path) -> None:
    """Per-lesion CSV: comma delimiter, '.' decimal point, fixed columns."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMN_ORDER)
        for rec in records:
            writer.writerow(rec.to_row())


def read_records_csv(path: str | Path) -> list[EvalRecord]:
    with open(path, newline="", encoding="utf-8") as f:
        return [EvalRecord.from_row(row) for row in csv.DictReader(f)]


# ---------------------------------------------------------------------------
# per-lesion work
# ---------------------------------------------------------------------------


def _resolve_lesion(entry: ManifestEntry, connectivity: int) -> tuple[Volume3D, Volume3D, LesionInstance]:
    """Load one entry's volumes and identify its lesion instance.

    Returns (image, full binary mask, instance). The instance comes from
    the entry's component_label if given, else the component containing
    the entry's recorded click, else the mask's single component.
    """
    image = read_volume(entry.image_path)
    mask_raw = read_volume(entry.mask_path)
    if image.dims != mask_raw.dims:
        raise UlsforgeError("image dims %s != mask dims %s" % (image.dims, mask_raw.dims))
    binary = mask_raw.as_binary_mask()
    if entry.component_label is not None:
        labeled = mask_raw.as_labeled_mask()
        voxels = np.argwhere(labeled.data == entry.component_label)
        if voxels.shape[0] == 0:
            raise UlsforgeError("component_label %d not present in %s"
                                % (entry.component_label, entry.mask_path))
        instance = _instance_from_voxels(entry.component_label, voxels)
        return image, binary, instance
    labeled = label_components(binary, connectivity)
    if entry.click is not None:
        if any(c < 0 or c >= n for c, n in zip(entry.click, labeled.dims)):
            raise UlsforgeError("recorded click %s outside volume dims %s"
                                % (entry.click, labeled.dims))
        comp_id = int(labeled.data[tuple(entry.click)])
        if comp_id == 0:
            raise UlsforgeError("recorded click %s is background in %s"
                                % (entry.click, entry.mask_path))
    else:
        n_comp = int(labeled.data.max())
        if n_comp == 0:
            raise UlsforgeError("mask %s is empty" % entry.mask_path)
        if n_comp > 1:
            raise UlsforgeError(
                "mask %s has %d components; set component_label or click to disambiguate"
                % (entry.mask_path, n_comp))
        comp_id = 1
    voxels = np.argwhere(labeled.data == comp_id)
    return image, binary, _instance_from_voxels(comp_id, voxels)


def _error_record(entry: ManifestEntry, model_id: str, seed_root: int | None,
                  exc: Exception) -> EvalRecord:
    msg = " ".join(str(exc).split())
    return EvalRecord(
        lesion_id=entry.lesion_id, model_id=model_id, dice=0.0, robustness=None,
        location=entry.location, dataset=entry.dataset,
        flags=frozenset({FLAG_ERROR}), seed_root=seed_root, error=msg,
    )


def _segment_placed(image: Volume3D, voi, seg: SegmenterRef):
    """Segment one VOI and return (global prediction, flags)."""
    result = segment(voi.image, voi.local_click, seg, strict=False)
    flags = set()
    if result.truncated:
        flags.add(FLAG_TRUNCATED)
    if not result.mask.data.any():
        flags.add(FLAG_EMPTY_PREDICTION)
    return place_back(result.mask, image.dims, voi.offset), flags


def _eval_dice_one(entry: ManifestEntry, seg: SegmenterRef, cfg: VOICfg,
                   connectivity: int, model_id: str) -> EvalRecord:
    try:
        image, mask, instance = _resolve_lesion(entry, connectivity)
        voi = crop_voi(image, mask, instance.center, cfg)
        gt_local = isolate_central_lesion(voi.mask, voi.local_click, connectivity)
        gt_global = place_back(gt_local, image.dims, voi.offset)
        pred_global, flags = _segment_placed(image, voi, seg)
        score = dice(pred_global, gt_global)
        return EvalRecord(lesion_id=entry.lesion_id, model_id=model_id, dice=score,
                          location=entry.location, dataset=entry.dataset,
                          flags=frozenset(flags))
    except (UlsforgeError, OSError) as e:
        return _error_record(entry, model_id, None, e)


def _eval_robustness_one(entry: ManifestEntry, seg: SegmenterRef, cfg: VOICfg,
                         connectivity: int, model_id: str, seed_root: int,
                         k: int) -> EvalRecord:
    try:
        image, mask, instance = _resolve_lesion(entry, connectivity)
        plan = build_click_plan(instance, seed_root, entry.lesion_id, k=k)
        flags: set[str] = set()
        preds = []
        gt_global = None
        for click in plan.all_clicks():
            voi = crop_voi(image, mask, click, cfg)
            if click is plan.normal:
                gt_local = isolate_central_lesion(voi.mask, voi.local_click, connectivity)
                gt_global = place_back(gt_local, image.dims, voi.offset)
            pred, pred_flags = _segment_placed(image, voi, seg)
            flags |= pred_flags
            preds.append(pred)
        score = dice(preds[0], gt_global)
        robust = mean_pairwise_dice(preds) if len(preds) >= 2 else None
        return EvalRecord(lesion_id=entry.lesion_id, model_id=model_id, dice=score,
                          robustness=robust, location=entry.location,
                          dataset=entry.dataset, flags=frozenset(flags),
                          seed_root=seed_root)
    except (UlsforgeError, OSError) as e:
        return _error_record(entry, model_id, seed_root, e)


def _effective_workers(requested: int | None) -> int:
    cap = os.environ.get("ULSFORGE_WORKERS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _run(entries, fn, workers: int | None):
    n = _effective_workers(workers)
    if n <= 1 or len(entries) <= 1:
        records = [fn(e) for e in entries]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            records = list(pool.map(fn, entries))
    return sorted(records, key=lambda r: r.lesion_id)


def run_dice_eval(manifest: Manifest, seg: SegmenterRef, cfg: VOICfg = VOICfg(), *,
                  connectivity: int = 26, workers: int | None = None,
                  model_id: str | None = None) -> list[EvalRecord]:
    """Centered-click Dice protocol: one record per manifest lesion.

    Per lesion: crop at the lesion center, isolate the central lesion
    as ground truth, segment, place the prediction back, and score Dice
    in the global frame. Failures yield flagged records.
    """
    model = model_id or seg.model_id
    return _run(manifest.entries,
                lambda e: _eval_dice_one(e, seg, cfg, connectivity, model),
                workers)


def run_robustness_eval(manifest: Manifest, seg: SegmenterRef, cfg: VOICfg = VOICfg(),
                        seed_root: int = 0, *, k: int = DEFAULT_AUGMENT_COUNT,
                        connectivity: int = 26, workers: int | None = None,
                        model_id: str | None = None) -> list[EvalRecord]:
    """Click-shift robustness protocol.

    Per lesion: one centroid click plus k sampled in-lesion clicks
    (default 2, giving three segmentations), predictions placed back
    into the global frame, robustness = mean pairwise Dice among them.
    The centered-click Dice is recorded alongside.
    """
    model = model_id or seg.model_id
    return _run(manifest.entries,
                lambda e: _eval_robustness_one(e, seg, cfg, connectivity, model, seed_root, k),
                workers)


# ---------------------------------------------------------------------------
# aggregation and comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupStats:
    model_id: str
    location: str
    n: int
    dice_mean: float
    dice_std: float
    robustness_mean: float | None
    robustness_std: float | None
    robustness_n: int

    def to_record(self) -> dict:
        return {
            "model_id": self.model_id, "location": self.location, "n": self.n,
            "dice_mean": self.dice_mean, "dice_std": self.dice_std,
            "robustness_mean": self.robustness_mean,
            "robustness_std": self.robustness_std,
            "robustness_n": self.robustness_n,
        }


@dataclass(frozen=True)
class DatasetStats:
    """One summary-table cell group: a model's scores on one dataset."""

    model_id: str
    dataset: str
    n: int
    dice_mean: float
    dice_std: float
    robustness_mean: float | None
    robustness_std: float | None
    robustness_n: int

    def to_record(self) -> dict:
        return {
            "model_id": self.model_id, "dataset": self.dataset, "n": self.n,
            "dice_mean": self.dice_mean, "dice_std": self.dice_std,
            "robustness_mean": self.robustness_mean,
            "robustness_std": self.robustness_std,
            "robustness_n": self.robustness_n,
        }


@dataclass
class StratifiedReport:
    groups: list[GroupStats]
    summary: list[DatasetStats] = field(default_factory=list)
    comparisons: list[TestResult] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    records: list[EvalRecord] = field(default_factory=list)


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    return mean, std


def _metric_stats(recs: list[EvalRecord]) -> dict:
    dice_mean, dice_std = _mean_std([r.dice for r in recs])
    robust = [r.robustness for r in recs if r.robustness is not None]
    if robust:
        r_mean, r_std = _mean_std(robust)
    else:
        r_mean = r_std = None
    return {"n": len(recs), "dice_mean": dice_mean, "dice_std": dice_std,
            "robustness_mean": r_mean, "robustness_std": r_std,
            "robustness_n": len(robust)}


def _group_stats(model_id: str, location: str, recs: list[EvalRecord]) -> GroupStats:
    return GroupStats(model_id=model_id, location=location, **_metric_stats(recs))


def aggregate_by_location(records: list[EvalRecord], metadata: dict | None = None) -> StratifiedReport:
    """Stratify records by location tag, with an overall row per model.

    Locations are ordered alphabetically with "undefined" last; the
    overall row uses the location label "(all)". Sample std uses the
    n-1 denominator and is 0 for single-record groups. A per-dataset
    summary (model x dataset, the published-table layout) is attached
    alongside the location groups.
    """
    if not records:
        raise EmptyRecordsError("no records to aggregate")
    by_model: dict[str, list[EvalRecord]] = {}
    for rec in records:
        by_model.setdefault(rec.model_id, []).append(rec)
    groups = []
    summary = []
    for model_id in sorted(by_model):
        recs = by_model[model_id]
        by_loc: dict[str, list[EvalRecord]] = {}
        by_ds: dict[str, list[EvalRecord]] = {}
        for rec in recs:
            loc = rec.location.strip() or UNDEFINED_LOCATION
            by_loc.setdefault(loc, []).append(rec)
            by_ds.setdefault(rec.dataset, []).append(rec)
        locations = sorted(by_loc, key=lambda l: (l == UNDEFINED_LOCATION, l))
        for loc in locations:
            groups.append(_group_stats(model_id, loc, by_loc[loc]))
        groups.append(_group_stats(model_id, OVERALL_LOCATION, recs))
        for dataset in sorted(by_ds):
            summary.append(DatasetStats(model_id=model_id, dataset=dataset,
                                        **_metric_stats(by_ds[dataset])))
    return StratifiedReport(groups=groups, summary=summary,
                            metadata=dict(metadata or {}), records=list(records))


def compare_models(a: list[EvalRecord], b: list[EvalRecord],
                   metrics: tuple[str, ...] = ("dice", "robustness"),
                   m_comparisons: int | None = None,
                   alpha: float = DEFAULT_SIGNIFICANCE_ALPHA) -> list[TestResult]:
    """Paired per-lesion comparison of two runs, Bonferroni-corrected.

    Records pair by lesion id within each dataset; one t-test per
    (dataset, metric) with values present on both sides. m defaults to
    the number of comparisons performed. Zero-variance comparisons are
    reported as degenerate, never as p = 0.
    """
    map_a = {r.lesion_id: r for r in a}
    map_b = {r.lesion_id: r for r in b}
    if set(map_a) != set(map_b):
        raise PairingMismatchError(set(map_a) - set(map_b), set(map_b) - set(map_a))
    datasets = sorted({r.dataset for r in a})
    raw: list[TestResult] = []
    for dataset in datasets:
        ids = sorted(lid for lid, r in map_a.items() if r.dataset == dataset)
        for metric in metrics:
            pairs = [
                (getattr(map_a[lid], metric), getattr(map_b[lid], metric))
                for lid in ids
                if getattr(map_a[lid], metric) is not None
                and getattr(map_b[lid], metric) is not None
            ]
            if not pairs:
                continue
            comparison_id = "%s:%s" % (dataset, metric)
            x = [p[0] for p in pairs]
            y = [p[1] for p in pairs]
            try:
                result = paired_ttest(x, y)
                result = TestResult(t_stat=result.t_stat, df=result.df,
                                    p_two_tailed=result.p_two_tailed,
                                    p_adjusted=result.p_adjusted,
                                    n_pairs=result.n_pairs,
                                    comparison_id=comparison_id)
            except (ZeroVarianceError, TooFewPairsError):
                result = degenerate_result(len(pairs), comparison_id)
            raw.append(result)
    m = m_comparisons if m_comparisons is not None else max(1, len(raw))
    return [r.adjusted(m, alpha) for r in raw]


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def run_metadata(seg: SegmenterRef, cfg: VOICfg, connectivity: int,
                 seed_root: int | None = None, k: int | None = None) -> dict:
    """Reproducibility metadata recorded with every report."""
    return {
        "model_id": seg.model_id,
        "voi_size": list(cfg.size),
        "pad_value_image": cfg.pad_value_image,
        "pad_value_mask": cfg.pad_value_mask,
        "connectivity": connectivity,
        "seed_root": seed_root,
        "k": k,
        "empty_dice_convention": "empty-vs-empty scores 1.0, empty-vs-nonempty 0.0",
        "window_convention": "per axis [c - s/2, c - s/2 + s); click at local index s/2",
        "robustness_frame": "global frame after place-back",
        "pairing": "per-lesion within dataset",
    }


def _test_result_record(t: TestResult) -> dict:
    return {
        "comparison_id": t.comparison_id, "n_pairs": t.n_pairs, "t_stat": t.t_stat,
        "df": t.df, "p_two_tailed": t.p_two_tailed, "p_adjusted": t.p_adjusted,
        "significant": t.significant, "degenerate": t.degenerate,
    }


def _test_result_from_record(rec: dict) -> TestResult:
    return TestResult(t_stat=rec["t_stat"], df=rec["df"],
                      p_two_tailed=rec["p_two_tailed"], p_adjusted=rec["p_adjusted"],
                      n_pairs=rec["n_pairs"], comparison_id=rec["comparison_id"],
                      significant=rec["significant"], degenerate=rec["degenerate"])


def emit_report(report: StratifiedReport, format: str, path: str | Path) -> None:
    """Write the aggregate report; JSON round-trips via read_report.

    When the report carries per-lesion records, a sibling
    ``<name>_records.csv`` is written next to the aggregate file.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "json":
        doc = {
            "metadata": report.metadata,
            "groups": [g.to_record() for g in report.groups],
            "summary": [s.to_record() for s in report.summary],
            "comparisons": [_test_result_record(t) for t in report.comparisons],
            "records": [r.to_record() for r in report.records],
        }
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    elif format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as f:
            for key in sorted(report.metadata):
                f.write("# %s: %s\n" % (key, report.metadata[key]))
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["model_id", "location", "n", "dice_mean", "dice_std",
                             "robustness_mean", "robustness_std", "robustness_n"])
            for g in report.groups:
                writer.writerow([
                    g.model_id, g.location, g.n, repr(g.dice_mean), repr(g.dice_std),
                    "" if g.robustness_mean is None else repr(g.robustness_mean),
                    "" if g.robustness_std is None else repr(g.robustness_std),
                    g.robustness_n,
                ])
            if report.summary:
                f.write("# summary: model x dataset\n")
                writer.writerow(["model_id", "dataset", "n", "dice_mean", "dice_std",
                                 "robustness_mean", "robustness_std", "robustness_n"])
                for s in report.summary:
                    writer.writerow([
                        s.model_id, s.dataset, s.n, repr(s.dice_mean), repr(s.dice_std),
                        "" if s.robustness_mean is None else repr(s.robustness_mean),
                        "" if s.robustness_std is None else repr(s.robustness_std),
                        s.robustness_n,
                    ])
            if report.comparisons:
                f.write("# comparisons\n")
                writer.writerow(["comparison_id", "n_pairs", "t_stat", "df",
                                 "p_two_tailed", "p_adjusted", "significant", "degenerate"])
                for t in report.comparisons:
                    writer.writerow([
                        t.comparison_id, t.n_pairs,
                        "" if t.t_stat is None else repr(t.t_stat), t.df,
                        "" if t.p_two_tailed is None else repr(t.p_two_tailed),
                        "" if t.p_adjusted is None else repr(t.p_adjusted),
                        t.significant, t.degenerate,
                    ])
    else:
        raise ValueError("format must be 'csv' or 'json', got %r" % format)
    if report.records:
        write_records_csv(report.records, path.with_name(path.stem + "_records.csv"))


def read_report(path: str | Path) -> StratifiedReport:
    """Parse a JSON report written by emit_report."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    groups = [GroupStats(**g) for g in doc["groups"]]
    return StratifiedReport(
        groups=groups,
        summary=[DatasetStats(**s) for s in doc.get("summary", [])],
        comparisons=[_test_result_from_record(t) for t in doc["comparisons"]],
        metadata=doc["metadata"],
        records=[EvalRecord(
            lesion_id=r["lesion_id"], model_id=r["model_id"], dice=r["dice"],
            robustness=r["robustness"], location=r["location"], dataset=r["dataset"],
            flags=frozenset(r["flags"]), seed_root=r["seed_root"], error=r["error"],
        ) for r in doc["records"]],
    )
