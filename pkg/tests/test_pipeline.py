import json

import numpy as np
import pytest

import ulsforge.pipeline as pl
from adapters import COPY_MASK, EMPTY_MASK, WRONG_DIMS, write_adapter
from synth import GROW_WINDOW, make_case, make_manifest
from ulsforge import (
    EvalRecord,
    GrowParams,
    Manifest,
    ManifestEntry,
    SegmenterRef,
    VOICfg,
    aggregate_by_location,
    compare_models,
    emit_report,
    load_manifest,
    read_records_csv,
    read_report,
    run_dice_eval,
    run_metadata,
    run_robustness_eval,
    save_manifest,
    split_patients,
    write_records_csv,
)
from ulsforge.errors import (
    DuplicateLesionIdError,
    EmptyRecordsError,
    MissingFileError,
    NoPatientsError,
    PairingMismatchError,
)

BUILTIN = SegmenterRef.builtin(GrowParams(hu_window=GROW_WINDOW))
SMALL_CFG = VOICfg(size=(32, 32, 16))


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


def test_load_manifest_json(tmp_path):
    path = make_manifest(tmp_path, 4, lesions_per_patient=2)
    manifest = load_manifest(path)
    assert len(manifest.entries) == 4
    assert manifest.patients() == ["pat000", "pat001"]
    assert manifest.datasets() == ["synthetic"]


def test_empty_manifest_is_valid(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"entries": []}))
    assert load_manifest(path).entries == []


def test_duplicate_lesion_id_rejected(tmp_path):
    img, msk = make_case(tmp_path, "c0")
    entry = {"lesion_id": "dup", "patient_id": "p", "image_path": img.name,
             "mask_path": msk.name}
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"entries": [entry, dict(entry)]}))
    with pytest.raises(DuplicateLesionIdError):
        load_manifest(path)


def test_missing_files_listed_exhaustively(tmp_path):
    img, msk = make_case(tmp_path, "c0")
    entries = [
        {"lesion_id": "a", "patient_id": "p", "image_path": img.name,
         "mask_path": "gone_mask.nii.gz"},
        {"lesion_id": "b", "patient_id": "p", "image_path": "gone_img.nii.gz",
         "mask_path": msk.name},
    ]
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"entries": entries}))
    with pytest.raises(MissingFileError) as err:
        load_manifest(path)
    assert len(err.value.missing) == 2


def test_csv_import(tmp_path):
    img, msk = make_case(tmp_path, "c0")
    csv_path = tmp_path / "m.csv"
    csv_path.write_text(
        "lesion_id,patient_id,dataset,location,image_path,mask_path,click_x,click_y,click_z\n"
        "l1,p1,setA,liver,%s,%s,24,24,16\n" % (img.name, msk.name)
    )
    manifest = load_manifest(csv_path)
    assert manifest.entries[0].click == (24, 24, 16)
    assert manifest.entries[0].dataset == "setA"


def test_table_style_row_counts(tmp_path):
    # a manifest listing thousands of lesion rows for one dataset loads 1:1
    img, msk = make_case(tmp_path, "c0")
    entries = [
        {"lesion_id": "l%05d" % i, "patient_id": "p%04d" % (i // 3),
         "dataset": "whole-body", "image_path": img.name, "mask_path": msk.name}
        for i in range(5737)
    ]
    path = tmp_path / "big.json"
    path.write_text(json.dumps({"entries": entries}))
    manifest = load_manifest(path)
    assert sum(1 for e in manifest.entries if e.dataset == "whole-body") == 5737


def test_save_load_roundtrip(tmp_path):
    path = make_manifest(tmp_path, 3)
    manifest = load_manifest(path)
    out = tmp_path / "copy.json"
    save_manifest(manifest, out)
    again = load_manifest(out)
    assert [e.lesion_id for e in again.entries] == [e.lesion_id for e in manifest.entries]


# ---------------------------------------------------------------------------
# split
# ---------------------------------------------------------------------------


def entries_for_patients(tmp_path, lesions_per_patient):
    img, msk = make_case(tmp_path, "c0")
    entries = []
    for p, n in enumerate(lesions_per_patient):
        for j in range(n):
            entries.append(ManifestEntry(
                lesion_id="p%d-l%d" % (p, j), patient_id="pat%d" % p,
                image_path=str(img), mask_path=str(msk)))
    return Manifest(entries)


def test_split_fraction_arithmetic(tmp_path):
    manifest = entries_for_patients(tmp_path, [1] * 10)
    train, test = split_patients(manifest, 0.2, seed=1)
    assert len(test.patients()) == 2
    assert len(train.patients()) == 8


def test_split_never_separates_a_patient(tmp_path):
    manifest = entries_for_patients(tmp_path, [5, 1, 2, 3, 4])
    train, test = split_patients(manifest, 0.4, seed=3)
    train_p = set(train.patients())
    test_p = set(test.patients())
    assert not train_p & test_p
    assert train_p | test_p == set(manifest.patients())
    all_ids = {e.lesion_id for e in manifest.entries}
    assert {e.lesion_id for e in train.entries} | {e.lesion_id for e in test.entries} == all_ids
    for side in (train, test):
        for e in side.entries:
            assert e.patient_id in (set(side.patients()))


def test_split_deterministic(tmp_path):
    manifest = entries_for_patients(tmp_path, [2] * 7)
    a = split_patients(manifest, 0.3, seed=42)
    b = split_patients(manifest, 0.3, seed=42)
    assert [e.lesion_id for e in a[1].entries] == [e.lesion_id for e in b[1].entries]
    c = split_patients(manifest, 0.3, seed=43)
    assert ([e.lesion_id for e in a[1].entries]
            != [e.lesion_id for e in c[1].entries])


def test_split_guards(tmp_path):
    with pytest.raises(NoPatientsError):
        split_patients(Manifest([]), 0.2, 0)
    manifest = entries_for_patients(tmp_path, [1, 1])
    with pytest.raises(ValueError):
        split_patients(manifest, 1.0, 0)


# ---------------------------------------------------------------------------
# evaluation runs
# ---------------------------------------------------------------------------


def test_builtin_dice_run_is_perfect(tmp_path):
    manifest = load_manifest(make_manifest(tmp_path, 5))
    records = run_dice_eval(manifest, BUILTIN, SMALL_CFG)
    assert len(records) == 5
    assert [r.lesion_id for r in records] == sorted(r.lesion_id for r in records)
    for r in records:
        assert r.dice == 1.0
        assert r.flags == frozenset()
        assert r.robustness is None


def test_copy_adapter_echoes_ground_truth(tmp_path):
    # adapter copies its own input VOI mask: crop the GT with the same click
    manifest = load_manifest(make_manifest(tmp_path, 2))
    records = {}
    for entry in manifest.entries:
        image, mask, instance = pl._resolve_lesion(entry, 26)
        from ulsforge import crop_voi, isolate_central_lesion, write_volume
        voi = crop_voi(image, mask, instance.center, SMALL_CFG)
        gt_local = isolate_central_lesion(voi.mask, voi.local_click, 26)
        gt_path = tmp_path / ("%s_gtvoi.nii.gz" % entry.lesion_id)
        write_volume(gt_local, gt_path)
        command = write_adapter(tmp_path, COPY_MASK,
                                name="copy_%s.py" % entry.lesion_id) + " " + str(gt_path)
        single = Manifest([entry])
        recs = run_dice_eval(single, SegmenterRef.external(command), SMALL_CFG)
        records[entry.lesion_id] = recs[0]
    assert all(r.dice == 1.0 for r in records.values())


def test_empty_adapter_zero_dice_with_flag(tmp_path):
    manifest = load_manifest(make_manifest(tmp_path, 2))
    command = write_adapter(tmp_path, EMPTY_MASK)
    records = run_dice_eval(manifest, SegmenterRef.external(command), SMALL_CFG)
    for r in records:
        assert r.dice == 0.0
        assert pl.FLAG_EMPTY_PREDICTION in r.flags


def test_malformed_adapter_yields_flagged_records(tmp_path):
    manifest = load_manifest(make_manifest(tmp_path, 3))
    command = write_adapter(tmp_path, WRONG_DIMS)
    records = run_dice_eval(manifest, SegmenterRef.external(command), SMALL_CFG)
    assert len(records) == len(manifest.entries)
    for r in records:
        assert pl.FLAG_ERROR in r.flags
        assert "dims" in r.error
        assert r.dice == 0.0


def test_builtin_robustness_is_perfect_for_interior_lesions(tmp_path):
    manifest = load_manifest(make_manifest(tmp_path, 4))
    records = run_robustness_eval(manifest, BUILTIN, SMALL_CFG, seed_root=7)
    assert len(records) == 4
    for r in records:
        assert r.dice == 1.0
        assert r.robustness == 1.0
        assert r.seed_root == 7


def test_robustness_issues_three_segmentations_per_lesion(tmp_path, monkeypatch):
    manifest = load_manifest(make_manifest(tmp_path, 3))
    calls = []
    real = pl.segment

    def counting(voi_image, local_click, ref, strict=True):
        calls.append(local_click)
        return real(voi_image, local_click, ref, strict=strict)

    monkeypatch.setattr(pl, "segment", counting)
    run_robustness_eval(manifest, BUILTIN, SMALL_CFG, seed_root=0, k=2, workers=1)
    assert len(calls) == 3 * len(manifest.entries)


def test_empty_adapter_robustness_is_one_by_convention(tmp_path):
    manifest = load_manifest(make_manifest(tmp_path, 2))
    command = write_adapter(tmp_path, EMPTY_MASK)
    records = run_robustness_eval(manifest, SegmenterRef.external(command),
                                  SMALL_CFG, seed_root=0)
    for r in records:
        assert r.robustness == 1.0  # empty-vs-empty convention
        assert r.dice == 0.0
        assert pl.FLAG_EMPTY_PREDICTION in r.flags


def test_run_determinism_across_worker_counts(tmp_path):
    manifest = load_manifest(make_manifest(tmp_path, 6, lesions_per_patient=2))
    a = run_robustness_eval(manifest, BUILTIN, SMALL_CFG, seed_root=99, workers=1)
    b = run_robustness_eval(manifest, BUILTIN, SMALL_CFG, seed_root=99, workers=4)
    path_a = tmp_path / "a.csv"
    path_b = tmp_path / "b.csv"
    write_records_csv(a, path_a)
    write_records_csv(b, path_b)
    assert path_a.read_bytes() == path_b.read_bytes()


def test_worker_env_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("ULSFORGE_WORKERS", "1")
    assert pl._effective_workers(8) == 1
    monkeypatch.delenv("ULSFORGE_WORKERS")
    assert pl._effective_workers(3) == 3


def test_multi_component_mask_needs_disambiguation(tmp_path):
    img, msk = make_case(tmp_path, "two", centers=((10, 10, 10), (30, 30, 20)),
                         shape=(48, 48, 32))
    entries = [ManifestEntry(lesion_id="ambiguous", patient_id="p",
                             image_path=str(img), mask_path=str(msk))]
    records = run_dice_eval(Manifest(entries), BUILTIN, SMALL_CFG)
    assert pl.FLAG_ERROR in records[0].flags
    # a recorded click resolves it
    entries = [ManifestEntry(lesion_id="ok", patient_id="p", image_path=str(img),
                             mask_path=str(msk), click=(10, 10, 10))]
    records = run_dice_eval(Manifest(entries), BUILTIN, SMALL_CFG)
    assert records[0].dice == 1.0


def test_component_label_selects_lesion(tmp_path):
    img, msk = make_case(tmp_path, "two", centers=((10, 10, 10), (30, 30, 20)),
                         shape=(48, 48, 32))
    entries = [ManifestEntry(lesion_id="second", patient_id="p", image_path=str(img),
                             mask_path=str(msk), component_label=2)]
    # binary mask has ids {0,1} only; label 2 is absent -> flagged
    records = run_dice_eval(Manifest(entries), BUILTIN, SMALL_CFG)
    assert pl.FLAG_ERROR in records[0].flags


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


def rec(lid, model="m", d=1.0, rob=None, loc="liver", dataset="ds"):
    return EvalRecord(lesion_id=lid, model_id=model, dice=d, robustness=rob,
                      location=loc, dataset=dataset)


def test_single_record_group():
    report = aggregate_by_location([rec("a", d=0.8)])
    row = next(g for g in report.groups if g.location == "liver")
    assert row.n == 1
    assert row.dice_mean == 0.8
    assert row.dice_std == 0.0


def test_two_record_stats():
    report = aggregate_by_location([rec("a", d=0.6), rec("b", d=0.8)])
    row = next(g for g in report.groups if g.location == "liver")
    assert row.dice_mean == pytest.approx(0.7, abs=1e-15)
    assert row.dice_std == pytest.approx(0.14142135623730953, abs=1e-12)


def test_blank_location_becomes_undefined_and_sorts_last():
    records = [rec("a", loc="lung"), rec("b", loc=""), rec("c", loc="bone")]
    report = aggregate_by_location(records)
    locations = [g.location for g in report.groups]
    assert locations == ["bone", "lung", "undefined", "(all)"]
    counts = sum(g.n for g in report.groups if g.location != "(all)")
    assert counts == 3


def test_aggregate_requires_records():
    with pytest.raises(EmptyRecordsError):
        aggregate_by_location([])


def test_aggregate_tracks_robustness_subset():
    records = [rec("a", rob=0.9), rec("b", rob=None)]
    report = aggregate_by_location(records)
    overall = next(g for g in report.groups if g.location == "(all)")
    assert overall.n == 2
    assert overall.robustness_n == 1
    assert overall.robustness_mean == 0.9


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------


def test_identical_runs_are_degenerate():
    a = [rec("l%d" % i, d=0.5 + i / 100) for i in range(5)]
    results = compare_models(a, a, metrics=("dice",))
    assert len(results) == 1
    assert results[0].degenerate
    assert not results[0].significant
    assert results[0].p_two_tailed is None


def test_constant_shift_is_degenerate():
    a = [rec("l%d" % i, d=0.5 + i / 100) for i in range(5)]
    b = [rec(r.lesion_id, d=r.dice + 0.1) for r in a]
    results = compare_models(a, b, metrics=("dice",))
    assert results[0].degenerate


def test_known_difference_statistics():
    base = [0.5, 0.52, 0.54, 0.56, 0.58]
    a = [rec("l%d" % i, d=base[i] + (i + 1) * 0.01) for i in range(5)]
    b = [rec("l%d" % i, d=base[i]) for i in range(5)]
    results = compare_models(a, b, metrics=("dice",), m_comparisons=4)
    r = results[0]
    assert r.t_stat == pytest.approx(4.242640687119285, abs=1e-9)
    assert r.df == 4
    assert r.p_two_tailed == pytest.approx(0.013235599563682695, abs=1e-9)
    assert r.p_adjusted == pytest.approx(0.05294239825473078, abs=1e-9)
    assert not r.significant


def test_pairing_mismatch_reports_symmetric_difference():
    a = [rec("x"), rec("y")]
    b = [rec("y"), rec("z")]
    with pytest.raises(PairingMismatchError) as err:
        compare_models(a, b)
    assert err.value.only_a == ["x"]
    assert err.value.only_b == ["z"]


def test_comparisons_stratified_by_dataset():
    a = [rec("l%d" % i, d=0.5 + i * 0.07, rob=0.8 + i * 0.01,
             dataset="ds%d" % (i % 2)) for i in range(8)]
    b = [rec(r.lesion_id, d=r.dice - 0.01 * (1 + i % 3),
             rob=r.robustness - 0.005, dataset=r.dataset) for i, r in enumerate(a)]
    results = compare_models(a, b)
    ids = [r.comparison_id for r in results]
    assert ids == ["ds0:dice", "ds0:robustness", "ds1:dice", "ds1:robustness"]


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def test_csv_report_row_count(tmp_path):
    records = [rec("a", d=0.5), rec("b", d=0.7), rec("c", d=0.9)]
    report = aggregate_by_location(records, {"seed_root": 1})
    out = tmp_path / "agg.csv"
    emit_report(report, "csv", out)
    lines = out.read_text().splitlines()
    data_lines = [l for l in lines if l and not l.startswith("#")]
    # groups header + group rows, then summary header + summary rows
    assert len(data_lines) == 1 + len(report.groups) + 1 + len(report.summary)
    records_csv = tmp_path / "agg_records.csv"
    assert records_csv.exists()
    assert len(records_csv.read_text().splitlines()) == 1 + 3


def test_json_report_roundtrip(tmp_path):
    records = [rec("a", d=0.5, rob=0.75), rec("b", d=0.7, rob=None, loc="lung")]
    report = aggregate_by_location(records, run_metadata(BUILTIN, SMALL_CFG, 26, 5, 2))
    report.comparisons = compare_models(
        [rec("l%d" % i, d=0.1 * i) for i in range(4)],
        [rec("l%d" % i, d=0.1 * i + 0.01 * (i % 3)) for i in range(4)],
        metrics=("dice",))
    out = tmp_path / "report.json"
    emit_report(report, "json", out)
    parsed = read_report(out)
    assert parsed.groups == report.groups
    assert parsed.summary == report.summary
    assert parsed.comparisons == report.comparisons
    assert parsed.metadata == report.metadata
    assert parsed.records == report.records


def test_summary_has_model_by_dataset_layout():
    records = []
    for model in ("model-a", "model-b"):
        for ds in ("set1", "set2"):
            for i in range(3):
                records.append(EvalRecord(
                    lesion_id="%s-%s-%d" % (model, ds, i), model_id=model,
                    dice=0.6 + i * 0.1, robustness=0.7 + i * 0.1,
                    location="liver", dataset=ds))
    report = aggregate_by_location(records)
    cells = [(s.model_id, s.dataset) for s in report.summary]
    assert cells == [("model-a", "set1"), ("model-a", "set2"),
                     ("model-b", "set1"), ("model-b", "set2")]
    for s in report.summary:
        assert s.n == 3
        assert s.dice_mean == pytest.approx(0.7)
        assert s.robustness_mean == pytest.approx(0.8)
        assert s.robustness_std == pytest.approx(0.1)


def test_report_metadata_records_conventions(tmp_path):
    metadata = run_metadata(BUILTIN, SMALL_CFG, 26, seed_root=11, k=2)
    assert metadata["voi_size"] == [32, 32, 16]
    assert metadata["pad_value_image"] == -1024
    assert "empty_dice_convention" in metadata
    assert metadata["seed_root"] == 11


def test_records_csv_roundtrip(tmp_path):
    records = [
        EvalRecord(lesion_id="a", model_id="m", dice=0.123456789012345,
                   robustness=0.5, location="liver", dataset="d",
                   flags=frozenset({"truncated"}), seed_root=3),
        EvalRecord(lesion_id="b", model_id="m", dice=0.0, robustness=None,
                   location="undefined", dataset="d",
                   flags=frozenset({"error"}), error="mask gone"),
    ]
    path = tmp_path / "records.csv"
    write_records_csv(records, path)
    assert read_records_csv(path) == records
    header = path.read_text().splitlines()[0]
    assert header == ",".join(pl.CSV_COLUMN_ORDER)


def test_aggregate_means_match_csv_within_tolerance(tmp_path):
    rng = np.random.default_rng(2)
    records = [rec("l%d" % i, d=float(rng.random())) for i in range(50)]
    report = aggregate_by_location(records)
    path = tmp_path / "records.csv"
    write_records_csv(records, path)
    parsed = read_records_csv(path)
    recomputed = float(np.mean([r.dice for r in parsed]))
    overall = next(g for g in report.groups if g.location == "(all)")
    assert abs(recomputed - overall.dice_mean) < 1e-12
