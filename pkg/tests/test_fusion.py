import numpy as np
import pytest

from mammofuse.evaluation import auc
from mammofuse.features import FeatureTable
from mammofuse.fusion import (
    CalibrationError,
    CalibrationModel,
    MissingDlScoresError,
    aggregate_views_max,
    apply_calibration,
    fit_platt,
    fuse_average,
    leave_one_year_out_folds,
    load_dl_scores,
    run_loyo_pipeline,
    write_dl_scores,
    write_predictions_csv,
)
from mammofuse.learners import LearnerParams
from mammofuse.logistic import sigmoid
from mammofuse.manifest import ExamRecord

FAST_PARAMS = LearnerParams(rf_trees=25, bswims_bootstraps=4, svm_epochs=100, lasso_grid_size=4)

VIEWS = (("L", "CC"), ("L", "MLO"), ("R", "CC"), ("R", "MLO"))


def record(pid, year, label, lat="L", view="CC"):
    return ExamRecord(
        patient_id=pid,
        year=year,
        laterality=lat,
        view_kind=view,
        age_years=50.0,
        label=label,
        pixel_spacing_mm=0.1,
        image_path=f"{pid}_{lat}_{view}.pgm",
    )


class TestFolds:
    def test_one_fold_per_year(self):
        records = [record(f"P{i}", 2014 + i % 6, label=i % 2) for i in range(24)]
        folds = leave_one_year_out_folds(records)
        assert [f.held_out_year for f in folds] == [2014, 2015, 2016, 2017, 2018, 2019]

    def test_single_year_rejected(self):
        with pytest.raises(ValueError):
            leave_one_year_out_folds([record("P1", 2016, 0), record("P2", 2016, 1)])

    def test_partition_property(self):
        records = [record(f"P{i}", 2015 + i % 3, label=i % 2) for i in range(18)]
        folds = leave_one_year_out_folds(records)
        tested = [pid for f in folds for pid in f.test_patient_ids]
        assert sorted(tested) == sorted({r.patient_id for r in records})
        for f in folds:
            assert not set(f.test_patient_ids) & set(f.train_patient_ids)

    def test_training_complement_must_keep_a_positive(self):
        records = [
            record("P1", 2016, 1),
            record("P2", 2017, 0),
            record("P3", 2018, 0),
        ]
        with pytest.raises(ValueError, match="positive"):
            leave_one_year_out_folds(records)


class TestPlatt:
    def test_well_calibrated_scores_recover_identity(self):
        rng = np.random.default_rng(40)
        scores = rng.uniform(0.05, 0.95, size=10_000)
        labels = (rng.random(10_000) < scores).astype(int)
        model = fit_platt(scores, labels)
        assert abs(model.a - 1.0) < 0.1
        assert abs(model.b) < 0.1

    def test_uninformative_scores_collapse_to_prevalence(self):
        rng = np.random.default_rng(41)
        scores = rng.uniform(0.1, 0.9, size=5000)
        labels = (rng.random(5000) < 0.3).astype(int)
        model = fit_platt(scores, labels)
        assert abs(model.a) < 0.1
        assert apply_calibration(model, 0.5) == pytest.approx(labels.mean(), abs=0.05)

    def test_rank_preserved_when_slope_positive(self):
        rng = np.random.default_rng(42)
        for trial in range(20):
            n = 120
            labels = rng.integers(0, 2, size=n)
            labels[:2] = [0, 1]
            scores = np.clip(rng.normal(0.4 + 0.25 * labels, 0.18), 0.01, 0.99)
            model = fit_platt(scores, labels)
            if model.a <= 0:
                continue
            calibrated = apply_calibration(model, scores)
            assert abs(auc(scores, labels) - auc(calibrated, labels)) <= 1e-12

    def test_single_class_rejected(self):
        with pytest.raises(CalibrationError):
            fit_platt([0.2, 0.4], [1, 1])


class TestApplyCalibration:
    def test_identity_parameters(self):
        model = CalibrationModel(a=1.0, b=0.0)
        for p in (0.001, 0.25, 0.5, 0.9, 0.999):
            assert apply_calibration(model, p) == pytest.approx(p, abs=1e-5)

    def test_negative_shift_at_half(self):
        model = CalibrationModel(a=1.0, b=-2.0)
        assert apply_calibration(model, 0.5) == pytest.approx(float(sigmoid(-2.0)), abs=1e-9)

    def test_monotone_when_slope_positive(self):
        model = CalibrationModel(a=1.7, b=0.4)
        grid = np.linspace(0.01, 0.99, 50)
        out = apply_calibration(model, grid)
        assert np.all(np.diff(out) > 0)
        assert np.all((out > 0) & (out < 1))


class TestAggregationAndFusion:
    def test_max_of_views(self):
        assert aggregate_views_max([0.1, 0.2, 0.9, 0.3]) == 0.9

    def test_singleton(self):
        assert aggregate_views_max([0.4]) == 0.4

    def test_all_equal(self):
        assert aggregate_views_max([0.5, 0.5, 0.5, 0.5]) == 0.5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            aggregate_views_max([])

    def test_fuse_mean(self):
        assert fuse_average(0.6, 0.8) == pytest.approx(0.7)

    def test_fuse_idempotent_and_bounded(self):
        assert fuse_average(0.37, 0.37) == 0.37
        assert 0.2 <= fuse_average(0.2, 0.9) <= 0.9

    def test_fuse_symmetric(self):
        assert fuse_average(0.21, 0.83) == fuse_average(0.83, 0.21)


def synthetic_cohort(n_per_year=12, years=(2016, 2017, 2018), p=10, seed=0):
    """View-level feature cache plus matching records and DL scores."""
    rng = np.random.default_rng(seed)
    records, dl = [], {}
    pid_l, year_l, lat_l, view_l, label_l, rows = [], [], [], [], [], []
    i = 0
    for year in years:
        for _ in range(n_per_year):
            pid = f"P{i:04d}"
            label = int(i % 4 == 0)
            for lat, view in VIEWS:
                records.append(record(pid, year, label, lat, view))
                x = rng.standard_normal(p)
                if label:
                    x[:2] += 1.6
                pid_l.append(pid)
                year_l.append(year)
                lat_l.append(lat)
                view_l.append(view)
                label_l.append(label)
                rows.append(x)
                z = rng.normal(1.2 if label else -1.2, 1.0)
                dl[(pid, year, lat, view)] = float(sigmoid(z))
            i += 1
    table = FeatureTable(
        patient_id=pid_l,
        year=np.array(year_l),
        laterality=lat_l,
        view=view_l,
        label=np.array(label_l),
        X=np.array(rows),
    )
    return table, records, dl


@pytest.fixture(scope="module")
def cohort():
    return synthetic_cohort()


class TestLoyoPipeline:
    def test_every_patient_scored_once(self, cohort):
        table, records, dl = cohort
        result = run_loyo_pipeline(table, records, dl, seed=5, params=FAST_PARAMS)
        pids = [s.patient_id for s in result.patient_scores]
        assert sorted(pids) == sorted({r.patient_id for r in records})
        assert len(set(pids)) == len(pids)
        for s in result.patient_scores:
            assert s.fused == pytest.approx(0.5 * (s.rad_cal + s.dl_cal), abs=1e-15)
            for value in (s.rad_raw, s.rad_cal, s.dl_raw, s.dl_cal, s.fused):
                assert 0.0 <= value <= 1.0

    def test_input_order_does_not_matter(self, cohort):
        table, records, dl = cohort
        base = run_loyo_pipeline(table, records, dl, seed=5, params=FAST_PARAMS)

        rng = np.random.default_rng(77)
        perm = rng.permutation(len(table.patient_id))
        shuffled_table = FeatureTable(
            patient_id=[table.patient_id[i] for i in perm],
            year=table.year[perm],
            laterality=[table.laterality[i] for i in perm],
            view=[table.view[i] for i in perm],
            label=table.label[perm],
            X=table.X[perm],
        )
        shuffled_records = [records[i] for i in rng.permutation(len(records))]
        again = run_loyo_pipeline(shuffled_table, shuffled_records, dl, seed=5, params=FAST_PARAMS)
        for a, b in zip(base.patient_scores, again.patient_scores):
            assert a == b

    def test_missing_dl_scores_abort_with_listing(self, cohort):
        table, records, dl = cohort
        partial = dict(dl)
        key = (records[0].patient_id, records[0].year, records[0].laterality, records[0].view_kind)
        del partial[key]
        with pytest.raises(MissingDlScoresError) as err:
            run_loyo_pipeline(table, records, partial, seed=5, params=FAST_PARAMS)
        assert key in err.value.missing

    def test_allow_missing_dl_drops_patient(self, cohort):
        table, records, dl = cohort
        partial = dict(dl)
        victim = records[0].patient_id
        del partial[(victim, records[0].year, records[0].laterality, records[0].view_kind)]
        result = run_loyo_pipeline(
            table, records, partial, seed=5, params=FAST_PARAMS, allow_missing_dl=True
        )
        assert victim not in {s.patient_id for s in result.patient_scores}

    def test_rad_only_fuses_to_rad(self, cohort):
        table, records, _ = cohort
        result = run_loyo_pipeline(table, records, None, seed=5, params=FAST_PARAMS, use_dl=False)
        for s in result.patient_scores:
            assert s.dl_raw is None and s.dl_cal is None
            assert s.fused == s.rad_cal

    def test_dl_only_fuses_to_dl(self, cohort):
        table, records, dl = cohort
        result = run_loyo_pipeline(table, records, dl, seed=5, params=FAST_PARAMS, use_rad=False)
        for s in result.patient_scores:
            assert s.rad_raw is None and s.rad_cal is None
            assert s.fused == s.dl_cal

    def test_bundles_written_per_fold(self, cohort, tmp_path):
        import json

        table, records, dl = cohort
        run_loyo_pipeline(
            table, records, dl, seed=5, params=FAST_PARAMS, models_dir=tmp_path / "models"
        )
        files = sorted((tmp_path / "models").glob("fold_*.json"))
        assert [f.name for f in files] == ["fold_2016.json", "fold_2017.json", "fold_2018.json"]
        bundle = json.loads(files[0].read_text())
        assert bundle["calibration"]["rad"] is not None
        assert set(bundle["ensemble"]["members"]) == {
            "knn", "svm", "lasso", "bswims", "lda", "nb", "rf",
        }

        # the persisted ensemble reloads into a working model
        from mammofuse.learners import SubEnsemble

        reloaded = SubEnsemble.from_dict(bundle["ensemble"])
        probs = reloaded.predict_proba(table.X[:8])
        assert np.all((probs >= 0) & (probs <= 1))


class TestWireFormats:
    def test_dl_scores_roundtrip(self, tmp_path):
        rows = [("P1", 2016, "L", "CC", 0.25), ("P1", 2016, "R", "MLO", 0.75)]
        path = tmp_path / "dl.csv"
        write_dl_scores(path, rows)
        loaded = load_dl_scores(path)
        assert loaded[("P1", 2016, "L", "CC")] == 0.25
        assert len(loaded) == 2

    def test_dl_scores_validation(self, tmp_path):
        path = tmp_path / "dl.csv"
        path.write_text("patient_id,year,laterality,view,dl_score\nP1,2016,L,CC,1.5\n")
        with pytest.raises(ValueError):
            load_dl_scores(path)
        path.write_text("wrong,header\n")
        with pytest.raises(ValueError):
            load_dl_scores(path)

    def test_predictions_csv_header_and_blanks(self, tmp_path):
        from mammofuse.fusion import PatientScore

        scores = [
            PatientScore("P1", 2016, 1, 0.5, 0.6, None, None, 0.6),
        ]
        path = tmp_path / "pred.csv"
        write_predictions_csv(path, scores)
        lines = path.read_text().splitlines()
        assert lines[0] == "patient_id,year,label,rad_raw,rad_cal,dl_raw,dl_cal,fused"
        assert lines[1] == "P1,2016,1,0.5,0.6,,,0.6"
