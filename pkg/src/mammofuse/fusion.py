"""Leave-one-year-out folds, probability calibration and score fusion.

Each acquisition year is held out in turn: the learner ensemble trains on
view-level features of every other year, per-view probabilities collapse
to one patient score by taking the maximum over available views, and two
scalar logistic maps (one per branch) calibrate the patient scores. The
calibration maps are fitted purely on training-year patients, using the
fold model's own resubstitution scores, so nothing from a held-out year
touches the quantities used to score it. The fused risk is the plain
average of the two calibrated probabilities.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .features import FEATURE_SCHEMA_VERSION, FeatureTable
from .learners import LearnerParams, SubEnsemble
from .logistic import fit_scalar_logistic, sigmoid
from .manifest import ExamRecord
from .seeding import derive_int

PROB_CLAMP = 1e-6

PREDICTIONS_HEADER = "patient_id,year,label,rad_raw,rad_cal,dl_raw,dl_cal,fused"
DL_SCORES_HEADER = "patient_id,year,laterality,view,dl_score"


class CalibrationError(ValueError):
    """Calibration could not be fitted (single class or no convergence)."""


class MissingDlScoresError(ValueError):
    def __init__(self, missing: list[tuple]):
        self.missing = missing
        preview = ", ".join("/".join(str(p) for p in key) for key in missing[:10])
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        super().__init__(f"missing deep-learning scores for {len(missing)} views: {preview}{more}")


@dataclass(frozen=True)
class FoldSpec:
    held_out_year: int
    train_patient_ids: tuple[str, ...]
    test_patient_ids: tuple[str, ...]


def _patient_index(records: list[ExamRecord]) -> dict[str, tuple[int, int]]:
    patients: dict[str, tuple[int, int]] = {}
    for rec in records:
        entry = (rec.year, rec.label)
        seen = patients.setdefault(rec.patient_id, entry)
        if seen != entry:
            raise ValueError(f"patient {rec.patient_id} has inconsistent year or label")
    return patients


def leave_one_year_out_folds(records: list[ExamRecord]) -> list[FoldSpec]:
    """One fold per distinct year: that year's patients are the test set."""
    patients = _patient_index(records)
    years = sorted({year for year, _ in patients.values()})
    if len(years) < 2:
        raise ValueError("leave-one-year-out needs at least 2 distinct years")
    folds = []
    for year in years:
        test = tuple(sorted(p for p, (y, _) in patients.items() if y == year))
        train = tuple(sorted(p for p, (y, _) in patients.items() if y != year))
        train_labels = {patients[p][1] for p in train}
        if 1 not in train_labels:
            raise ValueError(f"holding out {year} leaves no positive training case")
        if 0 not in train_labels:
            raise ValueError(f"holding out {year} leaves no negative training case")
        folds.append(FoldSpec(year, train, test))
    return folds


@dataclass(frozen=True)
class CalibrationModel:
    """Monotone (when a > 0) logistic map p' = sigmoid(a*logit(p) + b)."""

    a: float
    b: float


def _logit_clamped(p):
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    return np.log(p / (1.0 - p))


def fit_platt(scores, labels, strict: bool = True) -> CalibrationModel:
    """Maximum-likelihood logistic recalibration of probability scores.

    With ``strict`` a non-converged fit raises ``CalibrationError``; with
    separable scores the non-strict mode returns the best finite iterate,
    which is still a monotone map.
    """
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if labels.size == 0 or labels.min() == labels.max():
        raise CalibrationError("calibration needs both classes")
    try:
        a, b, _ = fit_scalar_logistic(_logit_clamped(scores), labels, strict=strict)
    except ArithmeticError as exc:
        raise CalibrationError(str(exc)) from exc
    return CalibrationModel(a=a, b=b)


def apply_calibration(model: CalibrationModel, p):
    """Map raw probabilities through the fitted logistic; output in (0, 1)."""
    out = sigmoid(model.a * _logit_clamped(p) + model.b)
    return float(out) if np.ndim(p) == 0 else out


def aggregate_views_max(view_probs) -> float:
    """Patient score = highest probability among the available views."""
    probs = list(view_probs)
    if not probs:
        raise ValueError("cannot aggregate an empty set of view probabilities")
    return float(max(probs))


def fuse_average(rad_cal: float, dl_cal: float) -> float:
    return 0.5 * (rad_cal + dl_cal)


@dataclass
class PatientScore:
    patient_id: str
    year: int
    label: int
    rad_raw: float | None
    rad_cal: float | None
    dl_raw: float | None
    dl_cal: float | None
    fused: float


@dataclass
class FoldOutput:
    year: int
    n_train: int
    n_test: int
    # Per-branch calibrated training-patient scores, for threshold selection.
    train_scores: dict[str, tuple[np.ndarray, np.ndarray]]


@dataclass
class LoyoResult:
    patient_scores: list[PatientScore]
    folds: list[FoldOutput]
    notes: list[str]


def _rows_by_patient(table: FeatureTable) -> dict[str, list[int]]:
    rows: dict[str, list[int]] = {}
    for i, pid in enumerate(table.patient_id):
        rows.setdefault(pid, []).append(i)
    return rows


def _ordered_rows(table: FeatureTable, pids: list[str], rows_of: dict[str, list[int]]) -> list[int]:
    # Deterministic training order regardless of cache or manifest row order.
    ordered: list[int] = []
    for pid in pids:
        by_view = sorted(rows_of[pid], key=lambda i: (table.laterality[i], table.view[i]))
        ordered.extend(by_view)
    return ordered


def run_loyo_pipeline(
    table: FeatureTable,
    records: list[ExamRecord],
    dl_scores: dict[tuple, float] | None,
    seed: int,
    params: LearnerParams = LearnerParams(),
    use_rad: bool = True,
    use_dl: bool = True,
    allow_missing_dl: bool = False,
    models_dir: str | Path | None = None,
) -> LoyoResult:
    """Run the full leave-one-year-out score pipeline.

    Per fold: train the sub-ensemble on training-year views, score every
    view, aggregate to patients, calibrate both branches on training-year
    patients, and emit calibrated and fused scores for the held-out year.
    Fold model bundles (scaler, members, calibration parameters) are
    persisted under ``models_dir`` when given.
    """
    if not use_rad and not use_dl:
        raise ValueError("at least one of the radiomics and DL branches must be active")
    notes: list[str] = []
    patients = _patient_index(records)
    views_of: dict[str, list[ExamRecord]] = {}
    for rec in records:
        views_of.setdefault(rec.patient_id, []).append(rec)

    dropped: set[str] = set()
    if use_dl:
        if dl_scores is None:
            raise ValueError("DL branch active but no scores supplied")
        missing = [
            (r.patient_id, r.year, r.laterality, r.view_kind)
            for r in records
            if (r.patient_id, r.year, r.laterality, r.view_kind) not in dl_scores
        ]
        if missing:
            if not allow_missing_dl:
                raise MissingDlScoresError(missing)
            for key in missing:
                dropped.add(key[0])
            notes.append(f"dropped {len(dropped)} patients with missing DL scores")

    rows_of = _rows_by_patient(table)
    if use_rad:
        no_features = sorted(p for p in patients if p not in rows_of and p not in dropped)
        if no_features:
            dropped.update(no_features)
            notes.append(f"dropped {len(no_features)} patients with no extracted views")

    records_used = [r for r in records if r.patient_id not in dropped]
    if not records_used:
        raise ValueError("no patients left to score")
    folds = leave_one_year_out_folds(records_used)

    if models_dir is not None:
        models_dir = Path(models_dir)
        models_dir.mkdir(parents=True, exist_ok=True)

    def patient_dl_raw(pid: str) -> float:
        keys = [(r.patient_id, r.year, r.laterality, r.view_kind) for r in views_of[pid]]
        return aggregate_views_max(dl_scores[k] for k in keys)

    results: list[PatientScore] = []
    fold_outputs: list[FoldOutput] = []

    for fold in folds:
        train_pids = [p for p in fold.train_patient_ids if p in rows_of or not use_rad]
        test_pids = [p for p in fold.test_patient_ids if p in rows_of or not use_rad]
        train_labels = np.array([patients[p][1] for p in train_pids], dtype=np.int64)
        train_scores: dict[str, tuple[np.ndarray, np.ndarray]] = {}

        ens = None
        platt_rad = None
        rad_cal_test: dict[str, float] = {}
        rad_raw_test: dict[str, float] = {}
        if use_rad:
            train_rows = _ordered_rows(table, train_pids, rows_of)
            ens = SubEnsemble.train(
                table.X[train_rows],
                table.label[train_rows],
                seed=derive_int(seed, "fold", fold.held_out_year),
                params=params,
            )

            train_probs = ens.predict_proba(table.X[train_rows])
            offsets = np.cumsum([0] + [len(rows_of[p]) for p in train_pids])
            rad_train = np.array(
                [aggregate_views_max(train_probs[offsets[i] : offsets[i + 1]]) for i in range(len(train_pids))]
            )
            platt_rad = _fit_platt_with_fallback(rad_train, train_labels, fold.held_out_year, "rad", notes)
            train_scores["RAD"] = (apply_calibration(platt_rad, rad_train), train_labels)

            test_rows = _ordered_rows(table, test_pids, rows_of)
            test_probs = ens.predict_proba(table.X[test_rows]) if test_rows else np.empty(0)
            offsets = np.cumsum([0] + [len(rows_of[p]) for p in test_pids])
            for i, pid in enumerate(test_pids):
                raw = aggregate_views_max(test_probs[offsets[i] : offsets[i + 1]])
                rad_raw_test[pid] = raw
                rad_cal_test[pid] = apply_calibration(platt_rad, raw)

        platt_dl = None
        dl_cal_test: dict[str, float] = {}
        dl_raw_test: dict[str, float] = {}
        if use_dl:
            dl_train = np.array([patient_dl_raw(p) for p in train_pids])
            platt_dl = _fit_platt_with_fallback(dl_train, train_labels, fold.held_out_year, "dl", notes)
            train_scores["DL"] = (apply_calibration(platt_dl, dl_train), train_labels)
            for pid in test_pids:
                raw = patient_dl_raw(pid)
                dl_raw_test[pid] = raw
                dl_cal_test[pid] = apply_calibration(platt_dl, raw)

        if use_rad and use_dl:
            train_scores["ENS"] = (
                np.array(
                    [fuse_average(r, d) for r, d in zip(train_scores["RAD"][0], train_scores["DL"][0])]
                ),
                train_labels,
            )
        else:
            only = "RAD" if use_rad else "DL"
            train_scores["ENS"] = train_scores[only]

        for pid in test_pids:
            rad_cal = rad_cal_test.get(pid)
            dl_cal = dl_cal_test.get(pid)
            if rad_cal is not None and dl_cal is not None:
                fused = fuse_average(rad_cal, dl_cal)
            else:
                fused = rad_cal if rad_cal is not None else dl_cal
            results.append(
                PatientScore(
                    patient_id=pid,
                    year=fold.held_out_year,
                    label=patients[pid][1],
                    rad_raw=rad_raw_test.get(pid),
                    rad_cal=rad_cal,
                    dl_raw=dl_raw_test.get(pid),
                    dl_cal=dl_cal,
                    fused=fused,
                )
            )

        fold_outputs.append(
            FoldOutput(
                year=fold.held_out_year,
                n_train=len(train_pids),
                n_test=len(test_pids),
                train_scores=train_scores,
            )
        )

        if models_dir is not None:
            bundle = {
                "format": "mammofuse-fold-bundle",
                "schema_version": FEATURE_SCHEMA_VERSION,
                "fold_year": fold.held_out_year,
                "seed": seed,
                "ensemble": ens.to_dict() if ens is not None else None,
                "calibration": {
                    "rad": {"a": platt_rad.a, "b": platt_rad.b} if platt_rad else None,
                    "dl": {"a": platt_dl.a, "b": platt_dl.b} if platt_dl else None,
                },
            }
            path = models_dir / f"fold_{fold.held_out_year}.json"
            path.write_text(
                json.dumps(bundle, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
            )

    results.sort(key=lambda s: (s.year, s.patient_id))
    return LoyoResult(patient_scores=results, folds=fold_outputs, notes=notes)


def _fit_platt_with_fallback(scores, labels, year: int, branch: str, notes: list[str]) -> CalibrationModel:
    try:
        return fit_platt(scores, labels, strict=True)
    except CalibrationError as exc:
        if "both classes" in str(exc):
            raise
        # Separable training scores push the MLE to infinity; keep the best
        # finite iterate, which still calibrates monotonically.
        notes.append(f"fold {year}: {branch} calibration capped (separable training scores)")
        return fit_platt(scores, labels, strict=False)


# ---------------------------------------------------------------------------
# Wire formats

def load_dl_scores(path: str | Path) -> dict[tuple, float]:
    """Read view-level DL scores keyed by (patient, year, laterality, view)."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != DL_SCORES_HEADER:
        raise ValueError(f"DL scores file must start with '{DL_SCORES_HEADER}'")
    scores: dict[tuple, float] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"line {lineno}: expected 5 columns")
        key = (parts[0], int(parts[1]), parts[2], parts[3])
        value = float(parts[4])
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"line {lineno}: dl_score {value} outside [0, 1]")
        if key in scores:
            raise ValueError(f"line {lineno}: duplicate view {key}")
        scores[key] = value
    return scores


def write_dl_scores(path: str | Path, rows: list[tuple]) -> None:
    lines = [DL_SCORES_HEADER]
    for pid, year, lat, view, score in rows:
        lines.append(f"{pid},{year},{lat},{view},{float(score)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_predictions_csv(path: str | Path, scores: list[PatientScore]) -> None:
    lines = [PREDICTIONS_HEADER]
    for s in scores:
        lines.append(
            ",".join(
                [
                    s.patient_id,
                    str(s.year),
                    str(s.label),
                    _fmt(s.rad_raw),
                    _fmt(s.rad_cal),
                    _fmt(s.dl_raw),
                    _fmt(s.dl_cal),
                    _fmt(s.fused),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
