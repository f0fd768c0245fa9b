"""End-to-end orchestration: reference CDF estimation, batch feature
extraction, the scored leave-one-year-out run, and report rendering.

Every command is a pure function of its inputs, the config and the seed;
reruns produce byte-identical artifacts. Extraction fans out over a
bounded thread pool but results are assembled in manifest order, so the
worker count never changes an output byte.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .config import RunConfig
from .evaluation import (
    ConfusionMatrix,
    auc,
    auc_ci_bootstrap,
    auc_ci_delong,
    choose_threshold,
    confusion_at_threshold,
    roc_curve,
    summary_metrics,
    write_roc_csv,
)
from .features import (
    FEATURE_SCHEMA_VERSION,
    FeatureTable,
    extract_view_features,
    read_feature_cache,
    write_feature_cache,
)
from .fusion import LoyoResult, load_dl_scores, run_loyo_pipeline, write_predictions_csv
from .imaging import (
    ViewMeta,
    estimate_reference_cdf,
    load_image,
    load_reference_cdf,
    normalize_intensities,
    preprocess_view,
    resample_to_spacing,
    save_reference_cdf,
)
from .manifest import ExamRecord, parse_manifest, resolve_image_path
from .seeding import derive_rng
from .segmentation import ViewUnusableError, build_roiset, save_label_map

EXCEPTIONS_HEADER = "patient_id,year,laterality,view,reason"
FLAGS_HEADER = "patient_id,year,laterality,view,flag"

MODEL_ORDER = ("RAD", "DL", "ENS")


class PipelineError(RuntimeError):
    pass


def build_reference_cdf(manifest_path: str | Path, config: RunConfig):
    """Estimate the reference CDF from a random sample of manifest images,
    after normalization and resampling (matching the extraction chain)."""
    records = parse_manifest(manifest_path)
    if not records:
        raise PipelineError("manifest holds no rows")
    rng = derive_rng(config.seed, "refcdf")
    k = min(config.cdf_sample, len(records))
    chosen = sorted(rng.choice(len(records), size=k, replace=False).tolist())
    images = []
    for idx in chosen:
        rec = records[idx]
        img = load_image(resolve_image_path(manifest_path, rec), rec.pixel_spacing_mm)
        img = normalize_intensities(img)
        images.append(resample_to_spacing(img, config.resample_spacing_mm))
    return estimate_reference_cdf(images, config.cdf_bins)


def cmd_refcdf(manifest_path: str | Path, out_path: str | Path, config: RunConfig) -> Path:
    ref = build_reference_cdf(manifest_path, config)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    save_reference_cdf(ref, out_path)
    return out_path


def _meta_of(record: ExamRecord) -> ViewMeta:
    return ViewMeta(
        laterality=record.laterality,
        view_kind=record.view_kind,
        age_years=record.age_years,
        year=record.year,
    )


def _sanitize(reason: str) -> str:
    return reason.replace(",", ";").replace("\n", " ")


def cmd_extract(
    manifest_path: str | Path,
    refcdf_path: str | Path,
    cache_path: str | Path,
    config: RunConfig,
    jobs: int = 1,
    label_map_dir: str | Path | None = None,
) -> tuple[Path, Path, Path]:
    """Preprocess, segment and featurize every manifest view.

    Views that fail (unreadable file, no usable interior) land in an
    exceptions sidecar and are excluded from the cache; degenerate-but-
    usable views are kept and noted in a flags sidecar. More failures than
    the configured fraction aborts the run.
    """
    records = parse_manifest(manifest_path)
    if not records:
        raise PipelineError("manifest holds no rows")
    ref = load_reference_cdf(refcdf_path)
    if label_map_dir is not None:
        label_map_dir = Path(label_map_dir)
        label_map_dir.mkdir(parents=True, exist_ok=True)

    def work(record: ExamRecord):
        flags: list[str] = []
        try:
            img = load_image(resolve_image_path(manifest_path, record), record.pixel_spacing_mm)
        except Exception as exc:
            return ("error", f"image load failed: {exc}", None)
        meta = _meta_of(record)
        try:
            pre = preprocess_view(img, meta, ref, config.resample_spacing_mm, log=flags)
            rois = build_roiset(pre, config.periphery_band_mm)
        except ViewUnusableError as exc:
            return ("error", str(exc), None)
        fv = extract_view_features(pre, rois, meta, config.glcm_levels, log=flags)
        if label_map_dir is not None:
            name = f"{record.patient_id}_{record.laterality}_{record.view_kind}.png"
            save_label_map(rois, label_map_dir / name)
        return ("ok", flags, fv.values)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(work, records))
    else:
        outcomes = [work(r) for r in records]

    failures = [
        (rec, outcome[1]) for rec, outcome in zip(records, outcomes) if outcome[0] == "error"
    ]
    if len(failures) > config.extract_max_failure_fraction * len(records):
        sample = "; ".join(
            f"{rec.patient_id}/{rec.laterality}/{rec.view_kind}: {reason}"
            for rec, reason in failures[:5]
        )
        raise PipelineError(
            f"{len(failures)} of {len(records)} views failed extraction "
            f"(limit {config.extract_max_failure_fraction:.0%}): {sample}"
        )

    pid, years, lats, views, labels, rows = [], [], [], [], [], []
    exception_lines = [EXCEPTIONS_HEADER]
    flag_lines = [FLAGS_HEADER]
    for rec, outcome in zip(records, outcomes):
        key = f"{rec.patient_id},{rec.year},{rec.laterality},{rec.view_kind}"
        if outcome[0] == "error":
            exception_lines.append(f"{key},{_sanitize(outcome[1])}")
            continue
        for flag in outcome[1]:
            flag_lines.append(f"{key},{_sanitize(flag)}")
        pid.append(rec.patient_id)
        years.append(rec.year)
        lats.append(rec.laterality)
        views.append(rec.view_kind)
        labels.append(rec.label)
        rows.append(outcome[2])

    table = FeatureTable(
        patient_id=pid,
        year=np.array(years, dtype=np.int64),
        laterality=lats,
        view=views,
        label=np.array(labels, dtype=np.int64),
        X=np.array(rows, dtype=np.float64) if rows else np.empty((0, 92)),
    )
    cache_path = Path(cache_path)
    cache_path.parent.mkdir(parents=True, exist_ok=True)
    write_feature_cache(cache_path, table)
    exceptions_path = cache_path.with_name(cache_path.stem + "_exceptions.csv")
    exceptions_path.write_text("\n".join(exception_lines) + "\n", encoding="utf-8")
    flags_path = cache_path.with_name(cache_path.stem + "_flags.csv")
    flags_path.write_text("\n".join(flag_lines) + "\n", encoding="utf-8")
    return cache_path, exceptions_path, flags_path


def _branch_scores(result: LoyoResult, key: str):
    attr = {"RAD": "rad_cal", "DL": "dl_cal", "ENS": "fused"}[key]
    pairs = [(getattr(s, attr), s.label, s.year) for s in result.patient_scores]
    scores = np.array([p[0] for p in pairs], dtype=np.float64)
    labels = np.array([p[1] for p in pairs], dtype=np.int64)
    years = np.array([p[2] for p in pairs], dtype=np.int64)
    return scores, labels, years


def cmd_run(
    manifest_path: str | Path,
    cache_path: str | Path,
    dl_scores_path: str | Path | None,
    out_dir: str | Path,
    config: RunConfig,
    rad: bool = True,
    dl: bool = True,
    allow_missing_dl: bool = False,
) -> dict:
    """Score every patient under leave-one-year-out and write predictions,
    metrics JSON and per-model ROC CSVs."""
    records = parse_manifest(manifest_path)
    table = read_feature_cache(cache_path) if rad else FeatureTable([], np.empty(0, np.int64), [], [], np.empty(0, np.int64), np.empty((0, 92)))
    dl_scores = load_dl_scores(dl_scores_path) if dl else None

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_loyo_pipeline(
        table,
        records,
        dl_scores,
        seed=config.seed,
        params=config.learner_params(),
        use_rad=rad,
        use_dl=dl,
        allow_missing_dl=allow_missing_dl,
        models_dir=out_dir / "models",
    )
    write_predictions_csv(out_dir / "predictions.csv", result.patient_scores)

    model_keys = [k for k in MODEL_ORDER if (k != "RAD" or rad) and (k != "DL" or dl)]
    models_report: dict[str, dict] = {}
    fold_report = [
        {"year": f.year, "n_train": f.n_train, "n_test": f.n_test, "threshold": {}, "auc": {}}
        for f in result.folds
    ]

    for key in model_keys:
        scores, labels, years = _branch_scores(result, key)
        value = auc(scores, labels)
        if config.ci_method == "bootstrap":
            ci_low, ci_high = auc_ci_bootstrap(
                scores, labels, config.ci_bootstrap_resamples, seed=config.seed
            )
        else:
            ci_low, ci_high = auc_ci_delong(scores, labels)

        tp = fp = fn = tn = 0
        for fi, fold in enumerate(result.folds):
            if config.threshold_policy == "fixed":
                threshold = config.threshold_value
            else:
                train_scores, train_labels = fold.train_scores[key]
                threshold = choose_threshold(train_scores, train_labels)
            mask = years == fold.year
            cm = confusion_at_threshold(scores[mask], labels[mask], threshold)
            tp, fp, fn, tn = tp + cm.tp, fp + cm.fp, fn + cm.fn, tn + cm.tn
            fold_report[fi]["threshold"][key] = threshold
            fold_labels = labels[mask]
            fold_report[fi]["auc"][key] = (
                auc(scores[mask], fold_labels)
                if fold_labels.size and fold_labels.min() != fold_labels.max()
                else None
            )

        cm_total = ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)
        models_report[key] = {
            "auc": value,
            "ci_low": ci_low,
            "ci_high": ci_high,
            "confusion": {"tp": tp, "fp": fp, "fn": fn, "tn": tn},
            "metrics": summary_metrics(cm_total).as_dict(),
        }
        write_roc_csv(out_dir / f"roc_{key.lower()}.csv", roc_curve(scores, labels))

    metrics = {
        "schema_version": FEATURE_SCHEMA_VERSION,
        "seed": config.seed,
        "ci_method": config.ci_method,
        "threshold_policy": config.threshold_policy,
        "n_patients": len(result.patient_scores),
        "models": models_report,
        "folds": fold_report,
        "notes": result.notes,
    }
    (out_dir / "metrics.json").write_text(
        json.dumps(metrics, sort_keys=True, separators=(",", ":")) + "\n", encoding="utf-8"
    )
    return metrics


def _fmt3(value) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def render_report(metrics: dict) -> tuple[str, int]:
    """Render a fixed-format text table from a metrics dict.

    Returns (text, exit_code); a metrics file without folds yields a
    diagnostic and a nonzero code.
    """
    if not metrics.get("folds"):
        return "no folds", 1
    lines = [
        f"{'model':<6} {'AUC (95% CI)':<22} {'TPR':>6} {'TNR':>6} {'ACC':>6} {'F1':>6} {'BER':>6}"
    ]
    for key in MODEL_ORDER:
        entry = metrics.get("models", {}).get(key)
        if entry is None:
            continue
        m = entry["metrics"]
        ci = f"{entry['auc']:.3f} ({entry['ci_low']:.3f}-{entry['ci_high']:.3f})"
        lines.append(
            f"{key:<6} {ci:<22} {_fmt3(m['tpr']):>6} {_fmt3(m['tnr']):>6} "
            f"{_fmt3(m['accuracy']):>6} {_fmt3(m['f1']):>6} {_fmt3(m['ber']):>6}"
        )
    return "\n".join(lines), 0


def cmd_report(metrics_path: str | Path) -> tuple[str, int]:
    try:
        metrics = json.loads(Path(metrics_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        return f"cannot read metrics: {exc}", 1
    return render_report(metrics)
