"""Radiomics feature extraction for one view.

For each of the two tissue ROIs (dense, non-dense) the extractor computes
morphology and first-order statistics plus co-occurrence texture on the
original image, and first-order statistics on each of the four Haar
subbands, then appends two acquisition features (age, view kind). Names
follow ``{roi}_{transform}_{family}_{stat}`` and the order is fixed, so
every view in every run shares one 92-column schema.

Statistics that are undefined on a degenerate ROI (empty, constant, or
without co-occurring pixel pairs) are imputed to 0 and the view is
flagged, keeping the design matrix rectangular.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .glcm import DEFAULT_GLCM_LEVELS, GlcmDegenerateError, glcm, glcm_features
from .imaging import Image, ViewMeta
from .segmentation import RoiSet
from .wavelets import downsample_mask, wavelet_decompose

FEATURE_SCHEMA_VERSION = "rad92.v1"
ENTROPY_BINS = 64

ROI_NAMES = ("dense", "nondense")
WAVELET_TRANSFORMS = ("wavA", "wavH", "wavV", "wavD")
MORPH_STATS = ("area", "perimeter", "compactness", "elongation", "extent")
FO_STATS = ("mean", "std", "skew", "kurt", "entropy", "p10", "p90")
GLCM_STATS = ("contrast", "correlation", "energy", "homogeneity", "entropy")
META_FEATURES = ("meta_age", "meta_view_cc")


class EmptyRoiError(ValueError):
    """The ROI holds no pixels; the caller imputes the statistics."""


@dataclass
class FeatureVector:
    """Named, ordered feature values for one view."""

    names: tuple[str, ...]
    values: np.ndarray
    imputed: tuple[str, ...] = ()

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values.tolist()))


def schema_names() -> tuple[str, ...]:
    """The fixed 92-entry feature name schema."""
    names: list[str] = []
    for roi in ROI_NAMES:
        names.extend(f"{roi}_orig_morph_{s}" for s in MORPH_STATS)
        names.extend(f"{roi}_orig_fo_{s}" for s in FO_STATS)
        names.extend(f"{roi}_orig_glcm_{s}" for s in GLCM_STATS)
        for transform in WAVELET_TRANSFORMS:
            names.extend(f"{roi}_{transform}_fo_{s}" for s in FO_STATS)
    names.extend(META_FEATURES)
    return tuple(names)


def first_order_features(values: np.ndarray) -> dict[str, float]:
    """First-order statistics of a bag of intensity values.

    Population moments throughout: std is the population standard
    deviation, skew the Fisher skewness, kurt the excess kurtosis. Entropy
    is Shannon entropy in bits over a 64-bin histogram of the values after
    min-max scaling within the ROI. Skew, kurt and entropy of a constant
    ROI are 0.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptyRoiError("cannot compute first-order statistics of an empty ROI")

    mean = float(values.mean())
    centered = values - mean
    m2 = float(np.mean(centered**2))
    std = float(np.sqrt(m2))
    if m2 > 0:
        skew = float(np.mean(centered**3) / m2**1.5)
        kurt = float(np.mean(centered**4) / m2**2 - 3.0)
    else:
        skew = 0.0
        kurt = 0.0

    lo = float(values.min())
    hi = float(values.max())
    if hi > lo:
        scaled = (values - lo) / (hi - lo)
        idx = np.clip((scaled * ENTROPY_BINS).astype(np.int64), 0, ENTROPY_BINS - 1)
        p = np.bincount(idx, minlength=ENTROPY_BINS) / values.size
        p = p[p > 0]
        entropy = float(-np.sum(p * np.log2(p)))
    else:
        entropy = 0.0

    return {
        "mean": mean,
        "std": std,
        "skew": skew,
        "kurt": kurt,
        "entropy": entropy,
        "p10": float(np.percentile(values, 10)),
        "p90": float(np.percentile(values, 90)),
    }


def _covariance_eigenvalues(rows: np.ndarray, cols: np.ndarray) -> tuple[float, float]:
    # Each pixel is treated as a unit cell, adding 1/12 to both axes so a
    # one-pixel-wide region still has finite elongation.
    r = rows - rows.mean()
    c = cols - cols.mean()
    a = float(np.mean(r * r)) + 1.0 / 12.0
    b = float(np.mean(r * c))
    d = float(np.mean(c * c)) + 1.0 / 12.0
    half_trace = 0.5 * (a + d)
    radius = np.sqrt((0.5 * (a - d)) ** 2 + b * b)
    return half_trace + radius, half_trace - radius


def morphology_features(roi: np.ndarray, spacing_mm: float) -> dict[str, float]:
    """Shape and size descriptors of a binary region.

    Perimeter counts pixel edges between the region and its complement
    (the image border counts as outside). An empty region yields all
    zeros; the caller records the imputation.
    """
    count = int(roi.sum())
    if count == 0:
        return {s: 0.0 for s in MORPH_STATS}

    area = count * spacing_mm**2

    padded = np.zeros((roi.shape[0] + 2, roi.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = roi
    edges = int(np.sum(padded[:, 1:] != padded[:, :-1])) + int(
        np.sum(padded[1:, :] != padded[:-1, :])
    )
    perimeter = edges * spacing_mm

    compactness = 4.0 * np.pi * area / perimeter**2 if perimeter > 0 else 0.0

    rows, cols = np.nonzero(roi)
    lam1, lam2 = _covariance_eigenvalues(rows.astype(np.float64), cols.astype(np.float64))
    elongation = float(np.sqrt(lam1 / lam2))

    bbox = (rows.max() - rows.min() + 1) * (cols.max() - cols.min() + 1)
    extent = count / float(bbox)

    return {
        "area": float(area),
        "perimeter": float(perimeter),
        "compactness": float(compactness),
        "elongation": elongation,
        "extent": float(extent),
    }


def wavelet_features(pixels: np.ndarray, roi: np.ndarray) -> tuple[dict[str, dict[str, float]], list[str]]:
    """First-order statistics of the four subbands restricted to the
    downsampled ROI. Returns per-transform stats plus imputed stat keys."""
    sub = wavelet_decompose(pixels)
    coarse = downsample_mask(roi)
    bands = {"wavA": sub.approx, "wavH": sub.horiz, "wavV": sub.vert, "wavD": sub.diag}
    out: dict[str, dict[str, float]] = {}
    imputed: list[str] = []
    for name, band in bands.items():
        values = band[coarse]
        if values.size == 0:
            out[name] = {s: 0.0 for s in FO_STATS}
            imputed.append(name)
        else:
            out[name] = first_order_features(values)
    return out, imputed


def extract_view_features(
    img: Image,
    rois: RoiSet,
    meta: ViewMeta,
    glcm_levels: int = DEFAULT_GLCM_LEVELS,
    log: list | None = None,
) -> FeatureVector:
    """Assemble the full fixed-schema feature vector for one view."""
    values: dict[str, float] = {}
    imputed: list[str] = []

    for roi_name, roi in (("dense", rois.dense), ("nondense", rois.nondense)):
        values.update(
            {f"{roi_name}_orig_morph_{k}": v for k, v in morphology_features(roi, img.spacing_mm).items()}
        )
        if not roi.any():
            imputed.append(f"{roi_name}_orig_morph")

        roi_values = img.pixels[roi]
        try:
            fo = first_order_features(roi_values)
        except EmptyRoiError:
            fo = {s: 0.0 for s in FO_STATS}
            imputed.append(f"{roi_name}_orig_fo")
        values.update({f"{roi_name}_orig_fo_{k}": v for k, v in fo.items()})

        try:
            texture = glcm_features(glcm(img, roi, glcm_levels))
        except GlcmDegenerateError:
            texture = {s: 0.0 for s in GLCM_STATS}
            imputed.append(f"{roi_name}_orig_glcm")
        values.update({f"{roi_name}_orig_glcm_{k}": v for k, v in texture.items()})

        wave, wave_imputed = wavelet_features(img.pixels, roi)
        imputed.extend(f"{roi_name}_{t}_fo" for t in wave_imputed)
        for transform, stats in wave.items():
            values.update({f"{roi_name}_{transform}_fo_{k}": v for k, v in stats.items()})

    values["meta_age"] = float(meta.age_years)
    values["meta_view_cc"] = 1.0 if meta.view_kind == "CC" else 0.0

    names = schema_names()
    vec = np.array([values[name] for name in names], dtype=np.float64)
    if not np.all(np.isfinite(vec)):
        bad = [n for n, v in zip(names, vec) if not np.isfinite(v)]
        raise ValueError(f"non-finite feature values: {bad}")
    if imputed and log is not None:
        log.append("features imputed: " + ",".join(imputed))
    return FeatureVector(names=names, values=vec, imputed=tuple(imputed))


# ---------------------------------------------------------------------------
# Feature cache: one CSV row per view, key columns then the 92 schema columns.

CACHE_KEY_COLUMNS = ("patient_id", "year", "laterality", "view", "label")


@dataclass
class FeatureTable:
    """In-memory feature cache."""

    patient_id: list[str]
    year: np.ndarray
    laterality: list[str]
    view: list[str]
    label: np.ndarray
    X: np.ndarray

    def __len__(self) -> int:
        return len(self.patient_id)


def write_feature_cache(path: str | Path, table: FeatureTable) -> None:
    header = ",".join(CACHE_KEY_COLUMNS + schema_names())
    lines = [header]
    for i in range(len(table)):
        row = [
            table.patient_id[i],
            str(int(table.year[i])),
            table.laterality[i],
            table.view[i],
            str(int(table.label[i])),
        ]
        row.extend(repr(float(v)) for v in table.X[i])
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_feature_cache(path: str | Path) -> FeatureTable:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    expected = ",".join(CACHE_KEY_COLUMNS + schema_names())
    if not lines or lines[0] != expected:
        raise ValueError("feature cache header does not match the current schema")
    pid: list[str] = []
    year: list[int] = []
    lat: list[str] = []
    view: list[str] = []
    label: list[int] = []
    rows: list[list[float]] = []
    n_cols = len(CACHE_KEY_COLUMNS) + len(schema_names())
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != n_cols:
            raise ValueError(f"line {lineno}: expected {n_cols} columns, got {len(parts)}")
        pid.append(parts[0])
        year.append(int(parts[1]))
        lat.append(parts[2])
        view.append(parts[3])
        label.append(int(parts[4]))
        rows.append([float(v) for v in parts[5:]])
    X = np.array(rows, dtype=np.float64) if rows else np.empty((0, len(schema_names())))
    return FeatureTable(
        patient_id=pid,
        year=np.array(year, dtype=np.int64),
        laterality=lat,
        view=view,
        label=np.array(label, dtype=np.int64),
        X=X,
    )
