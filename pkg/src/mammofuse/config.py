"""Run configuration: flat key=value files with namespaced keys.

Every tunable carries its module-documented default here; unknown keys in
a config file are errors so a typo cannot silently fall back to a default.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .learners import LearnerParams


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int = 1234
    output_dir: str = "out"
    reference_cdf: str = "reference_cdf.csv"
    cdf_bins: int = 1024
    cdf_sample: int = 100
    resample_spacing_mm: float = 0.1
    periphery_band_mm: float = 2.0
    glcm_levels: int = 32
    knn_k: int = 5
    svm_lambda: float = 1e-3
    svm_epochs: int = 200
    lasso_grid_lo: float = 1e-4
    lasso_grid_hi: float = 1e-1
    lasso_grid_size: int = 10
    lasso_inner_folds: int = 3
    bswims_bootstraps: int = 20
    bswims_z_threshold: float = 1.96
    bswims_max_size: int = 10
    rf_trees: int = 200
    rf_max_depth: int = 12
    rf_min_leaf: int = 5
    threshold_policy: str = "youden"
    threshold_value: float = 0.5
    ci_method: str = "delong"
    ci_bootstrap_resamples: int = 2000
    extract_max_failure_fraction: float = 0.10

    def learner_params(self) -> LearnerParams:
        return LearnerParams(
            knn_k=self.knn_k,
            svm_lambda=self.svm_lambda,
            svm_epochs=self.svm_epochs,
            lasso_grid_lo=self.lasso_grid_lo,
            lasso_grid_hi=self.lasso_grid_hi,
            lasso_grid_size=self.lasso_grid_size,
            lasso_inner_folds=self.lasso_inner_folds,
            bswims_bootstraps=self.bswims_bootstraps,
            bswims_z_threshold=self.bswims_z_threshold,
            bswims_max_size=self.bswims_max_size,
            rf_trees=self.rf_trees,
            rf_max_depth=self.rf_max_depth,
            rf_min_leaf=self.rf_min_leaf,
        )


# config-file key -> RunConfig field
KEY_MAP = {
    "run.seed": "seed",
    "run.output_dir": "output_dir",
    "cdf.path": "reference_cdf",
    "cdf.bins": "cdf_bins",
    "cdf.sample": "cdf_sample",
    "resample.spacing_mm": "resample_spacing_mm",
    "periphery.band_mm": "periphery_band_mm",
    "glcm.levels": "glcm_levels",
    "knn.k": "knn_k",
    "svm.lambda": "svm_lambda",
    "svm.epochs": "svm_epochs",
    "lasso.grid_lo": "lasso_grid_lo",
    "lasso.grid_hi": "lasso_grid_hi",
    "lasso.grid_size": "lasso_grid_size",
    "lasso.inner_folds": "lasso_inner_folds",
    "bswims.bootstraps": "bswims_bootstraps",
    "bswims.z_threshold": "bswims_z_threshold",
    "bswims.max_size": "bswims_max_size",
    "rf.trees": "rf_trees",
    "rf.max_depth": "rf_max_depth",
    "rf.min_leaf": "rf_min_leaf",
    "threshold.policy": "threshold_policy",
    "threshold.value": "threshold_value",
    "ci.method": "ci_method",
    "ci.bootstrap_resamples": "ci_bootstrap_resamples",
    "extract.max_failure_fraction": "extract_max_failure_fraction",
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(field_name: str, raw: str):
    kind = _FIELD_TYPES[field_name]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse value {raw!r} for {field_name}") from exc


def load_config(path: str | Path | None = None, **overrides) -> RunConfig:
    """Build a RunConfig from defaults, an optional file, then overrides."""
    config = RunConfig()
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in KEY_MAP:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
            field_name = KEY_MAP[key]
            setattr(config, field_name, _coerce(field_name, raw.strip()))
    for name, value in overrides.items():
        if value is None:
            continue
        if name not in _FIELD_TYPES:
            raise ConfigError(f"unknown config override {name!r}")
        setattr(config, name, value)
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    if config.threshold_policy not in ("youden", "fixed"):
        raise ConfigError("threshold.policy must be 'youden' or 'fixed'")
    if config.ci_method not in ("delong", "bootstrap"):
        raise ConfigError("ci.method must be 'delong' or 'bootstrap'")
    if config.cdf_bins < 2:
        raise ConfigError("cdf.bins must be at least 2")
    if not 0.0 <= config.extract_max_failure_fraction <= 1.0:
        raise ConfigError("extract.max_failure_fraction must lie in [0, 1]")
    if not config.resample_spacing_mm > 0:
        raise ConfigError("resample.spacing_mm must be positive")
