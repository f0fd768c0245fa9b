"""mammofuse: radiomics feature extraction and calibrated ensemble fusion
for screening mammography, with a deterministic batch pipeline."""

from .evaluation import (
    ConfusionMatrix,
    MetricsSummary,
    auc,
    auc_ci_bootstrap,
    auc_ci_delong,
    choose_threshold,
    confusion_at_threshold,
    roc_curve,
    summary_metrics,
)
from .features import FeatureVector, extract_view_features, first_order_features, schema_names
from .fusion import (
    CalibrationModel,
    PatientScore,
    aggregate_views_max,
    apply_calibration,
    fit_platt,
    fuse_average,
    leave_one_year_out_folds,
    run_loyo_pipeline,
)
from .imaging import (
    Image,
    ReferenceCdf,
    ViewMeta,
    estimate_reference_cdf,
    histogram_match,
    mirror_if_left,
    normalize_intensities,
    preprocess_view,
    resample_to_spacing,
)
from .learners import LearnerParams, Scaler, SubEnsemble, fit_scaler
from .manifest import ExamRecord, parse_manifest
from .phantoms import PhantomSpec, generate_phantoms
from .segmentation import RoiSet, build_roiset
from .wavelets import WaveletSubbands, wavelet_decompose, wavelet_reconstruct

__version__ = "0.1.0"

__all__ = [
    "ConfusionMatrix",
    "MetricsSummary",
    "auc",
    "auc_ci_bootstrap",
    "auc_ci_delong",
    "choose_threshold",
    "confusion_at_threshold",
    "roc_curve",
    "summary_metrics",
    "FeatureVector",
    "extract_view_features",
    "first_order_features",
    "schema_names",
    "CalibrationModel",
    "PatientScore",
    "aggregate_views_max",
    "apply_calibration",
    "fit_platt",
    "fuse_average",
    "leave_one_year_out_folds",
    "run_loyo_pipeline",
    "Image",
    "ReferenceCdf",
    "ViewMeta",
    "estimate_reference_cdf",
    "histogram_match",
    "mirror_if_left",
    "normalize_intensities",
    "preprocess_view",
    "resample_to_spacing",
    "LearnerParams",
    "Scaler",
    "SubEnsemble",
    "fit_scaler",
    "ExamRecord",
    "parse_manifest",
    "PhantomSpec",
    "generate_phantoms",
    "RoiSet",
    "build_roiset",
    "WaveletSubbands",
    "wavelet_decompose",
    "wavelet_reconstruct",
    "__version__",
]
