"""Gray-level co-occurrence matrix and its classic texture statistics.

The matrix is accumulated over four distance-1 offsets (0, 45, 90 and 135
degrees), counting each pixel pair in both orders, restricted to pairs
whose two pixels both lie inside the ROI, then normalized to sum 1. Gray
levels are equal-width bins over the ROI's own min-max intensity range.
"""
from __future__ import annotations

import numpy as np

from .imaging import Image

DEFAULT_GLCM_LEVELS = 32

# (row offset, col offset) for 0, 45, 90, 135 degrees at distance 1.
OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))


class GlcmDegenerateError(ValueError):
    """No valid co-occurring pixel pair exists inside the ROI."""


def quantize_roi(pixels: np.ndarray, roi: np.ndarray, levels: int) -> np.ndarray:
    """Quantize ROI pixels to ``levels`` equal-width gray levels.

    The full grid is returned (out-of-ROI entries are meaningless); a
    constant ROI maps to level 0 everywhere.
    """
    values = pixels[roi]
    lo = float(values.min())
    hi = float(values.max())
    if hi <= lo:
        return np.zeros(pixels.shape, dtype=np.int64)
    q = np.floor((pixels - lo) / (hi - lo) * levels).astype(np.int64)
    return np.clip(q, 0, levels - 1)


def glcm(img: Image, roi: np.ndarray, levels: int = DEFAULT_GLCM_LEVELS) -> np.ndarray:
    """Symmetric, normalized co-occurrence matrix of the ROI."""
    if levels < 2:
        raise ValueError("need at least 2 gray levels")
    if not roi.any():
        raise GlcmDegenerateError("empty ROI")
    q = quantize_roi(img.pixels, roi, levels)

    counts = np.zeros(levels * levels, dtype=np.int64)
    h, w = q.shape
    for dr, dc in OFFSETS:
        r0, r1 = max(0, -dr), min(h, h - dr)
        c0, c1 = max(0, -dc), min(w, w - dc)
        a_roi = roi[r0:r1, c0:c1]
        b_roi = roi[r0 + dr : r1 + dr, c0 + dc : c1 + dc]
        both = a_roi & b_roi
        if not both.any():
            continue
        qa = q[r0:r1, c0:c1][both]
        qb = q[r0 + dr : r1 + dr, c0 + dc : c1 + dc][both]
        counts += np.bincount(qa * levels + qb, minlength=levels * levels)
        counts += np.bincount(qb * levels + qa, minlength=levels * levels)

    total = int(counts.sum())
    if total == 0:
        raise GlcmDegenerateError("ROI pixels are isolated; no co-occurring pair")
    return (counts / total).reshape(levels, levels)


def glcm_features(matrix: np.ndarray) -> dict[str, float]:
    """Contrast, correlation, energy, homogeneity and entropy of a GLCM.

    Correlation is 0 by convention when the marginal variance vanishes,
    and 0*log(0) counts as 0 in the entropy.
    """
    levels = matrix.shape[0]
    i = np.arange(levels, dtype=np.float64)
    diff = i[:, None] - i[None, :]

    marginal = matrix.sum(axis=1)
    mu = float(np.dot(i, marginal))
    var = float(np.dot((i - mu) ** 2, marginal))

    contrast = float(np.sum(matrix * diff**2))
    if var > 0:
        correlation = float(np.sum(matrix * np.outer(i - mu, i - mu)) / var)
    else:
        correlation = 0.0
    energy = float(np.sum(matrix**2))
    homogeneity = float(np.sum(matrix / (1.0 + np.abs(diff))))
    positive = matrix[matrix > 0]
    entropy = float(-np.sum(positive * np.log2(positive)))

    return {
        "contrast": contrast,
        "correlation": correlation,
        "energy": energy,
        "homogeneity": homogeneity,
        "entropy": entropy,
    }
