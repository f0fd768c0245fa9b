"""Automated region-of-interest construction for a preprocessed view.

Three steps: background extraction (exact-zero pixels), breast periphery
identification (tissue within a fixed physical distance of background),
and ROI selection (median split of the remaining interior into dense and
non-dense tissue).
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PilImage
from scipy import ndimage

from .imaging import Image

PERIPHERY_BAND_MM = 2.0

# Slack for the band threshold so a pixel at exactly the band distance is
# included even when spacing * sqrt(k) rounds a hair above it.
_BAND_TOL_MM = 1e-9


class ViewUnusableError(ValueError):
    """The view has no usable interior tissue to extract features from."""


@dataclass
class RoiSet:
    """Binary masks partitioning one view."""

    background: np.ndarray
    breast: np.ndarray
    periphery: np.ndarray
    dense: np.ndarray
    nondense: np.ndarray


def background_mask(img: Image) -> np.ndarray:
    """True exactly where the pixel value is zero."""
    return img.pixels == 0.0


def breast_mask(img: Image) -> np.ndarray:
    """Largest 4-connected component of non-zero pixels.

    Stray non-zero islands (labels, noise) are dropped; an all-zero image
    yields an empty mask.
    """
    nonzero = img.pixels > 0
    labels, count = ndimage.label(nonzero)
    if count == 0:
        return np.zeros_like(nonzero)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    return labels == int(np.argmax(sizes))


def distance_to_background(breast: np.ndarray, spacing_mm: float) -> np.ndarray:
    """Exact Euclidean distance (mm) from each breast pixel to background.

    The image border counts as background, otherwise chest-wall pixels
    would sit at infinite distance. Non-breast pixels are at distance 0.
    """
    if not spacing_mm > 0:
        raise ValueError("pixel spacing must be positive")
    padded = np.zeros((breast.shape[0] + 2, breast.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = breast
    dist_px = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    return spacing_mm * dist_px


def periphery_band(
    breast: np.ndarray, dist_mm: np.ndarray, band_mm: float = PERIPHERY_BAND_MM
) -> np.ndarray:
    """Breast pixels within ``band_mm`` of the background."""
    return breast & (dist_mm <= band_mm + _BAND_TOL_MM)


def dense_nondense_split(img: Image, interior: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Median-threshold the interior into dense (bright) and non-dense tissue.

    The median of an even-sized interior is the lower of the two middle
    values; pixels strictly above it are dense, the rest non-dense.
    """
    values = img.pixels[interior]
    if values.size == 0:
        raise ViewUnusableError("interior is empty; no tissue to split")
    m = float(np.sort(values)[(values.size - 1) // 2])
    dense = interior & (img.pixels > m)
    nondense = interior & (img.pixels <= m)
    return dense, nondense


def build_roiset(img: Image, band_mm: float = PERIPHERY_BAND_MM) -> RoiSet:
    """Compose the full ROI chain for one preprocessed view."""
    background = background_mask(img)
    breast = breast_mask(img)
    dist = distance_to_background(breast, img.spacing_mm)
    periphery = periphery_band(breast, dist, band_mm)
    interior = breast & ~periphery
    dense, nondense = dense_nondense_split(img, interior)
    return RoiSet(background, breast, periphery, dense, nondense)


def save_label_map(rois: RoiSet, path: str | Path) -> None:
    """Debug export: PNG with 0 background, 1 periphery, 2 non-dense, 3 dense."""
    labels = np.zeros(rois.background.shape, dtype=np.uint8)
    labels[rois.periphery] = 1
    labels[rois.nondense] = 2
    labels[rois.dense] = 3
    _PilImage.fromarray(labels, mode="L").save(Path(path))
