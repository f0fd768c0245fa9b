"""Single-level 2-D orthonormal Haar decomposition.

Filters are (1/sqrt(2), 1/sqrt(2)) low-pass and (1/sqrt(2), -1/sqrt(2))
high-pass, applied along rows then columns, giving four half-resolution
subbands: approximation plus horizontal, vertical and diagonal detail.
"Horizontal" detail carries horizontal frequency content, i.e. it responds
to vertically oriented edges.

Odd-length axes are extended by repeating the edge sample (half-sample
symmetric extension). That keeps the transform exactly invertible for any
shape; energy equality between input and subbands holds on even shapes,
where the pair grid tiles the image exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)


@dataclass
class WaveletSubbands:
    approx: np.ndarray
    horiz: np.ndarray
    vert: np.ndarray
    diag: np.ndarray


def _split_axis(arr: np.ndarray, axis: int) -> tuple[np.ndarray, np.ndarray]:
    if arr.shape[axis] % 2:
        edge = arr.take([-1], axis=axis)
        arr = np.concatenate([arr, edge], axis=axis)
    even = arr.take(np.arange(0, arr.shape[axis], 2), axis=axis)
    odd = arr.take(np.arange(1, arr.shape[axis], 2), axis=axis)
    low = (even + odd) / _SQRT2
    high = (even - odd) / _SQRT2
    return low, high


def wavelet_decompose(pixels: np.ndarray) -> WaveletSubbands:
    """Decompose a 2-D array into its four Haar subbands."""
    pixels = np.asarray(pixels, dtype=np.float64)
    if pixels.ndim != 2 or pixels.size == 0:
        raise ValueError("expected a non-empty 2-D array")
    low_c, high_c = _split_axis(pixels, axis=1)
    approx, vert = _split_axis(low_c, axis=0)
    horiz, diag = _split_axis(high_c, axis=0)
    return WaveletSubbands(approx=approx, horiz=horiz, vert=vert, diag=diag)


def _merge_axis(low: np.ndarray, high: np.ndarray, n_out: int, axis: int) -> np.ndarray:
    even = (low + high) / _SQRT2
    odd = (low - high) / _SQRT2
    shape = list(low.shape)
    shape[axis] = low.shape[axis] * 2
    out = np.empty(shape, dtype=np.float64)
    idx_even = [slice(None)] * out.ndim
    idx_odd = [slice(None)] * out.ndim
    idx_even[axis] = slice(0, None, 2)
    idx_odd[axis] = slice(1, None, 2)
    out[tuple(idx_even)] = even
    out[tuple(idx_odd)] = odd
    return out.take(np.arange(n_out), axis=axis)


def wavelet_reconstruct(sub: WaveletSubbands, shape: tuple[int, int]) -> np.ndarray:
    """Invert :func:`wavelet_decompose` back to the original shape.

    For an odd axis the duplicated edge pair (x, x) stores x*sqrt(2) in the
    low channel and 0 in the high channel, so truncating the doubled axis
    recovers the input exactly.
    """
    h, w = shape
    low_c = _merge_axis(sub.approx, sub.vert, h, axis=0)
    high_c = _merge_axis(sub.horiz, sub.diag, h, axis=0)
    return _merge_axis(low_c, high_c, w, axis=1)


def downsample_mask(roi: np.ndarray) -> np.ndarray:
    """Halve a mask to subband resolution: coarse pixel is set if any of
    its fine pixels is set (edge blocks of odd shapes have fewer)."""
    h, w = roi.shape
    hh, ww = (h + 1) // 2, (w + 1) // 2
    padded = np.zeros((hh * 2, ww * 2), dtype=bool)
    padded[:h, :w] = roi
    return padded.reshape(hh, 2, ww, 2).any(axis=(1, 3))
