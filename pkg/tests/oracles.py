"""Independent brute-force reference implementations used only by tests.

Each oracle recomputes a quantity from its definition by direct
enumeration, staying off the code paths it checks.
"""
from __future__ import annotations

import numpy as np


def bilinear_resample_oracle(pixels: np.ndarray, spacing: float, target: float) -> np.ndarray:
    """Per-pixel bilinear interpolation at corner-aligned mapped centers."""
    h, w = pixels.shape
    out_h = max(1, int(np.floor(h * spacing / target + 0.5)))
    out_w = max(1, int(np.floor(w * spacing / target + 0.5)))
    out = np.zeros((out_h, out_w))
    for i in range(out_h):
        y = 0.5 * (h - 1) if out_h == 1 else i * (h - 1) / (out_h - 1)
        for j in range(out_w):
            x = 0.5 * (w - 1) if out_w == 1 else j * (w - 1) / (out_w - 1)
            y0, x0 = int(np.floor(y)), int(np.floor(x))
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            fy, fx = y - y0, x - x0
            top = pixels[y0, x0] * (1 - fx) + pixels[y0, x1] * fx
            bot = pixels[y1, x0] * (1 - fx) + pixels[y1, x1] * fx
            out[i, j] = top * (1 - fy) + bot * fy
    return out


def cdf_accumulation_oracle(value_arrays: list[np.ndarray], bins: int) -> np.ndarray:
    """Histogram accumulation of positive values via np.histogram."""
    pooled = np.concatenate([np.asarray(v).ravel() for v in value_arrays])
    pooled = pooled[pooled > 0]
    counts, _ = np.histogram(pooled, bins=bins, range=(0.0, 1.0))
    return np.cumsum(counts) / counts.sum()


def nearest_background_mm(mask: np.ndarray, spacing: float) -> np.ndarray:
    """For each true pixel, scan every false pixel (border ring included)
    for the minimal Euclidean distance."""
    h, w = mask.shape
    padded = np.zeros((h + 2, w + 2), dtype=bool)
    padded[1:-1, 1:-1] = mask
    false_rows, false_cols = np.nonzero(~padded)
    out = np.zeros((h, w))
    for r in range(h):
        for c in range(w):
            if not mask[r, c]:
                continue
            d2 = (false_rows - (r + 1)) ** 2 + (false_cols - (c + 1)) ** 2
            out[r, c] = spacing * np.sqrt(int(d2.min()))
    return out


GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))


def glcm_pair_enumeration(quantized: np.ndarray, roi: np.ndarray, levels: int) -> np.ndarray:
    """Count every in-ROI co-occurring pair in both orders, then normalize."""
    h, w = quantized.shape
    counts = np.zeros((levels, levels), dtype=np.int64)
    for r in range(h):
        for c in range(w):
            if not roi[r, c]:
                continue
            for dr, dc in GLCM_OFFSETS:
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and roi[rr, cc]:
                    a, b = quantized[r, c], quantized[rr, cc]
                    counts[a, b] += 1
                    counts[b, a] += 1
    total = counts.sum()
    if total == 0:
        raise ValueError("no pair")
    return counts / total


def haar_bank_oracle(x: np.ndarray):
    """Direct 1-D filter bank with explicit taps, rows then columns."""
    s = 1.0 / np.sqrt(2.0)

    def split(v: np.ndarray):
        v = list(v)
        if len(v) % 2:
            v.append(v[-1])
        low = [s * v[2 * k] + s * v[2 * k + 1] for k in range(len(v) // 2)]
        high = [s * v[2 * k] - s * v[2 * k + 1] for k in range(len(v) // 2)]
        return np.array(low), np.array(high)

    lows, highs = [], []
    for row in x:
        lo, hi = split(row)
        lows.append(lo)
        highs.append(hi)
    lows, highs = np.array(lows), np.array(highs)

    def split_cols(m: np.ndarray):
        lo_rows, hi_rows = [], []
        for col in m.T:
            lo, hi = split(col)
            lo_rows.append(lo)
            hi_rows.append(hi)
        return np.array(lo_rows).T, np.array(hi_rows).T

    approx, vert = split_cols(lows)
    horiz, diag = split_cols(highs)
    return approx, horiz, vert, diag


def moments_oracle(values: np.ndarray) -> tuple[float, float]:
    """Skewness and excess kurtosis straight from the moment formulas."""
    v = np.asarray(values, dtype=np.float64)
    mu = v.mean()
    m2 = ((v - mu) ** 2).mean()
    m3 = ((v - mu) ** 3).mean()
    m4 = ((v - mu) ** 4).mean()
    return m3 / m2**1.5, m4 / m2**2 - 3.0


def auc_paircount(scores, labels) -> float:
    """Exhaustive concordant/tied pair counting."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (pos.size * neg.size)
