"""Image model and the screening-view preprocessing chain.

A view travels through four steps before segmentation and feature
extraction: min-max intensity normalization, bilinear resampling to a
common physical pixel pitch, laterality mirroring so every breast points
the same way, and histogram matching against a reference cumulative
distribution so intensities are comparable across acquisition devices.

All operations are pure value transforms: they return new ``Image``
instances and never mutate their input, so they are safe to run
concurrently across views.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PilImage

DEFAULT_CDF_BINS = 1024
TARGET_SPACING_MM = 0.1

LATERALITIES = ("L", "R")
VIEW_KINDS = ("CC", "MLO")


@dataclass
class Image:
    """2-D grayscale intensity grid with isotropic pixel spacing in mm."""

    pixels: np.ndarray
    spacing_mm: float

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise ValueError("image pixels must form a non-empty 2-D grid")
        if not self.spacing_mm > 0:
            raise ValueError("pixel spacing must be positive")

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


@dataclass(frozen=True)
class ViewMeta:
    """Acquisition metadata for one view."""

    laterality: str
    view_kind: str
    age_years: float
    year: int

    def __post_init__(self):
        if self.laterality not in LATERALITIES:
            raise ValueError(f"laterality must be one of {LATERALITIES}")
        if self.view_kind not in VIEW_KINDS:
            raise ValueError(f"view kind must be one of {VIEW_KINDS}")
        if self.age_years < 0:
            raise ValueError("age must be non-negative")


@dataclass(frozen=True)
class ReferenceCdf:
    """Cumulative intensity distribution over equal-width bins on [0, 1]."""

    cdf: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cdf", np.asarray(self.cdf, dtype=np.float64))
        if self.cdf.ndim != 1 or self.cdf.size < 2:
            raise ValueError("a reference CDF needs at least 2 bins")
        if np.any(np.diff(self.cdf) < -1e-12):
            raise ValueError("reference CDF must be non-decreasing")
        if abs(float(self.cdf[-1]) - 1.0) > 1e-9:
            raise ValueError("reference CDF must end at 1.0")

    @property
    def bin_count(self) -> int:
        return int(self.cdf.size)

    def bin_centers(self) -> np.ndarray:
        n = self.bin_count
        return (np.arange(n) + 0.5) / n


def _note(log, message: str) -> None:
    if log is not None:
        log.append(message)


def bin_index(values: np.ndarray, bin_count: int) -> np.ndarray:
    """Equal-width bin index on [0, 1]; 1.0 falls in the last bin."""
    idx = np.floor(np.asarray(values, dtype=np.float64) * bin_count).astype(np.int64)
    return np.clip(idx, 0, bin_count - 1)


def normalize_intensities(img: Image, log: list | None = None) -> Image:
    """Affinely map intensities to [0, 1].

    A constant image has no contrast to preserve; it maps to all zeros and
    a degenerate note is appended to ``log`` so a batch run can keep going.
    """
    lo = float(img.pixels.min())
    hi = float(img.pixels.max())
    if hi <= lo:
        _note(log, "normalize: constant image mapped to zeros")
        return Image(np.zeros_like(img.pixels), img.spacing_mm)
    return Image((img.pixels - lo) / (hi - lo), img.spacing_mm)


def _axis_coords(n_in: int, n_out: int) -> np.ndarray:
    # Corner pixel centers of input and output coincide; interior output
    # centers map linearly between them.
    if n_out == 1:
        return np.array([0.5 * (n_in - 1)])
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))


def resample_to_spacing(img: Image, target_spacing_mm: float) -> Image:
    """Bilinearly resample to a new isotropic pixel pitch.

    Output dimensions are round(dim * spacing / target), floored at 1.
    Resampling to the image's own spacing reproduces it bit for bit.
    """
    if not target_spacing_mm > 0:
        raise ValueError("target spacing must be positive")
    scale = img.spacing_mm / target_spacing_mm
    out_h = max(1, int(np.floor(img.height * scale + 0.5)))
    out_w = max(1, int(np.floor(img.width * scale + 0.5)))

    r = _axis_coords(img.height, out_h)
    c = _axis_coords(img.width, out_w)
    r0 = np.floor(r).astype(np.intp)
    c0 = np.floor(c).astype(np.intp)
    r1 = np.minimum(r0 + 1, img.height - 1)
    c1 = np.minimum(c0 + 1, img.width - 1)
    fr = (r - r0)[:, None]
    fc = (c - c0)[None, :]

    p = img.pixels
    top = p[np.ix_(r0, c0)] * (1.0 - fc) + p[np.ix_(r0, c1)] * fc
    bot = p[np.ix_(r1, c0)] * (1.0 - fc) + p[np.ix_(r1, c1)] * fc
    out = top * (1.0 - fr) + bot * fr
    lo, hi = float(p.min()), float(p.max())
    return Image(np.clip(out, lo, hi), target_spacing_mm)


def mirror_if_left(img: Image, meta: ViewMeta) -> Image:
    """Reverse each row for left-side views; right views pass through."""
    if meta.laterality == "L":
        return Image(img.pixels[:, ::-1].copy(), img.spacing_mm)
    return Image(img.pixels.copy(), img.spacing_mm)


def estimate_reference_cdf(images: list[Image], bin_count: int = DEFAULT_CDF_BINS) -> ReferenceCdf:
    """Pool non-background pixels of several images into one CDF.

    Background (exact zero) is excluded: it dominates a mammogram and would
    swamp the tissue contrast the matching step is meant to align.
    """
    if not images:
        raise ValueError("need at least one image to estimate a reference CDF")
    if bin_count < 2:
        raise ValueError("bin count must be at least 2")
    counts = np.zeros(bin_count, dtype=np.int64)
    for img in images:
        tissue = img.pixels[img.pixels > 0]
        if tissue.size:
            counts += np.bincount(bin_index(tissue, bin_count), minlength=bin_count)
    total = int(counts.sum())
    if total == 0:
        raise ValueError("all pixels are background; cannot estimate a CDF")
    return ReferenceCdf(np.cumsum(counts) / total)


def histogram_match(img: Image, ref: ReferenceCdf) -> Image:
    """Match the image's tissue intensity distribution to a reference.

    Each non-background pixel moves to the smallest bin center whose
    reference CDF reaches the pixel's own source CDF value. Exact-zero
    background pixels are left untouched.
    """
    bins = ref.bin_count
    pixels = img.pixels
    tissue = pixels > 0
    if not tissue.any():
        return Image(pixels.copy(), img.spacing_mm)

    src_counts = np.bincount(bin_index(pixels[tissue], bins), minlength=bins)
    src_cdf = np.cumsum(src_counts) / src_counts.sum()
    # Per-bin lookup: smallest reference bin whose CDF >= source CDF.
    target_bin = np.minimum(np.searchsorted(ref.cdf, src_cdf, side="left"), bins - 1)
    table = (target_bin + 0.5) / bins
    out = np.where(tissue, table[bin_index(pixels, bins)], 0.0)
    return Image(out, img.spacing_mm)


def preprocess_view(
    img: Image,
    meta: ViewMeta,
    ref: ReferenceCdf,
    target_spacing_mm: float = TARGET_SPACING_MM,
    log: list | None = None,
) -> Image:
    """Full chain: normalize, resample, mirror-if-left, histogram-match."""
    out = normalize_intensities(img, log=log)
    out = resample_to_spacing(out, target_spacing_mm)
    out = mirror_if_left(out, meta)
    return histogram_match(out, ref)


# ---------------------------------------------------------------------------
# File I/O: grayscale PGM (binary P5) and PNG images, CSV-persisted CDFs.
# Pixel spacing is not stored in image files; it comes from the manifest.

def _read_pgm(data: bytes) -> np.ndarray:
    pos = 0

    def token():
        nonlocal pos
        while True:
            while pos < len(data) and data[pos : pos + 1].isspace():
                pos += 1
            if pos < len(data) and data[pos : pos + 1] == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
                continue
            break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        return data[start:pos]

    if token() != b"P5":
        raise ValueError("not a binary PGM (P5) file")
    width = int(token())
    height = int(token())
    maxval = int(token())
    pos += 1  # single whitespace byte after the header
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"unsupported PGM maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raw = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    if raw.size != width * height:
        raise ValueError("truncated PGM pixel data")
    return raw.reshape(height, width).astype(np.float64)


def load_image(path: str | Path, spacing_mm: float) -> Image:
    """Read an 8/16-bit grayscale PGM or PNG into an Image."""
    path = Path(path)
    data = path.read_bytes()
    if data[:2] == b"P5":
        return Image(_read_pgm(data), spacing_mm)
    with _PilImage.open(path) as pil:
        if pil.mode in ("L", "I;16", "I"):
            arr = np.asarray(pil, dtype=np.float64)
        else:
            raise ValueError(f"unsupported image mode {pil.mode!r}; grayscale required")
    return Image(arr, spacing_mm)


def save_pgm(path: str | Path, pixels01: np.ndarray, maxval: int = 65535) -> None:
    """Write intensities in [0, 1] as a binary PGM at the given bit depth."""
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"unsupported PGM maxval {maxval}")
    arr = np.rint(np.clip(np.asarray(pixels01, dtype=np.float64), 0.0, 1.0) * maxval)
    arr = arr.astype(">u2" if maxval > 255 else "u1")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(arr.tobytes())


def save_reference_cdf(ref: ReferenceCdf, path: str | Path) -> None:
    """Persist a CDF as CSV; float text round-trips exactly."""
    centers = ref.bin_centers()
    lines = ["bin_index,bin_center,cdf"]
    for i in range(ref.bin_count):
        lines.append(f"{i},{float(centers[i])!r},{float(ref.cdf[i])!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_reference_cdf(path: str | Path) -> ReferenceCdf:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != "bin_index,bin_center,cdf":
        raise ValueError("reference CDF file must start with 'bin_index,bin_center,cdf'")
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 columns")
        values.append(float(parts[2]))
    return ReferenceCdf(np.array(values))
