"""Synthetic screening corpus for desk-scale validation.

Each phantom patient contributes four views: a half-ellipse of smoothly
textured tissue attached to the chest-wall edge on a zero background.
Positive patients get a bright elliptical lesion in one to four views.
Synthetic per-view DL scores are drawn as sigmoid(z) with z normal around
a class-dependent mean, so the DL branch's difficulty is tunable
independently of the image content. Every random draw derives from the
generation seed; two runs with the same parameters are byte-identical.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .fusion import write_dl_scores
from .imaging import save_pgm
from .manifest import MANIFEST_HEADER
from .seeding import derive_rng

VIEW_ORDER = (("L", "CC"), ("L", "MLO"), ("R", "CC"), ("R", "MLO"))


@dataclass(frozen=True)
class PhantomSpec:
    count: int
    positive_fraction: float
    years: tuple[int, ...]
    lesion_contrast: float = 0.34
    texture_sigma: float = 0.16
    image_size: int = 192
    seed: int = 0
    spacing_mm: float = 0.1
    dl_mu_pos: float = -1.0
    dl_mu_neg: float = -2.0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        if not 0.0 <= self.positive_fraction <= 1.0:
            raise ValueError("positive_fraction must lie in [0, 1]")
        if not self.years:
            raise ValueError("need at least one year")


def _tissue_view(rng: np.random.Generator, size: int, texture_sigma: float) -> tuple[np.ndarray, tuple]:
    """Half-ellipse tissue attached to the left edge, plus its geometry."""
    h = w = size
    cy = h / 2.0 + rng.uniform(-0.04, 0.04) * h
    semi_y = rng.uniform(0.38, 0.46) * h
    semi_x = rng.uniform(0.58, 0.72) * w

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    r = np.sqrt(((yy - cy) / semi_y) ** 2 + ((xx + 0.5) / semi_x) ** 2)
    alpha = np.clip((1.0 - r) * (semi_x / 1.5), 0.0, 1.0)  # ~1.5 px soft edge

    noise = ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma=2.0, mode="nearest")
    noise /= max(float(noise.std()), 1e-12)
    tissue = np.clip(0.55 + texture_sigma * noise, 0.08, 0.95)
    return tissue * alpha, (cy, semi_y, semi_x)


def _add_lesion(img: np.ndarray, geometry: tuple, rng: np.random.Generator, contrast: float) -> None:
    cy, semi_y, semi_x = geometry
    size = img.shape[0]
    radial = rng.uniform(0.15, 0.55)
    angle = rng.uniform(-1.1, 1.1)
    ly = cy + semi_y * radial * np.sin(angle)
    lx = semi_x * radial * np.cos(angle)
    la = rng.uniform(0.05, 0.09) * size
    lb = la * rng.uniform(0.7, 1.0)

    yy, xx = np.mgrid[0 : img.shape[0], 0 : img.shape[1]].astype(np.float64)
    rl2 = ((yy - ly) / la) ** 2 + ((xx - lx) / lb) ** 2
    bump = np.clip(1.0 - rl2, 0.0, 1.0)
    img += contrast * bump * (img > 0)
    # saturate at the texture ceiling so a lesion never shifts the image
    # maximum that min-max normalization anchors to
    np.clip(img, 0.0, 0.95, out=img)


def generate_phantoms(spec: PhantomSpec, out_dir: str | Path) -> tuple[Path, Path]:
    """Write images, a manifest and synthetic DL scores under ``out_dir``.

    Returns (manifest_path, dl_scores_path). Positives are spread evenly
    over the patient sequence (and therefore over years), so every
    training-year complement keeps both classes.
    """
    out_dir = Path(out_dir)
    image_dir = out_dir / "images"
    image_dir.mkdir(parents=True, exist_ok=True)

    n_pos = int(round(spec.count * spec.positive_fraction))
    manifest_lines = [MANIFEST_HEADER]
    dl_rows: list[tuple] = []

    for i in range(spec.count):
        pid = f"P{i:05d}"
        # contiguous year blocks; the positive stripe below then spreads
        # positives across every year block
        year = spec.years[(i * len(spec.years)) // spec.count]
        label = int((i + 1) * n_pos // spec.count > i * n_pos // spec.count)
        rng = derive_rng(spec.seed, "patient", i)
        age = float(np.clip(rng.normal(54.0, 10.0), 25.0, 90.0))

        if label:
            k = int(rng.integers(1, 5))
            lesion_views = set(rng.choice(4, size=k, replace=False).tolist())
        else:
            lesion_views = set()

        for vi, (lat, view) in enumerate(VIEW_ORDER):
            img, geometry = _tissue_view(rng, spec.image_size, spec.texture_sigma)
            if vi in lesion_views:
                _add_lesion(img, geometry, rng, spec.lesion_contrast)
            if lat == "L":
                img = img[:, ::-1]
            name = f"{pid}_{lat}_{view}.pgm"
            save_pgm(image_dir / name, img)
            manifest_lines.append(
                f"{pid},{year},{lat},{view},{age!r},{label},{spec.spacing_mm!r},images/{name}"
            )
            mu = spec.dl_mu_pos if label else spec.dl_mu_neg
            z = float(rng.normal(mu, 1.0))
            dl_rows.append((pid, year, lat, view, 1.0 / (1.0 + np.exp(-z))))

    manifest_path = out_dir / "manifest.csv"
    manifest_path.write_text("\n".join(manifest_lines) + "\n", encoding="utf-8")
    dl_path = out_dir / "dl_scores.csv"
    write_dl_scores(dl_path, dl_rows)
    return manifest_path, dl_path
