"""Exam manifest: the CSV that drives folds, extraction and aggregation.

One row per view. A patient contributes one exam of up to four views (two
lateralities x two view kinds), with one label and one acquisition year.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .imaging import LATERALITIES, VIEW_KINDS

MANIFEST_HEADER = "patient_id,year,laterality,view,age,label,pixel_spacing_mm,image_path"


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ExamRecord:
    patient_id: str
    year: int
    laterality: str
    view_kind: str
    age_years: float
    label: int
    pixel_spacing_mm: float
    image_path: str


def parse_manifest(path: str | Path) -> list[ExamRecord]:
    """Read and validate a manifest; errors carry the offending row numbers."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != MANIFEST_HEADER:
        raise ManifestError(f"manifest must start with header '{MANIFEST_HEADER}'")

    records: list[ExamRecord] = []
    seen_views: dict[tuple, int] = {}
    patient_label: dict[str, tuple[int, int]] = {}
    patient_year: dict[str, tuple[int, int]] = {}

    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 8:
            raise ManifestError(f"row {lineno}: expected 8 columns, got {len(parts)}")
        pid, year_s, lat, view, age_s, label_s, spacing_s, image_path = (p.strip() for p in parts)
        if not pid:
            raise ManifestError(f"row {lineno}: empty patient_id")
        try:
            year = int(year_s)
            age = float(age_s)
            label = int(label_s)
            spacing = float(spacing_s)
        except ValueError as exc:
            raise ManifestError(f"row {lineno}: unparsable value ({exc})") from exc
        if lat not in LATERALITIES:
            raise ManifestError(f"row {lineno}: laterality must be one of {LATERALITIES}")
        if view not in VIEW_KINDS:
            raise ManifestError(f"row {lineno}: view must be one of {VIEW_KINDS}")
        if age < 0:
            raise ManifestError(f"row {lineno}: negative age")
        if label not in (0, 1):
            raise ManifestError(f"row {lineno}: label must be 0 or 1")
        if not spacing > 0:
            raise ManifestError(f"row {lineno}: pixel spacing must be positive")
        if not image_path:
            raise ManifestError(f"row {lineno}: empty image_path")

        key = (pid, lat, view)
        if key in seen_views:
            raise ManifestError(
                f"row {lineno}: duplicate view {pid}/{lat}/{view} (first seen at row {seen_views[key]})"
            )
        seen_views[key] = lineno

        if pid in patient_label and patient_label[pid][0] != label:
            raise ManifestError(
                f"row {lineno}: patient {pid} label {label} conflicts with row "
                f"{patient_label[pid][1]} (label {patient_label[pid][0]})"
            )
        patient_label.setdefault(pid, (label, lineno))
        if pid in patient_year and patient_year[pid][0] != year:
            raise ManifestError(
                f"row {lineno}: patient {pid} year {year} conflicts with row "
                f"{patient_year[pid][1]} (year {patient_year[pid][0]})"
            )
        patient_year.setdefault(pid, (year, lineno))

        records.append(
            ExamRecord(
                patient_id=pid,
                year=year,
                laterality=lat,
                view_kind=view,
                age_years=age,
                label=label,
                pixel_spacing_mm=spacing,
                image_path=image_path,
            )
        )
    return records


def resolve_image_path(manifest_path: str | Path, record: ExamRecord) -> Path:
    """Image paths are relative to the manifest's directory unless absolute."""
    img = Path(record.image_path)
    return img if img.is_absolute() else Path(manifest_path).parent / img
