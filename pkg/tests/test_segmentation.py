import numpy as np
import pytest

from mammofuse.imaging import Image
from mammofuse.segmentation import (
    ViewUnusableError,
    background_mask,
    breast_mask,
    build_roiset,
    dense_nondense_split,
    distance_to_background,
    periphery_band,
    save_label_map,
)

from oracles import nearest_background_mm


def img_of(pixels, spacing=0.1):
    return Image(np.asarray(pixels, dtype=float), spacing)


class TestBackgroundAndBreast:
    def test_background_is_exact_zero(self):
        mask = background_mask(img_of([[0.0, 0.5], [0.0, 0.7]]))
        assert np.array_equal(mask, [[True, False], [True, False]])

    def test_all_positive_gives_empty_background(self):
        assert not background_mask(img_of(np.full((3, 3), 0.2))).any()

    def test_all_zero_gives_full_background(self):
        assert background_mask(img_of(np.zeros((3, 3)))).all()

    def test_breast_keeps_largest_component_only(self):
        pixels = np.zeros((8, 8))
        pixels[1:5, 1:4] = 0.5  # 12 px blob
        pixels[6:7, 2:7] = 0.5  # 5 px blob
        mask = breast_mask(img_of(pixels))
        assert mask.sum() == 12
        assert mask[1:5, 1:4].all() and not mask[6, 2:7].any()

    def test_single_blob_kept(self):
        pixels = np.zeros((5, 5))
        pixels[1:4, 1:4] = 0.3
        assert np.array_equal(breast_mask(img_of(pixels)), pixels > 0)

    def test_all_zero_gives_empty_breast(self):
        assert not breast_mask(img_of(np.zeros((4, 4)))).any()


class TestDistanceTransform:
    def test_full_mask_center_distance(self):
        dist = distance_to_background(np.ones((5, 5), dtype=bool), 0.1)
        assert dist[2, 2] == pytest.approx(0.3)

    def test_adjacent_to_background(self):
        mask = np.zeros((3, 3), dtype=bool)
        mask[1, 1] = True
        dist = distance_to_background(mask, 0.1)
        assert dist[1, 1] == pytest.approx(0.1)

    def test_background_pixel_is_zero(self):
        mask = np.ones((4, 4), dtype=bool)
        mask[0, 0] = False
        assert distance_to_background(mask, 0.1)[0, 0] == 0.0

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            mask = rng.random((16, 16)) < rng.uniform(0.3, 0.9)
            spacing = float(rng.uniform(0.05, 0.3))
            got = distance_to_background(mask, spacing)
            expected = nearest_background_mm(mask, spacing)
            assert np.array_equal(got, expected)


class TestPeripheryBand:
    def test_straight_edge_band_is_20px_at_point1mm(self):
        # Tissue occupies columns 10..59 of a 60x60 grid; along the middle
        # row the band from the left tissue edge is exactly 20 px wide.
        mask = np.zeros((60, 60), dtype=bool)
        mask[:, 10:] = True
        dist = distance_to_background(mask, 0.1)
        band = periphery_band(mask, dist, band_mm=2.0)
        assert band[30, 10:30].all()
        assert not band[30, 30:40].any()

    def test_thin_breast_is_all_periphery(self):
        mask = np.zeros((40, 40), dtype=bool)
        mask[10:20, 5:35] = True  # 10 px thick = 1.0 mm < 2 x 2.0 mm
        dist = distance_to_background(mask, 0.1)
        band = periphery_band(mask, dist)
        assert np.array_equal(band, mask)

    def test_empty_breast_gives_empty_band(self):
        mask = np.zeros((5, 5), dtype=bool)
        band = periphery_band(mask, distance_to_background(mask, 0.1))
        assert not band.any()


class TestDenseSplit:
    def test_nine_values_split_five_four(self):
        values = np.arange(1, 10) / 10.0
        img = img_of(values.reshape(3, 3))
        interior = np.ones((3, 3), dtype=bool)
        dense, nondense = dense_nondense_split(img, interior)
        assert dense.sum() == 4 and nondense.sum() == 5
        assert set(img.pixels[dense]) == {0.6, 0.7, 0.8, 0.9}

    def test_constant_interior_is_all_nondense(self):
        img = img_of(np.full((2, 3), 0.4))
        dense, nondense = dense_nondense_split(img, np.ones((2, 3), dtype=bool))
        assert not dense.any() and nondense.all()

    def test_even_count_uses_lower_median(self):
        img = img_of([[0.1, 0.9]])
        dense, nondense = dense_nondense_split(img, np.ones((1, 2), dtype=bool))
        assert img.pixels[dense].tolist() == [0.9]
        assert img.pixels[nondense].tolist() == [0.1]

    def test_empty_interior_raises(self):
        with pytest.raises(ViewUnusableError):
            dense_nondense_split(img_of(np.ones((2, 2))), np.zeros((2, 2), dtype=bool))

    def test_dense_never_outnumbers_nondense(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            h, w = rng.integers(2, 8, size=2)
            img = img_of(rng.random((h, w)) + 0.01)
            interior = rng.random((h, w)) < 0.8
            if not interior.any():
                continue
            dense, nondense = dense_nondense_split(img, interior)
            assert dense.sum() <= nondense.sum()

    def test_membership_invariant_to_positive_scaling(self):
        rng = np.random.default_rng(18)
        pixels = rng.random((6, 6)) + 0.05
        interior = np.ones((6, 6), dtype=bool)
        d1, _ = dense_nondense_split(img_of(pixels), interior)
        d2, _ = dense_nondense_split(img_of(pixels * 3.7), interior)
        assert np.array_equal(d1, d2)


def half_ellipse_phantom(size=128, lesion=False, seed=0):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    r = np.sqrt(((yy - size / 2) / (0.42 * size)) ** 2 + ((xx + 0.5) / (0.65 * size)) ** 2)
    alpha = np.clip((1.0 - r) * 20.0, 0.0, 1.0)
    tissue = np.clip(0.5 + 0.1 * rng.standard_normal((size, size)), 0.1, 0.9) * alpha
    if lesion:
        rl = ((yy - size / 2) / 8.0) ** 2 + ((xx - size / 4) / 8.0) ** 2
        tissue += 0.4 * np.clip(1 - rl, 0, 1) * (tissue > 0)
    return Image(np.clip(tissue, 0, 1), 0.1)


class TestBuildRoiSet:
    def test_rois_partition_the_interior(self):
        rois = build_roiset(half_ellipse_phantom())
        interior = rois.breast & ~rois.periphery
        assert not (rois.dense & rois.nondense).any()
        assert np.array_equal(rois.dense | rois.nondense, interior)
        assert not (rois.periphery & ~rois.breast).any()
        assert not (rois.background & rois.breast).any()

    def test_lesion_lands_in_dense_when_brighter_than_median(self):
        img = half_ellipse_phantom(lesion=True, seed=3)
        rois = build_roiset(img)
        interior = rois.breast & ~rois.periphery
        median = np.sort(img.pixels[interior])[(interior.sum() - 1) // 2]
        lesion_core = (img.pixels > median) & interior
        assert lesion_core.sum() > 0
        assert np.array_equal(rois.dense, lesion_core)

    def test_all_zero_image_is_unusable(self):
        with pytest.raises(ViewUnusableError):
            build_roiset(img_of(np.zeros((10, 10))))

    def test_label_map_export(self, tmp_path):
        from PIL import Image as PilImage

        rois = build_roiset(half_ellipse_phantom())
        path = tmp_path / "labels.png"
        save_label_map(rois, path)
        with PilImage.open(path) as pil:
            arr = np.asarray(pil)
        assert set(np.unique(arr)) <= {0, 1, 2, 3}
        assert np.array_equal(arr == 3, rois.dense)
