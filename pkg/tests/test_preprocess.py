import math

import numpy as np
import pytest

from polarface.errors import DegenerateGeometryError, DegenerateImageError, DimensionMismatchError
from polarface.io import GrayImage
from polarface.preprocess import (
    CanonicalLayout,
    Rect,
    apply_mask,
    ellipse_mask,
    extract_regions,
    hist_eq,
    normalize,
    register,
    standardize,
    transform_point,
)

LAYOUT = CanonicalLayout()
CANON = (LAYOUT.left_eye, LAYOUT.right_eye)


def test_default_layout():
    assert (LAYOUT.crop_width, LAYOUT.crop_height) == (130, 150)
    assert LAYOUT.region_rects == (Rect(15, 35, 50, 50), Rect(40, 35, 50, 50), Rect(65, 35, 50, 50))


def test_layout_rejects_bad_geometry():
    with pytest.raises(ValueError):
        CanonicalLayout(left_eye=(200.0, 60.0))
    with pytest.raises(ValueError):
        CanonicalLayout(mask_axes=(80.0, 70.0))
    with pytest.raises(ValueError):
        CanonicalLayout(region_rects=(Rect(100, 0, 50, 50),) * 3)


def test_regions_clamped_into_crop():
    layout = LAYOUT.with_overrides(left_eye=(10.0, 10.0), right_eye=(120.0, 10.0))
    for r in layout.region_rects:
        assert r.inside(130, 150)


# -- register ----------------------------------------------------------------

def test_register_identity(rng):
    img = GrayImage(rng.uniform(size=(150, 130)))
    out = register(img, CANON)
    assert out.pixels.shape == (150, 130)
    assert np.max(np.abs(out.pixels - img.pixels)) <= 1e-12


def test_register_recovers_half_scale():
    eyes = ((20.0, 50.0), (120.0, 50.0))  # twice the canonical separation
    (lx, ly) = transform_point(eyes[0], eyes)
    (rx, ry) = transform_point(eyes[1], eyes)
    assert math.hypot(lx - 40, ly - 60) < 1e-9 and math.hypot(rx - 90, ry - 60) < 1e-9
    # a segment of length 10 in the source maps to length 5
    p = transform_point((30.0, 50.0), eyes)
    q = transform_point((40.0, 50.0), eyes)
    assert math.hypot(q[0] - p[0], q[1] - p[1]) == pytest.approx(5.0, abs=1e-12)


def test_register_outside_source_is_zero():
    img = GrayImage(np.ones((20, 20)))
    out = register(img, ((5.0, 10.0), (15.0, 10.0)))
    assert out.pixels[0, 0] == 0.0 and out.pixels[-1, -1] == 0.0


def test_register_coincident_eyes():
    with pytest.raises(DegenerateGeometryError):
        register(GrayImage(np.ones((10, 10))), ((3.0, 3.0), (3.0, 3.0)))


def _blob_image(eyes, shape=(200, 200), sigma=2.0):
    ys, xs = np.mgrid[0 : shape[0], 0 : shape[1]].astype(float)
    img = np.zeros(shape)
    for x, y in eyes:
        img += np.exp(-((xs - x) ** 2 + (ys - y) ** 2) / (2 * sigma**2))
    return GrayImage(img)


def _centroid(pixels, around, half=7):
    x0, y0 = int(round(around[0])), int(round(around[1]))
    win = pixels[y0 - half : y0 + half + 1, x0 - half : x0 + half + 1]
    ys, xs = np.mgrid[y0 - half : y0 + half + 1, x0 - half : x0 + half + 1]
    return (np.sum(win * xs) / win.sum(), np.sum(win * ys) / win.sum())


def test_registration_error_on_jittered_synthetic_faces():
    # eye marks rendered at known random positions; after registration the
    # mark centroids are measured directly in the output raster
    rng = np.random.default_rng(2024)
    errors = []
    for _ in range(100):
        mid = np.array([100.0, 90.0]) + rng.normal(0, 6, 2)
        half = rng.uniform(20, 32)
        angle = rng.uniform(-0.25, 0.25)
        d = half * np.array([math.cos(angle), math.sin(angle)])
        eyes = (tuple(mid - d), tuple(mid + d))
        out = register(_blob_image(eyes), eyes)
        for measured, target in zip(
            (_centroid(out.pixels, LAYOUT.left_eye), _centroid(out.pixels, LAYOUT.right_eye)),
            CANON,
        ):
            errors.append(math.hypot(measured[0] - target[0], measured[1] - target[1]))
    assert np.mean(errors) < 0.5
    assert np.max(errors) < 0.5


def test_register_is_idempotent(rng):
    eyes = ((50.0, 70.0), (110.0, 80.0))
    src = GrayImage(rng.uniform(size=(180, 160)))
    once = register(src, eyes)
    twice = register(once, CANON)
    assert np.max(np.abs(once.pixels - twice.pixels)) <= 1e-12


# -- mask --------------------------------------------------------------------

def test_mask_center_and_corner():
    img = apply_mask(GrayImage(np.ones((150, 130))))
    assert img.mask[78, 65]
    assert not img.mask[0, 0]
    np.testing.assert_array_equal(img.pixels, np.ones((150, 130)))


def test_mask_count_matches_brute_force():
    (cx, cy), (ax, ay) = LAYOUT.mask_center, LAYOUT.mask_axes
    count = 0
    for y in range(150):
        for x in range(130):
            if (x - cx) ** 2 / ax**2 + (y - cy) ** 2 / ay**2 <= 1.0:
                count += 1
    assert int(ellipse_mask(LAYOUT).sum()) == count


def test_mask_size_mismatch():
    with pytest.raises(DimensionMismatchError):
        apply_mask(GrayImage(np.ones((10, 10))))


# -- histogram equalisation --------------------------------------------------

def test_hist_eq_fixed_point_on_uniform_histogram(rng):
    levels = np.repeat(np.arange(256), 4)
    rng.shuffle(levels)
    img = GrayImage(levels.reshape(32, 32) / 255.0)
    out = hist_eq(img)
    assert np.max(np.abs(out.pixels - img.pixels)) <= 1 / 255


def test_hist_eq_preserves_order_of_two_levels():
    pix = np.full((4, 4), 0.2)
    pix[:2] = 0.7
    out = hist_eq(GrayImage(pix)).pixels
    assert out[3, 0] < out[0, 0]


def _uniformity(values):
    hist = np.histogram(values, bins=16, range=(0, 1))[0]
    return hist.max() / hist[hist > 0].min()


def test_hist_eq_improves_uniformity(rng):
    values = np.clip(rng.normal(0.4, 0.08, size=(64, 64)), 0, 1)
    out = hist_eq(GrayImage(values)).pixels
    assert _uniformity(out) < _uniformity(values)


def test_hist_eq_is_monotone(rng):
    values = rng.uniform(size=500)
    out = hist_eq(GrayImage(values.reshape(20, 25))).pixels.ravel()
    order = np.argsort(values, kind="stable")
    assert np.all(np.diff(out[order]) >= 0)


def test_hist_eq_leaves_invalid_pixels(rng):
    mask = rng.uniform(size=(10, 10)) > 0.3
    pix = rng.uniform(size=(10, 10))
    out = hist_eq(GrayImage(pix, mask))
    np.testing.assert_array_equal(out.pixels[~mask], pix[~mask])


def test_hist_eq_all_masked():
    with pytest.raises(DegenerateImageError):
        hist_eq(GrayImage(np.ones((3, 3)), np.zeros((3, 3), bool)))


# -- standardisation ---------------------------------------------------------

def test_standardize_two_point():
    pix = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(standardize(GrayImage(pix)).pixels, [[-1, 1], [1, -1]], atol=1e-15)


def test_standardize_moments(rng):
    mask = rng.uniform(size=(30, 20)) > 0.4
    out = standardize(GrayImage(rng.uniform(size=(30, 20)), mask))
    vals = out.pixels[mask]
    assert abs(vals.mean()) < 1e-9
    assert abs(vals.std() - 1.0) < 1e-9
    assert np.all(out.pixels[~mask] == 0.0)


def test_standardize_constant_image():
    with pytest.raises(DegenerateImageError):
        standardize(GrayImage(np.full((5, 5), 0.3)))


def test_standardize_affine_invariance(rng):
    x = rng.uniform(size=(12, 12))
    base = standardize(GrayImage(x)).pixels
    for a, b in ((2.5, -1.0), (0.01, 7.0)):
        np.testing.assert_allclose(standardize(GrayImage(a * x + b)).pixels, base, atol=1e-9)


def test_masked_pixels_never_read(rng):
    mask = ellipse_mask(LAYOUT)
    pix = rng.uniform(size=(150, 130))
    poisoned = pix.copy()
    poisoned[~mask] = np.nan
    clean = standardize(hist_eq(GrayImage(pix, mask)))
    dirty = standardize(hist_eq(GrayImage(poisoned, mask)))
    np.testing.assert_array_equal(clean.pixels, dirty.pixels)


# -- regions -----------------------------------------------------------------

def test_regions_are_fifty_pixel_squares_inside_crop(rng):
    img = apply_mask(GrayImage(rng.uniform(size=(150, 130))))
    regions = extract_regions(img)
    assert len(regions) == 3
    for region, rect in zip(regions, LAYOUT.region_rects):
        assert region.pixels.shape == (50, 50)
        assert rect.inside(130, 150)
        np.testing.assert_array_equal(region.mask, img.mask[rect.y : rect.y + 50, rect.x : rect.x + 50])


def test_regions_reassemble_to_source(rng):
    img = GrayImage(rng.uniform(size=(150, 130)))
    canvas = np.full((150, 130), np.nan)
    for region, r in zip(extract_regions(img), LAYOUT.region_rects):
        canvas[r.y : r.y + r.h, r.x : r.x + r.w] = region.pixels
    covered = ~np.isnan(canvas)
    np.testing.assert_array_equal(canvas[covered], img.pixels[covered])


def test_normalize_runs_fixed_pipeline(rng):
    img = GrayImage(rng.uniform(size=(180, 160)))
    eyes = ((55.0, 70.0), (105.0, 72.0))
    expected = standardize(hist_eq(apply_mask(register(img, eyes))))
    out = normalize(img, eyes)
    np.testing.assert_array_equal(out.pixels, expected.pixels)
    np.testing.assert_array_equal(out.mask, ellipse_mask(LAYOUT))
