import numpy as np
import pytest

from salmetrics.core import (
    BinaryFixationMap,
    FixationSet,
    ViewingGeometry,
    as_grid,
    blur_to_fixation_map,
    gaussian_blob,
    histogram_match,
    normalize_range,
    normalize_sum,
    normalize_variance,
    rasterize_fixations,
    rasterize_points,
    resize,
)


def test_as_grid_rejects_bad_input():
    with pytest.raises(ValueError, match="2-D"):
        as_grid(np.zeros(4))
    with pytest.raises(ValueError, match="empty"):
        as_grid(np.zeros((0, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        as_grid([[1.0, np.nan]])
    assert as_grid([[1, 2]]).dtype == np.float64


def test_fixation_set_points_and_subset():
    fs = FixationSet("a", ([(0, 0), (1, 2)], [(3, 1)]), width=4, height=3)
    assert fs.n_observers == 2 and fs.n_points == 3
    assert fs.points([1]).tolist() == [[3, 1]]
    sub = fs.subset([1])
    assert sub.observer_ids == ("1",) and sub.n_points == 1
    with pytest.raises(ValueError, match="outside"):
        FixationSet("b", ([(4, 0)],), width=4, height=3)


def test_scaled_points_maps_pixel_centres():
    fs = FixationSet("a", ([(0, 0), (9, 9), (5, 2)],), width=10, height=10)
    pts = fs.scaled_points(5, 5)
    assert pts.tolist() == [[0, 0], [4, 4], [2, 1]]


def test_rasterize_counts_pixels_once():
    fs = FixationSet("a", ([(1, 1), (1, 1)], [(2, 0)]), width=3, height=2)
    Q = rasterize_fixations(fs, 3, 2)
    assert Q.n_fixations == 2
    assert Q.mask.tolist() == [[False, False, True], [False, True, False]]
    with pytest.raises(ValueError, match="no ground truth fixations"):
        rasterize_points([], 3, 2)


def test_binary_map_validation():
    with pytest.raises(ValueError):
        BinaryFixationMap(np.array([[0, 2]]))
    assert BinaryFixationMap(np.array([[0, 1]])).n_fixations == 1


def test_blur_matches_direct_gaussian_sum():
    # independent oracle: sum of analytic Gaussians, truncated at 4 sigma, then normalised
    sigma = 2.0
    pts = [(3, 4), (10, 7)]
    Q = rasterize_points(pts, 16, 12)
    got = blur_to_fixation_map(Q, ViewingGeometry(sigma))
    yy, xx = np.mgrid[0:12, 0:16]
    ref = np.zeros((12, 16))
    r = int(4 * sigma + 0.5)
    for x, y in pts:
        g = np.exp(-0.5 * ((xx - x) ** 2 + (yy - y) ** 2) / sigma**2)
        g[(np.abs(xx - x) > r) | (np.abs(yy - y) > r)] = 0
        ref += g
    ref /= ref.sum()
    np.testing.assert_allclose(got, ref, atol=1e-5)
    assert got.sum() == pytest.approx(1.0, abs=1e-12)


def test_blur_symmetric_single_fixation():
    Q = rasterize_points([(5, 5)], 11, 11)
    m = blur_to_fixation_map(Q, ViewingGeometry(1.5))
    np.testing.assert_allclose(m, m.T, atol=1e-15)
    np.testing.assert_allclose(m, m[::-1, ::-1], atol=1e-15)
    assert np.unravel_index(m.argmax(), m.shape) == (5, 5)


def test_normalizers():
    g = np.array([[1.0, 3.0], [5.0, 7.0]])
    assert normalize_range(g).tolist() == [[0, 1 / 3], [2 / 3, 1]]
    v = normalize_variance(g)
    assert v.mean() == pytest.approx(0) and v.std() == pytest.approx(1)
    assert normalize_sum(g).sum() == pytest.approx(1)
    c = np.ones((2, 2))
    for fn, msg in ((normalize_range, "degenerate range"), (normalize_variance, "zero variance")):
        with pytest.raises(ValueError, match=msg):
            fn(c)
    with pytest.raises(ValueError, match="zero mass"):
        normalize_sum(np.zeros((2, 2)))


def test_histogram_match_keeps_order_and_values():
    g = np.array([[0.3, 0.1], [0.9, 0.5]])
    out = histogram_match(g, [10, 20, 30, 40])
    assert out.tolist() == [[20, 10], [40, 30]]
    with pytest.raises(ValueError, match="differ"):
        histogram_match(g, [1, 2])


def test_resize_mean_pooling_and_identity(rng):
    g = rng.random((6, 8))
    pooled = resize(g, 4, 3)
    ref = g.reshape(3, 2, 4, 2).mean(axis=(1, 3))
    np.testing.assert_allclose(pooled, ref, atol=1e-14)
    np.testing.assert_array_equal(resize(g, 8, 6), g)
    # constant stays constant both ways
    c = np.full((5, 7), 2.5)
    np.testing.assert_allclose(resize(c, 13, 3), 2.5)
    np.testing.assert_allclose(resize(c, 2, 11), 2.5)


def test_resize_enlarge_linear():
    g = np.array([[0.0, 1.0]])
    out = resize(g, 4, 1)
    # half-pixel centres: x = 0.5*k - 0.25 clipped to [0, 1]
    np.testing.assert_allclose(out, [[0.0, 0.25, 0.75, 1.0]])


def test_gaussian_blob_peak():
    b = gaussian_blob(9, 7, 4, 3, 2, 1)
    assert b.max() == 1.0 and np.unravel_index(b.argmax(), b.shape) == (3, 4)
