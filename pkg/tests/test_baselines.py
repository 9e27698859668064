import json

import numpy as np
import pytest

from salmetrics.baselines import (
    FitError,
    FitResult,
    center_prior,
    chance_uniform,
    empirical_limit,
    fixation_map,
    permutation_control,
    single_observer_map,
    split_observer_score,
)
from salmetrics.core import FixationSet, ViewingGeometry
from salmetrics.scoring import ground_truth, score


def test_center_prior_shape_and_symmetry():
    cp = center_prior(31, 31)
    assert cp.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(cp, cp.T, atol=1e-18)
    assert np.unravel_index(cp.argmax(), cp.shape) == (15, 15)
    wide = center_prior(60, 20)
    # stretched with the aspect ratio: sigma_x = 60/6, sigma_y = 20/6
    yy, xx = np.mgrid[0:20, 0:60]
    ref = np.exp(-0.5 * (((xx - 29.5) / 10.0) ** 2 + ((yy - 9.5) / (20 / 6)) ** 2))
    np.testing.assert_allclose(wide, ref / ref.sum(), rtol=1e-12)


def test_chance_uniform():
    c = chance_uniform(5, 4)
    np.testing.assert_allclose(c, 1 / 20)
    n = chance_uniform(5, 4, seed=1)
    assert n.sum() == pytest.approx(1.0) and n.std() > 0
    np.testing.assert_array_equal(n, chance_uniform(5, 4, seed=1))


def test_permutation_control_never_picks_target(small_dataset, geom):
    target = small_dataset[0]
    own = fixation_map(target, geom)
    others = {fs.image_id: fixation_map(fs, geom) for fs in small_dataset[1:]}
    picks = set()
    for seed in range(10_000):
        rng = np.random.default_rng(seed)
        idx = rng.integers(len(others))
        picks.add(idx)
    assert len(picks) == len(others)
    for seed in range(200):
        m = permutation_control(target.image_id, small_dataset, geom, seed)
        assert not np.array_equal(m, own)
        assert any(np.array_equal(m, o) for o in others.values())


def test_permutation_control_exclusion_exhaustive(geom):
    # two images only: every draw must be the other one
    a = FixationSet("a", ([(1, 1)],), 8, 8)
    b = FixationSet("b", ([(6, 6)],), 8, 8)
    ref = fixation_map(b, ViewingGeometry(1.0))
    for seed in range(10_000):
        if seed % 500 == 0:
            np.testing.assert_array_equal(permutation_control("a", [a, b], ViewingGeometry(1.0), seed), ref)
    with pytest.raises(ValueError, match="at least 2 images"):
        permutation_control("a", [a], ViewingGeometry(1.0), 0)


def test_permutation_control_resizes():
    a = FixationSet("a", ([(1, 1)],), 8, 6)
    b = FixationSet("b", ([(10, 3)],), 16, 12)
    m = permutation_control("a", [a, b], ViewingGeometry(1.0), 0)
    assert m.shape == (6, 8) and m.sum() == pytest.approx(1.0)


def test_single_observer_single_bump():
    fs = FixationSet("a", ([(4, 4)], [(1, 1), (7, 7)]), 9, 9)
    m = single_observer_map(fs, 0, ViewingGeometry(1.0))
    assert np.unravel_index(m.argmax(), m.shape) == (4, 4)
    np.testing.assert_allclose(m, m.T, atol=1e-18)


def test_split_observer_score_errors_and_n1(small_dataset, geom):
    fs = small_dataset[0]
    with pytest.raises(ValueError, match="insufficient observers"):
        split_observer_score(fs, 5, lambda p, h: 0.0, geom, 0)
    seen = []

    def spy(pred, held):
        seen.append(held.n_observers)
        return 1.0

    assert split_observer_score(fs, 1, spy, geom, 0, n_splits=4) == 1.0
    assert seen == [1, 1, 1, 1]


def test_split_score_increases_with_n(small_dataset, geom):
    def auc(pred, held):
        gt = ground_truth(held, geom)
        return score("auc_judd", pred, gt)

    vals = [np.mean([split_observer_score(fs, n, auc, geom, 0, 6) for fs in small_dataset]) for n in (1, 2, 4)]
    assert vals[0] < vals[1] < vals[2]


def test_empirical_limit_noiseless():
    n = np.arange(1, 20)
    r = empirical_limit(np.c_[n, 2 / n + 5], (None, None))
    assert r.c == pytest.approx(5, abs=1e-6)
    assert r.a == pytest.approx(2, abs=1e-6) and r.b == pytest.approx(-1, abs=1e-6)
    assert r.predict(np.array([1.0, 4.0])) == pytest.approx([7.0, 5.5])


def test_empirical_limit_clamped_to_range():
    n = np.arange(1, 10)
    y = 0.99 - 0.3 / n  # would extrapolate to 0.99
    r = empirical_limit(np.c_[n, y], (0.0, 0.95))
    assert 0.0 <= r.c <= 0.95


def test_empirical_limit_errors():
    with pytest.raises(ValueError, match="3 distinct"):
        empirical_limit([(1, 0.5), (2, 0.6), (2, 0.6)], (0, 1))
    assert issubclass(FitError, RuntimeError)


def test_fit_result_json():
    r = FitResult(1.0, -0.5, 0.9, 0.88, 0.92, 7)
    assert json.loads(r.to_json()) == {"a": 1.0, "b": -0.5, "c": 0.9, "ci_low": 0.88, "ci_high": 0.92, "n_points": 7}
