"""Baseline predictors and dataset-specific empirical metric limits."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import t as student_t

from .core import (
    FixationSet,
    ViewingGeometry,
    blur_to_fixation_map,
    gaussian_blob,
    normalize_sum,
    rasterize_points,
    resize,
)

CENTER_SIGMA_FRAC = 1.0 / 6.0


def center_prior(width: int, height: int, sigma_frac: float = CENTER_SIGMA_FRAC) -> np.ndarray:
    """Centred Gaussian stretched to the image aspect ratio, summing to one.

    ``sigma_y = sigma_frac * height`` and ``sigma_x = sigma_frac * width``.
    """
    if width < 1 or height < 1:
        raise ValueError("dimensions must be >= 1")
    g = gaussian_blob(
        width, height, (width - 1) / 2.0, (height - 1) / 2.0, sigma_frac * width, sigma_frac * height
    )
    return normalize_sum(g)


def chance_uniform(width: int, height: int, seed: int | None = None) -> np.ndarray:
    """Image-agnostic chance map.

    With ``seed=None`` every pixel holds ``1 / (width * height)``. With a seed
    the pixels are i.i.d. uniform draws, normalised to unit mass, which keeps
    correlation-type metrics defined.
    """
    if width < 1 or height < 1:
        raise ValueError("dimensions must be >= 1")
    if seed is None:
        return np.full((height, width), 1.0 / (width * height))
    rng = np.random.default_rng(seed)
    return normalize_sum(rng.random((height, width)))


def fixation_map(fixations: FixationSet, geom: ViewingGeometry, observers=None) -> np.ndarray:
    """Blurred fixation map of (a subset of) the observers at native size."""
    if fixations.width is None or fixations.height is None:
        raise ValueError(f"image {fixations.image_id!r} has no dimensions")
    pts = fixations.points(observers)
    return blur_to_fixation_map(rasterize_points(pts, fixations.width, fixations.height), geom)


def permutation_control(
    target_image: str,
    dataset: Sequence[FixationSet],
    geom: ViewingGeometry,
    seed: int,
) -> np.ndarray:
    """Fixation map of a randomly chosen *other* image, resized to the target."""
    by_id = {fs.image_id: fs for fs in dataset}
    if target_image not in by_id:
        raise KeyError(target_image)
    others = sorted(i for i, fs in by_id.items() if i != target_image and fs.n_points > 0)
    if not others:
        raise ValueError("permutation control needs at least 2 images")
    rng = np.random.default_rng(seed)
    source = by_id[others[rng.integers(len(others))]]
    target = by_id[target_image]
    m = fixation_map(source, geom)
    if (source.width, source.height) != (target.width, target.height):
        m = normalize_sum(np.clip(resize(m, target.width, target.height), 0, None))
    return m


def single_observer_map(fixations: FixationSet, observer: int, geom: ViewingGeometry) -> np.ndarray:
    return fixation_map(fixations, geom, [observer])


def split_observer_score(
    fixations: FixationSet,
    n: int,
    score: Callable[[np.ndarray, FixationSet], float],
    geom: ViewingGeometry,
    seed: int,
    n_splits: int = 10,
) -> float:
    """Mean score of group A's map at predicting group B, A and B disjoint
    random groups of ``n`` observers.

    ``score(pred_map, held_out)`` receives A's blurred map and B's fixations
    as a ``FixationSet``; it decides whether to use locations or a map. It
    may return a vector (several metrics per split), averaged elementwise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    active = [i for i, o in enumerate(fixations.observers) if len(o) > 0]
    if 2 * n > len(active):
        raise ValueError(f"insufficient observers: need {2 * n}, have {len(active)}")
    vals = []
    for s in range(n_splits):
        rng = np.random.default_rng(np.random.SeedSequence([seed, n, s]))
        pick = rng.permutation(active)[: 2 * n]
        a, b = sorted(pick[:n]), sorted(pick[n:])
        vals.append(score(fixation_map(fixations, geom, a), fixations.subset(b)))
    mean = np.mean(np.asarray(vals, dtype=float), axis=0)
    return float(mean) if mean.ndim == 0 else mean


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class FitResult:
    a: float
    b: float
    c: float
    ci_low: float
    ci_high: float
    n_points: int

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    def predict(self, n):
        return self.a * np.asarray(n, dtype=float) ** self.b + self.c


def _power(p, n):
    return p[0] * n ** p[1] + p[2]


def empirical_limit(scores, metric_range: tuple[float, float]) -> FitResult:
    """Fit ``a * n**b + c`` with ``b <= 0`` and ``c`` inside ``metric_range``.

    Bounded trust-region least squares from several starts. The 95% interval
    on ``c`` is ``c +/- t * se`` where ``t`` is the Student-t quantile for
    ``len(scores) - 3`` degrees of freedom and ``se`` comes from
    ``inv(J'J) * residual_variance`` at the optimum.
    """
    pts = np.asarray(scores, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("scores must be (n, score) pairs")
    n, y = pts[:, 0], pts[:, 1]
    if len(np.unique(n)) < 3:
        raise ValueError("need at least 3 distinct n values")
    lo, hi = metric_range
    lo_b = -np.inf if lo is None else lo
    hi_b = np.inf if hi is None else hi

    def resid(p):
        return _power(p, n) - y

    c0 = float(np.clip(y[np.argmax(n)], lo_b, hi_b))
    if np.isfinite(lo_b) and np.isfinite(hi_b) and c0 in (lo_b, hi_b):
        c0 = lo_b + (hi_b - lo_b) * (0.999 if c0 == hi_b else 0.001)
    span = float(np.ptp(y)) or 1.0
    best = None
    for a0 in (-span, span):
        for b0 in (-0.5, -1.0):
            try:
                r = least_squares(
                    resid,
                    [a0, b0, c0],
                    bounds=([-np.inf, -np.inf, lo_b], [np.inf, 0.0, hi_b]),
                    method="trf",
                    x_scale="jac",
                    xtol=1e-15,
                    ftol=1e-15,
                    gtol=1e-15,
                    max_nfev=20000,
                )
            except ValueError:
                continue
            if r.status > 0 and (best is None or r.cost < best.cost):
                best = r
    if best is None:
        raise FitError(f"power fit did not converge on {len(n)} points (range {np.ptp(y):.4g})")

    a, b, c = (float(v) for v in best.x)
    c = float(np.clip(c, lo_b, hi_b))
    dof = max(len(n) - 3, 1)
    s2 = 2.0 * best.cost / dof
    J = best.jac
    try:
        cov = np.linalg.pinv(J.T @ J) * s2
        se = float(np.sqrt(max(cov[2, 2], 0.0)))
    except np.linalg.LinAlgError as exc:
        raise FitError(f"singular Jacobian at optimum; residual SS {2 * best.cost:.4g}") from exc
    q = float(student_t.ppf(0.975, dof))
    return FitResult(a, b, c, c - q * se, c + q * se, int(len(n)))
