"""Per-pixel contribution maps for each metric.

Every pointwise map aggregates back to its scalar score: SIM and KL maps sum
to the score, NSS and IG maps average to it over fixated pixels, the CC map
sums to the correlation, and the EMD outflow/inflow maps each sum to the
transport cost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import BinaryFixationMap, as_grid, histogram_match, normalize_sum, normalize_variance
from .distribution import EmdSolution
from .location import EPS, RocCurve, _check_pair, _require_distribution, jittered, roc_from_scores


@dataclass(frozen=True)
class LevelSet:
    threshold: float
    mask: np.ndarray
    hits: np.ndarray  # per fixated pixel, row-major order
    tp_rate: float
    fp_rate: float

    @property
    def n_hits(self) -> int:
        return int(self.hits.sum())


def level_set(S: np.ndarray, Q: BinaryFixationMap, threshold: float) -> LevelSet:
    """Pixels of ``S`` at or above ``threshold`` and which fixations they catch."""
    mask = S >= threshold
    hits = mask[Q.mask]
    n_neg = Q.mask.size - Q.n_fixations
    fp = (mask & ~Q.mask).sum() / n_neg if n_neg else 0.0
    return LevelSet(float(threshold), mask, hits, float(hits.mean()), float(fp))


def vis_level_sets(P, Q, k: int = 5, jitter_seed: int = 0) -> tuple[list[LevelSet], RocCurve]:
    """``k`` level sets at evenly spaced true-positive rates from 0 to 1.

    Uses the same jittered map as ``auc_judd`` with the same seed, so hit
    counts match its ROC numerators.
    """
    P, Q = _check_pair(P, Q)
    if k < 2:
        raise ValueError("k must be >= 2")
    S = jittered(P, jitter_seed)
    vals = np.sort(S[Q.mask])[::-1]
    n = len(vals)
    sets = []
    for t in np.linspace(0.0, 1.0, k):
        if t == 0:
            th = np.inf
        else:
            th = vals[min(n, int(np.ceil(t * n - 1e-9))) - 1]
        sets.append(level_set(S, Q, th))
    return sets, roc_from_scores(S[Q.mask], S[~Q.mask])


def vis_pointwise(metric: str, P, Q, B=None, epsilon: float = EPS) -> np.ndarray:
    """Signed per-pixel contribution map for ``nss``, ``sim``, ``cc``, ``kl`` or ``ig``.

    ``Q`` is a ``BinaryFixationMap`` for nss/ig (for ig a fixation density
    may be given instead, yielding the density-weighted gain map) and a
    fixation density for sim/cc/kl.
    """
    P = as_grid(P, "saliency map")
    if metric == "nss":
        Q = BinaryFixationMap.coerce(Q)
        try:
            Pn = normalize_variance(P)
        except ValueError:
            Pn = np.zeros_like(P)
        return np.where(Q.mask, Pn, 0.0)
    if metric == "sim":
        return np.minimum(normalize_sum(P), normalize_sum(as_grid(Q)))
    if metric == "cc":
        # elementwise product of the two centred maps, scaled so the
        # pixels sum to the correlation coefficient
        Pc = P - P.mean()
        Qd = as_grid(Q)
        Qc = Qd - Qd.mean()
        denom = np.sqrt(np.sum(Pc**2) * np.sum(Qc**2))
        if not denom > 0:
            raise ValueError("zero variance")
        return Pc * Qc / denom
    if metric == "kl":
        Pd = _require_distribution(P, "saliency map")
        Qd = _require_distribution(Q, "fixation map")
        return Qd * np.log(epsilon + Qd / (epsilon + Pd))
    if metric == "ig":
        if B is None:
            raise ValueError("information gain visualisation needs a baseline map")
        Pd = _require_distribution(P, "saliency map")
        Bd = _require_distribution(B, "baseline map")
        gain = np.log2(epsilon + Pd) - np.log2(epsilon + Bd)
        if isinstance(Q, BinaryFixationMap) or _is_binary(Q):
            return np.where(BinaryFixationMap.coerce(Q).mask, gain, 0.0)
        return as_grid(Q) * gain
    raise ValueError(f"no pointwise visualisation for {metric!r}")


def _is_binary(Q) -> bool:
    a = np.asarray(Q)
    return a.dtype == bool or bool(np.all((a == 0) | (a == 1)))


def vis_emd_flow(solution: EmdSolution, dims: tuple[int, int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Moved-mass-times-distance leaving each bin (outflow) and arriving at
    each bin (inflow).

    Maps are at bin resolution unless ``dims = (height, width)`` is given,
    in which case they are enlarged by nearest-neighbour lookup for overlay.
    """
    h, w = solution.shape
    work = solution.amount * solution.distance
    out = np.bincount(solution.from_bin, weights=work, minlength=h * w).reshape(h, w)
    inn = np.bincount(solution.to_bin, weights=work, minlength=h * w).reshape(h, w)
    if dims is not None:
        out, inn = upscale_nearest(out, dims), upscale_nearest(inn, dims)
    return out, inn


def upscale_nearest(g: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    H, W = dims
    h, w = g.shape
    rows = np.minimum((np.arange(H) * h) // H, h - 1)
    cols = np.minimum((np.arange(W) * w) // W, w - 1)
    return g[np.ix_(rows, cols)]


def display_equalize(P) -> np.ndarray:
    """Histogram-equalise a map (match to a uniform ramp) for display only."""
    P = as_grid(P)
    return histogram_match(P, np.linspace(0.0, 1.0, P.size))
