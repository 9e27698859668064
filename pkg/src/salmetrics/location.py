"""Metrics scoring a saliency map against discrete fixation locations."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import BinaryFixationMap, FixationSet, as_grid, normalize_variance

EPS = float(np.finfo(np.float64).eps)  # 2.2204e-16
JITTER = 1e-7
BORJI_THRESHOLDS = np.round(np.arange(0.0, 1.0 + 1e-9, 0.1), 10)


@dataclass(frozen=True)
class RocCurve:
    """ROC points ordered from (0, 0) to (1, 1).

    ``thresholds[k]`` is the saliency level producing point ``k``; the two
    end points carry ``+inf`` and ``-inf``.
    """

    fp_rate: np.ndarray
    tp_rate: np.ndarray
    thresholds: np.ndarray

    def area(self) -> float:
        return float(np.trapezoid(self.tp_rate, self.fp_rate))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["threshold", "fp_rate", "tp_rate"])
            for t, f, p in zip(self.thresholds, self.fp_rate, self.tp_rate):
                w.writerow([repr(float(t)), repr(float(f)), repr(float(p))])


@dataclass
class NegativeSampler:
    """Negative-sample source for AUC-Borji (``uniform``) and sAUC (``shuffled``).

    In shuffled mode ``pool`` lists the fixation sets of other images; any
    entry whose ``image_id`` equals ``exclude`` is ignored.
    """

    mode: str = "uniform"
    pool: Sequence[FixationSet] = field(default_factory=tuple)
    images_per_trial: int = 10
    trials: int = 100
    seed: int = 0
    exclude: str | None = None

    def __post_init__(self):
        if self.mode not in ("uniform", "shuffled"):
            raise ValueError(f"unknown sampler mode {self.mode!r}")
        if self.trials < 1 or self.images_per_trial < 1:
            raise ValueError("trials and images_per_trial must be >= 1")

    def candidates(self) -> list[FixationSet]:
        return [fs for fs in self.pool if fs.image_id != self.exclude and fs.n_points > 0]


def _check_pair(P, Q):
    P = as_grid(P, "saliency map")
    Q = BinaryFixationMap.coerce(Q)
    if P.shape != Q.shape:
        raise ValueError(f"dimension mismatch: map {P.shape} vs fixations {Q.shape}")
    if Q.n_fixations < 1:
        raise ValueError("no ground truth fixations")
    return P, Q


def _unit_range(P: np.ndarray) -> np.ndarray:
    # constant maps become all-zero rather than failing
    lo, hi = P.min(), P.max()
    if hi > lo:
        return (P - lo) / (hi - lo)
    return np.zeros_like(P)


def jittered(P, jitter_seed: int) -> np.ndarray:
    """Range-normalised map plus uniform noise in [0, 1e-7) to break ties."""
    P = as_grid(P)
    rng = np.random.default_rng(jitter_seed)
    return _unit_range(P) + rng.random(P.shape) * JITTER


def roc_from_scores(pos: np.ndarray, neg: np.ndarray, thresholds=None) -> RocCurve:
    """ROC of ``pos`` vs ``neg`` scores under the ``value >= threshold`` rule.

    Without explicit ``thresholds`` every distinct positive score is used.
    """
    pos = np.sort(np.asarray(pos, dtype=np.float64))
    neg = np.sort(np.asarray(neg, dtype=np.float64))
    if thresholds is None:
        th = np.unique(pos)[::-1]
    else:
        th = np.sort(np.asarray(thresholds, dtype=np.float64))[::-1]
    tp = (len(pos) - np.searchsorted(pos, th, side="left")) / len(pos)
    fp = (len(neg) - np.searchsorted(neg, th, side="left")) / len(neg)
    return RocCurve(
        fp_rate=np.concatenate([[0.0], fp, [1.0]]),
        tp_rate=np.concatenate([[0.0], tp, [1.0]]),
        thresholds=np.concatenate([[np.inf], th, [-np.inf]]),
    )


def auc_judd(P, Q, jitter_seed: int = 0) -> tuple[float, RocCurve]:
    """AUC with every fixated saliency value as a threshold and all non-fixated
    pixels as negatives."""
    P, Q = _check_pair(P, Q)
    S = jittered(P, jitter_seed)
    mask = Q.mask
    if mask.all():
        raise ValueError("every pixel is fixated; no negatives")
    curve = roc_from_scores(S[mask], S[~mask])
    return curve.area(), curve


def _borji_auc(pos: np.ndarray, neg: np.ndarray) -> float:
    return roc_from_scores(pos, neg, BORJI_THRESHOLDS).area()


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, trial]))


def auc_borji(P, Q, sampler: NegativeSampler | None = None) -> float:
    """AUC against uniformly sampled negatives (with replacement), thresholds
    0, 0.1, ..., 1, averaged over ``sampler.trials``."""
    P, Q = _check_pair(P, Q)
    sampler = sampler or NegativeSampler("uniform")
    S = _unit_range(P).ravel()
    pos = S[Q.mask.ravel()]
    n = len(pos)
    aucs = np.empty(sampler.trials)
    for t in range(sampler.trials):
        idx = _trial_rng(sampler.seed, t).integers(0, S.size, size=n)
        aucs[t] = _borji_auc(pos, S[idx])
    return float(aucs.mean())


def sauc(P, Q, sampler: NegativeSampler) -> float:
    """Shuffled AUC: negatives are fixations of other images.

    Each trial draws ``images_per_trial`` other images, pools their fixations
    (rescaled to this map) and samples as many negatives as there are fixated
    pixels. Negatives landing on fixated pixels are kept.
    """
    P, Q = _check_pair(P, Q)
    if sampler.mode != "shuffled":
        raise ValueError("sauc needs a shuffled sampler")
    others = sampler.candidates()
    if not others:
        raise ValueError("shuffle pool required")
    h, w = P.shape
    pools = [fs.scaled_points(w, h) for fs in others]
    S = _unit_range(P)
    pos = S[Q.mask]
    n = len(pos)
    k = min(sampler.images_per_trial, len(pools))
    aucs = np.empty(sampler.trials)
    for t in range(sampler.trials):
        rng = _trial_rng(sampler.seed, t)
        chosen = rng.choice(len(pools), size=k, replace=False)
        pts = np.concatenate([pools[c] for c in chosen], axis=0)
        idx = rng.choice(len(pts), size=n, replace=len(pts) < n)
        aucs[t] = _borji_auc(pos, S[pts[idx, 1], pts[idx, 0]])
    return float(aucs.mean())


def nss(P, Q) -> float:
    """Mean of the standardised map at fixated pixels; 0 for a constant map."""
    P, Q = _check_pair(P, Q)
    try:
        Pn = normalize_variance(P)
    except ValueError:
        return 0.0
    return float(Pn[Q.mask].mean())


def _require_distribution(g, name, tol=1e-6):
    g = as_grid(g, name)
    if np.any(g < 0) or abs(g.sum() - 1.0) > tol:
        raise ValueError(f"probabilistic input required ({name} must be nonnegative and sum to 1)")
    return g


def information_gain(P, Q, B, epsilon: float = EPS) -> float:
    """Bits per fixation gained by ``P`` over baseline ``B`` at fixated pixels.

    Both maps must already be distributions (sum to one).
    """
    P, Q = _check_pair(P, Q)
    P = _require_distribution(P, "saliency map")
    B = _require_distribution(B, "baseline map")
    if B.shape != P.shape:
        raise ValueError(f"dimension mismatch: baseline {B.shape} vs map {P.shape}")
    m = Q.mask
    return float(np.mean(np.log2(epsilon + P[m]) - np.log2(epsilon + B[m])))
