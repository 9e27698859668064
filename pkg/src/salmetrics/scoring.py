"""Metric registry: one entry point that scores a map against an image's
ground truth, applying each metric's own preprocessing."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import distribution as dist
from . import location as loc
from .baselines import CENTER_SIGMA_FRAC, center_prior, fixation_map
from .core import BinaryFixationMap, FixationSet, ViewingGeometry, as_grid, normalize_sum, rasterize_points, resize

# The eight headline metrics, in the column order of the baseline table.
METRICS = ("sim", "cc", "nss", "auc_judd", "sauc", "ig", "kl", "emd")
EXTRA_METRICS = ("auc_borji", "kl_sym", "spearman_cc")
ALL_METRICS = METRICS + EXTRA_METRICS

LOWER_BETTER = frozenset({"kl", "emd", "kl_sym"})
LOCATION_METRICS = frozenset({"auc_judd", "auc_borji", "sauc", "nss", "ig"})

# Theoretical ranges; None is unbounded.
METRIC_RANGES = {
    "auc_judd": (0.0, 1.0),
    "auc_borji": (0.0, 1.0),
    "sauc": (0.0, 1.0),
    "nss": (None, None),
    "ig": (None, None),
    "sim": (0.0, 1.0),
    "cc": (-1.0, 1.0),
    "spearman_cc": (-1.0, 1.0),
    "kl": (0.0, None),
    "kl_sym": (0.0, None),
    "emd": (0.0, None),
}


def polarity(metric: str) -> str:
    check_metric(metric)
    return "lower-better" if metric in LOWER_BETTER else "higher-better"


def check_metric(metric: str) -> None:
    if metric not in ALL_METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {', '.join(ALL_METRICS)}")


@dataclass(frozen=True)
class MetricSettings:
    epsilon: float = loc.EPS
    emd_downscale: float = dist.EMD_DOWNSCALE
    trials: int = 100
    images_per_trial: int = 10


@dataclass
class GroundTruth:
    """Everything a metric may need about one image's human data."""

    image_id: str
    fixations: BinaryFixationMap
    density: np.ndarray
    baseline: np.ndarray | None = None
    pool: Sequence[FixationSet] = field(default_factory=tuple)

    @property
    def shape(self):
        return self.density.shape


def ground_truth(
    fs: FixationSet,
    geom: ViewingGeometry,
    pool: Sequence[FixationSet] = (),
    center_sigma_frac: float = CENTER_SIGMA_FRAC,
    observers=None,
) -> GroundTruth:
    """Binary map, blurred map and center-prior baseline for ``fs``."""
    pts = fs.points(observers)
    binary = rasterize_points(pts, fs.width, fs.height)
    return GroundTruth(
        image_id=fs.image_id,
        fixations=binary,
        density=fixation_map(fs, geom, observers),
        baseline=center_prior(fs.width, fs.height, center_sigma_frac),
        pool=pool,
    )


def score(metric: str, P, gt: GroundTruth, seed: int = 0, settings: MetricSettings = MetricSettings()) -> float:
    """Score saliency map ``P`` under ``metric``; ``P`` is resized to the
    ground-truth dimensions first when they differ."""
    check_metric(metric)
    P = as_grid(P, "saliency map")
    h, w = gt.shape
    if P.shape != (h, w):
        P = resize(P, w, h)
    Q = gt.fixations
    if metric == "auc_judd":
        return loc.auc_judd(P, Q, jitter_seed=seed)[0]
    if metric == "auc_borji":
        return loc.auc_borji(P, Q, loc.NegativeSampler("uniform", trials=settings.trials, seed=seed))
    if metric == "sauc":
        sampler = loc.NegativeSampler(
            "shuffled",
            pool=gt.pool,
            images_per_trial=settings.images_per_trial,
            trials=settings.trials,
            seed=seed,
            exclude=gt.image_id,
        )
        return loc.sauc(P, Q, sampler)
    if metric == "nss":
        return loc.nss(P, Q)
    if metric == "ig":
        if gt.baseline is None:
            raise ValueError("information gain needs a baseline map")
        return loc.information_gain(normalize_sum(P), Q, gt.baseline, settings.epsilon)
    if metric == "sim":
        return dist.sim(P, gt.density)
    if metric == "cc":
        return dist.cc(P, gt.density)
    if metric == "spearman_cc":
        return dist.spearman_cc_maps(P, gt.density)
    if metric == "kl":
        return dist.kl(normalize_sum(P), gt.density, settings.epsilon)
    if metric == "kl_sym":
        return dist.kl_symmetric(normalize_sum(P), gt.density, settings.epsilon)
    if metric == "emd":
        return dist.emd(P, gt.density, settings.emd_downscale).cost
    raise AssertionError(metric)


def score_all(metrics, P, gt: GroundTruth, seed: int = 0, settings: MetricSettings = MetricSettings()) -> dict:
    return {m: score(m, P, gt, seed, settings) for m in metrics}
