"""Saliency map evaluation: eight metrics, baselines, empirical limits and
experiments on metric behaviour."""

from .core import BinaryFixationMap, FixationSet, ViewingGeometry
from .distribution import EmdSolution, cc, emd, kl, kl_symmetric, sim, spearman_cc_maps
from .location import RocCurve, auc_borji, auc_judd, information_gain, nss, sauc
from .scoring import ALL_METRICS, METRICS, GroundTruth, MetricSettings, ground_truth, polarity, score

__version__ = "0.1.0"

__all__ = [
    "ALL_METRICS",
    "METRICS",
    "BinaryFixationMap",
    "EmdSolution",
    "FixationSet",
    "GroundTruth",
    "MetricSettings",
    "RocCurve",
    "ViewingGeometry",
    "auc_borji",
    "auc_judd",
    "cc",
    "emd",
    "ground_truth",
    "information_gain",
    "kl",
    "kl_symmetric",
    "nss",
    "polarity",
    "sauc",
    "score",
    "sim",
    "spearman_cc_maps",
]
