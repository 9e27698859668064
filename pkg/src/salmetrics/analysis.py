"""Behavioural experiments on the metrics: false-negative ablation,
chance-normalised scores, synthetic parameter sweeps and the rank
correlation between metrics."""

from __future__ import annotations

import zlib
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

from .baselines import center_prior, chance_uniform
from .core import FixationSet, ViewingGeometry, as_grid, gaussian_blob, normalize_sum, rasterize_points
from .scoring import ALL_METRICS, LOCATION_METRICS, GroundTruth, MetricSettings, polarity, score


@dataclass(frozen=True)
class ScoreRecord:
    model: str
    image: str
    metric: str
    value: float
    polarity: str = ""

    def __post_init__(self):
        expected = polarity(self.metric)
        if not self.polarity:
            object.__setattr__(self, "polarity", expected)
        elif self.polarity != expected:
            raise ValueError(f"{self.metric} is {expected}, not {self.polarity}")


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    low: float
    high: float
    steps: int
    ground_truth_value: float | None = None

    def __post_init__(self):
        if self.parameter not in ("variance", "location", "weight"):
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if self.steps < 2:
            raise ValueError("steps must be >= 2")
        gt = self.ground_truth_value
        if gt is not None and not (min(self.low, self.high) <= gt <= max(self.low, self.high)):
            raise ValueError("ground_truth_value outside the sweep range")

    def values(self) -> np.ndarray:
        """Evenly spaced values, with the ground-truth value inserted if absent."""
        v = np.linspace(self.low, self.high, self.steps)
        if self.ground_truth_value is not None and not np.any(np.isclose(v, self.ground_truth_value, rtol=0, atol=1e-12)):
            v = np.sort(np.append(v, self.ground_truth_value))
        return v


def ablate_false_negatives(Q_map, fraction: float, seed) -> np.ndarray:
    """Zero ``floor(fraction * count)`` randomly chosen above-mean pixels.

    The result is not renormalised.
    """
    Q = as_grid(Q_map)
    if not 0 <= fraction < 1:
        raise ValueError("fraction must lie in [0, 1)")
    if not Q.max() > Q.min():
        raise ValueError("map is constant")
    above = np.flatnonzero(Q.ravel() > Q.mean())
    if len(above) == 0:
        raise ValueError("no above-mean pixels")
    quota = int(np.floor(fraction * len(above)))
    out = Q.copy()
    if quota:
        rng = np.random.default_rng(seed)
        out.ravel()[rng.choice(above, size=quota, replace=False)] = 0.0
    return out


def chance_normalized_score(score_value: float, limit: float, chance: float, polarity: str = "higher-better") -> float:
    """Drop from the limit as a percentage of the limit-to-chance gap.

    0% at the limit, 100% at chance, above 100% when worse than chance.
    The same ratio applies to both polarities since limit and chance swap
    sides together.
    """
    if polarity not in ("higher-better", "lower-better"):
        raise ValueError(f"unknown polarity {polarity!r}")
    if limit == chance:
        raise ValueError("limit equals chance")
    return 100.0 * (limit - score_value) / (limit - chance)


def ablation_scores(
    truths: Sequence[GroundTruth],
    fractions: Iterable[float],
    metrics: Sequence[str],
    seed: int = 0,
    settings: MetricSettings = MetricSettings(),
) -> dict:
    """Raw per-image scores for ``ablation_table``.

    Returns ``{"fractions", "scores": {(fraction, metric): [...]}, "chance":
    {metric: [...]}}``. Seeds are keyed by image id, so scoring images in
    separate batches and concatenating gives the same lists.
    """
    fractions = sorted(set([0.0, *map(float, fractions)]))
    per = {(f, m): [] for f in fractions for m in metrics}
    chance = {m: [] for m in metrics}
    for gt in truths:
        h, w = gt.shape
        key = zlib.crc32(gt.image_id.encode())
        cmap = chance_uniform(w, h, seed=_seed(seed, key, 1))
        for m in metrics:
            chance[m].append(score(m, cmap, gt, _seed(seed, key, 2), settings))
        for f in fractions:
            pred = ablate_false_negatives(gt.density, f, _seed(seed, key, 3, int(round(f * 1e6))))
            for m in metrics:
                per[f, m].append(score(m, pred, gt, _seed(seed, key, 2), settings))
    return {"fractions": fractions, "scores": per, "chance": chance}


def merge_ablation_scores(parts: Sequence[dict]) -> dict:
    fractions = parts[0]["fractions"]
    scores = {k: [v for p in parts for v in p["scores"][k]] for k in parts[0]["scores"]}
    chance = {m: [v for p in parts for v in p["chance"][m]] for m in parts[0]["chance"]}
    return {"fractions": fractions, "scores": scores, "chance": chance}


def ablation_rows(raw: dict, metrics: Sequence[str]) -> list[dict]:
    rows = []
    for f in raw["fractions"]:
        for m in metrics:
            vals = np.array(raw["scores"][f, m])
            limit = float(np.mean(raw["scores"][0.0, m]))
            ch = float(np.mean(raw["chance"][m]))
            mean = float(vals.mean())
            try:
                cn = chance_normalized_score(mean, limit, ch, polarity(m))
            except ValueError:
                cn = float("nan")
            rows.append(
                {"fraction": f, "metric": m, "mean": mean, "std": float(vals.std()), "chance": ch, "chance_normalized": cn}
            )
    return rows


def ablation_table(
    truths: Sequence[GroundTruth],
    fractions: Iterable[float],
    metrics: Sequence[str],
    seed: int = 0,
    settings: MetricSettings = MetricSettings(),
) -> list[dict]:
    """Score ablated ground-truth maps against the intact ground truth.

    Rows hold ``fraction, metric, mean, std, chance, chance_normalized``;
    fraction 0 is always included and supplies the limit, and a seeded
    uniform-noise chance map supplies the chance level.
    """
    return ablation_rows(ablation_scores(truths, fractions, metrics, seed, settings), metrics)


def _seed(*keys) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


# Synthetic two-mode stimulus used by the parameter sweeps.
@dataclass(frozen=True)
class TwoModeScene:
    width: int = 192
    height: int = 96
    sigma: float = 8.0
    n_fixations: int = 60

    @property
    def modes(self):
        return ((self.width / 3.0, self.height / 2.0), (2.0 * self.width / 3.0, self.height / 2.0))

    def render(self, sigma=None, offset: float = 0.0, weight: float = 0.5) -> np.ndarray:
        """Mixture of the two modes; ``weight`` is the first mode's share of
        mass and ``offset`` shifts both modes right by that many pixels."""
        s = self.sigma if sigma is None else sigma
        (x1, y1), (x2, y2) = self.modes
        g1 = normalize_sum(gaussian_blob(self.width, self.height, x1 + offset, y1, s, s))
        g2 = normalize_sum(gaussian_blob(self.width, self.height, x2 + offset, y2, s, s))
        return weight * g1 + (1.0 - weight) * g2

    def sample_fixations(self, rng, density=None, n=None) -> np.ndarray:
        d = self.render() if density is None else density
        n = self.n_fixations if n is None else n
        idx = rng.choice(d.size, size=n, p=d.ravel() / d.sum())
        y, x = np.divmod(idx, self.width)
        return np.stack([x, y], axis=1)

    def ground_truth(self, seed: int, pool_images: int = 10) -> GroundTruth:
        rng = np.random.default_rng(seed)
        density = self.render()
        binary = rasterize_points(self.sample_fixations(rng, density), self.width, self.height)
        prior = center_prior(self.width, self.height)
        pool = tuple(
            FixationSet(f"pool{k}", (self.sample_fixations(rng, prior),), self.width, self.height)
            for k in range(pool_images)
        )
        return GroundTruth("synthetic", binary, density, prior, pool)


def default_sweep(parameter: str, scene: TwoModeScene, steps: int = 13) -> SweepSpec:
    if parameter == "variance":
        return SweepSpec("variance", scene.sigma / 4, scene.sigma * 4, steps, scene.sigma)
    if parameter == "location":
        return SweepSpec("location", 0.0, scene.width / 6, steps, 0.0)
    if parameter == "weight":
        return SweepSpec("weight", 0.0, 1.0, steps, 0.5)
    raise ValueError(f"unknown sweep parameter {parameter!r}")


def synthetic_sweep(
    spec: SweepSpec,
    metrics: Sequence[str],
    geom: ViewingGeometry | None = None,
    scene: TwoModeScene | None = None,
    trials: int = 5,
    seed: int = 0,
    settings: MetricSettings = MetricSettings(emd_downscale=0.125),
) -> list[dict]:
    """Vary one parameter of a two-mode prediction and score every step.

    The ground truth is the two-mode scene with mode width one degree
    (``geom.pixels_per_degree``); each trial resamples its fixations.
    Rows hold ``param_value, metric, mean, std`` over trials. Distribution
    metrics only see the fixed density, so they are scored once per step.
    """
    if scene is None:
        scene = TwoModeScene(sigma=(geom or ViewingGeometry(8.0)).pixels_per_degree)
    truths = [scene.ground_truth(_seed(seed, t)) for t in range(trials)]
    rows = []
    for value in spec.values():
        if spec.parameter == "variance":
            pred = scene.render(sigma=value)
        elif spec.parameter == "location":
            pred = scene.render(offset=value)
        else:
            pred = scene.render(weight=value)
        for m in metrics:
            used = truths if m in LOCATION_METRICS else truths[:1]
            vals = np.array([score(m, pred, gt, _seed(seed, t, 7), settings) for t, gt in enumerate(used)])
            rows.append({"param_value": float(value), "metric": m, "mean": float(vals.mean()), "std": float(vals.std())})
    return rows


def spearman_rank_matrix(records: Iterable[ScoreRecord]) -> tuple[list[str], np.ndarray]:
    """Spearman correlation between the model rankings of every metric pair.

    Scores are averaged over images per (model, metric); lower-better
    metrics are negated so every ranking runs best-to-worst the same way.
    """
    acc = defaultdict(list)
    for r in records:
        acc[r.model, r.metric].append(r.value)
    models = sorted({m for m, _ in acc})
    metrics = sorted({k for _, k in acc}, key=_metric_order)
    if len(models) < 3:
        raise ValueError("need at least 3 models")
    missing = [(m, k) for m in models for k in metrics if (m, k) not in acc]
    if missing:
        raise ValueError(f"missing model-metric cells: {missing[:5]}")
    ranks = np.empty((len(metrics), len(models)))
    for a, k in enumerate(metrics):
        sign = -1.0 if polarity(k) == "lower-better" else 1.0
        ranks[a] = rankdata([sign * np.mean(acc[m, k]) for m in models])
    K = len(metrics)
    mat = np.eye(K)
    for a in range(K):
        for b in range(a + 1, K):
            ra, rb = ranks[a] - ranks[a].mean(), ranks[b] - ranks[b].mean()
            denom = np.sqrt((ra @ ra) * (rb @ rb))
            mat[a, b] = mat[b, a] = (ra @ rb) / denom if denom > 0 else np.nan
    return metrics, mat


def _metric_order(metric: str):
    return (ALL_METRICS.index(metric) if metric in ALL_METRICS else len(ALL_METRICS), metric)
