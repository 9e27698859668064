"""Benchmark orchestration: configuration, per-image scoring across a worker
pool, baseline and limit tables, experiments, and result files."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import partial
from pathlib import Path
from typing import Sequence

import numpy as np

from . import plotting
from .analysis import (
    ScoreRecord,
    TwoModeScene,
    ablation_rows,
    ablation_scores,
    merge_ablation_scores,
    default_sweep,
    spearman_rank_matrix,
    synthetic_sweep,
)
from .baselines import (
    CENTER_SIGMA_FRAC,
    FitError,
    center_prior,
    chance_uniform,
    empirical_limit,
    permutation_control,
    single_observer_map,
    split_observer_score,
)
from .core import FixationSet, ViewingGeometry, normalize_sum, resize
from .distribution import EMD_DOWNSCALE, emd
from .io import find_map, load_dataset, load_grid
from .location import EPS, auc_judd
from .scoring import METRIC_RANGES, METRICS, GroundTruth, MetricSettings, check_metric, ground_truth, polarity, score
from .visualization import vis_emd_flow, vis_level_sets, vis_pointwise

log = logging.getLogger("salmetrics")

BASELINE_ORDER = ("Infinite Observers", "Single Observer", "Center Prior", "Permutation Control", "Chance")
VIS_METRICS = ("sim", "cc", "nss", "auc_judd", "ig", "kl", "emd")


@dataclass
class BenchmarkConfig:
    dataset_dir: Path
    output_dir: Path = Path("results")
    models: list = field(default_factory=list)  # (name, saliency_dir) pairs
    metrics: list = field(default_factory=lambda: list(METRICS))
    pixels_per_degree: float = 35.0
    seed: int = 0
    epsilon: float = EPS
    emd_downscale: float = EMD_DOWNSCALE
    center_sigma_frac: float = CENTER_SIGMA_FRAC
    jobs: int = 1
    trials: int = 100  # sAUC / AUC-Borji sampling rounds
    images_per_trial: int = 10
    limit_splits: int = 10
    fractions: list = field(default_factory=lambda: [0.25, 0.5, 0.75])
    sweep_parameters: list = field(default_factory=lambda: ["variance", "location", "weight"])
    sweep_steps: int = 13
    sweep_trials: int = 5
    sweep_ppd: float = 8.0
    sweep_emd_downscale: float = 0.125

    def __post_init__(self):
        self.dataset_dir = Path(self.dataset_dir)
        self.output_dir = Path(self.output_dir)
        if isinstance(self.models, dict):
            self.models = list(self.models.items())
        models = []
        for m in self.models:
            if isinstance(m, dict):
                m = (m["name"], m["dir"])
            name, d = m
            models.append((str(name), Path(d)))
        names = [n for n, _ in models]
        if len(set(names)) != len(names):
            raise ValueError("duplicate model names")
        self.models = models
        for m in self.metrics:
            check_metric(m)
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        for f in self.fractions:
            if not 0 < f < 1:
                raise ValueError(f"ablation fraction {f} outside (0, 1)")

    @property
    def geom(self) -> ViewingGeometry:
        return ViewingGeometry(self.pixels_per_degree)

    @property
    def settings(self) -> MetricSettings:
        return MetricSettings(self.epsilon, self.emd_downscale, self.trials, self.images_per_trial)

    @classmethod
    def from_json(cls, path, **overrides) -> "BenchmarkConfig":
        """Load a JSON config; relative paths resolve against the file's
        directory. Keyword overrides that are not None win over the file."""
        path = Path(path)
        raw = json.loads(path.read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        raw.update({k: v for k, v in overrides.items() if v is not None})
        base = path.parent
        for key in ("dataset_dir", "output_dir"):
            if key in raw and not Path(raw[key]).is_absolute():
                raw[key] = base / raw[key]
        models = raw.get("models", [])
        if isinstance(models, dict):
            models = list(models.items())
        raw["models"] = [
            (m["name"], base / m["dir"]) if isinstance(m, dict) else (m[0], base / m[1]) for m in models
        ]
        return cls(**raw)

    def describe(self) -> dict:
        d = asdict(self)
        d["dataset_dir"] = str(self.dataset_dir)
        d["output_dir"] = str(self.output_dir)
        d["models"] = [[n, str(p)] for n, p in self.models]
        del d["jobs"]  # results do not depend on the worker count
        return d


def resolve_jobs(cli_value: int | None, config_value: int = 1) -> int:
    if cli_value is not None:
        return cli_value
    env = os.environ.get("SALMETRICS_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"SALMETRICS_JOBS must be an integer, got {env!r}") from None
    return config_value


def image_seed(seed: int, image_id: str, *extra: int) -> int:
    """Seed for one image, independent of dataset order and worker count."""
    key = [int(seed), zlib.crc32(image_id.encode())] + [int(e) for e in extra]
    return int(np.random.SeedSequence(key).generate_state(1)[0])


def _pool_map(fn, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    chunk = max(1, math.ceil(len(items) / (jobs * 4)))
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def _fmt(v: float) -> str:
    return repr(float(v))


def _gt(cfg: BenchmarkConfig, fs: FixationSet, dataset, observers=None) -> GroundTruth:
    return ground_truth(fs, cfg.geom, dataset, cfg.center_sigma_frac, observers)


# evaluate


def _evaluate_image(cfg: BenchmarkConfig, dataset, fs: FixationSet):
    records, errors = [], []
    if fs.n_points == 0:
        return records, [{"model": "*", "image": fs.image_id, "metric": "*", "error": "no ground truth fixations"}]
    gt = _gt(cfg, fs, dataset)
    seed = image_seed(cfg.seed, fs.image_id)
    for name, d in cfg.models:
        path = find_map(d, fs.image_id)
        if path is None:
            errors.append({"model": name, "image": fs.image_id, "metric": "*", "error": f"missing map in {d}"})
            continue
        try:
            P = load_grid(path)
        except ValueError as exc:
            errors.append({"model": name, "image": fs.image_id, "metric": "*", "error": str(exc)})
            continue
        for m in cfg.metrics:
            try:
                records.append(ScoreRecord(name, fs.image_id, m, score(m, P, gt, seed, cfg.settings)))
            except ValueError as exc:
                errors.append({"model": name, "image": fs.image_id, "metric": m, "error": str(exc)})
    return records, errors


def evaluate(cfg: BenchmarkConfig, write: bool = True) -> tuple[list[ScoreRecord], list[dict]]:
    """Score every model map against every image; writes scores.csv and
    summary.json. Failures are collected per image and never abort the run."""
    dataset = load_dataset(cfg.dataset_dir)
    if not cfg.models:
        raise ValueError("no models configured")
    out = _pool_map(partial(_evaluate_image, cfg, dataset), dataset, cfg.jobs)
    records = _sort_records([r for rs, _ in out for r in rs], cfg.metrics)
    errors = sorted((e for _, es in out for e in es), key=lambda e: (e["model"], e["image"], e["metric"]))
    for e in errors:
        log.warning("%s / %s / %s: %s", e["model"], e["image"], e["metric"], e["error"])
    if write:
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
        write_scores(cfg.output_dir / "scores.csv", records)
        summary = {"command": "evaluate", "models": summarize(records), "errors": errors, "config": cfg.describe()}
        write_json(cfg.output_dir / "summary.json", summary)
    return records, errors


def _sort_records(records, metrics):
    order = {m: i for i, m in enumerate(metrics)}
    return sorted(records, key=lambda r: (r.model, r.image, order.get(r.metric, len(order)), r.metric))


def summarize(records) -> dict:
    acc: dict = {}
    for r in records:
        acc.setdefault(r.model, {}).setdefault(r.metric, []).append(r.value)
    return {
        model: {
            m: {"mean": float(np.mean(v)), "std": float(np.std(v)), "n": len(v), "polarity": polarity(m)}
            for m, v in ms.items()
        }
        for model, ms in acc.items()
    }


def write_scores(path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "image", "metric", "value"])
        for r in records:
            w.writerow([r.model, r.image, r.metric, _fmt(r.value)])


def read_scores(path) -> list[ScoreRecord]:
    with open(path, newline="") as fh:
        return [ScoreRecord(r["model"], r["image"], r["metric"], float(r["value"])) for r in csv.DictReader(fh)]


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")


def _clean(obj):
    # NaN is not valid JSON
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_rows(path, rows: list[dict], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) if isinstance(r[c], float) else r[c] for c in columns])


# baselines and limits


def _baseline_image(cfg: BenchmarkConfig, dataset, fs: FixationSet):
    gt = _gt(cfg, fs, dataset)
    seed = image_seed(cfg.seed, fs.image_id)
    w, h = fs.width, fs.height
    maps = {
        "Center Prior": center_prior(w, h, cfg.center_sigma_frac),
        "Permutation Control": permutation_control(fs.image_id, dataset, cfg.geom, image_seed(cfg.seed, fs.image_id, 3)),
        "Chance": chance_uniform(w, h, seed=image_seed(cfg.seed, fs.image_id, 1)),
    }
    records = []
    for name, P in maps.items():
        for m in cfg.metrics:
            records.append(ScoreRecord(name, fs.image_id, m, score(m, P, gt, seed, cfg.settings)))
    # leave-one-out: each observer predicts all the others
    active = [i for i, o in enumerate(fs.observers) if len(o)]
    if len(active) >= 2:
        per = {m: [] for m in cfg.metrics}
        for i in active:
            rest = [j for j in active if j != i]
            held = _gt(cfg, fs, dataset, rest)
            P = single_observer_map(fs, i, cfg.geom)
            for m in cfg.metrics:
                per[m].append(score(m, P, held, seed, cfg.settings))
        for m in cfg.metrics:
            records.append(ScoreRecord("Single Observer", fs.image_id, m, float(np.mean(per[m]))))
    return records


def _limit_image(cfg: BenchmarkConfig, dataset, ns, fs: FixationSet):
    seed = image_seed(cfg.seed, fs.image_id, 2)

    def score_split(pred, held):
        gt = _gt(cfg, held, dataset)
        return [score(m, pred, gt, seed, cfg.settings) for m in cfg.metrics]

    return [split_observer_score(fs, n, score_split, cfg.geom, seed, cfg.limit_splits) for n in ns]


def compute_limits(cfg: BenchmarkConfig, dataset=None, write: bool = True) -> dict | None:
    """Fit ``a * n**b + c`` to group-vs-group scores for n = 1..N/2.

    Returns ``None`` (with a warning) when some image has fewer than 4
    observers, or when too few group sizes are available to fit.
    """
    dataset = load_dataset(cfg.dataset_dir) if dataset is None else dataset
    dataset = [fs for fs in dataset if fs.n_points]
    counts = [sum(1 for o in fs.observers if len(o)) for fs in dataset]
    if not counts or min(counts) < 4:
        log.warning("empirical limits need >= 4 observers per image (min here %s); skipped", min(counts, default=0))
        return None
    ns = list(range(1, min(counts) // 2 + 1))
    if len(ns) < 3:
        log.warning("empirical limits need >= 3 group sizes (>= 6 observers per image); skipped")
        return None
    per_image = _pool_map(partial(_limit_image, cfg, dataset, ns), dataset, cfg.jobs)
    curve = np.mean(np.asarray(per_image, dtype=float), axis=0)  # (len(ns), len(metrics))
    result = {}
    for k, m in enumerate(cfg.metrics):
        pts = [(n, float(curve[i, k])) for i, n in enumerate(ns)]
        try:
            fit = empirical_limit(pts, METRIC_RANGES[m])
        except FitError as exc:
            log.warning("%s: %s", m, exc)
            result[m] = {"points": pts, "fit": None, "error": str(exc)}
            continue
        result[m] = {"points": pts, "fit": asdict(fit)}
        if write:
            cfg.output_dir.mkdir(parents=True, exist_ok=True)
            plotting.plot_fit(cfg.output_dir / f"limit.{m}.png", ns, curve[:, k], fit, m)
    if write:
        write_json(cfg.output_dir / "limits.json", {"command": "limits", "limits": result, "config": cfg.describe()})
    return result


def run_baselines(cfg: BenchmarkConfig) -> list[dict]:
    """Table of baseline means, rows in a fixed order, plus per-image scores
    and (if the dataset allows) the infinite-observer limits."""
    dataset = load_dataset(cfg.dataset_dir)
    usable = [fs for fs in dataset if fs.n_points]
    if len(usable) < 2:
        raise ValueError("baselines need at least 2 images with fixations")
    out = _pool_map(partial(_baseline_image, cfg, usable), usable, cfg.jobs)
    records = [r for rs in out for r in rs]
    limits = compute_limits(cfg, usable, write=False)
    means = summarize(records)
    table = []
    for name in BASELINE_ORDER:
        if name == "Infinite Observers":
            if limits is None:
                continue
            row = {m: (limits[m]["fit"]["c"] if limits[m]["fit"] else float("nan")) for m in cfg.metrics}
        elif name in means:
            row = {m: means[name][m]["mean"] for m in cfg.metrics}
        else:
            log.warning("%s baseline unavailable (fewer than 2 observers per image)", name)
            continue
        table.append({"model": name, **row})
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    order = {n: i for i, n in enumerate(BASELINE_ORDER)}
    records = sorted(_sort_records(records, cfg.metrics), key=lambda r: order[r.model])
    write_scores(cfg.output_dir / "scores.csv", records)
    write_rows(cfg.output_dir / "baselines.csv", table, ["model", *cfg.metrics])
    write_json(
        cfg.output_dir / "summary.json",
        {"command": "baselines", "table": table, "limits": limits, "config": cfg.describe()},
    )
    return table


# experiments


def _truths(cfg, dataset):
    usable = [fs for fs in dataset if fs.n_points]
    return [_gt(cfg, fs, usable) for fs in usable]


def run_ablation(cfg: BenchmarkConfig) -> list[dict]:
    dataset = load_dataset(cfg.dataset_dir)
    truths = _truths(cfg, dataset)
    parts = _pool_map(partial(_ablation_image, cfg), truths, cfg.jobs)
    rows = ablation_rows(merge_ablation_scores(parts), cfg.metrics)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    write_rows(cfg.output_dir / "ablation.csv", rows, ["fraction", "metric", "mean", "std", "chance", "chance_normalized"])
    wide = []
    for f in sorted({r["fraction"] for r in rows}):
        wide.append({"fraction": f, **{r["metric"]: r["mean"] for r in rows if r["fraction"] == f}})
    write_rows(cfg.output_dir / "ablation_table.csv", wide, ["fraction", *cfg.metrics])
    write_json(cfg.output_dir / "summary.json", {"command": "ablate", "rows": rows, "config": cfg.describe()})
    plotting.plot_ablation(cfg.output_dir / "ablation.png", rows)
    return rows


def _ablation_image(cfg, gt):
    return ablation_scores([gt], cfg.fractions, cfg.metrics, cfg.seed, cfg.settings)


def run_sweep(cfg: BenchmarkConfig) -> list[dict]:
    scene = TwoModeScene(sigma=cfg.sweep_ppd)
    settings = replace(cfg.settings, emd_downscale=cfg.sweep_emd_downscale)
    specs = [default_sweep(p, scene, cfg.sweep_steps) for p in cfg.sweep_parameters]
    results = _pool_map(partial(_sweep_one, cfg, scene, settings), specs, cfg.jobs)
    rows = []
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    for spec, part in zip(specs, results):
        rows.extend({"parameter": spec.parameter, **r} for r in part)
        plotting.plot_sweep(cfg.output_dir / f"sweep.{spec.parameter}.png", part, spec.parameter, spec.ground_truth_value)
    write_rows(cfg.output_dir / "sweep.csv", rows, ["parameter", "param_value", "metric", "mean", "std"])
    write_json(cfg.output_dir / "summary.json", {"command": "sweep", "rows": rows, "config": cfg.describe()})
    return rows


def _sweep_one(cfg, scene, settings, spec):
    return synthetic_sweep(spec, cfg.metrics, scene=scene, trials=cfg.sweep_trials, seed=cfg.seed, settings=settings)


def run_correlate(cfg: BenchmarkConfig) -> tuple[list[str], np.ndarray]:
    """Evaluate all models, then the Spearman matrix of their rankings."""
    if len(cfg.models) < 3:
        raise ValueError("correlate needs at least 3 models")
    records, errors = evaluate(cfg)
    metrics, mat = spearman_rank_matrix(records)
    with open(cfg.output_dir / "matrix.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", *metrics])
        for m, row in zip(metrics, mat):
            w.writerow([m, *(_fmt(v) for v in row)])
    plotting.plot_matrix(cfg.output_dir / "matrix.png", metrics, mat)
    write_json(
        cfg.output_dir / "summary.json",
        {"command": "correlate", "models": summarize(records), "metrics": metrics,
         "matrix": mat.tolist(), "errors": errors, "config": cfg.describe()},
    )
    return metrics, mat


# visualisation


def visualize_map(metric: str, P, gt: GroundTruth, seed: int, settings: MetricSettings, path) -> float:
    """Write the contribution image for ``metric`` and return the scalar the
    image aggregates to."""
    h, w = gt.shape
    if P.shape != (h, w):
        P = resize(P, w, h)
    Q = gt.fixations
    if metric == "auc_judd":
        sets, curve = vis_level_sets(P, Q, 5, jitter_seed=seed)
        plotting.save_level_sets(path, P, Q, sets, curve)
        return auc_judd(P, Q, jitter_seed=seed)[0]
    if metric == "emd":
        sol = emd(P, gt.density, settings.emd_downscale)
        out, inn = vis_emd_flow(sol, (h, w))
        plotting.save_emd_flow(path, out, inn)
        o, _ = vis_emd_flow(sol)
        return float(o.sum())
    if metric in ("nss", "ig"):
        B = gt.baseline if metric == "ig" else None
        Pm = normalize_sum(P) if metric == "ig" else P
        V = vis_pointwise(metric, Pm, Q, B, settings.epsilon)
        (plotting.save_diverging if metric == "ig" else plotting.save_heatmap)(path, V)
        return float(V[Q.mask].mean())
    if metric in ("sim", "cc", "kl"):
        Pm = normalize_sum(P) if metric == "kl" else P
        V = vis_pointwise(metric, Pm, gt.density, None, settings.epsilon)
        plotting.save_heatmap(path, V)
        return float(V.sum())
    raise ValueError(f"no visualisation for {metric!r}")


def _visualize_image(cfg, dataset, fs):
    records, errors = [], []
    if fs.n_points == 0:
        return records, errors
    gt = _gt(cfg, fs, dataset)
    seed = image_seed(cfg.seed, fs.image_id)
    for name, d in cfg.models:
        path = find_map(d, fs.image_id)
        if path is None:
            errors.append({"model": name, "image": fs.image_id, "metric": "*", "error": f"missing map in {d}"})
            continue
        P = load_grid(path)
        out_dir = cfg.output_dir / "vis" / name
        out_dir.mkdir(parents=True, exist_ok=True)
        for m in cfg.metrics:
            try:
                v = visualize_map(m, P, gt, seed, cfg.settings, out_dir / f"{fs.image_id}.{m}.png")
                records.append(ScoreRecord(name, fs.image_id, m, v))
            except ValueError as exc:
                errors.append({"model": name, "image": fs.image_id, "metric": m, "error": str(exc)})
    return records, errors


def run_visualize(cfg: BenchmarkConfig) -> list[ScoreRecord]:
    """One PNG per model, image and metric under ``vis/<model>/``; the
    aggregated scalars go to scores.csv."""
    skipped = [m for m in cfg.metrics if m not in VIS_METRICS]
    if skipped:
        log.warning("no visualisation for %s; skipped", ", ".join(skipped))
    vcfg = replace(cfg, metrics=[m for m in cfg.metrics if m in VIS_METRICS])
    dataset = load_dataset(cfg.dataset_dir)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    out = _pool_map(partial(_visualize_image, vcfg, dataset), dataset, cfg.jobs)
    records = _sort_records([r for rs, _ in out for r in rs], vcfg.metrics)
    errors = sorted((e for _, es in out for e in es), key=lambda e: (e["model"], e["image"], e["metric"]))
    write_scores(cfg.output_dir / "scores.csv", records)
    write_json(cfg.output_dir / "summary.json", {"command": "visualize", "models": summarize(records),
                                                 "errors": errors, "config": cfg.describe()})
    return records
