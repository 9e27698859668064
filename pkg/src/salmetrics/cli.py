"""Command-line front end.

    salmetrics evaluate|baselines|limits|ablate|sweep|correlate|visualize --config run.json
    salmetrics synth --out demo/

Every subcommand writes its files under the configured output directory and
prints a comma-separated summary to stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from .baselines import center_prior
from .core import normalize_sum
from .io import DataFormatError, save_grid, write_dataset
from .synthetic import make_dataset, object_map

COMMANDS = ("evaluate", "baselines", "limits", "ablate", "sweep", "correlate", "visualize")


def _list(text: str) -> list[str]:
    return [t for t in text.replace(",", " ").split() if t]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="salmetrics", description="Saliency map evaluation harness")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="JSON config file")
        sp.add_argument("--metrics", nargs="+", help="metric ids (space or comma separated)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int, help="worker processes (default: $SALMETRICS_JOBS or config)")
        sp.add_argument("--output", type=Path, help="output directory")
        if name == "ablate":
            sp.add_argument("--fractions", type=lambda s: [float(v) for v in _list(s)])
        if name == "sweep":
            sp.add_argument("--parameters", nargs="+", choices=("variance", "location", "weight"))
        if name == "visualize":
            sp.add_argument("--metric", dest="metric_alias", nargs="+", help="same as --metrics")
    sp = sub.add_parser("synth", help="write a synthetic dataset, model maps and a config")
    sp.add_argument("--out", required=True, type=Path)
    sp.add_argument("--images", type=int, default=100)
    sp.add_argument("--observers", type=int, default=15)
    sp.add_argument("--seed", type=int, default=0)
    return p


def load_config(args) -> harness.BenchmarkConfig:
    metrics = args.metrics or getattr(args, "metric_alias", None)
    overrides = {
        "metrics": [m for t in metrics for m in _list(t)] if metrics else None,
        "seed": args.seed,
        "output_dir": str(args.output.resolve()) if args.output else None,
        "fractions": getattr(args, "fractions", None),
        "sweep_parameters": getattr(args, "parameters", None),
    }
    cfg = harness.BenchmarkConfig.from_json(args.config, **overrides)
    cfg.jobs = harness.resolve_jobs(args.jobs, cfg.jobs)
    if cfg.jobs < 1:
        raise ValueError("jobs must be >= 1")
    return cfg


def _print_rows(rows, columns, out=sys.stdout):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])


def _print_summary(records, out=sys.stdout):
    rows = [
        {"model": model, "metric": m, "mean": s["mean"], "n": s["n"]}
        for model, ms in harness.summarize(records).items()
        for m, s in ms.items()
    ]
    _print_rows(rows, ["model", "metric", "mean", "n"], out)


def synth(out: Path, n_images: int, n_observers: int, seed: int) -> Path:
    """Synthetic dataset plus four model map directories and a config."""
    images = make_dataset(n_images, seed=seed, n_observers=n_observers)
    write_dataset(out / "dataset", [im.fixations for im in images])
    rng = np.random.default_rng(seed + 1)
    models = {
        "objects": lambda im: object_map(im, blur=1.0, floor=0.02),
        "objects_wide": lambda im: object_map(im, blur=2.5, floor=0.0),
        "center": lambda im: center_prior(im.fixations.width, im.fixations.height),
        "noisy_objects": lambda im: normalize_sum(
            object_map(im, blur=1.5) + rng.random((im.fixations.height, im.fixations.width)) / (im.fixations.width * im.fixations.height)
        ),
    }
    for name, fn in models.items():
        d = out / "models" / name
        d.mkdir(parents=True, exist_ok=True)
        for im in images:
            save_grid(d / f"{im.fixations.image_id}.bin", fn(im))
    cfg = {
        "dataset_dir": "dataset",
        "output_dir": "results",
        "models": [{"name": n, "dir": f"models/{n}"} for n in models],
        "pixels_per_degree": 4.0,
        "seed": seed,
    }
    path = out / "config.json"
    path.write_text(json.dumps(cfg, indent=2) + "\n")
    return path


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "synth":
            print(synth(args.out, args.images, args.observers, args.seed))
            return 0
        cfg = load_config(args)
        if args.command == "evaluate":
            records, errors = harness.evaluate(cfg)
            _print_summary(records)
            return 1 if errors and not records else 0
        if args.command == "baselines":
            table = harness.run_baselines(cfg)
            _print_rows(table, ["model", *cfg.metrics])
        elif args.command == "limits":
            limits = harness.compute_limits(cfg)
            if limits is None:
                return 1
            rows = [
                {"metric": m, **{k: (v["fit"] or {}).get(k, float("nan")) for k in ("c", "ci_low", "ci_high")}}
                for m, v in limits.items()
            ]
            _print_rows(rows, ["metric", "c", "ci_low", "ci_high"])
        elif args.command == "ablate":
            _print_rows(harness.run_ablation(cfg), ["fraction", "metric", "mean", "std", "chance", "chance_normalized"])
        elif args.command == "sweep":
            _print_rows(harness.run_sweep(cfg), ["parameter", "param_value", "metric", "mean", "std"])
        elif args.command == "correlate":
            metrics, mat = harness.run_correlate(cfg)
            _print_rows([{"metric": m, **dict(zip(metrics, row))} for m, row in zip(metrics, mat)], ["metric", *metrics])
        elif args.command == "visualize":
            _print_summary(harness.run_visualize(cfg))
    except DataFormatError as exc:
        print(f"salmetrics: malformed input: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as exc:
        print(f"salmetrics: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
