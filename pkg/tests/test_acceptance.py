"""Acceptance criteria, one test each, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines appear even
without ``-s``.
"""

import json
import os
import time

import numpy as np
import pytest

from salmetrics import harness
from salmetrics.analysis import (
    TwoModeScene,
    ablation_table,
    chance_normalized_score,
    default_sweep,
    synthetic_sweep,
)
from salmetrics.baselines import center_prior, chance_uniform, empirical_limit, fixation_map
from salmetrics.core import BinaryFixationMap, ViewingGeometry, blur_to_fixation_map
from salmetrics.distribution import cc, emd, emd_solve, kl, sim
from salmetrics.io import save_grid, write_dataset
from salmetrics.location import auc_judd, information_gain, nss
from salmetrics.scoring import MetricSettings, ground_truth
from salmetrics.synthetic import make_dataset
from salmetrics.visualization import vis_emd_flow, vis_pointwise

from oracles import emd_bruteforce_units

JOBS = min(8, os.cpu_count() or 1)


@pytest.fixture
def report(capsys):
    def _report(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return _report


@pytest.fixture(scope="module")
def mit_style(tmp_path_factory):
    """100 images, 15 observers, center-biased, written as a dataset dir."""
    root = tmp_path_factory.mktemp("mitstyle")
    images = make_dataset(100, seed=2024, n_observers=15)
    dataset = [im.fixations for im in images]
    write_dataset(root / "dataset", dataset)
    chance_dir = root / "chance"
    chance_dir.mkdir()
    for fs in dataset:
        seed = harness.image_seed(0, fs.image_id, 1)
        save_grid(chance_dir / f"{fs.image_id}.bin", chance_uniform(fs.width, fs.height, seed=seed))
    return root, dataset


def test_chance_row(mit_style, tmp_path, report):
    root, dataset = mit_style
    cfg = harness.BenchmarkConfig(
        root / "dataset",
        tmp_path,
        models=[("chance", root / "chance")],
        metrics=["auc_judd", "nss", "cc", "sauc"],
        pixels_per_degree=4.0,
        jobs=JOBS,
    )
    t0 = time.perf_counter()
    records, errors = harness.evaluate(cfg)
    elapsed = time.perf_counter() - t0
    means = {m: s["mean"] for m, s in harness.summarize(records)["chance"].items()}
    targets = {"auc_judd": (0.50, 0.02), "nss": (0.00, 0.05), "cc": (0.00, 0.02), "sauc": (0.50, 0.02)}
    ok = not errors and elapsed < 300 and all(abs(means[m] - v) <= tol for m, (v, tol) in targets.items())
    detail = ", ".join(f"{m}={means[m]:.4f}" for m in targets) + f"; {len(dataset)} images, {elapsed:.1f}s"
    report("chance row reproduction", ok, detail)


def test_baseline_ordering(mit_style, tmp_path, report):
    root, _ = mit_style
    cfg = harness.BenchmarkConfig(
        root / "dataset",
        tmp_path,
        metrics=["auc_judd", "nss", "kl"],
        pixels_per_degree=4.0,
        jobs=JOBS,
        limit_splits=3,
    )
    table = {r["model"]: r for r in harness.run_baselines(cfg)}
    so, pc, ch = table["Single Observer"], table["Permutation Control"], table["Chance"]
    ok = (
        so["auc_judd"] > pc["auc_judd"] > ch["auc_judd"]
        and so["nss"] > pc["nss"] > ch["nss"]
        and pc["kl"] > ch["kl"]
    )
    detail = "; ".join(
        f"{m}: single {so[m]:.3f} / perm {pc[m]:.3f} / chance {ch[m]:.3f}" for m in ("auc_judd", "nss", "kl")
    )
    report("baseline ordering", ok, detail)


def test_self_identities(report):
    t0 = time.perf_counter()
    images = make_dataset(1, seed=5)
    fs = images[0].fixations
    gt = ground_truth(fs, ViewingGeometry(4.0))
    Q = gt.density
    B = center_prior(fs.width, fs.height)
    vals = {
        "sim": sim(Q, Q),
        "cc": cc(Q, Q),
        "kl": kl(Q, Q),
        "emd": emd(Q, Q).cost,
        "ig": information_gain(B, gt.fixations, B),
    }
    elapsed = time.perf_counter() - t0
    ok = (
        abs(vals["sim"] - 1) <= 1e-12
        and abs(vals["cc"] - 1) <= 1e-12
        and vals["kl"] <= 1e-9
        and vals["emd"] == 0
        and vals["ig"] == 0
        and elapsed < 1
    )
    report("self-evaluation identities", ok, ", ".join(f"{k}={v:.3g}" for k, v in vals.items()) + f"; {elapsed:.3f}s")


def test_chance_normalized_worked_example(report):
    v = chance_normalized_score(0.67, 0.92, 0.50)
    report("chance-normalized worked example", abs(v - 60.0) <= 0.05, f"(0.92-0.67)/(0.92-0.50) = {v:.4f}% (target 60.0%)")


def test_emd_oracle(report):
    rng = np.random.default_rng(77)
    t0 = time.perf_counter()
    worst = 0.0
    n = 600
    for _ in range(n):
        h, w = rng.integers(1, 5, size=2)
        src = rng.integers(0, h * w, 8)
        dst = rng.integers(0, h * w, 8)
        P = np.bincount(src, minlength=h * w).reshape(h, w) / 8
        Q = np.bincount(dst, minlength=h * w).reshape(h, w) / 8
        worst = max(worst, abs(emd_solve(P, Q).cost - emd_bruteforce_units(src, dst, w)))
    elapsed = time.perf_counter() - t0
    report("EMD oracle equivalence", worst <= 1e-9 and elapsed < 120, f"{n} instances, max |diff| {worst:.2e}, {elapsed:.1f}s")


def test_power_fit(report):
    n = np.arange(1, 20)
    y = 2.0 / n + 5.0
    exact = empirical_limit(np.c_[n, y], (None, None))
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        noisy = y * (1 + 0.01 * rng.standard_normal(len(n)))
        r = empirical_limit(np.c_[n, noisy], (None, None))
        hits += r.ci_low <= 5.0 <= r.ci_high
    ok = abs(exact.c - 5) <= 1e-6 and hits >= 90
    report("power-fit recovery", ok, f"noiseless c={exact.c:.9f}; 1% noise CI coverage {hits}/100")


def test_invariance_suite(report):
    rng = np.random.default_rng(31)
    worst_auc = worst_lin = 0.0
    witnesses = 0
    for _ in range(100):
        P = rng.random((24, 32)) ** 2 + 1e-3
        Q = rng.random((24, 32)) < 0.05
        Q[0, 0], Q[0, 1] = True, False
        Qd = fixation_map_from_mask(Q)
        worst_auc = max(worst_auc, abs(auc_judd(np.sqrt(P), Q)[0] - auc_judd(P, Q)[0]))
        worst_auc = max(worst_auc, abs(auc_judd(np.log(P), Q)[0] - auc_judd(P, Q)[0]))
        a, b = rng.uniform(0.1, 10), rng.uniform(-3, 3)
        worst_lin = max(worst_lin, abs(nss(a * P + b, Q) - nss(P, Q)), abs(cc(a * P + b, Qd) - cc(P, Qd)))
        Pn = P / P.sum()
        P2 = (Pn + Pn.mean()) / (Pn + Pn.mean()).sum()  # pedestal: a linear change of the map
        witnesses += abs(sim(P2, Qd) - sim(Pn, Qd)) > 1e-6 and abs(kl(P2, Qd) - kl(Pn, Qd)) > 1e-6
    ok = worst_auc <= 0.005 and worst_lin <= 1e-9 and witnesses == 100
    report(
        "invariance suite",
        ok,
        f"100 maps: AUC max drift {worst_auc:.2e}, NSS/CC max drift {worst_lin:.2e}, SIM+KL changed in {witnesses}/100",
    )


def fixation_map_from_mask(Q):
    return blur_to_fixation_map(BinaryFixationMap(Q), ViewingGeometry(2.0))


def test_visualization_identities(report):
    rng = np.random.default_rng(8)
    worst = {k: 0.0 for k in ("sim", "kl", "nss", "cc", "ig", "emd_out", "emd_in")}
    for _ in range(20):
        P = rng.random((24, 32)) ** 3 + 1e-4
        P /= P.sum()
        Qb = BinaryFixationMap(rng.random((24, 32)) < 0.05)
        Qd = fixation_map_from_mask(Qb.mask)
        B = center_prior(32, 24)
        worst["sim"] = max(worst["sim"], abs(vis_pointwise("sim", P, Qd).sum() - sim(P, Qd)))
        worst["kl"] = max(worst["kl"], abs(vis_pointwise("kl", P, Qd).sum() - kl(P, Qd)))
        worst["cc"] = max(worst["cc"], abs(vis_pointwise("cc", P, Qd).sum() - cc(P, Qd)))
        worst["nss"] = max(worst["nss"], abs(vis_pointwise("nss", P, Qb)[Qb.mask].mean() - nss(P, Qb)))
        ig_map = vis_pointwise("ig", P, Qb, B)
        worst["ig"] = max(worst["ig"], abs(ig_map[Qb.mask].mean() - information_gain(P, Qb, B)))
        sol = emd(P, Qd, 0.25)
        out, inn = vis_emd_flow(sol)
        worst["emd_out"] = max(worst["emd_out"], abs(out.sum() - sol.cost))
        worst["emd_in"] = max(worst["emd_in"], abs(inn.sum() - sol.cost))
    ok = all(v <= 1e-9 for v in worst.values())
    report("visualization aggregation identities", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_ablation_trend(report):
    images = make_dataset(30, seed=99, n_observers=15)
    dataset = [im.fixations for im in images]
    geom = ViewingGeometry(4.0)
    truths = [ground_truth(fs, geom, dataset) for fs in dataset]
    metrics = ["emd", "cc", "nss", "auc_judd", "sim", "ig", "kl"]
    rows = ablation_table(truths, [0.25, 0.5, 0.75], metrics, seed=0, settings=MetricSettings(trials=20))
    at = {(r["fraction"], r["metric"]): r for r in rows}
    crossed = at[0.25, "kl"]["mean"] > at[0.25, "kl"]["chance"] and at[0.25, "ig"]["mean"] < at[0.25, "ig"]["chance"]
    auc_above = at[0.25, "auc_judd"]["mean"] > at[0.25, "auc_judd"]["chance"]
    order_ok = True
    for f in (0.25, 0.5, 0.75):
        cn = {m: at[f, m]["chance_normalized"] for m in metrics}
        order_ok &= min(cn, key=cn.get) == "emd" and max(cn, key=cn.get) == "kl"
    detail = "; ".join(
        f"{f:.2f}: " + " ".join(f"{m} {at[f, m]['chance_normalized']:.0f}%" for m in metrics) for f in (0.25, 0.5, 0.75)
    )
    report("ablation trend", crossed and auc_above and order_ok, detail)


def test_sweep_shapes(report):
    t0 = time.perf_counter()
    scene = TwoModeScene(sigma=8.0)
    var_rows = synthetic_sweep(default_sweep("variance", scene), ["sim"], scene=scene, trials=5)
    loc_rows = synthetic_sweep(default_sweep("location", scene), ["sim", "emd"], scene=scene, trials=5)
    elapsed = time.perf_counter() - t0
    best = max(var_rows, key=lambda r: r["mean"])
    sim_peak_ok = best["param_value"] == scene.sigma
    emd_rows = [r for r in loc_rows if r["metric"] == "emd"]
    x = np.array([r["param_value"] for r in emd_rows])
    y = np.array([r["mean"] for r in emd_rows])
    monotone = bool(np.all(np.diff(y) > 0))
    slope, icpt = np.polyfit(x, y, 1)
    r2 = 1 - np.sum((y - (slope * x + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
    ok = sim_peak_ok and monotone and r2 > 0.999 and elapsed < 180
    report(
        "sweep shapes",
        ok,
        f"SIM peak at sigma={best['param_value']} (truth {scene.sigma}); EMD monotone={monotone}, "
        f"linear R^2={r2:.6f}; {elapsed:.1f}s",
    )


def test_determinism(tmp_path, report):
    images = make_dataset(8, seed=12, n_observers=8)
    dataset = [im.fixations for im in images]
    write_dataset(tmp_path / "dataset", dataset)
    models = []
    for name, fn in (("center", lambda fs: center_prior(fs.width, fs.height)),
                     ("truth", lambda fs: fixation_map(fs, ViewingGeometry(4.0))),
                     ("noise", lambda fs: chance_uniform(fs.width, fs.height, seed=3))):
        d = tmp_path / name
        d.mkdir()
        for fs in dataset:
            save_grid(d / f"{fs.image_id}.bin", fn(fs))
        models.append({"name": name, "dir": name})
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"dataset_dir": "dataset", "output_dir": "out", "models": models,
                                    "pixels_per_degree": 4.0, "seed": 7, "trials": 20, "limit_splits": 2,
                                    "sweep_steps": 5, "sweep_trials": 2}))
    files = ("scores.csv", "summary.json", "matrix.csv", "ablation.csv", "ablation_table.csv", "sweep.csv",
             "baselines.csv", "limits.json")
    snapshots = []
    for jobs in (1, 2):
        snap = {}
        for cmd in ("correlate", "ablate", "sweep", "baselines", "limits", "evaluate"):
            cfg = harness.BenchmarkConfig.from_json(cfg_path, jobs=jobs)
            cfg.output_dir = tmp_path / "out" / cmd
            getattr(harness, {"correlate": "run_correlate", "ablate": "run_ablation", "sweep": "run_sweep",
                              "baselines": "run_baselines", "limits": "compute_limits", "evaluate": "evaluate"}[cmd])(cfg)
            for f in files:
                p = cfg.output_dir / f
                if p.exists():
                    snap[cmd, f] = p.read_bytes()
        snapshots.append(snap)
    same = snapshots[0] == snapshots[1]
    report("determinism", same, f"{len(snapshots[0])} CSV/JSON outputs byte-identical across two runs: {same}")
