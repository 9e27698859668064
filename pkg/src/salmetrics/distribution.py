"""Metrics comparing a saliency map with the continuous fixation map."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import as_grid, normalize_sum, normalize_variance, resize
from .location import EPS, _require_distribution
from .transport import solve_transport

EMD_DOWNSCALE = 1.0 / 32


def sim(P, Q) -> float:
    """Histogram intersection of the two maps after sum-normalisation."""
    P = normalize_sum(as_grid(P))
    Q = normalize_sum(as_grid(Q))
    _same_shape(P, Q)
    return float(np.minimum(P, Q).sum())


def cc(P, Q) -> float:
    """Pearson correlation over pixels (population moments)."""
    P = normalize_variance(as_grid(P))
    Q = normalize_variance(as_grid(Q))
    _same_shape(P, Q)
    return float(np.mean(P * Q))


def kl(P, Q, epsilon: float = EPS) -> float:
    """Divergence of the prediction ``P`` from the target ``Q`` in nats.

    Uses ``sum Q * ln(eps + Q / (eps + P))``; both inputs must be
    distributions.
    """
    P = _require_distribution(P, "saliency map")
    Q = _require_distribution(Q, "fixation map")
    _same_shape(P, Q)
    return float(np.sum(Q * np.log(epsilon + Q / (epsilon + P))))


def kl_symmetric(P, Q, epsilon: float = EPS) -> float:
    return kl(P, Q, epsilon) + kl(Q, P, epsilon)


def spearman_cc_maps(P, Q) -> float:
    """Pearson correlation of pixel ranks (ties get their average rank)."""
    P = as_grid(P)
    Q = as_grid(Q)
    _same_shape(P, Q)
    rp = rankdata(P.ravel()).reshape(P.shape)
    rq = rankdata(Q.ravel()).reshape(Q.shape)
    return cc(rp, rq)


def _same_shape(P, Q):
    if P.shape != Q.shape:
        raise ValueError(f"dimension mismatch: {P.shape} vs {Q.shape}")


@dataclass(frozen=True)
class EmdSolution:
    """Optimal flow between two binned maps.

    Bins are flat indices into ``shape`` (row-major). ``distance`` is the
    Euclidean distance between bin centres in bin units.
    """

    cost: float
    from_bin: np.ndarray
    to_bin: np.ndarray
    amount: np.ndarray
    distance: np.ndarray
    shape: tuple
    scale_factor: float

    @property
    def total_flow(self) -> float:
        return float(self.amount.sum())

    def flows(self):
        return list(zip(self.from_bin.tolist(), self.to_bin.tolist(), self.amount.tolist(), self.distance.tolist()))

    def to_json(self) -> str:
        return json.dumps(
            {
                "cost": self.cost,
                "shape": list(self.shape),
                "scale_factor": self.scale_factor,
                "flows": [
                    {"from_bin": a, "to_bin": b, "amount": f, "distance": d}
                    for a, b, f, d in self.flows()
                ],
            },
            indent=1,
        )


def emd_bins(P, Q, downscale: float = EMD_DOWNSCALE) -> tuple[np.ndarray, np.ndarray]:
    """Resize ``P`` to ``Q``'s shape, shrink both by ``downscale`` (ceil, at
    least 1x1) and normalise each to unit mass."""
    P = as_grid(P)
    Q = as_grid(Q)
    h, w = Q.shape
    if P.shape != Q.shape:
        P = resize(P, w, h)
    if downscale != 1:
        nh = max(1, math.ceil(h * downscale))
        nw = max(1, math.ceil(w * downscale))
        P = resize(P, nw, nh)
        Q = resize(Q, nw, nh)
    return normalize_sum(np.clip(P, 0, None)), normalize_sum(np.clip(Q, 0, None))


def emd(P, Q, downscale: float = EMD_DOWNSCALE) -> EmdSolution:
    """Earth mover's distance between ``P`` and ``Q`` with Euclidean ground
    distance, solved exactly as a transportation problem over nonzero bins."""
    Pb, Qb = emd_bins(P, Q, downscale)
    return emd_solve(Pb, Qb, scale_factor=downscale)


def emd_solve(P, Q, scale_factor: float = 1.0) -> EmdSolution:
    """EMD between two same-shape nonnegative grids as given (no resizing).

    Mass mismatch is charged ``|sum P - sum Q| * max distance`` after moving
    ``min(sum P, sum Q)``.
    """
    P = as_grid(P)
    Q = as_grid(Q)
    _same_shape(P, Q)
    if np.any(P < 0) or np.any(Q < 0):
        raise ValueError("negative mass")
    if not (P.sum() > 0 and Q.sum() > 0):
        raise ValueError("zero mass")
    h, w = P.shape
    src = np.flatnonzero(P.ravel())
    dst = np.flatnonzero(Q.ravel())
    supply = P.ravel()[src]
    demand = Q.ravel()[dst]
    ys, xs = np.divmod(src, w)
    yd, xd = np.divmod(dst, w)
    dist = np.hypot(ys[:, None] - yd[None, :], xs[:, None] - xd[None, :])

    gap = supply.sum() - demand.sum()
    cost_m = dist
    if gap > 0:
        demand = np.append(demand, gap)
        cost_m = np.hstack([dist, np.zeros((len(src), 1))])
    elif gap < 0:
        supply = np.append(supply, -gap)
        cost_m = np.vstack([dist, np.zeros((1, len(dst)))])

    ri, cj, f = solve_transport(supply, demand, cost_m)
    real = (ri < len(src)) & (cj < len(dst))
    ri, cj, f = ri[real], cj[real], f[real]
    fr, to, f = _shortcut(src[ri], dst[cj], f, w)
    d = _bin_distance(fr, to, w)
    # max over all bin pairs of the grid, so the penalty does not depend on pruning
    cost = float(np.sum(f * d) + abs(gap) * math.hypot(h - 1, w - 1))
    return EmdSolution(cost, fr, to, f, d, (h, w), scale_factor)


def _bin_distance(a, b, w):
    ya, xa = np.divmod(a, w)
    yb, xb = np.divmod(b, w)
    return np.hypot(ya - yb, xa - xb)


def _shortcut(fr, to, amt, w, max_rounds=10000):
    """Reroute mass passing through a bin that both sends and receives.

    i->k and k->j become i->j plus k->k. With a metric ground distance this
    never raises the cost, so an optimal flow stays optimal, and afterwards
    no bin is both a source and a sink of moved mass.
    """
    flows: dict = {}
    for a, b, f in zip(fr.tolist(), to.tolist(), amt.tolist()):
        flows[(a, b)] = flows.get((a, b), 0.0) + f
    for _ in range(max_rounds):
        into: dict = {}
        out: dict = {}
        for (a, b), f in flows.items():
            if a != b and f > 0:
                into.setdefault(b, []).append(a)
                out.setdefault(a, []).append(b)
        transit = sorted(set(into) & set(out))
        if not transit:
            break
        k = transit[0]
        i = min(into[k])
        j = min(out[k])
        delta = min(flows[(i, k)], flows[(k, j)])
        for key, df in (((i, k), -delta), ((k, j), -delta), ((i, j), delta), ((k, k), delta)):
            flows[key] = flows.get(key, 0.0) + df
            if flows[key] <= 0:
                del flows[key]
    keys = sorted(flows)
    fr = np.array([a for a, _ in keys], dtype=np.int64)
    to = np.array([b for _, b in keys], dtype=np.int64)
    amt = np.array([flows[k] for k in keys], dtype=np.float64)
    return fr, to, amt
