"""Reduced MEA baseline: weighted bandwidth cost vs. max server utilisation,
solved by grid search over the split simplex."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import Microservice
from .dsr import SplitConfig


@dataclass(frozen=True)
class MeaWeights:
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.beta != 0:
            raise ValueError("link-utilisation weight beta is not modelled and must be 0")


@dataclass(frozen=True)
class MeaHost:
    region: str
    cpu_capacity: float
    bandwidth_price: float


@dataclass(frozen=True)
class MeaInstance:
    hosts: tuple[MeaHost, ...]
    cpu_demand_total: float
    bw_demand_total: float

    def __post_init__(self):
        if not self.hosts:
            raise ValueError("MEA needs at least one host")
        if any(h.cpu_capacity <= 0 for h in self.hosts):
            raise ValueError("host capacities must be > 0")
        if self.cpu_demand_total < 0 or self.bw_demand_total < 0:
            raise ValueError("demands must be >= 0")


def objective(instance: MeaInstance, weights: MeaWeights, s: np.ndarray) -> np.ndarray:
    """Objective for each row of ``s`` (shape (k, hosts))."""
    price = np.array([h.bandwidth_price for h in instance.hosts])
    cap = np.array([h.cpu_capacity for h in instance.hosts])
    bw = weights.alpha * instance.bw_demand_total * (s @ price)
    util = weights.gamma * np.max(instance.cpu_demand_total * s / cap, axis=1)
    return bw + util


def _simplex_grid(n: int, grid: int) -> np.ndarray:
    # stars and bars: every composition of `grid` into n non-negative parts
    rows = []
    for bars in itertools.combinations(range(grid + n - 1), n - 1):
        edges = (-1,) + bars + (grid + n - 1,)
        rows.append([edges[k + 1] - edges[k] - 1 for k in range(n)])
    return np.array(rows, dtype=float) / grid


def _best(instance: MeaInstance, weights: MeaWeights, cand: np.ndarray) -> np.ndarray:
    val = objective(instance, weights, cand)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(val))))
    ties = cand[val <= val.min() + tol]
    # lexicographically smallest among the minimisers
    order = np.lexsort(ties.T[::-1])
    return ties[order[0]]


def solve_mea(instance: MeaInstance, weights: MeaWeights, grid: int = 20) -> SplitConfig:
    if grid < 10:
        raise ValueError("grid must be >= 10")
    n = len(instance.hosts)
    if n > 4:
        raise ValueError("grid search supports at most 4 hosts")
    ids = [h.region for h in instance.hosts]
    if n == 1:
        return SplitConfig({ids[0]: 1.0})
    if instance.cpu_demand_total == 0 and instance.bw_demand_total == 0:
        uniform = {r: 1.0 / n for r in ids}
        uniform[ids[-1]] = 1.0 - (n - 1) / n
        return SplitConfig(uniform)

    best = _best(instance, weights, _simplex_grid(n, grid))

    # one refinement pass at 10x resolution within one coarse step of the incumbent
    step = 1.0 / (10 * grid)
    deltas = np.array([k for k in itertools.product(range(-10, 11), repeat=n - 1)], dtype=float)
    last = -deltas.sum(axis=1, keepdims=True)
    deltas = np.hstack([deltas, last])
    deltas = deltas[np.abs(last[:, 0]) <= 10]
    cand = best[None, :] + deltas * step
    cand = cand[np.all(cand >= -1e-12, axis=1)]
    cand = np.clip(cand, 0.0, None)
    best = _best(instance, weights, cand)

    fractions = {r: float(v) for r, v in zip(ids, best)}
    fractions[ids[-1]] = max(0.0, 1.0 - sum(fractions[r] for r in ids[:-1]))
    return SplitConfig(fractions)


def mea_iteration(
    hosts: Sequence[MeaHost],
    requests: int,
    array: Sequence[Microservice],
    weights: MeaWeights,
    grid: int = 20,
) -> tuple[SplitConfig, MeaInstance]:
    """Split for one slot; demand is requests x array work, bandwidth is
    requests x the array's average input request size."""
    inst = MeaInstance(
        hosts=tuple(hosts),
        cpu_demand_total=requests * sum(m.work_per_request for m in array),
        bw_demand_total=requests * array[0].request_size,
    )
    return solve_mea(inst, weights, grid), inst
