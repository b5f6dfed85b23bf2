"""Exact baseline: exhaustive search over region assignments, cheapest first.

The objective only depends on how many instances sit in the public cloud, so
assignments are visited by ascending public count and the first one admitting
a feasible link mapping is optimal. Assignments are binary: a microservice may
run in several regions at once, pooling their processing rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .domain import (
    Application,
    CostModel,
    Deployment,
    LinkKey,
    Path,
    Topology,
    Violation,
    ViolationKind,
    enumerate_paths,
    processing_rate,
    required_link_pairs,
    validate_deployment,
)

MAX_VARIABLES = 24
EPS = 1e-9


class Infeasible(RuntimeError):
    pass


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class ExactInstance:
    topology: Topology
    app: Application
    requests: Mapping[str, int]
    psi: float
    zeta: float
    cost_model: CostModel = field(default_factory=CostModel)
    # cpu drawn by foreign processes this slot, per region
    background_cpu: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.psi <= 0:
            raise ValueError("psi must be > 0")
        if self.zeta < 0:
            raise ValueError("zeta must be >= 0")
        missing = set(self.app.ids) - set(self.requests)
        if missing:
            raise ValueError(f"no request count for {sorted(missing)}")


@dataclass(frozen=True)
class ExactSolution:
    deployment: Deployment
    public_instance_count: int
    objective: float
    processing_delay: Mapping[str, float]
    communication_delay: float

    @property
    def processing_time(self) -> float:
        return sum(self.processing_delay.values())


def processing_delays(instance: ExactInstance, deployment: Deployment) -> dict[str, float]:
    """Per-microservice processing delay (s) with rates pooled over its regions."""
    res = {}
    for region in instance.topology.regions:
        used = sum(instance.app.ms(m).demand.cpu for m in deployment.hosted_in(region.id))
        res[region.id] = max(region.capacity.cpu - used - instance.background_cpu.get(region.id, 0.0), 0.0)
    out = {}
    for ms in instance.app.microservices:
        work = instance.requests[ms.id] * ms.work_per_request
        rate = sum(processing_rate(res[r]) for r in deployment.regions_of(ms.id) if r in res)
        if work == 0:
            out[ms.id] = 0.0
        else:
            out[ms.id] = work / rate if rate > 0 else math.inf
    return out


def communication_delay(deployment: Deployment) -> float:
    """Sum of mapped path delays in seconds."""
    return sum(p.total_delay for p in deployment.link_map.values()) / 1000.0


def check_full(instance: ExactInstance, deployment: Deployment) -> list[Violation]:
    out = validate_deployment(instance.topology, instance.app, deployment)
    d = processing_delays(instance, deployment)
    total = sum(d.values())
    if total > instance.psi + EPS:
        out.append(Violation(ViolationKind.PROCESSING, "application", f"{total:.6g} s > psi={instance.psi} s"))
    comm = communication_delay(deployment)
    if comm > instance.zeta + EPS:
        out.append(Violation(ViolationKind.COMMUNICATION, "application", f"{comm:.6g} s > zeta={instance.zeta} s"))
    return out


class ExactSolver:
    """Reusable solver for one (topology, application, zeta).

    Everything that does not depend on the request counts (capacity pruning,
    link mappings) is computed once and cached; ``solve`` only re-checks the
    processing budget, vectorised over all candidate assignments.
    """

    def __init__(self, topology: Topology, app: Application, zeta: float,
                 cost_model: CostModel | None = None, max_variables: int = MAX_VARIABLES):
        n, r = len(app.microservices), len(topology.regions)
        if n * r > max_variables:
            raise InstanceTooLarge(f"{n} microservices x {r} regions > {max_variables} variables")
        self.topology, self.app, self.zeta = topology, app, zeta
        self.cost_model = cost_model or CostModel()
        self.region_ids = topology.region_ids
        self.ms_ids = app.ids
        self._pub = np.array([topology.region(rid).public for rid in self.region_ids])
        self._cap = np.array([[topology.region(rid).capacity.memory, topology.region(rid).capacity.cpu,
                               topology.region(rid).capacity.storage] for rid in self.region_ids])
        self._dem = np.array([[m.demand.memory, m.demand.cpu, m.demand.storage] for m in app.microservices])
        self._work = np.array([m.work_per_request for m in app.microservices])
        self._levels: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._mapping: dict[bytes, dict[LinkKey, Path] | None] = {}

    # assignments -----------------------------------------------------------

    def _assignments(self, public_count: int) -> Iterator[np.ndarray]:
        """Capacity-feasible assignments with exactly ``public_count`` public instances."""
        n, r = len(self.ms_ids), len(self.region_ids)
        masks = [np.array([(b >> k) & 1 for k in range(r)], dtype=bool) for b in range(1, 2 ** r)]
        pub_of = [int((mk & self._pub).sum()) for mk in masks]
        x = np.zeros((n, r), dtype=bool)
        load = np.zeros((r, 3))

        def rec(i: int, left: int) -> Iterator[np.ndarray]:
            if i == n:
                if left == 0:
                    yield x.copy()
                return
            for mk, pc in zip(masks, pub_of):
                if pc > left:
                    continue
                add = np.outer(mk, self._dem[i])
                if np.any(load + add > self._cap + EPS):
                    continue
                x[i] = mk
                load[:] += add
                yield from rec(i + 1, left - pc)
                load[:] -= add
            x[i] = False

        yield from rec(0, public_count)

    def _level(self, public_count: int) -> tuple[np.ndarray, np.ndarray]:
        if public_count not in self._levels:
            xs = list(self._assignments(public_count))
            if xs:
                X = np.stack(xs)
            else:
                X = np.zeros((0, len(self.ms_ids), len(self.region_ids)), dtype=bool)
            static_res = self._cap[:, 1][None, :] - np.einsum("knr,n->kr", X, self._dem[:, 1])
            self._levels[public_count] = (X, static_res)
        return self._levels[public_count]

    # link mapping ------------------------------------------------------------

    def _instances(self, x: np.ndarray) -> tuple[tuple[str, str], ...]:
        return tuple(
            (m, rid) for i, m in enumerate(self.ms_ids) for j, rid in enumerate(self.region_ids) if x[i, j]
        )

    def _map_links(self, x: np.ndarray) -> dict[LinkKey, Path] | None:
        key = x.tobytes()
        if key not in self._mapping:
            self._mapping[key] = self._search_links(self._instances(x))
        return self._mapping[key]

    def _search_links(self, instances) -> dict[LinkKey, Path] | None:
        """Backtracking over candidate paths under shared bandwidth, per-link
        delay and the aggregate communication budget."""
        need = sorted(required_link_pairs(self.app, instances))
        links = {l.key: l for l in self.app.links}
        bw = {l.key: l.bandwidth for l in self.topology.links}
        options = []
        for key in need:
            link = links[key[:2]]
            cands = [p for p in enumerate_paths(self.topology, key[2], key[3]) if p.total_delay <= link.max_delay]
            if not cands:
                return None
            options.append(cands)
        budget = self.zeta * 1000.0
        used: dict[tuple[str, str], float] = {}
        chosen: list[Path] = []

        def rec(k: int, delay: float) -> bool:
            if k == len(need):
                return True
            lam = links[need[k][:2]].max_throughput
            for path in options[k]:
                if delay + path.total_delay > budget + EPS:
                    continue
                if any(used.get(h.key, 0.0) + lam > bw[h.key] + EPS for h in path.hops):
                    continue
                for h in path.hops:
                    used[h.key] = used.get(h.key, 0.0) + lam
                chosen.append(path)
                if rec(k + 1, delay + path.total_delay):
                    return True
                chosen.pop()
                for h in path.hops:
                    used[h.key] -= lam
            return False

        if not rec(0, 0.0):
            return None
        return dict(zip(need, chosen))

    # solve -------------------------------------------------------------------

    def solve(self, requests: Mapping[str, int], psi: float,
              background_cpu: Mapping[str, float] | None = None) -> ExactSolution:
        bg = np.array([(background_cpu or {}).get(rid, 0.0) for rid in self.region_ids])
        demand = np.array([requests[m] for m in self.ms_ids], dtype=float) * self._work
        max_public = len(self.ms_ids) * int(self._pub.sum())
        for count in range(max_public + 1):
            X, static_res = self._level(count)
            if len(X) == 0:
                continue
            rate = np.clip(static_res - bg[None, :], 0.0, None)
            pooled = np.einsum("knr,kr->kn", X, rate)
            with np.errstate(divide="ignore", invalid="ignore"):
                d = np.where(demand[None, :] == 0, 0.0, demand[None, :] / pooled)
            proc = d.sum(axis=1)
            for k in np.flatnonzero(proc <= psi + EPS):
                mapping = self._map_links(X[k])
                if mapping is None:
                    continue
                dep = Deployment(instances=self._instances(X[k]), link_map=mapping)
                delays = {m: float(d[k, i]) for i, m in enumerate(self.ms_ids)}
                return ExactSolution(
                    deployment=dep,
                    public_instance_count=count,
                    objective=self.cost_model.public_cost(count),
                    processing_delay=delays,
                    communication_delay=communication_delay(dep),
                )
        raise Infeasible("no assignment satisfies every constraint")


def solve_exact(instance: ExactInstance, max_variables: int = MAX_VARIABLES) -> ExactSolution:
    solver = ExactSolver(instance.topology, instance.app, instance.zeta, instance.cost_model, max_variables)
    return solver.solve(instance.requests, instance.psi, instance.background_cpu)
