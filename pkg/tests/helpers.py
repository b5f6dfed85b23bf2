"""Small instance builders and brute-force oracles shared by the tests.

The oracles re-derive every constraint from scratch and deliberately avoid
the package's own checking code.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from fogflow.domain import (
    AppLink,
    Application,
    CapacityVector,
    Microservice,
    NetLink,
    Region,
    RegionKind,
    Topology,
)
from fogflow.optimal import ExactInstance
from fogflow.sampling import default_ranges, sample_instance


def full_mesh(regions, delays, bandwidth=600, max_path_hops=2) -> Topology:
    links = []
    for (a, b), d in delays.items():
        links += [NetLink(a, b, d, bandwidth), NetLink(b, a, d, bandwidth)]
    return Topology(tuple(regions), tuple(links), max_path_hops)


def calibration_topology() -> Topology:
    return full_mesh(
        [
            Region("edge", RegionKind.EDGE, CapacityVector(8192, 3800, 60), 10),
            Region("central", RegionKind.CENTRAL, CapacityVector(12288, 5500, 80), 25),
            Region("public", RegionKind.PUBLIC, CapacityVector(16384, 7000, 90), 70),
        ],
        {("edge", "central"): 20, ("edge", "public"): 60, ("central", "public"): 50},
    )


def chain(cpu, work=None, mem=None, sto=None, lam=None, max_delay=100.0, request_size=0.5) -> Application:
    n = len(cpu)
    work = work or [10.0] * n
    mem = mem or [256] * n
    sto = sto or [2] * n
    lam = lam or [20] * (n - 1)
    ms = tuple(
        Microservice(f"m{i + 1}", CapacityVector(mem[i], cpu[i], sto[i]), work[i], request_size) for i in range(n)
    )
    links = tuple(AppLink(f"m{i + 1}", f"m{i + 2}", max_delay, lam[i]) for i in range(n - 1))
    return Application(ms, links, "m1")


def calibration_app() -> Application:
    return chain(
        cpu=[200, 400, 800, 700, 300],
        work=[8, 16, 40, 36, 10],
        mem=[200, 250, 300, 350, 400],
        sto=[2, 3, 4, 5, 6],
        lam=[20, 25, 30, 35],
    )


# --- brute-force oracles ---------------------------------------------------


def simple_paths(topology: Topology, src: str, dst: str, max_hops: int):
    """Every simple path as a tuple of NetLinks, by trying all region sequences."""
    by_pair = {}
    for l in topology.links:
        by_pair.setdefault((l.src, l.dst), []).append(l)
    others = [r for r in topology.region_ids if r not in (src, dst)]
    out = []
    for k in range(0, max_hops):
        for mid in itertools.permutations(others, k):
            seq = (src,) + mid + (dst,)
            options = [by_pair.get((a, b), []) for a, b in zip(seq, seq[1:])]
            out.extend(itertools.product(*options))
    return out


def needs_path(where: dict, u: str, v: str, i: str, j: str) -> bool:
    return i != j and i in where[u] and j in where[v] and not (i in where[v] and j in where[u])


def naive_optimum(topology, app, requests, psi, zeta, background=None, unit_cost=1.0):
    """Minimum public-instance cost over every binary x and every path choice y.

    Returns math.inf when nothing is feasible.
    """
    background = background or {}
    regions = list(topology.region_ids)
    ms = list(app.ids)
    public = {r.id for r in topology.regions if r.kind is RegionKind.PUBLIC}
    bw = {(l.src, l.dst): l.bandwidth for l in topology.links}
    best = math.inf
    for bits in itertools.product((0, 1), repeat=len(ms) * len(regions)):
        x = np.array(bits).reshape(len(ms), len(regions))
        if (x.sum(axis=1) == 0).any():
            continue
        cost = unit_cost * sum(x[a, b] for a in range(len(ms)) for b, r in enumerate(regions) if r in public)
        if cost >= best:
            continue
        # capacity
        ok = True
        residual_cpu = {}
        for b, r in enumerate(regions):
            cap = topology.region(r).capacity
            used = [app.ms(m).demand for a, m in enumerate(ms) if x[a, b]]
            if sum(d.memory for d in used) > cap.memory or sum(d.cpu for d in used) > cap.cpu \
                    or sum(d.storage for d in used) > cap.storage:
                ok = False
                break
            residual_cpu[r] = max(cap.cpu - sum(d.cpu for d in used) - background.get(r, 0.0), 0.0)
        if not ok:
            continue
        # processing budget
        total = 0.0
        for a, m in enumerate(ms):
            work = requests[m] * app.ms(m).work_per_request
            rate = sum(residual_cpu[r] for b, r in enumerate(regions) if x[a, b])
            total += 0.0 if work == 0 else (work / rate if rate > 0 else math.inf)
        if total > psi + 1e-9:
            continue
        # links: try every path combination
        where = {m: {r for b, r in enumerate(regions) if x[a, b]} for a, m in enumerate(ms)}
        need = [(l, i, j) for l in app.links for i in regions for j in regions if needs_path(where, l.src, l.dst, i, j)]
        choices = [
            [p for p in simple_paths(topology, i, j, topology.max_path_hops) if sum(h.delay for h in p) <= l.max_delay]
            for l, i, j in need
        ]
        if any(not c for c in choices):
            continue
        for combo in itertools.product(*choices):
            if sum(h.delay for p in combo for h in p) / 1000.0 > zeta + 1e-9:
                continue
            load = {}
            for (l, _, _), p in zip(need, combo):
                for h in p:
                    load[(h.src, h.dst)] = load.get((h.src, h.dst), 0.0) + l.max_throughput
            if all(v <= bw[k] for k, v in load.items()):
                best = cost
                break
    return best


def random_instance(seed: int):
    """A sampled instance cut down to at most 4 microservices and sized so the budgets bind."""
    rng = np.random.default_rng(seed)
    ranges = default_ranges()
    ranges["microservice"]["count"] = int(rng.integers(2, 5))
    topo, app = sample_instance(ranges, seed)
    requests = {m: int(rng.integers(0, 120)) for m in app.ids}
    psi = float(rng.uniform(0.3, 3.0))
    zeta = float(rng.choice([0.0, 0.05, 0.1, 0.3]))
    bg = {topo.region_ids[int(rng.integers(3))]: float(rng.uniform(0, 250))}
    return ExactInstance(topo, app, requests, psi, zeta, background_cpu=bg)
