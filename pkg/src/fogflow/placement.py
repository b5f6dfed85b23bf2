"""One-shot initial placement and replicasArray deployment."""

from __future__ import annotations

import logging
from collections import defaultdict, deque
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

from .domain import (
    Application,
    CapacityVector,
    Deployment,
    LinkKey,
    Path,
    Topology,
    enumerate_paths,
    link_usage,
    placed_demand,
    required_link_pairs,
)

log = logging.getLogger(__name__)


class Unreachable(ValueError):
    pass


class PlacementInfeasible(RuntimeError):
    pass


class LinkInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class PlacementConfig:
    tau: float = 500.0
    array_size: int = 2

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.array_size < 1:
            raise ValueError("array_size must be >= 1")


def bfs_order(app: Application) -> list[str]:
    """BFS from the entry; neighbours in link declaration order."""
    succ: dict[str, list[str]] = defaultdict(list)
    for link in app.links:
        succ[link.src].append(link.dst)
    order = [app.entry]
    seen = {app.entry}
    queue = deque([app.entry])
    while queue:
        node = queue.popleft()
        for nxt in succ[node]:
            if nxt not in seen:
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    missing = [m for m in app.ids if m not in seen]
    if missing:
        raise Unreachable(f"not reachable from {app.entry}: {', '.join(missing)}")
    return order


def sort_regions(topology: Topology) -> list[str]:
    private = sorted((r for r in topology.regions if not r.public), key=lambda r: (r.access_delay, r.id))
    public = sorted((r for r in topology.regions if r.public), key=lambda r: (r.access_delay, r.id))
    return [r.id for r in private + public]


def select_replicas_array(app: Application, order: Sequence[str], size: int) -> list[str]:
    """Consecutive window of ``size`` with the highest CPU demand.

    Scans from the tail of ``order`` towards the head; a later window only
    replaces the incumbent if strictly heavier, so ties go to the tail.
    """
    if not 1 <= size < len(order):
        raise ValueError(f"array size must be in [1, {len(order) - 1}], got {size}")
    cpu = [app.ms(m).demand.cpu for m in order]
    best_start, best_sum = None, None
    for start in range(len(order) - size, -1, -1):
        s = sum(cpu[start:start + size])
        if best_sum is None or s > best_sum:
            best_start, best_sum = start, s
    return list(order[best_start:best_start + size])


def _residual(topology: Topology, app: Application, instances, region_id: str) -> tuple[float, float, float]:
    dep = Deployment(instances=tuple(instances))
    return topology.region(region_id).capacity.minus(placed_demand(region_id, dep, app))


def _admits(residual: tuple[float, float, float], demand: CapacityVector, tau: float) -> bool:
    mem, cpu, sto = residual
    return (
        demand.memory <= mem
        and demand.cpu <= cpu
        and demand.storage <= sto
        and cpu - demand.cpu > tau
    )


def _pick_path(
    topology: Topology, app: Application, key: LinkKey, used: Mapping[tuple[str, str], float]
) -> Path | None:
    """Least congested feasible path for one application link.

    Congestion is the largest throughput already mapped on any hop of the path;
    ties go to the smaller delay, then enumeration order.
    """
    u, v, i, j = key
    link = next(l for l in app.links if l.key == (u, v))
    best, best_rank = None, None
    for idx, path in enumerate(enumerate_paths(topology, i, j)):
        if path.total_delay > link.max_delay:
            continue
        if any(used.get(h.key, 0.0) + link.max_throughput > h.bandwidth for h in path.hops):
            continue
        rank = (max(used.get(h.key, 0.0) for h in path.hops), path.total_delay, idx)
        if best_rank is None or rank < best_rank:
            best, best_rank = path, rank
    return best


def _remap(
    topology: Topology,
    app: Application,
    instances: Sequence[tuple[str, str]],
    link_map: Mapping[LinkKey, Path],
) -> dict[LinkKey, Path] | None:
    """Keep still-required mappings, drop stale ones and map the new ones.

    Returns None if some newly required link has no feasible path.
    """
    need = required_link_pairs(app, instances)
    kept = {k: p for k, p in link_map.items() if k in need}
    used = dict(link_usage(app, kept))
    lam = {l.key: l.max_throughput for l in app.links}
    for key in sorted(need - set(kept)):
        path = _pick_path(topology, app, key, used)
        if path is None:
            return None
        kept[key] = path
        for hop in path.hops:
            used[hop.key] = used.get(hop.key, 0.0) + lam[key[:2]]
    return kept


def place_initial(app: Application, topology: Topology, cfg: PlacementConfig) -> Deployment:
    regions = sort_regions(topology)
    instances: list[tuple[str, str]] = []
    link_map: dict[LinkKey, Path] = {}
    for m in bfs_order(app):
        demand = app.ms(m).demand
        admitted_any = False
        for r in regions:
            if not _admits(_residual(topology, app, instances, r), demand, cfg.tau):
                continue
            admitted_any = True
            trial = instances + [(m, r)]
            mapped = _remap(topology, app, trial, link_map)
            if mapped is None:
                continue
            instances, link_map = trial, mapped
            break
        else:
            if admitted_any:
                peers = [l.key for l in app.links if m in l.key]
                raise LinkInfeasible(f"no feasible path for the links of {m}: {peers}")
            raise PlacementInfeasible(f"no region can host {m}")
    return Deployment(instances=tuple(instances), link_map=link_map)


def place_replicas_arrays(
    app: Application,
    topology: Topology,
    base: Deployment,
    array: Sequence[str],
    cfg: PlacementConfig,
) -> Deployment:
    """Add one co-located copy of ``array`` to every region meeting criteria I-IV."""
    array = tuple(array)
    regions = sort_regions(topology)
    total = CapacityVector(0, 0, 0)
    for m in array:
        total = total + app.ms(m).demand

    instances = list(base.instances)
    link_map = dict(base.link_map)
    base_host = next(r for m, r in base.instances if m == array[0])
    copies = []
    for r in regions:
        if any((m, r) in instances for m in array):
            continue
        if not _admits(_residual(topology, app, instances, r), total, cfg.tau):
            continue
        trial = instances + [(m, r) for m in array]
        mapped = _remap(topology, app, trial, link_map)
        if mapped is None:
            continue
        instances, link_map = trial, mapped
        copies.append(r)

    hosts = tuple(r for r in regions if r == base_host or r in copies)
    warnings = base.warnings
    if len(hosts) < 2:
        msg = f"replicasArray {list(array)} has a single host ({base_host}); no redirection possible"
        log.warning(msg)
        warnings = warnings + (msg,)
    return replace(
        base,
        instances=tuple(instances),
        link_map=link_map,
        replicas_array=array,
        array_hosts=hosts,
        base_host=base_host,
        warnings=warnings,
    )


def place(app: Application, topology: Topology, cfg: PlacementConfig) -> Deployment:
    """Initial placement followed by replicasArray selection and deployment."""
    base = place_initial(app, topology, cfg)
    array = select_replicas_array(app, bfs_order(app), cfg.array_size)
    return place_replicas_arrays(app, topology, base, array, cfg)


def split_point(app: Application, array: Sequence[str]) -> str | None:
    """Microservice right before the array in BFS order; None means external ingress."""
    order = bfs_order(app)
    idx = order.index(array[0])
    return order[idx - 1] if idx > 0 else None
