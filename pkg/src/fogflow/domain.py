"""Model types for regions, network, application and deployments.

Units: memory MB, cpu MIPS, storage GB, delay ms, bandwidth/throughput Mbps,
work per request MI.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Mapping


class OverSubscribed(ValueError):
    """A region hosts more demand than it has capacity for."""


class TopologyError(ValueError):
    pass


class ApplicationError(ValueError):
    pass


@dataclass(frozen=True)
class CapacityVector:
    memory: float
    cpu: float
    storage: float

    def __post_init__(self):
        if min(self.memory, self.cpu, self.storage) < 0:
            raise ValueError(f"negative capacity component in {self}")

    def __add__(self, other: CapacityVector) -> CapacityVector:
        return CapacityVector(
            self.memory + other.memory, self.cpu + other.cpu, self.storage + other.storage
        )

    def fits(self, demand: CapacityVector) -> bool:
        return (
            demand.memory <= self.memory
            and demand.cpu <= self.cpu
            and demand.storage <= self.storage
        )

    def minus(self, demand: CapacityVector) -> tuple[float, float, float]:
        """Component-wise difference, possibly negative."""
        return (
            self.memory - demand.memory,
            self.cpu - demand.cpu,
            self.storage - demand.storage,
        )


ZERO = CapacityVector(0, 0, 0)


class RegionKind(str, Enum):
    EDGE = "edge"
    CENTRAL = "central"
    PUBLIC = "public"

    @property
    def private(self) -> bool:
        return self is not RegionKind.PUBLIC


@dataclass(frozen=True)
class Region:
    id: str
    kind: RegionKind
    capacity: CapacityVector
    access_delay: float = 0.0

    @property
    def public(self) -> bool:
        return self.kind is RegionKind.PUBLIC


@dataclass(frozen=True)
class NetLink:
    src: str
    dst: str
    delay: float
    bandwidth: float

    def __post_init__(self):
        if self.delay <= 0 or self.bandwidth <= 0:
            raise TopologyError(f"link {self.src}->{self.dst} needs delay > 0 and bandwidth > 0")
        if self.src == self.dst:
            raise TopologyError(f"self-loop on {self.src}")

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Path:
    hops: tuple[NetLink, ...]

    def __post_init__(self):
        if not self.hops:
            raise ValueError("empty path")
        for a, b in zip(self.hops, self.hops[1:]):
            if a.dst != b.src:
                raise ValueError("non-contiguous path")
        if len(set(self.regions)) != len(self.regions):
            raise ValueError("path repeats a region")

    @property
    def regions(self) -> tuple[str, ...]:
        return (self.hops[0].src,) + tuple(h.dst for h in self.hops)

    @property
    def src(self) -> str:
        return self.hops[0].src

    @property
    def dst(self) -> str:
        return self.hops[-1].dst

    @property
    def total_delay(self) -> float:
        return sum(h.delay for h in self.hops)

    @property
    def bottleneck_bw(self) -> float:
        return min(h.bandwidth for h in self.hops)


@dataclass(frozen=True)
class Topology:
    regions: tuple[Region, ...]
    links: tuple[NetLink, ...]
    max_path_hops: int = 2

    def __post_init__(self):
        ids = [r.id for r in self.regions]
        if len(set(ids)) != len(ids):
            raise TopologyError("duplicate region id")
        known = set(ids)
        for link in self.links:
            if link.src not in known or link.dst not in known:
                raise TopologyError(f"link {link.src}->{link.dst} references an unknown region")
        if len({l.key for l in self.links}) != len(self.links):
            raise TopologyError("duplicate link")

    def region(self, region_id: str) -> Region:
        for r in self.regions:
            if r.id == region_id:
                return r
        raise KeyError(region_id)

    @property
    def region_ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.regions)

    @property
    def public_ids(self) -> frozenset[str]:
        return frozenset(r.id for r in self.regions if r.public)

    def check_public_reachable(self) -> None:
        """Every private region must reach some public region."""
        pubs = self.public_ids
        if not pubs:
            return
        for r in self.regions:
            if r.public:
                continue
            if not any(enumerate_paths(self, r.id, p, max_hops=len(self.regions)) for p in pubs):
                raise TopologyError(f"private region {r.id} cannot reach the public cloud")


@dataclass(frozen=True)
class Microservice:
    id: str
    demand: CapacityVector
    work_per_request: float
    # average incoming request size in Mb; only the bandwidth side of MEA reads it
    request_size: float = 0.5

    def __post_init__(self):
        d = self.demand
        if min(d.memory, d.cpu, d.storage) <= 0:
            raise ApplicationError(f"microservice {self.id}: demand components must be > 0")
        if self.work_per_request <= 0:
            raise ApplicationError(f"microservice {self.id}: work_per_request must be > 0")


@dataclass(frozen=True)
class AppLink:
    src: str
    dst: str
    max_delay: float
    max_throughput: float

    def __post_init__(self):
        if self.max_delay <= 0 or self.max_throughput <= 0:
            raise ApplicationError(f"app link {self.src}->{self.dst}: bounds must be > 0")

    @property
    def key(self) -> tuple[str, str]:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Application:
    microservices: tuple[Microservice, ...]
    links: tuple[AppLink, ...]
    entry: str

    def __post_init__(self):
        ids = [m.id for m in self.microservices]
        if len(set(ids)) != len(ids):
            raise ApplicationError("duplicate microservice id")
        if self.entry not in ids:
            raise ApplicationError(f"entry {self.entry!r} is not a microservice")
        for link in self.links:
            if link.src not in ids or link.dst not in ids:
                raise ApplicationError(f"app link {link.src}->{link.dst} references an unknown microservice")

    def ms(self, ms_id: str) -> Microservice:
        for m in self.microservices:
            if m.id == ms_id:
                return m
        raise KeyError(ms_id)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.microservices)


@dataclass(frozen=True)
class CostModel:
    """Linear public-cloud cost per slot plus the AWS Lambda monthly projection."""

    per_microservice_unit_cost: float = 1.0
    aws_price: float = 0.0000195172  # USD per GB-second
    aws_memory: float = 1024.0  # MB
    aws_duration: float = 1.0  # s per request
    periods_per_month: float = 360.0

    def __post_init__(self):
        if min(self.per_microservice_unit_cost, self.aws_price, self.aws_memory,
               self.aws_duration, self.periods_per_month) < 0:
            raise ValueError("cost model parameters must be >= 0")

    def public_cost(self, public_instances: int) -> float:
        return self.per_microservice_unit_cost * public_instances


# (u, v, source region, destination region)
LinkKey = tuple[str, str, str, str]


@dataclass(frozen=True)
class Deployment:
    """Instances (microservice, region) plus the physical path of every
    inter-region application link.

    ``array_hosts`` lists the regions running a replicasArray, ordered like
    ``sort_regions``. ``base_host`` is the host of the array formed by the
    initial-placement instances (the region of the first array member); every
    other host runs a full co-located copy.
    """

    instances: tuple[tuple[str, str], ...]
    link_map: Mapping[LinkKey, Path] = field(default_factory=dict)
    replicas_array: tuple[str, ...] = ()
    array_hosts: tuple[str, ...] = ()
    base_host: str | None = None
    warnings: tuple[str, ...] = ()

    def regions_of(self, ms_id: str) -> set[str]:
        return {r for m, r in self.instances if m == ms_id}

    def hosted_in(self, region_id: str) -> list[str]:
        return [m for m, r in self.instances if r == region_id]

    @property
    def copy_hosts(self) -> tuple[str, ...]:
        return tuple(h for h in self.array_hosts if h != self.base_host)

    def member_region(self, host: str, ms_id: str) -> str:
        """Region running ``ms_id`` for the replicasArray served by ``host``."""
        if host != self.base_host:
            return host
        copies = set(self.copy_hosts)
        base = [r for r in self.regions_of(ms_id) if r not in copies]
        if len(base) != 1:
            raise ValueError(f"cannot resolve the base instance of {ms_id}")
        return base[0]

    def instance_host(self, ms_id: str, region_id: str) -> str | None:
        """Array host an instance serves, None for non-array instances."""
        if ms_id not in self.replicas_array:
            return None
        return region_id if region_id in self.copy_hosts else self.base_host


class ViolationKind(str, Enum):
    CAPACITY = "CapacityOverrun"
    BANDWIDTH = "BandwidthOverrun"
    DELAY = "DelayExceeded"
    MISSING = "MissingInstance"
    UNMAPPED = "UnmappedLink"
    SPURIOUS = "SpuriousLinkMapping"
    BAD_PATH = "PathEndpointMismatch"
    PROCESSING = "ProcessingBudgetExceeded"
    COMMUNICATION = "CommunicationBudgetExceeded"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    where: str
    detail: str = ""


def processing_rate(residual_cpu: float, slope: float = 1.0) -> float:
    """Linear processing rate of a region as a function of its residual CPU."""
    if residual_cpu < 0:
        raise ValueError("residual cpu must be >= 0")
    return slope * residual_cpu


def placed_demand(region_id: str, deployment: Deployment, app: Application) -> CapacityVector:
    total = ZERO
    for m in deployment.hosted_in(region_id):
        total = total + app.ms(m).demand
    return total


def residual_capacity(region: Region, deployment: Deployment, app: Application) -> CapacityVector:
    mem, cpu, sto = region.capacity.minus(placed_demand(region.id, deployment, app))
    if min(mem, cpu, sto) < 0:
        raise OverSubscribed(f"region {region.id} is oversubscribed: ({mem}, {cpu}, {sto})")
    return CapacityVector(mem, cpu, sto)


def residual_cpu_map(topology: Topology, deployment: Deployment, app: Application) -> dict[str, float]:
    return {r.id: residual_capacity(r, deployment, app).cpu for r in topology.regions}


def enumerate_paths(topology: Topology, src: str, dst: str, max_hops: int | None = None) -> list[Path]:
    """All simple paths src->dst with at most ``max_hops`` hops, least delay first."""
    if src == dst:
        raise ValueError("enumerate_paths needs distinct endpoints")
    hops = topology.max_path_hops if max_hops is None else max_hops
    return list(_paths(topology, src, dst, hops))


@lru_cache(maxsize=4096)
def _paths(topology: Topology, src: str, dst: str, max_hops: int) -> tuple[Path, ...]:
    out: dict[str, list[NetLink]] = defaultdict(list)
    for link in topology.links:
        out[link.src].append(link)
    found: list[tuple[NetLink, ...]] = []

    def walk(node: str, trail: list[NetLink], seen: set[str]) -> None:
        if len(trail) == max_hops:
            return
        for link in out[node]:
            if link.dst in seen:
                continue
            trail.append(link)
            if link.dst == dst:
                found.append(tuple(trail))
            else:
                seen.add(link.dst)
                walk(link.dst, trail, seen)
                seen.discard(link.dst)
            trail.pop()

    walk(src, [], {src})
    paths = [Path(h) for h in found]
    paths.sort(key=lambda p: (p.total_delay, len(p.hops), p.regions))
    return tuple(paths)


def required_link_pairs(app: Application, instances: Iterable[tuple[str, str]]) -> set[LinkKey]:
    """(u, v, i, j) whose communication has to cross from region i to region j.

    Region pair (i, j), i != j, needs a path for link (u, v) iff u runs in i,
    v runs in j, and not both v runs in i and u runs in j.
    """
    where: dict[str, set[str]] = defaultdict(set)
    for m, r in instances:
        where[m].add(r)
    need = set()
    for link in app.links:
        u, v = link.key
        for i in where[u]:
            for j in where[v]:
                if i == j:
                    continue
                if i in where[v] and j in where[u]:
                    continue
                need.add((u, v, i, j))
    return need


def link_usage(app: Application, link_map: Mapping[LinkKey, Path]) -> dict[tuple[str, str], float]:
    """Mapped throughput per physical link."""
    lam = {l.key: l.max_throughput for l in app.links}
    used: dict[tuple[str, str], float] = defaultdict(float)
    for (u, v, _, _), path in link_map.items():
        for hop in path.hops:
            used[hop.key] += lam[(u, v)]
    return dict(used)


def validate_deployment(topology: Topology, app: Application, deployment: Deployment) -> list[Violation]:
    """Every violated placement/link-mapping constraint, not just the first."""
    out: list[Violation] = []
    known_regions = set(topology.region_ids)

    for region in topology.regions:
        mem, cpu, sto = region.capacity.minus(placed_demand(region.id, deployment, app))
        if min(mem, cpu, sto) < 0:
            out.append(Violation(ViolationKind.CAPACITY, region.id, f"residual=({mem}, {cpu}, {sto})"))

    placed = {m for m, r in deployment.instances if r in known_regions}
    for m in app.ids:
        if m not in placed:
            out.append(Violation(ViolationKind.MISSING, m))

    links = {l.key: l for l in app.links}
    bw = {l.key: l.bandwidth for l in topology.links}
    for key, path in deployment.link_map.items():
        u, v, i, j = key
        if (u, v) not in links:
            out.append(Violation(ViolationKind.SPURIOUS, f"{u}->{v}@{i}->{j}", "not an application link"))
            continue
        if path.src != i or path.dst != j or any(h.key not in bw for h in path.hops):
            out.append(Violation(ViolationKind.BAD_PATH, f"{u}->{v}@{i}->{j}", "->".join(path.regions)))
        if path.total_delay > links[(u, v)].max_delay:
            out.append(
                Violation(
                    ViolationKind.DELAY,
                    f"{u}->{v}@{i}->{j}",
                    f"{path.total_delay} ms > {links[(u, v)].max_delay} ms",
                )
            )

    for hop, used in sorted(link_usage(app, {k: p for k, p in deployment.link_map.items() if k[:2] in links}).items()):
        if hop in bw and used > bw[hop]:
            out.append(Violation(ViolationKind.BANDWIDTH, f"{hop[0]}->{hop[1]}", f"{used} Mbps > {bw[hop]} Mbps"))

    need = required_link_pairs(app, deployment.instances)
    mapped = set(deployment.link_map)
    for key in sorted(need - mapped):
        out.append(Violation(ViolationKind.UNMAPPED, "{}->{}@{}->{}".format(*key)))
    for key in sorted(k for k in mapped - need if k[:2] in links):
        out.append(Violation(ViolationKind.SPURIOUS, "{}->{}@{}->{}".format(*key), "instances do not require it"))
    return out
