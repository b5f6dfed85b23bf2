"""Time-slotted simulation of the request stream, the control policy and costs.

One slot is one minute. The configuration in force during slot t is the one
decided at the end of slot t-1: DSR observes the processing time its previous
configuration produced under slot t's requests, then reconfigures for t+1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .domain import (
    Application,
    CostModel,
    Deployment,
    Topology,
    processing_rate,
    residual_cpu_map,
)
from .dsr import (
    AllSaturated,
    ControllerState,
    Decision,
    DsrConfig,
    SplitConfig,
    compute_split,
    dsr_step,
    init_controller,
)
from .mea import MeaHost, MeaWeights, mea_iteration
from .optimal import ExactSolver, Infeasible
from .placement import PlacementConfig, place, sort_regions

log = logging.getLogger(__name__)

INF = math.inf


class Saturated(RuntimeError):
    """A microservice with work to do has a zero processing rate."""


class PatternKind(str, Enum):
    INCDEC = "incdec"
    PERIODIC = "periodic"
    STEPS = "steps"


@dataclass(frozen=True)
class RequestPattern:
    kind: PatternKind
    length: int
    peak: float = 0.0
    base: float = 0.0
    period: float = 60.0
    steps: tuple[tuple[int, int], ...] = ()  # (level, duration)

    def __post_init__(self):
        if self.kind is PatternKind.STEPS:
            if not self.steps or any(lvl < 0 or dur <= 0 for lvl, dur in self.steps):
                raise ValueError("steps need non-negative levels and positive durations")
            if self.length != sum(d for _, d in self.steps):
                raise ValueError("step durations must add up to the pattern length")
        if self.length <= 0:
            raise ValueError("pattern length must be > 0")
        if min(self.peak, self.base) < 0 or self.period <= 0:
            raise ValueError("invalid pattern parameters")


def generate_pattern(pattern: RequestPattern, slot: int) -> int:
    if not 0 <= slot < pattern.length:
        raise IndexError(f"slot {slot} outside [0, {pattern.length})")
    if pattern.kind is PatternKind.INCDEC:
        half = pattern.length / 2
        ramp = slot / half if slot <= half else (pattern.length - slot) / half
        return int(round(pattern.base + (pattern.peak - pattern.base) * ramp))
    if pattern.kind is PatternKind.PERIODIC:
        wave = abs(math.sin(math.pi * slot / pattern.period))
        return int(round(pattern.base + (pattern.peak - pattern.base) * wave))
    t = slot
    for level, duration in pattern.steps:
        if t < duration:
            return int(level)
        t -= duration
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class NoiseModel:
    enabled: bool = False
    low: float = 0.0
    high: float = 250.0
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.low <= self.high:
            raise ValueError("noise range must satisfy 0 <= low <= high")


def apply_noise(noise: NoiseModel, topology: Topology, rng: np.random.Generator) -> tuple[str, float]:
    """A random region loses a uniform amount of cpu for one slot."""
    idx = int(rng.integers(len(topology.regions)))
    mips = float(rng.uniform(noise.low, noise.high)) if noise.high > noise.low else float(noise.low)
    return topology.regions[idx].id, mips


class PolicyKind(str, Enum):
    DSR = "dsr"
    MEA = "mea"
    OPTIMAL = "optimal"
    NONE = "none"


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    weights: MeaWeights | None = None
    grid: int = 20
    private_price: float = 1.0
    public_price: float = 5.0
    label: str = ""

    @property
    def name(self) -> str:
        return self.label or self.kind.value


@dataclass(frozen=True)
class ScenarioConfig:
    topology: Topology
    app: Application
    placement: PlacementConfig
    dsr: DsrConfig
    policy: Policy
    pattern: RequestPattern
    noise: NoiseModel = field(default_factory=NoiseModel)
    max_completion: float = 5.5
    zeta: float = 0.5
    cost_model: CostModel = field(default_factory=CostModel)
    name: str = "scenario"

    def __post_init__(self):
        if abs(self.dsr.psi + self.zeta - self.max_completion) > 1e-9:
            raise ValueError("max_completion must equal psi + zeta")

    @property
    def psi(self) -> float:
        return self.dsr.psi


@dataclass(frozen=True)
class IterationRecord:
    slot: int
    requests: int
    processing_time: float
    completion_time: float
    decision: Decision
    active_arrays: tuple[str, ...]
    split: SplitConfig
    public_cost: float
    noise_region: str | None
    noise_mips: float
    saturated: bool


def _carries(deployment: Deployment, active: Sequence[str], split: SplitConfig, ms_id: str, region_id: str) -> bool:
    host = deployment.instance_host(ms_id, region_id)
    if host is None:
        return True
    return host in active and split.get(host) > 0


def completion_time(
    deployment: Deployment,
    active_arrays: Sequence[str],
    split: SplitConfig,
    requests: int,
    residuals: Mapping[str, float],
    topology: Topology,
    app: Application,
) -> tuple[float, float]:
    """(processing, total) in seconds for one slot.

    An array microservice finishes when its slowest loaded replica does; with a
    split proportional to the hosts' rates every replica finishes together,
    after requests * work / (sum of active rates).
    """
    if requests == 0:
        return 0.0, 0.0
    array = set(deployment.replicas_array)
    proc = 0.0
    for ms in app.microservices:
        work = requests * ms.work_per_request
        if ms.id in array:
            slowest = 0.0
            for host in active_arrays:
                share = split.get(host)
                if share <= 0:
                    continue
                rate = processing_rate(max(residuals[deployment.member_region(host, ms.id)], 0.0))
                if rate <= 0:
                    raise Saturated(f"{ms.id} on {host} has no residual cpu")
                slowest = max(slowest, share * work / rate)
            proc += slowest
        else:
            rate = sum(processing_rate(max(residuals[r], 0.0)) for r in deployment.regions_of(ms.id))
            if rate <= 0:
                raise Saturated(f"{ms.id} has no residual cpu")
            proc += work / rate
    comm = 0.0
    for (u, v, i, j), path in deployment.link_map.items():
        if _carries(deployment, active_arrays, split, u, i) and _carries(deployment, active_arrays, split, v, j):
            comm += path.total_delay / 1000.0
    return proc, proc + comm


def active_deployment(deployment: Deployment, active_arrays: Sequence[str], split: SplitConfig) -> Deployment:
    """The instances and mapped links actually carrying traffic."""
    inst = tuple((m, r) for m, r in deployment.instances if _carries(deployment, active_arrays, split, m, r))
    keep = set(inst)
    links = {k: p for k, p in deployment.link_map.items() if (k[0], k[2]) in keep and (k[1], k[3]) in keep}
    return Deployment(instances=inst, link_map=links)


def iteration_cost(
    deployment: Deployment,
    active_arrays: Sequence[str],
    split: SplitConfig,
    cost_model: CostModel,
    topology: Topology,
) -> float:
    """Unit cost times the public instances receiving traffic this slot."""
    public = topology.public_ids
    count = sum(
        1 for m, r in deployment.instances
        if r in public and _carries(deployment, active_arrays, split, m, r)
    )
    return cost_model.public_cost(count)


def public_share(deployment: Deployment, active_arrays: Sequence[str], split: SplitConfig,
                 topology: Topology) -> float:
    """Fraction of the slot's requests that reach the public cloud."""
    public = topology.public_ids
    share = 0.0
    for m in {m for m, _ in deployment.instances}:
        if m in deployment.replicas_array:
            s = sum(split.get(h) for h in active_arrays if deployment.member_region(h, m) in public)
        else:
            s = 1.0 if deployment.regions_of(m) & public else 0.0
        share = max(share, s)
    return share


def monthly_cost(public_requests_per_simulation: float, cost_model: CostModel) -> float:
    """USD per month when the simulated period repeats ``periods_per_month`` times."""
    tot_req = public_requests_per_simulation * cost_model.periods_per_month
    tot_sec = tot_req * cost_model.aws_duration
    tot_gb_s = tot_sec * (cost_model.aws_memory / 1024.0)
    return tot_gb_s * cost_model.aws_price


@dataclass
class SimulationRun:
    config: ScenarioConfig
    deployment: Deployment
    records: list[IterationRecord]
    public_requests: list[float]

    @property
    def total_public_requests(self) -> float:
        return float(sum(self.public_requests))

    @property
    def monthly_usd(self) -> float:
        return monthly_cost(self.total_public_requests, self.config.cost_model)


def _measure(dep, active, split, requests, residuals, topology, app) -> tuple[float, float, bool]:
    try:
        proc, total = completion_time(dep, active, split, requests, residuals, topology, app)
        return proc, total, False
    except Saturated:
        return INF, INF, True


def simulate(cfg: ScenarioConfig, deployment: Deployment | None = None) -> SimulationRun:
    """Place once, then run every slot of the pattern under ``cfg.policy``."""
    topology, app = cfg.topology, cfg.app
    dep = deployment if deployment is not None else place(app, topology, cfg.placement)
    static = residual_cpu_map(topology, dep, app)
    rng = np.random.default_rng(cfg.noise.seed)
    kind = cfg.policy.kind

    state: ControllerState = init_controller(topology, dep)
    split = compute_split(state.active_arrays, static)
    solver = ExactSolver(topology, app, cfg.zeta, cfg.cost_model) if kind is PolicyKind.OPTIMAL else None
    order = sort_regions(topology)
    array_ms = [app.ms(m) for m in dep.replicas_array]

    records, public_reqs = [], []
    for slot in range(cfg.pattern.length):
        requests = generate_pattern(cfg.pattern, slot)
        noise_region, noise_mips = None, 0.0
        residuals = dict(static)
        if cfg.noise.enabled:
            noise_region, noise_mips = apply_noise(cfg.noise, topology, rng)
            residuals[noise_region] = max(residuals[noise_region] - noise_mips, 0.0)
        decision = Decision.NONE

        if kind is PolicyKind.OPTIMAL:
            bg = {noise_region: noise_mips} if noise_region else {}
            try:
                sol = solver.solve({m: requests for m in app.ids}, cfg.psi, bg)
            except Infeasible:
                records.append(IterationRecord(slot, requests, INF, INF, decision, (), SplitConfig({}),
                                               0.0, noise_region, noise_mips, True))
                public_reqs.append(0.0)
                continue
            used = {r for _, r in sol.deployment.instances}
            proc = sol.processing_time
            records.append(IterationRecord(
                slot, requests, proc, proc + sol.communication_delay, decision,
                tuple(r for r in order if r in used), SplitConfig({}), sol.objective,
                noise_region, noise_mips, False,
            ))
            public_reqs.append(requests * _exact_public_share(sol.deployment, topology, app, bg))
            continue

        saturated = False
        if kind is PolicyKind.DSR:
            active = state.active_arrays
            proc, total, saturated = _measure(dep, active, split, requests, residuals, topology, app)
            try:
                state, next_split, decision = dsr_step(state, dep, proc, requests, residuals, cfg.dsr)
            except AllSaturated as exc:
                state, decision, next_split = exc.state, exc.decision, split
                saturated = True
                log.info("slot %d: every active host saturated, keeping the previous split", slot)
            if state.active_arrays == active:
                # the trace logs applied reconfigurations only
                decision = Decision.NONE
            used_split = split
            split = next_split
        elif kind is PolicyKind.MEA:
            hosts = [
                MeaHost(h, residuals[h], cfg.policy.public_price if topology.region(h).public else cfg.policy.private_price)
                for h in state.host_order if residuals[h] > 0
            ]
            active = state.host_order
            if hosts:
                used_split, _ = mea_iteration(hosts, requests, array_ms, cfg.policy.weights or MeaWeights(),
                                              cfg.policy.grid)
                proc, total, saturated = _measure(dep, active, used_split, requests, residuals, topology, app)
            else:
                used_split, proc, total, saturated = SplitConfig({}), INF, INF, True
        else:
            active = state.host_order[:1]
            used_split = SplitConfig({active[0]: 1.0})
            proc, total, saturated = _measure(dep, active, used_split, requests, residuals, topology, app)

        cost = iteration_cost(dep, active, used_split, cfg.cost_model, topology)
        records.append(IterationRecord(slot, requests, proc, total, decision, tuple(active), used_split, cost,
                                       noise_region, noise_mips, saturated))
        public_reqs.append(requests * public_share(dep, active, used_split, topology))
    return SimulationRun(cfg, dep, records, public_reqs)


def _exact_public_share(dep: Deployment, topology: Topology, app: Application,
                        bg: Mapping[str, float]) -> float:
    # share of a microservice's work done in public = its public rate over its pooled rate
    public = topology.public_ids
    res = {}
    for region in topology.regions:
        used = sum(app.ms(m).demand.cpu for m in dep.hosted_in(region.id))
        res[region.id] = max(region.capacity.cpu - used - bg.get(region.id, 0.0), 0.0)
    share = 0.0
    for m in app.ids:
        regions = dep.regions_of(m)
        total = sum(res[r] for r in regions)
        if total > 0:
            share = max(share, sum(res[r] for r in regions if r in public) / total)
    return share


def run_simulation(cfg: ScenarioConfig) -> list[IterationRecord]:
    return simulate(cfg).records


def violations(records: Sequence[IterationRecord], max_completion: float) -> int:
    return sum(1 for r in records if r.saturated or r.completion_time > max_completion + 1e-9)
