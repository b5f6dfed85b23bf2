"""Data Stream Reconfiguration: reactive replicasArray (de)activation with
request-memory hysteresis and residual-capacity traffic splitting."""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Sequence

from .domain import Deployment, Topology, processing_rate
from .placement import sort_regions


class Decision(str, Enum):
    ACTIVATE = "ACTIVATE"
    DEACTIVATE = "DEACTIVATE"
    NONE = "NONE"


class AllSaturated(RuntimeError):
    """Every active host has zero residual CPU; the split is undefined."""


@dataclass(frozen=True)
class DsrConfig:
    psi: float
    upper_pct: float = 90.0
    lower_pct: float = 60.0
    q_pct: float = 10.0
    # "decision": remember the request level at every shift decision;
    # "activate": only at activations
    capture: str = "decision"

    def __post_init__(self):
        if self.psi <= 0:
            raise ValueError("psi must be > 0")
        if not 0 < self.lower_pct < self.upper_pct <= 100:
            raise ValueError("need 0 < lower_pct < upper_pct <= 100")
        if not 0 < self.q_pct < 100:
            raise ValueError("need 0 < q_pct < 100")
        if self.capture not in ("decision", "activate"):
            raise ValueError("capture must be 'decision' or 'activate'")

    @property
    def upper(self) -> float:
        return self.upper_pct / 100.0 * self.psi

    @property
    def lower(self) -> float:
        return self.lower_pct / 100.0 * self.psi


@dataclass(frozen=True)
class SplitConfig:
    fractions: Mapping[str, float]

    def __post_init__(self):
        if self.fractions:
            total = sum(self.fractions.values())
            if abs(total - 1.0) > 1e-9 or min(self.fractions.values()) < 0:
                raise ValueError(f"invalid split {dict(self.fractions)}")

    def get(self, region_id: str) -> float:
        return self.fractions.get(region_id, 0.0)

    def __str__(self) -> str:
        return ";".join(f"{k}:{v:.9g}" for k, v in self.fractions.items())


@dataclass(frozen=True)
class ControllerState:
    active_arrays: tuple[str, ...]
    host_order: tuple[str, ...]
    region_order: tuple[str, ...] = ()
    last_decision: Decision = Decision.NONE
    last_requests: int = 0

    def __post_init__(self):
        k = len(self.active_arrays)
        if not 1 <= k <= len(self.host_order) or self.active_arrays != self.host_order[:k]:
            raise ValueError("active arrays must be a non-empty prefix of the host order")


@dataclass
class OpCounter:
    """Counts unit controller operations (decision, per-host reads and writes)."""

    ops: int = 0

    def tick(self, n: int = 1) -> None:
        self.ops += n


def init_controller(topology: Topology, deployment: Deployment) -> ControllerState:
    """Sort regions once; the first array host starts active."""
    order = tuple(sort_regions(topology))
    hosts = tuple(r for r in order if r in deployment.array_hosts)
    if not hosts:
        raise ValueError("deployment has no replicasArray host")
    return ControllerState(active_arrays=hosts[:1], host_order=hosts, region_order=order)


def is_workload_shift_required(
    state: ControllerState, current_proc_time: float, current_requests: int, cfg: DsrConfig
) -> Decision:
    if current_proc_time < 0:
        raise ValueError("processing time must be >= 0")
    decision = Decision.NONE
    if current_proc_time >= cfg.upper:
        decision = Decision.ACTIVATE
    if current_proc_time <= cfg.lower:
        decision = Decision.DEACTIVATE

    if state.last_decision in (Decision.NONE, Decision.DEACTIVATE):
        return decision
    if decision in (Decision.ACTIVATE, Decision.NONE):
        return decision
    if current_requests > state.last_requests * (1.0 - cfg.q_pct / 100.0):
        return Decision.NONE
    return decision


def compute_split(
    active_hosts: Sequence[str],
    residuals: Mapping[str, float],
    slope: float = 1.0,
    counter: OpCounter | None = None,
) -> SplitConfig:
    """Traffic share of each active host, proportional to its processing rate."""
    if not active_hosts:
        raise ValueError("no active host")
    rates = {}
    for h in active_hosts:
        rates[h] = processing_rate(max(residuals[h], 0.0), slope)
    total = sum(rates.values())
    if counter:
        counter.tick(len(active_hosts))
    if total <= 0:
        raise AllSaturated(f"no residual cpu on {list(active_hosts)}")
    fractions = {h: r / total for h, r in rates.items()}
    if counter:
        counter.tick(len(active_hosts))
    # keep the sum exact to the last ulp
    last = active_hosts[-1]
    fractions[last] = max(0.0, 1.0 - sum(v for k, v in fractions.items() if k != last))
    return SplitConfig(fractions)


def dsr_step(
    state: ControllerState,
    deployment: Deployment,
    current_proc_time: float,
    current_requests: int,
    residuals: Mapping[str, float],
    cfg: DsrConfig,
    counter: OpCounter | None = None,
) -> tuple[ControllerState, SplitConfig, Decision]:
    """One controller period. Raises AllSaturated from the split."""
    if not deployment.array_hosts:
        raise ValueError("deployment has no replicasArray host")
    decision = is_workload_shift_required(state, current_proc_time, current_requests, cfg)
    if counter:
        counter.tick()
    active = state.active_arrays
    if decision is Decision.ACTIVATE and len(active) < len(state.host_order):
        active = active + (state.host_order[len(active)],)
    elif decision is Decision.DEACTIVATE and len(active) > 1:
        active = active[:-1]

    new = replace(state, active_arrays=active)
    if decision is not Decision.NONE:
        capture = cfg.capture == "decision" or decision is Decision.ACTIVATE
        new = replace(
            new,
            last_decision=decision,
            last_requests=current_requests if capture else state.last_requests,
        )
    try:
        split = compute_split(active, residuals, counter=counter)
    except AllSaturated as exc:
        # the caller keeps its previous split but must still adopt the new state
        exc.state, exc.decision = new, decision
        raise
    return new, split, decision
