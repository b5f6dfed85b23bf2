"""Scenario files: a JSON document describing one experiment.

Unknown keys are rejected; errors carry the line of the offending key.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path as FsPath
from typing import Any

from .domain import (
    AppLink,
    Application,
    CapacityVector,
    CostModel,
    Microservice,
    NetLink,
    Region,
    RegionKind,
    Topology,
)
from .dsr import DsrConfig
from .engine import NoiseModel, PatternKind, Policy, PolicyKind, RequestPattern, ScenarioConfig
from .mea import MeaWeights
from .placement import PlacementConfig, bfs_order

SEED_ENV = "FOGFLOW_SEED"


class ScenarioError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass(frozen=True)
class ScenarioFile:
    name: str
    seed: int
    topology: Topology
    app: Application
    placement: PlacementConfig
    dsr: DsrConfig
    policies: tuple[Policy, ...]
    pattern: RequestPattern
    noise: NoiseModel
    cost_model: CostModel
    max_completion: float
    zeta: float

    def config(self, policy: Policy) -> ScenarioConfig:
        return ScenarioConfig(
            topology=self.topology,
            app=self.app,
            placement=self.placement,
            dsr=self.dsr,
            policy=policy,
            pattern=self.pattern,
            noise=replace(self.noise, seed=self.seed),
            max_completion=self.max_completion,
            zeta=self.zeta,
            cost_model=self.cost_model,
            name=self.name,
        )

    def configs(self) -> list[ScenarioConfig]:
        return [self.config(p) for p in self.policies]

    def with_max_completion(self, max_completion: float) -> ScenarioFile:
        psi = max_completion - self.zeta
        return replace(self, max_completion=max_completion, dsr=replace(self.dsr, psi=psi))

    def with_seed(self, seed: int) -> ScenarioFile:
        return replace(self, seed=seed)


class _Reader:
    """Walks the decoded JSON, tracking the key path for error lines."""

    def __init__(self, text: str):
        self.text = text
        self.lines = text.splitlines()

    def line_of(self, path: tuple) -> int | None:
        pos = 0
        for part in path:
            if isinstance(part, int):
                for _ in range(part + 1):
                    nxt = self.text.find("{", pos + 1)
                    if nxt < 0:
                        break
                    pos = nxt
                continue
            nxt = self.text.find(f'"{part}"', pos)
            if nxt < 0:
                break
            pos = nxt
        return self.text.count("\n", 0, pos) + 1

    def fail(self, path: tuple, msg: str):
        where = ".".join(str(p) for p in path)
        raise ScenarioError(f"{where}: {msg}" if where else msg, self.line_of(path))

    def obj(self, value: Any, path: tuple, required: set[str], optional: set[str] = frozenset()) -> dict:
        if not isinstance(value, dict):
            self.fail(path, "expected an object")
        for key in value:
            if key not in required and key not in optional:
                self.fail(path + (key,), "unknown key")
        for key in sorted(required):
            if key not in value:
                self.fail(path, f"missing key {key!r}")
        return value

    def num(self, value: Any, path: tuple, lo: float | None = None) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, "expected a number")
        if lo is not None and value < lo:
            self.fail(path, f"must be >= {lo}")
        return float(value)

    def lst(self, value: Any, path: tuple) -> list:
        if not isinstance(value, list):
            self.fail(path, "expected a list")
        return value


def _topology(rd: _Reader, doc: dict) -> Topology:
    p = ("topology",)
    t = rd.obj(doc, p, {"regions", "links"}, {"max_path_hops"})
    regions = []
    for i, r in enumerate(rd.lst(t["regions"], p + ("regions",))):
        q = p + ("regions", i)
        rd.obj(r, q, {"id", "kind", "memory", "cpu", "storage"}, {"access_delay"})
        try:
            kind = RegionKind(r["kind"])
        except ValueError:
            rd.fail(q + ("kind",), f"kind must be one of {[k.value for k in RegionKind]}")
        regions.append(Region(
            str(r["id"]), kind,
            CapacityVector(rd.num(r["memory"], q + ("memory",), 0), rd.num(r["cpu"], q + ("cpu",), 0),
                           rd.num(r["storage"], q + ("storage",), 0)),
            rd.num(r.get("access_delay", 0.0), q + ("access_delay",), 0),
        ))
    links = []
    for i, l in enumerate(rd.lst(t["links"], p + ("links",))):
        q = p + ("links", i)
        rd.obj(l, q, {"from", "to", "delay", "bandwidth"})
        try:
            links.append(NetLink(str(l["from"]), str(l["to"]), rd.num(l["delay"], q + ("delay",)),
                                 rd.num(l["bandwidth"], q + ("bandwidth",))))
        except ValueError as exc:
            rd.fail(q, str(exc))
    hops = t.get("max_path_hops", 2)
    if not isinstance(hops, int) or hops < 1:
        rd.fail(p + ("max_path_hops",), "must be a positive integer")
    try:
        topo = Topology(tuple(regions), tuple(links), hops)
        topo.check_public_reachable()
    except ValueError as exc:
        rd.fail(p, str(exc))
    return topo


def _application(rd: _Reader, doc: dict) -> Application:
    p = ("application",)
    a = rd.obj(doc, p, {"entry", "microservices", "links"})
    ms = []
    for i, m in enumerate(rd.lst(a["microservices"], p + ("microservices",))):
        q = p + ("microservices", i)
        rd.obj(m, q, {"id", "memory", "cpu", "storage", "work_per_request"}, {"request_size"})
        try:
            ms.append(Microservice(
                str(m["id"]),
                CapacityVector(rd.num(m["memory"], q + ("memory",)), rd.num(m["cpu"], q + ("cpu",)),
                               rd.num(m["storage"], q + ("storage",))),
                rd.num(m["work_per_request"], q + ("work_per_request",)),
                rd.num(m.get("request_size", 0.5), q + ("request_size",), 0),
            ))
        except ValueError as exc:
            rd.fail(q, str(exc))
    links = []
    for i, l in enumerate(rd.lst(a["links"], p + ("links",))):
        q = p + ("links", i)
        rd.obj(l, q, {"from", "to", "max_delay", "max_throughput"})
        try:
            links.append(AppLink(str(l["from"]), str(l["to"]), rd.num(l["max_delay"], q + ("max_delay",)),
                                 rd.num(l["max_throughput"], q + ("max_throughput",))))
        except ValueError as exc:
            rd.fail(q, str(exc))
    try:
        app = Application(tuple(ms), tuple(links), str(a["entry"]))
        bfs_order(app)
    except ValueError as exc:
        rd.fail(p, str(exc))
    return app


def _policies(rd: _Reader, value: Any) -> tuple[Policy, ...]:
    p = ("policies",)
    out = []
    for i, item in enumerate(rd.lst(value, p)):
        q = p + (i,)
        if isinstance(item, str):
            item = {"kind": item}
        rd.obj(item, q, {"kind"}, {"alpha", "beta", "gamma", "grid", "private_price", "public_price", "label"})
        try:
            kind = PolicyKind(item["kind"])
        except ValueError:
            rd.fail(q, f"policy must be one of {[k.value for k in PolicyKind]}")
        weights = None
        if kind is PolicyKind.MEA:
            try:
                weights = MeaWeights(item.get("alpha", 0.0), item.get("beta", 0.0), item.get("gamma", 1.0))
            except ValueError as exc:
                rd.fail(q, str(exc))
        out.append(Policy(kind, weights, int(item.get("grid", 20)), float(item.get("private_price", 1.0)),
                          float(item.get("public_price", 5.0)), str(item.get("label", ""))))
    names = [pol.name for pol in out]
    if len(set(names)) != len(names):
        rd.fail(p, "policy names must be unique (use 'label')")
    if not out:
        rd.fail(p, "at least one policy is required")
    return tuple(out)


def _pattern(rd: _Reader, value: Any) -> RequestPattern:
    p = ("pattern",)
    d = rd.obj(value, p, {"kind"}, {"length", "peak", "base", "period", "steps"})
    try:
        kind = PatternKind(d["kind"])
    except ValueError:
        rd.fail(p + ("kind",), f"kind must be one of {[k.value for k in PatternKind]}")
    steps = tuple((int(a), int(b)) for a, b in d.get("steps", []))
    length = d.get("length", sum(b for _, b in steps) if steps else 120)
    try:
        return RequestPattern(kind, int(length), float(d.get("peak", 0)), float(d.get("base", 0)),
                              float(d.get("period", 60)), steps)
    except ValueError as exc:
        rd.fail(p, str(exc))


def parse_scenario(text: str, name: str = "scenario") -> ScenarioFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", exc.lineno) from None
    rd = _Reader(text)
    top = rd.obj(doc, (), {"topology", "application", "policies", "pattern"},
                 {"name", "seed", "placement", "dsr", "noise", "cost_model", "max_completion", "zeta"})
    topology = _topology(rd, top["topology"])
    app = _application(rd, top["application"])

    pl = rd.obj(top.get("placement", {}), ("placement",), set(), {"tau", "array_size"})
    try:
        placement = PlacementConfig(float(pl.get("tau", 500.0)), int(pl.get("array_size", 2)))
    except ValueError as exc:
        rd.fail(("placement",), str(exc))
    if not placement.array_size < len(app.microservices):
        rd.fail(("placement", "array_size"), "replicasArray must be a strict subset of the microservices")

    max_completion = rd.num(top.get("max_completion", 5.5), ("max_completion",), 0)
    zeta = rd.num(top.get("zeta", 0.5), ("zeta",), 0)
    ds = rd.obj(top.get("dsr", {}), ("dsr",), set(), {"upper_pct", "lower_pct", "q_pct", "capture"})
    try:
        dsr = DsrConfig(max_completion - zeta, float(ds.get("upper_pct", 90)), float(ds.get("lower_pct", 60)),
                        float(ds.get("q_pct", 10)), str(ds.get("capture", "decision")))
    except ValueError as exc:
        rd.fail(("dsr",), str(exc))

    nz = rd.obj(top.get("noise", {}), ("noise",), set(), {"enabled", "low", "high"})
    try:
        noise = NoiseModel(bool(nz.get("enabled", False)), float(nz.get("low", 0)), float(nz.get("high", 250)))
    except ValueError as exc:
        rd.fail(("noise",), str(exc))

    cm = rd.obj(top.get("cost_model", {}), ("cost_model",), set(),
                {"per_microservice_unit_cost", "aws_price", "aws_memory", "aws_duration", "periods_per_month"})
    try:
        cost_model = CostModel(**{k: float(v) for k, v in cm.items()})
    except ValueError as exc:
        rd.fail(("cost_model",), str(exc))

    seed = top.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        rd.fail(("seed",), "expected an integer")

    return ScenarioFile(
        name=str(top.get("name", name)),
        seed=seed,
        topology=topology,
        app=app,
        placement=placement,
        dsr=dsr,
        policies=_policies(rd, top["policies"]),
        pattern=_pattern(rd, top["pattern"]),
        noise=noise,
        cost_model=cost_model,
        max_completion=max_completion,
        zeta=zeta,
    )


def load_scenario(path: str | os.PathLike, seed: int | None = None) -> ScenarioFile:
    """Read a scenario; seed precedence is ``seed`` argument > FOGFLOW_SEED > file."""
    p = FsPath(path)
    scen = parse_scenario(p.read_text(), p.stem)
    if seed is not None:
        return scen.with_seed(seed)
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return scen.with_seed(int(env))
        except ValueError:
            raise ScenarioError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return scen


def bundled_scenarios() -> dict[str, FsPath]:
    root = resources.files("fogflow") / "scenarios"
    return {FsPath(str(f)).stem: FsPath(str(f)) for f in sorted(root.iterdir(), key=lambda f: f.name)
            if f.name.endswith(".json")}


def resolve_scenario(name_or_path: str) -> FsPath:
    """A path on disk, or the name of a bundled scenario."""
    p = FsPath(name_or_path)
    if p.exists():
        return p
    bundled = bundled_scenarios()
    if name_or_path in bundled:
        return bundled[name_or_path]
    raise FileNotFoundError(name_or_path)


def scenario_to_dict(scen: ScenarioFile) -> dict:
    """Inverse of parse_scenario (used by the scenario generator)."""
    out = {"name": scen.name, "seed": scen.seed}
    out.update(instance_to_dict(scen.topology, scen.app))
    out["placement"] = {"tau": scen.placement.tau, "array_size": scen.placement.array_size}
    out["dsr"] = {"upper_pct": scen.dsr.upper_pct, "lower_pct": scen.dsr.lower_pct, "q_pct": scen.dsr.q_pct,
                  "capture": scen.dsr.capture}
    out["max_completion"] = scen.max_completion
    out["zeta"] = scen.zeta
    pols = []
    for pol in scen.policies:
        if pol.kind is PolicyKind.MEA:
            w = pol.weights or MeaWeights()
            item = {"kind": "mea", "alpha": w.alpha, "beta": w.beta, "gamma": w.gamma, "grid": pol.grid,
                    "private_price": pol.private_price, "public_price": pol.public_price}
            if pol.label:
                item["label"] = pol.label
            pols.append(item)
        else:
            pols.append(pol.kind.value if not pol.label else {"kind": pol.kind.value, "label": pol.label})
    out["policies"] = pols
    pat = {"kind": scen.pattern.kind.value, "length": scen.pattern.length}
    if scen.pattern.kind is PatternKind.STEPS:
        pat["steps"] = [list(s) for s in scen.pattern.steps]
    else:
        pat.update(peak=scen.pattern.peak, base=scen.pattern.base)
        if scen.pattern.kind is PatternKind.PERIODIC:
            pat["period"] = scen.pattern.period
    out["pattern"] = pat
    out["noise"] = {"enabled": scen.noise.enabled, "low": scen.noise.low, "high": scen.noise.high}
    out["cost_model"] = {
        "per_microservice_unit_cost": scen.cost_model.per_microservice_unit_cost,
        "aws_price": scen.cost_model.aws_price,
        "aws_memory": scen.cost_model.aws_memory,
        "aws_duration": scen.cost_model.aws_duration,
        "periods_per_month": scen.cost_model.periods_per_month,
    }
    return out


def instance_to_dict(topology: Topology, app: Application) -> dict:
    return {
        "topology": {
            "max_path_hops": topology.max_path_hops,
            "regions": [
                {"id": r.id, "kind": r.kind.value, "memory": r.capacity.memory, "cpu": r.capacity.cpu,
                 "storage": r.capacity.storage, "access_delay": r.access_delay}
                for r in topology.regions
            ],
            "links": [{"from": l.src, "to": l.dst, "delay": l.delay, "bandwidth": l.bandwidth}
                      for l in topology.links],
        },
        "application": {
            "entry": app.entry,
            "microservices": [
                {"id": m.id, "memory": m.demand.memory, "cpu": m.demand.cpu, "storage": m.demand.storage,
                 "work_per_request": m.work_per_request, "request_size": m.request_size}
                for m in app.microservices
            ],
            "links": [{"from": l.src, "to": l.dst, "max_delay": l.max_delay, "max_throughput": l.max_throughput}
                      for l in app.links],
        },
    }
