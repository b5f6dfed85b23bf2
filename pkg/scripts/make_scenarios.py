"""Regenerate the bundled scenario suite in src/fogflow/scenarios/.

Every scenario shares one three-region instance whose values sit inside the
usual edge/central/public capability ranges. Run from the repo root:

    python3 scripts/make_scenarios.py
"""

from __future__ import annotations

import json
from pathlib import Path

from fogflow.domain import (
    AppLink, Application, CapacityVector, CostModel, Microservice, NetLink, Region, RegionKind, Topology,
)
from fogflow.dsr import DsrConfig
from fogflow.engine import NoiseModel, PatternKind, Policy, PolicyKind, RequestPattern
from fogflow.mea import MeaWeights
from fogflow.placement import PlacementConfig
from fogflow.scenario import ScenarioFile, scenario_to_dict

OUT = Path(__file__).resolve().parents[1] / "src" / "fogflow" / "scenarios"
SEED = 2024
ZETA = 0.5
THRESHOLDS = {"90_60": (90, 60), "90_70": (90, 70), "80_50": (80, 50)}


def topology() -> Topology:
    regions = (
        Region("edge", RegionKind.EDGE, CapacityVector(8192, 3800, 60), 10),
        Region("central", RegionKind.CENTRAL, CapacityVector(12288, 5500, 80), 25),
        Region("public", RegionKind.PUBLIC, CapacityVector(16384, 7000, 90), 70),
    )
    delays = {("edge", "central"): 20, ("edge", "public"): 60, ("central", "public"): 50}
    links = []
    for (a, b), d in delays.items():
        links += [NetLink(a, b, d, 600), NetLink(b, a, d, 600)]
    return Topology(regions, tuple(links))


def application() -> Application:
    cpu = [200, 400, 800, 700, 300]
    work = [8, 16, 40, 36, 10]
    ms = tuple(
        Microservice(f"m{i + 1}", CapacityVector(200 + 50 * i, cpu[i], 2 + i), work[i], 0.5) for i in range(5)
    )
    links = tuple(AppLink(f"m{i + 1}", f"m{i + 2}", 100, 20 + 5 * i) for i in range(4))
    return Application(ms, links, "m1")


def scenario(name, *, array_size=2, thresholds=(90, 60), pattern, policies, noise=False, max_completion=5.5):
    up, low = thresholds
    return ScenarioFile(
        name=name,
        seed=SEED,
        topology=topology(),
        app=application(),
        placement=PlacementConfig(tau=500, array_size=array_size),
        dsr=DsrConfig(psi=max_completion - ZETA, upper_pct=up, lower_pct=low, q_pct=10),
        policies=tuple(policies),
        pattern=pattern,
        noise=NoiseModel(enabled=noise, low=0, high=250),
        cost_model=CostModel(),
        max_completion=max_completion,
        zeta=ZETA,
    )


def suite() -> list[ScenarioFile]:
    standard = [Policy(PolicyKind.DSR), Policy(PolicyKind.OPTIMAL), Policy(PolicyKind.MEA, MeaWeights()),
                Policy(PolicyKind.NONE)]
    # load balancing that prefers the public region: the cost-comparison setting
    compare = [Policy(PolicyKind.DSR), Policy(PolicyKind.MEA, MeaWeights(alpha=-1, beta=0, gamma=1)),
               Policy(PolicyKind.OPTIMAL), Policy(PolicyKind.NONE)]
    incdec = RequestPattern(PatternKind.INCDEC, 120, peak=150)
    periodic = RequestPattern(PatternKind.PERIODIC, 120, peak=150, base=20, period=40)
    steps = RequestPattern(PatternKind.STEPS, 52, steps=((40, 15), (130, 22), (40, 15)))

    out = []
    for ra in (1, 2, 3, 4):
        for tag, th in THRESHOLDS.items():
            out.append(scenario(f"incdec_ra{ra}_{tag}", array_size=ra, thresholds=th, pattern=incdec,
                                policies=standard))
    for ra in (2, 3, 4):
        out.append(scenario(f"periodic_ra{ra}", array_size=ra, pattern=periodic, policies=standard))
        out.append(scenario(f"periodic_ra{ra}_noise", array_size=ra, pattern=periodic, policies=standard,
                            noise=True))
    out.append(scenario("compare_lb_5s5", pattern=incdec, policies=compare, max_completion=5.5))
    out.append(scenario("compare_lb_4s", pattern=incdec, policies=compare, max_completion=4.0))
    out.append(scenario("steps_ra2", pattern=steps, policies=standard))
    return out


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for old in OUT.glob("*.json"):
        old.unlink()
    for scen in suite():
        (OUT / f"{scen.name}.json").write_text(json.dumps(scenario_to_dict(scen), indent=2) + "\n")
    print(f"wrote {len(suite())} scenarios to {OUT}")


if __name__ == "__main__":
    main()
