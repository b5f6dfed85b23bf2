"""Command-line front end.

    fogflow simulate <scenario> -o <dir>
    fogflow compare <scenario> -o <dir>
    fogflow sample-instance <ranges> --seed N -o <file>

Exit status: 0 ok, 1 bad input (scenario or ranges), 2 placement infeasible.
Nothing is written unless every run completed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .domain import Deployment
from .engine import PolicyKind, SimulationRun, simulate
from .placement import LinkInfeasible, PlacementInfeasible, Unreachable, place
from .report import plot_chart, plot_comparison, write_summary, write_trace
from .sampling import RangeError, default_ranges, sample_instance
from .scenario import ScenarioError, ScenarioFile, instance_to_dict, load_scenario, resolve_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2


def _err(msg: str) -> None:
    print(f"fogflow: {msg}", file=sys.stderr)


def _load(path: str, seed: int | None) -> ScenarioFile:
    try:
        p = resolve_scenario(path)
    except FileNotFoundError:
        raise ScenarioError(f"no such scenario: {path}") from None
    return load_scenario(p, seed=seed)


def _place(scen: ScenarioFile) -> Deployment:
    return place(scen.app, scen.topology, scen.placement)


def _run_all(scen: ScenarioFile, deployment: Deployment) -> dict[str, SimulationRun]:
    runs: dict[str, SimulationRun] = {}
    for pol in scen.policies:
        if pol.name in runs:
            raise ScenarioError(f"duplicate policy name {pol.name!r}; give one of them a label")
        runs[pol.name] = simulate(scen.config(pol), deployment)
    return runs


def _write(out: Path, runs: dict[str, SimulationRun]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, run in runs.items():
        write_trace(out / f"{name}.csv", run.records)
    write_summary(out / "summary.csv", runs)
    plot_chart(out, list(runs), out / "chart.svg")


def savings_line(runs: dict[str, SimulationRun]) -> str | None:
    """``dsr_monthly / mea_monthly`` for the first DSR and MEA policies, if both ran."""
    by_kind: dict[PolicyKind, SimulationRun] = {}
    for run in runs.values():
        by_kind.setdefault(run.config.policy.kind, run)
    dsr, mea = by_kind.get(PolicyKind.DSR), by_kind.get(PolicyKind.MEA)
    if dsr is None or mea is None:
        return None
    if mea.monthly_usd == 0:
        ratio = "inf" if dsr.monthly_usd > 0 else "nan"
        return f"dsr_monthly / mea_monthly = {dsr.monthly_usd:.2f} / 0.00 = {ratio}"
    ratio = dsr.monthly_usd / mea.monthly_usd
    return (
        f"dsr_monthly / mea_monthly = {dsr.monthly_usd:.2f} / {mea.monthly_usd:.2f} = {ratio:.4f}"
        f" (savings {100 * (1 - ratio):.1f}%)"
    )


def _experiment(args: argparse.Namespace, compare: bool) -> int:
    try:
        scen = _load(args.scenario, args.seed)
        if compare and len(scen.policies) < 2:
            raise ScenarioError("compare needs at least 2 policies")
    except ScenarioError as exc:
        _err(f"{args.scenario}: {exc}")
        return EXIT_CONFIG
    try:
        deployment = _place(scen)
    except Unreachable as exc:
        _err(f"{args.scenario}: {exc}")
        return EXIT_CONFIG
    except (PlacementInfeasible, LinkInfeasible) as exc:
        _err(f"{args.scenario}: placement infeasible: {exc}")
        return EXIT_INFEASIBLE
    if args.validate_only:
        for w in deployment.warnings:
            _err(f"warning: {w}")
        print(f"{scen.name}: ok ({len(scen.policies)} policies, array hosts {', '.join(deployment.array_hosts)})")
        return EXIT_OK
    try:
        runs = _run_all(scen, deployment)
    except ScenarioError as exc:
        _err(f"{args.scenario}: {exc}")
        return EXIT_CONFIG

    out = Path(args.output)
    _write(out, runs)
    if compare:
        plot_comparison(out, list(runs), out / "comparison.svg")
        line = savings_line(runs)
        if line:
            print(line)
            (out / "savings.txt").write_text(line + "\n")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    return _experiment(args, compare=False)


def cmd_compare(args: argparse.Namespace) -> int:
    return _experiment(args, compare=True)


def cmd_sample_instance(args: argparse.Namespace) -> int:
    try:
        if args.ranges == "default":
            ranges = default_ranges()
        else:
            ranges = json.loads(Path(args.ranges).read_text())
        topology, app = sample_instance(ranges, args.seed)
    except (OSError, json.JSONDecodeError, RangeError, KeyError, TypeError) as exc:
        _err(f"{args.ranges}: {exc}")
        return EXIT_CONFIG
    doc = {"seed": args.seed, **instance_to_dict(topology, app)}
    text = json.dumps(doc, indent=2) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).write_text(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fogflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fogflow {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, helptext in (
        ("simulate", cmd_simulate, "run every policy of a scenario and write traces, summary and chart"),
        ("compare", cmd_compare, "like simulate, plus a comparison chart and the DSR/MEA savings line"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("scenario", help="scenario JSON path or bundled scenario name")
        p.add_argument("-o", "--output", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed (beats FOGFLOW_SEED)")
        p.add_argument("--validate-only", action="store_true", help="parse and place, then exit")
        p.set_defaults(func=fn)

    p = sub.add_parser("sample-instance", help="sample a topology/application inside value ranges")
    p.add_argument("ranges", help="ranges JSON path, or 'default'")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--output", default="-", help="output file ('-' for stdout)")
    p.set_defaults(func=cmd_sample_instance)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
