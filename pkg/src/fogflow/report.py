"""Trace CSVs, summary tables and SVG charts.

Charts are drawn from the CSV files only, never from in-memory runs.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .engine import IterationRecord, SimulationRun, violations

TRACE_HEADER = [
    "slot", "requests", "processing_s", "completion_s", "decision", "active_arrays",
    "split", "public_cost", "noise_region", "noise_mips", "saturated",
]
SUMMARY_HEADER = [
    "policy", "slots", "violations", "saturated_slots", "total_cost", "public_requests",
    "monthly_usd", "mean_completion_s", "p95_completion_s", "max_completion_s",
]


def fmt(x: float) -> str:
    """9 significant digits; infinity becomes an empty cell."""
    if x is None or (isinstance(x, float) and math.isinf(x)):
        return ""
    return f"{x:.9g}"


def trace_rows(records: Iterable[IterationRecord]) -> list[list[str]]:
    return [
        [
            str(r.slot), str(r.requests), fmt(r.processing_time), fmt(r.completion_time), r.decision.value,
            ";".join(r.active_arrays), str(r.split), fmt(r.public_cost), r.noise_region or "",
            fmt(r.noise_mips), "1" if r.saturated else "0",
        ]
        for r in records
    ]


def write_trace(path: Path, records: Sequence[IterationRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        w.writerows(trace_rows(records))


def read_trace(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary_row(name: str, run: SimulationRun) -> list[str]:
    recs = run.records
    finite = np.array([r.completion_time for r in recs if not math.isinf(r.completion_time)])
    mean = float(finite.mean()) if finite.size else math.inf
    p95 = float(np.percentile(finite, 95)) if finite.size else math.inf
    return [
        name, str(len(recs)), str(violations(recs, run.config.max_completion)),
        str(sum(r.saturated for r in recs)), fmt(sum(r.public_cost for r in recs)),
        fmt(run.total_public_requests), fmt(run.monthly_usd), fmt(mean), fmt(p95),
        fmt(run.config.max_completion),
    ]


def write_summary(path: Path, runs: dict[str, SimulationRun]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for name, run in runs.items():
            w.writerow(summary_row(name, run))


def read_summary(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(cell: str) -> float:
    return float(cell) if cell else math.nan


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "fogflow"
    return plt


def plot_chart(out_dir: Path, policies: Sequence[str], path: Path) -> None:
    """Completion time (with the max-completion line) and cost per slot."""
    plt = _figure()
    summary = {row["policy"]: row for row in read_summary(out_dir / "summary.csv")}
    fig, (ax_t, ax_c) = plt.subplots(2, 1, figsize=(9, 6), sharex=True)
    limit = None
    for name in policies:
        rows = read_trace(out_dir / f"{name}.csv")
        slots = [int(r["slot"]) for r in rows]
        ax_t.plot(slots, [_num(r["completion_s"]) for r in rows], label=name, lw=1.2)
        ax_c.step(slots, [_num(r["public_cost"]) for r in rows], where="post", label=name, lw=1.2)
        limit = _num(summary[name]["max_completion_s"])
    if limit is not None:
        ax_t.axhline(limit, color="red", lw=1.0, ls="--", label="max completion")
    ax_t.set_ylabel("completion time [s]")
    ax_c.set_ylabel("cost per iteration")
    ax_c.set_xlabel("iteration")
    ax_t.legend(fontsize=8, loc="upper left")
    ax_c.legend(fontsize=8, loc="upper left")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_comparison(out_dir: Path, policies: Sequence[str], path: Path) -> None:
    """Active-array count per slot next to the monthly bill of each policy."""
    plt = _figure()
    summary = {row["policy"]: row for row in read_summary(out_dir / "summary.csv")}
    fig, (ax_a, ax_m) = plt.subplots(1, 2, figsize=(11, 4), gridspec_kw={"width_ratios": [3, 1]})
    for name in policies:
        rows = read_trace(out_dir / f"{name}.csv")
        counts = [len(r["active_arrays"].split(";")) if r["active_arrays"] else 0 for r in rows]
        ax_a.step([int(r["slot"]) for r in rows], counts, where="post", label=name, lw=1.2)
    ax_a.set_xlabel("iteration")
    ax_a.set_ylabel("active regions")
    ax_a.legend(fontsize=8)
    monthly = [_num(summary[n]["monthly_usd"]) for n in policies]
    ax_m.bar(range(len(policies)), monthly, color="tab:gray")
    ax_m.set_xticks(range(len(policies)), policies, rotation=30)
    ax_m.set_ylabel("monthly cost [USD]")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
