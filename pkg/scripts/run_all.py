"""Run every bundled scenario through the CLI and print one summary line each.

    python3 scripts/run_all.py [output_dir]

compare_* scenarios go through `fogflow compare`, the rest through `simulate`.
"""

from __future__ import annotations

import csv
import sys
from pathlib import Path

from fogflow.cli import main as fogflow
from fogflow.scenario import bundled_scenarios


def run(root: Path) -> int:
    failures = 0
    for name in sorted(bundled_scenarios()):
        out = root / name
        cmd = "compare" if name.startswith("compare") else "simulate"
        code = fogflow([cmd, name, "-o", str(out)])
        if code:
            print(f"{name}: exit {code}")
            failures += 1
            continue
        with open(out / "summary.csv") as fh:
            cells = [f"{r['policy']} v={r['violations']} ${float(r['monthly_usd']):.2f}" for r in csv.DictReader(fh)]
        print(f"{name}: " + ", ".join(cells))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(run(Path(sys.argv[1] if len(sys.argv) > 1 else "out/all")))
