"""Concrete instances sampled uniformly inside per-kind value ranges."""

from __future__ import annotations

import json
from importlib import resources
from typing import Any

import numpy as np

from .domain import (
    AppLink,
    Application,
    CapacityVector,
    Microservice,
    NetLink,
    Region,
    RegionKind,
    Topology,
)

_RANK = {RegionKind.EDGE: 0, RegionKind.CENTRAL: 1, RegionKind.PUBLIC: 2}


class RangeError(ValueError):
    pass


def default_ranges() -> dict[str, Any]:
    return json.loads((resources.files("fogflow") / "data" / "ranges_default.json").read_text())


def _check(ranges: Any, path: str = "") -> None:
    if isinstance(ranges, dict):
        for k, v in ranges.items():
            _check(v, f"{path}.{k}" if path else k)
    elif isinstance(ranges, list) and len(ranges) == 2 and all(isinstance(x, (int, float)) for x in ranges):
        if ranges[0] > ranges[1]:
            raise RangeError(f"{path}: inverted interval {ranges}")


def _int(rng: np.random.Generator, lo_hi) -> int:
    lo, hi = int(lo_hi[0]), int(lo_hi[1])
    return int(rng.integers(lo, hi + 1))


def _float(rng: np.random.Generator, lo_hi) -> float:
    lo, hi = float(lo_hi[0]), float(lo_hi[1])
    return lo if lo == hi else round(float(rng.uniform(lo, hi)), 3)


def sample_instance(ranges: dict[str, Any], seed: int) -> tuple[Topology, Application]:
    """Regions edge/central/public fully connected; a chain of microservices."""
    _check(ranges)
    rng = np.random.default_rng(seed)
    rr = ranges["regions"]
    regions = []
    for kind in (RegionKind.EDGE, RegionKind.CENTRAL, RegionKind.PUBLIC):
        r = rr[kind.value]
        regions.append(Region(
            kind.value, kind,
            CapacityVector(_int(rng, r["memory_gb"]) * 1024, _int(rng, r["cpu"]), _int(rng, r["storage"])),
            _int(rng, r["delay"]),
        ))
    links = []
    for a in regions:
        for b in regions:
            if a is b:
                continue
            # a link is as slow/narrow as the farther of its two regions
            far = max(a.kind, b.kind, key=_RANK.get).value
            links.append(NetLink(a.id, b.id, _int(rng, rr[far]["delay"]), _int(rng, rr[far]["bandwidth"])))
    topology = Topology(tuple(regions), tuple(links), int(ranges.get("max_path_hops", 2)))

    mr = ranges["microservice"]
    n = int(mr.get("count", 5))
    ms = tuple(
        Microservice(
            f"m{i + 1}",
            CapacityVector(_int(rng, mr["memory"]), _int(rng, mr["cpu"]), _int(rng, mr["storage"])),
            _float(rng, mr["work_per_request"]),
            _float(rng, mr["request_size"]),
        )
        for i in range(n)
    )
    max_delay = float(ranges.get("max_delay", 100))
    app_links = tuple(
        AppLink(ms[i].id, ms[i + 1].id, max_delay, _int(rng, mr["max_throughput"])) for i in range(n - 1)
    )
    return topology, Application(ms, app_links, ms[0].id)
