import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogflow.dsr import compute_split
from fogflow.mea import MeaHost, MeaInstance, MeaWeights, mea_iteration, objective, solve_mea

from helpers import chain

LB = MeaWeights(alpha=0, beta=0, gamma=1)


def _inst(caps, prices=None, cpu=1000.0, bw=10.0):
    prices = prices or [1.0] * len(caps)
    hosts = tuple(MeaHost(f"h{i}", c, p) for i, (c, p) in enumerate(zip(caps, prices)))
    return MeaInstance(hosts, cpu, bw)


def _vec(split, inst):
    return np.array([split.get(h.region) for h in inst.hosts])


def test_equal_hosts_split_evenly():
    assert solve_mea(_inst([3000, 3000]), LB).fractions == {"h0": 0.5, "h1": 0.5}


def test_unequal_hosts_equalise_utilisation():
    split = solve_mea(_inst([4000, 2000]), LB)
    assert split.get("h0") == pytest.approx(2 / 3, abs=1 / 200)
    assert split.get("h1") == pytest.approx(1 / 3, abs=1 / 200)


def test_single_host_takes_everything():
    assert solve_mea(_inst([1234]), LB).fractions == {"h0": 1.0}


def test_zero_requests_split_uniformly():
    hosts = [MeaHost("a", 1000, 1), MeaHost("b", 3000, 1), MeaHost("c", 5000, 5)]
    split, inst = mea_iteration(hosts, 0, list(chain([100, 100]).microservices), LB)
    assert split.fractions == pytest.approx({"a": 1 / 3, "b": 1 / 3, "c": 1 / 3})
    assert inst.cpu_demand_total == 0


def test_matches_proportional_split_on_symmetric_hosts():
    hosts = [MeaHost("edge", 2000, 1), MeaHost("central", 2000, 1)]
    split, _ = mea_iteration(hosts, 50, list(chain([100, 100], work=[10, 20]).microservices), LB)
    assert split.fractions == compute_split(["edge", "central"], {"edge": 2000, "central": 2000}).fractions


def test_beta_must_be_zero():
    with pytest.raises(ValueError):
        MeaWeights(alpha=0, beta=1, gamma=1)


def test_public_preference_follows_the_grid_oracle():
    # alpha < 0 rewards sending bytes to the pricier public host
    hosts = [MeaHost("edge", 2000, 1), MeaHost("central", 3500, 1), MeaHost("public", 5000, 5)]
    split, inst = mea_iteration(hosts, 100, list(chain([100, 100], work=[20, 20]).microservices),
                                MeaWeights(-1, 0, 1))
    got = objective(inst, MeaWeights(-1, 0, 1), _vec(split, inst)[None, :])[0]
    assert got <= _dense_best(inst, MeaWeights(-1, 0, 1)) + 1e-9
    assert split.get("public") == 1.0


def _dense_best(inst, weights, grid=200):
    n = len(inst.hosts)
    pts = [c for c in itertools.product(range(grid + 1), repeat=n - 1) if sum(c) <= grid]
    s = np.array([list(c) + [grid - sum(c)] for c in pts], dtype=float) / grid
    return float(objective(inst, weights, s).min())


@st.composite
def instances(draw):
    n = draw(st.integers(2, 3))
    caps = draw(st.lists(st.floats(100, 8000), min_size=n, max_size=n))
    prices = draw(st.lists(st.sampled_from([1.0, 5.0]), min_size=n, max_size=n))
    inst = _inst(caps, prices, cpu=draw(st.floats(0, 10_000)), bw=draw(st.floats(0, 200)))
    weights = MeaWeights(alpha=draw(st.sampled_from([-1.0, 0.0, 0.01, 1.0])), beta=0, gamma=1)
    return inst, weights


def _lipschitz(inst, w):
    # sup-norm Lipschitz constant of the objective on the simplex, w.r.t. L1 moves
    price = max(h.bandwidth_price for h in inst.hosts)
    return abs(w.alpha) * inst.bw_demand_total * price + w.gamma * inst.cpu_demand_total / min(
        h.cpu_capacity for h in inst.hosts)


@given(instances())
@settings(max_examples=80, deadline=None)
def test_grid_search_is_near_dense_optimum(case):
    inst, w = case
    split = solve_mea(inst, w, grid=20)
    s = _vec(split, inst)
    assert abs(s.sum() - 1) <= 1e-9 and (s >= 0).all()
    got = objective(inst, w, s[None, :])[0]
    best = _dense_best(inst, w)
    # one coarse step in each of two coordinates bounds the gap
    assert got <= best + _lipschitz(inst, w) * 2 / 20 + 1e-9


@given(instances())
@settings(max_examples=60, deadline=None)
def test_utilisation_no_worse_than_proportional(case):
    inst, _ = case
    caps = np.array([h.cpu_capacity for h in inst.hosts])
    s = _vec(solve_mea(inst, LB), inst)
    prop = caps / caps.sum()
    util = lambda x: inst.cpu_demand_total * np.max(x / caps)
    bound = util(prop) + inst.cpu_demand_total / caps.min() / 20
    assert util(s) <= bound + 1e-9


def test_deterministic_tie_break():
    inst = _inst([1000, 1000, 1000], cpu=0.0, bw=5.0)
    a = solve_mea(inst, MeaWeights(alpha=0.0, beta=0, gamma=1))
    b = solve_mea(inst, MeaWeights(alpha=0.0, beta=0, gamma=1))
    assert a.fractions == b.fractions


@given(st.lists(st.floats(100, 8000), min_size=2, max_size=4), st.floats(1, 10_000))
@settings(max_examples=60, deadline=None)
def test_load_balancing_split_is_near_closed_form(caps, demand):
    inst = _inst(caps, cpu=demand, bw=0.0)
    s = _vec(solve_mea(inst, LB), inst)
    exact = np.array(caps) / sum(caps)
    assert np.max(np.abs(s - exact)) <= 1 / 20 + 1e-9
