import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fogflow.domain import Deployment
from fogflow.dsr import (
    AllSaturated,
    ControllerState,
    Decision,
    DsrConfig,
    OpCounter,
    SplitConfig,
    compute_split,
    dsr_step,
    init_controller,
    is_workload_shift_required,
)
from fogflow.placement import PlacementConfig, place

from helpers import calibration_app, calibration_topology

CFG = DsrConfig(psi=5.0, upper_pct=90, lower_pct=60, q_pct=10)
HOSTS = ("edge", "central", "public")
DEP = Deployment(instances=(), replicas_array=("m1",), array_hosts=HOSTS, base_host="edge")


def _state(k=1, last=Decision.NONE, last_requests=0):
    return ControllerState(HOSTS[:k], HOSTS, HOSTS, last, last_requests)


def test_thresholds_are_fractions_of_psi():
    assert CFG.upper == pytest.approx(4.5)
    assert CFG.lower == pytest.approx(3.0)


def test_activate_above_upper():
    assert is_workload_shift_required(_state(), 0.95 * CFG.psi, 50, CFG) is Decision.ACTIVATE


def test_deactivate_held_back_after_activate():
    st_ = _state(2, Decision.ACTIVATE, 100)
    assert is_workload_shift_required(st_, 0.5 * CFG.psi, 95, CFG) is Decision.NONE
    assert is_workload_shift_required(st_, 0.5 * CFG.psi, 89, CFG) is Decision.DEACTIVATE


def test_between_thresholds_is_none():
    for last in Decision:
        assert is_workload_shift_required(_state(2, last, 100), 0.75 * CFG.psi, 10, CFG) is Decision.NONE


def test_boundaries_are_inclusive():
    assert is_workload_shift_required(_state(), CFG.upper, 1, CFG) is Decision.ACTIVATE
    assert is_workload_shift_required(_state(), CFG.lower, 1, CFG) is Decision.DEACTIVATE


def test_split_examples():
    assert compute_split(["edge", "central"], {"edge": 2000, "central": 2000}).fractions == {"edge": 0.5, "central": 0.5}
    assert compute_split(["edge", "public"], {"edge": 3000, "public": 1000}).fractions == {"edge": 0.75, "public": 0.25}
    assert compute_split(["edge"], {"edge": 10}).fractions == {"edge": 1.0}


def test_split_of_saturated_hosts_raises():
    with pytest.raises(AllSaturated):
        compute_split(["edge", "central"], {"edge": 0, "central": 0})


def test_split_string_form():
    assert str(SplitConfig({"edge": 0.75, "public": 0.25})) == "edge:0.75;public:0.25"
    with pytest.raises(ValueError):
        SplitConfig({"edge": 0.7})


@given(st.lists(st.floats(0, 10_000), min_size=1, max_size=5))
def test_split_is_proportional(res):
    if sum(res) <= 0:
        return
    hosts = [f"h{i}" for i in range(len(res))]
    split = compute_split(hosts, dict(zip(hosts, res))).fractions
    assert abs(sum(split.values()) - 1) <= 1e-9
    for i, a in enumerate(hosts):
        for j, b in enumerate(hosts):
            assert abs(split[a] * res[j] - split[b] * res[i]) <= 1e-9 * max(1.0, res[i], res[j])


RES = {"edge": 2000.0, "central": 3000.0, "public": 5000.0}


def test_step_activates_next_host():
    state, split, decision = dsr_step(_state(2), DEP, 4.8, 100, RES, CFG)
    assert decision is Decision.ACTIVATE
    assert state.active_arrays == HOSTS
    assert split.fractions == pytest.approx({"edge": 0.2, "central": 0.3, "public": 0.5})
    assert state.last_requests == 100


def test_step_with_everything_active_keeps_the_set():
    state, split, decision = dsr_step(_state(3), DEP, 4.8, 100, RES, CFG)
    assert decision is Decision.ACTIVATE
    assert state.active_arrays == HOSTS
    assert set(split.fractions) == set(HOSTS)


def test_edge_array_is_never_removed():
    state, split, decision = dsr_step(_state(1), DEP, 0.1, 5, RES, CFG)
    assert decision is Decision.DEACTIVATE
    assert state.active_arrays == ("edge",)
    assert split.fractions == {"edge": 1.0}


def test_saturation_carries_the_new_state():
    with pytest.raises(AllSaturated) as info:
        dsr_step(_state(1), DEP, 4.8, 100, {"edge": 0.0, "central": 0.0, "public": 0.0}, CFG)
    assert info.value.state.active_arrays == ("edge", "central")
    assert info.value.decision is Decision.ACTIVATE


def test_controller_follows_region_order():
    topo, app = calibration_topology(), calibration_app()
    dep = place(app, topo, PlacementConfig())
    state = init_controller(topo, dep)
    assert state.active_arrays == ("edge",)
    assert state.host_order == ("edge", "central", "public")


def test_capture_on_activate_only():
    cfg = DsrConfig(psi=5.0, capture="activate")
    state, _, _ = dsr_step(_state(2, Decision.ACTIVATE, 100), DEP, 0.1, 50, RES, cfg)
    assert state.last_decision is Decision.DEACTIVATE
    assert state.last_requests == 100
    state2, _, _ = dsr_step(_state(2, Decision.ACTIVATE, 100), DEP, 0.1, 50, RES, CFG)
    assert state2.last_requests == 50


@given(st.lists(st.tuples(st.floats(0, 6), st.integers(0, 300)), max_size=60))
@settings(max_examples=150)
def test_active_set_is_a_prefix_and_moves_lifo(trace):
    state = _state()
    for proc, req in trace:
        before = state.active_arrays
        state, split, decision = dsr_step(state, DEP, proc, req, RES, CFG)
        assert state.active_arrays == HOSTS[:len(state.active_arrays)]
        if decision is Decision.ACTIVATE and len(before) < 3:
            assert state.active_arrays == before + (HOSTS[len(before)],)
        elif decision is Decision.DEACTIVATE and len(before) > 1:
            assert state.active_arrays == before[:-1]
        else:
            assert state.active_arrays == before
        assert set(split.fractions) == set(state.active_arrays)


@given(st.integers(20, 500), st.lists(st.floats(0, 6), max_size=40), st.data())
def test_no_deactivate_while_requests_stay_high(n, procs, data):
    state = ControllerState(HOSTS[:2], HOSTS, HOSTS, Decision.ACTIVATE, n)
    for proc in procs:
        # the reference level moves with every later Activate
        floor = state.last_requests * (1 - CFG.q_pct / 100)
        req = data.draw(st.integers(int(floor) + 1, int(floor) + 1 + 2 * n))
        state, _, decision = dsr_step(state, DEP, proc, req, RES, CFG)
        assert decision is not Decision.DEACTIVATE


def _ops(n_hosts: int) -> int:
    hosts = tuple(f"h{i:03d}" for i in range(n_hosts))
    dep = Deployment(instances=(), replicas_array=("m",), array_hosts=hosts, base_host=hosts[0])
    state = ControllerState(hosts, hosts, hosts)
    counter = OpCounter()
    dsr_step(state, dep, 3.5, 10, {h: 100.0 + i for i, h in enumerate(hosts)}, CFG, counter)
    return counter.ops


def test_step_work_is_linear_in_hosts():
    assert _ops(1) == 3
    assert _ops(10) == 21
    assert _ops(100) == 201
