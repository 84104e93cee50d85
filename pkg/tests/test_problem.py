from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from vfogmatch.problem import (
    CLOUD_CAPACITY,
    LINK_CAPACITY,
    SOFTWARE_MISMATCH,
    VEHICLE_CAPACITY,
    Assignment,
    check_feasible,
    feasible_targets,
    metrics,
    objective,
)
from vfogmatch.scenario import Instance, Request, ScenarioConfig, Vehicle, build_instance
from vfogmatch.topology import CLOUD, CapacityGroup, CloudSpec, PathModel, VehicleTarget

from strategies import hand_instance, small_instances


def test_no_packages_means_cloud_only():
    inst = build_instance(ScenarioConfig(packages_per_vehicle=0))
    assert all(feasible_targets(r, inst) == [CLOUD] for r in inst.requests)


def test_oversized_request_excluded():
    inst = hand_instance([(300, 3)], [(240, {3})])
    assert feasible_targets(inst.requests[0], inst) == [CLOUD]


def test_matching_vehicle_included():
    inst = hand_instance([(120, 3)], [(240, {3, 7}), (240, {1})])
    assert feasible_targets(inst.requests[0], inst) == [VehicleTarget(0), CLOUD]


@pytest.mark.parametrize("seed", range(5))
def test_all_cloud_default_is_feasible(seed):
    inst = build_instance(ScenarioConfig(seed=seed))
    assert check_feasible(Assignment.all_cloud(50), inst) == []


def test_vehicle_overload_reported():
    inst = hand_instance([(150, 0), (150, 0)], [(240, {0})])
    v = check_feasible(Assignment((VehicleTarget(0), VehicleTarget(0))), inst)
    assert [(x.kind, x.load, x.limit) for x in v] == [(VEHICLE_CAPACITY, 300, 240)]


def test_wireless_group_overflow():
    # 25 requests of 2500 MHz at 0.008 Mbps/MHz = 20 Mbps each: 500 Mbps to the fog.
    # RSU raised so only the 450 Mbps wireless limit can bind.
    base = PathModel.default()
    groups = tuple(
        CapacityGroup(g.name, g.devices, Decimal(10**6) if g.name in ("rsu", "access_point") else g.capacity)
        for g in base.capacity_groups
    )
    paths = PathModel(base.shared_devices, base.fog_devices, base.cloud_devices, groups)
    reqs = tuple(Request(i, 2500, Decimal("20"), 0) for i in range(25))
    fleet = tuple(Vehicle(i, 2500, 37.5, frozenset({0})) for i in range(25))
    inst = Instance(reqs, fleet, paths, CloudSpec(), 1)
    v = check_feasible(Assignment(tuple(VehicleTarget(i) for i in range(25))), inst)
    assert [(x.kind, x.subject, x.load, x.limit) for x in v] == [(LINK_CAPACITY, "wireless", 500, 450)]


def test_software_mismatch_and_cloud_overflow():
    inst = hand_instance([(200, 1), (200, 0)], [(240, {0})], cloud=CloudSpec(server_count=0))
    kinds = {x.kind for x in check_feasible(Assignment((VehicleTarget(0), CLOUD)), inst)}
    assert kinds == {SOFTWARE_MISMATCH, CLOUD_CAPACITY}


def test_objective_examples():
    assert objective(Assignment(()), hand_instance([], [])) == 0.0
    inst = hand_instance([(200, 0)], [(240, {0})])
    assert objective(Assignment((CLOUD,)), inst) == pytest.approx(15.728, rel=1e-12)
    assert objective(Assignment((VehicleTarget(0),)), inst) == pytest.approx(3.291, rel=1e-12)


def test_wrong_length_rejected():
    inst = hand_instance([(200, 0)], [])
    with pytest.raises(ValueError):
        objective(Assignment(()), inst)
    with pytest.raises(ValueError):
        check_feasible(Assignment((VehicleTarget(3),)), inst)


@st.composite
def instance_and_assignment(draw):
    inst = draw(small_instances(max_requests=8, max_vehicles=4))
    nv = len(inst.vehicles)
    targets = [
        draw(st.sampled_from([CLOUD] + [VehicleTarget(v) for v in range(nv)])) for _ in inst.requests
    ]
    return inst, Assignment(tuple(targets))


@given(instance_and_assignment())
def test_objective_is_separable(pair):
    inst, a = pair
    total = objective(a, inst)
    parts = 0.0
    for req, t in zip(inst.requests, a.targets):
        single = Instance((Request(0, req.demand, req.data_rate, req.software),), inst.vehicles,
                          inst.paths, inst.cloud, inst.software_library_size)
        parts += objective(Assignment((t,)), single)
    assert total == pytest.approx(parts, rel=1e-12, abs=1e-12)


@given(instance_and_assignment())
def test_workloads_partition_demand(pair):
    inst, a = pair
    m = metrics(a, inst)
    assert m.cloud_workload + m.fog_workload == inst.total_demand
    assert m.cloud_request_count + m.fog_request_count == len(inst.requests)
    assert m.total_power == pytest.approx(m.network_power + m.processing_power, rel=1e-12)
    assert m.total_power == pytest.approx(objective(a, inst), rel=1e-12)


def _independent_check(inst, a) -> bool:
    """Constraint sums written out again, without the library's helpers."""
    load = {}
    fog_rate = cloud_rate = Decimal(0)
    cloud_mhz = 0
    for req, t in zip(inst.requests, a.targets):
        if t == CLOUD:
            cloud_mhz += req.demand
            cloud_rate += req.data_rate
        else:
            if req.software not in inst.vehicles[t.vehicle].installed:
                return False
            load[t.vehicle] = load.get(t.vehicle, 0) + req.demand
            fog_rate += req.data_rate
    if any(load[v] > inst.vehicles[v].capacity for v in load):
        return False
    # default groups: rsu sees everything, ap and wireless fog only, transport cloud only
    limits = {g.name: g.capacity for g in inst.paths.capacity_groups}
    return (
        fog_rate + cloud_rate <= limits["rsu"]
        and fog_rate <= limits["access_point"]
        and fog_rate <= limits["wireless"]
        and cloud_rate <= limits["cloud_transport"]
        and cloud_mhz <= inst.cloud.server_count * inst.cloud.server_capacity
    )


@given(instance_and_assignment())
def test_double_entry_feasibility(pair):
    inst, a = pair
    assert (check_feasible(a, inst) == []) == _independent_check(inst, a)


@given(instance_and_assignment(), st.data())
def test_moving_to_cloud_never_breaks_fog_side(pair, data):
    inst, a = pair
    fog = [i for i, t in enumerate(a.targets) if t != CLOUD]
    if check_feasible(a, inst) or not fog:
        return
    i = data.draw(st.sampled_from(fog))
    moved = Assignment(tuple(CLOUD if j == i else t for j, t in enumerate(a.targets)))
    fog_kinds = {SOFTWARE_MISMATCH, VEHICLE_CAPACITY}
    after = check_feasible(moved, inst)
    assert not any(v.kind in fog_kinds for v in after)
    assert not any(v.kind == LINK_CAPACITY and v.subject in ("access_point", "wireless") for v in after)


@given(instance_and_assignment())
def test_assignment_text_round_trip(pair):
    _, a = pair
    assert Assignment.from_text("request_id,target\n" + a.to_text()) == a


@pytest.mark.parametrize("text", ["0,cloud\n0,cloud\n", "1,cloud\n", "0;cloud\n", "0,bus:1\n"])
def test_malformed_assignment_text(text):
    with pytest.raises(ValueError):
        Assignment.from_text(text)
