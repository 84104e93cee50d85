from decimal import Decimal

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from vfogmatch.errors import ConfigurationError
from vfogmatch.scenario import (
    ScenarioConfig,
    build_instance,
    generate_fleet,
    generate_requests,
    package_order,
)

seeds = st.integers(0, 2**64 - 1)


def test_empty_request_list():
    assert generate_requests(ScenarioConfig(request_count=0)) == []


@given(seeds)
def test_default_requests_in_range(seed):
    reqs = generate_requests(ScenarioConfig(seed=seed))
    assert len(reqs) == 50
    assert all(100 <= r.demand <= 300 for r in reqs)
    assert all(0 <= r.software < 10 for r in reqs)
    assert [r.id for r in reqs] == list(range(50))


@given(seeds, st.decimals(min_value=Decimal("0.0001"), max_value=Decimal("1"), places=4))
def test_rate_is_exactly_proportional(seed, alpha):
    for r in generate_requests(ScenarioConfig(seed=seed, alpha=alpha, request_count=10)):
        assert r.data_rate == alpha * r.demand
        assert r.data_rate > 0


def test_mean_demand_over_many_seeds():
    # 1000 seeds x 50 requests; sample mean of U{100..300} is 200 with sd ~0.26
    total = sum(r.demand for s in range(1000) for r in generate_requests(ScenarioConfig(seed=s)))
    assert 198 <= total / 50_000 <= 202


def test_demand_histogram_is_uniform():
    cfg = ScenarioConfig(request_count=100_000, seed=12345)
    demands = np.array([r.demand for r in generate_requests(cfg)])
    counts = np.bincount(demands - 100, minlength=201)
    assert len(counts) == 201
    assert stats.chisquare(counts).pvalue > 0.01
    sw = np.bincount([r.software for r in generate_requests(cfg)], minlength=10)
    assert stats.chisquare(sw).pvalue > 0.01


def test_bad_demand_range():
    with pytest.raises(ConfigurationError):
        generate_requests(ScenarioConfig(demand_range_mhz=(300, 100)))


@pytest.mark.parametrize("k", [-1, 11])
def test_bad_package_count(k):
    with pytest.raises(ConfigurationError):
        generate_fleet(ScenarioConfig(packages_per_vehicle=k))


def test_k_zero_and_full_library():
    assert all(v.installed == frozenset() for v in generate_fleet(ScenarioConfig(packages_per_vehicle=0)))
    full = frozenset(range(10))
    assert all(v.installed == full for v in generate_fleet(ScenarioConfig(packages_per_vehicle=10)))


@given(seeds)
def test_fleets_nest_in_k(seed):
    fleets = [generate_fleet(ScenarioConfig(seed=seed, packages_per_vehicle=k)) for k in range(11)]
    for k in range(10):
        for small, big in zip(fleets[k], fleets[k + 1]):
            assert len(small.installed) == k
            assert small.installed < big.installed


@given(seeds, st.integers(0, 40))
def test_package_order_is_a_permutation(seed, vehicle):
    order = package_order(ScenarioConfig(seed=seed), vehicle)
    assert sorted(order) == list(range(10))


def test_single_package_fleets_cover_library():
    covered = 0
    for seed in range(500):
        fleet = generate_fleet(ScenarioConfig(seed=seed, packages_per_vehicle=1))
        covered += set().union(*(v.installed for v in fleet)) == set(range(10))
    assert covered >= 495


def test_fleet_changes_with_seed():
    a = generate_fleet(ScenarioConfig(seed=1))
    b = generate_fleet(ScenarioConfig(seed=2))
    assert a != b


@given(seeds, st.integers(0, 10))
def test_build_is_deterministic(seed, k):
    cfg = ScenarioConfig(seed=seed, packages_per_vehicle=k)
    assert build_instance(cfg) == build_instance(cfg)


def test_default_instance_shape():
    inst = build_instance(ScenarioConfig())
    assert len(inst.requests) == 50 and len(inst.vehicles) == 20
    assert inst.software_library_size == 10
    assert all(v.capacity == 240 and v.energy_per_mhz == pytest.approx(0.015) for v in inst.vehicles)


def test_seed_must_fit_u64():
    with pytest.raises(ConfigurationError):
        build_instance(ScenarioConfig(seed=2**64))


def test_instance_is_immutable():
    inst = build_instance(ScenarioConfig(request_count=2))
    with pytest.raises(AttributeError):
        inst.requests = ()
