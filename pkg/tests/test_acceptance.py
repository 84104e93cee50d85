"""The eight acceptance criteria at their stated tolerances.

Each test records a one-line verdict that is printed in the pytest terminal
summary under "acceptance criteria".  The default sweep (k = 0..10, ten
seeds, exact solver) is computed once per module.
"""
import random
import time

import numpy as np
import pytest

from vfogmatch.experiments import SweepConfig, plateau_k, run_sweep, summarize
from vfogmatch.problem import Assignment, check_feasible, metrics
from vfogmatch.scenario import ScenarioConfig, build_instance
from vfogmatch.solvers import enumerate_candidates, solve_brute, solve_exact

pytestmark = pytest.mark.slow

SEEDS = range(10)
REL = 1e-9


def rel_close(a, b):
    return abs(a - b) <= REL * max(1.0, abs(a), abs(b))


def oracle_instance(t):
    rnd = random.Random(t)
    size = rnd.randint(1, 4)
    cfg = ScenarioConfig(
        request_count=rnd.randint(1, 8),
        vehicle_count=rnd.randint(1, 3),
        software_library_size=size,
        packages_per_vehicle=rnd.randint(0, size),
        demand_range_mhz=(rnd.choice([10, 50, 100]), rnd.choice([150, 300])),
        vehicle_capacity=rnd.choice([100, 240, 400]),
        seed=t,
    )
    return build_instance(cfg)


@pytest.fixture(scope="module")
def oracle_runs():
    runs = []
    elapsed = 0.0
    for t in range(200):
        inst = oracle_instance(t)
        t0 = time.perf_counter()
        exact = solve_exact(inst)
        brute = solve_brute(inst)
        elapsed += time.perf_counter() - t0
        runs.append((inst, exact, brute))
    return runs, elapsed


@pytest.fixture(scope="module")
def k0_runs():
    return [build_instance(ScenarioConfig(seed=s, packages_per_vehicle=0)) for s in SEEDS]


@pytest.fixture(scope="module")
def sweep_rows():
    return run_sweep(SweepConfig())


@pytest.fixture(scope="module")
def k4_runs():
    out = []
    for s in SEEDS:
        inst = build_instance(ScenarioConfig(seed=s, packages_per_vehicle=4))
        out.append((inst, solve_exact(inst, time_budget=60.0)))
    return out


@pytest.fixture(scope="module")
def scaling_runs():
    out = []
    for t in range(60):
        inst = oracle_instance(1000 + t)
        out.append((inst, inst.scaled_power(7.0)))
    default = build_instance(ScenarioConfig(seed=0))
    out.append((default, default.scaled_power(7.0)))
    return [(a, b, solve_exact(a), solve_exact(b)) for a, b in out]


def test_c1_oracle_equivalence(oracle_runs, criterion):
    runs, elapsed = oracle_runs
    mismatched = [i for i, (_, e, b) in enumerate(runs) if not (e.optimal and rel_close(e.objective, b.objective))]
    ok = not mismatched and elapsed < 10.0
    criterion(1, ok, f"{len(runs) - len(mismatched)}/200 exact == brute, {elapsed:.2f}s total (< 10s)")
    assert not mismatched
    assert elapsed < 10.0


def test_c2_k0_is_all_cloud(k0_runs, sweep_rows, criterion):
    all_cloud = True
    for inst in k0_runs:
        sol = solve_exact(inst)
        all_cloud &= sol.assignment == Assignment.all_cloud(len(inst.requests))
    savings = [r.saving_vs_cloud_only_pct for r in sweep_rows if r.k == 0]
    ok = all_cloud and savings == [0.0] * 10
    criterion(2, ok, f"all-cloud at k=0 for 10 seeds: {all_cloud}; savings {set(savings)}")
    assert all_cloud
    assert savings == [0.0] * 10


def test_c3_monotone_with_plateau(sweep_rows, criterion):
    violations = []
    plateaus = {}
    for s in SEEDS:
        series = sorted((r.k, r.total_power_w) for r in sweep_rows if r.seed == s)
        assert [k for k, _ in series] == list(range(11))
        for (k0, p0), (k1, p1) in zip(series, series[1:]):
            if p1 > p0 + REL * max(1.0, p0):
                violations.append((s, k0, k1))
        plateaus[s] = plateau_k(sweep_rows, s)
    early = sum(1 for k in plateaus.values() if k is not None and k <= 5)
    ok = not violations and early >= 8
    criterion(3, ok, f"non-increasing in k for all seeds: {not violations}; plateau k* <= 5 for {early}/10 "
                     f"(k* per seed {list(plateaus.values())})")
    assert not violations
    assert early >= 8


def test_c4_power_saving_band(sweep_rows, criterion):
    mean = summarize(sweep_rows)[10]["mean"]["saving_vs_cloud_only_pct"]
    ok = 20.0 <= mean <= 35.0
    criterion(4, ok, f"mean saving at k=10 = {mean:.2f}% (band [20, 35])")
    assert ok


def test_c5_cloud_workload_band(sweep_rows, criterion):
    mean = summarize(sweep_rows)[10]["mean"]["cloud_workload_reduction_pct"]
    ok = 38.0 <= mean <= 48.0
    criterion(5, ok, f"mean cloud-workload reduction at k=10 = {mean:.2f}% (band [38, 48])")
    assert ok


def test_c6_default_solve_time(k4_runs, criterion):
    proven = [sol.optimal and sol.runtime < 60.0 for _, sol in k4_runs]
    worst = max(sol.runtime for _, sol in k4_runs)
    criterion(6, all(proven), f"k=4 default proven for {sum(proven)}/10 seeds, slowest {worst:.2f}s (< 60s)")
    assert all(proven)


def _ranking_preserved(a, b):
    """Feasible candidates sorted by cost in ``a`` stay sorted in ``b``."""
    costs_a, costs_b = [], []
    for (_, _, ca, fa), (_, _, cb, fb) in zip(enumerate_candidates(a), enumerate_candidates(b)):
        if not np.array_equal(fa, fb):
            return False
        costs_a.append(ca[fa])
        costs_b.append(cb[fb])
    ca, cb = np.concatenate(costs_a), np.concatenate(costs_b)
    order = np.argsort(ca, kind="stable")
    ranked = cb[order]
    return bool(np.all(np.diff(ranked) >= -REL * np.maximum(1.0, np.abs(ranked[1:]))))


def test_c7_scaling_invariance(scaling_runs, criterion):
    bad_scale, bad_rank = [], []
    for i, (a, b, sa, sb) in enumerate(scaling_runs):
        if not rel_close(sb.objective, 7.0 * sa.objective):
            bad_scale.append(i)
        if len(a.requests) <= 8 and not _ranking_preserved(a, b):
            bad_rank.append(i)
    ok = not bad_scale and not bad_rank
    criterion(7, ok, f"x7 scaling: objective x7 on {len(scaling_runs) - len(bad_scale)}/{len(scaling_runs)}, "
                     f"candidate ranking kept on all brute-sized instances: {not bad_rank}")
    assert not bad_scale
    assert not bad_rank


def test_c8_conservation_and_feasibility(oracle_runs, k0_runs, sweep_rows, k4_runs, scaling_runs, criterion):
    checked, bad = 0, []

    def check(inst, assignment, label):
        nonlocal checked
        checked += 1
        m = metrics(assignment, inst)
        if check_feasible(assignment, inst) or m.cloud_workload + m.fog_workload != inst.total_demand:
            bad.append(label)

    for inst, exact, brute in oracle_runs[0]:
        check(inst, exact.assignment, "oracle exact")
        check(inst, brute.assignment, "oracle brute")
    for inst in k0_runs:
        check(inst, solve_exact(inst).assignment, "k0")
    for row in sweep_rows:
        if row.failed:
            bad.append(f"sweep k={row.k} seed={row.seed} failed")
            continue
        inst = build_instance(ScenarioConfig(seed=row.seed, packages_per_vehicle=row.k))
        check(inst, row.assignment, f"sweep k={row.k} seed={row.seed}")
    for inst, sol in k4_runs:
        check(inst, sol.assignment, "k4")
    for a, b, sa, sb in scaling_runs:
        check(a, sa.assignment, "scaling")
        check(b, sb.assignment, "scaling x7")
    criterion(8, not bad, f"{checked - len(bad)}/{checked} solutions feasible with workloads summing to demand")
    assert not bad
