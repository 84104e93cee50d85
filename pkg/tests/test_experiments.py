import csv
import io
import math

import pytest

from vfogmatch.errors import ConfigurationError, InfeasibleInstanceError
from vfogmatch.experiments import (
    SWEEP_COLUMNS,
    SweepConfig,
    SweepRow,
    baseline_cloud_only,
    plateau_k,
    rows_to_csv,
    run_sweep,
    summarize,
    summary_to_csv,
)
from vfogmatch.scenario import ScenarioConfig, build_instance
from vfogmatch.solvers import solve_exact

SMALL = ScenarioConfig(request_count=12, vehicle_count=5)


def _row(k, seed, saving, power=100.0):
    return SweepRow(k, seed, power, 1.0, power - 1.0, 10, 5, saving, 20.0, "exact", True, 1.0)


def test_baseline_has_no_fog_work():
    inst = build_instance(ScenarioConfig(seed=3))
    m = baseline_cloud_only(inst)
    assert m.fog_workload == 0
    assert m.processing_power == pytest.approx(sum(r.demand for r in inst.requests) * 0.075, rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_baseline_equals_exact_at_k0(seed):
    inst = build_instance(ScenarioConfig(seed=seed, packages_per_vehicle=0))
    assert baseline_cloud_only(inst).total_power == solve_exact(inst).objective


def test_baseline_infeasible():
    with pytest.raises(InfeasibleInstanceError):
        baseline_cloud_only(build_instance(ScenarioConfig(alpha="0.05")))


def test_k0_row_is_baseline():
    (row,) = run_sweep(SweepConfig(base=SMALL, k_values=[0], seeds=[5]))
    assert row.saving_vs_cloud_only_pct == 0.0
    assert row.cloud_workload_reduction_pct == 0.0
    assert row.fog_workload_mhz == 0


def test_small_sweep_properties():
    cfg = SweepConfig(base=SMALL, seeds=(0, 1, 2))
    rows = run_sweep(cfg)
    assert [(r.k, r.seed) for r in rows] == [(k, s) for k in range(11) for s in (0, 1, 2)]
    for seed in (0, 1, 2):
        series = [r.total_power_w for r in rows if r.seed == seed]
        assert all(b <= a + 1e-9 * a for a, b in zip(series, series[1:]))
        assert plateau_k(rows, seed) is not None
    assert all(r.optimal and not r.failed for r in rows)
    for r in rows:
        demand = build_instance(SMALL.with_(seed=r.seed)).total_demand
        assert r.cloud_workload_mhz + r.fog_workload_mhz == demand
        assert r.cloud_workload_reduction_pct <= 100 * 5 * 240 / demand + 1e-9


def test_jobs_do_not_change_output():
    cfg = SweepConfig(base=SMALL, k_values=range(0, 4), seeds=(3, 4))
    one = rows_to_csv(run_sweep(cfg))
    two = rows_to_csv(run_sweep(SweepConfig(base=SMALL, k_values=range(0, 4), seeds=(3, 4), jobs=2)))
    strip = lambda text: [line.rsplit(",", 1)[0] for line in text.splitlines()]  # drop runtime_ms
    assert strip(one) == strip(two)


def test_csv_header_and_format():
    text = rows_to_csv([_row(3, 1, 12.3456789)])
    lines = text.splitlines()
    assert lines[0] == ",".join(SWEEP_COLUMNS)
    fields = dict(zip(SWEEP_COLUMNS, next(csv.reader(io.StringIO(lines[1])))))
    assert fields["saving_vs_cloud_only_pct"] == "12.3457"
    assert fields["optimal"] == "true"


def test_failed_cell_is_recorded():
    rows = run_sweep(SweepConfig(base=SMALL.with_(alpha="0.9"), k_values=[0, 1], seeds=[0]))
    assert all(r.failed and "Infeasible" in r.error for r in rows)
    assert math.isnan(rows[0].total_power_w)
    assert rows_to_csv(rows).splitlines()[1].split(",")[5] == ""


def test_summarize_examples():
    single = summarize([_row(10, 0, 20.0)])
    assert single[10]["mean"] == single[10]["min"] == single[10]["max"]
    both = summarize([_row(10, 0, 20.0), _row(10, 1, 30.0)])
    assert both[10]["mean"]["saving_vs_cloud_only_pct"] == 25.0
    assert both[10]["min"]["saving_vs_cloud_only_pct"] == 20.0
    text = summary_to_csv(both)
    assert text.splitlines()[0].startswith("k,stat,total_power_w")
    assert len(text.splitlines()) == 4


def test_summarize_empty():
    with pytest.raises(ConfigurationError):
        summarize([])


def test_plateau():
    rows = [_row(k, 0, 0, p) for k, p in enumerate([9, 7, 5, 5, 5])]
    assert plateau_k(rows, 0) == 2
    assert plateau_k(rows, 1) is None


@pytest.mark.parametrize(
    "kw", [{"k_values": []}, {"seeds": []}, {"seeds": [1, 1]}, {"solver": "x"}, {"k_values": [11]}]
)
def test_bad_sweep_config(kw):
    with pytest.raises(ConfigurationError):
        SweepConfig(**kw)
