"""Package-count sweeps: solve every (k, seed) cell and tabulate the metrics.

Within one seed the fleets are nested in k (the generator deals each
vehicle's packages from a fixed per-vehicle deck), so the k-1 optimum is
feasible at k and is handed to the exact solver as its starting incumbent.
"""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .errors import ConfigurationError, InfeasibleInstanceError, VFogError
from .problem import Assignment, Metrics, check_feasible, metrics
from .scenario import Instance, ScenarioConfig, build_instance
from .solvers import SOLVERS, solve

SWEEP_COLUMNS = (
    "k",
    "seed",
    "total_power_w",
    "network_power_w",
    "processing_power_w",
    "cloud_workload_mhz",
    "fog_workload_mhz",
    "saving_vs_cloud_only_pct",
    "cloud_workload_reduction_pct",
    "solver",
    "optimal",
    "runtime_ms",
)
# columns that get aggregated in the summary table
METRIC_COLUMNS = SWEEP_COLUMNS[2:9]


@dataclass(frozen=True)
class SweepConfig:
    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    k_values: tuple[int, ...] = tuple(range(11))
    seeds: tuple[int, ...] = tuple(range(10))
    solver: str = "exact"
    time_budget: float | None = 60.0
    node_budget: int | None = None
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "k_values", tuple(self.k_values))
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if not self.k_values:
            raise ConfigurationError("k_values must not be empty")
        if not self.seeds:
            raise ConfigurationError("seeds must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be distinct")
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        if any(k < 0 or k > self.base.software_library_size for k in self.k_values):
            raise ConfigurationError(
                f"k values must lie in 0..{self.base.software_library_size}"
            )
        if self.jobs < 1:
            raise ConfigurationError("jobs must be at least 1")


@dataclass(frozen=True)
class SweepRow:
    k: int
    seed: int
    total_power_w: float
    network_power_w: float
    processing_power_w: float
    cloud_workload_mhz: int
    fog_workload_mhz: int
    saving_vs_cloud_only_pct: float
    cloud_workload_reduction_pct: float
    solver: str
    optimal: bool
    runtime_ms: float
    error: str | None = None  # set when the cell failed; metrics are NaN then
    # the solved assignment, for re-checking; not part of the CSV
    assignment: Assignment | None = field(default=None, compare=False, repr=False)

    @property
    def failed(self) -> bool:
        return self.error is not None


def baseline_cloud_only(instance: Instance) -> Metrics:
    """Metrics of sending every request to the central cloud."""
    forced = Assignment.all_cloud(len(instance.requests))
    problems = check_feasible(forced, instance)
    if problems:
        v = problems[0]
        raise InfeasibleInstanceError(
            f"all-cloud assignment is infeasible: {v.kind} on {v.subject} ({v.load} > {v.limit})"
        )
    return metrics(forced, instance)


def _percent_drop(value: float, reference: float) -> float:
    if reference == 0:
        return 0.0
    return 100.0 * (1.0 - value / reference)


def _failed_row(k, seed, solver, runtime_ms, error) -> SweepRow:
    nan = math.nan
    return SweepRow(k, seed, nan, nan, nan, None, None, nan, nan, solver, False, runtime_ms, error)


def _sweep_seed(config: SweepConfig, seed: int) -> list[SweepRow]:
    rows = []
    previous = None  # optimum for the previous (smaller) k; nested fleets keep it feasible
    last_k = None
    for k in sorted(config.k_values):
        scenario = config.base.with_(packages_per_vehicle=k, seed=seed)
        started = time.perf_counter()
        try:
            instance = build_instance(scenario)
            base = baseline_cloud_only(instance)
            warm = previous if last_k is not None and last_k <= k else None
            sol = solve(instance, config.solver, config.time_budget, config.node_budget, initial=warm)
        except VFogError as exc:
            elapsed = 1000.0 * (time.perf_counter() - started)
            rows.append(_failed_row(k, seed, config.solver, elapsed, f"{type(exc).__name__}: {exc}"))
            previous = None
            continue
        m = metrics(sol.assignment, instance)
        rows.append(
            SweepRow(
                k=k,
                seed=seed,
                total_power_w=m.total_power,
                network_power_w=m.network_power,
                processing_power_w=m.processing_power,
                cloud_workload_mhz=m.cloud_workload,
                fog_workload_mhz=m.fog_workload,
                saving_vs_cloud_only_pct=_percent_drop(m.total_power, base.total_power),
                cloud_workload_reduction_pct=_percent_drop(m.cloud_workload, base.cloud_workload),
                solver=sol.solver,
                optimal=sol.optimal,
                runtime_ms=1000.0 * sol.runtime,
                assignment=sol.assignment,
            )
        )
        previous, last_k = sol.assignment, k
    return rows


def run_sweep(config: SweepConfig) -> list[SweepRow]:
    """One row per (k, seed), ordered by k then seed whatever the job count."""
    if config.jobs > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, len(config.seeds))) as pool:
            per_seed = list(pool.map(_sweep_seed, [config] * len(config.seeds), config.seeds))
    else:
        per_seed = [_sweep_seed(config, seed) for seed in config.seeds]
    rows = [row for chunk in per_seed for row in chunk]
    rows.sort(key=lambda r: (r.k, r.seed))
    return rows


def summarize(rows) -> dict[int, dict[str, dict[str, float]]]:
    """``{k: {stat: {column: value}}}`` with stat in mean/min/max.

    Failed cells are left out of the aggregates; a k whose cells all failed
    gets NaN everywhere.
    """
    rows = list(rows)
    if not rows:
        raise ConfigurationError("cannot summarize an empty sweep")
    by_k: dict[int, list[SweepRow]] = {}
    for row in rows:
        by_k.setdefault(row.k, []).append(row)
    out = {}
    for k in sorted(by_k):
        good = [r for r in by_k[k] if not r.failed]
        stats = {}
        for name, fn in (("mean", statistics.fmean), ("min", min), ("max", max)):
            stats[name] = {
                col: float(fn([getattr(r, col) for r in good])) if good else math.nan
                for col in METRIC_COLUMNS
            }
        out[k] = stats
    return out


def plateau_k(rows, seed: int) -> int | None:
    """Smallest k from which total power stays constant (within 1e-9
    relative) up to the largest swept k, or None if a cell failed."""
    series = sorted((r.k, r.total_power_w) for r in rows if r.seed == seed)
    if not series or any(math.isnan(p) for _, p in series):
        return None
    last = series[-1][1]
    k_star = series[-1][0]
    for k, power in reversed(series):
        if abs(power - last) > 1e-9 * max(1.0, abs(last)):
            break
        k_star = k
    return k_star


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, col)) for col in SWEEP_COLUMNS])
    return buf.getvalue()


def summary_to_csv(summary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("k", "stat") + METRIC_COLUMNS)
    for k, stats in summary.items():
        for stat, values in stats.items():
            writer.writerow([k, stat] + [_fmt(values[c]) for c in METRIC_COLUMNS])
    return buf.getvalue()


def failures(rows) -> list[SweepRow]:
    return [r for r in rows if r.failed]
