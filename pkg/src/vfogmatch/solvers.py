"""Exact branch-and-bound, greedy heuristic and exhaustive enumeration oracle."""
from __future__ import annotations

import functools
import math
import time
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterator, Mapping

import numpy as np

from . import _search, kernel
from .errors import InfeasibleInstanceError, ProblemSizeError, SearchBudgetError
from .problem import (
    Assignment,
    check_feasible,
    cost_matrix,
    feasible_targets,
    objective,
    request_power,
    targets_from_indices,
)
from .scenario import Instance
from .topology import CLOUD, Target, VehicleTarget

SOLVERS = ("exact", "greedy", "brute")
DEFAULT_NODE_BUDGET = 10**7
NO_LIMIT = 2**62
LAGRANGE_ROUNDS = 600
LAGRANGE_PATIENCE = 20
RELAXED_NODE_LIMIT = 2_000_000


def relative_tol(value: float) -> float:
    return 1e-9 * max(1.0, abs(value)) if math.isfinite(value) else 0.0


@dataclass
class Solution:
    assignment: Assignment
    objective: float
    optimal: bool
    nodes_explored: int
    runtime: float  # seconds
    solver: str = "exact"


def _decimal_scale(values) -> int:
    places = 0
    for value in values:
        exponent = value.as_tuple().exponent
        if isinstance(exponent, int) and exponent < 0:
            places = max(places, -exponent)
    return 10**places


@dataclass
class Encoded:
    """Integer/float arrays of an instance as consumed by the search kernel.

    Rates are integers in units of ``1/scale`` Mbps so that every link check
    is exact.  Link groups collapse to one fog-side and one cloud-side limit
    because all fog-bound requests share a single device chain (likewise for
    cloud-bound).  Groups on both chains carry a fixed load.
    """

    demand: np.ndarray
    rate: np.ndarray
    costs: np.ndarray  # (n, V + 1); column V is the cloud
    compat: np.ndarray  # (n, V) software match and demand <= capacity
    veh_cap: np.ndarray
    fog_rate_cap: int
    cloud_rate_cap: int
    cloud_mhz_cap: int
    fixed_overloads: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.demand)

    @property
    def nv(self) -> int:
        return len(self.veh_cap)


def encode(instance: Instance) -> Encoded:
    reqs, vehs = instance.requests, instance.vehicles
    groups = instance.paths.capacity_groups
    scale = _decimal_scale([r.data_rate for r in reqs] + [g.capacity for g in groups])
    demand = np.array([r.demand for r in reqs], dtype=np.int64)
    rate = np.array([int(r.data_rate * scale) for r in reqs], dtype=np.int64)
    compat = np.array(
        [[r.software in v.installed and r.demand <= v.capacity for v in vehs] for r in reqs],
        dtype=np.uint8,
    ).reshape(len(reqs), len(vehs))
    costs = cost_matrix(instance)
    fog_cap = cloud_cap = NO_LIMIT
    fixed = []
    total_rate = sum((r.data_rate for r in reqs), Decimal(0))
    for group in groups:
        fog, cloud = instance.paths.group_scope(group)
        cap = int(group.capacity * scale)
        if fog and cloud:
            if total_rate > group.capacity:
                fixed.append((group.name, total_rate, group.capacity))
        elif fog:
            fog_cap = min(fog_cap, cap)
        elif cloud:
            cloud_cap = min(cloud_cap, cap)
    return Encoded(
        demand,
        rate,
        costs,
        compat,
        np.array([v.capacity for v in vehs], dtype=np.int64),
        fog_cap,
        cloud_cap,
        instance.cloud.processing_capacity,
        fixed,
    )


def branching_order(demand) -> list[int]:
    """Descending demand, ties by ascending id."""
    return sorted(range(len(demand)), key=lambda u: (-int(demand[u]), u))


def _raise_fixed(enc: Encoded):
    if enc.fixed_overloads:
        name, load, cap = enc.fixed_overloads[0]
        raise InfeasibleInstanceError(
            f"link group {name!r} carries all traffic: {load} Mbps exceeds {cap} Mbps"
        )


def _greedy_indices(enc: Encoded) -> np.ndarray:
    _raise_fixed(enc)
    nv = enc.nv
    res = enc.veh_cap.copy()
    fog_res, cloud_rate_res, cloud_mhz_res = enc.fog_rate_cap, enc.cloud_rate_cap, enc.cloud_mhz_cap
    out = np.full(enc.n, nv, dtype=np.int64)
    for u in branching_order(enc.demand):
        d, r = int(enc.demand[u]), int(enc.rate[u])
        best, best_cost = -1, math.inf
        if fog_res >= r:
            for v in range(nv):
                if enc.compat[u, v] and res[v] >= d and enc.costs[u, v] < best_cost:
                    best, best_cost = v, enc.costs[u, v]
        if cloud_mhz_res >= d and cloud_rate_res >= r and enc.costs[u, nv] < best_cost:
            best = nv
        if best < 0:
            raise InfeasibleInstanceError(f"greedy: no target can take request {u}")
        out[u] = best
        if best == nv:
            cloud_mhz_res -= d
            cloud_rate_res -= r
        else:
            res[best] -= d
            fog_res -= r
    return out


def _indices_cost(enc: Encoded, indices) -> float:
    return float(sum(enc.costs[u, t] for u, t in enumerate(indices)))


def _finish(instance, indices, optimal, nodes, started, solver) -> Solution:
    assignment = targets_from_indices(indices, len(instance.vehicles))
    violations = check_feasible(assignment, instance)
    if violations:
        raise AssertionError(f"{solver} produced an infeasible assignment: {violations}")
    return Solution(
        assignment,
        objective(assignment, instance),
        optimal,
        nodes,
        time.perf_counter() - started,
        solver,
    )


def solve_greedy(instance: Instance) -> Solution:
    started = time.perf_counter()
    indices = _greedy_indices(encode(instance))
    return _finish(instance, indices, False, len(indices), started, "greedy")


def _slack(enc: Encoded) -> bool:
    """True when no link or cloud limit can bind under any assignment."""
    fog_any = enc.compat.any(axis=1)
    return (
        int(enc.rate[fog_any].sum()) <= enc.fog_rate_cap
        and int(enc.rate.sum()) <= enc.cloud_rate_cap
        and int(enc.demand.sum()) <= enc.cloud_mhz_cap
    )


def components(enc: Encoded) -> list[tuple[list[int], list[int]]]:
    """Connected components of the request/vehicle compatibility graph."""
    parent = list(range(enc.n + enc.nv))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in zip(*np.nonzero(enc.compat)):
        a, b = find(int(u)), find(enc.n + int(v))
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups: dict[int, tuple[list[int], list[int]]] = {}
    for x in range(enc.n + enc.nv):
        reqs, vehs = groups.setdefault(find(x), ([], []))
        (reqs if x < enc.n else vehs).append(x if x < enc.n else x - enc.n)
    return [g for _, g in sorted(groups.items()) if g[0]]


def suffix_classes(veh_cost: np.ndarray, compat: np.ndarray) -> np.ndarray:
    """Vehicle class ids per depth: equal ids mean identical compatibility and
    cost over every request from that depth on, so the vehicles are
    interchangeable whenever their residual capacities agree."""
    n, nv = compat.shape
    out = np.zeros((n, nv), dtype=np.int64)
    for i in range(n):
        ids: dict = {}
        for v in range(nv):
            sig = (compat[i:, v].tobytes(), veh_cost[i:, v].tobytes())
            out[i, v] = ids.setdefault(sig, len(ids))
    return out


def _kernel_arrays(enc: Encoded, reqs: list[int], vehs: list[int], any_software: bool = False):
    """Kernel inputs for one component; ``any_software`` drops the package
    requirement so only vehicle capacity limits where a request may go."""
    order = branching_order(enc.demand[reqs])
    rows = [reqs[i] for i in order]
    nv = len(vehs)
    veh_cost = enc.costs[np.ix_(rows, vehs)] if nv else np.zeros((len(rows), 0))
    if not nv:
        compat = np.zeros((len(rows), 0), np.uint8)
    elif any_software:
        compat = (enc.demand[rows][:, None] <= enc.veh_cap[vehs][None, :]).astype(np.uint8)
    else:
        compat = enc.compat[np.ix_(rows, vehs)]
    cloud_cost = enc.costs[rows, enc.nv]
    child_order = np.full((len(rows), nv + 1), nv, dtype=np.int64)
    child_count = np.zeros(len(rows), dtype=np.int64)
    for i in range(len(rows)):
        kids = [(veh_cost[i, j], 0, j) for j in range(nv) if compat[i, j]]
        kids.append((cloud_cost[i], 1, nv))
        kids.sort()
        child_order[i, : len(kids)] = [k[2] for k in kids]
        child_count[i] = len(kids)
    return dict(
        rows=rows,
        demand=np.ascontiguousarray(enc.demand[rows]),
        rate=np.ascontiguousarray(enc.rate[rows]),
        cloud_cost=np.ascontiguousarray(cloud_cost),
        veh_cost=np.ascontiguousarray(veh_cost),
        compat=np.ascontiguousarray(compat, dtype=np.uint8),
        child_order=child_order,
        child_count=child_count,
        veh_cap=np.ascontiguousarray(enc.veh_cap[vehs]),
        veh_class=suffix_classes(veh_cost, compat),
    )


@functools.lru_cache(maxsize=None)
def _lower_triangle(m: int) -> np.ndarray:
    """Mask of the diagonal and below: pairs already seen or degenerate."""
    return np.tri(m, dtype=bool)


def _vehicle_pick(profit, demand, r):
    """Best profit one vehicle can collect alone, with per-item fractions taken."""
    idx = np.flatnonzero((profit > 0.0) & (demand <= r))
    taken = np.zeros(len(profit))
    if not len(idx):
        return 0.0, taken
    p, d = profit[idx], demand[idx]
    if len(idx) >= 3 and int(d[-3:].sum()) <= r:
        picks = []
        value = _search.relaxed_knapsack(p.tolist(), d.tolist(), int(r), picks)
        for t, frac in picks:
            taken[idx[t]] = frac
        return value, taken
    pair = np.where(_lower_triangle(len(idx)) | (d[:, None] + d[None, :] > r),
                    -np.inf, p[:, None] + p[None, :])
    a, b = np.unravel_index(int(np.argmax(pair)), pair.shape)
    single = int(np.argmax(p))
    if pair[a, b] > p[single]:
        taken[idx[a]] = taken[idx[b]] = 1.0
        return float(pair[a, b]), taken
    taken[idx[single]] = 1.0
    return float(p[single]), taken


def _repair(picks, arrays, caps3):
    """Turn per-vehicle picks into a feasible assignment, or None.

    Picks are honoured in the given order while they still fit; every other
    request then goes to its cheapest target with room left.
    """
    demand, rate = arrays["demand"], arrays["rate"]
    cloud_cost, veh_cost = arrays["cloud_cost"], arrays["veh_cost"]
    compat = arrays["compat"]
    fog_rate, cloud_rate, cloud_mhz = caps3
    n, nv = veh_cost.shape
    res = [int(x) for x in arrays["veh_cap"]]
    targets = [-1] * n
    for v, items in picks:
        for j in items:
            if targets[j] < 0 and demand[j] <= res[v] and rate[j] <= fog_rate:
                targets[j] = v
                res[v] -= int(demand[j])
                fog_rate -= int(rate[j])
    cost = 0.0
    for j in range(n):
        if targets[j] >= 0:
            cost += veh_cost[j, targets[j]]
            continue
        best, pick = math.inf, -1
        if demand[j] <= cloud_mhz and rate[j] <= cloud_rate:
            best, pick = cloud_cost[j], nv
        if rate[j] <= fog_rate:
            for v in range(nv):
                if compat[j, v] and demand[j] <= res[v] and veh_cost[j, v] < best:
                    best, pick = veh_cost[j, v], v
        if pick < 0:
            return None
        targets[j] = pick
        cost += best
        if pick == nv:
            cloud_mhz -= int(demand[j])
            cloud_rate -= int(rate[j])
        else:
            res[pick] -= int(demand[j])
            fog_rate -= int(rate[j])
    return cost, targets


def lagrange_search(arrays, caps3, incumbent_cost: float, rounds: int = LAGRANGE_ROUNDS):
    """Subgradient pass on the "each request placed once" rows.

    Returns ``(penalty, cost, targets)``: multipliers for the kernel bound
    (any nonnegative vector is valid; these are tuned to be tight at the
    root) and the cheapest assignment repaired from the vehicles' picks along
    the way, ``targets`` None when none beat ``incumbent_cost``.
    """
    demand, cloud_cost = arrays["demand"], arrays["cloud_cost"]
    veh_cost, compat, caps = arrays["veh_cost"], arrays["compat"].astype(bool), arrays["veh_cap"]
    n, nv = veh_cost.shape
    lam = np.zeros(n)
    best_cost, best_targets = incumbent_cost, None
    if n == 0 or nv == 0:
        return lam, best_cost, best_targets
    saving = np.where(compat, cloud_cost[:, None] - veh_cost, -np.inf)
    total_cloud = float(cloud_cost.sum())
    best_value, best_lam = math.inf, lam.copy()
    step, stall = 1.0, 0
    for _ in range(rounds):
        value = float(lam.sum())
        used = np.zeros(n)
        picks = []
        for v in range(nv):
            got, taken = _vehicle_pick(saving[:, v] - lam, demand, int(caps[v]))
            value += got
            used += taken
            picks.append((-got, v, np.flatnonzero(taken == 1.0).tolist()))
        picks.sort()
        found = _repair([(v, items) for _, v, items in picks], arrays, caps3)
        if found is not None and found[0] < best_cost - relative_tol(best_cost):
            best_cost, best_targets = found
        if value < best_value - relative_tol(best_value):
            best_value, best_lam, stall = value, lam.copy(), 0
        else:
            stall += 1
            if stall >= LAGRANGE_PATIENCE:
                step, stall = step / 2, 0
        target = total_cloud - best_cost if math.isfinite(best_cost) else 0.0
        grad = 1.0 - used
        grad[(lam <= 0.0) & (grad > 0.0)] = 0.0
        norm = float(grad @ grad)
        if norm == 0.0 or value - target <= 1e-9 * max(1.0, abs(value)):
            break
        lam = np.maximum(0.0, lam - step * (value - target) / norm * grad)
    return best_lam, best_cost, best_targets


def solve_exact(
    instance: Instance,
    time_budget: float | None = None,
    node_budget: int | None = None,
    backend: str | None = None,
    decompose: bool = True,
    initial: Assignment | None = None,
) -> Solution:
    """Depth-first branch-and-bound seeded with the greedy incumbent.

    ``initial`` is an optional feasible assignment (say, the optimum of a
    smaller fleet) that replaces the greedy one when it is cheaper.  When no
    link or cloud limit can bind, independent components of the
    compatibility graph are searched separately.  ``optimal`` is False when
    the time or node budget ran out first.
    """
    started = time.perf_counter()
    search = kernel.get(backend)
    enc = encode(instance)
    _raise_fixed(enc)
    nv = enc.nv
    try:
        incumbent = _greedy_indices(enc)
    except InfeasibleInstanceError:
        incumbent = None
    if initial is not None:
        violations = check_feasible(initial, instance)
        if violations:
            raise ValueError(f"initial assignment is infeasible: {violations[0]}")
        given = np.array([t.vehicle if isinstance(t, VehicleTarget) else nv for t in initial.targets],
                         dtype=np.int64)
        if incumbent is None or _indices_cost(enc, given) < _indices_cost(enc, incumbent):
            incumbent = given
    deadline = time.monotonic() + time_budget if time_budget else math.inf
    if decompose and _slack(enc):
        parts = components(enc)
    else:
        parts = [(list(range(enc.n)), list(range(nv)))]
    result = np.full(enc.n, nv, dtype=np.int64)
    nodes = 0
    optimal = True
    for reqs, vehs in parts:
        if not vehs and incumbent is not None:
            continue  # cloud only; slack or greedy already placed them
        budget = max(node_budget - nodes, 1) if node_budget else 0
        best, explored, completed = _search_component(
            enc, reqs, vehs, incumbent, search, budget, deadline)
        nodes += explored
        optimal = optimal and completed
        for u, t in best.items():
            result[u] = t
    return _finish(instance, result, optimal, nodes, started, "exact")


def _run_kernel(search, arrays, caps3, inc, inc_cost, penalty, node_limit, deadline, floor=-math.inf):
    return search(
        arrays["demand"], arrays["rate"], arrays["cloud_cost"], arrays["veh_cost"],
        arrays["compat"], arrays["child_order"], arrays["child_count"],
        arrays["veh_cap"], arrays["veh_class"], *caps3,
        inc_cost, np.asarray(inc, dtype=np.int64), node_limit, deadline, penalty, floor,
    )


def _search_component(enc, reqs, vehs, incumbent, search, node_budget, deadline):
    """Best targets for one component's requests, as ``{request: target}``."""
    nv = len(vehs)
    caps3 = (enc.fog_rate_cap, enc.cloud_rate_cap, enc.cloud_mhz_cap)
    arrays = _kernel_arrays(enc, reqs, vehs)
    rows = arrays["rows"]
    local = {v: j for j, v in enumerate(vehs)}
    if incumbent is not None:
        inc = [local.get(int(incumbent[u]), nv) for u in rows]
        inc_cost = 0.0
        for i, t in enumerate(inc):
            inc_cost += arrays["cloud_cost"][i] if t == nv else arrays["veh_cost"][i, t]
    else:
        inc, inc_cost = [nv] * len(rows), math.inf
    penalty, lag_cost, lag_targets = lagrange_search(arrays, caps3, inc_cost)
    if lag_targets is not None:
        inc, inc_cost = lag_targets, lag_cost

    # Installing every package on every vehicle can only lower the optimum,
    # and the resulting fleet is nearly symmetric, so it usually solves fast.
    # Its optimum proves the real incumbent as soon as the two meet.
    nodes, floor = 0, -math.inf
    loose = _kernel_arrays(enc, reqs, vehs, any_software=True)
    if math.isfinite(inc_cost) and not np.array_equal(loose["compat"], arrays["compat"]):
        loose_penalty, _, _ = lagrange_search(loose, caps3, inc_cost)
        limit = min(node_budget, RELAXED_NODE_LIMIT) if node_budget else RELAXED_NODE_LIMIT
        cost, _, explored, completed = _run_kernel(
            search, loose, caps3, inc, inc_cost, loose_penalty, limit, deadline)
        nodes += explored
        if completed:
            floor = cost
        if node_budget:
            node_budget = max(node_budget - explored, 1)

    cost, best, explored, completed = _run_kernel(
        search, arrays, caps3, inc, inc_cost, penalty, node_budget, deadline, floor)
    nodes += explored
    if math.isinf(cost):
        if completed:
            raise InfeasibleInstanceError("no assignment satisfies every constraint")
        raise SearchBudgetError("budget exhausted before any feasible assignment was found")
    targets = {u: (enc.nv if best[i] == nv else vehs[best[i]]) for i, u in enumerate(rows)}
    return targets, nodes, completed




def enumerate_candidates(
    instance: Instance, node_budget: int = DEFAULT_NODE_BUDGET, chunk: int = 1 << 16
) -> Iterator[tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    """Yield ``(offset, targets, costs, feasible)`` blocks of every total assignment.

    Candidates come in lexicographic order of the target vector (request ids
    ascending; per request vehicles by id, then the cloud).  Constraint sums
    are evaluated here in bulk, independently of :func:`check_feasible`.
    """
    reqs, nv = instance.requests, len(instance.vehicles)
    choices = [
        np.array([t.vehicle if isinstance(t, VehicleTarget) else nv for t in feasible_targets(r, instance)])
        for r in reqs
    ]
    sizes = [len(c) for c in choices]
    total = math.prod(sizes)
    if total > node_budget:
        raise ProblemSizeError(
            f"enumeration needs {total:.3g} candidates, budget is {node_budget}"
        )
    enc = encode(instance)
    paths = instance.paths
    scale = _decimal_scale([r.data_rate for r in reqs] + [g.capacity for g in paths.capacity_groups])
    rates = [int(r.data_rate * scale) for r in reqs]
    group_caps = [(*paths.group_scope(g), int(g.capacity * scale)) for g in paths.capacity_groups]
    caps = np.array([v.capacity for v in instance.vehicles] + [instance.cloud.processing_capacity])
    n = len(reqs)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(total, start + chunk))
        m = len(idx)
        if n:
            digits = np.unravel_index(idx, sizes)
            targets = np.stack([choices[u][digits[u]] for u in range(n)], axis=1)
        else:
            targets = np.zeros((m, 0), dtype=np.int64)
        rows = np.arange(m)
        costs = np.zeros(m)
        load = np.zeros((m, nv + 1), dtype=np.int64)
        fog_rate = np.zeros(m, dtype=np.int64)
        cloud_rate = np.zeros(m, dtype=np.int64)
        for u, req in enumerate(reqs):
            col = targets[:, u]
            costs += enc.costs[u][col]
            load[rows, col] += req.demand
            to_cloud = col == nv
            cloud_rate += np.where(to_cloud, rates[u], 0)
            fog_rate += np.where(to_cloud, 0, rates[u])
        feasible = (load <= caps).all(axis=1)
        for fog, cloud, cap in group_caps:
            feasible &= fog_rate * fog + cloud_rate * cloud <= cap
        yield start, targets, costs, feasible


def solve_brute(instance: Instance, node_budget: int = DEFAULT_NODE_BUDGET) -> Solution:
    """Minimum-power feasible assignment by full enumeration.

    Ties (within 1e-9 relative) go to the lexicographically smallest target
    vector.
    """
    started = time.perf_counter()
    best = math.inf
    count = 0
    for _, _, costs, feasible in enumerate_candidates(instance, node_budget):
        count += len(costs)
        if feasible.any():
            best = min(best, float(costs[feasible].min()))
    if math.isinf(best):
        raise InfeasibleInstanceError("no assignment satisfies every constraint")
    cutoff = best + relative_tol(best)
    for _, targets, costs, feasible in enumerate_candidates(instance, node_budget):
        hits = np.nonzero(feasible & (costs <= cutoff))[0]
        if len(hits):
            indices = targets[hits[0]]
            break
    return _finish(instance, indices, True, count, started, "brute")


@dataclass
class PartialAssignment:
    """Search state: decided requests, residual capacities, accumulated power."""

    decided: dict[int, Target]
    vehicle_residual: list[int]
    group_residual: dict[str, Decimal]
    cloud_residual: int
    cost: float

    @classmethod
    def from_decisions(cls, instance: Instance, decided: Mapping[int, Target]) -> "PartialAssignment":
        residual = [v.capacity for v in instance.vehicles]
        groups = {g.name: g.capacity for g in instance.paths.capacity_groups}
        cloud = instance.cloud.processing_capacity
        cost = 0.0
        for u in sorted(decided):
            req, target = instance.requests[u], decided[u]
            to_fog = isinstance(target, VehicleTarget)
            if to_fog:
                residual[target.vehicle] -= req.demand
            else:
                cloud -= req.demand
            for g in instance.paths.capacity_groups:
                fog, cl = instance.paths.group_scope(g)
                if (fog and to_fog) or (cl and not to_fog):
                    groups[g.name] -= req.data_rate
            cost += request_power(req, target, instance)
        return cls(dict(decided), residual, groups, cloud, cost)


def lower_bound(partial: PartialAssignment, instance: Instance) -> float:
    """Accumulated power plus each open request's cheapest individually
    feasible target, ignoring every coupling between open requests."""
    total = partial.cost
    for req in instance.requests:
        if req.id in partial.decided:
            continue
        best = request_power(req, CLOUD, instance)
        for t in feasible_targets(req, instance):
            if isinstance(t, VehicleTarget) and partial.vehicle_residual[t.vehicle] >= req.demand:
                best = min(best, request_power(req, t, instance))
        total += best
    return total


def solve(instance: Instance, solver: str = "exact", time_budget=None, node_budget=None,
          initial: Assignment | None = None) -> Solution:
    """Dispatch on the solver name; ``initial`` only matters to ``exact``."""
    if solver == "exact":
        return solve_exact(instance, time_budget=time_budget, node_budget=node_budget, initial=initial)
    if solver == "greedy":
        return solve_greedy(instance)
    if solver == "brute":
        return solve_brute(instance, node_budget or DEFAULT_NODE_BUDGET)
    raise ValueError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
