"""The capacitated software-matching assignment problem built on an Instance."""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

import numpy as np

from .scenario import Instance, Request
from .topology import (
    CLOUD,
    Target,
    VehicleTarget,
    network_power,
    parse_target,
    processing_power,
)

SOFTWARE_MISMATCH = "software_mismatch"
VEHICLE_CAPACITY = "vehicle_capacity"
LINK_CAPACITY = "link_capacity"
CLOUD_CAPACITY = "cloud_capacity"


@dataclass(frozen=True)
class Assignment:
    """Total map request id -> target, stored positionally."""

    targets: tuple[Target, ...]

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))

    def __len__(self):
        return len(self.targets)

    def __getitem__(self, request_id: int) -> Target:
        return self.targets[request_id]

    @classmethod
    def all_cloud(cls, n: int) -> "Assignment":
        return cls((CLOUD,) * n)

    def to_text(self) -> str:
        return "".join(f"{u},{t}\n" for u, t in enumerate(self.targets))

    @classmethod
    def from_text(cls, text: str) -> "Assignment":
        pairs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#") or line == "request_id,target":
                continue
            rid, sep, tgt = line.partition(",")
            if not sep or not rid.strip().isdigit():
                raise ValueError(f"line {lineno}: expected 'request_id,target', got {line!r}")
            rid = int(rid)
            if rid in pairs:
                raise ValueError(f"line {lineno}: request {rid} assigned twice")
            pairs[rid] = parse_target(tgt)
        if sorted(pairs) != list(range(len(pairs))):
            raise ValueError("assignment must cover request ids 0..n-1 exactly once")
        return cls(tuple(pairs[u] for u in range(len(pairs))))


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    load: Decimal | int
    limit: Decimal | int


@dataclass(frozen=True)
class Metrics:
    total_power: float
    network_power: float
    processing_power: float
    cloud_workload: int
    fog_workload: int
    cloud_request_count: int
    fog_request_count: int


def feasible_targets(request: Request, instance: Instance) -> list[Target]:
    """Vehicles holding the software with enough raw capacity, then the cloud."""
    targets: list[Target] = [
        VehicleTarget(v.id)
        for v in instance.vehicles
        if request.software in v.installed and request.demand <= v.capacity
    ]
    targets.append(CLOUD)
    return targets


def _check_total(assignment: Assignment, instance: Instance):
    if len(assignment) != len(instance.requests):
        raise ValueError(
            f"assignment covers {len(assignment)} requests, instance has {len(instance.requests)}"
        )
    for t in assignment.targets:
        if isinstance(t, VehicleTarget) and not 0 <= t.vehicle < len(instance.vehicles):
            raise ValueError(f"unknown vehicle {t.vehicle}")


def check_feasible(assignment: Assignment, instance: Instance) -> list[Violation]:
    _check_total(assignment, instance)
    violations = []
    vehicle_load = [0] * len(instance.vehicles)
    fog_rate = Decimal(0)
    cloud_rate = Decimal(0)
    cloud_demand = 0
    for req, target in zip(instance.requests, assignment.targets):
        if isinstance(target, VehicleTarget):
            vehicle = instance.vehicles[target.vehicle]
            if req.software not in vehicle.installed:
                violations.append(
                    Violation(SOFTWARE_MISMATCH, f"vehicle:{vehicle.id}/request:{req.id}", 1, 0)
                )
            vehicle_load[vehicle.id] += req.demand
            fog_rate += req.data_rate
        else:
            cloud_demand += req.demand
            cloud_rate += req.data_rate
    for vehicle, load in zip(instance.vehicles, vehicle_load):
        if load > vehicle.capacity:
            violations.append(Violation(VEHICLE_CAPACITY, f"vehicle:{vehicle.id}", load, vehicle.capacity))
    paths = instance.paths
    for group in paths.capacity_groups:
        fog, cloud = paths.group_scope(group)
        load = (fog_rate if fog else 0) + (cloud_rate if cloud else 0)
        if load > group.capacity:
            violations.append(Violation(LINK_CAPACITY, group.name, load, group.capacity))
    limit = instance.cloud.processing_capacity
    if cloud_demand > limit:
        violations.append(Violation(CLOUD_CAPACITY, "cloud", cloud_demand, limit))
    return violations


def request_power(request: Request, target: Target, instance: Instance) -> float:
    return network_power(request, target, instance.paths) + processing_power(
        request, target, instance
    )


def objective(assignment: Assignment, instance: Instance) -> float:
    """Total network plus processing power in watts; feasibility not required.

    Same summation as :func:`metrics`, so the two agree to the last bit.
    """
    return metrics(assignment, instance).total_power


def metrics(assignment: Assignment, instance: Instance) -> Metrics:
    _check_total(assignment, instance)
    net = proc = 0.0
    cloud_work = fog_work = cloud_n = fog_n = 0
    for req, t in zip(instance.requests, assignment.targets):
        net += network_power(req, t, instance.paths)
        proc += processing_power(req, t, instance)
        if isinstance(t, VehicleTarget):
            fog_work += req.demand
            fog_n += 1
        else:
            cloud_work += req.demand
            cloud_n += 1
    return Metrics(net + proc, net, proc, cloud_work, fog_work, cloud_n, fog_n)


def cost_matrix(instance: Instance) -> np.ndarray:
    """Per-request power for every target: columns are vehicles by id, then cloud."""
    n, nv = len(instance.requests), len(instance.vehicles)
    costs = np.empty((n, nv + 1))
    targets: Sequence[Target] = [VehicleTarget(v) for v in range(nv)] + [CLOUD]
    for req in instance.requests:
        for j, t in enumerate(targets):
            costs[req.id, j] = request_power(req, t, instance)
    return costs


def targets_from_indices(indices: Iterable[int], vehicle_count: int) -> Assignment:
    return Assignment(
        tuple(CLOUD if j == vehicle_count else VehicleTarget(int(j)) for j in indices)
    )
