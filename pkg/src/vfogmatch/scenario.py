"""Domain types and seeded generation of requests, fleets and instances."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from decimal import Decimal

import numpy as np

from .errors import ConfigurationError
from .topology import CloudSpec, PathModel, as_decimal

# spawn keys for independent random streams derived from one seed
_REQUEST_STREAM = 0
_VEHICLE_STREAM = 1
_DECK_STREAM = 2


@dataclass(frozen=True)
class Request:
    id: int
    demand: int  # MHz
    data_rate: Decimal  # Mbps
    software: int


@dataclass(frozen=True)
class Vehicle:
    id: int
    capacity: int = 240  # MHz
    power: float = 3.6  # W at full capacity
    installed: frozenset[int] = frozenset()

    @property
    def energy_per_mhz(self) -> float:
        return self.power / self.capacity


@dataclass(frozen=True)
class ScenarioConfig:
    request_count: int = 50
    demand_range_mhz: tuple[int, int] = (100, 300)
    alpha: Decimal = Decimal("0.008")  # Mbps per MHz
    software_library_size: int = 10
    vehicle_count: int = 20
    packages_per_vehicle: int = 4
    seed: int = 0
    vehicle_capacity: int = 240
    vehicle_power: float = 3.6
    cloud: CloudSpec = field(default_factory=CloudSpec)
    paths: PathModel | None = None  # None: defaults derived from ``cloud``

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_decimal(self.alpha))
        object.__setattr__(self, "demand_range_mhz", tuple(self.demand_range_mhz))

    def validate(self) -> "ScenarioConfig":
        lo, hi = self.demand_range_mhz
        if lo > hi:
            raise ConfigurationError(f"demand range min {lo} exceeds max {hi}")
        if lo < 0:
            raise ConfigurationError("demands must be non-negative")
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")
        if self.software_library_size < 1:
            raise ConfigurationError("software library needs at least one type")
        if self.request_count < 0 or self.vehicle_count < 0:
            raise ConfigurationError("counts must be non-negative")
        if not 0 <= self.packages_per_vehicle <= self.software_library_size:
            raise ConfigurationError(
                f"packages per vehicle must lie in 0..{self.software_library_size}, "
                f"got {self.packages_per_vehicle}"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if self.vehicle_capacity <= 0 or self.vehicle_power < 0:
            raise ConfigurationError("vehicle capacity must be positive, power non-negative")
        return self

    def resolved_paths(self) -> PathModel:
        return self.paths if self.paths is not None else PathModel.default(self.cloud)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def generate_requests(config: ScenarioConfig) -> list[Request]:
    config.validate()
    n = config.request_count
    if n == 0:
        return []
    lo, hi = config.demand_range_mhz
    rng = _rng(config.seed, _REQUEST_STREAM)
    demands = rng.integers(lo, hi, size=n, endpoint=True)
    software = rng.integers(0, config.software_library_size, size=n)
    return [
        Request(i, int(d), config.alpha * int(d), int(s))
        for i, (d, s) in enumerate(zip(demands, software))
    ]


def package_order(config: ScenarioConfig, vehicle: int) -> list[int]:
    """Installation order of the library on one vehicle.

    Every vehicle gets a uniformly random permutation, but leading packages
    are dealt without replacement from a shuffled deck (reshuffled every
    ``S`` vehicles), so a fleet of at least ``S`` vehicles holding one
    package each already covers the whole library.  Installed sets are the
    first ``k`` entries, hence nested in ``k``.
    """
    size = config.software_library_size
    block, slot = divmod(vehicle, size)
    deck = _rng(config.seed, _DECK_STREAM, block).permutation(size)
    lead = int(deck[slot])
    rest = [t for t in range(size) if t != lead]
    tail = _rng(config.seed, _VEHICLE_STREAM, vehicle).permutation(rest)
    return [lead, *(int(t) for t in tail)]


def generate_fleet(config: ScenarioConfig) -> list[Vehicle]:
    config.validate()
    k = config.packages_per_vehicle
    return [
        Vehicle(
            i,
            config.vehicle_capacity,
            config.vehicle_power,
            frozenset(package_order(config, i)[:k]),
        )
        for i in range(config.vehicle_count)
    ]


@dataclass(frozen=True)
class Instance:
    requests: tuple[Request, ...]
    vehicles: tuple[Vehicle, ...]
    paths: PathModel
    cloud: CloudSpec
    software_library_size: int = 10
    config: ScenarioConfig | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "requests", tuple(self.requests))
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        self.validate()

    def validate(self):
        if [r.id for r in self.requests] != list(range(len(self.requests))):
            raise ConfigurationError("request ids must be 0..n-1 in order")
        if [v.id for v in self.vehicles] != list(range(len(self.vehicles))):
            raise ConfigurationError("vehicle ids must be 0..V-1 in order")
        size = self.software_library_size
        for r in self.requests:
            if not 0 <= r.software < size:
                raise ConfigurationError(f"request {r.id}: software {r.software} outside library")
            if r.demand < 0 or r.data_rate < 0:
                raise ConfigurationError(f"request {r.id}: negative demand or rate")
        for v in self.vehicles:
            if v.capacity <= 0:
                raise ConfigurationError(f"vehicle {v.id}: capacity must be positive")
            if any(not 0 <= s < size for s in v.installed):
                raise ConfigurationError(f"vehicle {v.id}: installed software outside library")

    @property
    def total_demand(self) -> int:
        return sum(r.demand for r in self.requests)

    def scaled_power(self, factor: float) -> "Instance":
        """Copy with every energy-per-bit and energy-per-MHz multiplied by ``factor``."""
        return Instance(
            self.requests,
            tuple(replace(v, power=v.power * factor) for v in self.vehicles),
            self.paths.scaled(factor),
            replace(
                self.cloud,
                server_power=self.cloud.server_power * factor,
                transport_delta=self.cloud.transport_delta * factor,
            ),
            self.software_library_size,
            self.config,
        )


def build_instance(config: ScenarioConfig) -> Instance:
    config.validate()
    return Instance(
        requests=tuple(generate_requests(config)),
        vehicles=tuple(generate_fleet(config)),
        paths=config.resolved_paths(),
        cloud=config.cloud,
        software_library_size=config.software_library_size,
        config=config,
    )
