"""Network devices, the fog and cloud paths, and per-request power terms.

Data rates and link capacities are kept as :class:`~decimal.Decimal` Mbps so
that capacity checks are exact; power values are plain floats in watts.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Union

from .errors import ConfigurationError

BITS_PER_MBIT = 10**6


def as_decimal(value) -> Decimal:
    """Convert ints, strings and floats to Decimal via their shortest repr."""
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        return Decimal(repr(value))
    return Decimal(value)


@dataclass(frozen=True)
class DeviceSpec:
    name: str
    capacity: Decimal  # Mbps
    power: float  # W at rated capacity

    def __post_init__(self):
        object.__setattr__(self, "capacity", as_decimal(self.capacity))
        object.__setattr__(self, "power", float(self.power))
        if self.power < 0:
            raise ConfigurationError(f"device {self.name!r}: negative power")

    @property
    def energy_per_bit(self) -> float:
        return energy_per_bit(self)

    @classmethod
    def from_energy_per_bit(cls, name: str, delta: float, capacity) -> "DeviceSpec":
        capacity = as_decimal(capacity)
        return cls(name, capacity, delta * float(capacity) * BITS_PER_MBIT)


def energy_per_bit(device: DeviceSpec) -> float:
    """Joules per bit of a fully load-proportional device: power / capacity."""
    if device.capacity <= 0:
        raise ConfigurationError(f"device {device.name!r}: capacity must be positive")
    return device.power / (float(device.capacity) * BITS_PER_MBIT)


@dataclass(frozen=True)
class CloudSpec:
    server_capacity: int = 4000  # MHz
    server_power: float = 300.0  # W
    server_count: int = 4
    transport_delta: float = 3.0e-7  # J/bit, PON + core aggregate
    transport_capacity: Decimal = Decimal(10000)  # Mbps

    def __post_init__(self):
        object.__setattr__(self, "transport_capacity", as_decimal(self.transport_capacity))
        if self.server_capacity <= 0 or self.server_count < 0:
            raise ConfigurationError("cloud server capacity must be positive and count >= 0")
        if self.server_power < 0 or self.transport_delta < 0 or self.transport_capacity <= 0:
            raise ConfigurationError("cloud power and transport parameters must be positive")

    @property
    def energy_per_mhz(self) -> float:
        return self.server_power / self.server_capacity

    @property
    def processing_capacity(self) -> int:
        return self.server_count * self.server_capacity


@dataclass(frozen=True)
class CapacityGroup:
    """Link constraint: traffic of every request crossing any of ``devices``."""

    name: str
    devices: tuple[str, ...]
    capacity: Decimal  # Mbps

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))
        object.__setattr__(self, "capacity", as_decimal(self.capacity))


@dataclass(frozen=True)
class CloudTarget:
    def __str__(self):
        return "cloud"


@dataclass(frozen=True, order=True)
class VehicleTarget:
    vehicle: int

    def __str__(self):
        return f"vehicle:{self.vehicle}"


Target = Union[VehicleTarget, CloudTarget]
CLOUD = CloudTarget()


def parse_target(text: str) -> Target:
    text = text.strip()
    if text == "cloud":
        return CLOUD
    kind, _, ident = text.partition(":")
    if kind == "vehicle" and ident.isdigit():
        return VehicleTarget(int(ident))
    raise ValueError(f"bad target {text!r}; expected 'cloud' or 'vehicle:<id>'")


def target_sort_key(target: Target) -> tuple[int, int]:
    """Vehicles by ascending id, then the cloud."""
    if isinstance(target, VehicleTarget):
        return (0, target.vehicle)
    return (1, 0)


def default_devices(cloud: CloudSpec | None = None) -> dict[str, DeviceSpec]:
    cloud = cloud or CloudSpec()
    return {
        "rsu": DeviceSpec("rsu", 100, 15.5),
        "access_point": DeviceSpec("access_point", 800, 21.5),
        "wireless": DeviceSpec("wireless", 450, 0.0),
        "obu_nic": DeviceSpec("obu_nic", 450, 0.0),
        "cloud_transport": DeviceSpec.from_energy_per_bit(
            "cloud_transport", cloud.transport_delta, cloud.transport_capacity
        ),
    }


@dataclass(frozen=True)
class PathModel:
    shared_devices: tuple[DeviceSpec, ...]
    fog_devices: tuple[DeviceSpec, ...]
    cloud_devices: tuple[DeviceSpec, ...]
    capacity_groups: tuple[CapacityGroup, ...] = field(default=())

    def __post_init__(self):
        for name in ("shared_devices", "fog_devices", "cloud_devices", "capacity_groups"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        known = {d.name for d in self.all_devices()}
        for group in self.capacity_groups:
            missing = [d for d in group.devices if d not in known]
            if missing:
                raise ConfigurationError(
                    f"capacity group {group.name!r} names devices on no path: {missing}"
                )
            if group.capacity < 0:
                raise ConfigurationError(f"capacity group {group.name!r}: negative capacity")
        for device in self.all_devices():
            if device.capacity <= 0:
                raise ConfigurationError(f"device {device.name!r}: capacity must be positive")

    @classmethod
    def default(cls, cloud: CloudSpec | None = None) -> "PathModel":
        dev = default_devices(cloud)
        return cls(
            shared_devices=(dev["rsu"],),
            fog_devices=(dev["access_point"], dev["wireless"], dev["obu_nic"]),
            cloud_devices=(dev["cloud_transport"],),
            capacity_groups=(
                CapacityGroup("rsu", ("rsu",), dev["rsu"].capacity),
                CapacityGroup("access_point", ("access_point",), dev["access_point"].capacity),
                CapacityGroup("wireless", ("wireless",), Decimal(450)),
                CapacityGroup(
                    "cloud_transport", ("cloud_transport",), dev["cloud_transport"].capacity
                ),
            ),
        )

    def all_devices(self) -> Iterable[DeviceSpec]:
        seen = set()
        for device in (*self.shared_devices, *self.fog_devices, *self.cloud_devices):
            if device.name not in seen:
                seen.add(device.name)
                yield device

    def chain(self, to_fog: bool) -> tuple[DeviceSpec, ...]:
        return self.shared_devices + (self.fog_devices if to_fog else self.cloud_devices)

    def delta_sum(self, to_fog: bool) -> float:
        return sum(energy_per_bit(d) for d in self.chain(to_fog))

    def group_scope(self, group: CapacityGroup) -> tuple[bool, bool]:
        """Whether (fog-bound, cloud-bound) requests load the group."""
        names = set(group.devices)
        fog = any(d.name in names for d in self.chain(True))
        cloud = any(d.name in names for d in self.chain(False))
        return fog, cloud

    def scaled(self, factor: float) -> "PathModel":
        """Copy with every device power multiplied by ``factor``."""

        def scale(devs):
            return tuple(DeviceSpec(d.name, d.capacity, d.power * factor) for d in devs)

        return PathModel(
            scale(self.shared_devices),
            scale(self.fog_devices),
            scale(self.cloud_devices),
            self.capacity_groups,
        )


def is_fog(target: Target) -> bool:
    return isinstance(target, VehicleTarget)


def network_power(request, target: Target, paths: PathModel) -> float:
    """Watts spent moving the request's bit rate along its device chain."""
    if request.data_rate == 0:
        return 0.0
    return float(request.data_rate) * BITS_PER_MBIT * paths.delta_sum(is_fog(target))


def processing_power(request, target: Target, instance) -> float:
    if isinstance(target, VehicleTarget):
        return request.demand * instance.vehicles[target.vehicle].energy_per_mhz
    return request.demand * instance.cloud.energy_per_mhz
