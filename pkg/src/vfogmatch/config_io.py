"""TOML documents: scenario configuration and fully materialised instances.

Decimal quantities (rates, link capacities, alpha) travel as strings so a
save/load cycle is lossless; watts and J/bit stay TOML floats, which
round-trip exactly through their shortest repr.
"""
from __future__ import annotations

import sys
from dataclasses import fields
from decimal import Decimal
from pathlib import Path
from typing import Any

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

from .errors import ConfigurationError
from .scenario import Instance, Request, ScenarioConfig, Vehicle
from .topology import CapacityGroup, CloudSpec, DeviceSpec, PathModel

INSTANCE_FORMAT = "vfogmatch-instance"
INSTANCE_VERSION = 1

_SCENARIO_KEYS = {
    "request_count": int,
    "demand_range_mhz": lambda v: tuple(int(x) for x in v),
    "alpha": lambda v: Decimal(str(v)),
    "software_library_size": int,
    "vehicle_count": int,
    "packages_per_vehicle": int,
    "seed": int,
    "vehicle_capacity": int,
    "vehicle_power": float,
}

_CLOUD_KEYS = {
    "server_capacity": int,
    "server_power": float,
    "server_count": int,
    "transport_delta": float,
    "transport_capacity": lambda v: Decimal(str(v)),
}


def _reject_unknown(section: str, data: dict, allowed) -> None:
    extra = sorted(set(data) - set(allowed))
    if extra:
        raise ConfigurationError(f"[{section}]: unknown keys {extra}")


# -- paths and cloud -------------------------------------------------------

def paths_to_dict(paths: PathModel) -> dict:
    return {
        "shared": [d.name for d in paths.shared_devices],
        "fog": [d.name for d in paths.fog_devices],
        "cloud": [d.name for d in paths.cloud_devices],
        "devices": [
            {"name": d.name, "capacity_mbps": str(d.capacity), "power_w": d.power}
            for d in paths.all_devices()
        ],
        "groups": [
            {"name": g.name, "devices": list(g.devices), "capacity_mbps": str(g.capacity)}
            for g in paths.capacity_groups
        ],
    }


def paths_from_dict(data: dict) -> PathModel:
    _reject_unknown("paths", data, ("shared", "fog", "cloud", "devices", "groups"))
    devices = {}
    for entry in data.get("devices", []):
        _reject_unknown("paths.devices", entry, ("name", "capacity_mbps", "power_w"))
        try:
            devices[entry["name"]] = DeviceSpec(
                entry["name"], Decimal(str(entry["capacity_mbps"])), float(entry["power_w"])
            )
        except KeyError as exc:
            raise ConfigurationError(f"[paths.devices]: missing {exc}") from None

    def chain(key):
        try:
            return tuple(devices[name] for name in data.get(key, []))
        except KeyError as exc:
            raise ConfigurationError(f"[paths] {key}: undefined device {exc}") from None

    groups = []
    for entry in data.get("groups", []):
        _reject_unknown("paths.groups", entry, ("name", "devices", "capacity_mbps"))
        groups.append(
            CapacityGroup(entry["name"], tuple(entry["devices"]), Decimal(str(entry["capacity_mbps"])))
        )
    return PathModel(chain("shared"), chain("fog"), chain("cloud"), tuple(groups))


def cloud_to_dict(cloud: CloudSpec) -> dict:
    out = {}
    for f in fields(CloudSpec):
        value = getattr(cloud, f.name)
        out[f.name] = str(value) if isinstance(value, Decimal) else value
    return out


def cloud_from_dict(data: dict) -> CloudSpec:
    _reject_unknown("cloud", data, _CLOUD_KEYS)
    return CloudSpec(**{k: _CLOUD_KEYS[k](v) for k, v in data.items()})


# -- scenario configuration -----------------------------------------------

def config_to_dict(config: ScenarioConfig, resolve_paths: bool = True) -> dict:
    """Plain-data view; with ``resolve_paths`` the derived default paths are
    spelled out too, which is what ``show-config`` prints."""
    scenario = {}
    for key in _SCENARIO_KEYS:
        value = getattr(config, key)
        if isinstance(value, Decimal):
            value = str(value)
        elif isinstance(value, tuple):
            value = list(value)
        scenario[key] = value
    doc = {"scenario": scenario, "cloud": cloud_to_dict(config.cloud)}
    if config.paths is not None or resolve_paths:
        doc["paths"] = paths_to_dict(config.resolved_paths())
    return doc


def config_from_dict(data: dict, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Apply the [scenario], [cloud] and [paths] sections on top of ``base``."""
    base = base or ScenarioConfig()
    changes: dict[str, Any] = {}
    scenario = data.get("scenario", {})
    _reject_unknown("scenario", scenario, _SCENARIO_KEYS)
    for key, value in scenario.items():
        try:
            changes[key] = _SCENARIO_KEYS[key](value)
        except (TypeError, ValueError, ArithmeticError) as exc:
            raise ConfigurationError(f"[scenario] {key}: {exc}") from None
    if "cloud" in data:
        merged = {**cloud_to_dict(base.cloud), **data["cloud"]}
        changes["cloud"] = cloud_from_dict(merged)
    if "paths" in data:
        changes["paths"] = paths_from_dict(data["paths"])
    return base.with_(**changes).validate()


def read_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def dump_config(config: ScenarioConfig, extra: dict | None = None) -> str:
    doc = config_to_dict(config)
    if extra:
        doc.update(extra)
    return tomli_w.dumps(doc)


# -- instances ------------------------------------------------------------

def instance_to_dict(instance: Instance) -> dict:
    doc = {
        "format": INSTANCE_FORMAT,
        "version": INSTANCE_VERSION,
        "software_library_size": instance.software_library_size,
    }
    if instance.config is not None:
        doc["config"] = config_to_dict(instance.config, resolve_paths=False)["scenario"]
    doc["cloud"] = cloud_to_dict(instance.cloud)
    doc["paths"] = paths_to_dict(instance.paths)
    doc["requests"] = [
        {"id": r.id, "demand_mhz": r.demand, "data_rate_mbps": str(r.data_rate), "software": r.software}
        for r in instance.requests
    ]
    doc["vehicles"] = [
        {"id": v.id, "capacity_mhz": v.capacity, "power_w": v.power, "installed": sorted(v.installed)}
        for v in instance.vehicles
    ]
    return doc


def instance_from_dict(doc: dict) -> Instance:
    if doc.get("format") != INSTANCE_FORMAT:
        raise ConfigurationError(f"not an instance document (format={doc.get('format')!r})")
    if doc.get("version") != INSTANCE_VERSION:
        raise ConfigurationError(f"unsupported instance version {doc.get('version')!r}")
    cloud = cloud_from_dict(doc.get("cloud", {}))
    config = None
    if "config" in doc:
        config = config_from_dict({"scenario": doc["config"]}, ScenarioConfig(cloud=cloud))
    try:
        requests = [
            Request(int(r["id"]), int(r["demand_mhz"]), Decimal(str(r["data_rate_mbps"])), int(r["software"]))
            for r in doc.get("requests", [])
        ]
        vehicles = [
            Vehicle(int(v["id"]), int(v["capacity_mhz"]), float(v["power_w"]), frozenset(v["installed"]))
            for v in doc.get("vehicles", [])
        ]
    except KeyError as exc:
        raise ConfigurationError(f"instance entry missing {exc}") from None
    return Instance(
        requests,
        vehicles,
        paths_from_dict(doc["paths"]),
        cloud,
        int(doc.get("software_library_size", 10)),
        config,
    )


def dumps_instance(instance: Instance) -> str:
    return tomli_w.dumps(instance_to_dict(instance))


def loads_instance(text: str) -> Instance:
    try:
        return instance_from_dict(tomllib.loads(text))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"instance file: {exc}") from None


def save_instance(instance: Instance, path) -> None:
    Path(path).write_text(dumps_instance(instance))


def load_instance(path) -> Instance:
    return loads_instance(Path(path).read_text())
