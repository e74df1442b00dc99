"""Service configuration: one JSON file holding profiles, fleet, policy,
monitor thresholds, encryption keys, and the storage directory.

The config path comes from the CLI --config flag or the CLOUDMRI_CONFIG
environment variable (the only environment variable the system reads).
"""

from __future__ import annotations

import json
import os
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from cloudmri.ledger import AccessPolicy
from cloudmri.orchestrator import (
    DEFAULT_HEARTBEAT_INTERVAL_S,
    DEFAULT_MISSED_HEARTBEATS,
    NodeDescriptor,
    fleet_from_config,
)
from cloudmri.transport import BUILTIN_PROFILES, NetworkProfile

ENV_CONFIG = "CLOUDMRI_CONFIG"
DEFAULT_STATE_DIR = "cloudmri-state"


class ConfigError(Exception):
    pass


@dataclass
class MonitorSettings:
    deny_burst_threshold: int = 3
    deny_burst_window_s: float = 60.0
    rate_zscore_threshold: float = 3.0
    rate_window_minutes: int = 30


@dataclass
class GatewayConfig:
    storage_dir: Path
    profiles: dict[str, NetworkProfile]
    fleet: list[NodeDescriptor]
    policy: AccessPolicy
    keys: dict[str, bytes]
    default_profile: str = "LOCAL_4G"
    monitor: MonitorSettings = field(default_factory=MonitorSettings)
    heartbeat_interval_s: float = DEFAULT_HEARTBEAT_INTERVAL_S
    missed_heartbeats: int = DEFAULT_MISSED_HEARTBEATS

    @classmethod
    def load(cls, path) -> "GatewayConfig":
        path = Path(path)
        with open(path) as fh:
            spec = json.load(fh)
        profiles = dict(BUILTIN_PROFILES)
        for profile_spec in spec.get("profiles", []):
            profile = NetworkProfile.from_dict(profile_spec)
            profiles[profile.name] = profile
        keys = {}
        for key_id, hex_key in spec.get("keys", {}).items():
            key = bytes.fromhex(hex_key)
            if len(key) != 32:
                raise ConfigError(f"key {key_id!r} must be 32 bytes (64 hex chars)")
            keys[key_id] = key
        monitor_spec = spec.get("monitor", {})
        storage_dir = Path(spec.get("storage_dir", path.parent / "storage"))
        if not storage_dir.is_absolute():
            storage_dir = path.parent / storage_dir
        default_profile = spec.get("default_profile", "LOCAL_4G")
        if default_profile not in profiles:
            raise ConfigError(f"default_profile {default_profile!r} is not defined")
        return cls(
            storage_dir=storage_dir,
            profiles=profiles,
            fleet=fleet_from_config(spec.get("fleet", [])),
            policy=AccessPolicy.from_dict(spec.get("policy", {})),
            keys=keys,
            default_profile=default_profile,
            monitor=MonitorSettings(
                deny_burst_threshold=int(monitor_spec.get("deny_burst_threshold", 3)),
                deny_burst_window_s=float(monitor_spec.get("deny_burst_window_s", 60.0)),
                rate_zscore_threshold=float(monitor_spec.get("rate_zscore_threshold", 3.0)),
                rate_window_minutes=int(monitor_spec.get("rate_window_minutes", 30)),
            ),
            heartbeat_interval_s=float(
                spec.get("heartbeat_interval_s", DEFAULT_HEARTBEAT_INTERVAL_S)
            ),
            missed_heartbeats=int(spec.get("missed_heartbeats", DEFAULT_MISSED_HEARTBEATS)),
        )


def resolve_config_path(cli_value: str | None) -> Path:
    if cli_value:
        return Path(cli_value)
    env_value = os.environ.get(ENV_CONFIG)
    if env_value:
        return Path(env_value)
    return Path(DEFAULT_STATE_DIR) / "config.json"


def default_config_dict(storage_dir: str = "storage") -> dict:
    """Demo deployment: two-node fleet, one upload key, and a policy where
    operators upload and start reconstructions, radiologists view and review,
    and the federation coordinator records model updates."""
    return {
        "storage_dir": storage_dir,
        "default_profile": "LOCAL_4G",
        "profiles": [],
        "keys": {"demo-key": secrets.token_bytes(32).hex()},
        "fleet": [
            {
                "node_id": "edge-1",
                "kind": "edge",
                "compute_rate_units_per_s": 1.0,
                "profile": {
                    "name": "EDGE_LAN",
                    "rate_bits_per_s": 1e9,
                    "latency_s": 0.001,
                    "per_file_overhead_s": 0.0,
                },
            },
            {
                "node_id": "cloud-1",
                "kind": "cloud",
                "compute_rate_units_per_s": 100.0,
                "profile": {
                    "name": "CLOUD_6G",
                    "rate_bits_per_s": 8e12,
                    "latency_s": 0.0,
                    "per_file_overhead_s": 0.0,
                },
            },
        ],
        "policy": {
            "roles": {
                "op-1": "operator",
                "dr-1": "radiologist",
                "fed-coordinator": "coordinator",
            },
            "rules": [
                {"actor_role": "operator", "action": "UPLOAD", "resource_class": "rawdata", "effect": "allow"},
                {"actor_role": "operator", "action": "RECON", "resource_class": "rawdata", "effect": "allow"},
                {"actor_role": "radiologist", "action": "ACCESS", "resource_class": "image", "effect": "allow"},
                {"actor_role": "radiologist", "action": "REVIEW", "resource_class": "report", "effect": "allow"},
                {"actor_role": "coordinator", "action": "MODEL_UPDATE", "resource_class": "model", "effect": "allow"},
            ],
        },
        "monitor": {
            "deny_burst_threshold": 3,
            "deny_burst_window_s": 60.0,
            "rate_zscore_threshold": 3.0,
            "rate_window_minutes": 30,
        },
    }


def write_default_config(directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config_path = directory / "config.json"
    config_path.write_text(json.dumps(default_config_dict(), indent=2) + "\n")
    return config_path
