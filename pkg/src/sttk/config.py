"""Sensor and collector configuration, persisted as one JSON file.

The anonymization salt is generated on first start and persisted with
the config; it never leaves the sensor.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from .detector import DEFAULT_FINGERPRINT_IE_IDS, DEFAULT_VARYING_IE_IDS, FingerprintConfig
from .oui import OuiRegistry
from .uplink import Transport


@dataclass
class CollectorConfig:
    data_dir: str = "crowding-data"
    host: str = "127.0.0.1"
    port: int = 8008
    dead_letter_path: str | None = None
    webhook_url: str | None = None
    mqtt_host: str | None = None
    mqtt_port: int = 1883
    policies: list[dict] = field(default_factory=list)

    def resolved_dead_letter(self) -> str:
        return self.dead_letter_path or str(Path(self.data_dir) / "dead_letter.ndjson")


@dataclass
class SensorConfig:
    sensor_id: str = "sensor-1"
    window_s: int = 300
    sample_period_s: int = 300
    salt: int = 0
    transport: str = Transport.JSON_MQTT
    sink: str = "stdout"  # stdout | file | mqtt | memory
    sink_path: str | None = None
    mqtt_host: str = "127.0.0.1"
    mqtt_port: int = 1883
    buffer_capacity: int = 100
    retention_s: int | None = None
    journal_path: str | None = None
    oui_registry_path: str | None = None
    included_ie_ids: list[int] = field(default_factory=lambda: list(DEFAULT_FINGERPRINT_IE_IDS))
    varying_ie_ids: list[int] = field(default_factory=lambda: sorted(DEFAULT_VARYING_IE_IDS))
    collector: CollectorConfig = field(default_factory=CollectorConfig)

    def __post_init__(self) -> None:
        if self.window_s <= 0 or self.sample_period_s <= 0:
            raise ValueError("window_s and sample_period_s must be positive")
        if self.transport not in Transport.ALL:
            raise ValueError(f"unknown transport {self.transport!r}")

    def fingerprint_config(self) -> FingerprintConfig:
        return FingerprintConfig(frozenset(self.included_ie_ids), frozenset(self.varying_ie_ids))

    def registry(self) -> OuiRegistry:
        if self.oui_registry_path:
            return OuiRegistry.load_path(self.oui_registry_path)
        return OuiRegistry.bundled()

    def effective_retention_s(self) -> int:
        return self.retention_s if self.retention_s is not None else 2 * self.window_s

    def to_json(self) -> dict:
        doc = {
            "sensor_id": self.sensor_id,
            "window_s": self.window_s,
            "sample_period_s": self.sample_period_s,
            "salt": f"{self.salt:016x}",
            "transport": self.transport,
            "sink": self.sink,
            "sink_path": self.sink_path,
            "mqtt_host": self.mqtt_host,
            "mqtt_port": self.mqtt_port,
            "buffer_capacity": self.buffer_capacity,
            "retention_s": self.retention_s,
            "journal_path": self.journal_path,
            "oui_registry_path": self.oui_registry_path,
            "included_ie_ids": self.included_ie_ids,
            "varying_ie_ids": self.varying_ie_ids,
            "collector": vars(self.collector),
        }
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "SensorConfig":
        kwargs = dict(doc)
        if "salt" in kwargs:
            kwargs["salt"] = int(kwargs["salt"], 16)
        if "collector" in kwargs:
            kwargs["collector"] = CollectorConfig(**kwargs["collector"])
        return cls(**kwargs)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def create(cls, sensor_id: str = "sensor-1") -> "SensorConfig":
        return cls(sensor_id=sensor_id, salt=secrets.randbits(64))

    @classmethod
    def load(cls, path: str | Path, *, create_missing: bool = True) -> "SensorConfig":
        """Load a config; on first start, generate one (fresh salt) and persist it."""
        path = Path(path)
        if not path.exists():
            if not create_missing:
                raise FileNotFoundError(path)
            config = cls.create()
            config.save(path)
            return config
        doc = json.loads(path.read_text(encoding="utf-8"))
        return cls.from_json(doc)
