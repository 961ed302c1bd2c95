"""Cloud-side ingestion: per-sensor time series, validation, export.

Storage is an append-only NDJSON file per sensor plus an in-memory index
rebuilt at startup. Re-delivering a report is idempotent: the same
(sensor_id, ts) key overwrites. Undecodable payloads are counted and
quarantined to a dead-letter file, never stored.
"""

from __future__ import annotations

import csv
import io
import json
import threading
import time
import urllib.parse
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

from . import uplink
from .uplink import DecodeError, InvariantViolation

_CSV_HEADER = ("sensor_id", "ts", "window_s", "connected", "probes_real", "probes_virtual", "total")


@dataclass(frozen=True)
class SeriesPoint:
    sensor_id: str
    ts: int
    window_s: int
    connected: int
    probes_real: int
    probes_virtual: int
    total: int

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in _CSV_HEADER}

    @classmethod
    def from_json(cls, doc: dict) -> "SeriesPoint":
        return cls(**{k: doc[k] for k in _CSV_HEADER})


class SeriesStore:
    """Per-sensor ordered series; None data_dir keeps everything in memory."""

    def __init__(self, data_dir: str | Path | None = None):
        self.data_dir = Path(data_dir) if data_dir is not None else None
        self._series: dict[str, dict[int, SeriesPoint]] = {}
        self._lock = threading.Lock()
        if self.data_dir is not None:
            self.data_dir.mkdir(parents=True, exist_ok=True)
            self._load()

    def _sensor_path(self, sensor_id: str) -> Path:
        assert self.data_dir is not None
        return self.data_dir / (urllib.parse.quote(sensor_id, safe="") + ".ndjson")

    def _load(self) -> None:
        assert self.data_dir is not None
        for path in sorted(self.data_dir.glob("*.ndjson")):
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    point = SeriesPoint.from_json(json.loads(line))
                    self._series.setdefault(point.sensor_id, {})[point.ts] = point

    def upsert(self, point: SeriesPoint) -> bool:
        """Store a point; returns False when an identical point was present."""
        with self._lock:
            series = self._series.setdefault(point.sensor_id, {})
            if series.get(point.ts) == point:
                return False
            series[point.ts] = point
            if self.data_dir is not None:
                with open(self._sensor_path(point.sensor_id), "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(point.to_json(), separators=(",", ":")) + "\n")
            return True

    def query(self, sensor_id: str, t0: int, t1: int) -> list[SeriesPoint]:
        """Points with ts in [t0, t1], ascending; unknown sensors are empty."""
        if t0 > t1:
            raise ValueError(f"reversed bounds: {t0} > {t1}")
        with self._lock:
            series = self._series.get(sensor_id, {})
            return [series[ts] for ts in sorted(series) if t0 <= ts <= t1]

    def sensors(self) -> list[str]:
        with self._lock:
            return sorted(self._series)

    def point_count(self) -> int:
        with self._lock:
            return sum(len(s) for s in self._series.values())


def export_csv(points: Iterable[SeriesPoint]) -> str:
    out = io.StringIO()
    writer = csv.writer(out)  # RFC 4180: CRLF rows, quotes only where needed
    writer.writerow(_CSV_HEADER)
    for p in points:
        writer.writerow([p.sensor_id, p.ts, p.window_s, p.connected, p.probes_real, p.probes_virtual, p.total])
    return out.getvalue()


def export_json(points: Iterable[SeriesPoint]) -> str:
    return json.dumps([p.to_json() for p in points], indent=2) + "\n"


@dataclass
class IngestStats:
    accepted: int = 0
    duplicates: int = 0
    decode_errors: int = 0
    invariant_errors: int = 0


class Collector:
    """Decodes, validates and stores incoming reports; fans out alerts."""

    def __init__(self, store: SeriesStore, engine=None, dead_letter_path: str | Path | None = None):
        self.store = store
        self.engine = engine
        self.dead_letter_path = Path(dead_letter_path) if dead_letter_path else None
        self.stats = IngestStats()

    def _quarantine(self, payload: bytes, reason: str) -> None:
        if self.dead_letter_path is None:
            return
        self.dead_letter_path.parent.mkdir(parents=True, exist_ok=True)
        line = {"received": int(time.time()), "reason": reason, "payload_hex": payload.hex()}
        with open(self.dead_letter_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(line, separators=(",", ":")) + "\n")

    def _commit(self, point: SeriesPoint) -> SeriesPoint:
        fresh = self.store.upsert(point)
        if fresh:
            self.stats.accepted += 1
            if self.engine is not None:
                self.engine.on_point(point)
        else:
            self.stats.duplicates += 1
        return point

    def ingest_json(self, payload: bytes) -> SeriesPoint:
        try:
            report = uplink.decode_json(payload)
        except InvariantViolation as exc:
            self.stats.invariant_errors += 1
            self._quarantine(payload, str(exc))
            raise
        except DecodeError as exc:
            self.stats.decode_errors += 1
            self._quarantine(payload, str(exc))
            raise
        point = SeriesPoint(
            sensor_id=report.sensor_id,
            ts=report.ts,
            window_s=report.window_s,
            connected=report.connected,
            probes_real=report.probes_real,
            probes_virtual=report.probes_virtual,
            total=report.total,
        )
        return self._commit(point)

    def ingest_lorawan(self, payload: bytes, sensor_id: str, received_ts: int | None = None) -> SeriesPoint:
        """The compact payload carries no timestamp; reception time is used."""
        try:
            fields = uplink.decode_lorawan(payload)
        except DecodeError as exc:
            self.stats.decode_errors += 1
            self._quarantine(payload, str(exc))
            raise
        # Saturating encode clamps the total to min(sum, 0xFFFF).
        expected_total = min(fields.connected + fields.probes_real + fields.probes_virtual, 0xFFFF)
        if fields.total != expected_total:
            self.stats.invariant_errors += 1
            self._quarantine(payload, f"total {fields.total} != expected {expected_total}")
            raise InvariantViolation(f"total {fields.total} != expected {expected_total}")
        point = SeriesPoint(
            sensor_id=sensor_id,
            ts=received_ts if received_ts is not None else int(time.time()),
            window_s=fields.window_min * 60,
            connected=fields.connected,
            probes_real=fields.probes_real,
            probes_virtual=fields.probes_virtual,
            total=fields.total,
        )
        return self._commit(point)

    def ingest_ndjson(self, stream: TextIO) -> tuple[int, int]:
        """Batch-ingest JSON report lines; returns (accepted, failed)."""
        ok = failed = 0
        for line in stream:
            line = line.strip()
            if not line:
                continue
            try:
                self.ingest_json(line.encode())
                ok += 1
            except (DecodeError, InvariantViolation):
                failed += 1
        return ok, failed
