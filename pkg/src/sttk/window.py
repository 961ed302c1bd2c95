"""Sensor-local anonymized identity store with sliding-window queries.

Keeps the latest-seen timestamp per (kind, id64) and answers distinct-id
snapshots over a half-open trailing window (now - window, now]. Writes are
serialized by a lock so the counting tick can snapshot while ingestion
continues; an optional NDJSON journal supports crash recovery.
"""

from __future__ import annotations

import json
import threading
from typing import TextIO

from .detector import Observation, ObservationKind


class WindowStore:
    def __init__(self, journal: TextIO | None = None):
        self._last_seen: dict[tuple[ObservationKind, int], float] = {}
        self._lock = threading.Lock()
        self._journal = journal

    def __len__(self) -> int:
        with self._lock:
            return len(self._last_seen)

    def record(self, obs: Observation) -> None:
        """Insert or refresh; last_seen only ever moves forward."""
        key = (obs.kind, obs.id64)
        with self._lock:
            prev = self._last_seen.get(key)
            if prev is not None and obs.ts <= prev:
                return
            self._last_seen[key] = obs.ts
            if self._journal is not None:
                line = {"kind": obs.kind.value, "id64": f"{obs.id64:016x}", "last_seen": obs.ts}
                self._journal.write(json.dumps(line) + "\n")

    def snapshot(self, now: float, window_s: float) -> dict[ObservationKind, set[int]]:
        """Distinct ids per kind with last_seen in (now - window_s, now]."""
        if window_s <= 0:
            raise ValueError("window must be positive")
        cutoff = now - window_s
        out: dict[ObservationKind, set[int]] = {kind: set() for kind in ObservationKind}
        with self._lock:
            for (kind, id64), last_seen in self._last_seen.items():
                if cutoff < last_seen <= now:
                    out[kind].add(id64)
        return out

    def prune(self, now: float, retention_s: float) -> int:
        """Drop identities with last_seen <= now - retention_s; returns count."""
        cutoff = now - retention_s
        with self._lock:
            stale = [key for key, last_seen in self._last_seen.items() if last_seen <= cutoff]
            for key in stale:
                del self._last_seen[key]
        return len(stale)

    @classmethod
    def recover(cls, journal_lines: TextIO, journal: TextIO | None = None) -> "WindowStore":
        """Rebuild a store from a journal written by a previous run."""
        store = cls()
        for line in journal_lines:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            obs = Observation(ObservationKind(doc["kind"]), int(doc["id64"], 16), float(doc["last_seen"]))
            store.record(obs)
        store._journal = journal
        return store
