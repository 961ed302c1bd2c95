"""Per-tick crowding reports from window snapshots.

The total is the sum of connected devices, mobile devices probing with
their real address, and distinct footprints of randomizing devices. An
identity seen both in data frames and real-address probes is counted
once (the two sets share the same salted hash, so dedup is id equality).
"""

from __future__ import annotations

from dataclasses import dataclass

from .detector import ObservationKind

Snapshot = dict[ObservationKind, set[int]]


@dataclass(frozen=True)
class CrowdingReport:
    sensor_id: str
    ts: int
    window_s: int
    connected: int
    probes_real: int
    probes_virtual: int

    @property
    def total(self) -> int:
        return self.connected + self.probes_real + self.probes_virtual


def count_window(snapshot: Snapshot, sensor_id: str, now: float, window_s: float) -> CrowdingReport:
    connected = snapshot.get(ObservationKind.CONNECTED_UE, set())
    real = snapshot.get(ObservationKind.REAL_PROBE_MOBILE, set()) - connected
    virtual = snapshot.get(ObservationKind.VIRTUAL_FOOTPRINT, set())
    return CrowdingReport(
        sensor_id=sensor_id,
        ts=int(now),
        window_s=int(window_s),
        connected=len(connected),
        probes_real=len(real),
        probes_virtual=len(virtual),
    )
