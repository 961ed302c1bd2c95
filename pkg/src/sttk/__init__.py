"""Passive Wi-Fi crowd counting toolkit.

Edge side: parse captures, classify frames, fingerprint randomized
probes, count distinct devices over a sliding window and publish
compact reports. Cloud side: ingest reports, keep per-sensor series,
evaluate crowding alerts and export data. A deterministic trace
simulator provides ground truth for validation.
"""

__version__ = "0.1.0"

from .counter import CrowdingReport, count_window
from .detector import FingerprintConfig, Observation, ObservationKind, process_frame
from .dot11 import Frame, FrameKind, MacAddress, parse_frame
from .window import WindowStore

__all__ = [
    "CrowdingReport",
    "FingerprintConfig",
    "Frame",
    "FrameKind",
    "MacAddress",
    "Observation",
    "ObservationKind",
    "WindowStore",
    "count_window",
    "parse_frame",
    "process_frame",
    "__version__",
]
