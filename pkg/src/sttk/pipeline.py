"""Offline detection pipeline: replay a capture, emit windowed reports.

Replay is driven by capture timestamps, not wall clock, so a given
capture always produces the same reports. Ticks fire at multiples of the
sample period; each report counts distinct identities over the trailing
window ending at the tick. A final tick past the last frame guarantees
every frame lands in at least one report window (when the window is at
least the period). An empty capture yields a single all-zero report so
downstream can tell "empty" from "offline".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .config import SensorConfig
from .counter import CrowdingReport, count_window
from .detector import process_frame
from .dot11 import TooShortError, parse_frame
from .oui import OuiRegistry
from .pcap import FrameSource, TruncatedRecord
from .window import WindowStore


@dataclass
class DetectStats:
    frames: int = 0
    parse_errors: int = 0
    observations: int = 0
    truncated: bool = False
    reports: int = 0


def run_detect(
    source: FrameSource,
    config: SensorConfig,
    registry: OuiRegistry | None = None,
    *,
    store: WindowStore | None = None,
    on_report: Callable[[CrowdingReport], None] | None = None,
) -> tuple[list[CrowdingReport], DetectStats]:
    """Replay a frame source through the detector; returns (reports, stats).

    A truncated capture keeps its partial results and is flagged in the
    stats rather than raised.
    """
    registry = registry if registry is not None else config.registry()
    store = store if store is not None else WindowStore()
    cfg = config.fingerprint_config()
    period = config.sample_period_s
    window = config.window_s
    retention = max(config.effective_retention_s(), window)

    reports: list[CrowdingReport] = []
    stats = DetectStats()

    def tick(now: int) -> None:
        report = count_window(store.snapshot(now, window), config.sensor_id, now, window)
        reports.append(report)
        stats.reports += 1
        store.prune(now, retention)
        if on_report is not None:
            on_report(report)

    next_tick: int | None = None
    t_max: float | None = None
    record_iter = source.records()
    while True:
        try:
            record = next(record_iter)
        except StopIteration:
            break
        except TruncatedRecord:
            stats.truncated = True
            break
        ts = record.timestamp
        if next_tick is None:
            # first tick at the next period multiple; a frame exactly on the
            # boundary belongs to the tick at its own timestamp
            next_tick = math.ceil(ts / period) * period
        while ts > next_tick:
            tick(next_tick)
            next_tick += period
        stats.frames += 1
        if t_max is None or ts > t_max:
            t_max = ts
        try:
            frame = parse_frame(record.frame)
        except TooShortError:
            stats.parse_errors += 1
            continue
        obs = process_frame(frame, ts, registry=registry, salt=config.salt, cfg=cfg)
        if obs is not None:
            stats.observations += 1
            store.record(obs)

    if t_max is None:
        tick(0)
        return reports, stats
    assert next_tick is not None
    while next_tick - period < t_max:
        tick(next_tick)
        next_tick += period
    return reports, stats
