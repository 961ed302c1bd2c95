"""Threshold alerting over report series.

A policy fires on a rising edge only: the K most recent samples are all
at or above the threshold and the sample before that run was below (or
absent). It re-arms once a sample drops below the threshold, so a
sustained plateau produces exactly one alert.
"""

from __future__ import annotations

import json
import sys
import urllib.request
from dataclasses import dataclass
from typing import Sequence

from .collector import SeriesPoint


@dataclass(frozen=True)
class AlertPolicy:
    name: str
    threshold: int
    consecutive: int = 1
    sensor_id: str = "*"

    def __post_init__(self) -> None:
        if self.consecutive < 1:
            raise ValueError("consecutive must be >= 1")

    def matches(self, sensor_id: str) -> bool:
        return self.sensor_id in ("*", sensor_id)


@dataclass(frozen=True)
class Alert:
    policy: str
    sensor_id: str
    ts: int
    total: int

    def to_json(self) -> dict:
        return {"policy": self.policy, "sensor_id": self.sensor_id, "ts": self.ts, "total": self.total}


def evaluate_alerts(policy: AlertPolicy, new_point: SeriesPoint, history: Sequence[SeriesPoint]) -> Alert | None:
    """Batch form: history holds the sensor's prior points, ascending."""
    k = policy.consecutive
    totals = [p.total for p in history] + [new_point.total]
    if len(totals) < k:
        return None
    if any(t < policy.threshold for t in totals[-k:]):
        return None
    if len(totals) > k and totals[-k - 1] >= policy.threshold:
        return None
    return Alert(policy.name, new_point.sensor_id, new_point.ts, new_point.total)


class AlertSink:
    def notify(self, alert: Alert) -> None:
        raise NotImplementedError


class StdoutAlertSink(AlertSink):
    def notify(self, alert: Alert) -> None:
        sys.stdout.write("ALERT " + json.dumps(alert.to_json(), separators=(",", ":")) + "\n")
        sys.stdout.flush()


class WebhookAlertSink(AlertSink):
    def __init__(self, url: str, timeout: float = 5.0):
        self.url = url
        self.timeout = timeout

    def notify(self, alert: Alert) -> None:
        req = urllib.request.Request(
            self.url,
            data=json.dumps(alert.to_json()).encode(),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(req, timeout=self.timeout):
            pass


class AlertEngine:
    """Streaming evaluation: one run-length counter per (policy, sensor)."""

    def __init__(self, policies: Sequence[AlertPolicy] = (), sinks: Sequence[AlertSink] = ()):
        self._policies = list(policies)
        self._sinks = list(sinks)
        self._run: dict[tuple[str, str], int] = {}
        self.history: list[Alert] = []

    @property
    def policies(self) -> list[AlertPolicy]:
        return list(self._policies)

    def add_policy(self, policy: AlertPolicy) -> None:
        if any(p.name == policy.name for p in self._policies):
            raise ValueError(f"policy {policy.name!r} already exists")
        self._policies.append(policy)

    def on_point(self, point: SeriesPoint) -> list[Alert]:
        fired: list[Alert] = []
        for policy in self._policies:
            if not policy.matches(point.sensor_id):
                continue
            key = (policy.name, point.sensor_id)
            run = self._run.get(key, 0) + 1 if point.total >= policy.threshold else 0
            self._run[key] = run
            if run == policy.consecutive:
                fired.append(Alert(policy.name, point.sensor_id, point.ts, point.total))
        for alert in fired:
            self.history.append(alert)
            for sink in self._sinks:
                sink.notify(alert)
        return fired
