"""Report encodings and publish sinks.

Two wire formats: a JSON object with a fixed key order (MQTT-style
uplink) and a 10-byte big-endian payload for LoRaWAN, where counts
saturate at field width. Sinks hide the transport: stdout, NDJSON file,
MQTT broker, or an in-memory list for tests. Publishing keeps a bounded
retry buffer so a flapping sink drops the oldest reports, not the
newest.
"""

from __future__ import annotations

import json
import struct
import sys
from collections import deque
from dataclasses import dataclass
from pathlib import Path

from .counter import CrowdingReport

LORA_VERSION = 1
LORA_PAYLOAD_LEN = 10
LORA_APP_PORT = 10
_LORA_STRUCT = ">BHHHHB"

TOPIC_PREFIX = "sttk/v1"
TOPIC_FILTER = f"{TOPIC_PREFIX}/+/crowding"

JSON_KEYS = ("sensor_id", "ts", "window_s", "connected", "probes_real", "probes_virtual", "total")


class DecodeError(ValueError):
    """Payload cannot be decoded into a report."""


class BadLength(DecodeError):
    pass


class BadVersion(DecodeError):
    pass


class InvariantViolation(ValueError):
    """Decoded counts are inconsistent (total != sum of components)."""


def topic_for(sensor_id: str) -> str:
    return f"{TOPIC_PREFIX}/{sensor_id}/crowding"


def encode_json(report: CrowdingReport) -> bytes:
    doc = {
        "sensor_id": report.sensor_id,
        "ts": report.ts,
        "window_s": report.window_s,
        "connected": report.connected,
        "probes_real": report.probes_real,
        "probes_virtual": report.probes_virtual,
        "total": report.total,
    }
    return json.dumps(doc, separators=(",", ":")).encode()


def decode_json(payload: bytes) -> CrowdingReport:
    try:
        doc = json.loads(payload)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DecodeError(f"not a JSON report: {exc}") from exc
    if not isinstance(doc, dict):
        raise DecodeError("JSON report must be an object")
    missing = [k for k in JSON_KEYS if k not in doc]
    if missing:
        raise DecodeError(f"missing keys: {missing}")
    if not isinstance(doc["sensor_id"], str) or not doc["sensor_id"]:
        raise DecodeError("sensor_id must be a non-empty string")
    for key in JSON_KEYS[1:]:
        if not isinstance(doc[key], int) or isinstance(doc[key], bool) or doc[key] < 0:
            raise DecodeError(f"{key} must be a non-negative integer")
    total = doc["connected"] + doc["probes_real"] + doc["probes_virtual"]
    if doc["total"] != total:
        raise InvariantViolation(f"total {doc['total']} != component sum {total}")
    return CrowdingReport(
        sensor_id=doc["sensor_id"],
        ts=doc["ts"],
        window_s=doc["window_s"],
        connected=doc["connected"],
        probes_real=doc["probes_real"],
        probes_virtual=doc["probes_virtual"],
    )


@dataclass(frozen=True)
class LoraFields:
    """Fields carried by the compact payload; timestamps come from the network."""

    version: int
    total: int
    connected: int
    probes_real: int
    probes_virtual: int
    window_min: int


def _sat16(n: int) -> int:
    return min(n, 0xFFFF)


def encode_lorawan(report: CrowdingReport) -> bytes:
    window_min = min(report.window_s // 60, 0xFF)
    return struct.pack(
        _LORA_STRUCT,
        LORA_VERSION,
        _sat16(report.total),
        _sat16(report.connected),
        _sat16(report.probes_real),
        _sat16(report.probes_virtual),
        window_min,
    )


def decode_lorawan(payload: bytes) -> LoraFields:
    if len(payload) != LORA_PAYLOAD_LEN:
        raise BadLength(f"payload of {len(payload)} bytes, need {LORA_PAYLOAD_LEN}")
    version, total, connected, real, virtual, window_min = struct.unpack(_LORA_STRUCT, payload)
    if version != LORA_VERSION:
        raise BadVersion(f"payload version {version}, need {LORA_VERSION}")
    return LoraFields(version, total, connected, real, virtual, window_min)


class Transport:
    JSON_MQTT = "json_mqtt"
    LORAWAN = "lorawan"
    ALL = (JSON_MQTT, LORAWAN)


@dataclass(frozen=True)
class Delivery:
    """Encoded payload plus the routing metadata a sink needs."""

    payload: bytes
    topic: str
    lorawan_port: int | None = None


class SinkUnavailable(Exception):
    pass


class Sink:
    def send(self, delivery: Delivery) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class MemorySink(Sink):
    """Test sink: records deliveries; `down=True` simulates an outage."""

    def __init__(self):
        self.deliveries: list[Delivery] = []
        self.down = False

    def send(self, delivery: Delivery) -> None:
        if self.down:
            raise SinkUnavailable("memory sink marked down")
        self.deliveries.append(delivery)


class StdoutSink(Sink):
    def send(self, delivery: Delivery) -> None:
        sys.stdout.write(_as_line(delivery))
        sys.stdout.flush()


class FileSink(Sink):
    """Appends one NDJSON line per delivery."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def send(self, delivery: Delivery) -> None:
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(_as_line(delivery))
        except OSError as exc:
            raise SinkUnavailable(str(exc)) from exc


def _as_line(delivery: Delivery) -> str:
    if delivery.lorawan_port is not None:
        doc = {"topic": delivery.topic, "port": delivery.lorawan_port, "payload_hex": delivery.payload.hex()}
        return json.dumps(doc, separators=(",", ":")) + "\n"
    return delivery.payload.decode() + "\n"


class MqttSink(Sink):
    """Publishes payload bytes to the delivery topic; connects lazily."""

    def __init__(self, host: str, port: int = 1883, client_id: str | None = None):
        self.host = host
        self.port = port
        self.client_id = client_id
        self._client = None

    def send(self, delivery: Delivery) -> None:
        from .mqtt import MqttClient, MqttError

        try:
            if self._client is None:
                client = MqttClient(self.host, self.port, client_id=self.client_id)
                client.connect()
                self._client = client
            self._client.publish(delivery.topic, delivery.payload)
        except (MqttError, OSError) as exc:
            self._drop_client()
            raise SinkUnavailable(str(exc)) from exc

    def _drop_client(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None

    def close(self) -> None:
        self._drop_client()


@dataclass(frozen=True)
class DeliveryReceipt:
    delivered: bool
    flushed: int
    pending: int


class Publisher:
    """Encodes reports per transport and pushes them through one sink.

    While the sink is unavailable, deliveries queue in a bounded buffer
    (oldest dropped beyond capacity) and are flushed in order before the
    next fresh delivery.
    """

    def __init__(self, sink: Sink, transport: str = Transport.JSON_MQTT, *, buffer_capacity: int = 100):
        if transport not in Transport.ALL:
            raise ValueError(f"unknown transport {transport!r}")
        self.sink = sink
        self.transport = transport
        self._queue: deque[Delivery] = deque(maxlen=buffer_capacity)

    @property
    def pending(self) -> int:
        return len(self._queue)

    def _encode(self, report: CrowdingReport) -> Delivery:
        topic = topic_for(report.sensor_id)
        if self.transport == Transport.LORAWAN:
            return Delivery(encode_lorawan(report), topic, lorawan_port=LORA_APP_PORT)
        return Delivery(encode_json(report), topic)

    def flush(self) -> int:
        """Deliver queued payloads in order; stops at the first failure."""
        flushed = 0
        while self._queue:
            try:
                self.sink.send(self._queue[0])
            except SinkUnavailable:
                break
            self._queue.popleft()
            flushed += 1
        return flushed

    def publish(self, report: CrowdingReport) -> DeliveryReceipt:
        delivery = self._encode(report)
        flushed = self.flush()
        if self._queue:
            self._queue.append(delivery)
            return DeliveryReceipt(False, flushed, len(self._queue))
        try:
            self.sink.send(delivery)
        except SinkUnavailable:
            self._queue.append(delivery)
            return DeliveryReceipt(False, flushed, len(self._queue))
        return DeliveryReceipt(True, flushed, 0)
