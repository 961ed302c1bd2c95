"""Minimal MQTT 3.1.1 client: QoS-0 publish and subscribe over TCP.

Covers exactly what the uplink sink and the collector subscription need:
CONNECT/CONNACK, PUBLISH, SUBSCRIBE/SUBACK, PINGREQ/PINGRESP and
DISCONNECT. QoS 1/2, retained messages, wills, persistent sessions and
TLS are out of scope. Packet codec helpers are module-level so tests can
run a loopback broker against the same wire format.
"""

from __future__ import annotations

import os
import socket
import struct
from typing import Optional

CONNECT = 1
CONNACK = 2
PUBLISH = 3
SUBSCRIBE = 8
SUBACK = 9
PINGREQ = 12
PINGRESP = 13
DISCONNECT = 14


class MqttError(Exception):
    pass


def encode_remaining_length(n: int) -> bytes:
    if n < 0 or n > 268_435_455:
        raise MqttError(f"remaining length {n} out of range")
    out = bytearray()
    while True:
        n, digit = divmod(n, 128)
        out.append(digit | (0x80 if n else 0))
        if not n:
            return bytes(out)


def encode_string(text: str) -> bytes:
    data = text.encode("utf-8")
    return struct.pack(">H", len(data)) + data


def encode_packet(ptype: int, flags: int, body: bytes) -> bytes:
    return bytes([(ptype << 4) | flags]) + encode_remaining_length(len(body)) + body


def _recv_exact(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            raise MqttError("connection closed mid-packet")
        buf += chunk
    return bytes(buf)


def read_packet(sock: socket.socket) -> Optional[tuple[int, int, bytes]]:
    """Read one packet; None on a clean EOF at a packet boundary."""
    first = sock.recv(1)
    if not first:
        return None
    ptype, flags = first[0] >> 4, first[0] & 0x0F
    length = 0
    for shift in range(0, 28, 7):
        byte = _recv_exact(sock, 1)[0]
        length |= (byte & 0x7F) << shift
        if not byte & 0x80:
            break
    else:
        raise MqttError("malformed remaining length")
    body = _recv_exact(sock, length) if length else b""
    return ptype, flags, body


def topic_matches(topic_filter: str, topic: str) -> bool:
    """'+' matches one level, a trailing '#' matches the rest."""
    parts = topic_filter.split("/")
    levels = topic.split("/")
    for i, part in enumerate(parts):
        if part == "#":
            return True
        if i >= len(levels):
            return False
        if part not in ("+", levels[i]):
            return False
    return len(parts) == len(levels)


class MqttClient:
    def __init__(
        self,
        host: str,
        port: int = 1883,
        *,
        client_id: str | None = None,
        keepalive: int = 60,
        timeout: float = 5.0,
    ):
        self.host = host
        self.port = port
        self.client_id = client_id or f"sttk-{os.getpid()}-{os.urandom(3).hex()}"
        self.keepalive = keepalive
        self.timeout = timeout
        self._sock: socket.socket | None = None
        self._inbox: list[tuple[str, bytes]] = []
        self._packet_id = 0

    def connect(self) -> None:
        sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        body = (
            encode_string("MQTT")
            + bytes([4])  # protocol level 3.1.1
            + bytes([0x02])  # clean session
            + struct.pack(">H", self.keepalive)
            + encode_string(self.client_id)
        )
        sock.sendall(encode_packet(CONNECT, 0, body))
        packet = read_packet(sock)
        if packet is None or packet[0] != CONNACK:
            sock.close()
            raise MqttError("no CONNACK from broker")
        if packet[2][1] != 0:
            sock.close()
            raise MqttError(f"connection refused, return code {packet[2][1]}")
        self._sock = sock

    def _require_sock(self) -> socket.socket:
        if self._sock is None:
            raise MqttError("not connected")
        return self._sock

    def publish(self, topic: str, payload: bytes) -> None:
        sock = self._require_sock()
        sock.sendall(encode_packet(PUBLISH, 0, encode_string(topic) + payload))

    def subscribe(self, topic_filter: str) -> None:
        sock = self._require_sock()
        self._packet_id = self._packet_id % 0xFFFF + 1
        body = struct.pack(">H", self._packet_id) + encode_string(topic_filter) + bytes([0])
        sock.sendall(encode_packet(SUBSCRIBE, 0x02, body))
        while True:
            packet = read_packet(sock)
            if packet is None:
                raise MqttError("connection closed waiting for SUBACK")
            ptype, _, pbody = packet
            if ptype == SUBACK:
                if len(pbody) < 3 or pbody[2] == 0x80:
                    raise MqttError("subscription refused")
                return
            if ptype == PUBLISH:
                self._inbox.append(_split_publish(pbody))

    def receive(self, timeout: float | None = None) -> tuple[str, bytes] | None:
        """Next published (topic, payload), or None when the timeout expires."""
        if self._inbox:
            return self._inbox.pop(0)
        sock = self._require_sock()
        sock.settimeout(timeout if timeout is not None else self.timeout)
        try:
            while True:
                packet = read_packet(sock)
                if packet is None:
                    raise MqttError("connection closed by broker")
                ptype, _, body = packet
                if ptype == PUBLISH:
                    return _split_publish(body)
                # PINGRESP and anything else QoS 0 can ignore
        except socket.timeout:
            return None
        finally:
            sock.settimeout(self.timeout)

    def ping(self) -> None:
        self._require_sock().sendall(encode_packet(PINGREQ, 0, b""))

    def disconnect(self) -> None:
        if self._sock is not None:
            try:
                self._sock.sendall(encode_packet(DISCONNECT, 0, b""))
            except OSError:
                pass
        self.close()

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None


def _split_publish(body: bytes) -> tuple[str, bytes]:
    if len(body) < 2:
        raise MqttError("malformed PUBLISH")
    topic_len = struct.unpack_from(">H", body)[0]
    if len(body) < 2 + topic_len:
        raise MqttError("malformed PUBLISH topic")
    topic = body[2 : 2 + topic_len].decode("utf-8")
    return topic, body[2 + topic_len :]
