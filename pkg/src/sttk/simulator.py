"""Synthetic 802.11 trace generation with exact ground truth.

A scenario describes a device population: associated stations emitting
data frames, mobile stations probing with their real address, and
randomizing stations that rotate locally-administered addresses per
burst or per probe while keeping a fixed IE template. Generation is
fully deterministic: one (scenario, seed) pair yields byte-identical
pcap output and ground truth.

Ground truth records, per device, the exact emission times (integer
microseconds) plus a dedup identity: the real MAC for address-based
devices, and the IE-template equivalence class for randomizing devices.
Two randomizing devices sharing a template collapse to one expected
identity, which documents the fingerprinting method's known limitation.
"""

from __future__ import annotations

import enum
import io
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .dot11 import (
    InformationElement,
    MacAddress,
    build_beacon,
    build_data,
    build_probe_request,
)
from .pcap import CaptureRecord, write_pcap

US = 1_000_000


class InvalidScenario(ValueError):
    pass


class DeviceMode(enum.Enum):
    ASSOCIATED_DATA = "associated_data"
    PROBING_REAL = "probing_real"
    PROBING_RANDOMIZED = "probing_randomized"


class Randomization(enum.Enum):
    PER_BURST = "per_burst"
    PER_PROBE = "per_probe"


def default_ie_template(variant: int = 0) -> tuple[InformationElement, ...]:
    """Typical probe-request IE set; distinct variants give distinct templates."""
    return (
        InformationElement(0, b""),  # wildcard SSID, not part of the fingerprint
        InformationElement(1, bytes([0x82, 0x84, 0x8B, 0x96])),
        InformationElement(3, bytes([6])),
        InformationElement(45, bytes(26)),
        InformationElement(221, b"\x00\x50\xf2\x08" + (variant & 0xFFFF).to_bytes(2, "big")),
    )


@dataclass(frozen=True)
class DeviceProfile:
    """One emitter in the population.

    ``mobile`` declares whether the device's OUI belongs to a mobile
    manufacturer in the registry the detector will use; real-address
    probes from non-mobile vendors model discarded noise. ``vary_channel``
    rewrites the DS-parameter IE value each burst, the way real probes
    hop channels. An explicit ``mac`` overrides OUI-based generation and
    may be shared between devices on purpose.
    """

    mode: DeviceMode
    oui: bytes | None = None
    mobile: bool = True
    mac: MacAddress | None = None
    ie_template: tuple[InformationElement, ...] = field(default_factory=default_ie_template)
    burst_size: int = 3
    burst_interval_s: float = 10.0
    randomization: Randomization = Randomization.PER_BURST
    active: tuple[float, float] | None = None
    vary_channel: bool = True


@dataclass(frozen=True)
class Scenario:
    duration_s: float
    devices: tuple[DeviceProfile, ...]
    seed: int = 0
    start_ts: int = 0
    drop_probability: float = 0.0
    noise_beacon_interval_s: float | None = None


# The IE ids whose content identifies a device template, and the ids whose
# value varies per probe. Written out independently of the detector so a
# mismatch shows up as a failing oracle, not a shared bug.
_TEMPLATE_IDS = (1, 50, 3, 45, 191, 127, 70, 107, 221)
_TEMPLATE_VARYING = (3,)


def _template_class(ies: tuple[InformationElement, ...]) -> str:
    parts = []
    for ie in ies:
        if ie.ie_id not in _TEMPLATE_IDS:
            continue
        if ie.ie_id in _TEMPLATE_VARYING:
            parts.append(f"{ie.ie_id}:{ie.length}:*")
        else:
            parts.append(f"{ie.ie_id}:{ie.length}:{ie.value.hex()}")
    return "|".join(parts)


@dataclass
class DeviceTruth:
    index: int
    mode: DeviceMode
    mobile: bool
    identity: str
    emit_times_us: list[int]


@dataclass(frozen=True)
class ExpectedCounts:
    """Detector-aligned counts plus raw device counts per mode."""

    connected: int
    probes_real: int
    probes_virtual: int
    device_connected: int
    device_real: int
    device_virtual: int

    @property
    def total(self) -> int:
        return self.connected + self.probes_real + self.probes_virtual


@dataclass
class GroundTruth:
    start_ts: int
    duration_s: float
    devices: list[DeviceTruth]

    def expected_counts(self, now: float, window_s: float) -> ExpectedCounts:
        """Counts for the half-open window (now - window_s, now]."""
        now_us = round(now * US)
        cutoff_us = now_us - round(window_s * US)
        connected_ids: set[str] = set()
        real_ids: set[str] = set()
        virtual_ids: set[str] = set()
        d_conn = d_real = d_virt = 0
        for dev in self.devices:
            if not any(cutoff_us < t <= now_us for t in dev.emit_times_us):
                continue
            if dev.mode is DeviceMode.ASSOCIATED_DATA:
                connected_ids.add(dev.identity)
                d_conn += 1
            elif dev.mode is DeviceMode.PROBING_REAL:
                if dev.mobile:
                    real_ids.add(dev.identity)
                    d_real += 1
            else:
                virtual_ids.add(dev.identity)
                d_virt += 1
        return ExpectedCounts(
            connected=len(connected_ids),
            probes_real=len(real_ids - connected_ids),
            probes_virtual=len(virtual_ids),
            device_connected=d_conn,
            device_real=d_real,
            device_virtual=d_virt,
        )

    def last_emit_ts(self) -> float:
        latest = max((t for dev in self.devices for t in dev.emit_times_us), default=0)
        return latest / US

    def to_json(self) -> dict:
        return {
            "start_ts": self.start_ts,
            "duration_s": self.duration_s,
            "devices": [
                {
                    "index": d.index,
                    "mode": d.mode.value,
                    "mobile": d.mobile,
                    "identity": d.identity,
                    "emit_times_us": d.emit_times_us,
                }
                for d in self.devices
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "GroundTruth":
        return cls(
            start_ts=doc["start_ts"],
            duration_s=doc["duration_s"],
            devices=[
                DeviceTruth(
                    index=d["index"],
                    mode=DeviceMode(d["mode"]),
                    mobile=d["mobile"],
                    identity=d["identity"],
                    emit_times_us=list(d["emit_times_us"]),
                )
                for d in doc["devices"]
            ],
        )


def _validate(scenario: Scenario) -> None:
    if scenario.duration_s <= 0:
        raise InvalidScenario("duration must be positive")
    if not 0.0 <= scenario.drop_probability < 1.0:
        raise InvalidScenario("drop probability must be in [0, 1)")
    if not scenario.devices:
        raise InvalidScenario("scenario needs at least one device")
    for i, dev in enumerate(scenario.devices):
        if dev.burst_size < 1:
            raise InvalidScenario(f"device {i}: burst_size must be >= 1")
        if dev.burst_interval_s <= 0:
            raise InvalidScenario(f"device {i}: burst_interval_s must be positive")
        if dev.mode is not DeviceMode.PROBING_RANDOMIZED:
            if dev.mac is None and dev.oui is None:
                raise InvalidScenario(f"device {i}: real-address device needs an oui or mac")
            if dev.oui is not None and len(dev.oui) != 3:
                raise InvalidScenario(f"device {i}: oui must be 3 bytes")
            first_octet = dev.mac.octets[0] if dev.mac is not None else dev.oui[0]
            if first_octet & 0x03:
                raise InvalidScenario(f"device {i}: real address must be unicast and globally unique")
        if dev.active is not None and (len(dev.active) != 2 or dev.active[0] >= dev.active[1]):
            raise InvalidScenario(f"device {i}: bad active span")


def _station_mac(rng: random.Random, oui: bytes, used: set[bytes]) -> MacAddress:
    while True:
        octets = oui + rng.randbytes(3)
        if octets not in used:
            used.add(octets)
            return MacAddress(octets)


def _virtual_mac(rng: random.Random, used: set[bytes]) -> MacAddress:
    while True:
        octets = bytearray(rng.randbytes(6))
        octets[0] = (octets[0] | 0x02) & 0xFE
        if bytes(octets) not in used:
            used.add(bytes(octets))
            return MacAddress(bytes(octets))


def _burst_ies(
    dev: DeviceProfile, rng: random.Random
) -> tuple[InformationElement, ...]:
    if not dev.vary_channel:
        return dev.ie_template
    channel = rng.randrange(1, 14)
    return tuple(
        InformationElement(ie.ie_id, bytes([channel])) if ie.ie_id == 3 and ie.length == 1 else ie
        for ie in dev.ie_template
    )


def generate(scenario: Scenario) -> tuple[bytes, GroundTruth]:
    """Render a scenario to link-type-105 pcap bytes and its ground truth."""
    _validate(scenario)
    base = random.Random(scenario.seed)
    dev_seeds = [base.getrandbits(64) for _ in scenario.devices]
    used_macs: set[bytes] = set()
    ap_mac = _station_mac(base, b"\x00\x00\x0c", used_macs)

    events: list[tuple[int, bytes]] = []
    truths: list[DeviceTruth] = []
    for index, (dev, dev_seed) in enumerate(zip(scenario.devices, dev_seeds)):
        rng = random.Random(dev_seed)
        start, end = dev.active if dev.active is not None else (0.0, scenario.duration_s)
        end = min(end, scenario.duration_s)
        seq = rng.randrange(4096)
        emit_times_us: list[int] = []

        if dev.mode is DeviceMode.PROBING_RANDOMIZED:
            identity = "fp:" + _template_class(dev.ie_template)
            sa: MacAddress | None = None
        else:
            mac = dev.mac if dev.mac is not None else _station_mac(rng, dev.oui or b"", used_macs)
            used_macs.add(mac.octets)
            identity = "mac:" + mac.octets.hex()
            sa = mac

        t = start
        while t < end:
            if dev.mode is DeviceMode.ASSOCIATED_DATA:
                frame = build_data(ap_mac, sa, ap_mac, to_ds=True, seq=seq)
                seq = (seq + 1) % 4096
                frame_times = [(t, frame)]
            else:
                if dev.mode is DeviceMode.PROBING_RANDOMIZED and dev.randomization is Randomization.PER_BURST:
                    sa = _virtual_mac(rng, used_macs)
                ies = _burst_ies(dev, rng) if dev.mode is DeviceMode.PROBING_RANDOMIZED else dev.ie_template
                frame_times = []
                offset = 0.0
                for j in range(dev.burst_size):
                    if dev.mode is DeviceMode.PROBING_RANDOMIZED and (
                        dev.randomization is Randomization.PER_PROBE or sa is None
                    ):
                        sa = _virtual_mac(rng, used_macs)
                    frame = build_probe_request(sa, ies, seq=seq)
                    seq = (seq + 1) % 4096
                    frame_times.append((t + offset, frame))
                    offset += rng.uniform(0.005, 0.02)
            for ft, frame in frame_times:
                if scenario.drop_probability and rng.random() < scenario.drop_probability:
                    continue
                t_us = round(ft * US)
                events.append((t_us, frame))
                emit_times_us.append(scenario.start_ts * US + t_us)
            t += dev.burst_interval_s
        truths.append(DeviceTruth(index, dev.mode, dev.mobile, identity, emit_times_us))

    if scenario.noise_beacon_interval_s:
        t = 0.0
        seq = base.randrange(4096)
        while t < scenario.duration_s:
            events.append((round(t * US), build_beacon(ap_mac, seq=seq, ssid="crowding-ap")))
            seq = (seq + 1) % 4096
            t += scenario.noise_beacon_interval_s

    events.sort(key=lambda e: e[0])
    records = [
        CaptureRecord(scenario.start_ts + t_us // US, t_us % US, frame) for t_us, frame in events
    ]
    buf = io.BytesIO()
    write_pcap(buf, records)
    return buf.getvalue(), GroundTruth(scenario.start_ts, scenario.duration_s, truths)


def ground_truth_count(truth: GroundTruth, now: float, window_s: float) -> ExpectedCounts:
    return truth.expected_counts(now, window_s)


def _device_from_json(doc: dict, index: int) -> DeviceProfile:
    try:
        mode = DeviceMode(doc["mode"])
    except (KeyError, ValueError) as exc:
        raise InvalidScenario(f"device {index}: bad mode: {exc}") from exc
    try:
        template = tuple(
            InformationElement(ie["id"], bytes.fromhex(ie.get("value", "")))
            for ie in doc.get("ie_template", [])
        ) or default_ie_template()
        return DeviceProfile(
            mode=mode,
            oui=bytes.fromhex(doc["oui"].replace(":", "")) if doc.get("oui") else None,
            mobile=doc.get("mobile", True),
            mac=MacAddress.parse(doc["mac"]) if doc.get("mac") else None,
            ie_template=template,
            burst_size=doc.get("burst_size", 3),
            burst_interval_s=doc.get("burst_interval_s", 10.0),
            randomization=Randomization(doc.get("randomization", "per_burst")),
            active=tuple(doc["active"]) if doc.get("active") else None,
            vary_channel=doc.get("vary_channel", True),
        )
    except InvalidScenario:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenario(f"device {index}: {exc}") from exc


def scenario_from_json(doc: dict) -> Scenario:
    try:
        devices = tuple(_device_from_json(d, i) for i, d in enumerate(doc.get("devices", [])))
        return Scenario(
            duration_s=doc["duration_s"],
            devices=devices,
            seed=doc.get("seed", 0),
            start_ts=doc.get("start_ts", 0),
            drop_probability=doc.get("drop_probability", 0.0),
            noise_beacon_interval_s=doc.get("noise_beacon_interval_s"),
        )
    except InvalidScenario:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenario(f"bad scenario document: {exc}") from exc


def load_scenario(path: str | Path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidScenario(f"scenario is not valid JSON: {exc}") from exc
    return scenario_from_json(doc)
