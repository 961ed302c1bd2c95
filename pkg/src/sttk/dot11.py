"""IEEE 802.11 frame parsing and construction.

Implements just enough of the 802.11 MAC layer for passive crowd
counting: Frame Control classification, the three-address header,
ToDS/FromDS flags, and the information elements carried by probe
requests. Frames are expected without a trailing FCS; if the capture
source flags one, strip the last 4 bytes before parsing.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

TYPE_MANAGEMENT = 0
TYPE_CONTROL = 1
TYPE_DATA = 2
SUBTYPE_PROBE_REQUEST = 4
SUBTYPE_BEACON = 8

#: Shortest frame we accept at all (control frames: FC + duration + addr1).
MIN_FRAME_LEN = 10
#: Management and data frames carry the full three-address header.
FULL_HEADER_LEN = 24


class TooShortError(ValueError):
    """Raw bytes are shorter than the minimal header for the frame's kind."""


class FrameKind(enum.Enum):
    PROBE_REQUEST = "probe_request"
    DATA = "data"
    OTHER = "other"


@dataclass(frozen=True)
class MacAddress:
    octets: bytes

    def __post_init__(self) -> None:
        if len(self.octets) != 6:
            raise ValueError(f"MAC address needs 6 octets, got {len(self.octets)}")
        object.__setattr__(self, "octets", bytes(self.octets))

    @classmethod
    def parse(cls, text: str) -> "MacAddress":
        parts = text.replace("-", ":").split(":")
        if len(parts) != 6:
            raise ValueError(f"bad MAC address {text!r}")
        return cls(bytes(int(p, 16) for p in parts))

    @property
    def locally_administered(self) -> bool:
        """True for virtual (randomized) addresses: U/L bit of the first octet."""
        return bool(self.octets[0] & 0x02)

    @property
    def is_group(self) -> bool:
        return bool(self.octets[0] & 0x01)

    @property
    def oui(self) -> bytes:
        return self.octets[:3]

    def __str__(self) -> str:
        return ":".join(f"{b:02x}" for b in self.octets)


BROADCAST = MacAddress(b"\xff" * 6)


@dataclass(frozen=True)
class FrameControl:
    """The first two bytes of every frame, kept bit-exact.

    ``flags_rest`` holds flag bits 2..7 (more-fragments through order) so
    that ``to_bytes(from_bytes(raw)) == raw`` even for flags this toolkit
    never interprets.
    """

    type_field: int
    subtype: int
    to_ds: bool = False
    from_ds: bool = False
    version: int = 0
    flags_rest: int = 0

    @classmethod
    def from_bytes(cls, raw: bytes) -> "FrameControl":
        b0, b1 = raw[0], raw[1]
        return cls(
            type_field=(b0 >> 2) & 0x03,
            subtype=(b0 >> 4) & 0x0F,
            to_ds=bool(b1 & 0x01),
            from_ds=bool(b1 & 0x02),
            version=b0 & 0x03,
            flags_rest=b1 >> 2,
        )

    def to_bytes(self) -> bytes:
        b0 = (self.version & 0x03) | ((self.type_field & 0x03) << 2) | ((self.subtype & 0x0F) << 4)
        b1 = int(self.to_ds) | (int(self.from_ds) << 1) | ((self.flags_rest & 0x3F) << 2)
        return bytes((b0, b1))


@dataclass(frozen=True)
class InformationElement:
    ie_id: int
    value: bytes = b""

    def __post_init__(self) -> None:
        if not 0 <= self.ie_id <= 255:
            raise ValueError(f"IE id {self.ie_id} out of range")
        if len(self.value) > 255:
            raise ValueError(f"IE value of {len(self.value)} bytes exceeds 255")
        object.__setattr__(self, "value", bytes(self.value))

    @property
    def length(self) -> int:
        return len(self.value)

    def to_bytes(self) -> bytes:
        return bytes((self.ie_id, len(self.value))) + self.value


@dataclass(frozen=True)
class Frame:
    kind: FrameKind
    fc: FrameControl
    addr1: MacAddress | None = None
    addr2: MacAddress | None = None
    addr3: MacAddress | None = None
    seq: int = 0
    ies: tuple[InformationElement, ...] = ()


def classify(fc: FrameControl) -> FrameKind:
    """Frame kind as a pure function of the Frame Control field."""
    if fc.type_field == TYPE_MANAGEMENT and fc.subtype == SUBTYPE_PROBE_REQUEST:
        return FrameKind.PROBE_REQUEST
    if fc.type_field == TYPE_DATA:
        return FrameKind.DATA
    return FrameKind.OTHER


def extract_ies(body: bytes) -> tuple[InformationElement, ...]:
    """TLV-walk a management frame body, in order.

    Truncated trailing bytes terminate the walk cleanly; duplicate IDs are
    preserved in their original positions.
    """
    out: list[InformationElement] = []
    i = 0
    while i + 2 <= len(body):
        ie_id = body[i]
        length = body[i + 1]
        if i + 2 + length > len(body):
            break
        out.append(InformationElement(ie_id, body[i + 2 : i + 2 + length]))
        i += 2 + length
    return tuple(out)


def _addr(raw: bytes, offset: int) -> MacAddress:
    return MacAddress(raw[offset : offset + 6])


def parse_frame(raw: bytes) -> Frame:
    """Parse raw MAC-header bytes (radiotap already stripped) into a Frame.

    Probe requests get their IEs extracted from the frame body; data frames
    keep the three-address header only. Control and other management frames
    come back as ``OTHER`` with whatever addresses fit the length.
    """
    if len(raw) < MIN_FRAME_LEN:
        raise TooShortError(f"frame of {len(raw)} bytes, need at least {MIN_FRAME_LEN}")
    fc = FrameControl.from_bytes(raw)
    kind = classify(fc)
    if kind is FrameKind.OTHER:
        addr1 = _addr(raw, 4)
        addr2 = _addr(raw, 10) if len(raw) >= 16 else None
        addr3 = _addr(raw, 16) if len(raw) >= 22 else None
        seq = struct.unpack_from("<H", raw, 22)[0] >> 4 if len(raw) >= FULL_HEADER_LEN else 0
        return Frame(kind, fc, addr1, addr2, addr3, seq)
    if len(raw) < FULL_HEADER_LEN:
        raise TooShortError(f"{kind.value} frame of {len(raw)} bytes, need {FULL_HEADER_LEN}")
    addr1, addr2, addr3 = _addr(raw, 4), _addr(raw, 10), _addr(raw, 16)
    seq = struct.unpack_from("<H", raw, 22)[0] >> 4
    ies = extract_ies(raw[FULL_HEADER_LEN:]) if kind is FrameKind.PROBE_REQUEST else ()
    return Frame(kind, fc, addr1, addr2, addr3, seq, ies)


def _header(fc: FrameControl, addr1: MacAddress, addr2: MacAddress, addr3: MacAddress, seq: int) -> bytes:
    return (
        fc.to_bytes()
        + b"\x00\x00"  # duration
        + addr1.octets
        + addr2.octets
        + addr3.octets
        + struct.pack("<H", (seq & 0x0FFF) << 4)
    )


def serialize_frame(frame: Frame) -> bytes:
    """Inverse of :func:`parse_frame` for frames with a full header.

    Emits header plus IEs for probe requests, header only for data frames
    (payloads are irrelevant to counting). ``parse_frame(serialize_frame(f))``
    reproduces ``f`` for every frame the simulator emits.
    """
    if frame.addr1 is None or frame.addr2 is None or frame.addr3 is None:
        raise ValueError("cannot serialize a frame without a full address header")
    raw = _header(frame.fc, frame.addr1, frame.addr2, frame.addr3, frame.seq)
    if frame.kind is FrameKind.PROBE_REQUEST:
        raw += b"".join(ie.to_bytes() for ie in frame.ies)
    return raw


def build_probe_request(
    sa: MacAddress,
    ies: tuple[InformationElement, ...] = (),
    *,
    seq: int = 0,
    da: MacAddress = BROADCAST,
    bssid: MacAddress = BROADCAST,
) -> bytes:
    fc = FrameControl(TYPE_MANAGEMENT, SUBTYPE_PROBE_REQUEST)
    raw = _header(fc, da, sa, bssid, seq)
    return raw + b"".join(ie.to_bytes() for ie in ies)


def build_data(
    addr1: MacAddress,
    addr2: MacAddress,
    addr3: MacAddress,
    *,
    to_ds: bool = True,
    from_ds: bool = False,
    subtype: int = 0,
    seq: int = 0,
    payload: bytes = b"",
) -> bytes:
    fc = FrameControl(TYPE_DATA, subtype, to_ds=to_ds, from_ds=from_ds)
    raw = _header(fc, addr1, addr2, addr3, seq)
    if subtype & 0x08:  # QoS subtypes carry a 2-byte QoS Control field
        raw += b"\x00\x00"
    return raw + payload


def build_beacon(bssid: MacAddress, *, seq: int = 0, ssid: str = "", interval_tu: int = 100) -> bytes:
    fc = FrameControl(TYPE_MANAGEMENT, SUBTYPE_BEACON)
    raw = _header(fc, BROADCAST, bssid, bssid, seq)
    body = b"\x00" * 8 + struct.pack("<H", interval_tu) + struct.pack("<H", 0x0401)
    body += InformationElement(0, ssid.encode()).to_bytes()
    body += InformationElement(1, bytes([0x82, 0x84, 0x8B, 0x96])).to_bytes()
    return raw + body
