"""Frame-to-observation detection logic.

Each captured frame maps to at most one anonymized observation:

* data frames locate the station address through the ToDS/FromDS bits and
  count as connected devices;
* probe requests from globally-unique addresses count as mobile devices
  when their OUI belongs to a known mobile manufacturer, otherwise they
  are discarded;
* probe requests from locally-administered (randomized) addresses are
  identified by a 64-bit fingerprint over selected information elements,
  so one device keeps one identity across arbitrarily many random
  addresses.

No plaintext MAC ever leaves this module: station addresses are replaced
by a salted 64-bit hash before anything is stored or emitted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .dot11 import Frame, FrameKind, MacAddress
from .oui import OuiRegistry

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a: portable, bit-reproducible everywhere."""
    h = FNV64_OFFSET
    for b in data:
        h = ((h ^ b) * FNV64_PRIME) & _MASK64
    return h


class ObservationKind(enum.Enum):
    CONNECTED_UE = "connected_ue"
    REAL_PROBE_MOBILE = "real_probe_mobile"
    VIRTUAL_FOOTPRINT = "virtual_footprint"


@dataclass(frozen=True)
class Observation:
    """One anonymized detection event."""

    kind: ObservationKind
    id64: int
    ts: float

    @property
    def raw_mac_hash(self) -> int | None:
        """The salted MAC hash for address-based kinds, None for footprints."""
        if self.kind is ObservationKind.VIRTUAL_FOOTPRINT:
            return None
        return self.id64


#: Information elements whose full content feeds the fingerprint, in the
#: order they are conventionally listed: supported rates, extended rates,
#: DS parameter set, HT/VHT capabilities, extended capabilities, RM enabled
#: capabilities, interworking, vendor specific.
DEFAULT_FINGERPRINT_IE_IDS = (1, 50, 3, 45, 191, 127, 70, 107, 221)
#: Elements whose value changes across probes from one device (the channel
#: setting); only their ID and length bytes are digested.
DEFAULT_VARYING_IE_IDS = frozenset({3})


@dataclass(frozen=True)
class FingerprintConfig:
    included_ie_ids: frozenset[int] = frozenset(DEFAULT_FINGERPRINT_IE_IDS)
    varying_ie_ids: frozenset[int] = DEFAULT_VARYING_IE_IDS

    def __post_init__(self) -> None:
        object.__setattr__(self, "included_ie_ids", frozenset(self.included_ie_ids))
        object.__setattr__(self, "varying_ie_ids", frozenset(self.varying_ie_ids))
        extra = self.varying_ie_ids - self.included_ie_ids
        if extra:
            raise ValueError(f"varying IE ids {sorted(extra)} not in the included set")


DEFAULT_FINGERPRINT_CONFIG = FingerprintConfig()


def fingerprint_input(frame: Frame, cfg: FingerprintConfig = DEFAULT_FINGERPRINT_CONFIG) -> bytes:
    """Digest buffer for the footprint: IEs in frame order, selected IDs only.

    Each matching element contributes its ID and length byte; elements
    outside the varying set contribute their value bytes too.
    """
    buf = bytearray()
    for ie in frame.ies:
        if ie.ie_id not in cfg.included_ie_ids:
            continue
        buf.append(ie.ie_id)
        buf.append(ie.length)
        if ie.ie_id not in cfg.varying_ie_ids:
            buf += ie.value
    return bytes(buf)


def fingerprint(frame: Frame, cfg: FingerprintConfig = DEFAULT_FINGERPRINT_CONFIG) -> int:
    """64-bit footprint identifying a randomizing device across addresses."""
    return fnv1a64(fingerprint_input(frame, cfg))


def anonymize(mac: MacAddress, salt: int) -> int:
    """Salted one-way 64-bit id for a MAC; deterministic per (salt, mac)."""
    return fnv1a64(salt.to_bytes(8, "big") + mac.octets)


def locate_ue_mac(frame: Frame) -> MacAddress | None:
    """Station address of a data frame, from the frame's direction bits.

    ToDS=1/FromDS=0 puts the station in addr2, the reverse in addr1;
    IBSS and WDS frames (bits equal) and group addresses yield None.
    """
    if frame.fc.to_ds and not frame.fc.from_ds:
        mac = frame.addr2
    elif frame.fc.from_ds and not frame.fc.to_ds:
        mac = frame.addr1
    else:
        return None
    if mac is None or mac.is_group:
        return None
    return mac


def process_frame(
    frame: Frame,
    ts: float,
    *,
    registry: OuiRegistry,
    salt: int,
    cfg: FingerprintConfig = DEFAULT_FINGERPRINT_CONFIG,
) -> Observation | None:
    """Run one frame through the detection branches; None means discarded."""
    if frame.kind is FrameKind.OTHER:
        return None
    if frame.kind is FrameKind.DATA:
        mac = locate_ue_mac(frame)
        if mac is None:
            return None
        return Observation(ObservationKind.CONNECTED_UE, anonymize(mac, salt), ts)
    sa = frame.addr2
    if sa is None:
        return None
    if sa.locally_administered:
        return Observation(ObservationKind.VIRTUAL_FOOTPRINT, fingerprint(frame, cfg), ts)
    if registry.is_mobile(sa):
        return Observation(ObservationKind.REAL_PROBE_MOBILE, anonymize(sa, salt), ts)
    return None
