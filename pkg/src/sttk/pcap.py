"""Classic pcap reading/writing for 802.11 captures.

Supports link type 105 (bare 802.11) and 127 (radiotap, stripped on
read), native and byte-swapped magic. pcapng is out of scope.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator

PCAP_MAGIC = 0xA1B2C3D4
LINKTYPE_IEEE802_11 = 105
LINKTYPE_RADIOTAP = 127

_GLOBAL_HEADER = "IHHiIII"  # magic, major, minor, thiszone, sigfigs, snaplen, network
_RECORD_HEADER = "IIII"  # ts_sec, ts_usec, incl_len, orig_len


class PcapError(Exception):
    pass


class BadMagic(PcapError):
    pass


class UnsupportedLinkType(PcapError):
    pass


class TruncatedRecord(PcapError):
    pass


@dataclass(frozen=True)
class CaptureRecord:
    ts_sec: int
    ts_usec: int
    frame: bytes

    @property
    def timestamp(self) -> float:
        return self.ts_sec + self.ts_usec / 1e6


def strip_radiotap(packet: bytes) -> bytes:
    """Drop the radiotap header using its declared little-endian length."""
    if len(packet) < 4:
        raise TruncatedRecord(f"radiotap header needs 4 bytes, got {len(packet)}")
    rt_len = struct.unpack_from("<H", packet, 2)[0]
    if rt_len > len(packet):
        raise TruncatedRecord(f"radiotap length {rt_len} exceeds packet of {len(packet)} bytes")
    return packet[rt_len:]


def read_pcap(stream: BinaryIO) -> Iterator[CaptureRecord]:
    """Yield capture records in file order; radiotap headers are stripped.

    Raises BadMagic / UnsupportedLinkType before the first record. A file
    cut off mid-record raises TruncatedRecord after the intact records have
    been yielded, so callers keep the partial results.
    """
    header = stream.read(24)
    if len(header) < 4:
        raise BadMagic("not a pcap file: missing global header")
    magic = struct.unpack_from("<I", header)[0]
    if magic == PCAP_MAGIC:
        endian = "<"
    elif struct.unpack_from(">I", header)[0] == PCAP_MAGIC:
        endian = ">"
    else:
        raise BadMagic(f"bad pcap magic {header[:4].hex()}")
    if len(header) < 24:
        raise TruncatedRecord("pcap global header cut short")
    _, _, _, _, _, _, linktype = struct.unpack(endian + _GLOBAL_HEADER, header)
    if linktype not in (LINKTYPE_IEEE802_11, LINKTYPE_RADIOTAP):
        raise UnsupportedLinkType(f"link type {linktype}, need 105 (802.11) or 127 (radiotap)")

    while True:
        rec_header = stream.read(16)
        if not rec_header:
            return
        if len(rec_header) < 16:
            raise TruncatedRecord("packet record header cut short")
        ts_sec, ts_usec, incl_len, _ = struct.unpack(endian + _RECORD_HEADER, rec_header)
        data = stream.read(incl_len)
        if len(data) < incl_len:
            raise TruncatedRecord(f"packet data cut short: {len(data)} of {incl_len} bytes")
        if linktype == LINKTYPE_RADIOTAP:
            data = strip_radiotap(data)
        yield CaptureRecord(ts_sec, ts_usec, data)


def write_pcap(
    stream: BinaryIO,
    records: Iterable[CaptureRecord],
    *,
    linktype: int = LINKTYPE_IEEE802_11,
    snaplen: int = 65535,
) -> int:
    """Write records as a native-endian pcap file; returns the record count."""
    stream.write(struct.pack("<" + _GLOBAL_HEADER, PCAP_MAGIC, 2, 4, 0, 0, snaplen, linktype))
    count = 0
    for rec in records:
        stream.write(
            struct.pack("<" + _RECORD_HEADER, rec.ts_sec, rec.ts_usec, len(rec.frame), len(rec.frame))
        )
        stream.write(rec.frame)
        count += 1
    return count


class FrameSource:
    """Source of capture records; the seam where live capture would plug in."""

    def records(self) -> Iterator[CaptureRecord]:
        raise NotImplementedError


class PcapFileSource(FrameSource):
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def records(self) -> Iterator[CaptureRecord]:
        with open(self.path, "rb") as fh:
            yield from read_pcap(fh)


class MemorySource(FrameSource):
    def __init__(self, records: Iterable[CaptureRecord]):
        self._records = list(records)

    def records(self) -> Iterator[CaptureRecord]:
        return iter(self._records)
