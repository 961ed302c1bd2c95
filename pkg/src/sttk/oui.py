"""Vendor OUI registry with a mobile-manufacturer flag.

A registry snapshot is a UTF-8 text file of tab-separated lines:

    XX:XX:XX<TAB>vendor<TAB>0|1

where the trailing flag marks phone/tablet manufacturers. A pinned
snapshot ships with the package; ``sttk oui-build`` regenerates one from
a manufacturer database file (Wireshark ``manuf`` format) and a vendor
allowlist.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping, TextIO

from .dot11 import MacAddress

#: Vendors treated as mobile-device manufacturers when building snapshots.
#: A declared approximation: registry users can supply their own list.
DEFAULT_MOBILE_VENDORS = (
    "apple",
    "samsung",
    "google",
    "huawei",
    "xiaomi",
    "oneplus",
    "oppo",
    "vivo",
    "realme",
    "honor",
    "motorola",
    "lg",
    "sony",
    "htc",
    "nokia",
    "lenovo",
    "zte",
    "tcl",
    "fairphone",
)


class EmptyRegistryError(ValueError):
    """The registry source contained no valid entries."""


@dataclass(frozen=True)
class OuiEntry:
    vendor: str
    is_mobile: bool


def _parse_prefix(text: str) -> bytes | None:
    parts = text.strip().split(":")
    if len(parts) != 3:
        return None
    try:
        prefix = bytes(int(p, 16) for p in parts)
    except ValueError:
        return None
    return prefix if all(len(p) == 2 for p in parts) else None


class OuiRegistry:
    """Immutable 24-bit prefix lookup; safe to share across threads."""

    def __init__(self, entries: Mapping[bytes, OuiEntry], skipped_lines: int = 0):
        self._entries = dict(entries)
        self.skipped_lines = skipped_lines

    def __len__(self) -> int:
        return len(self._entries)

    def lookup(self, mac: MacAddress | bytes) -> OuiEntry | None:
        prefix = mac.oui if isinstance(mac, MacAddress) else bytes(mac[:3])
        return self._entries.get(prefix)

    def is_mobile(self, mac: MacAddress | bytes) -> bool:
        entry = self.lookup(mac)
        return entry is not None and entry.is_mobile

    @classmethod
    def load(cls, stream: TextIO) -> "OuiRegistry":
        """One entry per valid line; invalid lines are counted and skipped."""
        entries: dict[bytes, OuiEntry] = {}
        skipped = 0
        for line in stream:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3 or fields[2] not in ("0", "1"):
                skipped += 1
                continue
            prefix = _parse_prefix(fields[0])
            vendor = fields[1].strip()
            if prefix is None or not vendor:
                skipped += 1
                continue
            entries[prefix] = OuiEntry(vendor, fields[2] == "1")
        if not entries:
            raise EmptyRegistryError("no valid registry lines")
        return cls(entries, skipped)

    @classmethod
    def load_path(cls, path) -> "OuiRegistry":
        with open(path, encoding="utf-8") as fh:
            return cls.load(fh)

    @classmethod
    def bundled(cls) -> "OuiRegistry":
        return _bundled_registry()


@functools.lru_cache(maxsize=1)
def _bundled_registry() -> OuiRegistry:
    snapshot = resources.files("sttk").joinpath("data/oui_snapshot.tsv")
    with snapshot.open("r", encoding="utf-8") as fh:
        return OuiRegistry.load(fh)


def _vendor_is_mobile(short_name: str, long_name: str, allowlist: Iterable[str]) -> bool:
    short = short_name.casefold()
    words = {w for w in "".join(c if c.isalnum() else " " for c in long_name.casefold()).split()}
    for token in allowlist:
        token = token.casefold()
        if short.startswith(token) or token in words:
            return True
    return False


def build_snapshot(
    manuf: TextIO,
    out: TextIO,
    mobile_vendors: Iterable[str] = DEFAULT_MOBILE_VENDORS,
) -> tuple[int, int]:
    """Build a registry snapshot from a ``manuf``-format database.

    Keeps 24-bit prefixes only (MA-M/MA-S block rows are dropped) and
    marks entries whose vendor matches the allowlist as mobile. Returns
    (entries written, mobile entries).
    """
    allowlist = tuple(mobile_vendors)
    entries: dict[bytes, tuple[str, bool]] = {}
    for line in manuf:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2 or "/" in fields[0]:
            continue
        prefix = _parse_prefix(fields[0])
        if prefix is None:
            continue
        short_name = fields[1].strip()
        long_name = fields[2].strip() if len(fields) > 2 else short_name
        if not short_name:
            continue
        mobile = _vendor_is_mobile(short_name, long_name, allowlist)
        entries[prefix] = (short_name, mobile)
    if not entries:
        raise EmptyRegistryError("no usable manuf rows")
    out.write("# OUI registry snapshot: prefix<TAB>vendor<TAB>mobile(0|1)\n")
    mobile_count = 0
    for prefix in sorted(entries):
        vendor, mobile = entries[prefix]
        mobile_count += mobile
        out.write(f"{prefix[0]:02X}:{prefix[1]:02X}:{prefix[2]:02X}\t{vendor}\t{int(mobile)}\n")
    return len(entries), mobile_count
