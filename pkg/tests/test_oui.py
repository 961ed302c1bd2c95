import io

import pytest

from sttk.dot11 import MacAddress
from sttk.oui import DEFAULT_MOBILE_VENDORS, EmptyRegistryError, OuiEntry, OuiRegistry, build_snapshot

# Spot checks against the bundled snapshot: well-known assignments,
# cross-checked from two independent sources before pinning.
BUNDLED_SPOT_CHECKS = {
    "00:03:93": ("Apple", True),
    "00:0a:95": ("Apple", True),
    "00:1e:52": ("Apple", True),
    "f0:18:98": ("Apple", True),
    "00:12:fb": ("Samsung", True),
    "00:16:32": ("Samsung", True),
    "3c:5a:b4": ("Google", True),
    "f4:f5:d8": ("Google", True),
    "00:00:0c": ("Cisco", False),
    "00:02:b3": ("Intel", False),
}

MANUF_SAMPLE = """\
# sample manufacturer database
00:03:93\tApple\tApple, Inc.
00:16:32\tSamsungE\tSamsung Electronics Co.,Ltd
F4:F5:D8\tGoogle\tGoogle, Inc.
00:02:B3\tIntel\tIntel Corporation
00:00:0C\tCisco\tCisco Systems, Inc
00:1B:C5:00:00/36\tBlockVend\tRegistered 36-bit block
28:6C:07\tXiaomi\tXiaomi Communications Co Ltd
AA-BB\tBroken\tnot a prefix
"""


class TestLoad:
    def test_valid_line(self):
        reg = OuiRegistry.load(io.StringIO("AA:BB:CC\tVendorX\t1\n"))
        assert reg.lookup(bytes.fromhex("aabbcc")) == OuiEntry("VendorX", True)
        assert reg.skipped_lines == 0

    def test_invalid_line_counted_and_skipped(self):
        reg = OuiRegistry.load(io.StringIO("AA:BB:CC\tVendorX\t1\nnot a line\n"))
        assert len(reg) == 1
        assert reg.skipped_lines == 1

    def test_empty_registry(self):
        with pytest.raises(EmptyRegistryError):
            OuiRegistry.load(io.StringIO(""))
        with pytest.raises(EmptyRegistryError):
            OuiRegistry.load(io.StringIO("# only comments\n\n"))

    def test_bad_flag_skipped(self):
        reg = OuiRegistry.load(io.StringIO("AA:BB:CC\tVendorX\t1\nDD:EE:FF\tVendorY\t2\n"))
        assert len(reg) == 1
        assert reg.skipped_lines == 1


class TestClassify:
    def test_mobile_prefix(self, registry):
        assert registry.is_mobile(MacAddress.parse("0c:10:20:01:02:03"))

    def test_known_but_not_mobile(self, registry):
        assert not registry.is_mobile(MacAddress.parse("0c:10:21:01:02:03"))

    def test_unknown_prefix(self, registry):
        assert not registry.is_mobile(MacAddress.parse("66:77:88:99:aa:bb"))
        assert registry.lookup(MacAddress.parse("66:77:88:99:aa:bb")) is None

    def test_locally_administered_still_looked_up(self):
        reg = OuiRegistry.load(io.StringIO("02:10:20\tVirtualCo\t1\n"))
        assert reg.is_mobile(MacAddress.parse("02:10:20:00:00:01"))


class TestBundledSnapshot:
    def test_size(self):
        reg = OuiRegistry.bundled()
        assert len(reg) >= 500

    def test_spot_checks(self):
        reg = OuiRegistry.bundled()
        for prefix, (vendor, mobile) in BUNDLED_SPOT_CHECKS.items():
            entry = reg.lookup(bytes(int(p, 16) for p in prefix.split(":")))
            assert entry is not None, prefix
            assert entry.vendor == vendor
            assert entry.is_mobile == mobile


class TestBuildSnapshot:
    def test_build_and_reload(self):
        out = io.StringIO()
        total, mobile = build_snapshot(io.StringIO(MANUF_SAMPLE), out)
        assert total == 6  # 36-bit block and broken line dropped
        assert mobile == 4  # Apple, Samsung, Google, Xiaomi
        reg = OuiRegistry.load(io.StringIO(out.getvalue()))
        assert reg.is_mobile(bytes.fromhex("000393"))
        assert reg.is_mobile(bytes.fromhex("286c07"))
        assert not reg.is_mobile(bytes.fromhex("0002b3"))

    def test_custom_allowlist(self):
        out = io.StringIO()
        _, mobile = build_snapshot(io.StringIO(MANUF_SAMPLE), out, mobile_vendors=("intel",))
        assert mobile == 1
        reg = OuiRegistry.load(io.StringIO(out.getvalue()))
        assert reg.is_mobile(bytes.fromhex("0002b3"))

    def test_allowlist_matches_words_not_substrings(self):
        sample = "AA:00:01\tBelgacom\tBelgacom N.V.\n"
        out = io.StringIO()
        _, mobile = build_snapshot(io.StringIO(sample), out, mobile_vendors=("lg",))
        assert mobile == 0

    def test_empty_manuf(self):
        with pytest.raises(EmptyRegistryError):
            build_snapshot(io.StringIO("# nothing\n"), io.StringIO())

    def test_default_allowlist_covers_major_phone_vendors(self):
        for vendor in ("apple", "samsung", "google", "huawei", "xiaomi"):
            assert vendor in DEFAULT_MOBILE_VENDORS
