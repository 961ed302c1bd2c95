import random

import pytest

from sttk.dot11 import (
    BROADCAST,
    Frame,
    FrameControl,
    FrameKind,
    InformationElement,
    MacAddress,
    TooShortError,
    build_beacon,
    build_data,
    build_probe_request,
    classify,
    extract_ies,
    parse_frame,
    serialize_frame,
)


def pad(first_two: bytes, total: int = 24) -> bytes:
    return first_two + bytes(total - 2)


class TestClassification:
    def test_probe_request(self):
        frame = parse_frame(pad(b"\x40\x00"))
        assert frame.kind is FrameKind.PROBE_REQUEST
        assert frame.fc.type_field == 0 and frame.fc.subtype == 4

    def test_data_to_ds(self):
        frame = parse_frame(pad(b"\x08\x01"))
        assert frame.kind is FrameKind.DATA
        assert frame.fc.to_ds and not frame.fc.from_ds

    def test_beacon_is_other(self):
        assert parse_frame(pad(b"\x80\x00")).kind is FrameKind.OTHER

    def test_qos_data_is_data(self):
        # subtype 8 (QoS data) still counts as data
        frame = parse_frame(pad(b"\x88\x01", 26))
        assert frame.kind is FrameKind.DATA

    def test_pure_function_of_first_two_bytes(self):
        # Exhaustive: every Frame Control value maps to exactly one kind,
        # and the field round-trips bit-exactly.
        for b0 in range(256):
            for b1 in range(0, 256, 17):
                raw = pad(bytes((b0, b1)))
                fc = FrameControl.from_bytes(raw)
                assert fc.to_bytes() == raw[:2]
                type_field = (b0 >> 2) & 0x3
                subtype = (b0 >> 4) & 0xF
                if type_field == 0 and subtype == 4:
                    expected = FrameKind.PROBE_REQUEST
                elif type_field == 2:
                    expected = FrameKind.DATA
                else:
                    expected = FrameKind.OTHER
                assert classify(fc) is expected


class TestMacAddress:
    def test_locally_administered_bit(self):
        assert MacAddress.parse("02:00:00:00:00:01").locally_administered
        assert not MacAddress.parse("00:00:00:00:00:00").locally_administered
        assert MacAddress.parse("da:00:11:22:33:44").locally_administered

    def test_group_bit_and_oui(self):
        mac = MacAddress.parse("01:00:5e:00:00:01")
        assert mac.is_group
        assert mac.oui == bytes.fromhex("01005e")

    def test_text_round_trip(self):
        text = "0c:10:20:aa:bb:cc"
        assert str(MacAddress.parse(text)) == text

    def test_needs_six_octets(self):
        with pytest.raises(ValueError):
            MacAddress(b"\x00\x01\x02")
        with pytest.raises(ValueError):
            MacAddress.parse("00:01:02")


class TestExtractIes:
    def test_single_tlv(self):
        ies = extract_ies(bytes([0x01, 0x02, 0x82, 0x84]))
        assert ies == (InformationElement(1, bytes([0x82, 0x84])),)
        assert ies[0].length == 2

    def test_empty_body(self):
        assert extract_ies(b"") == ()

    def test_truncated_tail_dropped(self):
        ies = extract_ies(bytes([0x03, 0x01, 0x06, 0xDD, 0x05, 0x00]))
        assert ies == (InformationElement(3, bytes([0x06])),)

    def test_duplicates_preserved_in_order(self):
        body = bytes([221, 1, 0xAA, 1, 1, 0x82, 221, 1, 0xBB])
        ies = extract_ies(body)
        assert [ie.ie_id for ie in ies] == [221, 1, 221]
        assert ies[0].value == b"\xaa" and ies[2].value == b"\xbb"

    def test_never_reads_past_body(self):
        # declared length runs past the end: clean stop, no exception
        assert extract_ies(bytes([1, 200, 0x82])) == ()


class TestParseFrame:
    def test_too_short_overall(self):
        with pytest.raises(TooShortError):
            parse_frame(bytes(9))

    def test_management_needs_full_header(self):
        with pytest.raises(TooShortError):
            parse_frame(pad(b"\x40\x00", 23))
        with pytest.raises(TooShortError):
            parse_frame(pad(b"\x08\x00", 20))

    def test_control_frame_short_is_other(self):
        frame = parse_frame(pad(b"\xb4\x00", 10))  # RTS-like control frame
        assert frame.kind is FrameKind.OTHER
        assert frame.addr1 is not None and frame.addr2 is None

    def test_probe_request_source_is_addr2(self):
        sa = MacAddress.parse("02:11:22:33:44:55")
        frame = parse_frame(build_probe_request(sa, (InformationElement(1, b"\x82"),)))
        assert frame.addr2 == sa
        assert frame.addr1 == BROADCAST
        assert frame.ies == (InformationElement(1, b"\x82"),)

    def test_data_frame_has_no_ies(self):
        sta = MacAddress.parse("00:03:93:01:02:03")
        ap = MacAddress.parse("0c:10:21:00:00:01")
        frame = parse_frame(build_data(ap, sta, ap, to_ds=True))
        assert frame.kind is FrameKind.DATA
        assert frame.ies == ()

    def test_sequence_number(self):
        sa = MacAddress.parse("02:11:22:33:44:55")
        frame = parse_frame(build_probe_request(sa, (), seq=2748))
        assert frame.seq == 2748

    def test_ie_in_frame_body_after_header(self):
        raw = pad(b"\x40\x00") + bytes([50, 2, 0x0C, 0x12])
        frame = parse_frame(raw)
        assert frame.ies == (InformationElement(50, bytes([0x0C, 0x12])),)

    def test_malformed_trailing_ie_does_not_fail_frame(self):
        raw = pad(b"\x40\x00") + bytes([1, 2, 0x82, 0x84, 3, 9, 1])
        frame = parse_frame(raw)
        assert frame.kind is FrameKind.PROBE_REQUEST
        assert [ie.ie_id for ie in frame.ies] == [1]


class TestRoundTrip:
    def test_parse_serialize_identity(self):
        rng = random.Random(2024)
        for _ in range(200):
            if rng.random() < 0.5:
                sa = MacAddress(bytes([0x02 | (rng.getrandbits(8) & 0xFC)]) + rng.randbytes(5))
                ies = tuple(
                    InformationElement(rng.randrange(256), rng.randbytes(rng.randrange(8)))
                    for _ in range(rng.randrange(5))
                )
                raw = build_probe_request(sa, ies, seq=rng.randrange(4096))
            else:
                macs = [MacAddress(bytes([rng.getrandbits(8) & 0xFC]) + rng.randbytes(5)) for _ in range(3)]
                to_ds = rng.random() < 0.5
                raw = build_data(*macs, to_ds=to_ds, from_ds=not to_ds, seq=rng.randrange(4096))
            frame = parse_frame(raw)
            assert parse_frame(serialize_frame(frame)) == frame

    def test_serialize_needs_full_header(self):
        frame = Frame(FrameKind.OTHER, FrameControl(1, 11), addr1=BROADCAST)
        with pytest.raises(ValueError):
            serialize_frame(frame)

    def test_beacon_parses_as_other(self):
        raw = build_beacon(MacAddress.parse("0c:10:21:00:00:01"), ssid="lobby")
        assert parse_frame(raw).kind is FrameKind.OTHER


class TestInformationElement:
    def test_value_too_long(self):
        with pytest.raises(ValueError):
            InformationElement(1, bytes(256))

    def test_id_out_of_range(self):
        with pytest.raises(ValueError):
            InformationElement(300, b"")

    def test_to_bytes(self):
        assert InformationElement(3, b"\x06").to_bytes() == bytes([3, 1, 6])
