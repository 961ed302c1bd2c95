import io
import json
import random

import pytest

from sttk.collector import Collector, SeriesPoint, SeriesStore, export_csv, export_json
from sttk.counter import CrowdingReport
from sttk.uplink import DecodeError, InvariantViolation, encode_json, encode_lorawan


def point(sensor="s1", ts=100, total=None, connected=1, real=2, virtual=3, window=300):
    total = connected + real + virtual if total is None else total
    return SeriesPoint(sensor, ts, window, connected, real, virtual, total)


def payload(sensor="s1", ts=100, connected=1, real=2, virtual=3, window=300):
    return encode_json(CrowdingReport(sensor, ts, window, connected, real, virtual))


class TestSeriesStore:
    def test_upsert_and_query(self):
        store = SeriesStore()
        for ts in (100, 200, 300):
            store.upsert(point(ts=ts))
        assert [p.ts for p in store.query("s1", 150, 250)] == [200]

    def test_query_bounds_inclusive_and_sorted(self):
        store = SeriesStore()
        for ts in (300, 100, 200):
            store.upsert(point(ts=ts))
        assert [p.ts for p in store.query("s1", 100, 300)] == [100, 200, 300]

    def test_unknown_sensor_empty(self):
        assert SeriesStore().query("nope", 0, 10) == []

    def test_reversed_bounds(self):
        with pytest.raises(ValueError):
            SeriesStore().query("s1", 10, 0)

    def test_duplicate_ts_overwrites(self):
        store = SeriesStore()
        store.upsert(point(ts=100, connected=1))
        store.upsert(point(ts=100, connected=9))
        (got,) = store.query("s1", 100, 100)
        assert got.connected == 9

    def test_partition_property(self):
        rng = random.Random(13)
        store = SeriesStore()
        for _ in range(100):
            store.upsert(point(ts=rng.randrange(0, 1000)))
        t0, t1, t2 = 100, 500, 900
        left = store.query("s1", t0, t1)
        right = store.query("s1", t1 + 1, t2)
        assert left + right == store.query("s1", t0, t2)

    def test_persistence_round_trip(self, tmp_path):
        store = SeriesStore(tmp_path)
        store.upsert(point(ts=100))
        store.upsert(point(sensor="s2", ts=50))
        store.upsert(point(ts=100, connected=7))  # overwrite
        reopened = SeriesStore(tmp_path)
        assert reopened.sensors() == ["s1", "s2"]
        (got,) = reopened.query("s1", 100, 100)
        assert got.connected == 7
        assert reopened.point_count() == 2

    def test_sensor_id_safe_filenames(self, tmp_path):
        store = SeriesStore(tmp_path)
        store.upsert(point(sensor="up/../down", ts=1))
        assert SeriesStore(tmp_path).query("up/../down", 0, 10) == [point(sensor="up/../down", ts=1)]
        assert all(p.parent == tmp_path for p in tmp_path.glob("*.ndjson"))


class TestExport:
    def test_csv_two_points(self):
        text = export_csv([point(ts=100), point(ts=200)])
        lines = text.splitlines()
        assert len(lines) == 3
        assert lines[0] == "sensor_id,ts,window_s,connected,probes_real,probes_virtual,total"
        assert lines[1] == "s1,100,300,1,2,3,6"

    def test_csv_empty_is_header_only(self):
        assert export_csv([]).splitlines() == [
            "sensor_id,ts,window_s,connected,probes_real,probes_virtual,total"
        ]

    def test_csv_quotes_comma_in_sensor_id(self):
        text = export_csv([point(sensor='gate,one "A"')])
        assert '"gate,one ""A"""' in text.splitlines()[1]

    def test_json_export(self):
        doc = json.loads(export_json([point(ts=100)]))
        assert doc == [point(ts=100).to_json()]


class TestIngest:
    def test_valid_json_stored(self):
        collector = Collector(SeriesStore())
        stored = collector.ingest_json(payload())
        assert stored == point()
        assert collector.stats.accepted == 1

    def test_redelivery_changes_nothing(self, tmp_path):
        collector = Collector(SeriesStore(tmp_path))
        collector.ingest_json(payload())
        file_bytes = next(tmp_path.glob("*.ndjson")).read_bytes()
        collector.ingest_json(payload())
        assert collector.stats.accepted == 1
        assert collector.stats.duplicates == 1
        assert next(tmp_path.glob("*.ndjson")).read_bytes() == file_bytes
        assert collector.store.point_count() == 1

    def test_total_mismatch_quarantined(self, tmp_path):
        dead = tmp_path / "dead.ndjson"
        collector = Collector(SeriesStore(), dead_letter_path=dead)
        doc = json.loads(payload())
        doc["total"] = 99
        bad = json.dumps(doc).encode()
        with pytest.raises(InvariantViolation):
            collector.ingest_json(bad)
        assert collector.stats.invariant_errors == 1
        assert collector.store.point_count() == 0
        entry = json.loads(dead.read_text())
        assert bytes.fromhex(entry["payload_hex"]) == bad

    def test_garbage_quarantined(self, tmp_path):
        dead = tmp_path / "dead.ndjson"
        collector = Collector(SeriesStore(), dead_letter_path=dead)
        with pytest.raises(DecodeError):
            collector.ingest_json(b"\x00\x01 garbage")
        assert collector.stats.decode_errors == 1
        assert dead.exists()

    def test_lorawan_payload_with_metadata(self):
        collector = Collector(SeriesStore())
        report = CrowdingReport("ignored", 0, 300, 3, 2, 4)
        stored = collector.ingest_lorawan(encode_lorawan(report), "gate-7", received_ts=1234)
        assert stored.sensor_id == "gate-7"
        assert stored.ts == 1234  # reception time, the payload carries none
        assert stored.window_s == 300
        assert (stored.connected, stored.probes_real, stored.probes_virtual, stored.total) == (3, 2, 4, 9)

    def test_lorawan_reception_time_defaults_to_now(self):
        collector = Collector(SeriesStore())
        stored = collector.ingest_lorawan(encode_lorawan(CrowdingReport("x", 0, 300, 0, 0, 0)), "g")
        assert stored.ts > 1_600_000_000

    def test_lorawan_bad_length(self):
        collector = Collector(SeriesStore())
        with pytest.raises(DecodeError):
            collector.ingest_lorawan(bytes(9), "g")
        assert collector.stats.decode_errors == 1

    def test_lorawan_saturated_total_accepted(self):
        # clamped totals are consistent with the saturating encoder
        report = CrowdingReport("x", 0, 300, 40000, 30000, 0)
        collector = Collector(SeriesStore())
        stored = collector.ingest_lorawan(encode_lorawan(report), "g", received_ts=5)
        assert stored.total == 0xFFFF

    def test_lorawan_inconsistent_total_rejected(self):
        bad = bytes.fromhex("01000800030002000405")  # total 8, components sum 9
        collector = Collector(SeriesStore())
        with pytest.raises(InvariantViolation):
            collector.ingest_lorawan(bad, "g")

    def test_ndjson_batch(self):
        collector = Collector(SeriesStore())
        lines = payload(ts=100).decode() + "\n" + payload(ts=200).decode() + "\nnot json\n\n"
        ok, failed = collector.ingest_ndjson(io.StringIO(lines))
        assert (ok, failed) == (2, 1)
        assert collector.store.point_count() == 2
