import random

from sttk.counter import CrowdingReport, count_window
from sttk.detector import ObservationKind

K = ObservationKind


def snap(connected=(), real=(), virtual=()):
    return {
        K.CONNECTED_UE: set(connected),
        K.REAL_PROBE_MOBILE: set(real),
        K.VIRTUAL_FOOTPRINT: set(virtual),
    }


class TestCountWindow:
    def test_disjoint_sets_sum(self):
        report = count_window(snap({1, 2, 3}, {4, 5}, {6, 7, 8, 9}), "s1", 300, 300)
        assert (report.connected, report.probes_real, report.probes_virtual) == (3, 2, 4)
        assert report.total == 9

    def test_dedup_shared_mac_hash(self):
        report = count_window(snap({0x11}, {0x11}, {0xF1}), "s1", 300, 300)
        assert report.connected == 1
        assert report.probes_real == 0
        assert report.probes_virtual == 1
        assert report.total == 2

    def test_all_empty(self):
        report = count_window(snap(), "s1", 300, 300)
        assert report.total == 0

    def test_fields(self):
        report = count_window(snap({1}), "gate-3", 1234.0, 300.0)
        assert report.sensor_id == "gate-3"
        assert report.ts == 1234 and isinstance(report.ts, int)
        assert report.window_s == 300

    def test_total_is_invariant_by_construction(self):
        report = CrowdingReport("s", 0, 300, 2, 3, 4)
        assert report.total == 9

    def test_dedup_idempotent_and_monotone(self):
        rng = random.Random(77)
        for _ in range(200):
            connected = {rng.randrange(30) for _ in range(rng.randrange(10))}
            real = {rng.randrange(30) for _ in range(rng.randrange(10))}
            virtual = {rng.randrange(30) for _ in range(rng.randrange(10))}
            report = count_window(snap(connected, real, virtual), "s", 0, 1)
            # union semantics: every identity counts exactly once
            assert report.total == len(connected | real) + len(virtual)
            # adding a brand-new identity never decreases the total
            bigger = count_window(snap(connected | {999}, real, virtual), "s", 0, 1)
            assert bigger.total == report.total + 1
