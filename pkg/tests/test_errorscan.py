import math

import numpy as np
import pytest

from primelab import (
    DomainError,
    SizeLimitError,
    ThresholdFunction,
    interval_compare,
    record_sign_flips,
    scan,
    sign_change_search,
    threshold_fit,
)
from primelab.errorscan import ScanRecord, make_record

from oracles import bytearray_pi_at, bytearray_sieve, simpson_li

LOG = ThresholdFunction("log", c=1.0)


@pytest.fixture(scope="module")
def records():
    return scan(10**5, spacing=1.25, threshold=LOG)

class TestScan:
    def test_first_checkpoint(self, records):
        first = records[0]
        assert first.n == 100
        assert first.pi_n == 25
        assert first.li_n == pytest.approx(simpson_li(100), rel=1e-10)
        assert first.delta == pytest.approx(-4.081, abs=2e-3)
        assert first.ratio == pytest.approx(0.7568, abs=2e-3)
        assert first.bound_ok

    def test_counts_match_monolithic_oracle(self, records):
        expected = bytearray_pi_at(10**5, [r.n for r in records])
        for r in records:
            assert r.pi_n == expected[r.n]

    def test_record_arithmetic(self, records):
        for r in records:
            assert r.sqrt_li == pytest.approx(math.sqrt(r.li_n), rel=1e-14)
            assert r.ratio == pytest.approx(abs(r.delta) / r.sqrt_li, rel=1e-14)
            assert r.bound_ok == (r.ratio < r.q_value)
            assert r.q_value == pytest.approx(math.log(r.n), rel=1e-14)

    def test_all_bounds_hold_at_unit_log(self, records):
        assert all(r.bound_ok for r in records)
        assert all(r.sign == -1 for r in records)

    def test_mean_window_variants(self, records):
        for r in records:
            assert r.m_window_li == pytest.approx(2 * math.log(r.li_n) * math.sqrt(r.li_n), rel=1e-13)
            assert r.m_window_pi == pytest.approx(2 * math.log(r.pi_n) * math.sqrt(r.pi_n), rel=1e-13)
            assert r.m_window_li_ok == (abs(r.delta) < r.m_window_li)
            assert r.m_window_pi_ok == (abs(r.delta) < r.m_window_pi)

    def test_limit_validated(self):
        with pytest.raises(DomainError):
            scan(99)

class TestIntervalCompare:
    def test_smallest_window(self):
        rec = interval_compare(2, 3)
        assert rec.pi_diff == 1  # the prime 3, counted on (2, 3]

    def test_doubling_interval_runs_below_integral(self):
        rec = interval_compare(10**4, 2 * 10**4)
        oracle = bytearray_pi_at(2 * 10**4, [10**4, 2 * 10**4])
        assert rec.pi_diff == oracle[2 * 10**4] - oracle[10**4]
        assert rec.li_diff == pytest.approx(simpson_li(2 * 10**4) - simpson_li(10**4), rel=1e-10)
        assert rec.excess < 0

    def test_additivity(self):
        ab = interval_compare(10**3, 2 * 10**3)
        bc = interval_compare(2 * 10**3, 4 * 10**3)
        ac = interval_compare(10**3, 4 * 10**3)
        assert ac.excess == pytest.approx(ab.excess + bc.excess, abs=1e-8)

    def test_lookup_is_used(self):
        rec = interval_compare(10, 100, pi_lookup={10: 4, 100: 25})
        assert rec.pi_diff == 21

    def test_validation(self):
        with pytest.raises(DomainError):
            interval_compare(10, 10)
        with pytest.raises(DomainError):
            interval_compare(1, 10)

class TestSignChangeSearch:
    def test_empty_at_desk_scale(self):
        assert sign_change_search(10**4) == []

    def test_small_n_crossings_are_real(self):
        # With the integral anchored at 2, pi leads Li briefly: the sign flips
        # between 5 and 6, 6 and 7, and 7 and 8, then stays negative.
        assert sign_change_search(100, start=2) == [5, 6, 7]

    def test_injected_crossing_is_detected(self):
        limit = 7000
        flags = bytearray_sieve(limit + 1)
        pi_table = np.cumsum(np.frombuffer(bytes(flags), dtype=np.uint8))

        def fake_pi(n: int) -> float:
            bump = 30.0 if 5000 <= n <= 5600 else 0.0
            return float(pi_table[n]) + bump

        found = sign_change_search(limit, start=1000, pi_source=fake_pi)
        assert found == [4999, 5600]

    def test_injected_span_guard(self):
        with pytest.raises(SizeLimitError):
            sign_change_search(3_000_000, start=2, pi_source=lambda n: 0.0)

    def test_validation(self):
        with pytest.raises(DomainError):
            sign_change_search(100, start=100)

class TestRecordSignFlips:
    def test_real_records_have_no_flips(self):
        records = scan(10**4, threshold=LOG)
        assert record_sign_flips(records) == []

    def test_doctored_record_is_caught(self):
        records = list(scan(10**4, threshold=LOG))
        fake = make_record(records[3].n, records[3].pi_n + 10**3, records[3].li_n, LOG)
        doctored = records[:3] + [fake] + records[4:]
        flips = record_sign_flips(doctored)
        assert (records[2].n, fake.n) in flips
        assert (fake.n, records[4].n) in flips

def _synthetic_record(n: int, ratio: float) -> ScanRecord:
    return ScanRecord(
        n=n, pi_n=0, li_n=1.0, delta=-ratio, sqrt_li=1.0, ratio=ratio,
        q_value=math.log(n), bound_ok=ratio < math.log(n), sign=-1,
        m_window_li=0.0, m_window_li_ok=True, m_window_pi=0.0, m_window_pi_ok=True,
    )

class TestThresholdFit:
    def test_constant_ratio_input(self):
        records = [_synthetic_record(n, 0.5) for n in (10**3, 10**4, 10**5)]
        fit = threshold_fit(records)
        by_family = {f["family"]: f["c"] for f in fit["fits"]}
        assert by_family["log"] == pytest.approx(0.5 / math.log(10**3))
        assert by_family["loglog"] == pytest.approx(0.5 / math.log(math.log(10**3)))
        assert by_family["power"] == pytest.approx(0.5 / (10**3) ** 0.25)
        assert fit["max_ratio"] == pytest.approx(0.5)

    def test_two_records(self):
        records = [_synthetic_record(10**3, 0.2), _synthetic_record(10**4, 0.7)]
        fit = threshold_fit(records)
        assert fit["max_ratio"] == pytest.approx(0.7)
        assert fit["argmax_n"] == 10**4

    def test_real_scan_fits_below_unit_log(self):
        records = scan(10**5, threshold=LOG)
        fit = threshold_fit(records)
        log_c = next(f["c"] for f in fit["fits"] if f["family"] == "log")
        assert log_c < 1.0
        assert fit["max_ratio"] < 1.0

    def test_needs_two_records(self):
        with pytest.raises(DomainError):
            threshold_fit([_synthetic_record(10**3, 0.5)])
