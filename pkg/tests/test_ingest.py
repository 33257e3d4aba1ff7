import math
from collections import Counter
from datetime import date, datetime, timedelta, timezone
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loadcnn.errors import (BadTimestamp, DuplicateTimestamp, Gap, GapTooLarge, MalformedRow,
                            Misaligned, NegativeEnergy, PoolTooSmall, UnsupportedStep)
from loadcnn.ingest import (GapPolicy, LoadSeries, MeterReading, ReadingFormat, aggregate, align,
                            assemble_series, decode_day_slot, format_simple_csv, load_series,
                            parse_readings, resample_to_15min, select_households)
from loadcnn.synth import SynthConfig, generate_fleet

from conftest import MONDAY, series

UTC = timezone.utc


def readings(values, meter="m1", start=datetime(2009, 7, 14, 0, 15, tzinfo=UTC), step=15, skip=()):
    return [MeterReading(meter, start + timedelta(minutes=step * i), v)
            for i, v in enumerate(values) if i not in skip]


class TestParse:
    def test_empty(self):
        assert parse_readings("") == []

    def test_simple_row(self):
        (r,) = parse_readings("m1,2009-07-14T00:15:00Z,0.250")
        assert r == MeterReading("m1", datetime(2009, 7, 14, 0, 15, tzinfo=UTC), 0.25)

    def test_code_row(self):
        (r,) = parse_readings("1002,19501,0.125", ReadingFormat.CODE_CSV)
        assert r.meter_id == "1002"
        assert r.timestamp == datetime(2009, 1, 1, tzinfo=UTC) + timedelta(days=195, minutes=30)
        assert r.energy_kwh == 0.125

    def test_code_epoch(self):
        assert decode_day_slot(147, date(2010, 1, 1)) == datetime(2010, 1, 2, 23, 30, tzinfo=UTC)
        assert decode_day_slot(148, date(2010, 1, 1)) == datetime(2010, 1, 3, tzinfo=UTC)

    def test_header_crlf_and_blank_lines(self):
        text = "meter_id,timestamp,kwh\r\nm1,2009-07-14T00:15:00Z,1\r\n\r\nm1,2009-07-14T00:30:00Z,2\r\n"
        assert [r.energy_kwh for r in parse_readings(text)] == [1.0, 2.0]

    def test_row_order_preserved(self):
        text = "b,2009-07-14T00:30:00Z,2\na,2009-07-14T00:15:00Z,1\n"
        assert [r.meter_id for r in parse_readings(text)] == ["b", "a"]

    @pytest.mark.parametrize("text,exc,line", [
        ("m1,2009-07-14T00:15:00Z,1\nm1,2009-07-14T00:30:00Z\n", MalformedRow, 2),
        ("m1,2009-07-14T00:15:00Z,1\nm1,2009-07-14T00:30:00Z,abc\n", MalformedRow, 2),
        ("m1,2009-07-14T00:15:00Z,-0.5\n", NegativeEnergy, 1),
        ("m1,2009-07-14T00:15:00Z,1\n\nm1,yesterday,1\n", BadTimestamp, 3),
        ("m1,2009-07-14T00:16:00Z,1\n", BadTimestamp, 1),
        ("m1,2009-07-14T00:15:00Z,nan\n", MalformedRow, 1),
    ])
    def test_errors_report_line(self, text, exc, line):
        with pytest.raises(exc) as info:
            parse_readings(text)
        assert info.value.line == line

    @pytest.mark.parametrize("code", ["19549", "19500", "1950", "abcde"])
    def test_bad_codes(self, code):
        with pytest.raises(BadTimestamp):
            parse_readings(f"m,{code},1", ReadingFormat.CODE_CSV)

    @given(st.lists(st.tuples(st.sampled_from(["a", "b", "c"]), st.integers(0, 5000),
                              st.floats(0, 100, allow_nan=False)), max_size=30))
    def test_valid_rows_round_trip(self, rows):
        text = "".join(f"{m},{(MONDAY + timedelta(minutes=15 * t)).isoformat()},{v!r}\n"
                       for m, t, v in rows)
        parsed = parse_readings(text)
        assert [(r.meter_id, r.energy_kwh) for r in parsed] == [(m, v) for m, _t, v in rows]

    @given(st.lists(st.text(alphabet="m1,:-.TZ0123456789x", max_size=30), max_size=8))
    def test_totality(self, lines):
        # either every row parses or a line-numbered DataError is raised
        try:
            out = parse_readings("\n".join(lines))
        except (MalformedRow, NegativeEnergy, BadTimestamp) as exc:
            assert 1 <= exc.line <= len(lines)
        else:
            assert len(out) <= len(lines)


class TestAssemble:
    def test_contiguous(self):
        s = assemble_series(readings([0.1, 0.2, 0.3]), "m1")
        assert s.values.tolist() == [0.1, 0.2, 0.3]
        assert s.start == datetime(2009, 7, 14, tzinfo=UTC)

    def test_midpoint_fill(self):
        s = assemble_series(readings([0.1, 99, 0.3], skip={1}), "m1")
        assert s.values[1] == pytest.approx(0.2, abs=1e-15)

    def test_four_slot_fill_is_linear(self):
        s = assemble_series(readings([0.0, 0, 0, 0, 0, 1.0], skip={1, 2, 3, 4}), "m1")
        np.testing.assert_allclose(s.values, np.linspace(0, 1, 6), atol=1e-15)

    def test_gap_too_large(self):
        with pytest.raises(GapTooLarge) as info:
            assemble_series(readings([1.0] * 7, skip={1, 2, 3, 4, 5}), "m1")
        assert info.value.position == 1

    def test_gap_error_policy(self):
        with pytest.raises(Gap) as info:
            assemble_series(readings([1.0] * 4, skip={2}), "m1", gap_policy=GapPolicy.ERROR)
        assert info.value.position == 2

    def test_duplicate(self):
        rs = readings([1.0, 2.0]) + readings([3.0], start=datetime(2009, 7, 14, 0, 30, tzinfo=UTC))
        with pytest.raises(DuplicateTimestamp) as info:
            assemble_series(rs, "m1")
        assert info.value.position == 1

    def test_filters_meter_and_sorts(self):
        rs = readings([1.0, 2.0, 3.0])[::-1] + readings([9.0], meter="other")
        assert assemble_series(rs, "m1").values.tolist() == [1.0, 2.0, 3.0]

    def test_thirty_minute_grid(self):
        rs = readings([0.4, 0.6], step=30)
        s = assemble_series(rs, "m1", step_minutes=30)
        assert s.step_minutes == 30 and len(s) == 2

    def test_misaligned_reading(self):
        rs = readings([0.4, 0.6], step=15)
        with pytest.raises(Misaligned):
            assemble_series(rs, "m1", step_minutes=30)


class TestResample:
    def test_identity(self):
        s = series([1.0, 2.0])
        assert resample_to_15min(s) == s

    def test_equal_split(self):
        s = resample_to_15min(series([0.4, 0.6], step=30))
        assert s.values.tolist() == [0.2, 0.2, 0.3, 0.3]
        assert s.step_minutes == 15 and s.start == MONDAY

    def test_conservation_random(self, rng):
        s = series(rng.random(1000), step=30)
        out = resample_to_15min(s)
        assert len(out) == 2000
        exact = sum(Fraction(v) for v in s.values)
        assert abs(math.fsum(out.values) - float(exact)) <= 1e-12 * float(exact)

    @given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=200))
    def test_conservation_property(self, values):
        s = series(values, step=30)
        total = math.fsum(values)
        assert abs(math.fsum(resample_to_15min(s).values) - total) <= 1e-9 * total

    def test_unsupported_step(self):
        with pytest.raises(UnsupportedStep):
            LoadSeries("x", MONDAY, 60, [1.0])


class TestSelect:
    def test_singleton(self):
        assert select_households(["a"], 1, 99).chosen == ("a",)

    def test_whole_pool(self):
        pool = [f"m{i}" for i in range(10)]
        assert sorted(select_households(pool, 10, 3).chosen) == pool

    def test_deterministic(self):
        pool = [f"m{i:03d}" for i in range(100)]
        a = select_households(pool, 40, 7)
        assert a == select_households(pool, 40, 7)
        assert len(set(a.chosen)) == 40 and set(a.chosen) <= set(pool)

    def test_input_order_irrelevant(self):
        pool = [f"m{i:03d}" for i in range(50)]
        shuffled = list(reversed(pool)) + pool[:5]
        assert select_households(pool, 15, 1).chosen == select_households(shuffled, 15, 1).chosen

    def test_pool_too_small(self):
        with pytest.raises(PoolTooSmall):
            select_households(["a", "b"], 3, 0)

    def test_uniformity(self):
        pool = [str(i) for i in range(10)]
        counts = Counter(select_households(pool, 1, seed).chosen[0] for seed in range(10_000))
        for key in pool:
            assert abs(counts[key] / 10_000 - 0.1) <= 0.02


class TestAggregate:
    def test_zeros(self):
        z = series([0.0, 0.0, 0.0])
        assert aggregate([z, z]).values.tolist() == [0.0, 0.0, 0.0]

    def test_small(self):
        out = aggregate([series([1.0, 2.0]), series([3.0, 4.0])])
        assert out.values.tolist() == [4.0, 6.0]
        assert out.label == "sum2"

    def test_fleet_matches_exact_sum(self):
        fleet = generate_fleet(SynthConfig(n_households=40, days=3, seed=5))
        total = aggregate(fleet).values
        for i in range(0, len(total), 7):
            exact = float(sum(Fraction(s.values[i]) for s in fleet))
            assert abs(total[i] - exact) <= 1e-12 * max(exact, 1e-300)

    @pytest.mark.parametrize("other", [
        series([1.0, 2.0], start=MONDAY + timedelta(minutes=15)),
        series([1.0, 2.0, 3.0]),
        series([1.0, 2.0], step=30),
    ])
    def test_misaligned(self, other):
        with pytest.raises(Misaligned) as info:
            aggregate([series([1.0, 2.0]), other])
        assert info.value.position == 1

    @settings(max_examples=50)
    @given(st.integers(2, 12), st.integers(1, 11), st.integers(0, 2**32 - 1))
    def test_linearity(self, n, cut, seed):
        # dyadic values with few significant bits keep every partial sum exact
        cut = min(cut, n - 1)
        rng = np.random.default_rng(seed)
        members = [series(rng.integers(0, 2**20, size=16) / 1024.0) for _ in range(n)]
        whole = aggregate(members)
        parts = aggregate([aggregate(members[:cut]), aggregate(members[cut:])])
        assert np.array_equal(whole.values, parts.values)

    def test_align_trims_to_overlap(self):
        a = series([1.0, 2.0, 3.0, 4.0])
        b = series([5.0, 6.0, 7.0], start=MONDAY + timedelta(minutes=15))
        a2, b2 = align([a, b])
        assert a2.values.tolist() == [2.0, 3.0, 4.0] and b2 == b


def test_simple_csv_round_trip(tmp_path):
    s = series([0.1, 0.2, 1 / 3], label="h0001")
    path = tmp_path / "s.csv"
    path.write_text(format_simple_csv(s))
    assert load_series(path) == s


def test_thirty_minute_file_is_resampled(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("meter,code,kwh\n1002,00001,0.4\n1002,00002,0.6\n")
    s = load_series(path, fmt=ReadingFormat.CODE_CSV)
    assert s.values.tolist() == [0.2, 0.2, 0.3, 0.3]
    assert s.start == datetime(2009, 1, 1, tzinfo=UTC)
