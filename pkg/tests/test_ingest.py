"""Parsing, gap handling and round-trip of the CSV interfaces."""

import logging
from datetime import datetime, timedelta, timezone

import pytest

from pvbatsim.errors import (DuplicateTimestamp, EmptyFile, GapTooLong,
                             MalformedRow)
from pvbatsim.ingest import (GapPolicy, IrradianceRecord, IrradianceSource,
                             TelemetryRecord, parse_irradiance_csv,
                             parse_telemetry_csv, to_hourly,
                             write_irradiance_csv, write_telemetry_csv)

T0 = datetime(2019, 3, 1, tzinfo=timezone.utc)


def _stamp(i):
    return (T0 + timedelta(hours=i)).strftime("%Y-%m-%dT%H:%M:%SZ")


def _telemetry_csv(tmp_path, rows, name="telemetry.csv"):
    path = tmp_path / name
    lines = ["timestamp,pv_energy_wh,cons_energy_wh,soc_pct"] + rows
    path.write_text("\n".join(lines) + "\n")
    return path


def _irradiance_csv(tmp_path, rows, name="irradiance.csv"):
    path = tmp_path / name
    lines = ["timestamp,ghi_wh_m2,source"] + rows
    path.write_text("\n".join(lines) + "\n")
    return path


class TestParseTelemetry:
    def test_well_formed_file(self, tmp_path):
        rows = [f"{_stamp(i)},{100 * i},{50 * i},{min(100, i)}" for i in range(24)]
        records = parse_telemetry_csv(_telemetry_csv(tmp_path, rows))
        assert len(records) == 24
        assert records[3].pv_energy_wh == 300.0
        assert records[3].soc_pct == 3.0

    def test_soc_out_of_range_reports_line(self, tmp_path):
        rows = [f"{_stamp(0)},1,1,50", f"{_stamp(1)},1,1,123"]
        with pytest.raises(MalformedRow) as err:
            parse_telemetry_csv(_telemetry_csv(tmp_path, rows))
        assert err.value.lines == [3]  # header is line 1

    def test_unparseable_number_reports_line(self, tmp_path):
        rows = [f"{_stamp(0)},abc,1,50"]
        with pytest.raises(MalformedRow) as err:
            parse_telemetry_csv(_telemetry_csv(tmp_path, rows))
        assert err.value.lines == [2]

    def test_misaligned_timestamp_rejected(self, tmp_path):
        rows = ["2019-03-01T00:30:00Z,1,1,50"]
        with pytest.raises(MalformedRow):
            parse_telemetry_csv(_telemetry_csv(tmp_path, rows))

    def test_shuffled_rows_come_back_sorted(self, tmp_path):
        order = [5, 2, 9, 0, 7, 1, 3, 8, 6, 4]
        rows = [f"{_stamp(i)},{i},{i},{i}" for i in order]
        records = parse_telemetry_csv(_telemetry_csv(tmp_path, rows))
        stamps = [r.timestamp for r in records]
        assert stamps == sorted(stamps)  # independent sort oracle
        assert [r.pv_energy_wh for r in records] == sorted(order)

    def test_duplicate_timestamp(self, tmp_path):
        rows = [f"{_stamp(0)},1,1,50", f"{_stamp(0)},2,2,60"]
        with pytest.raises(DuplicateTimestamp):
            parse_telemetry_csv(_telemetry_csv(tmp_path, rows))

    def test_empty_file(self, tmp_path):
        with pytest.raises(EmptyFile):
            parse_telemetry_csv(_telemetry_csv(tmp_path, []))

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c,d\n1,2,3,4\n")
        with pytest.raises(MalformedRow):
            parse_telemetry_csv(path)


class TestParseIrradiance:
    def test_well_formed(self, tmp_path):
        rows = [f"{_stamp(i)},{10.5 * i},analysis" for i in range(24)]
        records = parse_irradiance_csv(_irradiance_csv(tmp_path, rows))
        assert len(records) == 24
        assert records[2].ghi_wh_per_m2 == 21.0

    def test_negative_ghi_rejected(self, tmp_path):
        rows = [f"{_stamp(0)},-5,analysis"]
        with pytest.raises(MalformedRow):
            parse_irradiance_csv(_irradiance_csv(tmp_path, rows))

    def test_unknown_source_rejected(self, tmp_path):
        rows = [f"{_stamp(0)},5,guess"]
        with pytest.raises(MalformedRow):
            parse_irradiance_csv(_irradiance_csv(tmp_path, rows))

    def test_mixed_sources_partition(self, tmp_path):
        rows = []
        for i in range(12):
            rows.append(f"{_stamp(i)},{i},analysis")
            rows.append(f"{_stamp(i)},{i + 0.5},forecast")
        records = parse_irradiance_csv(_irradiance_csv(tmp_path, rows))
        # partition oracle: filter both ways and check contents
        analysis = [r for r in records if r.source is IrradianceSource.HISTORICAL_ANALYSIS]
        forecast = [r for r in records if r.source is IrradianceSource.FORECAST_DAY_AHEAD]
        assert len(analysis) == 12 and len(forecast) == 12
        assert all(r.ghi_wh_per_m2 == float(i) for i, r in enumerate(analysis))
        assert all(r.ghi_wh_per_m2 == i + 0.5 for i, r in enumerate(forecast))

    def test_same_stamp_same_source_is_duplicate(self, tmp_path):
        rows = [f"{_stamp(0)},1,analysis", f"{_stamp(0)},2,analysis"]
        with pytest.raises(DuplicateTimestamp):
            parse_irradiance_csv(_irradiance_csv(tmp_path, rows))


def _rec(i, pv=100.0, cons=50.0, soc=60.0):
    return TelemetryRecord(T0 + timedelta(hours=i), pv, cons, soc)


class TestToHourly:
    def test_contiguous_input_unchanged(self):
        records = [_rec(i, pv=float(i)) for i in range(24)]
        pv, cons, soc = to_hourly(records)
        assert len(pv) == 24
        assert list(pv.values) == [float(i) for i in range(24)]

    def test_length_is_span_plus_one(self):
        records = [_rec(0), _rec(10)]
        pv, *_ = to_hourly(records, GapPolicy(max_gap_h=12))
        assert len(pv) == 11

    def test_soc_gap_carries_last_observation(self):
        records = [_rec(0, soc=60.0), _rec(3, soc=58.0)]
        _, _, soc = to_hourly(records)
        assert list(soc.values) == [60.0, 60.0, 60.0, 58.0]

    def test_energy_gap_zero_filled_with_warning(self, caplog):
        records = [_rec(0, pv=100.0), _rec(2, pv=200.0)]
        with caplog.at_level(logging.WARNING, logger="pvbatsim.ingest"):
            pv, cons, _ = to_hourly(records)
        assert list(pv.values) == [100.0, 0.0, 200.0]
        assert list(cons.values) == [50.0, 0.0, 50.0]
        assert any("zero-filled" in m for m in caplog.messages)

    def test_gap_longer_than_max_is_error(self):
        records = [_rec(0), _rec(8)]
        with pytest.raises(GapTooLong):
            to_hourly(records, GapPolicy(max_gap_h=6))

    def test_gap_at_max_is_allowed(self):
        records = [_rec(0), _rec(7)]  # 6 missing hours
        pv, *_ = to_hourly(records, GapPolicy(max_gap_h=6))
        assert len(pv) == 8

    def test_needs_two_records(self):
        with pytest.raises(ValueError):
            to_hourly([_rec(0)])

    def test_irradiance_records_give_single_series(self):
        records = [IrradianceRecord(T0 + timedelta(hours=i), float(i),
                                    IrradianceSource.HISTORICAL_ANALYSIS)
                   for i in range(6)]
        ghi = to_hourly(records)
        assert list(ghi.values) == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]


class TestRoundTrip:
    def test_telemetry_round_trip(self, tmp_path):
        records = [_rec(i, pv=i * 123.25, cons=i * 7.5, soc=50.0 + i)
                   for i in range(20)]
        path = tmp_path / "out.csv"
        write_telemetry_csv(records, path)
        back = parse_telemetry_csv(path)
        assert len(back) == len(records)
        for a, b in zip(records, back):
            assert a.timestamp == b.timestamp
            assert a.pv_energy_wh == pytest.approx(b.pv_energy_wh)
            assert a.cons_energy_wh == pytest.approx(b.cons_energy_wh)
            assert a.soc_pct == pytest.approx(b.soc_pct)

    def test_irradiance_round_trip(self, tmp_path):
        records = []
        for i in range(10):
            records.append(IrradianceRecord(T0 + timedelta(hours=i), i * 3.5,
                                            IrradianceSource.HISTORICAL_ANALYSIS))
            records.append(IrradianceRecord(T0 + timedelta(hours=i), i * 3.25,
                                            IrradianceSource.FORECAST_DAY_AHEAD))
        path = tmp_path / "irr.csv"
        write_irradiance_csv(records, path)
        back = parse_irradiance_csv(path)
        assert len(back) == len(records)
        key = lambda r: (r.timestamp, r.source.value)
        for a, b in zip(sorted(records, key=key), sorted(back, key=key)):
            assert (a.timestamp, a.source) == (b.timestamp, b.source)
            assert a.ghi_wh_per_m2 == pytest.approx(b.ghi_wh_per_m2)
