import json

import numpy as np
import pytest

from climtrend import (
    AnnualSeries,
    DataError,
    ForcingTable,
    YearGapError,
    build_scenario,
    normalize_forcing,
    parse_forcing_table,
    parse_temperature_csv,
)
from climtrend.series import UNIT_DOUBLINGS


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestParseTemperature:
    def test_plain_two_column(self, tmp_path):
        path = write(tmp_path, "t.csv", "1880,-0.20\n1881,-0.12\n")
        s = parse_temperature_csv(path, "plain_two_column")
        assert s.start_year == 1880
        assert np.allclose(s.values, [-0.20, -0.12])

    def test_gap_names_missing_year(self, tmp_path):
        path = write(tmp_path, "t.csv", "1880,-0.20\n1882,-0.12\n")
        with pytest.raises(YearGapError) as err:
            parse_temperature_csv(path, "plain_two_column")
        assert err.value.year == 1881
        assert "1881" in str(err.value)

    def test_non_numeric_cell_reports_line(self, tmp_path):
        path = write(tmp_path, "t.csv", "1880,-0.20\n1881,oops\n")
        with pytest.raises(DataError) as err:
            parse_temperature_csv(path, "plain_two_column")
        assert "line 2" in str(err.value)

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "t.csv", "# only a comment\n")
        with pytest.raises(DataError, match="empty"):
            parse_temperature_csv(path, "plain_two_column")

    def test_giss_header_and_missing_edges(self, tmp_path):
        path = write(tmp_path, "t.csv",
                     "Year,Annual_Mean\n1880,***\n1881,-0.1\n1882,-0.2\n1883,***\n")
        s = parse_temperature_csv(path, "giss_annual")
        assert s.start_year == 1881
        assert len(s) == 2

    def test_giss_interior_missing_is_gap(self, tmp_path):
        path = write(tmp_path, "t.csv",
                     "Year,Annual_Mean\n1880,-0.1\n1881,***\n1882,-0.2\n")
        with pytest.raises(YearGapError) as err:
            parse_temperature_csv(path, "giss_annual")
        assert err.value.year == 1881

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        path = write(tmp_path, "t.csv", "# comment\n\n1880,-0.2\n1881,0.0\n")
        s = parse_temperature_csv(path, "plain_two_column")
        assert len(s) == 2

    def test_round_trip_full_precision(self, tmp_path):
        values = np.array([-0.123456789012345, 0.9876543210987654, 1 / 3])
        s = AnnualSeries(1900, values, unit="degC")
        path = tmp_path / "rt.csv"
        s.to_csv(path)
        back = parse_temperature_csv(path, "plain_two_column")
        assert back.start_year == s.start_year
        assert np.array_equal(back.values, s.values)

    def test_unknown_format_rejected(self, tmp_path):
        path = write(tmp_path, "t.csv", "1880,-0.2\n1881,0.0\n")
        with pytest.raises(ValueError, match="unknown temperature format"):
            parse_temperature_csv(path, "monthly")


class TestParseForcing:
    def test_aggregation(self, tmp_path):
        path = write(tmp_path, "f.csv",
                     "year,a,b,s\n2000,1.0,0.5,0.1\n2001,1.2,0.4,0.2\n")
        table = parse_forcing_table(path, {"a": "anthropogenic", "b": "anthropogenic",
                                           "s": "natural"})
        assert table.anthropogenic_at(2000) == pytest.approx(1.5)
        assert table.natural_at(2001) == pytest.approx(0.2)

    def test_aggregation_order_independent(self, tmp_path):
        p1 = write(tmp_path, "f1.csv", "year,a,b\n2000,1.0,0.5\n2001,1.2,0.4\n")
        p2 = write(tmp_path, "f2.csv", "year,b,a\n2000,0.5,1.0\n2001,0.4,1.2\n")
        cmap = {"a": "anthropogenic", "b": "anthropogenic"}
        t1 = parse_forcing_table(p1, cmap)
        t2 = parse_forcing_table(p2, cmap)
        assert np.array_equal(t1.anthropogenic, t2.anthropogenic)

    def test_all_ignored_is_error(self, tmp_path):
        path = write(tmp_path, "f.csv", "year,a\n2000,1.0\n")
        with pytest.raises(DataError, match="no forcing columns selected"):
            parse_forcing_table(path, {"a": "ignore"})

    def test_unknown_column(self, tmp_path):
        path = write(tmp_path, "f.csv", "year,a\n2000,1.0\n2001,1.0\n")
        with pytest.raises(DataError, match="unknown column"):
            parse_forcing_table(path, {"zz": "anthropogenic"})

    def test_gap_in_years(self, tmp_path):
        path = write(tmp_path, "f.csv", "year,a\n2000,1.0\n2002,1.0\n")
        with pytest.raises(YearGapError) as err:
            parse_forcing_table(path, {"a": "anthropogenic"})
        assert err.value.year == 2001


class TestScenario:
    def table(self, start, anthro, natural=None):
        anthro = np.asarray(anthro, dtype=float)
        natural = np.zeros_like(anthro) if natural is None else np.asarray(natural)
        return ForcingTable(start, anthro, natural)

    def test_shift_applied(self):
        hist = self.table(2010, [2.0, 2.1, 2.36], natural=[0.1, 0.1, 0.2])
        fut = self.table(2010, [2.0, 2.1, 2.29, 2.5, 3.0])
        sc = build_scenario(hist, fut, 2012)
        assert sc.forcing.anthropogenic_at(2012) == hist.anthropogenic_at(2012)
        assert sc.forcing.anthropogenic_at(2013) == pytest.approx(2.5 + 0.07)
        assert sc.forcing.anthropogenic_at(2014) == pytest.approx(3.0 + 0.07)

    def test_identity_when_tables_agree(self):
        hist = self.table(2010, [2.0, 2.1, 2.2])
        fut = self.table(2010, [2.0, 2.1, 2.2, 2.3])
        sc = build_scenario(hist, fut, 2012)
        assert np.allclose(sc.forcing.anthropogenic, [2.0, 2.1, 2.2, 2.3])

    def test_natural_constant_after_splice(self):
        hist = self.table(2010, [2.0, 2.1, 2.2], natural=[0.0, 0.1, 0.25])
        fut = self.table(2010, [2.0, 2.1, 2.2, 2.3, 2.4], natural=[9, 9, 9, 9, 9])
        sc = build_scenario(hist, fut, 2012)
        future_years = range(2013, sc.forcing.end_year + 1)
        assert all(sc.forcing.natural_at(y) == 0.25 for y in future_years)

    def test_splice_continuity_bit_for_bit(self):
        hist = self.table(2000, np.linspace(1.7, 2.36, 16))
        fut = self.table(2010, np.linspace(2.23, 3.1, 30))
        sc = build_scenario(hist, fut, 2015)
        assert sc.forcing.anthropogenic_at(2015) == hist.anthropogenic_at(2015)

    def test_non_overlapping_years(self):
        hist = self.table(2000, [1.0, 1.1])
        fut = self.table(2010, [2.0, 2.1])
        with pytest.raises(Exception, match="splice"):
            build_scenario(hist, fut, 2005)


class TestNormalizeForcing:
    def test_examples(self):
        table = ForcingTable(2000, [3.7, 0.0, 7.4], [0.0, 0.0, 0.0])
        out = normalize_forcing(table, 3.7)
        assert np.allclose(out.anthropogenic, [1.0, 0.0, 2.0])
        assert out.unit == UNIT_DOUBLINGS

    def test_nonpositive_f2x(self):
        table = ForcingTable(2000, [1.0, 2.0], [0.0, 0.0])
        with pytest.raises(ValueError, match="f2x"):
            normalize_forcing(table, 0.0)


class TestAnnualSeries:
    def test_invariants(self):
        with pytest.raises(ValueError):
            AnnualSeries(2000, [1.0, np.nan])
        s = AnnualSeries(2000, [1.0, 2.0, 3.0])
        assert s.end_year == 2002
        assert s.window(2001, 2002).values.tolist() == [2.0, 3.0]
        with pytest.raises(Exception):
            s.window(1999, 2001)
        assert s.value_at(2001) == 2.0
