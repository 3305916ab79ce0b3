"""Annual temperature and forcing series.

Parsing, validation, and alignment of the year-indexed inputs used by the
trend model, plus construction of spliced future-forcing scenarios.  All
files are plain UTF-8 CSV; lines starting with ``#`` are comments.

Supported temperature formats
-----------------------------
``plain_two_column``
    ``year,value`` rows, no header.
``giss_annual``
    One header row, then ``year,value`` rows.  ``***`` cells mean missing;
    a missing value between the first and last valid years is an error.
``ensemble_member``
    Same layout as ``plain_two_column``; one file per ensemble member.

Forcing tables are ``year,<constituent>,...`` with a header row; a JSON
sidecar (or an explicit mapping) assigns each constituent column to the
``anthropogenic`` or ``natural`` aggregate, or marks it ``ignore``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .exceptions import CoverageError, DataError, YearGapError

UNIT_CELSIUS = "degC"
UNIT_WM2 = "W/m2"
UNIT_DOUBLINGS = "doublings"
UNIT_NONE = "1"

TEMPERATURE_FORMATS = ("giss_annual", "plain_two_column", "ensemble_member")

ROLE_ANTHROPOGENIC = "anthropogenic"
ROLE_NATURAL = "natural"
ROLE_IGNORE = "ignore"
_ROLES = (ROLE_ANTHROPOGENIC, ROLE_NATURAL, ROLE_IGNORE)


def _frozen(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError("values must be one-dimensional")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class AnnualSeries:
    """A contiguous run of annual values starting at ``start_year``.

    ``unit`` is carried as metadata (°C anomaly, W/m², doublings, or "1"
    for unitless noise).  ``baseline`` optionally records the anomaly base
    period as ``(first_year, last_year)``.
    """

    start_year: int
    values: np.ndarray
    unit: str = UNIT_CELSIUS
    baseline: Optional[tuple[int, int]] = None

    def __post_init__(self):
        object.__setattr__(self, "start_year", int(self.start_year))
        object.__setattr__(self, "values", _frozen(self.values))
        if len(self.values) < 1:
            raise ValueError("AnnualSeries must contain at least one value")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("AnnualSeries values must all be finite")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end_year(self) -> int:
        return self.start_year + len(self.values) - 1

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.end_year + 1)

    def covers(self, first_year: int, last_year: int) -> bool:
        return self.start_year <= first_year and last_year <= self.end_year

    def value_at(self, year: int) -> float:
        if not self.covers(year, year):
            raise CoverageError(
                f"year {year} outside series range {self.start_year}-{self.end_year}"
            )
        return float(self.values[year - self.start_year])

    def window(self, first_year: int, last_year: int) -> "AnnualSeries":
        """Sub-series covering ``first_year..last_year`` inclusive."""
        if first_year > last_year:
            raise ValueError(f"empty window {first_year}..{last_year}")
        if not self.covers(first_year, last_year):
            raise CoverageError(
                f"window {first_year}-{last_year} outside series range "
                f"{self.start_year}-{self.end_year}"
            )
        i0 = first_year - self.start_year
        i1 = last_year - self.start_year + 1
        return replace(self, start_year=first_year, values=self.values[i0:i1])

    def to_csv(self, path) -> None:
        """Write in ``plain_two_column`` format at full float precision."""
        with open(path, "w", encoding="utf-8", newline="") as fh:
            for year, value in zip(self.years, self.values):
                fh.write(f"{year},{value!r}\n")


@dataclass(frozen=True)
class ForcingTable:
    """Per-year anthropogenic and natural effective radiative forcings."""

    start_year: int
    anthropogenic: np.ndarray
    natural: np.ndarray
    unit: str = UNIT_WM2
    constituents: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "start_year", int(self.start_year))
        object.__setattr__(self, "anthropogenic", _frozen(self.anthropogenic))
        object.__setattr__(self, "natural", _frozen(self.natural))
        if len(self.anthropogenic) != len(self.natural):
            raise ValueError("anthropogenic and natural columns differ in length")
        if len(self.anthropogenic) < 1:
            raise ValueError("forcing table is empty")
        if not (np.all(np.isfinite(self.anthropogenic)) and np.all(np.isfinite(self.natural))):
            raise ValueError("forcing values must all be finite")

    def __len__(self) -> int:
        return len(self.anthropogenic)

    @property
    def end_year(self) -> int:
        return self.start_year + len(self.anthropogenic) - 1

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.end_year + 1)

    def covers(self, first_year: int, last_year: int) -> bool:
        return self.start_year <= first_year and last_year <= self.end_year

    def anthropogenic_at(self, year: int) -> float:
        self._check_year(year)
        return float(self.anthropogenic[year - self.start_year])

    def natural_at(self, year: int) -> float:
        self._check_year(year)
        return float(self.natural[year - self.start_year])

    def _check_year(self, year: int) -> None:
        if not self.covers(year, year):
            raise CoverageError(
                f"year {year} outside forcing range {self.start_year}-{self.end_year}"
            )

    def scaled(self, anthropogenic_factor: float = 1.0, natural_factor: float = 1.0) -> "ForcingTable":
        """Rescale the aggregate trajectories (input-uncertainty studies)."""
        return ForcingTable(
            start_year=self.start_year,
            anthropogenic=self.anthropogenic * anthropogenic_factor,
            natural=self.natural * natural_factor,
            unit=self.unit,
            constituents=None,
        )


@dataclass(frozen=True)
class Scenario:
    """A forcing table extended into the future, spliced at ``splice_year``."""

    forcing: ForcingTable
    label: str
    splice_year: int

    def __post_init__(self):
        object.__setattr__(self, "splice_year", int(self.splice_year))
        if not self.forcing.covers(self.splice_year, self.splice_year):
            raise CoverageError(
                f"scenario forcing does not cover splice year {self.splice_year}"
            )


# ---------------------------------------------------------------------------
# CSV parsing
# ---------------------------------------------------------------------------

def _data_rows(path):
    """Yield (line_number, row) for non-comment, non-blank CSV rows."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip():
                continue
            if row[0].lstrip().startswith("#"):
                continue
            yield lineno, [cell.strip() for cell in row]


def _parse_year(cell: str, lineno: int, path) -> int:
    try:
        return int(cell)
    except ValueError:
        raise DataError(f"{path}: line {lineno}: non-numeric year {cell!r}") from None


def _parse_value(cell: str, lineno: int, path) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"{path}: line {lineno}: non-numeric cell {cell!r}") from None


def _check_contiguous(years: Sequence[int], path) -> None:
    for prev, cur in zip(years, years[1:]):
        if cur != prev + 1:
            raise YearGapError(prev + 1, path)


def parse_temperature_csv(path, format: str = "plain_two_column") -> AnnualSeries:
    """Parse an annual temperature-anomaly file into an :class:`AnnualSeries`.

    Rows must be in ascending year order with no gaps.  The anomaly
    baseline is not re-centered here; any offset is absorbed by the trend
    model's intercept.
    """
    if format not in TEMPERATURE_FORMATS:
        raise ValueError(f"unknown temperature format {format!r}; expected one of {TEMPERATURE_FORMATS}")
    path = Path(path)
    rows = list(_data_rows(path))
    if format == "giss_annual":
        if not rows:
            raise DataError(f"{path}: empty file")
        rows = rows[1:]  # header row

    years: list[int] = []
    values: list[Optional[float]] = []
    for lineno, row in rows:
        if len(row) < 2:
            raise DataError(f"{path}: line {lineno}: expected 'year,value', got {row!r}")
        year = _parse_year(row[0], lineno, path)
        cell = row[1]
        if format == "giss_annual" and set(cell) == {"*"}:
            years.append(year)
            values.append(None)
            continue
        years.append(year)
        values.append(_parse_value(cell, lineno, path))

    # Trim leading/trailing missing rows (incomplete years at the record
    # edges); a missing value between valid years is a gap.
    while values and values[0] is None:
        years.pop(0)
        values.pop(0)
    while values and values[-1] is None:
        years.pop()
        values.pop()
    if not values:
        raise DataError(f"{path}: empty file (no data rows)")
    for year, value in zip(years, values):
        if value is None:
            raise YearGapError(year, path)
    if len(values) < 2:
        raise DataError(f"{path}: need at least two annual values, found {len(values)}")
    if any(b <= a for a, b in zip(years, years[1:])):
        raise DataError(f"{path}: years must be strictly ascending")
    _check_contiguous(years, path)
    return AnnualSeries(start_year=years[0], values=values, unit=UNIT_CELSIUS)


def load_column_map(path) -> dict:
    """Read a JSON sidecar mapping constituent columns to aggregate roles."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise DataError(f"{path}: column map must be a JSON object")
    return raw


def parse_forcing_table(path, column_map: Mapping[str, str]) -> ForcingTable:
    """Parse a per-constituent forcing CSV and aggregate it.

    ``column_map`` maps constituent column names to ``anthropogenic``,
    ``natural``, or ``ignore``.  Aggregates are plain sums, relying on the
    additivity of effective radiative forcings.
    """
    path = Path(path)
    for name, role in column_map.items():
        if role not in _ROLES:
            raise ValueError(f"column {name!r}: unknown role {role!r}; expected one of {_ROLES}")
    if not any(role in (ROLE_ANTHROPOGENIC, ROLE_NATURAL) for role in column_map.values()):
        raise DataError("no forcing columns selected: every column is mapped 'ignore'")

    rows = list(_data_rows(path))
    if not rows:
        raise DataError(f"{path}: empty file")
    header_lineno, header = rows[0]
    if header[0].lower() != "year":
        raise DataError(f"{path}: line {header_lineno}: first header column must be 'year'")
    colnames = header[1:]
    missing = [name for name in column_map if name not in colnames]
    if missing:
        raise DataError(f"{path}: unknown column(s) in column map: {', '.join(sorted(missing))}")

    years: list[int] = []
    table: dict[str, list[float]] = {name: [] for name in colnames}
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} cells, got {len(row)}")
        years.append(_parse_year(row[0], lineno, path))
        for name, cell in zip(colnames, row[1:]):
            table[name].append(_parse_value(cell, lineno, path))
    if not years:
        raise DataError(f"{path}: empty file (no data rows)")
    _check_contiguous(years, path)

    n = len(years)
    anthro = np.zeros(n)
    natural = np.zeros(n)
    constituents = {}
    for name, role in column_map.items():
        col = np.asarray(table[name])
        constituents[name] = col
        if role == ROLE_ANTHROPOGENIC:
            anthro += col
        elif role == ROLE_NATURAL:
            natural += col
    return ForcingTable(
        start_year=years[0],
        anthropogenic=anthro,
        natural=natural,
        unit=UNIT_WM2,
        constituents=constituents,
    )


# ---------------------------------------------------------------------------
# Scenario construction and normalization
# ---------------------------------------------------------------------------

def build_scenario(
    historical: ForcingTable,
    future: ForcingTable,
    splice_year: int,
    label: str = "",
) -> Scenario:
    """Splice a future forcing trajectory onto the historical record.

    The future anthropogenic trajectory is shifted by the constant offset
    between the historical and future values at ``splice_year``, so the
    combined trajectory is continuous there (historical values are used
    verbatim through the splice year).  Natural forcing is held constant
    after the splice year at its historical splice-year value.
    """
    splice_year = int(splice_year)
    if not (historical.covers(splice_year, splice_year) and future.covers(splice_year, splice_year)):
        raise CoverageError(
            f"historical ({historical.start_year}-{historical.end_year}) and future "
            f"({future.start_year}-{future.end_year}) tables must both cover splice year {splice_year}"
        )
    if historical.unit != future.unit:
        raise DataError(f"unit mismatch: historical {historical.unit!r} vs future {future.unit!r}")

    shift = historical.anthropogenic_at(splice_year) - future.anthropogenic_at(splice_year)
    natural_hold = historical.natural_at(splice_year)

    hist_end = splice_year - historical.start_year + 1
    fut_start = splice_year - future.start_year + 1
    anthro = np.concatenate([
        historical.anthropogenic[:hist_end],
        future.anthropogenic[fut_start:] + shift,
    ])
    n_future = len(future.anthropogenic) - fut_start
    natural = np.concatenate([
        historical.natural[:hist_end],
        np.full(n_future, natural_hold),
    ])
    combined = ForcingTable(
        start_year=historical.start_year,
        anthropogenic=anthro,
        natural=natural,
        unit=historical.unit,
    )
    return Scenario(forcing=combined, label=label, splice_year=splice_year)


def normalize_forcing(forcing: ForcingTable, f2x: float) -> ForcingTable:
    """Express a forcing table in CO2-doubling units (divide by ``f2x``)."""
    if not f2x > 0:
        raise ValueError(f"f2x must be positive, got {f2x}")
    constituents = None
    if forcing.constituents is not None:
        constituents = {name: np.asarray(col) / f2x for name, col in forcing.constituents.items()}
    return ForcingTable(
        start_year=forcing.start_year,
        anthropogenic=forcing.anthropogenic / f2x,
        natural=forcing.natural / f2x,
        unit=UNIT_DOUBLINGS,
        constituents=constituents,
    )
