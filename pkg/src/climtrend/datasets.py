"""Accessors for the bundled data fixtures.

The package ships frozen snapshots of the annual inputs used by the
experiment recipes: a GISS-format global temperature anomaly series
(1880-2015), an AR5-style per-constituent effective-radiative-forcing
table (1750-2015, with the 2012-2015 gap filled by CO2-driven increments
and other constituents frozen), an extended RCP8.5 trajectory to 2500, and
a 20-member HadCRUT-style temperature ensemble.  ``data/MANIFEST.json``
records SHA-256 checksums; see ``data/README.md`` for provenance notes.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path

from .series import (
    AnnualSeries,
    ForcingTable,
    Scenario,
    build_scenario,
    load_column_map,
    parse_forcing_table,
    parse_temperature_csv,
)

TEMPERATURE_FILE = "gistemp_annual_1880_2015.csv"
FORCING_FILE = "forcings_annual_1750_2015.csv"
FORCING_COLUMNS_FILE = "forcings_annual_1750_2015.columns.json"
RCP85_FILE = "rcp85_extended_2000_2500.csv"
RCP85_COLUMNS_FILE = "rcp85_extended_2000_2500.columns.json"
ENSEMBLE_DIR = "hadcrut_ensemble"
MANIFEST_FILE = "MANIFEST.json"

DEFAULT_SPLICE_YEAR = 2015


def data_dir() -> Path:
    return Path(resources.files(__package__)) / "data"


def data_path(name: str) -> Path:
    path = data_dir() / name
    if not path.exists():
        raise FileNotFoundError(f"bundled fixture {name!r} not found at {path}")
    return path


def load_temperature() -> AnnualSeries:
    """The bundled 1880-2015 annual temperature-anomaly record."""
    return parse_temperature_csv(data_path(TEMPERATURE_FILE), format="giss_annual")


def load_forcings() -> ForcingTable:
    """The bundled 1750-2015 per-constituent forcing table, aggregated."""
    column_map = load_column_map(data_path(FORCING_COLUMNS_FILE))
    return parse_forcing_table(data_path(FORCING_FILE), column_map)


def load_rcp85() -> ForcingTable:
    """The bundled extended RCP8.5 forcing trajectory (2000-2500)."""
    column_map = load_column_map(data_path(RCP85_COLUMNS_FILE))
    return parse_forcing_table(data_path(RCP85_FILE), column_map)


def rcp85_scenario(splice_year: int = DEFAULT_SPLICE_YEAR) -> Scenario:
    """Historical forcings spliced onto the extended RCP8.5 trajectory."""
    return build_scenario(load_forcings(), load_rcp85(), splice_year, label="rcp85-extended")


def ensemble_paths() -> list:
    """Paths of the bundled temperature-ensemble member files, sorted."""
    directory = data_dir() / ENSEMBLE_DIR
    if not directory.is_dir():
        raise FileNotFoundError(f"bundled ensemble directory not found at {directory}")
    return sorted(directory.glob("member_*.csv"))


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def fixture_checksums() -> dict:
    """SHA-256 checksums of every bundled fixture file, keyed by relative name."""
    base = data_dir()
    out = {}
    for path in sorted(base.rglob("*")):
        if path.is_file() and path.name != MANIFEST_FILE:
            out[str(path.relative_to(base))] = sha256_of(path)
    return out


def verify_fixtures() -> None:
    """Raise if any bundled fixture drifted from the recorded manifest."""
    with open(data_path(MANIFEST_FILE), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    actual = fixture_checksums()
    if manifest != actual:
        changed = sorted(
            set(manifest) ^ set(actual)
            | {k for k in set(manifest) & set(actual) if manifest[k] != actual[k]}
        )
        raise RuntimeError(f"fixture checksum mismatch: {', '.join(changed)}")
