"""Report assembly for the experiment recipes.

Every experiment writes one directory containing ``config.json`` (the full
effective configuration, seed included), ``summary.json`` (headline
numbers plus input checksums and the library version), per-table CSVs
with documented headers, and rendered figures.  Nothing time- or
host-dependent is recorded, so re-running with the same configuration
reproduces every CSV and JSON byte for byte.

Floats are serialized with ``repr`` (shortest round-trip form) in CSVs;
JSON uses the standard library encoder.  Table rows are written in a
deterministic order fixed by the caller.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import __version__
from .datasets import sha256_of


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


class ReportWriter:
    """Single-writer assembler for one experiment's output directory."""

    def __init__(self, output_dir, name: str, config: dict, inputs: dict | None = None):
        self.directory = Path(output_dir) / name
        self.directory.mkdir(parents=True, exist_ok=True)
        self.name = name
        self.config = dict(config)
        self.inputs = {key: str(path) for key, path in (inputs or {}).items()}
        self.checksums = {key: sha256_of(path) for key, path in (inputs or {}).items()}
        self._tables: list[str] = []
        self._figures: list[str] = []
        self.write_json("config.json", {
            "experiment": name,
            "library_version": __version__,
            "config": self.config,
            "inputs": self.inputs,
            "input_checksums": self.checksums,
        })

    def path(self, filename: str) -> Path:
        return self.directory / filename

    def write_json(self, filename: str, obj) -> Path:
        path = self.path(filename)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=1, sort_keys=True, allow_nan=True)
            fh.write("\n")
        return path

    def write_table(self, filename: str, header, rows) -> Path:
        """Write a CSV table; ``rows`` is an iterable of tuples."""
        path = self.path(filename)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_format_cell(cell) for cell in row) + "\n")
        self._tables.append(filename)
        return path

    def save_figure(self, filename: str, fig) -> Path:
        path = self.path(filename)
        fig.savefig(path, dpi=150, metadata={"Software": None})
        import matplotlib.pyplot as plt

        plt.close(fig)
        self._figures.append(filename)
        return path

    def finalize(self, summary: dict) -> Path:
        return self.write_json("summary.json", {
            "experiment": self.name,
            "library_version": __version__,
            "config": self.config,
            "inputs": self.inputs,
            "input_checksums": self.checksums,
            "tables": sorted(self._tables),
            "figures": sorted(self._figures),
            "results": summary,
        })
