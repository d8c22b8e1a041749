"""CSV rate tables, JSON-lines diagnostics and run manifests."""

from __future__ import annotations

import csv
import hashlib
import json
import math
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

RATE_COLUMNS = ("resolution", "err_u_L2", "rate", "err_u_21", "rate",
                "err_T_L2", "rate", "err_T_21", "rate")


def _num(x) -> str:
    x = float(x)
    return "" if math.isnan(x) else f"{x:.17g}"


def write_rate_table(table, path) -> Path:
    """Write a :class:`RateTable` as CSV; the first row has blank rates."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rates = [table.rates(j) for j in range(4)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RATE_COLUMNS)
        for i, row in enumerate(table.rows):
            cells = [f"{row.resolution:.17g}"]
            for j in range(4):
                cells += [f"{row.errors[j]:.17g}", "" if i == 0 else _num(rates[j][i])]
            w.writerow(cells)
    return path


def read_rate_table(path, label: str = "table"):
    """Inverse of :func:`write_rate_table` (rates are recomputed, not read)."""
    from ..verification.studies import RateTable

    table = RateTable(label)
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != RATE_COLUMNS:
            raise ValueError(f"unexpected header {header}")
        for row in r:
            table.add(float(row[0]), [float(row[k]) for k in (1, 3, 5, 7)])
    return table


LEDGER_COLUMNS = ("step", "time", "u_norm2", "T_norm2", "u_ext_norm2", "T_ext_norm2",
                  "visc_u", "visc_T", "div_residual", "lhs", "rhs")


def write_energy_ledger(ledger, path) -> Path:
    """One CSV row per step of an :class:`EnergyLedger`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEDGER_COLUMNS)
        for row in ledger.rows:
            w.writerow([row["step"]] + [f"{float(row[k]):.17g}" for k in LEDGER_COLUMNS[1:]])
    return path


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_jsonl(records, path, mode: str = "w") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, mode) as fh:
        for rec in records:
            fh.write(json.dumps({k: _jsonable(v) for k, v in rec.items()}) + "\n")
    return path


def content_hash(*blobs) -> str:
    h = hashlib.sha256()
    for b in blobs:
        h.update(b if isinstance(b, bytes) else str(b).encode())
    return h.hexdigest()


@dataclass
class RunManifest:
    """Written when a run starts and rewritten when it finishes."""

    config: dict
    input_hash: str
    version: str
    config_text: str = ""  # YAML that re-creates the run configuration
    started: float = field(default_factory=time.time)
    finished: float | None = None
    wall_time: float | None = None
    status: str = "running"
    solver_summary: dict = field(default_factory=dict)
    platform: str = field(default_factory=platform.platform)

    @classmethod
    def begin(cls, config: dict, config_text: str, out_dir) -> "RunManifest":
        from .. import __version__

        m = cls(config, content_hash(config_text, __version__), __version__, config_text)
        m.write(out_dir)
        return m

    def finish(self, out_dir, status: str = "ok", solver_summary: dict | None = None):
        self.finished = time.time()
        self.wall_time = self.finished - self.started
        self.status = status
        self.solver_summary = solver_summary or {}
        self.write(out_dir)

    def write(self, out_dir) -> Path:
        path = Path(out_dir) / "manifest.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return path
