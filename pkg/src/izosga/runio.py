"""Run persistence: the trace CSV schema, run manifests, and replay plumbing.

The CSV schema is a byte-reproducibility contract: fixed column order, floats
with 17 significant digits, empty field for missing gap estimates, newline
"\n".  Replaying a manifest must reproduce every CSV byte for byte.
"""
from __future__ import annotations

import csv
import datetime
import json
from pathlib import Path

import numpy as np

from ._version import __version__

__all__ = [
    "CSV_COLUMNS",
    "format_float",
    "moving_average",
    "write_trace_csv",
    "read_trace_csv",
    "make_manifest",
    "write_manifest",
    "read_manifest",
]

CSV_COLUMNS = (
    "t",
    "sumrate",
    "sumrate_ma",
    "wmmse_iters",
    "gap_estimate",
    "clamp_events",
    "theta_norm",
)


def format_float(value: float) -> str:
    return "%.17g" % value


def moving_average(values, window: int) -> np.ndarray:
    """Trailing moving average; entry i averages the last min(window, i+1) values."""
    v = np.asarray(values, dtype=float)
    if window <= 1:
        return v.copy()
    csum = np.cumsum(v)
    out = np.empty_like(v)
    for i in range(v.size):
        lo = max(0, i - window + 1)
        total = csum[i] - (csum[lo - 1] if lo > 0 else 0.0)
        out[i] = total / (i - lo + 1)
    return out


def write_trace_csv(path, trace, ma_window: int):
    """Serialize a sequence of iterate records under the fixed schema."""
    ma = moving_average([rec.sumrate for rec in trace], ma_window)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec, smoothed in zip(trace, ma):
            gap = "" if rec.gap_estimate is None else format_float(rec.gap_estimate)
            writer.writerow(
                (
                    str(rec.t),
                    format_float(rec.sumrate),
                    format_float(smoothed),
                    str(rec.wmmse_iters),
                    gap,
                    str(rec.clamp_events),
                    format_float(rec.theta_norm),
                )
            )


def read_trace_csv(path) -> dict:
    """Load a trace CSV into arrays; missing gap estimates become NaN."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CSV_COLUMNS:
            raise ValueError("unexpected trace header in %s" % (path,))
        rows = list(reader)
    out = {
        "t": np.array([int(r[0]) for r in rows]),
        "sumrate": np.array([float(r[1]) for r in rows]),
        "sumrate_ma": np.array([float(r[2]) for r in rows]),
        "wmmse_iters": np.array([int(r[3]) for r in rows]),
        "gap_estimate": np.array([float(r[4]) if r[4] else np.nan for r in rows]),
        "clamp_events": np.array([int(r[5]) for r in rows]),
        "theta_norm": np.array([float(r[6]) for r in rows]),
    }
    return out


def make_manifest(preset: str, scale: str, master_seed: int, ma_window: int, runs: list) -> dict:
    """Assemble the run manifest; `runs` entries carry csv name, replication,
    fully resolved settings, and the returned theta."""
    return {
        "artifact": "izosga",
        "version": __version__,
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "preset": preset,
        "scale": scale,
        "master_seed": int(master_seed),
        "ma_window": int(ma_window),
        "runs": runs,
    }


def write_manifest(path, manifest: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
