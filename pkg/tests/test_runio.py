"""Trace CSV schema, float formatting, and manifest round-trips."""
import numpy as np
import pytest

from izosga.optimizer import IterateRecord
from izosga.runio import (
    CSV_COLUMNS,
    format_float,
    make_manifest,
    moving_average,
    read_manifest,
    read_trace_csv,
    write_manifest,
    write_trace_csv,
)

from _oracles import moving_average_reference


def make_trace(n=12, with_gaps=True):
    rng = np.random.default_rng(4)
    trace = []
    for t in range(n):
        gap = float(rng.uniform(0, 0.2)) if with_gaps and t % 3 == 0 else None
        trace.append(
            IterateRecord(
                t=t,
                theta_norm=float(rng.uniform(0, 2)),
                sumrate=float(rng.uniform(0, 5)),
                wmmse_iters=int(rng.integers(1, 20)),
                clamp_events=int(rng.integers(0, 4)),
                gap_estimate=gap,
            )
        )
    return trace


def test_column_order_is_pinned():
    assert CSV_COLUMNS == (
        "t",
        "sumrate",
        "sumrate_ma",
        "wmmse_iters",
        "gap_estimate",
        "clamp_events",
        "theta_norm",
    )


def test_format_float_round_trips_exactly():
    rng = np.random.default_rng(9)
    for _ in range(200):
        x = float(rng.standard_normal() * 10.0 ** rng.integers(-8, 8))
        assert float(format_float(x)) == x
    assert float(format_float(1 / 3)) == 1 / 3


def test_moving_average_matches_reference():
    rng = np.random.default_rng(2)
    values = rng.standard_normal(40)
    for window in (1, 2, 5, 40, 100):
        got = moving_average(values, window)
        ref = moving_average_reference(values, window)
        assert np.allclose(got, ref, atol=1e-12)
    assert np.array_equal(moving_average(values, 1), values)


def test_trace_csv_round_trip(tmp_path):
    trace = make_trace()
    path = tmp_path / "trace.csv"
    write_trace_csv(path, trace, ma_window=4)
    data = read_trace_csv(path)
    assert np.array_equal(data["t"], np.arange(12))
    assert np.allclose(data["sumrate"], [r.sumrate for r in trace])
    assert np.allclose(data["theta_norm"], [r.theta_norm for r in trace])
    assert np.array_equal(data["wmmse_iters"], [r.wmmse_iters for r in trace])
    assert np.array_equal(data["clamp_events"], [r.clamp_events for r in trace])
    ref_ma = moving_average_reference([r.sumrate for r in trace], 4)
    assert np.allclose(data["sumrate_ma"], ref_ma)
    gaps = data["gap_estimate"]
    for t, rec in enumerate(trace):
        if rec.gap_estimate is None:
            assert np.isnan(gaps[t])
        else:
            assert gaps[t] == rec.gap_estimate


def test_trace_csv_bytes_are_deterministic(tmp_path):
    trace = make_trace()
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trace_csv(a, trace, ma_window=4)
    write_trace_csv(b, trace, ma_window=4)
    raw = a.read_bytes()
    assert raw == b.read_bytes()
    assert b"\r" not in raw  # newline contract is "\n" on every platform
    assert raw.startswith(b"t,sumrate,sumrate_ma,")


def test_read_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("time,rate\n0,1.0\n")
    with pytest.raises(ValueError):
        read_trace_csv(path)


def test_manifest_round_trip(tmp_path):
    runs = [{"arm": "run", "csv": "run_rep00.csv", "replication": 0}]
    man = make_manifest("custom", "desk", master_seed=7, ma_window=200, runs=runs)
    assert man["artifact"] == "izosga"
    assert man["master_seed"] == 7
    path = tmp_path / "manifest.json"
    write_manifest(path, man)
    assert read_manifest(path) == man
    text = path.read_text()
    assert text.endswith("\n")
