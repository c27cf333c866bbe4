"""Experiment harness: settings resolution, presets, aggregation, replay."""
import numpy as np
import pytest

from izosga.config import ConfigError
from izosga.experiments import (
    BASELINE_BUDGET,
    SCHEDULE_A,
    SCHEDULE_B,
    SWEEP_BUDGETS,
    _disc_positions,
    aggregate,
    execute_run,
    irs_from_settings,
    network_from_settings,
    optimizer_from_settings,
    plot_manifest,
    preset_arms,
    replay_manifest,
    resolve_settings,
    run_preset,
)
from izosga.optimizer import BudgetSchedule, IterateRecord
from izosga.runio import read_manifest, write_trace_csv

TINY = {
    "network": {"num_antennas": "2", "num_users": "2", "num_irs_elements": "4"},
    "optimizer": {"horizon": "15", "wmmse_iters": "3", "ma_window": "5"},
}


def tiny_settings(**extra):
    overrides = {k: dict(v) for k, v in TINY.items()}
    for section, kv in extra.items():
        overrides.setdefault(section, {}).update(kv)
    return resolve_settings("desk", overrides=overrides)


# -- settings resolution -----------------------------------------------------


def test_resolve_settings_scales():
    desk = resolve_settings("desk")
    assert desk["network"]["num_irs_elements"] == "64"
    assert desk["optimizer"]["horizon"] == "5000"
    assert desk["experiment"]["scale"] == "desk"
    paper = resolve_settings("paper")
    assert paper["network"]["num_antennas"] == "6"
    assert paper["network"]["num_users"] == "32"
    assert paper["network"]["num_irs_elements"] == "1000"
    assert paper["optimizer"]["horizon"] == "32000"
    with pytest.raises(ConfigError):
        resolve_settings("galactic")


def test_overrides_win():
    s = resolve_settings("desk", overrides={"optimizer": {"horizon": "7"}})
    assert s["optimizer"]["horizon"] == "7"


def test_disc_positions_geometry():
    rng = np.random.default_rng(0)
    center = np.array([10.0, -3.0, 1.5])
    pts = _disc_positions(center, 2.0, 500, rng)
    assert pts.shape == (500, 3)
    assert np.all(pts[:, 2] == 1.5)
    dist = np.hypot(pts[:, 0] - 10.0, pts[:, 1] + 3.0)
    assert np.all(dist <= 2.0 + 1e-12)
    assert dist.max() > 1.8  # actually fills the disc


def test_network_from_settings_units():
    s = tiny_settings()
    cfg = network_from_settings(s, np.random.default_rng(1))
    assert cfg.num_antennas == 2 and cfg.num_users == 2
    assert cfg.power_budget == pytest.approx(1.0)  # 30 dBm
    assert np.allclose(cfg.noise_variances, 10.0 ** -8.4)  # -54 dBm
    center = np.array([102.0, 3.0, 1.5])
    d = np.linalg.norm(cfg.geometry.user_positions - center, axis=1)
    assert np.all(d <= 3.0 + 1e-12)


def test_explicit_user_positions():
    s = tiny_settings(geometry={"user_positions": "1,2,1.5; 3,4,1.5"})
    cfg = network_from_settings(s, np.random.default_rng(1))
    assert np.allclose(cfg.geometry.user_positions, [[1, 2, 1.5], [3, 4, 1.5]])
    bad = tiny_settings(geometry={"user_positions": "1,2,1.5"})
    with pytest.raises(ConfigError):
        network_from_settings(bad, np.random.default_rng(1))


def test_irs_from_settings_kinds_and_theta0():
    rng = np.random.default_rng(2)
    s = tiny_settings()
    cfg = network_from_settings(s, np.random.default_rng(1))
    params = irs_from_settings(s, cfg, rng)
    assert params.kind == "ideal_phase"
    assert np.array_equal(params.theta, np.zeros(4))

    v = tiny_settings(irs={"parametrization": "varactor"})
    var = irs_from_settings(v, cfg, rng)
    assert var.kind == "varactor"
    assert var.circuit.frequency_hz == pytest.approx(2.4e9)
    assert var.is_feasible()

    r = tiny_settings(optimizer={"theta0": "random"})
    p1 = irs_from_settings(r, cfg, np.random.default_rng(7))
    p2 = irs_from_settings(r, cfg, np.random.default_rng(7))
    assert np.array_equal(p1.theta, p2.theta)
    assert p1.is_feasible() and np.any(p1.theta != 0)

    with pytest.raises(ConfigError):
        irs_from_settings(tiny_settings(irs={"parametrization": "mirror"}), cfg, rng)
    with pytest.raises(ConfigError):
        irs_from_settings(tiny_settings(optimizer={"theta0": "origin"}), cfg, rng)


def test_optimizer_from_settings():
    s = tiny_settings(
        optimizer={
            "wmmse_schedule": "20,10,5,1",
            "schedule_period": "4",
            "step_decay": "yes",
            "warm_start": "true",
        }
    )
    opt, oracle = optimizer_from_settings(s)
    assert isinstance(opt.wmmse_schedule, BudgetSchedule)
    assert opt.wmmse_schedule.values == (20, 10, 5, 1)
    assert opt.wmmse_schedule.period == 4
    assert oracle.max_iterations == 20  # template budget = first stage
    assert opt.step_decay and opt.warm_start
    assert opt.store_theta  # desk scale keeps iterates

    plain, oracle2 = optimizer_from_settings(tiny_settings())
    assert plain.wmmse_schedule == 3
    assert oracle2.max_iterations == 3

    paper = resolve_settings("paper", overrides=TINY)
    popt, _ = optimizer_from_settings(paper)
    assert not popt.store_theta


# -- execution and presets ----------------------------------------------------


def test_execute_run_deterministic_across_calls():
    s = tiny_settings()
    r1, cfg1 = execute_run(s, master=42, replication=0)
    r2, _ = execute_run(s, master=42, replication=0)
    r3, _ = execute_run(s, master=42, replication=1)
    assert [a.sumrate for a in r1.trace] == [a.sumrate for a in r2.trace]
    assert np.array_equal(r1.theta_out, r2.theta_out)
    assert [a.sumrate for a in r1.trace] != [a.sumrate for a in r3.trace]
    assert cfg1.num_irs_elements == 4


def test_preset_arm_tables():
    sweep = preset_arms("budget-sweep", "desk")
    assert [a for a, _ in sweep] == ["sweep_b%02d" % b for b in SWEEP_BUDGETS]
    sched = dict(preset_arms("budget-schedule", "desk"))
    assert sched["schedule_a"]["optimizer"]["wmmse_schedule"] == SCHEDULE_A["desk"]
    assert sched["schedule_b"]["optimizer"]["wmmse_schedule"] == SCHEDULE_B["desk"]
    var = dict(preset_arms("varactor-sweep", "desk"))
    assert set(var) == {"varactor_opt", "varactor_rand", "ideal_opt", "ideal_rand"}
    assert var["varactor_rand"]["optimizer"]["step_size"] == "0"
    assert var["ideal_opt"]["optimizer"]["wmmse_iters"] == str(BASELINE_BUDGET)
    base = preset_arms("baseline-random-phase", "desk")
    assert base[0][0] == "baseline"
    assert base[0][1]["optimizer"]["theta0"] == "random"
    assert preset_arms("custom", "desk") == [("run", {})]
    with pytest.raises(ConfigError):
        preset_arms("does-not-exist", "desk")


def test_aggregate_mean_and_stderr(tmp_path):
    def constant_trace(value):
        return [
            IterateRecord(t=t, theta_norm=0.0, sumrate=value, wmmse_iters=1, clamp_events=0)
            for t in range(6)
        ]

    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trace_csv(a, constant_trace(3.0), ma_window=2)
    write_trace_csv(b, constant_trace(5.0), ma_window=2)
    agg = aggregate([a, b])
    assert np.allclose(agg["mean"], 4.0)
    assert np.allclose(agg["stderr"], 1.0)  # std([3,5], ddof=1)/sqrt(2)
    assert agg["final_mean"] == 4.0 and agg["final_stderr"] == 1.0
    assert agg["count"] == 2
    solo = aggregate([a])
    assert np.all(solo["stderr"] == 0.0)
    rewin = aggregate([a, b], window=3)
    assert np.allclose(rewin["mean"], 4.0)
    with pytest.raises(ValueError):
        aggregate([])


def test_run_preset_writes_manifest_and_traces(tmp_path):
    out = tmp_path / "runs"
    manifest_path = run_preset(
        "custom", scale="desk", replications=2, master=3, out_dir=out, overrides=TINY
    )
    man = read_manifest(manifest_path)
    assert man["preset"] == "custom"
    assert man["master_seed"] == 3
    assert len(man["runs"]) == 2
    for entry in man["runs"]:
        csv = out / entry["csv"]
        assert csv.exists()
        assert entry["arm"] == "run"
        assert len(entry["theta_out"]) == 4


def test_parallel_execution_matches_serial(tmp_path):
    serial = run_preset(
        "custom", replications=2, master=5, out_dir=tmp_path / "s", overrides=TINY
    )
    parallel = run_preset(
        "custom", replications=2, master=5, out_dir=tmp_path / "p", overrides=TINY, jobs=2
    )
    for entry in read_manifest(serial)["runs"]:
        a = (tmp_path / "s" / entry["csv"]).read_bytes()
        b = (tmp_path / "p" / entry["csv"]).read_bytes()
        assert a == b


def test_replay_reproduces_bytes(tmp_path):
    out = tmp_path / "runs"
    manifest_path = run_preset(
        "custom", replications=2, master=9, out_dir=out, overrides=TINY
    )
    replayed = replay_manifest(manifest_path, tmp_path / "replay")
    assert len(replayed) == 2
    for path in replayed:
        original = out / path.name
        assert path.read_bytes() == original.read_bytes()


def test_plot_manifest_writes_svg(tmp_path):
    out = tmp_path / "runs"
    manifest_path = run_preset("custom", replications=1, master=1, out_dir=out, overrides=TINY)
    svg = plot_manifest(manifest_path)
    assert svg.exists() and svg.suffix == ".svg"
    head = svg.read_text()[:300]
    assert "<svg" in head or "xml" in head
