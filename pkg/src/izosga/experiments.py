"""Experiment orchestration: presets, replication management, aggregation.

Settings are the dict-of-sections mirror of the INI file; this module turns
them into typed objects, runs replications (optionally in parallel), writes
the trace CSVs plus a manifest, and aggregates replication sets into
mean +/- standard-error curves.
"""
from __future__ import annotations

import concurrent.futures
from pathlib import Path

import numpy as np

from . import runio
from .config import (
    DEFAULT_SETTINGS,
    ChannelParams,
    ConfigError,
    Geometry,
    NetworkConfig,
    load_settings,
    merge_settings,
    parse_point,
    parse_quantity,
    parse_user_positions,
    settings_bool,
)
from .optimizer import (
    GEOMETRY_STREAM,
    THETA0_STREAM,
    BudgetSchedule,
    IzosgaConfig,
    RunResult,
    SeedBundle,
    run,
)
from .reflection import IrsParams, VaractorCircuit
from .wmmse import OracleConfig

__all__ = [
    "SWEEP_BUDGETS",
    "SCALES",
    "SCHEDULE_A",
    "SCHEDULE_B",
    "PRESETS",
    "resolve_settings",
    "network_from_settings",
    "irs_from_settings",
    "optimizer_from_settings",
    "execute_run",
    "preset_arms",
    "run_preset",
    "aggregate",
    "replay_manifest",
    "plot_manifest",
]

SWEEP_BUDGETS = (1, 2, 3, 5, 10, 20, 50)
PRESETS = ("budget-sweep", "budget-schedule", "varactor-sweep", "baseline-random-phase", "custom")

# scale tuples (M, K, S, horizon, schedule period); desk keeps full presets
# affordable on a laptop, paper matches the headline experiment dimensions
SCALES = {
    "desk": {
        "network": {"num_antennas": "4", "num_users": "4", "num_irs_elements": "64"},
        "optimizer": {"horizon": "5000", "schedule_period": "1600", "gap_cadence": "50"},
    },
    "paper": {
        "network": {"num_antennas": "6", "num_users": "32", "num_irs_elements": "1000"},
        "optimizer": {"horizon": "32000", "schedule_period": "8000", "gap_cadence": "500"},
    },
}

# decreasing-budget schedules: A stays above the budget threshold throughout,
# B dips below it on the last segment
SCHEDULE_A = {"desk": "20,15,12,10", "paper": "20,10,7,6,5"}
SCHEDULE_B = {"desk": "20,10,5,1", "paper": "20,5,4,3,2"}

BASELINE_BUDGET = 20  # WMMSE budget used by the fixed-random-theta baselines


def resolve_settings(scale: str = "desk", config_path=None, overrides=None) -> dict:
    """Defaults -> scale preset -> config file -> explicit overrides."""
    if scale not in SCALES:
        raise ConfigError("scale must be one of %s" % (tuple(SCALES),))
    settings = merge_settings(DEFAULT_SETTINGS, SCALES[scale])
    if config_path:
        settings = load_settings(config_path, base=settings)
    if overrides:
        settings = merge_settings(settings, overrides)
    settings["experiment"]["scale"] = scale
    return settings


def _parse_rician(text: str) -> float:
    if str(text).strip().lower() in ("inf", "infinity"):
        return np.inf
    return parse_quantity(text)


def _disc_positions(center: np.ndarray, radius: float, k: int, rng) -> np.ndarray:
    """k points uniform over a horizontal disc at the center's height."""
    r = radius * np.sqrt(rng.uniform(size=k))
    ang = rng.uniform(0.0, 2.0 * np.pi, size=k)
    return np.column_stack(
        (center[0] + r * np.cos(ang), center[1] + r * np.sin(ang), np.full(k, center[2]))
    )


def network_from_settings(settings: dict, geometry_rng) -> NetworkConfig:
    net, geo, ch = settings["network"], settings["geometry"], settings["channel"]
    k = int(net["num_users"])
    users = parse_user_positions(geo["user_positions"])
    if users is None:
        users = _disc_positions(
            parse_point(geo["user_disc_center"]),
            float(geo["user_disc_radius"]),
            k,
            geometry_rng,
        )
    elif users.shape[0] != k:
        raise ConfigError("explicit user_positions do not match num_users")
    channel = ChannelParams(
        carrier_frequency_hz=parse_quantity(ch["carrier_frequency"]),
        ref_gain=parse_quantity(ch["ref_pathloss"]),
        ref_distance_m=float(ch["ref_distance"]),
        pathloss_exp_ap_irs=float(ch["pathloss_exp_ap_irs"]),
        pathloss_exp_irs_user=float(ch["pathloss_exp_irs_user"]),
        pathloss_exp_ap_user=float(ch["pathloss_exp_ap_user"]),
        rician_ap_irs=_parse_rician(ch["rician_ap_irs"]),
        rician_irs_user=_parse_rician(ch["rician_irs_user"]),
        rician_ap_user=_parse_rician(ch["rician_ap_user"]),
        irs_rows=int(ch["irs_rows"]),
    )
    return NetworkConfig(
        num_antennas=int(net["num_antennas"]),
        num_users=k,
        num_irs_elements=int(net["num_irs_elements"]),
        power_budget=net["power_budget"],
        noise_variances=net["noise_variance"],
        sumrate_weights=net["sumrate_weights"],
        geometry=Geometry(
            ap_position=parse_point(geo["ap_position"]),
            irs_position=parse_point(geo["irs_position"]),
            user_positions=users,
        ),
        channel=channel,
    )


def irs_from_settings(settings: dict, config: NetworkConfig, theta0_rng) -> IrsParams:
    irs = settings["irs"]
    kind = irs["parametrization"].strip()
    s = config.num_irs_elements
    if kind == "ideal_phase":
        params = IrsParams.ideal_phase(s)
    elif kind == "phase_amplitude":
        params = IrsParams.phase_amplitude(s)
    elif kind == "varactor":
        circuit = VaractorCircuit(
            top_inductance=float(irs["top_inductance"]),
            bottom_inductance=float(irs["bottom_inductance"]),
            loss_resistance=float(irs["loss_resistance"]),
            frequency_hz=config.channel.carrier_frequency_hz,
            intrinsic_impedance=float(irs["intrinsic_impedance"]),
            c_min_pf=float(irs["c_min_pf"]),
            c_max_pf=float(irs["c_max_pf"]),
        )
        params = IrsParams.varactor(s, circuit=circuit)
    else:
        raise ConfigError("unknown IRS parametrization %r" % (kind,))
    mode = settings["optimizer"]["theta0"].strip().lower()
    if mode == "random":
        params = params.random_feasible(theta0_rng)
    elif mode not in ("zeros", "default"):
        raise ConfigError("theta0 must be 'zeros', 'default' or 'random'")
    return params


def optimizer_from_settings(settings: dict) -> tuple[IzosgaConfig, OracleConfig]:
    o = settings["optimizer"]
    sched_text = o["wmmse_schedule"].strip()
    if sched_text:
        schedule = BudgetSchedule(
            values=tuple(int(v) for v in sched_text.split(",")),
            period=int(o["schedule_period"]),
        )
        template_budget = schedule.values[0]
    else:
        schedule = int(o["wmmse_iters"])
        template_budget = schedule
    opt = IzosgaConfig(
        step_size=float(o["step_size"]),
        smoothing=float(o["smoothing"]),
        horizon=int(o["horizon"]),
        wmmse_schedule=schedule,
        return_rule=o["return_rule"].strip(),
        batch_probes=int(o["batch_probes"]),
        step_decay=settings_bool(o["step_decay"]),
        warm_start=settings_bool(o["warm_start"]),
        store_theta=settings["experiment"]["scale"] != "paper",
        gap_cadence=int(o["gap_cadence"]),
        gap_reference_budget=int(o["gap_reference_budget"]),
    )
    oracle = OracleConfig(
        max_iterations=template_budget,
        objective_tolerance=float(o["wmmse_tolerance"]),
        init_strategy=o["wmmse_init"].strip(),
    )
    return opt, oracle


def execute_run(settings: dict, master: int, replication: int) -> tuple[RunResult, NetworkConfig]:
    """One fully seeded replication from resolved settings."""
    seeds = SeedBundle(master=int(master), replication=int(replication))
    config = network_from_settings(settings, seeds.generator(GEOMETRY_STREAM))
    params = irs_from_settings(settings, config, seeds.generator(THETA0_STREAM))
    opt, oracle = optimizer_from_settings(settings)
    result = run(config, opt, oracle, seeds, params=params)
    return result, config


def preset_arms(preset: str, scale: str) -> list:
    """(arm name, settings overrides) pairs defining one preset."""
    if preset == "budget-sweep":
        return [
            (
                "sweep_b%02d" % b,
                {"optimizer": {"wmmse_iters": str(b), "wmmse_schedule": ""}},
            )
            for b in SWEEP_BUDGETS
        ]
    if preset == "budget-schedule":
        return [
            ("schedule_a", {"optimizer": {"wmmse_schedule": SCHEDULE_A[scale]}}),
            ("schedule_b", {"optimizer": {"wmmse_schedule": SCHEDULE_B[scale]}}),
        ]
    if preset == "varactor-sweep":
        fixed = {
            "step_size": "0",
            "theta0": "random",
            "wmmse_iters": str(BASELINE_BUDGET),
            "wmmse_schedule": "",
        }
        tuned = {"wmmse_iters": str(BASELINE_BUDGET), "wmmse_schedule": ""}
        # the capacitance response is steep near resonance, so the varactor
        # arm walks with a much smaller step and probe than the phase arms
        var_tuned = dict(tuned, step_size="0.002", smoothing="0.02")
        return [
            ("varactor_opt", {"irs": {"parametrization": "varactor"}, "optimizer": var_tuned}),
            ("varactor_rand", {"irs": {"parametrization": "varactor"}, "optimizer": dict(fixed)}),
            ("ideal_opt", {"irs": {"parametrization": "ideal_phase"}, "optimizer": dict(tuned)}),
            ("ideal_rand", {"irs": {"parametrization": "ideal_phase"}, "optimizer": dict(fixed)}),
        ]
    if preset == "baseline-random-phase":
        return [
            (
                "baseline",
                {
                    "optimizer": {
                        "step_size": "0",
                        "theta0": "random",
                        "wmmse_iters": str(BASELINE_BUDGET),
                        "wmmse_schedule": "",
                    }
                },
            )
        ]
    if preset == "custom":
        return [("run", {})]
    raise ConfigError("unknown preset %r" % (preset,))


def _run_task(task: tuple) -> dict:
    """Worker: execute one replication and write its CSV (private file)."""
    arm, settings, master, replication, csv_path, ma_window = task
    result, _ = execute_run(settings, master, replication)
    runio.write_trace_csv(csv_path, result.trace, ma_window)
    return {
        "arm": arm,
        "csv": Path(csv_path).name,
        "replication": replication,
        "theta_out": [float(x) for x in result.theta_out],
        "t_star": result.t_star,
        "settings": settings,
    }


def run_preset(
    preset: str,
    scale: str = "desk",
    replications: int = 1,
    master: int = 0,
    out_dir="runs",
    config_path=None,
    overrides=None,
    jobs: int = 1,
    plot: bool = False,
) -> Path:
    """Run every arm of a preset for the requested replications.

    Returns the manifest path.  Replications execute concurrently when
    jobs > 1; results are deterministic either way since every task is fully
    seeded by (master, replication).
    """
    if replications < 1:
        raise ConfigError("need at least one replication")
    settings = resolve_settings(scale, config_path, overrides)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ma_window = int(settings["optimizer"]["ma_window"])
    tasks = []
    for arm, arm_overrides in preset_arms(preset, scale):
        arm_settings = merge_settings(settings, arm_overrides)
        for rep in range(replications):
            csv_path = out / ("%s_rep%03d.csv" % (arm, rep))
            tasks.append((arm, arm_settings, master, rep, str(csv_path), ma_window))
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_run_task, tasks))
    else:
        entries = [_run_task(t) for t in tasks]
    manifest = runio.make_manifest(preset, scale, master, ma_window, entries)
    manifest_path = out / "manifest.json"
    runio.write_manifest(manifest_path, manifest)
    if plot:
        plot_manifest(manifest_path)
    return manifest_path


def aggregate(csv_paths, window=None) -> dict:
    """Mean +/- standard error (across replications) of the smoothed sumrate.

    window=None uses the stored sumrate_ma column; otherwise the moving
    average is recomputed from the raw sumrate with the given window.
    """
    paths = list(csv_paths)
    if not paths:
        raise ValueError("aggregate needs at least one trace")
    curves = []
    t_axis = None
    for p in paths:
        data = runio.read_trace_csv(p)
        if t_axis is None:
            t_axis = data["t"]
        elif data["t"].shape != t_axis.shape:
            raise ValueError("mismatched trace lengths under aggregation")
        if window is None:
            curves.append(data["sumrate_ma"])
        else:
            curves.append(runio.moving_average(data["sumrate"], window))
    arr = np.vstack(curves)
    mean = arr.mean(axis=0)
    if arr.shape[0] > 1:
        stderr = arr.std(axis=0, ddof=1) / np.sqrt(arr.shape[0])
    else:
        stderr = np.zeros_like(mean)
    return {
        "t": t_axis,
        "mean": mean,
        "stderr": stderr,
        "final_mean": float(mean[-1]),
        "final_stderr": float(stderr[-1]),
        "count": arr.shape[0],
    }


def replay_manifest(manifest_path, out_dir) -> list:
    """Re-execute every run recorded in a manifest; returns the CSV paths."""
    manifest = runio.read_manifest(manifest_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    produced = []
    for entry in manifest["runs"]:
        result, _ = execute_run(
            entry["settings"], manifest["master_seed"], entry["replication"]
        )
        path = out / entry["csv"]
        runio.write_trace_csv(path, result.trace, manifest["ma_window"])
        produced.append(path)
    return produced


def plot_manifest(manifest_path, out_path=None):
    """Static SVG of the aggregated smoothed sumrate, one series per arm."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    manifest = runio.read_manifest(manifest_path)
    base = Path(manifest_path).parent
    by_arm: dict[str, list] = {}
    for entry in manifest["runs"]:
        by_arm.setdefault(entry["arm"], []).append(base / entry["csv"])
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for arm in sorted(by_arm):
        agg = aggregate(by_arm[arm])
        ax.plot(agg["t"], agg["mean"], label=arm)
        ax.fill_between(
            agg["t"], agg["mean"] - agg["stderr"], agg["mean"] + agg["stderr"], alpha=0.2
        )
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("sumrate (moving average, bps/Hz)")
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(alpha=0.3)
    out_path = out_path or base / "summary.svg"
    fig.savefig(out_path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return Path(out_path)
