"""Command-line interface.

Subcommands: run, sweep, schedule, varactor, baseline (presets), diagnose
(Moreau / averaged-gap report on a finished run), selftest (fast property
checks).  Exit codes: 0 ok, 1 usage or config error, 2 run failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, runio
from ._version import __version__
from .config import ConfigError, NetworkConfig, Geometry, load_settings
from .diagnostics import MoreauConfig, moreau_grad_norm
from .optimizer import GEOMETRY_STREAM, THETA0_STREAM, SeedBundle, project_theta
from .wmmse import OracleConfig, OracleFailure, wmmse_solve

PRESET_BY_COMMAND = {
    "run": "custom",
    "sweep": "budget-sweep",
    "schedule": "budget-schedule",
    "varactor": "varactor-sweep",
    "baseline": "baseline-random-phase",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="izosga",
        description="IRS tuning by zeroth-order stochastic ascent over WMMSE precoding",
    )
    parser.add_argument("--version", action="version", version="izosga " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="PATH", help="INI config file")
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--reps", type=int, default=None, help="replication count")
        p.add_argument("--scale", choices=("desk", "paper"), default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel replications")
        p.add_argument("--plot", action="store_true", help="emit summary SVG")

    helps = {
        "run": "single run from config",
        "sweep": "one curve per WMMSE budget (1,2,3,5,10,20,50)",
        "schedule": "decreasing-budget schedules A and B",
        "varactor": "varactor vs ideal-phase arms with matched seeds",
        "baseline": "WMMSE with fixed random parameters",
    }
    for cmd in PRESET_BY_COMMAND:
        add_common(sub.add_parser(cmd, help=helps[cmd]))

    diag = sub.add_parser("diagnose", help="Moreau / averaged-gap report for a saved run")
    diag.add_argument("--manifest", required=True, help="manifest.json of a finished run")
    diag.add_argument("--csv", default=None, help="run entry to diagnose (default: first)")
    diag.add_argument("--lam", type=float, default=10.0, help="Moreau envelope parameter")
    diag.add_argument("--out", default=None, help="write the report JSON here")

    sub.add_parser("selftest", help="fast built-in property checks")
    return parser


def _master_seed(args, settings) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("IZOSGA_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError("IZOSGA_SEED must be an integer, got %r" % env)
    return int(settings["experiment"]["seed"])


def _preset_command(args) -> int:
    file_scale = None
    if args.config:
        file_scale = load_settings(args.config)["experiment"]["scale"]
    scale = args.scale or file_scale or "desk"
    settings = experiments.resolve_settings(scale, args.config)
    seed = _master_seed(args, settings)
    reps = args.reps if args.reps is not None else int(settings["experiment"]["replications"])
    out = args.out or settings["experiment"]["out_dir"]
    manifest = experiments.run_preset(
        PRESET_BY_COMMAND[args.command],
        scale=scale,
        replications=reps,
        master=seed,
        out_dir=out,
        config_path=args.config,
        jobs=max(1, args.jobs),
        plot=args.plot,
    )
    print("wrote %s" % manifest)
    return 0


def _diagnose(args) -> int:
    manifest = runio.read_manifest(args.manifest)
    entry = None
    for candidate in manifest["runs"]:
        if args.csv is None or candidate["csv"] == args.csv:
            entry = candidate
            break
    if entry is None:
        raise ConfigError("no run entry named %r in the manifest" % (args.csv,))
    master = manifest["master_seed"]
    rep = entry["replication"]
    seeds = SeedBundle(master=master, replication=rep)
    settings = entry["settings"]
    config = experiments.network_from_settings(settings, seeds.generator(GEOMETRY_STREAM))
    params = experiments.irs_from_settings(settings, config, seeds.generator(THETA0_STREAM))
    params = params.with_theta(np.asarray(entry["theta_out"], dtype=float))

    data = runio.read_trace_csv(Path(args.manifest).parent / entry["csv"])
    gaps = data["gap_estimate"]
    gaps = gaps[np.isfinite(gaps)]
    eps_bar = float(gaps.mean()) if gaps.size else None

    mcfg = MoreauConfig(envelope_lambda=args.lam)
    rep_out = moreau_grad_norm(params, mcfg, config, entropy=master, report=True)
    report = {
        "csv": entry["csv"],
        "replication": rep,
        "master_seed": master,
        "moreau_estimate": rep_out.grad_norm,
        "envelope_lambda": rep_out.envelope_lambda,
        "residual_grad_norm": rep_out.residual_grad_norm,
        "sample_budget": rep_out.sample_budget,
        "prox_iterations": rep_out.prox_iterations,
        "epsilon_bar": eps_bar,
        "gap_count": int(gaps.size),
    }
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    return 0


def _selftest() -> int:
    from . import _kernels
    from .channel import ChannelModel
    from .sumrate import Precoder, cogradient as cograd, sumrate
    from .zo_gradient import quasi_gradient

    failures = 0

    def check(name, ok):
        nonlocal failures
        print("%s %s" % ("PASS" if ok else "FAIL", name))
        if not ok:
            failures += 1

    rng = np.random.default_rng(7)
    geo = Geometry(
        ap_position=np.array([0.0, 0.0, 10.0]),
        irs_position=np.array([40.0, 2.0, 6.0]),
        user_positions=np.array([[42.0, 8.0, 1.5], [44.0, 6.0, 1.5], [41.0, 9.0, 1.5]]),
    )
    config = NetworkConfig(
        num_antennas=3,
        num_users=3,
        num_irs_elements=4,
        power_budget=1.0,
        noise_variances=np.full(3, 0.5),
        sumrate_weights=np.ones(3),
        geometry=geo,
    )

    def random_instance():
        h = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        w = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        w *= np.sqrt(1.0 / np.sum(np.abs(w) ** 2))
        return h, Precoder(w=w, power_budget=1.0)

    # co-gradient against central finite differences
    ok = True
    for _ in range(10):
        h, prec = random_instance()
        g = cograd(prec, h, config)
        for _ in range(5):
            d = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            tau = 1e-6
            fp = sumrate(prec, h + tau * d, config).value
            fm = sumrate(prec, h - tau * d, config).value
            lhs = 2.0 * np.real(np.vdot(g, d.ravel(order="F")))
            if abs(lhs - (fp - fm) / (2 * tau)) > 1e-6 * (1 + abs(fp)):
                ok = False
    check("cogradient matches finite differences", ok)

    # WMMSE: monotone trace, feasibility, K=1 closed form
    ok = True
    for _ in range(20):
        h, _ = random_instance()
        rep = wmmse_solve(h, config, OracleConfig(max_iterations=25))
        if np.any(np.diff(rep.sumrate_trace) < -1e-9 * np.abs(rep.sumrate_trace[:-1]) - 1e-12):
            ok = False
        if rep.precoder.power() > 1.0 + 1e-9:
            ok = False
    check("wmmse monotone and feasible", ok)

    cfg1 = NetworkConfig(
        num_antennas=3,
        num_users=1,
        num_irs_elements=4,
        power_budget=2.0,
        noise_variances=np.array([0.3]),
        sumrate_weights=np.array([1.0]),
        geometry=Geometry(
            ap_position=geo.ap_position,
            irs_position=geo.irs_position,
            user_positions=geo.user_positions[:1],
        ),
    )
    h1 = (rng.standard_normal((3, 1)) + 1j * rng.standard_normal((3, 1)))
    rep1 = wmmse_solve(h1, cfg1, OracleConfig(max_iterations=5))
    best = np.log2(1 + 2.0 * np.linalg.norm(h1) ** 2 / 0.3)
    check("single-user closed form", abs(rep1.achieved_sumrate - best) < 1e-8 * best)

    # projection and estimator structure
    from .reflection import IrsParams

    params = IrsParams.ideal_phase(6)
    inside = rng.uniform(-1, 1, 6)
    clipped = project_theta(np.full(6, 100.0), params)
    check(
        "projection clamps and is idempotent",
        np.allclose(project_theta(inside, params), inside)
        and np.allclose(clipped, params.upper)
        and np.allclose(project_theta(clipped, params), clipped),
    )

    u = rng.standard_normal(6)
    dvec = quasi_gradient(
        rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)),
        rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2)),
        u,
        0.1,
        rng.standard_normal(6) + 1j * rng.standard_normal(6),
    )
    cross = np.linalg.norm(dvec - (dvec @ u) / (u @ u) * u)
    check("quasi-gradient collinear with probe", cross <= 1e-12 * max(1.0, np.linalg.norm(dvec)))

    model = ChannelModel(config)
    s1 = model.sample(np.random.default_rng(123))
    s2 = model.sample(np.random.default_rng(123))
    check(
        "channel draws reproducible",
        np.array_equal(s1.ap_irs, s2.ap_irs)
        and np.array_equal(s1.irs_user, s2.irs_user)
        and np.array_equal(s1.direct, s2.direct),
    )

    print("backend: %s" % _kernels.backend_name())
    if failures:
        print("%d check(s) failed" % failures)
        return 2
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        if args.command == "selftest":
            return _selftest()
        if args.command == "diagnose":
            return _diagnose(args)
        return _preset_command(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print("missing file: %s" % exc, file=sys.stderr)
        return 1
    except (OracleFailure, RuntimeError, ValueError) as exc:
        print("run failure: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
