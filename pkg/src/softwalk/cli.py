"""Command-line entry point: simulate, estimate, compare, sweep.

Every run writes a CSV log plus a JSON manifest embedding the fully
resolved scenario (model/profile/scenario texts and overrides), so any
manifest can be re-run bit-for-bit with `softwalk simulate --config
<manifest.json>`. Exit codes: 0 success, 1 usage/config error, 2 recorded
failure outcome (fall, divergence, infeasible QP).
"""

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .contact import ContactKinematics, RestPose, SurfaceGeometry
from .estimation import ContactParameterEstimator, EstimatorConfig
from .sim.engine import Simulator
from .sim.logio import SimLog
from .sim.scenario import load_scenario, scenario_from_texts, _builtin_text
from .so3 import rpy_to_rotation
from .textcfg import ConfigError, parse_file, single_section

LOG_NAME = "sim_log.csv"
MANIFEST_NAME = "manifest.json"


def _write_json_atomic(path, payload):
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _load_any_scenario(config, seed=None, overrides=None):
    """Load a scenario file, builtin name, or a previous run's manifest."""
    overrides = dict(overrides or {})
    if seed is not None:
        overrides["seed"] = seed
    text_ref = str(config)
    if text_ref.startswith("builtin:"):
        text = _builtin_text(text_ref[len("builtin:"):], ".scenario")
        return scenario_from_texts(text, path=text_ref, overrides=overrides)
    path = Path(config)
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        sc = manifest["scenario"]
        merged = dict(sc.get("overrides", {}))
        merged.update(overrides)
        return scenario_from_texts(sc["text"], sc["model_text"], sc["profile_text"],
                                   path=str(path), overrides=merged)
    return load_scenario(path, overrides=overrides)


def _run_and_write(scenario, out_dir, command, quiet=False):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sim = Simulator(scenario)
    result = sim.run()
    log_path = out_dir / LOG_NAME
    result.log.write_csv(log_path)
    manifest = {
        "softwalk_version": __version__,
        "command": command,
        "seed": scenario.seed,
        "outputs": {"log_csv": LOG_NAME},
        "outcome": result.summary,
        "scenario": {
            "text": scenario.scenario_text,
            "model_text": scenario.model_text,
            "profile_text": scenario.profile_text,
            "overrides": scenario.overrides,
        },
    }
    _write_json_atomic(out_dir / MANIFEST_NAME, manifest)
    if not quiet:
        print(f"[{scenario.name}] outcome={result.outcome}"
              + (f" reason={result.reason} t={result.fail_time:.3f}" if result.outcome != "success" else "")
              + f" com_rms={result.summary['com_rms']:.3e} log={log_path}")
    return result


def cmd_simulate(args):
    try:
        scenario = _load_any_scenario(args.config, args.seed,
                                      {"mode": args.mode} if args.mode else None)
    except (ConfigError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = _run_and_write(scenario, args.out, "simulate", args.quiet)
    return 0 if result.outcome == "success" else 2


def _estimator_config_from(path):
    cfg = EstimatorConfig()
    geom = None
    if path is None:
        return cfg, geom
    sections = parse_file(path)
    sec = single_section(sections, "estimator", path)
    cfg.sigma = sec.get_float("sigma", cfg.sigma)
    pi0 = sec.get_floats("initial_estimate", count=2, default=None)
    if pi0 is not None:
        cfg.initial_estimate = np.array(pi0)
    p0 = sec.get_floats("initial_covariance", count=2, default=None)
    if p0 is not None:
        cfg.initial_covariance = np.diag(p0)
    foot = sec.get_floats("foot", count=2, default=None)
    if foot is not None:
        geom = SurfaceGeometry(foot[0], foot[1])
    return cfg, geom


def cmd_estimate(args):
    try:
        table = SimLog.read_csv(args.log)
        cfg, geom = _estimator_config_from(args.config)
        feet = table.foot_names()
        foot = args.foot or (feet[0] if feet else None)
        if foot is None or foot not in feet:
            raise ConfigError(f"log has no foot columns for '{args.foot}' (available: {feet})")
        for col in ("pos_x", "fm_x", "contact", "rest_x"):
            if not table.has(f"{foot}.{col}"):
                raise ConfigError(f"log is missing column '{foot}.{col}' (not a SimLog schema)")
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    geom = geom or SurfaceGeometry(0.19, 0.09)
    est = ContactParameterEstimator(geom, cfg)
    col = lambda name: table.column(f"{foot}.{name}")
    time = table.column("time")
    contact = col("contact") > 0.5
    pos = np.stack([col("pos_x"), col("pos_y"), col("pos_z")], axis=1)
    rpy = np.stack([col("rpy_r"), col("rpy_p"), col("rpy_y")], axis=1)
    vel = np.stack([col("vel_x"), col("vel_y"), col("vel_z")], axis=1)
    omg = np.stack([col("omg_x"), col("omg_y"), col("omg_z")], axis=1)
    wm = np.stack([col(c) for c in ("fm_x", "fm_y", "fm_z", "taum_x", "taum_y", "taum_z")], axis=1)
    rest_p = np.stack([col("rest_x"), col("rest_y"), col("rest_z")], axis=1)
    rest_rpy = np.stack([col("rest_r"), col("rest_p"), col("rest_yw")], axis=1)

    rows = []
    prev_contact = True
    for i in range(len(table)):
        if contact[i] and not prev_contact:
            est.on_touchdown()
        prev_contact = contact[i]
        if contact[i]:
            rest = RestPose(rest_p[i], rpy_to_rotation(rest_rpy[i]))
            kin = ContactKinematics(pos[i], rpy_to_rotation(rpy[i]), vel[i], omg[i])
            est.update(rest, kin, wm[i], active=True)
        rows.append((time[i], est.estimate[0], est.estimate[1], est.covariance_trace))

    out_path = Path(args.out)
    if out_path.suffix != ".csv":
        out_path.mkdir(parents=True, exist_ok=True)
        out_path = out_path / "estimates.csv"
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time,k_hat,b_hat,p_trace\n")
        for row in rows:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")

    if not args.quiet:
        print(f"final k_hat={rows[-1][1]:.6g} b_hat={rows[-1][2]:.6g} -> {out_path}")
    if table.has(f"{foot}.k_true"):
        kt = col("k_true")
        bt = col("b_true")
        k_hat = np.array([r[1] for r in rows])
        b_hat = np.array([r[2] for r in rows])
        ok = (np.abs(k_hat - kt) <= 0.01 * kt) & (np.abs(b_hat - bt) <= 0.01 * bt)
        conv_t = float("nan")
        for i in range(len(ok)):
            if ok[i:].all():
                conv_t = time[i]
                break
        if not args.quiet:
            print(f"convergence time (both within 1%): {conv_t}")
    return 0


def cmd_compare(args):
    try:
        modes = [m.strip() for m in args.modes.split(",") if m.strip()]
        if not modes:
            raise ConfigError("empty mode list")
        scenarios = [_load_any_scenario(args.config, args.seed, {"mode": mode}) for mode in modes]
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = []
    for mode, scenario in zip(modes, scenarios):
        result = _run_and_write(scenario, out_dir / mode, "compare", args.quiet)
        results.append((mode, result))
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("mode,outcome,com_rms,wrench_rate_rms,momentum_err_mean,time_to_failure\n")
        for mode, result in results:
            s = result.summary
            fh.write(f"{mode},{s['outcome']},{s['com_rms']:.17g},{s['wrench_rate_rms']:.17g},"
                     f"{s['momentum_err_mean']:.17g},{s['fail_time']:.17g}\n")
    if not args.quiet:
        for mode, result in results:
            print(f"{mode}: {result.outcome} wrench_rate_rms={result.summary['wrench_rate_rms']:.4g}")
    return 0 if any(r.outcome == "success" for _, r in results) else 2


def _parse_grid(spec):
    axes = {}
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ConfigError(f"grid axis '{chunk}' is not name=v1,v2,...")
        name, values = chunk.split("=", 1)
        name = name.strip()
        if name not in ("k", "b", "mode", "sigma"):
            raise ConfigError(f"unknown grid axis '{name}' (use k, b, mode, sigma)")
        vals = [v.strip() for v in values.split(",") if v.strip()]
        if not vals:
            raise ConfigError(f"grid axis '{name}' has no values")
        axes[name] = vals
    if not axes:
        raise ConfigError("empty grid specification")
    names = sorted(axes)
    cells = []
    for combo in itertools.product(*(axes[n] for n in names)):
        cell = dict(zip(names, combo))
        for key in ("k", "b", "sigma"):
            if key in cell:
                cell[key] = float(cell[key])
        cells.append(cell)
    return cells


def _sweep_cell(payload):
    scenario_args, out_dir, quiet = payload
    scenario = _load_any_scenario(*scenario_args[:2], overrides=scenario_args[2])
    result = _run_and_write(scenario, out_dir, "sweep", quiet)
    return result.summary


def cmd_sweep(args):
    try:
        cells = _parse_grid(args.grid)
        base = _load_any_scenario(args.config, args.seed)  # validate early
    except (ConfigError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    del base
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = []
    for cell in cells:
        tag = "_".join(f"{k}={cell[k]}" for k in sorted(cell))
        jobs.append(((args.config, args.seed, cell), out_dir / f"cell_{tag}", args.quiet))

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            summaries = list(pool.map(_sweep_cell, jobs))
    else:
        summaries = [_sweep_cell(job) for job in jobs]

    with open(out_dir / "aggregate.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k,b,mode,sigma,outcome,com_rms,wrench_rate_rms,momentum_err_mean,time_to_failure\n")
        for cell, summary in zip(cells, summaries):
            fh.write(",".join([
                format(cell.get("k", float("nan")), ".17g"),
                format(cell.get("b", float("nan")), ".17g"),
                str(cell.get("mode", "")),
                format(cell.get("sigma", 0.0), ".17g"),
                summary["outcome"],
                format(summary["com_rms"], ".17g"),
                format(summary["wrench_rate_rms"], ".17g"),
                format(summary["momentum_err_mean"], ".17g"),
                format(summary["fail_time"], ".17g"),
            ]) + "\n")
    if not args.quiet:
        n_fail = sum(1 for s in summaries if s["outcome"] != "success")
        print(f"sweep: {len(summaries)} cells, {n_fail} failures -> {out_dir / 'aggregate.csv'}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="softwalk",
                                     description="compliant-terrain biped simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario (file, builtin:<name>, or manifest.json)")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", default="out")
    sim.add_argument("--mode", choices=("compliant", "rigid"), default=None)
    sim.add_argument("--quiet", action="store_true")
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="offline RLS replay over a simulation log")
    est.add_argument("--log", required=True)
    est.add_argument("--config", default=None, help="optional estimator profile")
    est.add_argument("--foot", default=None)
    est.add_argument("--out", default="estimates.csv")
    est.add_argument("--quiet", action="store_true")
    est.set_defaults(func=cmd_estimate)

    cmp_ = sub.add_parser("compare", help="run the same scenario in several controller modes")
    cmp_.add_argument("--config", required=True)
    cmp_.add_argument("--modes", default="compliant,rigid")
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--out", default="compare_out")
    cmp_.add_argument("--quiet", action="store_true")
    cmp_.set_defaults(func=cmd_compare)

    swp = sub.add_parser("sweep", help="cartesian parameter sweep over k, b, mode, sigma")
    swp.add_argument("--config", required=True)
    swp.add_argument("--grid", required=True, help="e.g. 'k=8e5,2e6;b=1e3,1e4;mode=compliant,rigid'")
    swp.add_argument("--seed", type=int, default=None)
    swp.add_argument("--out", default="sweep_out")
    swp.add_argument("--jobs", type=int, default=1)
    swp.add_argument("--quiet", action="store_true")
    swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
