"""Command-line front end.

Exit codes: 0 success (``fly``: safe flight), 1 safety violation or failed
flight, 2 configuration / input / output error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

from . import __version__
from .config import Config, ConfigError, load_config
from .montecarlo import DEFAULT_POLICIES, default_jobs, monte_carlo
from .perception import DensityScene, penalised_objective
from .baselines import POLICIES
from .missions import GenerationFault
from .sweep import linear_fit_r2, solve_time_sweep

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
PROFILE_CHOICES = ("infinity", "corridor")


class _Parser(argparse.ArgumentParser):
    """argparse that exits with the config-error code instead of 2-by-accident."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--config", help="TOML configuration file (defaults when omitted)")
    p.add_argument("--seed", type=int, default=0, help="flight seed, or base seed for batches")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="safeperception", description="Safety-aware perception for a CBF-filtered quadrotor.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    fly = sub.add_parser("fly", help="run one flight")
    _common(fly)
    fly.add_argument("--policy", choices=sorted(POLICIES), default="safety_aware")
    fly.add_argument("--profile", choices=PROFILE_CHOICES, default="infinity")
    fly.add_argument("--out", help="write the flight record here")
    fly.add_argument("--format", choices=("csv", "jsonl"), default="jsonl")
    fly.add_argument("--timing", action="store_true", help="time every yaw search")
    fly.add_argument("--omniscient", action="store_true", help="detect every obstacle at every step")

    batch = sub.add_parser("batch", help="paired Monte-Carlo batch")
    _common(batch)
    batch.add_argument("--policy", choices=sorted(POLICIES), action="append",
                       help="repeatable; default all four arms")
    batch.add_argument("--profile", choices=PROFILE_CHOICES, action="append", help="repeatable; default both")
    batch.add_argument("--runs", type=int, default=100)
    batch.add_argument("--out", help="summary CSV path (stdout when omitted)")
    batch.add_argument("--jobs", type=int, default=None, help="worker processes (default: available cores)")
    batch.add_argument("--timing", action="store_true", help="fill the solve-time columns (not reproducible)")

    scene = sub.add_parser("scene", help="evaluate the yaw objective on a scene JSON")
    scene.add_argument("scene", help="scene JSON with a 'peaks' list of {r, theta, alpha, beta}")
    scene.add_argument("--config", help="TOML configuration file")
    scene.add_argument("--psi-prev", type=float, default=0.0, help="previous yaw, degrees")
    scene.add_argument("--increment", type=float, default=None, help="search increment, degrees")
    scene.add_argument("--out", help="CSV path (stdout when omitted)")

    sweep = sub.add_parser("sweep", help="optimal-yaw solve time versus search increment")
    sweep.add_argument("--config", help="TOML configuration file")
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--increment", type=float, nargs="+", default=[18.0, 9.0, 4.5, 2.25],
                       help="increments in degrees")
    sweep.add_argument("--scenes", type=int, default=50)
    sweep.add_argument("--peaks", type=int, default=10)
    sweep.add_argument("--out", help="CSV path (stdout when omitted)")
    return ap


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _meta(cfg: Config, seed, **extra) -> dict:
    return {"version": __version__, "seed": seed, "config": cfg.to_dict(),
            "barrier_radius": cfg.safety.barrier_radius(cfg.uav.uav_radius),
            "barrier_radius_rule": "R = safety_factor * (obstacle_radius_true + uav_radius)", **extra}


def _write_sidecar(path, meta: dict) -> None:
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n",
                                             encoding="utf-8")


def cmd_fly(args, cfg: Config) -> int:
    from .flight import run_flight

    try:
        rec = run_flight(cfg, args.profile, args.policy, args.seed, omniscient=args.omniscient, timing=args.timing)
    except GenerationFault as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                if args.format == "jsonl":
                    rec.write_jsonl(fh)
                else:
                    rec.write_csv(fh)
            if args.format == "csv":
                _write_sidecar(args.out, rec.meta)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_CONFIG
    verdict = "SAFE" if rec.safe else ("FAILED" if rec.failed else "VIOLATION")
    line = (f"{verdict} profile={args.profile} policy={args.policy} seed={args.seed} "
            f"collision_free={rec.collision_free} safe={rec.safe} min_B={rec.min_B:.6f} "
            f"min_clearance={rec.min_clearance:.6f} infeasible_steps={rec.infeasible_steps}")
    st = rec.solve_times()
    if st.size:
        line += f" mean_solve_us={st.mean():.1f} max_solve_us={st.max():.1f}"
    print(line)
    return EXIT_OK if rec.safe else EXIT_VIOLATION


def cmd_batch(args, cfg: Config) -> int:
    if args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    profiles = args.profile or list(PROFILE_CHOICES)
    policies = args.policy or list(DEFAULT_POLICIES)
    jobs = args.jobs or default_jobs()
    try:
        fh, close = _open_out(args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        res = monte_carlo(cfg, profiles, policies, args.runs, args.seed, jobs=jobs, timing=args.timing)
        text = res.summary_csv()
        fh.write(text)
    finally:
        if close:
            fh.close()
    if args.out:
        _write_sidecar(args.out, _meta(cfg, args.seed, runs=args.runs, profiles=profiles, policies=policies,
                                       skipped=[list(s) for s in res.skipped]))
        print(_table(res.summary_rows()))
    for profile, seed, reason in res.skipped:
        print(f"skipped {profile} seed {seed}: {reason}", file=sys.stderr)
    return EXIT_OK


def _table(rows) -> str:
    out = [f"{'profile':<10}{'policy':<14}{'n':>5}{'coll-free':>11}{'safe':>8}{'95% CI':>18}"]
    for r in rows:
        ci = f"[{r['ci_low']:.2f}, {r['ci_high']:.2f}]"
        out.append(f"{r['profile']:<10}{r['policy']:<14}{r['n']:>5}{r['collision_free_rate']:>11.2f}"
                   f"{r['safe_rate']:>8.2f}{ci:>18}")
    return "\n".join(out)


def cmd_scene(args, cfg: Config) -> int:
    try:
        text = Path(args.scene).read_text(encoding="utf-8")
        scene = DensityScene.from_json(text)
    except OSError as exc:
        print(f"error: cannot read {args.scene}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:  # json errors are ValueErrors too
        print(f"error: malformed scene: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.increment is not None:
        try:
            cfg = cfg.replace(perception={"search_increment_deg": args.increment})
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    sensor = cfg.sensor.model()
    yo = cfg.perception.yaw_opt()
    psi_prev = math.radians(args.psi_prev)
    psis, gamma, gbar = penalised_objective(scene, sensor, yo, psi_prev)
    from .perception import optimal_yaw

    psi_d = optimal_yaw(scene, sensor, yo, psi_prev)
    try:
        fh, close = _open_out(args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["psi_rad", "psi_deg", "gamma", "gamma_penalised", "is_optimal"])
        for p, g, gb in zip(psis, gamma, gbar):
            w.writerow([repr(float(p)), repr(math.degrees(p)), repr(float(g)), repr(float(gb)), int(p == psi_d)])
    finally:
        if close:
            fh.close()
    if args.out:
        print(f"psi_d_deg={math.degrees(psi_d):.6f}")
    return EXIT_OK


def cmd_sweep(args, cfg: Config) -> int:
    try:
        rows = solve_time_sweep(cfg, args.increment, n_scenes=args.scenes, n_peaks=args.peaks, seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        fh, close = _open_out(args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["increment_deg", "grid_points", "evaluations", "mean_solve_us"])
        for r in rows:
            w.writerow([r["increment_deg"], r["grid_points"], r["evaluations"], f"{r['mean_solve_us']:.3f}"])
    finally:
        if close:
            fh.close()
    if len(rows) >= 2:
        a, b, r2 = linear_fit_r2([r["grid_points"] for r in rows], [r["mean_solve_us"] for r in rows])
        print(f"fit: {a:.4f} us/point + {b:.2f} us, R^2 = {r2:.5f}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return {"fly": cmd_fly, "batch": cmd_batch, "scene": cmd_scene, "sweep": cmd_sweep}[args.verb](args, cfg)


if __name__ == "__main__":
    sys.exit(main())
