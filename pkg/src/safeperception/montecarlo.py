"""Paired-seed Monte-Carlo batches and their summary table."""

from __future__ import annotations

import csv
import io
import math
import multiprocessing as mp
import os
from dataclasses import dataclass

import numpy as np

from .config import Config
from .flight import run_flight
from .missions import GenerationFault, generate_obstacles, profile_of
from .mathcore import Rng

SUMMARY_COLUMNS = ["policy", "profile", "n", "collision_free_rate", "safe_rate", "ci_low", "ci_high",
                   "mean_solve_us", "max_solve_us"]
DEFAULT_POLICIES = ("fixed", "look_ahead", "nearest", "safety_aware")


@dataclass(frozen=True)
class Outcome:
    """Verdicts and summary numbers of one flight (the record itself is dropped)."""

    profile: str
    policy: str
    seed: int
    collision_free: bool
    safe: bool
    failed: bool
    min_B: float
    min_clearance: float
    infeasible_steps: int
    steps: int
    n_solves: int
    sum_solve_us: float
    max_solve_us: float


@dataclass(frozen=True)
class BatchResult:
    outcomes: list
    skipped: list  # (profile, seed, reason)
    timing: bool

    def select(self, profile=None, policy=None) -> list:
        return [o for o in self.outcomes
                if (profile is None or o.profile == profile) and (policy is None or o.policy == policy)]

    def rate(self, profile: str, policy: str, what: str = "collision_free") -> float:
        sel = self.select(profile, policy)
        return sum(getattr(o, what) for o in sel) / len(sel) if sel else math.nan

    def summary_rows(self) -> list:
        rows = []
        keys = []
        for o in self.outcomes:
            if (o.profile, o.policy) not in keys:
                keys.append((o.profile, o.policy))
        for profile, policy in keys:
            sel = self.select(profile, policy)
            n = len(sel)
            cf = sum(o.collision_free for o in sel)
            sf = sum(o.safe for o in sel)
            lo, hi = wilson_interval(cf, n)
            row = {"policy": policy, "profile": profile, "n": n, "collision_free_rate": cf / n,
                   "safe_rate": sf / n, "ci_low": lo, "ci_high": hi, "mean_solve_us": None, "max_solve_us": None}
            if self.timing:
                count = sum(o.n_solves for o in sel)
                if count:
                    row["mean_solve_us"] = sum(o.sum_solve_us for o in sel) / count
                    row["max_solve_us"] = max(o.max_solve_us for o in sel)
            rows.append(row)
        return rows

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in self.summary_rows():
            w.writerow([_cell(row[c]) for c in SUMMARY_COLUMNS])
        return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if n <= 0:
        return 0.0, 1.0
    p = successes / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == n else min(1.0, centre + half)
    return lo, hi


def _flight_job(args) -> Outcome:
    cfg, profile, policy, seed, obstacles, omniscient, timing = args
    rec = run_flight(cfg, profile, policy, seed, omniscient=omniscient, timing=timing, obstacles=obstacles)
    st = rec.solve_times()
    return Outcome(profile, policy, seed, rec.collision_free, rec.safe, rec.failed, rec.min_B, rec.min_clearance,
                   rec.infeasible_steps, len(rec.t), int(st.size), float(st.sum()),
                   float(st.max()) if st.size else 0.0)


def default_jobs() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def monte_carlo(cfg: Config, profiles, policies=DEFAULT_POLICIES, n_runs: int = 100, base_seed: int = 0,
                jobs: int = 1, timing: bool = False, omniscient: bool = False) -> BatchResult:
    """Fly every policy on the same seeds ``base_seed .. base_seed + n_runs - 1``.

    Obstacles are drawn once per (profile, seed) and shared by all policies.
    Seeds whose world cannot be generated are skipped for every policy and
    reported.  Results come back in a fixed order whatever ``jobs`` is.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if isinstance(profiles, str):
        profiles = [profiles]
    tasks, skipped = [], []
    for profile in profiles:
        prof = profile_of(cfg, profile)
        for seed in range(base_seed, base_seed + n_runs):
            try:
                obstacles = generate_obstacles(prof, cfg.safety, cfg.uav.uav_radius, Rng(seed), cfg.obstacles)
            except GenerationFault as exc:
                skipped.append((profile, seed, str(exc)))
                continue
            for policy in policies:
                tasks.append((cfg, profile, policy, seed, obstacles, omniscient, timing))
    # heaviest arm first keeps workers busy; order is restored below
    if jobs > 1 and len(tasks) > 1:
        order = sorted(range(len(tasks)), key=lambda i: tasks[i][2] != "safety_aware")
        with mp.get_context("fork").Pool(jobs) as pool:
            done = pool.map(_flight_job, [tasks[i] for i in order], chunksize=1)
        outcomes = [None] * len(tasks)
        for i, o in zip(order, done):
            outcomes[i] = o
    else:
        outcomes = [_flight_job(t) for t in tasks]
    # policy-major order for the summary table
    outcomes.sort(key=lambda o: (list(profiles).index(o.profile), list(policies).index(o.policy), o.seed))
    return BatchResult(outcomes, skipped, timing)


def solve_time_stats(outcomes) -> tuple[float, float]:
    count = sum(o.n_solves for o in outcomes)
    if not count:
        return math.nan, math.nan
    return sum(o.sum_solve_us for o in outcomes) / count, float(np.max([o.max_solve_us for o in outcomes]))
