"""Exhaustive-search preconditioner selection by timed solves."""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .krylov import GmresConfig, gmres_solve
from .precond import PreconditionerConfig, make_preconditioner


@dataclass
class TuneProblem:
    """Operator, right-hand side and solver settings shared by every candidate."""
    op: object
    b: np.ndarray
    gmres: GmresConfig
    seed: int = 0


@dataclass
class TuneRecord:
    config: PreconditionerConfig
    setup_time: float
    solve_time: float  # median over trials
    iterations: int
    converged: bool
    rel_res: float
    trial_times: tuple[float, ...] = ()


CLOCK_RESOLUTION = time.get_clock_info("perf_counter").resolution


def select(records: list[TuneRecord], resolution: float = CLOCK_RESOLUTION) -> int:
    """Index of the fastest converged record.

    Times within ``resolution`` of each other tie, and the earliest wins.
    """
    best = None
    for i, rec in enumerate(records):
        if not rec.converged or not np.isfinite(rec.solve_time):
            continue
        if best is None or rec.solve_time < records[best].solve_time - resolution:
            best = i
    if best is None:
        raise RuntimeError("auto-tuner: no candidate converged")
    return best


def autotune(problem: TuneProblem, space: list[PreconditionerConfig], trials: int = 3,
             timer: Callable[[], float] = time.perf_counter,
             log: Callable[[str], None] | None = None) -> tuple[PreconditionerConfig, list[TuneRecord]]:
    """Set up and time every candidate on the same problem, return the argmin.

    Each candidate is set up once and solved ``trials`` times from a zero
    guess; the median solve time is compared. Candidates that fail to set up
    or to converge are recorded but never chosen.
    """
    if not space:
        raise ValueError("auto-tuner: empty candidate space")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    records = []
    for cfg in space:
        t0 = timer()
        try:
            M, _ = make_preconditioner(problem.op, cfg, seed=problem.seed)
        except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
            if log:
                log(f"{cfg.label}: setup failed ({exc})")
            records.append(TuneRecord(cfg, timer() - t0, float("inf"), 0, False, float("nan")))
            continue
        setup = timer() - t0
        times = []
        stats = None
        for _ in range(trials):
            t1 = timer()
            _, stats = gmres_solve(problem.op.apply, M, problem.b, None, problem.gmres)
            times.append(timer() - t1)
        rec = TuneRecord(cfg, setup, statistics.median(times), stats.iterations, stats.converged,
                         stats.rel_res, tuple(times))
        records.append(rec)
        if log:
            log(f"{cfg.label}: {rec.iterations} iters, median solve {rec.solve_time:.3f}s")
    return records[select(records)].config, records
