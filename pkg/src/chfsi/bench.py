"""Desk-scale performance harness.

Two benchmarks, both emitting CSV tagged with the config hash:

bench_phases - where does the time go within one solve (filter, QR,
Rayleigh-Ritz, residuals, other). Fractions are normalized over the total
wall time, with "other" the unassigned remainder, so they sum to 1 exactly
up to rounding.

bench_scaling - wall time of the same solve at several kernel worker
counts, median of `repeats` runs each, with the numerical-invariance check
(eigenvalues must agree across counts) recorded in the output.

Benchmarks run serially; nothing here shares timers across runs.
"""

import statistics
import time

import numpy as np

from . import linalg
from .core import chfsi_solve, solve_generalized
from .errors import ContractViolation
from .io import config_hash
from .sequence import generate_sequence

__all__ = ["bench_phases", "bench_scaling", "rows_to_csv"]

PHASES_HEADER = ["phase", "seconds", "fraction", "config_hash"]
SCALING_HEADER = ["workers", "median_seconds", "speedup", "max_eig_dev", "config_hash"]


def rows_to_csv(header, rows):
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(str(x) for x in row))
    return "\n".join(out) + "\n"


def _bench_problem(cfg):
    """One problem from the generator preset in cfg (first cycle only)."""
    spec = cfg.sequence_spec()
    one = type(spec)(**{**{f: getattr(spec, f) for f in spec.__dataclass_fields__},
                        "N": 1})
    seq = generate_sequence(one)
    return seq.problems[0]


def _solve_once(cfg, a_mat, b_mat, seed):
    solver = cfg.solver_config()
    if b_mat is None:
        return chfsi_solve(a_mat, None, solver, seed=seed)
    return solve_generalized(a_mat, b_mat, None, solver, seed=seed)


def bench_phases(cfg):
    """Phase-time breakdown of one solve; returns (rows, csv_text).

    Rows: one per phase with seconds and fraction-of-total. "other" covers
    everything not inside a named phase (Lanczos bound, locking
    bookkeeping, allocation).
    """
    a_mat, b_mat = _bench_problem(cfg)
    _solve_once(cfg, a_mat, b_mat, seed=cfg.seed)  # untimed warm-up
    t0 = time.perf_counter()
    _, _, report = _solve_once(cfg, a_mat, b_mat, seed=cfg.seed)
    total = time.perf_counter() - t0
    named = {
        "filter": report.t_filter,
        "qr": report.t_qr,
        "rayleigh_ritz": report.t_rr,
        "residuals": report.t_resid,
    }
    other = max(0.0, total - sum(named.values()))
    named["other"] = other
    h = config_hash(cfg)
    rows = [
        (phase, f"{secs:.6f}", f"{secs / total:.6f}", h)
        for phase, secs in named.items()
    ]
    return rows, rows_to_csv(PHASES_HEADER, rows)


def bench_scaling(cfg, workers_list, repeats=None):
    """Wall time vs kernel worker count; returns (rows, csv_text).

    Each worker count runs `repeats` times (config default when None) and
    reports the median. max_eig_dev is the largest absolute eigenvalue
    deviation from the first worker count's results - the numerical
    invariance this benchmark also guards.
    """
    workers_list = [int(w) for w in workers_list]
    if not workers_list or any(w < 1 for w in workers_list):
        raise ContractViolation("worker list must contain integers >= 1")
    repeats = cfg.repeats if repeats is None else int(repeats)
    if repeats < 1:
        raise ContractViolation("repeats must be >= 1")
    a_mat, b_mat = _bench_problem(cfg)
    saved = linalg.get_workers()
    h = config_hash(cfg)
    rows = []
    base_lam = None
    base_time = None
    try:
        # untimed warm-up so the first timed row does not absorb one-off
        # costs (kernel compilation cache load, allocator growth)
        linalg.set_workers(workers_list[0])
        _solve_once(cfg, a_mat, b_mat, seed=cfg.seed)
        for w in workers_list:
            linalg.set_workers(w)
            times = []
            lam = None
            for _ in range(repeats):
                t0 = time.perf_counter()
                lam, _, _ = _solve_once(cfg, a_mat, b_mat, seed=cfg.seed)
                times.append(time.perf_counter() - t0)
            med = statistics.median(times)
            if base_lam is None:
                base_lam = lam
                base_time = med
            dev = float(np.max(np.abs(lam - base_lam)))
            rows.append(
                (w, f"{med:.6f}", f"{base_time / med:.4f}", f"{dev:.3e}", h)
            )
    finally:
        linalg.set_workers(saved)
    return rows, rows_to_csv(SCALING_HEADER, rows)
