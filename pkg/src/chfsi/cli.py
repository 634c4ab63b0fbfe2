"""Command-line entry points.

Subcommands: solve (one problem from matrix files), sequence (generate and
drive a correlated sequence in reuse/random/both modes), bench-phases and
bench-scaling (the performance harness). Exit codes: 0 success, 2 solver
did not converge, 1 bad input of any kind.

The CLI is a thin orchestrator: it parses flags, sets the kernel worker
count, calls the library and formats CSV/stdout output.
"""

import argparse
import sys

import numpy as np

from . import bench as bench_mod
from . import linalg
from .core import SolverConfig, chfsi_solve, solve_generalized
from .errors import ChfsiError, NotConverged
from .io import (
    DEFAULTS,
    config_hash,
    normalize_phase,
    read_matrix,
    read_run_config,
    write_matrix,
)
from .linalg import VectorBlock
from .sequence import attach_work_ratios, generate_sequence, solve_sequence

REPORT_HEADER = [
    "iter", "filtered_cols", "converged", "max_resid", "matmul_count",
    "t_filter", "t_qr", "t_rr", "t_resid",
]
SEQUENCE_HEADER = [
    "cycle", "work_random", "work_reuse", "work_ratio", "median_angle",
]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract wants 1 for
    # every input problem, so error() raises instead
    def error(self, message):
        raise _UsageError(message)


def _build_parser():
    p = _Parser(prog="chfsi", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve one (generalized) eigenproblem")
    ps.add_argument("--matrix-a", required=True, help="A matrix file")
    ps.add_argument("--matrix-b", help="B matrix file (generalized problem)")
    ps.add_argument("--nev", type=int, required=True, help="wanted pairs")
    ps.add_argument("--tol", type=float, default=DEFAULTS["tol"])
    ps.add_argument("--degree", type=int, default=DEFAULTS["degree"])
    ps.add_argument("--max-outer", type=int, default=DEFAULTS["max_outer_iters"])
    ps.add_argument("--workers", type=int, default=None,
                    help="kernel worker count (default: CHFSI_WORKERS or 1)")
    ps.add_argument("--start-vectors", help="VectorBlock file to start from")
    ps.add_argument("--report-csv", help="per-iteration report CSV path")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out-prefix", default=DEFAULTS["out_prefix"],
                    help="prefix for eigenvalue/eigenvector output files")

    pq = sub.add_parser("sequence", help="run a correlated problem sequence")
    pq.add_argument("--config", required=True, help="RunConfig file")
    pq.add_argument("--mode", choices=["reuse", "random", "both"],
                    help="override the config's mode")

    pb = sub.add_parser("bench-phases", help="phase time breakdown CSV")
    pb.add_argument("--config", required=True)
    pb.add_argument("--out", help="CSV path (default <out_prefix>.phases.csv)")

    pw = sub.add_parser("bench-scaling", help="worker scaling CSV")
    pw.add_argument("--config", required=True)
    pw.add_argument("--workers", default="1,2",
                    help="comma-separated worker counts")
    pw.add_argument("--repeats", type=int, default=None)
    pw.add_argument("--out", help="CSV path (default <out_prefix>.scaling.csv)")
    return p


def _report_csv_text(report):
    lines = [",".join(REPORT_HEADER)]
    for it in report.iterations:
        lines.append(",".join([
            str(it.iteration),
            str(it.filtered_cols),
            str(it.converged),
            f"{it.max_resid:.6e}",
            str(it.matmuls),
            f"{it.t_filter:.6f}",
            f"{it.t_qr:.6f}",
            f"{it.t_rr:.6f}",
            f"{it.t_resid:.6f}",
        ]))
    return "\n".join(lines) + "\n"


def _write_report_csv(path, report):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_report_csv_text(report))


def cli_solve(args):
    a_mat = read_matrix(args.matrix_a)
    b_mat = read_matrix(args.matrix_b) if args.matrix_b else None
    config = SolverConfig(
        nev=args.nev,
        tol=args.tol,
        max_outer_iters=args.max_outer,
        degree=args.degree,
    )
    if args.workers is not None:
        linalg.set_workers(args.workers)

    y0 = None
    if args.start_vectors:
        block = read_matrix(args.start_vectors)
        arr = np.array(block.entries if isinstance(block, VectorBlock)
                       else block.entries)
        s_tot = config.nev + config.buffer_cols
        if arr.shape[1] < s_tot:
            rng = np.random.default_rng([args.seed, 13])
            pad = rng.standard_normal((arr.shape[0], s_tot - arr.shape[1])) + \
                1j * rng.standard_normal((arr.shape[0], s_tot - arr.shape[1]))
            arr = np.hstack([arr, pad])
        y0 = arr

    report_csv = args.report_csv or f"{args.out_prefix}.report.csv"
    try:
        if b_mat is None:
            lam, vecs, report = chfsi_solve(a_mat, y0, config, seed=args.seed)
        else:
            lam, vecs, report = solve_generalized(
                a_mat, b_mat, y0, config, seed=args.seed
            )
    except NotConverged as exc:
        _write_report_csv(report_csv, exc.report)
        print(f"chfsi solve: {exc}", file=sys.stderr)
        return 2

    with open(f"{args.out_prefix}.eigenvalues.txt", "w", encoding="utf-8") as fh:
        for v in lam:
            fh.write(f"{v:.16e}\n")
    write_matrix(
        f"{args.out_prefix}.eigenvectors.mat",
        VectorBlock(normalize_phase(vecs)),
        kind="block",
    )
    _write_report_csv(report_csv, report)
    print(
        f"converged {config.nev} pairs in {report.outer_iterations} iterations, "
        f"{report.total_matmuls} block products"
    )
    return 0


def _fmt_opt(x, fmt):
    return format(x, fmt) if x is not None else ""


def cli_sequence(args):
    cfg = read_run_config(args.config)
    mode = args.mode or cfg.mode
    linalg.set_workers(cfg.workers)
    seq = generate_sequence(cfg.sequence_spec())
    solver = cfg.solver_config()

    rand_rep = reuse_rep = None
    if mode in ("random", "both"):
        rand_rep = solve_sequence(seq, solver, "random")
    if mode in ("reuse", "both"):
        reuse_rep = solve_sequence(seq, solver, "reuse")
    ratios = [None] * len(seq)
    if rand_rep is not None and reuse_rep is not None:
        ratios = attach_work_ratios(rand_rep, reuse_rep)

    angle_rep = reuse_rep if reuse_rep is not None else rand_rep
    med_angles = angle_rep.median_angles()

    lines = [",".join(SEQUENCE_HEADER)]
    print(f"# {cfg.kind} sequence n={cfg.n} N={cfg.N} nev={cfg.nev} "
          f"mode={mode} config={config_hash(cfg)}")
    print("cycle  work_random  work_reuse  ratio   median_angle")
    for i in range(len(seq)):
        wr = rand_rep.work[i] if rand_rep is not None else None
        wu = reuse_rep.work[i] if reuse_rep is not None else None
        row = [
            str(i + 1),
            str(wr) if wr is not None else "",
            str(wu) if wu is not None else "",
            _fmt_opt(ratios[i], ".4f"),
            _fmt_opt(med_angles[i], ".6e"),
        ]
        lines.append(",".join(row))
        print(f"{i + 1:5d}  {row[1]:>11s}  {row[2]:>10s}  {row[3]:>6s}  {row[4]}")
    with open(cfg.out_csv, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    good = [r for r in ratios if r is not None]
    if good:
        print(f"# ratio: min {min(good):.3f}, max {max(good):.3f} "
              f"(cycles 2..{len(seq)})")
    print(f"# wrote {cfg.out_csv}")
    return 0


def cli_bench_phases(args):
    cfg = read_run_config(args.config)
    linalg.set_workers(cfg.workers)
    rows, text = bench_mod.bench_phases(cfg)
    out = args.out or f"{cfg.out_prefix}.phases.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    for phase, secs, frac, _ in rows:
        print(f"{phase:>13s}  {secs:>10s}s  {float(frac) * 100:6.2f}%")
    print(f"# wrote {out}")
    return 0


def cli_bench_scaling(args):
    cfg = read_run_config(args.config)
    try:
        workers = [int(w) for w in args.workers.split(",") if w.strip()]
    except ValueError:
        raise _UsageError(f"bad --workers list {args.workers!r}") from None
    rows, text = bench_mod.bench_scaling(cfg, workers, repeats=args.repeats)
    out = args.out or f"{cfg.out_prefix}.scaling.csv"
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(text)
    print("workers  median_s  speedup  max_eig_dev")
    for w, med, sp, dev, _ in rows:
        print(f"{w:7d}  {med:>8s}  {sp:>7s}  {dev}")
    print(f"# wrote {out}")
    return 0


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"chfsi: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return exc.code if isinstance(exc.code, int) else 0

    handlers = {
        "solve": cli_solve,
        "sequence": cli_sequence,
        "bench-phases": cli_bench_phases,
        "bench-scaling": cli_bench_scaling,
    }
    try:
        return handlers[args.command](args)
    except _UsageError as exc:
        print(f"chfsi: error: {exc}", file=sys.stderr)
        return 1
    except NotConverged as exc:
        print(f"chfsi: not converged: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"chfsi: error: {exc}", file=sys.stderr)
        return 1
    except ChfsiError as exc:
        print(f"chfsi: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
