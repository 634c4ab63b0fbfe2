"""Synthetic correlated eigenproblem sequences and the reuse-vs-random driver.

A sequence imitates a self-consistent-field loop: the first matrix has a
controlled spectrum (a wanted band of the nev lowest eigenvalues, a spectral
gap, then the bulk), and each later cycle adds a Hermitian perturbation
whose scale decays geometrically. Consecutive solutions therefore correlate
more and more strongly, which is exactly the regime where feeding cycle l's
eigenvectors into cycle l+1 pays off.

solve_sequence drives the solver across the cycles in either mode; the work
ratio random/reuse per cycle is the desk-scale speedup proxy.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import SolverConfig, chfsi_solve, solve_generalized
from .errors import ContractViolation, NotConverged
from .linalg import HermitianDenseMatrix, _asarray

__all__ = [
    "SequenceSpec",
    "ProblemSequence",
    "SequenceReport",
    "generate_sequence",
    "solve_sequence",
    "vector_angles",
    "attach_work_ratios",
]


@dataclass(frozen=True)
class SequenceSpec:
    """Generator parameters.

    The spectrum of the first matrix: nev wanted eigenvalues uniform in
    [0, band_max], the remaining n - nev uniform in (band_max + gap,
    spread]. Cycle l+1 is A(l) + delta0 * rho**(l-1) * E(l) with E a random
    Hermitian of unit spectral-norm scale.

    kind "standard" leaves B = I (stored as None); "generalized" draws one
    SPD B = M^H M + n I, fixed across the sequence unless vary_b is set, in
    which case B follows the same decaying perturbation schedule.
    """

    n: int
    N: int
    nev: int
    delta0: float = 0.1
    rho: float = 0.5
    seed: int = 0
    kind: str = "standard"
    vary_b: bool = False
    band_max: float = 4.5
    gap: float = 1.2
    spread: float = 10.0

    def __post_init__(self):
        if self.N < 1:
            raise ContractViolation(f"N must be >= 1, got {self.N}")
        if not 0 < self.rho < 1:
            raise ContractViolation(f"rho must lie in (0, 1), got {self.rho}")
        if self.delta0 < 0:
            raise ContractViolation(f"delta0 must be >= 0, got {self.delta0}")
        if not 1 <= self.nev < self.n:
            raise ContractViolation(
                f"nev must satisfy 1 <= nev < n, got nev={self.nev}, n={self.n}"
            )
        if self.kind not in ("standard", "generalized"):
            raise ContractViolation(f"unknown problem kind {self.kind!r}")
        if not (self.band_max > 0 and self.gap > 0 and self.spread > self.band_max + self.gap):
            raise ContractViolation("spectrum requires 0 < band_max, 0 < gap, "
                                    "spread > band_max + gap")


@dataclass
class ProblemSequence:
    """Ordered (A, B) pairs, cycle index 1..N; B is None for standard kind."""

    spec: SequenceSpec
    problems: list

    def __len__(self):
        return len(self.problems)


@dataclass
class SequenceReport:
    """Per-cycle solver reports, solution angles, and work statistics.

    angles[l-1] holds the column angles between the solutions of cycles
    l-1 and l (None for l = 1). work_ratios is populated by
    attach_work_ratios once both modes have run: ratio = random work /
    reuse work, None for cycle 1 where the modes coincide.
    """

    mode: str
    reports: list = field(default_factory=list)
    eigenvalues: list = field(default_factory=list)
    vectors: list = field(default_factory=list)
    angles: list = field(default_factory=list)
    work: list = field(default_factory=list)
    work_ratios: list | None = None

    def median_angles(self):
        return [float(np.median(a)) if a is not None else None for a in self.angles]


def _random_hermitian(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    e = (g + g.conj().T) / 2.0
    # Wigner scaling: unit off-diagonal variance puts the spectral radius
    # at ~2 sqrt(n); dividing normalizes E to unit spectral-norm scale
    return e / (2.0 * math.sqrt(n))


def generate_sequence(spec):
    """Generate the N correlated problems of a SequenceSpec."""
    rng = np.random.default_rng(spec.seed)
    n, nev = spec.n, spec.nev
    lo = np.sort(rng.uniform(0.0, spec.band_max, nev))
    hi = np.sort(rng.uniform(spec.band_max + spec.gap, spec.spread, n - nev))
    evals = np.concatenate([lo, hi])
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    qu, _ = np.linalg.qr(g)
    a = (qu * evals) @ qu.conj().T

    b = None
    if spec.kind == "generalized":
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        b = m.conj().T @ m + n * np.eye(n)

    problems = []
    a_mat = HermitianDenseMatrix(a, rtol=1e-10)
    b_mat = HermitianDenseMatrix(b, rtol=1e-10) if b is not None else None
    problems.append((a_mat, b_mat))
    for ell in range(1, spec.N):
        scale = spec.delta0 * spec.rho ** (ell - 1)
        a = a_mat.entries + scale * _random_hermitian(rng, n)
        a_mat = HermitianDenseMatrix(a, rtol=1e-10)
        if b is not None and spec.vary_b:
            b = b_mat.entries + scale * _random_hermitian(rng, n)
            b_mat = HermitianDenseMatrix(b, rtol=1e-10)
        problems.append((a_mat, b_mat))
    return ProblemSequence(spec=spec, problems=problems)


def vector_angles(Y_prev, Y_curr):
    """Principal angle per column pair, phase-invariant, in radians."""
    yp = _asarray(Y_prev)
    yc = _asarray(Y_curr)
    if yp.shape != yc.shape:
        raise ContractViolation(f"shape mismatch: {yp.shape} vs {yc.shape}")
    cos = np.abs(np.sum(yp.conj() * yc, axis=0))
    return np.arccos(np.minimum(1.0, cos))


def _unit_columns(v):
    arr = _asarray(v)
    return arr / np.linalg.norm(arr, axis=0)


def solve_sequence(seq, config, mode):
    """Solve every cycle of a ProblemSequence in the given mode.

    mode "reuse": cycle l+1 starts from cycle l's eigenvectors (padded with
    fresh random buffer columns, mapped through the new Cholesky factor for
    generalized problems) and inherits the (lambda_1, lambda_nev+1)
    estimates; the running lambda_nev+1 estimate takes the minimum across
    cycles, which only tightens it (Ritz values bound the true eigenvalue
    from above). mode "random": every cycle starts fresh.

    A NotConverged on any cycle aborts the run and re-raises with partial
    per-cycle results attached to the exception's report attribute.
    """
    if mode not in ("reuse", "random"):
        raise ContractViolation(f"mode must be 'reuse' or 'random', got {mode!r}")
    if not isinstance(config, SolverConfig):
        raise ContractViolation("config must be a SolverConfig")
    spec = seq.spec
    s_tot = config.nev + config.buffer_cols
    out = SequenceReport(mode=mode)
    prev_vecs = None
    prior = None
    running_next = None
    for ell, (a_mat, b_mat) in enumerate(seq.problems, start=1):
        solver_seed = np.random.default_rng([spec.seed, 11, ell])
        y0 = None
        use_prior = None
        if mode == "reuse" and prev_vecs is not None:
            pad_rng = np.random.default_rng([spec.seed, 13, ell])
            n = a_mat.n
            pad = pad_rng.standard_normal((n, s_tot - prev_vecs.shape[1])) + \
                1j * pad_rng.standard_normal((n, s_tot - prev_vecs.shape[1]))
            y0 = np.hstack([prev_vecs, pad])
            use_prior = prior
        try:
            if b_mat is None:
                lam, vecs, rep = chfsi_solve(
                    a_mat, y0, config, prior=use_prior, seed=solver_seed
                )
            else:
                lam, vecs, rep = solve_generalized(
                    a_mat, b_mat, y0, config, prior=use_prior, seed=solver_seed
                )
        except NotConverged as exc:
            exc.report = out
            raise
        if out.vectors:
            out.angles.append(
                vector_angles(_unit_columns(out.vectors[-1]), _unit_columns(vecs))
            )
        else:
            out.angles.append(None)
        out.reports.append(rep)
        out.eigenvalues.append(lam)
        out.vectors.append(vecs)
        out.work.append(rep.total_matmuls)
        if mode == "reuse":
            prev_vecs = np.array(vecs.entries)
            if running_next is None:
                running_next = rep.est_lam_next
            else:
                running_next = min(running_next, rep.est_lam_next)
            prior = (rep.est_lam1, running_next)
    return out


def attach_work_ratios(random_report, reuse_report):
    """Compute per-cycle work ratios (random/reuse) onto the reuse report.

    Cycle 1 has no reuse advantage by construction (identical start
    semantics are impossible); its ratio is None.
    """
    if len(random_report.work) != len(reuse_report.work):
        raise ContractViolation("reports cover different cycle counts")
    ratios = [None]
    for wr, wu in zip(random_report.work[1:], reuse_report.work[1:]):
        ratios.append(wr / wu)
    reuse_report.work_ratios = ratios
    return ratios
