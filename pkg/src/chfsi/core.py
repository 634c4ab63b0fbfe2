"""Chebyshev filtered subspace iteration with deflation and locking.

The solver finds the nev lowest eigenpairs of a dense Hermitian matrix by
repeatedly (i) filtering the unconverged block with a scaled Chebyshev
polynomial that damps the unwanted interval [a, b], (ii) re-orthonormalizing
against locked columns, (iii) Rayleigh-Ritz projection, and (iv) locking
converged pairs in ascending order. Generalized problems A c = lambda B c
are reduced to standard form through the Cholesky factor of B.

The spectral interval data comes from Ritz estimates: b from a one-time
Lanczos upper bound with an additive residual safeguard, a and lambda_ref
from prior estimates (previous problem in a sequence) or from a bootstrap
Rayleigh-Ritz pass on the start block.
"""

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ContractViolation,
    FilterDegenerate,
    NotConverged,
    RankDeficient,
)
from .linalg import (
    HermitianDenseMatrix,
    VectorBlock,
    _asarray,
    _jacobi_raw,
    cholesky_factor,
    gemm,
    trmm_adjoint,
    triangular_solve,
)

__all__ = [
    "FilterSpec",
    "SolverConfig",
    "SolveReport",
    "IterationStat",
    "reduce_to_standard",
    "back_transform",
    "lanczos_upper_bound",
    "chebyshev_filter",
    "rayleigh_ritz",
    "residuals",
    "chfsi_solve",
    "solve_generalized",
]


# ----------------------------------------------------------------------
# configuration and reporting types


@dataclass(frozen=True)
class FilterSpec:
    """Chebyshev filter parameters.

    degree: polynomial degree m (each application costs m matrix products).
    a, b: unwanted interval; eigenvalues inside are damped below 1.
    lam_ref: lambda_1 estimate; the filter is normalized so p(lam_ref) = 1.
    """

    degree: int
    a: float
    b: float
    lam_ref: float

    def __post_init__(self):
        if self.degree < 1:
            raise ContractViolation(f"filter degree must be >= 1, got {self.degree}")
        if not self.a < self.b:
            raise ContractViolation(
                f"filter interval requires a < b, got a={self.a}, b={self.b}"
            )


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs; defaults match the intended operating point.

    buffer counts extra search directions beyond nev; their Ritz values
    furnish the running lambda_{nev+1} estimate. None means ceil(0.1 * nev).
    """

    nev: int
    tol: float = 1e-10
    max_outer_iters: int = 30
    degree: int = 20
    lanczos_steps: int = 10
    buffer: int | None = None

    def __post_init__(self):
        if self.nev < 1:
            raise ContractViolation(f"nev must be >= 1, got {self.nev}")
        if not self.tol > 0:
            raise ContractViolation(f"tol must be > 0, got {self.tol}")
        if self.max_outer_iters < 1:
            raise ContractViolation("max_outer_iters must be >= 1")
        if self.degree < 1:
            raise ContractViolation("degree must be >= 1")
        if self.lanczos_steps < 2:
            raise ContractViolation("lanczos_steps must be >= 2")
        if self.buffer is not None and self.buffer < 1:
            raise ContractViolation("buffer must be >= 1 when given")

    @property
    def buffer_cols(self):
        if self.buffer is not None:
            return self.buffer
        return max(1, math.ceil(0.1 * self.nev))


@dataclass
class IterationStat:
    """Per-outer-iteration statistics."""

    iteration: int
    filtered_cols: int
    converged: int
    max_resid: float
    min_resid: float
    matmuls: int
    t_filter: float
    t_qr: float
    t_rr: float
    t_resid: float


@dataclass
class SolveReport:
    """Solve statistics: per-iteration rows plus totals.

    total_matmuls counts n x n x s block products (s columns = s units),
    including the Lanczos bound and the bootstrap Rayleigh-Ritz pass; it
    must agree with the instrumented kernel tally.
    """

    n: int = 0
    nev: int = 0
    iterations: list = field(default_factory=list)
    setup_matmuls: int = 0
    total_matmuls: int = 0
    upper_bound: float = 0.0
    est_lam1: float = 0.0
    est_lam_next: float = 0.0
    t_lanczos: float = 0.0
    t_filter: float = 0.0
    t_qr: float = 0.0
    t_rr: float = 0.0
    t_resid: float = 0.0
    t_total: float = 0.0
    converged: bool = False

    @property
    def outer_iterations(self):
        return len(self.iterations)

    @property
    def converged_counts(self):
        return [it.converged for it in self.iterations]


# ----------------------------------------------------------------------
# reduction to standard form


def reduce_to_standard(A, L):
    """H = L^-1 A L^-H, re-symmetrized.

    The standard-form matrix shares its spectrum with the generalized
    problem (A, L L^H).
    """
    a = _asarray(A)
    lmat = _asarray(L)
    if a.shape[0] != lmat.shape[0]:
        raise ContractViolation(
            f"order mismatch: A is {a.shape}, L is {lmat.shape}"
        )
    w = triangular_solve(lmat, a, side="left")
    h = triangular_solve(lmat, w, side="right", adjoint=True)
    # computed entries carry O(cond(L)) rounding; symmetrization restores
    # the contract exactly
    return HermitianDenseMatrix(h, rtol=1e-8)


def back_transform(Y, L):
    """Map standard-form eigenvectors to generalized ones: C = L^-H Y."""
    y = _asarray(Y)
    c = triangular_solve(L, y, side="left", adjoint=True)
    return VectorBlock(c)


# ----------------------------------------------------------------------
# spectral bound


def lanczos_upper_bound(H, k, seed=0):
    """Upper bound for lambda_max(H) from k Lanczos steps.

    Returns lambda_max(T_k) + ||last residual||; the additive safeguard
    makes the bound hold with overwhelming probability for a random start.
    On breakdown (beta < 1e-14, an exact invariant subspace) the bound comes
    from the Krylov space built so far.

    seed may be an int or a numpy Generator.
    """
    h = _asarray(H)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {h.shape}")
    n = h.shape[0]
    k = int(k)
    if k < 2:
        raise ContractViolation(f"lanczos steps must be >= 2, got {k}")
    if k > n:
        k = n
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    basis = np.zeros((n, k), dtype=np.complex128, order="F")
    basis[:, 0] = v
    alphas = []
    betas = []
    for j in range(k):
        w = gemm(1.0, h, basis[:, j])
        aj = np.vdot(basis[:, j], w).real
        alphas.append(aj)
        w -= aj * basis[:, j]
        if j > 0:
            w -= betas[-1] * basis[:, j - 1]
        # full reorthogonalization; k is small and the bound must not
        # suffer from ghost eigenvalues
        w -= basis[:, : j + 1] @ (basis[:, : j + 1].conj().T @ w)
        bj = np.linalg.norm(w)
        betas.append(bj)
        if bj < 1e-14 or j == k - 1:
            break
        basis[:, j + 1] = w / bj
    j = len(alphas)
    t = np.zeros((j, j), dtype=np.complex128)
    for i in range(j):
        t[i, i] = alphas[i]
        if i + 1 < j:
            t[i, i + 1] = betas[i]
            t[i + 1, i] = betas[i]
    lam, _ = _jacobi_raw(t)
    # when the Krylov space is (near) invariant the residual safeguard
    # vanishes and the computed lam[-1] can round a few ulps below the true
    # maximum; pad by the eigensolve's own rounding envelope so the result
    # stays an upper bound in floating point
    guard = 4.0 * j * np.finfo(np.float64).eps * max(abs(lam[0]), abs(lam[-1]))
    return float(lam[-1] + betas[j - 1] + guard)


# ----------------------------------------------------------------------
# Chebyshev filter


def _filter_raw(h, y, degree, a, b, lam_ref):
    """Scaled Chebyshev filter applied to a raw block; exactly `degree`
    applications of h.

    Evaluates p_m(h) y with p_m(t) = C_m((t-c)/e) / C_m((lam_ref-c)/e)
    through the sigma recurrence, dividing each iterate by the running
    scalar so nothing overflows for large m.
    """
    c = (a + b) / 2.0
    e = (b - a) / 2.0
    sigma1 = e / (lam_ref - c)
    sigma = sigma1
    y0 = y
    y1 = gemm(sigma1 / e, h, y, beta=-c * sigma1 / e, c=y)
    for _ in range(degree - 1):
        sigma_new = 1.0 / (2.0 / sigma1 - sigma)
        scale = 2.0 * sigma_new / e
        y2 = gemm(scale, h, y1, beta=-c * scale, c=y1)
        y2 -= (sigma * sigma_new) * y0
        y0, y1 = y1, y2
        sigma = sigma_new
    return y1


def chebyshev_filter(H, Y, spec):
    """Apply the scaled degree-m Chebyshev filter p_m(H) to the block Y.

    p_m is the affine pullback of the Chebyshev polynomial C_m mapping the
    unwanted interval [spec.a, spec.b] onto [-1, 1], normalized so that
    p_m(lam_ref) = 1. Eigencomponents inside [a, b] are damped below
    1/|C_m((lam_ref-c)/e)| while components at lam_ref and below are
    amplified.
    """
    if not isinstance(spec, FilterSpec):
        raise ContractViolation("spec must be a FilterSpec")
    if spec.lam_ref >= spec.a:
        raise FilterDegenerate(
            f"lam_ref = {spec.lam_ref} lies inside the unwanted interval "
            f"[{spec.a}, {spec.b}]; wanted and unwanted intervals overlap "
            f"(a larger buffer improves the lambda_nev+1 estimate)"
        )
    h = _asarray(H)
    y = _asarray(Y)
    y2d = y if y.ndim == 2 else y.reshape(-1, 1)
    if h.shape[1] != y2d.shape[0]:
        raise ContractViolation(
            f"filter operand mismatch: H is {h.shape}, Y has {y2d.shape[0]} rows"
        )
    return VectorBlock(_filter_raw(h, y2d, spec.degree, spec.a, spec.b, spec.lam_ref))


# ----------------------------------------------------------------------
# Rayleigh-Ritz and residuals


def _rr_raw(h, q):
    """Rayleigh-Ritz over an orthonormal block: returns (ritz, Z, HZ).

    The reduced s x s problem goes through the Jacobi oracle (s << n).
    HZ is assembled as (HQ) W, reusing the product already needed for G.
    """
    hq = gemm(1.0, h, q)
    g = q.conj().T @ hq
    g = (g + g.conj().T) / 2.0
    w, vec = _jacobi_raw(g)
    z = q @ vec
    hz = hq @ vec
    return w, z, hz


def rayleigh_ritz(H, Q):
    """Ritz values (ascending) and rotated block Q W from G = Q^H H Q."""
    h = _asarray(H)
    q = _asarray(Q)
    if isinstance(Q, VectorBlock) and not Q.orthonormal:
        dev = np.linalg.norm(q.conj().T @ q - np.eye(q.shape[1]))
        if dev > 1e-10 * np.sqrt(q.shape[1]):
            raise ContractViolation(
                f"rayleigh_ritz requires orthonormal columns, deviation {dev:.3e}"
            )
    w, z, _ = _rr_raw(h, q)
    return w, VectorBlock(z, orthonormal=True)


def residuals(H, Y, lambdas):
    """Per-column residual norms ||H y_i - lambda_i y_i||_2."""
    h = _asarray(H)
    y = _asarray(Y)
    y2d = y if y.ndim == 2 else y.reshape(-1, 1)
    lam = np.asarray(lambdas, dtype=np.float64).ravel()
    if lam.shape[0] != y2d.shape[1]:
        raise ContractViolation(
            f"{lam.shape[0]} eigenvalues for {y2d.shape[1]} columns"
        )
    hy = gemm(1.0, h, y2d)
    return np.linalg.norm(hy - y2d * lam, axis=0)


# ----------------------------------------------------------------------
# the solver


def _qr_against_locked(f, locked, rng):
    """Orthonormalize f against locked columns, replacing collapsed columns
    with fresh random vectors (bounded retries)."""
    n = f.shape[0]
    for _ in range(f.shape[1] + 2):
        work = f
        if locked.shape[1]:
            work = work - locked @ (locked.conj().T @ work)
        try:
            q, r = np.linalg.qr(work)
            small = np.abs(np.diagonal(r)) < 1e-14 * np.linalg.norm(work)
            if np.any(small):
                raise RankDeficient(int(np.nonzero(small)[0][0]))
            return q
        except RankDeficient as exc:
            f = np.array(f)
            f[:, exc.column] = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    raise RankDeficient(0)


def chfsi_solve(H, Y0, config, prior=None, seed=0):
    """Run ChFSI on a standard Hermitian problem.

    Parameters
    ----------
    H : HermitianDenseMatrix or ndarray
    Y0 : start block with nev + buffer columns, or "random"/None
    config : SolverConfig
    prior : optional (lambda_1, lambda_nev+1) estimates. When absent, one
        unfiltered Rayleigh-Ritz pass over the start block seeds them.
    seed : int or Generator; drives the random start block, the Lanczos
        start vector and rank-collapse replacements.

    Returns (eigenvalues ascending, eigenvector VectorBlock, SolveReport).
    Raises NotConverged (carrying partials and the report) when
    max_outer_iters is exhausted.
    """
    if not isinstance(config, SolverConfig):
        raise ContractViolation("config must be a SolverConfig")
    h = _asarray(H)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {h.shape}")
    n = h.shape[0]
    nev = config.nev
    s_tot = nev + config.buffer_cols
    if s_tot > n:
        raise ContractViolation(
            f"nev + buffer = {s_tot} exceeds the matrix order {n}"
        )
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    if Y0 is None or (isinstance(Y0, str) and Y0 == "random"):
        y = rng.standard_normal((n, s_tot)) + 1j * rng.standard_normal((n, s_tot))
    else:
        y = np.array(_asarray(Y0), order="F")
        if y.ndim != 2 or y.shape != (n, s_tot):
            raise ContractViolation(
                f"start block must be {n} x {s_tot}, got {y.shape}"
            )

    report = SolveReport(n=n, nev=nev)
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    b_up = lanczos_upper_bound(h, config.lanczos_steps, rng)
    report.t_lanczos = time.perf_counter() - t0
    report.setup_matmuls += min(config.lanczos_steps, n)
    report.upper_bound = b_up

    if prior is not None:
        lam_ref, a_edge = float(prior[0]), float(prior[1])
    else:
        # bootstrap: one unfiltered Rayleigh-Ritz pass seeds the interval
        t0 = time.perf_counter()
        q = _qr_against_locked(y, np.zeros((n, 0), dtype=np.complex128), rng)
        w, z, _ = _rr_raw(h, q)
        report.t_rr += time.perf_counter() - t0
        report.setup_matmuls += s_tot
        lam_ref, a_edge = float(w[0]), float(w[nev])
        y = z

    locked_vals = []
    locked_vecs = np.zeros((n, 0), dtype=np.complex128, order="F")
    active = y

    for it in range(1, config.max_outer_iters + 1):
        if not lam_ref < a_edge:
            raise FilterDegenerate(
                f"lambda_1 estimate {lam_ref} >= lambda_nev+1 estimate "
                f"{a_edge}; interval placement ill-posed (increase buffer)"
            )
        if not a_edge < b_up:
            # estimates drifted past the bound; widen b minimally
            b_up = a_edge + max(1.0, abs(a_edge)) * 1e-8
        ncols = active.shape[1]
        it_matmuls = 0

        t0 = time.perf_counter()
        f = _filter_raw(h, active, config.degree, a_edge, b_up, lam_ref)
        tf = time.perf_counter() - t0
        it_matmuls += config.degree * ncols

        t0 = time.perf_counter()
        q = _qr_against_locked(f, locked_vecs, rng)
        tq = time.perf_counter() - t0

        t0 = time.perf_counter()
        w, z, hz = _rr_raw(h, q)
        trr = time.perf_counter() - t0
        it_matmuls += ncols

        t0 = time.perf_counter()
        res = np.linalg.norm(hz - z * w, axis=0)
        tres = time.perf_counter() - t0

        kk = 0
        while kk < len(w) and res[kk] < config.tol and len(locked_vals) < nev:
            locked_vals.append(float(w[kk]))
            locked_vecs = np.hstack([locked_vecs, z[:, kk : kk + 1]])
            kk += 1
        active = z[:, kk:]

        unconv = res[kk:]
        report.iterations.append(
            IterationStat(
                iteration=it,
                filtered_cols=ncols,
                converged=len(locked_vals),
                max_resid=float(unconv.max()) if unconv.size else 0.0,
                min_resid=float(unconv.min()) if unconv.size else 0.0,
                matmuls=it_matmuls,
                t_filter=tf,
                t_qr=tq,
                t_rr=trr,
                t_resid=tres,
            )
        )
        report.t_filter += tf
        report.t_qr += tq
        report.t_rr += trr
        report.t_resid += tres

        comb = np.sort(np.concatenate([locked_vals, w[kk:]]))
        lam_ref = float(comb[0])
        a_edge = float(comb[nev])
        report.est_lam1 = lam_ref
        report.est_lam_next = a_edge

        if len(locked_vals) >= nev:
            break

    report.total_matmuls = report.setup_matmuls + sum(
        it.matmuls for it in report.iterations
    )

    if len(locked_vals) < nev:
        report.t_total = time.perf_counter() - t_start
        raise NotConverged(
            f"{len(locked_vals)}/{nev} pairs converged after "
            f"{config.max_outer_iters} outer iterations",
            np.asarray(locked_vals),
            VectorBlock(locked_vecs) if locked_vecs.shape[1] else locked_vecs,
            report,
        )

    # locked order is ascending by construction; re-check every returned
    # pair against the original matrix before handing anything back
    vals = np.asarray(locked_vals)
    t0 = time.perf_counter()
    final_res = residuals(h, locked_vecs, vals)
    report.t_resid += time.perf_counter() - t0
    report.total_matmuls += nev
    report.t_total = time.perf_counter() - t_start
    if np.any(final_res >= config.tol):
        raise NotConverged(
            f"final residual re-check failed: max {final_res.max():.3e}",
            vals,
            VectorBlock(locked_vecs),
            report,
        )
    report.converged = True
    return vals, VectorBlock(locked_vecs, orthonormal=True), report


def solve_generalized(A, B, Y0, config, prior=None, seed=0):
    """Solve A c = lambda B c for the nev lowest pairs, B Hermitian
    positive definite.

    Composition: B = L L^H, H = L^-1 A L^-H, ChFSI on H, c = L^-H y.
    A given Y0 is interpreted as generalized-problem vectors and mapped
    through y = L^H c onto the standard problem. Returned vectors are
    B-orthonormal.
    """
    a = _asarray(A)
    b = _asarray(B)
    if a.shape != b.shape:
        raise ContractViolation(f"A and B orders differ: {a.shape} vs {b.shape}")
    lfac = cholesky_factor(b)
    h = reduce_to_standard(a, lfac)
    y0 = Y0
    if Y0 is not None and not (isinstance(Y0, str) and Y0 == "random"):
        y0 = trmm_adjoint(lfac, _asarray(Y0))
    lam, yv, report = chfsi_solve(h, y0, config, prior=prior, seed=seed)
    c = back_transform(yv, lfac)
    return lam, c, report
