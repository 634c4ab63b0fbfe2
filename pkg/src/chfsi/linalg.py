"""Dense complex linear-algebra kernels and the brute-force eigensolver oracle.

Everything here works in complex double precision with column-major storage
as the canonical order. The module keeps a global tally of square-matrix x
block products (the solver's work proxy) and a global default worker count
for the tiled GEMM kernel.

All public operations accept either the wrapper types defined here or plain
ndarrays; they validate on entry and return wrapper types where the contract
names one.
"""

import os
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.linalg import blas as _blas
from scipy.linalg import lapack as _lapack
from threadpoolctl import threadpool_limits

from .errors import (
    ContractViolation,
    DimensionMismatch,
    NotPositiveDefinite,
    OracleNoConvergence,
    RankDeficient,
)
from ._jacobi import sweep_loop

__all__ = [
    "HermitianDenseMatrix",
    "VectorBlock",
    "LowerTriangularFactor",
    "gemm",
    "cholesky_factor",
    "householder_qr",
    "oracle_eig",
    "triangular_solve",
    "set_workers",
    "get_workers",
    "reset_product_count",
    "product_count",
]

# ----------------------------------------------------------------------
# worker configuration and work-proxy accounting

_lock = threading.Lock()
_workers = max(1, int(os.environ.get("CHFSI_WORKERS", "1")))
_product_columns = 0


def set_workers(count):
    """Set the default worker count used by gemm when none is passed."""
    global _workers
    count = int(count)
    if count < 1:
        raise ContractViolation("worker count must be >= 1")
    _workers = count


def get_workers():
    return _workers


def reset_product_count():
    """Zero the global square-matrix x block product tally."""
    global _product_columns
    with _lock:
        _product_columns = 0


def product_count():
    """Total columns pushed through square-matrix x block products so far."""
    return _product_columns


def _count_products(cols):
    global _product_columns
    with _lock:
        _product_columns += cols


# ----------------------------------------------------------------------
# domain types


def _asarray(x):
    """Coerce a wrapper type or array-like to a complex128 ndarray."""
    if isinstance(x, (HermitianDenseMatrix, VectorBlock, LowerTriangularFactor)):
        return x.entries
    return np.asarray(x, dtype=np.complex128)


class HermitianDenseMatrix:
    """Square complex matrix with a Hermitian-symmetry contract.

    Construction from raw data checks the deviation ||H - H^H|| against
    `rtol` * ||H|| and then symmetrizes (H <- (H + H^H)/2, real diagonal),
    so stored entries are Hermitian exactly. The stored array is
    column-major and read-only.
    """

    __slots__ = ("entries",)

    def __init__(self, entries, rtol=1e-13):
        a = np.array(_asarray(entries), order="F")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractViolation(f"expected a square matrix, got shape {a.shape}")
        scale = np.linalg.norm(a)
        if scale > 0:
            dev = np.linalg.norm(a - a.conj().T)
            if dev > rtol * scale:
                raise ContractViolation(
                    f"matrix is not Hermitian: deviation {dev:.3e} exceeds "
                    f"{rtol:g} * ||H|| = {rtol * scale:.3e}"
                )
        a = (a + a.conj().T) / 2.0
        np.fill_diagonal(a, a.diagonal().real)
        a = np.asfortranarray(a)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self):
        return self.entries.shape[0]

    def __repr__(self):
        return f"HermitianDenseMatrix(n={self.n})"


class VectorBlock:
    """n x s dense complex block of column vectors, 1 <= s <= n."""

    __slots__ = ("entries", "orthonormal")

    def __init__(self, entries, orthonormal=False):
        a = np.array(_asarray(entries), order="F")
        if a.ndim == 1:
            a = a.reshape(-1, 1)
        if a.ndim != 2:
            raise ContractViolation(f"expected a 2-d block, got ndim={a.ndim}")
        n, s = a.shape
        if not 1 <= s <= n:
            raise ContractViolation(f"block shape {a.shape} violates 1 <= s <= n")
        if orthonormal:
            dev = np.linalg.norm(a.conj().T @ a - np.eye(s))
            if dev > 1e-12 * np.sqrt(s):
                raise ContractViolation(
                    f"block flagged orthonormal but ||Q^H Q - I|| = {dev:.3e}"
                )
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "orthonormal", bool(orthonormal))

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def s(self):
        return self.entries.shape[1]

    def __repr__(self):
        return f"VectorBlock(n={self.n}, s={self.s}, orthonormal={self.orthonormal})"


class LowerTriangularFactor:
    """Lower-triangular Cholesky factor with strictly positive real diagonal."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        a = np.array(_asarray(entries), order="F")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractViolation(f"expected a square factor, got shape {a.shape}")
        if np.linalg.norm(np.triu(a, 1)) != 0.0:
            raise ContractViolation("factor has nonzero entries above the diagonal")
        d = a.diagonal()
        if np.any(d.imag != 0.0) or np.any(d.real <= 0.0):
            raise ContractViolation("factor diagonal must be real positive")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self):
        return self.entries.shape[0]

    def __repr__(self):
        return f"LowerTriangularFactor(n={self.n})"


# ----------------------------------------------------------------------
# kernels


def gemm(alpha, a, b, beta=0.0, c=None, workers=None):
    """C <- alpha * A @ B + beta * C, tiled over output columns.

    Tiles are contiguous column ranges dispatched to a thread pool of
    `workers` threads (module default when None). Column tiling splits no
    reduction, so the result is independent of the tile layout up to BLAS
    vectorization order (within 1e-13 relative), and bit-identical between
    runs at a fixed worker count.

    Square-A products (the n x n x s work proxy) are tallied globally; see
    product_count().
    """
    a = _asarray(a)
    b = _asarray(b)
    b2d = b if b.ndim == 2 else b.reshape(-1, 1)
    if a.ndim != 2 or b2d.ndim != 2 or a.shape[1] != b2d.shape[0]:
        raise DimensionMismatch(
            f"gemm inner dimensions disagree: {a.shape} x {b.shape}"
        )
    out_shape = (a.shape[0], b2d.shape[1])
    if c is None:
        if beta != 0.0:
            raise ContractViolation("beta != 0 requires an explicit C operand")
        acc = np.zeros(out_shape, dtype=np.complex128, order="F")
    else:
        c = _asarray(c)
        if c.shape != out_shape:
            raise DimensionMismatch(
                f"gemm C operand has shape {c.shape}, expected {out_shape}"
            )
        acc = np.array(c, dtype=np.complex128, order="F") * beta

    nw = get_workers() if workers is None else max(1, int(workers))
    s = b2d.shape[1]
    if alpha != 0.0:
        if a.shape[0] == a.shape[1]:
            _count_products(s)
        if nw == 1 or s == 1:
            acc += alpha * (a @ b2d)
        else:
            nw = min(nw, s)
            bounds = [(s * i) // nw for i in range(nw + 1)]

            def _tile(i):
                lo, hi = bounds[i], bounds[i + 1]
                acc[:, lo:hi] += alpha * (a @ b2d[:, lo:hi])

            # one BLAS thread per tile; the pool provides the parallelism
            with threadpool_limits(limits=1, user_api="blas"):
                with ThreadPoolExecutor(max_workers=nw) as pool:
                    list(pool.map(_tile, range(nw)))
    if b.ndim == 1:
        return acc[:, 0]
    return acc


def cholesky_factor(B):
    """Cholesky factor L with B = L L^H, L lower, diagonal real positive.

    Raises NotPositiveDefinite naming the failing pivot (1-based) when B is
    not positive definite.
    """
    b = _asarray(B)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {b.shape}")
    cfac, info = _lapack.zpotrf(b, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefinite(info)
    if info < 0:
        raise ContractViolation(f"zpotrf: illegal argument {-info}")
    cfac = np.asfortranarray(cfac)
    np.fill_diagonal(cfac, cfac.diagonal().real)
    return LowerTriangularFactor(cfac)


def householder_qr(Y):
    """Orthonormalize the columns of Y by Householder QR.

    Returns a VectorBlock flagged orthonormal spanning range(Y). A column
    whose R diagonal collapses below 1e-14 * ||Y||_F raises RankDeficient
    with the column index; the caller is expected to replace that column
    (the solver substitutes a fresh random vector).
    """
    y = _asarray(Y)
    if y.ndim != 2:
        raise ContractViolation("householder_qr expects a 2-d block")
    q, r = np.linalg.qr(y)
    scale = np.linalg.norm(y)
    small = np.abs(np.diagonal(r)) < 1e-14 * scale
    if np.any(small):
        raise RankDeficient(int(np.nonzero(small)[0][0]))
    return VectorBlock(q, orthonormal=True)


def oracle_eig(H, max_sweeps=30):
    """Full eigendecomposition by cyclic Jacobi rotations.

    The independent test oracle: a different algorithm family from the
    solver on purpose. Returns eigenvalues ascending and the matching
    eigenvector block. Raises OracleNoConvergence when the off-diagonal
    norm has not dropped below 1e-13 * ||H||_F within `max_sweeps` sweeps.
    """
    lam, v = _jacobi_raw(_asarray(H), max_sweeps)
    return lam, VectorBlock(v)


def _jacobi_raw(h, max_sweeps=30):
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ContractViolation(f"expected a square matrix, got shape {h.shape}")
    n = h.shape[0]
    work = np.array(h, dtype=np.complex128, order="C")
    v = np.eye(n, dtype=np.complex128)
    fro = np.linalg.norm(work)
    if n == 1 or fro == 0.0:
        lam = work.diagonal().real.copy()
        order = np.argsort(lam, kind="stable")
        return lam[order], v[:, order]
    sweeps, ok = sweep_loop(work, v, max_sweeps, 1e-13 * fro)
    if not ok:
        raise OracleNoConvergence(
            f"Jacobi oracle: off-diagonal norm still above tolerance after "
            f"{sweeps} sweeps (n={n})"
        )
    lam = work.diagonal().real.copy()
    order = np.argsort(lam, kind="stable")
    return lam[order], np.asfortranarray(v[:, order])


def triangular_solve(L, X, side="left", adjoint=False):
    """Solve against the triangular factor L.

    side="left",  adjoint=False -> L^-1 X
    side="left",  adjoint=True  -> L^-H X
    side="right", adjoint=False -> X L^-1
    side="right", adjoint=True  -> X L^-H
    """
    lmat = _asarray(L)
    x = _asarray(X)
    x2d = x if x.ndim == 2 else x.reshape(-1, 1)
    if side not in ("left", "right"):
        raise ContractViolation(f"side must be 'left' or 'right', got {side!r}")
    need = x2d.shape[0] if side == "left" else x2d.shape[1]
    if lmat.shape[0] != need:
        raise DimensionMismatch(
            f"triangular_solve: factor order {lmat.shape[0]} does not match "
            f"block shape {x2d.shape} on side {side!r}"
        )
    z = _blas.ztrsm(
        1.0,
        lmat,
        np.asfortranarray(x2d),
        side=0 if side == "left" else 1,
        lower=1,
        trans_a=2 if adjoint else 0,
    )
    if x.ndim == 1:
        return z[:, 0]
    return z


def trmm_adjoint(L, X):
    """L^H @ X by triangular multiply (the forward map y = L^H c)."""
    lmat = _asarray(L)
    x = _asarray(X)
    if lmat.shape[0] != x.shape[0]:
        raise DimensionMismatch(
            f"trmm: factor order {lmat.shape[0]} vs block rows {x.shape[0]}"
        )
    return _blas.ztrmm(1.0, lmat, np.asfortranarray(x), side=0, lower=1, trans_a=2)
