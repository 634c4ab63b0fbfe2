"""Cyclic Jacobi kernel for complex Hermitian matrices.

This is the inner loop of the brute-force eigensolver oracle. It is kept
deliberately primitive: row-cyclic sweeps of 2x2 unitary rotations, no
blocking, no tridiagonalization, so it shares nothing with the solver's
BLAS-3 code path. numba compiles the sweep loop; the first call pays a
one-time JIT cost (cached on disk afterwards).
"""

import numpy as np
from numba import njit


@njit(cache=True)
def sweep_loop(H, V, max_sweeps, off_tol):
    """Run cyclic Jacobi sweeps in place on H, accumulating rotations in V.

    Returns (sweeps_done, converged). H is overwritten with a (numerically)
    diagonal matrix, V with the unitary such that V^H H_in V = diag.
    """
    n = H.shape[0]
    sweeps = 0
    while sweeps < max_sweeps:
        off2 = 0.0
        for i in range(n):
            for j in range(n):
                if i != j:
                    x = H[i, j]
                    off2 += x.real * x.real + x.imag * x.imag
        if np.sqrt(off2) <= off_tol:
            return sweeps, True
        # small pivots are skipped; the threshold keeps a full sweep from
        # undoing convergence on the tail pivots
        skip = off_tol / (2.0 * n)
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = H[p, q]
                mag = abs(apq)
                if mag <= skip:
                    continue
                app = H[p, p].real
                aqq = H[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                u = apq / mag
                su = s * u
                suc = s * np.conj(u)
                for j in range(n):
                    hp = H[p, j]
                    hq = H[q, j]
                    H[p, j] = c * hp - su * hq
                    H[q, j] = suc * hp + c * hq
                for i in range(n):
                    hp = H[i, p]
                    hq = H[i, q]
                    H[i, p] = c * hp - suc * hq
                    H[i, q] = su * hp + c * hq
                dd = t * mag
                H[p, p] = complex(app - dd, 0.0)
                H[q, q] = complex(aqq + dd, 0.0)
                H[p, q] = 0.0
                H[q, p] = 0.0
                for i in range(V.shape[0]):
                    vp = V[i, p]
                    vq = V[i, q]
                    V[i, p] = c * vp - suc * vq
                    V[i, q] = su * vp + c * vq
        sweeps += 1
    off2 = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                x = H[i, j]
                off2 += x.real * x.real + x.imag * x.imag
    return sweeps, np.sqrt(off2) <= off_tol
