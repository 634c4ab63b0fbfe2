"""Shared fixtures and helpers for the chfsi test suite."""

import numpy as np
import pytest

from chfsi import linalg

# acceptance tests register (ok, detail) per criterion here; the terminal
# summary hook prints one line per criterion at the end of the run
ACCEPTANCE_RESULTS = {}


def record_criterion(num, ok, detail):
    ACCEPTANCE_RESULTS[num] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[num]
        word = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {word} - {detail}")


def rand_hermitian(rng, n, scale=1.0):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h = (g + g.conj().T) / 2.0
    return h * (scale / np.sqrt(n))


def spectrum_matrix(rng, evals):
    """Hermitian matrix with exactly the given eigenvalues."""
    evals = np.asarray(evals, dtype=np.float64)
    n = evals.size
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(g)
    return (q * evals) @ q.conj().T


def rand_spd(rng, n, shift=None):
    m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = m.conj().T @ m + (n if shift is None else shift) * np.eye(n)
    return (b + b.conj().T) / 2.0


@pytest.fixture
def restore_workers():
    saved = linalg.get_workers()
    yield
    linalg.set_workers(saved)
