"""Generalized-to-standard reduction and back-transform tests."""

import numpy as np
import pytest

from chfsi.core import back_transform, reduce_to_standard
from chfsi.errors import ContractViolation
from chfsi.linalg import cholesky_factor, oracle_eig

from conftest import rand_hermitian, rand_spd


def test_reduction_b_identity():
    rng = np.random.default_rng(20)
    a = rand_hermitian(rng, 10)
    lfac = cholesky_factor(np.eye(10, dtype=complex))
    h = reduce_to_standard(a, lfac)
    assert np.allclose(h.entries, a, rtol=0, atol=1e-15)


def test_reduction_a_equals_b():
    rng = np.random.default_rng(21)
    b = rand_spd(rng, 12)
    lfac = cholesky_factor(b)
    h = reduce_to_standard(b, lfac)
    assert np.linalg.norm(h.entries - np.eye(12)) <= 1e-12 * np.linalg.norm(h.entries)


def test_reduction_spectrum_matches_explicit_cross_check():
    # eigenvalues of L^-1 A L^-H == eigenvalues of B^-1 A (similarity)
    rng = np.random.default_rng(22)
    n = 40
    a = rand_hermitian(rng, n, scale=3.0)
    b = rand_spd(rng, n)
    lfac = cholesky_factor(b)
    h = reduce_to_standard(a, lfac)
    lam, _ = oracle_eig(h)
    ref = np.sort(np.linalg.eigvals(np.linalg.solve(b, a)).real)
    scale = max(1.0, np.abs(ref).max())
    assert np.max(np.abs(lam - ref)) <= 1e-10 * scale


def test_back_transform_identity_and_diagonal():
    y = np.eye(4, dtype=complex)[:, :2]
    lfac = cholesky_factor(np.eye(4, dtype=complex))
    assert np.array_equal(back_transform(y, lfac).entries, y)
    lfac2 = cholesky_factor(4.0 * np.eye(4, dtype=complex))  # L = 2 I
    c = back_transform(y[:, :1], lfac2).entries
    assert np.allclose(c, y[:, :1] / 2.0, atol=1e-15)


def test_back_transform_generalized_residual():
    rng = np.random.default_rng(23)
    n, s = 40, 6
    a = rand_hermitian(rng, n, scale=3.0)
    b = rand_spd(rng, n)
    lfac = cholesky_factor(b)
    h = reduce_to_standard(a, lfac)
    lam, v = oracle_eig(h)
    c = back_transform(v.entries[:, :s], lfac).entries
    res = a @ c - (b @ c) * lam[:s]
    assert np.linalg.norm(res) <= 1e-9 * (np.linalg.norm(a) + np.linalg.norm(b))
    gram = c.conj().T @ b @ c
    assert np.linalg.norm(gram - np.eye(s)) <= 1e-10 * np.sqrt(s)


def test_reduction_order_mismatch():
    with pytest.raises(ContractViolation):
        reduce_to_standard(np.eye(3, dtype=complex),
                           cholesky_factor(np.eye(4, dtype=complex)))
