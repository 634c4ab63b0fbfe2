"""Sequence generator and reuse-mode driver tests."""

import numpy as np
import pytest

from chfsi.core import SolverConfig
from chfsi.errors import ContractViolation, NotConverged
from chfsi.linalg import cholesky_factor, oracle_eig
from chfsi.sequence import (
    SequenceSpec,
    attach_work_ratios,
    generate_sequence,
    solve_sequence,
    vector_angles,
)


SMALL = dict(n=96, nev=10, band_max=4.5, gap=1.2, spread=10.0)


def test_spec_validation():
    SequenceSpec(n=10, N=1, nev=2)
    for bad in (
        dict(n=10, N=0, nev=2),
        dict(n=10, N=2, nev=2, rho=1.0),
        dict(n=10, N=2, nev=2, delta0=-0.1),
        dict(n=10, N=2, nev=10),
        dict(n=10, N=2, nev=2, kind="banded"),
        dict(n=10, N=2, nev=2, spread=5.0),
    ):
        with pytest.raises(ContractViolation):
            SequenceSpec(**bad)


def test_generator_determinism():
    spec = SequenceSpec(N=3, seed=5, **SMALL)
    s1 = generate_sequence(spec)
    s2 = generate_sequence(spec)
    for (a1, _), (a2, _) in zip(s1.problems, s2.problems):
        assert np.array_equal(a1.entries, a2.entries)


def test_delta0_zero_repeats_bitwise():
    spec = SequenceSpec(N=4, delta0=0.0, seed=6, **SMALL)
    seq = generate_sequence(spec)
    first = seq.problems[0][0].entries
    for a, _ in seq.problems[1:]:
        assert np.array_equal(a.entries, first)


def test_perturbation_scale_and_decay():
    spec = SequenceSpec(N=3, delta0=0.1, rho=0.5, seed=7, n=128, nev=12)
    seq = generate_sequence(spec)
    d1 = np.linalg.norm(seq.problems[1][0].entries - seq.problems[0][0].entries, 2)
    d2 = np.linalg.norm(seq.problems[2][0].entries - seq.problems[1][0].entries, 2)
    # E has unit spectral-norm scale, so step l has 2-norm ~ delta0 rho^(l-1)
    assert 0.7 * 0.1 <= d1 <= 1.3 * 0.1
    assert 0.85 * spec.rho <= d2 / d1 <= 1.15 * spec.rho


def test_first_matrix_spectrum_layout():
    spec = SequenceSpec(N=1, seed=8, **SMALL)
    seq = generate_sequence(spec)
    lam, _ = oracle_eig(seq.problems[0][0])
    nev = spec.nev
    assert lam[nev - 1] <= spec.band_max + 1e-12
    assert lam[nev] >= spec.band_max + spec.gap - 1e-12
    assert lam[-1] <= spec.spread + 1e-12


def test_generalized_b_spd_many_seeds():
    # Cholesky must succeed on every cycle of 100 seeded generalized runs
    for seed in range(100):
        spec = SequenceSpec(n=24, N=3, nev=4, seed=seed, kind="generalized",
                            vary_b=bool(seed % 2))
        for _, b in generate_sequence(spec).problems:
            cholesky_factor(b)


def test_vector_angles_trivia():
    rng = np.random.default_rng(70)
    y = rng.standard_normal((8, 3)) + 1j * rng.standard_normal((8, 3))
    y /= np.linalg.norm(y, axis=0)
    assert np.allclose(vector_angles(y, y), 0.0, atol=1e-7)
    phases = np.exp(1j * np.array([0.3, 1.1, -2.0]))
    assert np.allclose(vector_angles(y, y * phases), 0.0, atol=1e-7)
    e = np.eye(8, dtype=complex)
    assert np.allclose(vector_angles(e[:, :2], e[:, 2:4]), np.pi / 2, atol=1e-12)
    with pytest.raises(ContractViolation):
        vector_angles(e[:, :2], e[:, :3])


def test_delta0_zero_reuse_hits_fixed_point():
    spec = SequenceSpec(N=4, delta0=0.0, seed=9, **SMALL)
    seq = generate_sequence(spec)
    rep = solve_sequence(seq, SolverConfig(nev=spec.nev), "reuse")
    iters = [r.outer_iterations for r in rep.reports]
    assert all(i == 1 for i in iters[1:])
    for med in rep.median_angles()[1:]:
        assert med <= 1e-7
    for lam in rep.eigenvalues[1:]:
        assert np.max(np.abs(lam - rep.eigenvalues[0])) <= 1e-10


def test_single_cycle_sequence():
    spec = SequenceSpec(N=1, seed=10, **SMALL)
    seq = generate_sequence(spec)
    rep = solve_sequence(seq, SolverConfig(nev=spec.nev), "reuse")
    assert len(rep.reports) == 1
    assert rep.angles == [None]
    assert rep.median_angles() == [None]


def test_reuse_work_never_exceeds_random():
    spec = SequenceSpec(N=5, seed=11, **SMALL)
    seq = generate_sequence(spec)
    cfg = SolverConfig(nev=spec.nev)
    rand = solve_sequence(seq, cfg, "random")
    reuse = solve_sequence(seq, cfg, "reuse")
    ratios = attach_work_ratios(rand, reuse)
    assert ratios[0] is None
    assert all(r >= 1.0 for r in ratios[1:])
    assert reuse.work_ratios == ratios
    for wr, wu in zip(rand.work[1:], reuse.work[1:]):
        assert wu <= wr


def test_both_modes_accurate_against_oracle():
    spec = SequenceSpec(n=120, N=3, nev=10, seed=12)
    seq = generate_sequence(spec)
    cfg = SolverConfig(nev=10)
    for mode in ("random", "reuse"):
        rep = solve_sequence(seq, cfg, mode)
        for (a, _), lam in zip(seq.problems, rep.eigenvalues):
            lam_o, _ = oracle_eig(a)
            norm2 = max(abs(lam_o[0]), abs(lam_o[-1]))
            assert np.max(np.abs(lam - lam_o[:10])) <= 10 * cfg.tol * norm2


def test_angles_match_oracle_cross_check():
    spec = SequenceSpec(n=96, N=3, nev=8, seed=13)
    seq = generate_sequence(spec)
    rep = solve_sequence(seq, SolverConfig(nev=8), "reuse")
    prev = None
    for ell, (a, _) in enumerate(seq.problems):
        _, v = oracle_eig(a)
        cur = v.entries[:, :8]
        if prev is not None:
            ref = np.arccos(np.minimum(1.0, np.abs(np.sum(prev.conj() * cur, axis=0))))
            got = rep.angles[ell]
            assert np.max(np.abs(got - ref)) <= 1e-6
        prev = cur


def test_sequence_determinism():
    spec = SequenceSpec(N=3, seed=14, **SMALL)
    seq = generate_sequence(spec)
    cfg = SolverConfig(nev=spec.nev)
    r1 = solve_sequence(seq, cfg, "reuse")
    r2 = solve_sequence(seq, cfg, "reuse")
    assert r1.work == r2.work
    for a, b in zip(r1.eigenvalues, r2.eigenvalues):
        assert np.array_equal(a, b)


def test_mode_validation_and_ratio_length_guard():
    spec = SequenceSpec(N=2, seed=15, **SMALL)
    seq = generate_sequence(spec)
    cfg = SolverConfig(nev=spec.nev)
    with pytest.raises(ContractViolation):
        solve_sequence(seq, cfg, "warm")
    r2 = solve_sequence(seq, cfg, "random")
    spec3 = SequenceSpec(N=3, seed=15, **SMALL)
    r3 = solve_sequence(generate_sequence(spec3), cfg, "random")
    with pytest.raises(ContractViolation):
        attach_work_ratios(r3, r2)


def test_not_converged_aborts_with_partials():
    spec = SequenceSpec(N=3, seed=16, **SMALL)
    seq = generate_sequence(spec)
    cfg = SolverConfig(nev=spec.nev, degree=1, max_outer_iters=1)
    with pytest.raises(NotConverged) as exc:
        solve_sequence(seq, cfg, "random")
    assert len(exc.value.report.reports) < 3


def test_generalized_sequence_reuse():
    spec = SequenceSpec(n=64, N=3, nev=6, seed=17, kind="generalized")
    seq = generate_sequence(spec)
    cfg = SolverConfig(nev=6)
    rand = solve_sequence(seq, cfg, "random")
    reuse = solve_sequence(seq, cfg, "reuse")
    ratios = attach_work_ratios(rand, reuse)
    assert all(r >= 1.0 for r in ratios[1:])
    # B-orthonormality of every cycle's vectors
    for (_, b), v in zip(seq.problems, reuse.vectors):
        gram = v.entries.conj().T @ b.entries @ v.entries
        assert np.linalg.norm(gram - np.eye(6)) <= 1e-9
