"""Matrix file format, Matrix-Market import, run configuration, phase
normalization, sequence serialization."""

import struct

import numpy as np
import pytest
import scipy.io

from chfsi.core import SolverConfig, chfsi_solve
from chfsi.errors import (
    BadMagic,
    ConfigError,
    ContractViolation,
    MatrixFileError,
    SymmetryViolation,
    TruncatedPayload,
)
from chfsi.io import (
    DEFAULTS,
    MAGIC,
    RunConfig,
    config_hash,
    load_sequence,
    normalize_phase,
    parse_run_config,
    read_matrix,
    save_sequence,
    write_matrix,
)
from chfsi.linalg import HermitianDenseMatrix, VectorBlock
from chfsi.sequence import SequenceSpec, generate_sequence

from conftest import rand_hermitian, rand_spd


def test_roundtrip_hermitian_bit_identical(tmp_path):
    rng = np.random.default_rng(80)
    h = HermitianDenseMatrix(rand_hermitian(rng, 8))
    path = tmp_path / "h.mat"
    write_matrix(path, h)
    back = read_matrix(path)
    assert isinstance(back, HermitianDenseMatrix)
    assert np.array_equal(back.entries, h.entries)


def test_roundtrip_block_and_spd(tmp_path):
    rng = np.random.default_rng(81)
    blk = VectorBlock(rng.standard_normal((9, 4)) + 1j * rng.standard_normal((9, 4)))
    write_matrix(tmp_path / "b.mat", blk)
    back = read_matrix(tmp_path / "b.mat")
    assert isinstance(back, VectorBlock)
    assert np.array_equal(back.entries, blk.entries)

    spd = HermitianDenseMatrix(rand_spd(rng, 5))
    write_matrix(tmp_path / "s.mat", spd, kind="spd")
    back2 = read_matrix(tmp_path / "s.mat")
    assert np.array_equal(back2.entries, spd.entries)


def test_header_layout(tmp_path):
    h = HermitianDenseMatrix(np.eye(3, dtype=complex))
    path = tmp_path / "h.mat"
    write_matrix(path, h)
    raw = path.read_bytes()
    assert raw[:10] == MAGIC
    kind, n, s = struct.unpack_from("<cQQ", raw, 10)
    assert (kind, n, s) == (b"H", 3, 3)
    assert len(raw) == 27 + 16 * 9


def test_bad_magic(tmp_path):
    path = tmp_path / "x.mat"
    path.write_bytes(b"NOT-A-FILE" + b"\x00" * 40)
    with pytest.raises(BadMagic):
        read_matrix(path)


def test_truncated_payload_reports_counts(tmp_path):
    h = HermitianDenseMatrix(np.eye(4, dtype=complex))
    path = tmp_path / "h.mat"
    write_matrix(path, h)
    whole = path.read_bytes()
    path.write_bytes(whole[:-10])
    with pytest.raises(TruncatedPayload) as exc:
        read_matrix(path)
    assert exc.value.expected == 16 * 16
    assert exc.value.actual == 16 * 16 - 10
    assert exc.value.offset == 27


def test_unknown_kind_byte(tmp_path):
    path = tmp_path / "k.mat"
    payload = np.zeros(1, dtype="<c16").tobytes()
    path.write_bytes(struct.pack("<10scQQ", MAGIC, b"Z", 1, 1) + payload)
    with pytest.raises(MatrixFileError):
        read_matrix(path)


def test_symmetry_violation(tmp_path):
    path = tmp_path / "a.mat"
    bad = np.array([[1.0, 5.0], [0.0, 1.0]], dtype="<c16")
    path.write_bytes(struct.pack("<10scQQ", MAGIC, b"H", 2, 2)
                     + bad.tobytes(order="F"))
    with pytest.raises(SymmetryViolation):
        read_matrix(path)


def test_matrix_market_import(tmp_path):
    rng = np.random.default_rng(82)
    h = rand_hermitian(rng, 6)
    mm = tmp_path / "h.mtx"
    scipy.io.mmwrite(str(mm).removesuffix(".mtx"), h)
    got = read_matrix(mm)
    bin_path = tmp_path / "h.mat"
    write_matrix(bin_path, HermitianDenseMatrix(h))
    bin_back = read_matrix(bin_path)
    assert np.linalg.norm(got.entries - bin_back.entries) <= 1e-15 * np.linalg.norm(h)


def test_matrix_market_rejects_asymmetric(tmp_path):
    mm = tmp_path / "bad.mtx"
    scipy.io.mmwrite(str(mm).removesuffix(".mtx"),
                     np.array([[1.0, 2.0], [3.0, 4.0]]))
    with pytest.raises(SymmetryViolation):
        read_matrix(mm)


def test_normalize_phase():
    rng = np.random.default_rng(83)
    v = rng.standard_normal((7, 3)) + 1j * rng.standard_normal((7, 3))
    out = normalize_phase(v)
    for j in range(3):
        i = np.argmax(np.abs(out[:, j]))
        assert out[i, j].imag == 0.0
        assert out[i, j].real > 0.0
    # multiplying columns by arbitrary phases does not change the output
    phased = v * np.exp(1j * np.array([0.4, -1.3, 2.2]))
    assert np.allclose(normalize_phase(phased), out, atol=1e-14)


def test_run_config_defaults_and_parsing():
    cfg = parse_run_config("")
    assert cfg == RunConfig()
    text = """
    # solver
    nev = 12
    tol = 1e-9
    buffer = none
    mode = reuse   # trailing comment
    kind = generalized
    """
    cfg2 = parse_run_config(text)
    assert cfg2.nev == 12 and cfg2.tol == 1e-9 and cfg2.buffer is None
    assert cfg2.mode == "reuse" and cfg2.kind == "generalized"
    assert cfg2.n == DEFAULTS["n"]
    assert parse_run_config("buffer = auto").buffer is None
    assert parse_run_config("vary_b = yes").vary_b is True


def test_run_config_rejections():
    for text in (
        "mystery = 3",
        "nev = 5\nnev = 6",
        "nev",
        "nev = many",
        "mode = sideways",
        "kind = sparse",
        "workers = 0",
        "vary_b = maybe",
    ):
        with pytest.raises(ConfigError):
            parse_run_config(text)


def test_config_hash_tracks_fields():
    a = RunConfig()
    b = RunConfig(nev=36)
    assert config_hash(a) != config_hash(b)
    assert config_hash(a) == config_hash(RunConfig())
    assert len(config_hash(a)) == 12


def test_solver_and_sequence_views():
    cfg = RunConfig(nev=9, degree=14, n=77, N=4, kind="generalized")
    sc = cfg.solver_config()
    assert isinstance(sc, SolverConfig) and sc.nev == 9 and sc.degree == 14
    sp = cfg.sequence_spec()
    assert isinstance(sp, SequenceSpec) and sp.n == 77 and sp.N == 4
    assert sp.kind == "generalized"


def test_save_load_sequence(tmp_path):
    spec = SequenceSpec(n=20, N=3, nev=3, seed=84, kind="generalized")
    seq = generate_sequence(spec)
    manifest = save_sequence(seq, tmp_path)
    loaded = load_sequence(manifest)
    assert loaded.spec == spec
    for (a1, b1), (a2, b2) in zip(seq.problems, loaded.problems):
        assert np.array_equal(a1.entries, a2.entries)
        assert np.array_equal(b1.entries, b2.entries)


def test_solve_after_roundtrip_bit_identical(tmp_path):
    rng = np.random.default_rng(85)
    evals = np.concatenate([np.linspace(0.0, 3.0, 5), np.linspace(5.0, 9.0, 35)])
    g = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
    q = np.linalg.qr(g)[0]
    h = HermitianDenseMatrix((q * evals) @ q.conj().T, rtol=1e-10)
    path = tmp_path / "h.mat"
    write_matrix(path, h)
    back = read_matrix(path)
    cfg = SolverConfig(nev=5)
    lam1, v1, _ = chfsi_solve(h, None, cfg, seed=86)
    lam2, v2, _ = chfsi_solve(back, None, cfg, seed=86)
    assert np.array_equal(lam1, lam2)
    assert np.array_equal(v1.entries, v2.entries)


def test_write_matrix_validation(tmp_path):
    with pytest.raises(ContractViolation):
        write_matrix(tmp_path / "x.mat", np.ones(3, dtype=complex))
    with pytest.raises(ContractViolation):
        write_matrix(tmp_path / "x.mat", np.ones((2, 3), dtype=complex),
                     kind="hermitian")
    with pytest.raises(ContractViolation):
        write_matrix(tmp_path / "x.mat", np.eye(2, dtype=complex), kind="csr")
