"""File formats and run configuration.

Binary-first matrix interchange: a fixed little-endian header followed by
column-major complex double payload, so round-trips are bit-exact and
regression tests can compare files directly. A Matrix-Market-style text
importer covers interoperability with external tools.

RunConfig is a flat key = value text format mirroring SolverConfig +
SequenceSpec + run-level settings; unknown keys are rejected so typos fail
loudly. All defaults live in the DEFAULTS table below.
"""

import hashlib
import struct
from dataclasses import dataclass, fields

import numpy as np
import scipy.io

from .core import SolverConfig
from .errors import (
    BadMagic,
    ConfigError,
    ContractViolation,
    MatrixFileError,
    SymmetryViolation,
    TruncatedPayload,
)
from .linalg import HermitianDenseMatrix, VectorBlock, _asarray
from .sequence import ProblemSequence, SequenceSpec

__all__ = [
    "MAGIC",
    "write_matrix",
    "read_matrix",
    "normalize_phase",
    "RunConfig",
    "DEFAULTS",
    "parse_run_config",
    "read_run_config",
    "config_hash",
    "save_sequence",
    "load_sequence",
]

MAGIC = b"CHFSI-MAT1"
_KIND_BYTES = {"hermitian": b"H", "spd": b"S", "block": b"B"}
_BYTE_KINDS = {v: k for k, v in _KIND_BYTES.items()}
_HEADER = struct.Struct("<10scQQ")


def write_matrix(path, m, kind=None):
    """Write a matrix or block in the binary interchange format.

    kind defaults to "hermitian" for HermitianDenseMatrix and "block" for
    VectorBlock; pass "spd" explicitly to tag a B matrix.
    """
    arr = _asarray(m)
    if arr.ndim != 2:
        raise ContractViolation("only 2-d matrices/blocks can be written")
    if kind is None:
        kind = "block" if isinstance(m, VectorBlock) else "hermitian"
    if kind not in _KIND_BYTES:
        raise ContractViolation(f"unknown matrix kind {kind!r}")
    if kind in ("hermitian", "spd") and arr.shape[0] != arr.shape[1]:
        raise ContractViolation(f"kind {kind!r} requires a square matrix")
    n, s = arr.shape
    payload = np.asarray(arr, dtype="<c16").tobytes(order="F")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, _KIND_BYTES[kind], n, s))
        fh.write(payload)


def read_matrix(path):
    """Read a matrix written by write_matrix, or import Matrix-Market text.

    Paths ending in .mtx or .mm go through the text importer and are
    validated as Hermitian. Binary files are dispatched on the header kind:
    hermitian/spd return HermitianDenseMatrix (symmetry deviation above
    1e-10 relative is rejected), block returns a VectorBlock.
    """
    spath = str(path)
    if spath.endswith(".mtx") or spath.endswith(".mm"):
        return _read_matrix_market(spath)
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size or data[: len(MAGIC)] != MAGIC:
        raise BadMagic(
            f"{spath}: expected magic {MAGIC!r} at offset 0"
        )
    _, kind_byte, n, s = _HEADER.unpack_from(data)
    if kind_byte not in _BYTE_KINDS:
        raise MatrixFileError(f"{spath}: unknown kind byte {kind_byte!r}")
    kind = _BYTE_KINDS[kind_byte]
    expected = 16 * n * s
    actual = len(data) - _HEADER.size
    if actual != expected:
        raise TruncatedPayload(expected, actual, _HEADER.size)
    arr = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
    arr = arr.reshape((n, s), order="F")
    if kind == "block":
        return VectorBlock(arr)
    if n != s:
        raise MatrixFileError(f"{spath}: kind {kind!r} payload is not square")
    scale = np.linalg.norm(arr)
    if scale > 0:
        dev = np.linalg.norm(arr - arr.conj().T)
        if dev > 1e-10 * scale:
            raise SymmetryViolation(
                f"{spath}: Hermitian deviation {dev:.3e} exceeds 1e-10 * ||M||"
            )
    return HermitianDenseMatrix(arr, rtol=np.inf)


def _read_matrix_market(path):
    m = scipy.io.mmread(path)
    arr = np.asarray(m.todense() if hasattr(m, "todense") else m, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise MatrixFileError(f"{path}: expected a square matrix")
    scale = np.linalg.norm(arr)
    if scale > 0:
        dev = np.linalg.norm(arr - arr.conj().T)
        if dev > 1e-10 * scale:
            raise SymmetryViolation(
                f"{path}: Hermitian deviation {dev:.3e} exceeds 1e-10 * ||M||"
            )
    return HermitianDenseMatrix(arr, rtol=np.inf)


def normalize_phase(block):
    """Rotate each column so its largest-magnitude entry is real positive.

    Output-side normalization only: it makes text-level diffs of
    eigenvector files meaningful without touching solver internals.
    """
    arr = np.array(_asarray(block), order="F")
    for j in range(arr.shape[1]):
        i = int(np.argmax(np.abs(arr[:, j])))
        pivot = arr[i, j]
        mag = abs(pivot)
        if mag > 0:
            arr[:, j] *= np.conj(pivot) / mag
            arr[i, j] = mag  # exact, kills the rounding residue in Im
    return arr


# ----------------------------------------------------------------------
# run configuration

DEFAULTS = {
    # solver
    "nev": 35,
    "tol": 1e-10,
    "max_outer_iters": 30,
    "degree": 20,
    "lanczos_steps": 10,
    "buffer": None,
    # sequence generator (the default preset)
    "n": 500,
    "N": 13,
    "delta0": 0.1,
    "rho": 0.5,
    "seed": 11,
    "kind": "standard",
    "vary_b": False,
    "band_max": 4.5,
    "gap": 1.2,
    "spread": 10.0,
    # run-level
    "mode": "both",
    "workers": 1,
    "out_csv": "sequence_report.csv",
    "out_prefix": "chfsi_out",
    "repeats": 5,
}

_BOOL_WORDS = {"true": True, "yes": True, "1": True,
               "false": False, "no": False, "0": False}


@dataclass
class RunConfig:
    nev: int = DEFAULTS["nev"]
    tol: float = DEFAULTS["tol"]
    max_outer_iters: int = DEFAULTS["max_outer_iters"]
    degree: int = DEFAULTS["degree"]
    lanczos_steps: int = DEFAULTS["lanczos_steps"]
    buffer: int | None = DEFAULTS["buffer"]
    n: int = DEFAULTS["n"]
    N: int = DEFAULTS["N"]
    delta0: float = DEFAULTS["delta0"]
    rho: float = DEFAULTS["rho"]
    seed: int = DEFAULTS["seed"]
    kind: str = DEFAULTS["kind"]
    vary_b: bool = DEFAULTS["vary_b"]
    band_max: float = DEFAULTS["band_max"]
    gap: float = DEFAULTS["gap"]
    spread: float = DEFAULTS["spread"]
    mode: str = DEFAULTS["mode"]
    workers: int = DEFAULTS["workers"]
    out_csv: str = DEFAULTS["out_csv"]
    out_prefix: str = DEFAULTS["out_prefix"]
    repeats: int = DEFAULTS["repeats"]

    def solver_config(self):
        return SolverConfig(
            nev=self.nev,
            tol=self.tol,
            max_outer_iters=self.max_outer_iters,
            degree=self.degree,
            lanczos_steps=self.lanczos_steps,
            buffer=self.buffer,
        )

    def sequence_spec(self):
        return SequenceSpec(
            n=self.n,
            N=self.N,
            nev=self.nev,
            delta0=self.delta0,
            rho=self.rho,
            seed=self.seed,
            kind=self.kind,
            vary_b=self.vary_b,
            band_max=self.band_max,
            gap=self.gap,
            spread=self.spread,
        )

    def canonical_text(self):
        lines = []
        for f in sorted(fields(self), key=lambda f: f.name):
            lines.append(f"{f.name} = {getattr(self, f.name)}")
        return "\n".join(lines) + "\n"


def _convert(key, raw, target):
    if target is bool:
        word = raw.strip().lower()
        if word not in _BOOL_WORDS:
            raise ConfigError(f"key {key!r}: expected a boolean, got {raw!r}")
        return _BOOL_WORDS[word]
    try:
        return target(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from None


def parse_run_config(text):
    """Parse key = value text into a RunConfig; unknown keys are errors."""
    types = {
        "nev": int, "tol": float, "max_outer_iters": int, "degree": int,
        "lanczos_steps": int, "buffer": int,
        "n": int, "N": int, "delta0": float, "rho": float, "seed": int,
        "kind": str, "vary_b": bool,
        "band_max": float, "gap": float, "spread": float,
        "mode": str, "workers": int, "out_csv": str, "out_prefix": str,
        "repeats": int,
    }
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if key == "buffer" and raw.lower() in ("none", "auto"):
            values[key] = None
        else:
            values[key] = _convert(key, raw, types[key])
    cfg = RunConfig(**values)
    if cfg.mode not in ("reuse", "random", "both"):
        raise ConfigError(f"mode must be reuse, random or both, got {cfg.mode!r}")
    if cfg.kind not in ("standard", "generalized"):
        raise ConfigError(f"kind must be standard or generalized, got {cfg.kind!r}")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    return cfg


def read_run_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_run_config(fh.read())


def config_hash(cfg):
    """Short stable hash identifying a RunConfig (carried in benchmark CSVs)."""
    return hashlib.sha256(cfg.canonical_text().encode()).hexdigest()[:12]


# ----------------------------------------------------------------------
# sequence serialization: one file per cycle plus a manifest


def save_sequence(seq, directory, stem="cycle"):
    """Write every cycle of a ProblemSequence plus a manifest file.

    Returns the manifest path. Files land in `directory` as
    <stem>_0001_A.mat (+ _B.mat for generalized problems).
    """
    import os

    os.makedirs(directory, exist_ok=True)
    spec = seq.spec
    lines = ["# chfsi sequence manifest"]
    for f in fields(spec):
        lines.append(f"{f.name} = {getattr(spec, f.name)}")
    for ell, (a_mat, b_mat) in enumerate(seq.problems, start=1):
        a_name = f"{stem}_{ell:04d}_A.mat"
        write_matrix(os.path.join(directory, a_name), a_mat, kind="hermitian")
        if b_mat is not None:
            b_name = f"{stem}_{ell:04d}_B.mat"
            write_matrix(os.path.join(directory, b_name), b_mat, kind="spd")
            lines.append(f"cycle {ell}: {a_name} {b_name}")
        else:
            lines.append(f"cycle {ell}: {a_name}")
    manifest = os.path.join(directory, f"{stem}_manifest.txt")
    with open(manifest, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return manifest


def load_sequence(manifest_path):
    """Rebuild a ProblemSequence from a manifest written by save_sequence."""
    import os

    base = os.path.dirname(os.path.abspath(manifest_path))
    spec_types = {
        "n": int, "N": int, "nev": int, "delta0": float, "rho": float,
        "seed": int, "kind": str, "vary_b": bool,
        "band_max": float, "gap": float, "spread": float,
    }
    spec_vals = {}
    cycles = []
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for line in fh:
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if body.startswith("cycle "):
                _, rest = body.split(" ", 1)
                idx, names = rest.split(":", 1)
                cycles.append((int(idx), names.split()))
            elif "=" in body:
                key, raw = (p.strip() for p in body.split("=", 1))
                if key not in spec_types:
                    raise ConfigError(f"manifest: unknown spec key {key!r}")
                if spec_types[key] is bool:
                    spec_vals[key] = raw.lower() in ("true", "yes", "1")
                else:
                    spec_vals[key] = spec_types[key](raw)
    spec = SequenceSpec(**spec_vals)
    cycles.sort()
    problems = []
    for _, names in cycles:
        a_mat = read_matrix(os.path.join(base, names[0]))
        b_mat = read_matrix(os.path.join(base, names[1])) if len(names) > 1 else None
        problems.append((a_mat, b_mat))
    if len(problems) != spec.N:
        raise ConfigError(
            f"manifest lists {len(problems)} cycles but spec says N = {spec.N}"
        )
    return ProblemSequence(spec=spec, problems=problems)
