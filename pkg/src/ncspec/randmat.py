"""Seeded matrix ensembles, deterministic-matrix generators, and dense
eigen/singular-value helpers.

Sampling is a pure function of (dist, N, seed, stream): the bit generator is
counter-based (Philox) keyed by the (seed, stream) pair, so substreams are
independent and results do not depend on evaluation order or parallel
scheduling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

__all__ = [
    "COMPLEX_GAUSSIAN",
    "REAL_GAUSSIAN",
    "RADEMACHER",
    "EnsembleSpec",
    "DiagSpec",
    "BalancedSign",
    "GueRealization",
    "FromFile",
    "DetGenerator",
    "NonFiniteError",
    "SizeError",
    "FileFormatError",
    "sample_iid",
    "eigenvalues",
    "smallest_singular",
    "generate_deterministic",
    "read_matrix_csv",
    "write_matrix_csv",
    "read_eigenvalues_csv",
    "write_eigenvalues_csv",
]

COMPLEX_GAUSSIAN = "complex-gaussian"
REAL_GAUSSIAN = "real-gaussian"
RADEMACHER = "rademacher"

_DISTS = (COMPLEX_GAUSSIAN, REAL_GAUSSIAN, RADEMACHER)


class NonFiniteError(ValueError):
    """Matrix contains nan/inf entries."""


class SizeError(ValueError):
    """Requested dimension cannot hold the generator's data."""


class FileFormatError(ValueError):
    """Matrix/eigenvalue CSV file is malformed."""


@dataclass(frozen=True)
class EnsembleSpec:
    """I.i.d. entry ensemble: mean 0, variance 1 per entry (the model's
    1/sqrt(N) scaling is applied at evaluation time, not here)."""

    dist: str
    N: int
    seed: int
    stream: int = 0

    def __post_init__(self):
        if self.dist not in _DISTS:
            raise ValueError(f"unknown ensemble {self.dist!r}; pick one of {_DISTS}")
        if self.N < 1:
            raise SizeError(f"N must be >= 1, got {self.N}")


def _rng(seed: int, stream: int) -> np.random.Generator:
    key = np.array([seed % 2**64, stream % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_iid(spec: EnsembleSpec) -> np.ndarray:
    """One N×N draw; deterministic in (dist, N, seed, stream)."""
    rng = _rng(spec.seed, spec.stream)
    n = spec.N
    if spec.dist == COMPLEX_GAUSSIAN:
        # Re and Im independent N(0, 1/2) so the entry variance is 1
        return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) \
            / np.sqrt(2)
    if spec.dist == REAL_GAUSSIAN:
        return rng.standard_normal((n, n)).astype(complex)
    return (2.0 * rng.integers(0, 2, size=(n, n)) - 1.0).astype(complex)


def _check_finite(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(M)):
        raise NonFiniteError("matrix has non-finite entries")
    return M


def eigenvalues(M: np.ndarray) -> np.ndarray:
    """All eigenvalues (with multiplicity, no ordering guarantee)."""
    return np.linalg.eigvals(_check_finite(M))


def smallest_singular(M: np.ndarray) -> float:
    """Least singular value s_N(M)."""
    return float(np.linalg.svd(_check_finite(M), compute_uv=False)[-1])


# ---------------------------------------------------------------------------
# Deterministic generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagSpec:
    """diag(values, 0, ..., 0) padded with zeros to N."""

    values: tuple

    def __init__(self, values):
        object.__setattr__(self, "values", tuple(complex(v) for v in values))


@dataclass(frozen=True)
class BalancedSign:
    """diag(+1 ... +1, -1 ... -1), first half +1 (odd N gets the extra +1)."""


@dataclass(frozen=True)
class GueRealization:
    """Hermitian with entry variance 1/N: spectrum converges to [-2, 2]."""

    seed: int


@dataclass(frozen=True)
class FromFile:
    """Matrix read from CSV (see read_matrix_csv for the token format)."""

    path: str


DetGenerator = Union[DiagSpec, BalancedSign, GueRealization, FromFile]


def generate_deterministic(g: DetGenerator, N: int) -> np.ndarray:
    if N < 1:
        raise SizeError(f"N must be >= 1, got {N}")
    if isinstance(g, DiagSpec):
        if len(g.values) > N:
            raise SizeError(
                f"DiagSpec has {len(g.values)} values but N = {N}"
            )
        d = np.zeros(N, dtype=complex)
        d[: len(g.values)] = g.values
        return np.diag(d)
    if isinstance(g, BalancedSign):
        plus = (N + 1) // 2
        return np.diag(np.array([1.0] * plus + [-1.0] * (N - plus), dtype=complex))
    if isinstance(g, GueRealization):
        rng = _rng(g.seed, 0)
        gmat = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) \
            / np.sqrt(2)
        return (gmat + gmat.conj().T) / np.sqrt(2 * N)
    if isinstance(g, FromFile):
        mat = read_matrix_csv(g.path)
        if mat.shape != (N, N):
            raise SizeError(
                f"{g.path} holds a {mat.shape[0]}x{mat.shape[1]} matrix, "
                f"expected {N}x{N}"
            )
        return mat
    raise TypeError(f"unknown deterministic generator {type(g).__name__}")


# ---------------------------------------------------------------------------
# CSV formats
# ---------------------------------------------------------------------------

_TOKEN_CHARS = re.compile(r"^[0-9.eE+\-i]+$")


def _format_complex_token(value: complex) -> str:
    re_, im = float(value.real), float(value.imag)
    if im == 0:
        return repr(re_)
    imtxt = f"{repr(abs(im))}i"
    if re_ == 0:
        return ("-" if im < 0 else "") + imtxt
    return f"{repr(re_)}{'+' if im >= 0 else '-'}{imtxt}"


def _parse_complex_token(token: str) -> complex:
    """Tokens look like '2', '-1.5', '2i', '1+2i', '3-0.5i', '1e-3+2e-3i'."""
    text = token.strip().replace(" ", "")
    if not text:
        raise FileFormatError("empty matrix entry")
    if not _TOKEN_CHARS.match(text):
        raise FileFormatError(f"cannot parse complex entry {token!r}")
    # bare/signed 'i' means coefficient 1; then hand off to complex()
    text = re.sub(r"(?<![0-9.])i", "1i", text)
    try:
        return complex(text.replace("i", "j"))
    except ValueError:
        raise FileFormatError(f"cannot parse complex entry {token!r}") from None


def write_matrix_csv(path, M: np.ndarray) -> None:
    M = np.asarray(M, dtype=complex)
    lines = [",".join(_format_complex_token(x) for x in row) for row in M]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise FileFormatError(f"cannot read {path}: {err}")
    rows = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rows.append([_parse_complex_token(tok) for tok in line.split(",")])
    if not rows:
        raise FileFormatError(f"{path} holds no matrix rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise FileFormatError(f"{path} has ragged rows")
    return np.array(rows, dtype=complex)


def write_eigenvalues_csv(path, values) -> None:
    lines = ["re,im"]
    for z in values:
        z = complex(z)
        lines.append(f"{repr(z.real)},{repr(z.imag)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_eigenvalues_csv(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip().lower() != "re,im":
        raise FileFormatError(f"{path} is not an eigenvalue CSV (missing header)")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise FileFormatError(f"bad eigenvalue row {line!r}")
        out.append(complex(float(parts[0]), float(parts[1])))
    return np.array(out, dtype=complex)
