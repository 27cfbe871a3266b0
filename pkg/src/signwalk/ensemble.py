"""Bernoulli matrix ensembles and their sign-hypercube coordinates.

Three families of scaled +-1 matrices are supported, each parametrised by a
vector of independent signs (a vertex of a d-dimensional hypercube):

* ``realsym``  -- real symmetric N x N, off-diagonal entries ``+-sqrt(1/N)``,
  diagonal entries ``+-sqrt(2/N)``; d = N(N+1)/2.
* ``antisym``  -- imaginary antisymmetric (Hermitian) N x N with entries
  ``+-i/sqrt(N)`` off the diagonal and zero diagonal; d = N(N-1)/2.  Matrices
  are stored as the real antisymmetric coefficient matrix A with H = iA, so
  no complex storage is needed.
* ``rect``     -- real N x M with every entry ``+-1/sqrt(N)``; d = N*M.

All values here are immutable after construction and safe to share between
workers.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

REAL_SYMMETRIC = "realsym"
IMAGINARY_ANTISYMMETRIC = "antisym"
RECTANGULAR = "rect"
FAMILIES = (REAL_SYMMETRIC, IMAGINARY_ANTISYMMETRIC, RECTANGULAR)


class ConfigurationError(ValueError):
    """Raised for invalid ensemble dimensions or malformed parameters."""


@dataclass(frozen=True)
class EnsembleKind:
    """Which Bernoulli family, plus its matrix dimensions."""

    family: str
    n: int
    m: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}")
        if self.family == RECTANGULAR:
            if self.m is None:
                raise ConfigurationError("rectangular kind needs both N and M")
            if not (self.n >= self.m >= 1):
                raise ConfigurationError(f"need N >= M >= 1, got N={self.n}, M={self.m}")
        else:
            if self.m is not None:
                raise ConfigurationError(f"{self.family} takes no M parameter")
            if self.n < 2:
                raise ConfigurationError(f"need N >= 2, got N={self.n}")

    @property
    def dimension(self) -> int:
        """Number of independent signs (the hypercube dimension d)."""
        if self.family == REAL_SYMMETRIC:
            return self.n * (self.n + 1) // 2
        if self.family == IMAGINARY_ANTISYMMETRIC:
            return self.n * (self.n - 1) // 2
        return self.n * self.m

    @property
    def shape(self) -> tuple[int, int]:
        if self.family == RECTANGULAR:
            return (self.n, self.m)
        return (self.n, self.n)

    @property
    def spectrum_size(self) -> int:
        """Length of the spectral vector (N, or M for the Gram-matrix family)."""
        return self.m if self.family == RECTANGULAR else self.n

    @property
    def trace_constant(self) -> float:
        """Value of the fixed trace: Tr(B^2) resp. Tr(H^dag H) resp. Tr(W)."""
        if self.family == RECTANGULAR:
            return float(self.m)
        return 2.0 * self.dimension / self.n


def real_symmetric(n: int) -> EnsembleKind:
    return EnsembleKind(REAL_SYMMETRIC, n)


def imaginary_antisymmetric(n: int) -> EnsembleKind:
    return EnsembleKind(IMAGINARY_ANTISYMMETRIC, n)


def rectangular(n: int, m: int) -> EnsembleKind:
    return EnsembleKind(RECTANGULAR, n, m)


def dimension(kind: EnsembleKind) -> int:
    return kind.dimension


@functools.lru_cache(maxsize=64)
def _entry_table(kind: EnsembleKind) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row/column/magnitude arrays for the flat index -> entry bijection.

    The flat order is row-major: realsym enumerates p <= q including the
    diagonal, antisym enumerates p < q, rect enumerates all (p, q).
    """
    n = kind.n
    if kind.family == REAL_SYMMETRIC:
        rows, cols = np.triu_indices(n)
        mags = np.where(rows == cols, np.sqrt(2.0 / n), np.sqrt(1.0 / n))
    elif kind.family == IMAGINARY_ANTISYMMETRIC:
        rows, cols = np.triu_indices(n, k=1)
        mags = np.full(rows.shape, 1.0 / np.sqrt(n))
    else:
        rows, cols = np.divmod(np.arange(kind.dimension), kind.m)
        mags = np.full(rows.shape, 1.0 / np.sqrt(n))
    rows.setflags(write=False)
    cols.setflags(write=False)
    mags.setflags(write=False)
    return rows, cols, mags


def index_to_entry(kind: EnsembleKind, i: int) -> tuple[int, int]:
    """Matrix entry (p, q) owned by flat sign index ``i``."""
    if not 0 <= i < kind.dimension:
        raise IndexError(f"flat index {i} out of range for d={kind.dimension}")
    rows, cols, _ = _entry_table(kind)
    return int(rows[i]), int(cols[i])


def entry_to_index(kind: EnsembleKind, p: int, q: int) -> int:
    """Inverse of :func:`index_to_entry`; (p, q) must be an independent entry."""
    n = kind.n
    if kind.family == REAL_SYMMETRIC:
        if not 0 <= p <= q < n:
            raise IndexError(f"need 0 <= p <= q < N, got ({p}, {q})")
        return p * n - p * (p - 1) // 2 + (q - p)
    if kind.family == IMAGINARY_ANTISYMMETRIC:
        if not 0 <= p < q < n:
            raise IndexError(f"need 0 <= p < q < N, got ({p}, {q})")
        return p * n - p * (p + 1) // 2 + (q - p - 1)
    if not (0 <= p < n and 0 <= q < kind.m):
        raise IndexError(f"entry ({p}, {q}) outside {kind.shape}")
    return p * kind.m + q


@dataclass(frozen=True, eq=False)
class SignVector:
    """A hypercube vertex: the independent +-1 signs of one matrix.

    Serialises to hex with bit ``1`` meaning sign ``-1`` and the
    most-significant bit of the first hex digit holding index 0.
    """

    kind: EnsembleKind
    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=np.int8)
        if arr.shape != (self.kind.dimension,):
            raise ConfigurationError(
                f"expected {self.kind.dimension} signs, got shape {arr.shape}")
        if not np.all(np.abs(arr) == 1):
            raise ConfigurationError("signs must be +-1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SignVector) and self.kind == other.kind
                and np.array_equal(self.bits, other.bits))

    def flip(self, i: int) -> "SignVector":
        if not 0 <= i < self.kind.dimension:
            raise IndexError(f"flip index {i} out of range")
        new = self.bits.copy()
        new[i] = -new[i]
        return SignVector(self.kind, new)

    def hamming(self, other: "SignVector") -> int:
        if self.kind != other.kind:
            raise ConfigurationError("Hamming distance needs matching kinds")
        return int(np.count_nonzero(self.bits != other.bits))

    def to_hex(self) -> str:
        packed = np.packbits(self.bits < 0)
        return packed.tobytes().hex()

    @classmethod
    def from_hex(cls, kind: EnsembleKind, text: str) -> "SignVector":
        d = kind.dimension
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        if raw.size * 8 < d:
            raise ConfigurationError(f"hex string too short for d={d}")
        flags = np.unpackbits(raw)[:d]
        return cls(kind, np.where(flags == 1, -1, 1).astype(np.int8))

    @classmethod
    def all_plus(cls, kind: EnsembleKind) -> "SignVector":
        return cls(kind, np.ones(kind.dimension, dtype=np.int8))

    @classmethod
    def uniform(cls, kind: EnsembleKind, rng: np.random.Generator) -> "SignVector":
        bits = rng.integers(0, 2, size=kind.dimension, dtype=np.int8) * 2 - 1
        return cls(kind, bits)


@dataclass(frozen=True, eq=False)
class ScaledMatrix:
    """Dense array realisation of one ensemble member (or a difference of two).

    For the antisym family ``array`` holds the real antisymmetric coefficient
    matrix A of H = iA; elsewhere it holds the matrix itself.
    """

    kind: EnsembleKind
    array: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.array, dtype=np.float64)
        if arr.shape != self.kind.shape:
            raise ConfigurationError(f"expected shape {self.kind.shape}, got {arr.shape}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ScaledMatrix) and self.kind == other.kind
                and np.array_equal(self.array, other.array))

    def __add__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        if self.kind != other.kind:
            raise ConfigurationError("cannot add matrices of different kinds")
        return ScaledMatrix(self.kind, self.array + other.array)

    def hermitian(self) -> np.ndarray:
        """The Hermitian operator whose spectrum is studied (iA for antisym)."""
        if self.kind.family == IMAGINARY_ANTISYMMETRIC:
            return 1j * self.array
        return self.array


def realize_array(signs: SignVector) -> np.ndarray:
    kind = signs.kind
    rows, cols, mags = _entry_table(kind)
    vals = signs.bits * mags
    out = np.zeros(kind.shape)
    if kind.family == RECTANGULAR:
        out[rows, cols] = vals
    elif kind.family == REAL_SYMMETRIC:
        out[rows, cols] = vals
        out[cols, rows] = vals
    else:
        out[rows, cols] = vals
        out[cols, rows] = -vals
    return out


def realize(signs: SignVector) -> ScaledMatrix:
    """Scaled matrix corresponding to a sign vector."""
    return ScaledMatrix(signs.kind, realize_array(signs))


def flip_delta(signs: SignVector, i: int) -> ScaledMatrix:
    """Difference matrix ``realize(signs.flip(i)) - realize(signs)``.

    Rank 1 for diagonal/rectangular entries, rank 2 otherwise; flipping the
    same index twice sums to zero.
    """
    kind = signs.kind
    if not 0 <= i < kind.dimension:
        raise IndexError(f"flip index {i} out of range")
    rows, cols, mags = _entry_table(kind)
    p, q, change = int(rows[i]), int(cols[i]), -2.0 * signs.bits[i] * mags[i]
    out = np.zeros(kind.shape)
    out[p, q] = change
    if kind.family == REAL_SYMMETRIC and p != q:
        out[q, p] = change
    elif kind.family == IMAGINARY_ANTISYMMETRIC:
        out[q, p] = -change
    return ScaledMatrix(kind, out)


def validate_member(m: ScaledMatrix, rtol: float = 1e-12) -> None:
    """Check the entry magnitudes, symmetry and fixed-trace invariants."""
    kind, a = m.kind, m.array
    n = kind.n
    if kind.family == REAL_SYMMETRIC:
        if not np.array_equal(a, a.T):
            raise ConfigurationError("matrix is not symmetric")
        if not (np.allclose(np.abs(np.diag(a)), np.sqrt(2.0 / n), rtol=rtol)
                and np.allclose(np.abs(a - np.diag(np.diag(a)))[~np.eye(n, dtype=bool)],
                                np.sqrt(1.0 / n), rtol=rtol)):
            raise ConfigurationError("entry magnitudes off")
        trace = float(np.sum(a * a))
    elif kind.family == IMAGINARY_ANTISYMMETRIC:
        if not np.array_equal(a, -a.T):
            raise ConfigurationError("coefficient matrix is not antisymmetric")
        if np.any(np.diag(a) != 0.0):
            raise ConfigurationError("diagonal must vanish")
        off = np.abs(a[~np.eye(n, dtype=bool)])
        if not np.allclose(off, 1.0 / np.sqrt(n), rtol=rtol):
            raise ConfigurationError("entry magnitudes off")
        trace = float(np.sum(a * a))
    else:
        if not np.allclose(np.abs(a), 1.0 / np.sqrt(n), rtol=rtol):
            raise ConfigurationError("entry magnitudes off")
        trace = float(np.sum(a * a))
    target = kind.trace_constant
    if abs(trace - target) > rtol * abs(target):
        raise ConfigurationError(f"trace constraint violated: {trace} vs {target}")
