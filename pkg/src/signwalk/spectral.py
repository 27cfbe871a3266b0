"""Spectral vectors of ensemble members, with fixed-trace and pairing checks.

The spectrum of a realsym member is the ordinary symmetric eigendecomposition;
an antisym member stored as the real coefficient matrix A is diagonalised as
the Hermitian operator H = iA, giving real eigenvalues in exact +- pairs (and
one pinned zero mode when N is odd); a rect member contributes the M
eigenvalues of its Gram matrix W = B^T B.  Values are always ascending.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .ensemble import (EnsembleKind, IMAGINARY_ANTISYMMETRIC, REAL_SYMMETRIC,
                       RECTANGULAR, ScaledMatrix)


class NumericalError(RuntimeError):
    """Eigendecomposition failure, tagged with a hash of the offending matrix."""


@dataclass(frozen=True, eq=False)
class Spectrum:
    kind: EnsembleKind
    values: np.ndarray
    trace2: float
    pair_index: np.ndarray | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if np.any(np.diff(vals) < 0):
            raise ValueError("spectrum must be ascending")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Orthonormal eigenvector columns aligned with Spectrum.values."""

    vectors: np.ndarray
    sup_norms: np.ndarray


def _matrix_hash(arr: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(arr).tobytes()).hexdigest()[:16]


def spectrum(m: ScaledMatrix) -> tuple[Spectrum, EigenBasis]:
    """Eigendecomposition of one ensemble member; ascending, stable tie order."""
    kind = m.kind
    if kind.family == RECTANGULAR:
        operand = m.array.T @ m.array
    elif kind.family == IMAGINARY_ANTISYMMETRIC:
        operand = 1j * m.array
    else:
        operand = m.array
    try:
        vals, vecs = np.linalg.eigh(operand)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigh failed for {kind.family} matrix {_matrix_hash(m.array)}") from exc

    if kind.family == RECTANGULAR:
        trace2 = float(np.sum(vals))
    else:
        trace2 = float(np.sum(vals ** 2))
    pair_index = None
    if kind.family == IMAGINARY_ANTISYMMETRIC:
        pair_index = np.arange(kind.n)[::-1].copy()  # ascending +- pairs mirror
    sup = np.max(np.abs(vecs), axis=0)
    return (Spectrum(kind, vals, trace2, pair_index), EigenBasis(vecs, sup))


def spectrum_values(m: ScaledMatrix) -> np.ndarray:
    """Eigenvalues only (cheaper when no basis is needed)."""
    kind = m.kind
    if kind.family == RECTANGULAR:
        operand = m.array.T @ m.array
    elif kind.family == IMAGINARY_ANTISYMMETRIC:
        operand = 1j * m.array
    else:
        operand = m.array
    try:
        return np.linalg.eigvalsh(operand)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigvalsh failed for {kind.family} matrix {_matrix_hash(m.array)}") from exc


def positive_half(spec: Spectrum, zero_tol: float = 1e-10) -> np.ndarray:
    """Ascending positive eigenvalues of an antisym spectrum.

    For odd N the single zero mode (|lambda| <= zero_tol) is excluded; the
    negation symmetry of the input is assumed, not re-checked.
    """
    if spec.kind.family != IMAGINARY_ANTISYMMETRIC:
        raise ValueError("positive_half applies to the antisym family")
    return spec.values[spec.values > zero_tol]


def zero_modes(values: np.ndarray, zero_tol: float = 1e-10) -> int:
    return int(np.count_nonzero(np.abs(np.asarray(values)) <= zero_tol))


@dataclass(frozen=True)
class DelocalizationReport:
    sup_norms: np.ndarray
    participation: np.ndarray
    threshold: float
    flagged: np.ndarray


def delocalization_report(basis: EigenBasis, threshold: float = 5.0) -> DelocalizationReport:
    """Sup-norms and participation ratios 1/sum_p |v_p|^4 per eigenvector.

    Vectors whose sup-norm exceeds ``threshold * sqrt(log(N)/N)`` are flagged
    as suspiciously localized.
    """
    v = basis.vectors
    n = v.shape[0]
    amp2 = np.abs(v) ** 2
    sup = np.sqrt(np.max(amp2, axis=0))
    participation = 1.0 / np.sum(amp2 ** 2, axis=0)
    cut = threshold * np.sqrt(np.log(n) / n)
    return DelocalizationReport(sup, participation, cut, sup > cut)


@dataclass(frozen=True)
class GapReport:
    gaps: np.ndarray
    min_gap: float
    mean_gap: float


def gap_report(spec: Spectrum) -> GapReport:
    """Consecutive spacings of the ascending spectrum."""
    if spec.values.size < 2:
        raise ValueError("need at least two eigenvalues")
    gaps = np.diff(spec.values)
    return GapReport(gaps, float(gaps.min()), float(gaps.mean()))


def validate_spectrum(spec: Spectrum, rtol: float = 1e-10) -> None:
    """Assert the fixed-trace / pairing / positivity invariants."""
    kind, vals = spec.kind, spec.values
    if kind.family == RECTANGULAR:
        if np.any(vals < -1e-12):
            raise ValueError(f"negative Gram eigenvalue {vals.min()}")
        target = kind.trace_constant
        if abs(np.sum(vals) - target) > rtol * abs(target):
            raise ValueError("trace constraint violated")
        return
    target = kind.trace_constant
    if abs(np.sum(vals ** 2) - target) > rtol * abs(target):
        raise ValueError("trace constraint violated")
    if kind.family == IMAGINARY_ANTISYMMETRIC:
        if np.max(np.abs(np.sort(-vals) - vals)) > 1e-10:
            raise ValueError("spectrum not negation-symmetric")
        zeros = zero_modes(vals)
        if kind.n % 2 == 1 and zeros != 1:
            raise ValueError(f"odd N needs exactly one zero mode, found {zeros}")
        if kind.n % 2 == 0 and zeros != 0:
            raise ValueError(f"even N admits no zero mode, found {zeros}")
