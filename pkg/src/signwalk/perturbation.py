"""Eigenvalue shifts under sign flips: perturbation expansion and exact oracle.

The expansion for a simple eigenvalue lambda_nu of a Hermitian operator under
an additive change Delta, in terms of the unperturbed basis,

    first   <nu|Delta|nu>
    second  sum_{mu != nu} |<nu|Delta|mu>|^2 / (lambda_nu - lambda_mu)
    third   sum_{mu,kappa != nu} C_numu C_mukappa C_kappanu
                 / ((lambda_nu - lambda_mu)(lambda_nu - lambda_kappa))
            - C_nunu * sum_{mu != nu} |C_numu|^2 / (lambda_nu - lambda_mu)^2

with C = V^dag Delta V.  The relative minus sign between the two third-order
sums is required for the expansion to improve order by order (verified against
the exact recompute).  Near-degenerate spectra are refused, not regularised.

For the rect family the perturbed operator is the Gram matrix, so ``delta``
must be the assembled symmetric increment from :func:`wishart_increment`;
square families take the flip difference matrix directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ensemble import RECTANGULAR, ScaledMatrix
from .spectral import EigenBasis, Spectrum, spectrum, spectrum_values

GAP_FLOOR = 1e-9

Delta = ScaledMatrix | np.ndarray


class DegenerateSpectrumError(ValueError):
    """Spectrum too close to degenerate for the expansion to make sense."""


def matrix_elements(basis: EigenBasis, delta: Delta) -> np.ndarray:
    """C = V^dag Delta V in the eigenbasis.

    ``delta`` is a ScaledMatrix (square families; antisym promotes its real
    coefficient difference to the Hermitian iA form) or a plain symmetric
    array such as an assembled Gram increment.
    """
    operand = delta.hermitian() if isinstance(delta, ScaledMatrix) else delta
    v = basis.vectors
    if operand.shape != (v.shape[0], v.shape[0]):
        raise ValueError(f"operand shape {operand.shape} does not match basis")
    return v.conj().T @ operand @ v


def _inverse_gaps(spec: Spectrum) -> np.ndarray:
    lam = spec.values
    diff = lam[:, None] - lam[None, :]
    mask = np.eye(lam.size, dtype=bool)
    off = np.abs(np.where(mask, np.inf, diff))
    if off.min() <= GAP_FLOOR:
        raise DegenerateSpectrumError(
            f"minimum gap {off.min():.3e} at or below {GAP_FLOOR:.0e}")
    return 1.0 / np.where(mask, np.inf, diff)


def first_order(basis: EigenBasis, delta: Delta,
                elements: np.ndarray | None = None) -> np.ndarray:
    """Diagonal elements <nu|Delta|nu>; their sum is Tr(Delta)."""
    if elements is None:
        elements = matrix_elements(basis, delta)
    return np.real(np.diag(elements)).copy()


def second_order(spec: Spectrum, basis: EigenBasis, delta: Delta,
                 elements: np.ndarray | None = None) -> np.ndarray:
    if elements is None:
        elements = matrix_elements(basis, delta)
    inv = _inverse_gaps(spec)
    weights = np.abs(elements) ** 2
    return np.sum(weights * inv, axis=1)


def third_order(spec: Spectrum, basis: EigenBasis, delta: Delta,
                elements: np.ndarray | None = None) -> np.ndarray:
    if elements is None:
        elements = matrix_elements(basis, delta)
    inv = _inverse_gaps(spec)
    a = elements * inv  # a[nu, mu] = C_numu / (lam_nu - lam_mu), zero at mu = nu
    double = np.einsum("nm,mk,nk->n", a, elements, a.conj())
    diag = np.real(np.diag(elements))
    corr = diag * np.sum((np.abs(elements) ** 2) * inv ** 2, axis=1)
    return np.real(double) - corr


def exact_shift(m: ScaledMatrix, delta: ScaledMatrix) -> np.ndarray:
    """spectrum(m + delta) - spectrum(m), aligned by sorted order."""
    if m.kind != delta.kind:
        raise ValueError("matrix and perturbation kinds differ")
    return spectrum_values(m + delta) - spectrum_values(m)


def wishart_increment(b: ScaledMatrix, db: ScaledMatrix) -> np.ndarray:
    """Gram increment Delta W = B^T dB + dB^T B + dB^T dB, exactly symmetric."""
    if b.kind.family != RECTANGULAR or db.kind.family != RECTANGULAR:
        raise ValueError("Gram increments apply to the rect family")
    if b.kind != db.kind:
        raise ValueError("shape mismatch")
    cross = b.array.T @ db.array
    out = cross + cross.T + db.array.T @ db.array
    return (out + out.T) / 2.0


@dataclass(frozen=True)
class PerturbationReport:
    """Per-eigenvalue expansion orders, exact shifts and running residuals."""

    kind_family: str
    n: int
    flip_index: int
    first: np.ndarray
    second: np.ndarray
    third: np.ndarray
    exact: np.ndarray
    residuals: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "kind": self.kind_family,
            "N": self.n,
            "flip_index": self.flip_index,
            "residual_1": float(np.linalg.norm(self.exact - self.first)),
            "residual_2": float(np.linalg.norm(self.exact - self.first - self.second)),
            "residual_3": float(np.linalg.norm(
                self.exact - self.first - self.second - self.third)),
        }


def expansion_report(m: ScaledMatrix, delta: ScaledMatrix,
                     flip_index: int = -1,
                     pre: tuple[Spectrum, EigenBasis] | None = None) -> PerturbationReport:
    """All expansion orders plus the exact recompute for one perturbation."""
    spec, basis = pre if pre is not None else spectrum(m)
    operand: Delta = delta
    if m.kind.family == RECTANGULAR:
        operand = wishart_increment(m, delta)
    elements = matrix_elements(basis, operand)
    first = first_order(basis, operand, elements)
    second = second_order(spec, basis, operand, elements)
    third = third_order(spec, basis, operand, elements)
    exact = exact_shift(m, delta)
    report = PerturbationReport(m.kind.family, m.kind.n, flip_index,
                                first, second, third, exact)
    report.residuals.update(report.to_record())
    return report
