"""Closed-form references: drift/diffusion coefficients, stationary log-densities,
limiting spectral laws and the Ornstein-Uhlenbeck coefficients.

Conventions.  Drift and diffusion are the first and second moments of
eigenvalue increments per unit rescaled time eta = t/d.  For the antisym
family the coordinates are the positive half-spectrum (eigenvalues come in
+- pairs); for odd N the pinned zero mode exerts an extra repulsive force
4/(N lambda).  For the rect family the coordinates are eigenvalues of the
Gram matrix W.

Log-densities are unnormalised and restricted to the fixed-trace surface;
only differences are meaningful.  The unconstrained surrogate density
``Q~`` (fixed-trace factor replaced by the matching Gaussian/Laguerre
weight) enters the detailed-balance identity

    drift = (diffusion / 2) * d(log Q~)/d(lambda) + (1/2) d(diffusion)/d(lambda),

which holds exactly in algebra for all three families and is the
machine-checkable statement that the implemented coefficient pairs have the
stated stationary laws.
"""

from __future__ import annotations

import functools
import math

import numpy as np

from .ensemble import (EnsembleKind, IMAGINARY_ANTISYMMETRIC, REAL_SYMMETRIC,
                       RECTANGULAR)


class SingularSpectrumError(ValueError):
    """Coincident (or nonpositive, where positivity is required) eigenvalues."""


def _check_simple(lam: np.ndarray, positive: bool = False) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1:
        raise ValueError("expected a 1-d spectrum")
    if np.any(np.diff(np.sort(lam)) <= 1e-12):
        raise SingularSpectrumError("coincident eigenvalues")
    if positive and np.any(lam <= 0):
        raise SingularSpectrumError("positive half-spectrum required")
    return lam


def _inverse_gap_sums(lam: np.ndarray) -> np.ndarray:
    """sum_{mu != nu} 1/(lam_nu - lam_mu) for every nu."""
    diff = lam[:, None] - lam[None, :]
    np.fill_diagonal(diff, np.inf)
    return np.sum(1.0 / diff, axis=1)


def drift(kind: EnsembleKind, lam: np.ndarray) -> np.ndarray:
    """Per-eigenvalue drift coefficient at the spectrum ``lam``."""
    n = kind.n
    if kind.family == REAL_SYMMETRIC:
        lam = _check_simple(lam)
        return -2.0 * lam + (4.0 / n) * _inverse_gap_sums(lam)
    if kind.family == IMAGINARY_ANTISYMMETRIC:
        lam = _check_simple(lam, positive=True)
        diff = lam[:, None] - lam[None, :]
        summ = lam[:, None] + lam[None, :]
        np.fill_diagonal(diff, np.inf)
        np.fill_diagonal(summ, np.inf)
        pair_force = np.sum(1.0 / diff + 1.0 / summ, axis=1)
        out = -2.0 * lam + (4.0 / n) * pair_force
        if n % 2 == 1:
            out += 4.0 / (n * lam)
        return out
    lam = _check_simple(lam, positive=True)
    if lam.size != kind.m:
        raise ValueError(f"Gram spectra carry exactly M={kind.m} eigenvalues")
    diff = lam[:, None] - lam[None, :]
    summ = lam[:, None] + lam[None, :]
    np.fill_diagonal(diff, np.inf)
    return 4.0 * (1.0 - lam) + (4.0 / n) * np.sum(summ / diff, axis=1)


def diffusion(kind: EnsembleKind, lam: np.ndarray) -> np.ndarray:
    """Per-eigenvalue diffusion coefficient: 8/N, 4/N, or 16 lambda / N."""
    lam = np.asarray(lam, dtype=float)
    n = kind.n
    if kind.family == REAL_SYMMETRIC:
        return np.full(lam.shape, 8.0 / n)
    if kind.family == IMAGINARY_ANTISYMMETRIC:
        return np.full(lam.shape, 4.0 / n)
    return 16.0 * lam / n


def diffusion_gradient(kind: EnsembleKind, lam: np.ndarray) -> np.ndarray:
    """d(diffusion)/d(lambda): zero except 16/N for the rect family."""
    lam = np.asarray(lam, dtype=float)
    if kind.family == RECTANGULAR:
        return np.full(lam.shape, 16.0 / kind.n)
    return np.zeros(lam.shape)


def log_jpdf(kind: EnsembleKind, lam: np.ndarray,
             trace_target: float | None = None) -> float:
    """Unnormalised stationary log-density on the fixed-trace surface.

    ``trace_target`` overrides the ensemble's nominal trace constant (useful
    for rescaled synthetic fixtures).  Coincident eigenvalues return -inf;
    a violated trace constraint raises.  For even-N antisym spectra the
    zero-mode factor is absent (no pinned zero eigenvalue) -- experimental,
    since only the odd-N law has a closed form to compare against.
    """
    lam = np.asarray(lam, dtype=float)
    n, fam = kind.n, kind.family
    if fam == RECTANGULAR:
        trace = float(np.sum(lam))
    elif fam == IMAGINARY_ANTISYMMETRIC:
        trace = float(np.sum(lam ** 2))  # pair-sum: half the full-spectrum trace
    else:
        trace = float(np.sum(lam ** 2))
    if trace_target is None:
        trace_target = kind.trace_constant
        if fam == IMAGINARY_ANTISYMMETRIC:
            trace_target /= 2.0
    if abs(trace - trace_target) > 1e-8 * max(1.0, abs(trace_target)):
        raise ValueError(f"trace constraint violated: {trace} vs {trace_target}")

    if fam == REAL_SYMMETRIC:
        gaps = np.abs(lam[:, None] - lam[None, :])[np.triu_indices(lam.size, k=1)]
        if np.any(gaps == 0.0):
            return -math.inf
        return float(np.sum(np.log(gaps)))
    if fam == IMAGINARY_ANTISYMMETRIC:
        if np.any(lam <= 0):
            return -math.inf
        sq = lam ** 2
        gaps = np.abs(sq[:, None] - sq[None, :])[np.triu_indices(lam.size, k=1)]
        if np.any(gaps == 0.0):
            return -math.inf
        out = 2.0 * float(np.sum(np.log(gaps)))
        if n % 2 == 1:
            out += 2.0 * float(np.sum(np.log(lam)))
        return out
    if np.any(lam < 0):
        return -math.inf
    gaps = np.abs(lam[:, None] - lam[None, :])[np.triu_indices(lam.size, k=1)]
    if np.any(gaps == 0.0):
        return -math.inf
    exponent = (kind.n - kind.m + 1) / 2.0 - 1.0
    if np.any(lam == 0.0):
        if exponent > 0:
            return -math.inf
        if exponent < 0:
            return math.inf
        lam = lam[lam > 0]  # lambda^0 factors drop out
    return float(exponent * np.sum(np.log(lam)) + np.sum(np.log(gaps)))


def surrogate_log_density_gradient(kind: EnsembleKind, lam: np.ndarray) -> np.ndarray:
    """Gradient of log Q~ for the unconstrained surrogate density."""
    n = kind.n
    if kind.family == REAL_SYMMETRIC:
        lam = _check_simple(lam)
        return _inverse_gap_sums(lam) - n * lam / 2.0
    if kind.family == IMAGINARY_ANTISYMMETRIC:
        lam = _check_simple(lam, positive=True)
        sq = lam ** 2
        diff = sq[:, None] - sq[None, :]
        np.fill_diagonal(diff, np.inf)
        out = 4.0 * lam * np.sum(1.0 / diff, axis=1) - n * lam
        if n % 2 == 1:
            out += 2.0 / lam
        return out
    lam = _check_simple(lam, positive=True)
    if lam.size != kind.m:
        raise ValueError(f"Gram spectra carry exactly M={kind.m} eigenvalues")
    exponent = (kind.n - kind.m - 1) / 2.0
    return exponent / lam + _inverse_gap_sums(lam) - n / 2.0


def detailed_balance_residual(kind: EnsembleKind, lam: np.ndarray) -> float:
    """Max deviation from drift = (diff/2) grad(log Q~) + (1/2) grad(diff)."""
    lam = np.asarray(lam, dtype=float)
    lhs = drift(kind, lam)
    rhs = (diffusion(kind, lam) / 2.0 * surrogate_log_density_gradient(kind, lam)
           + 0.5 * diffusion_gradient(kind, lam))
    return float(np.max(np.abs(lhs - rhs)))


def mp_edges(c_ratio: float) -> tuple[float, float]:
    """Support edges (1 -+ sqrt(c))^2 of the Marchenko-Pastur law."""
    if not 0.0 < c_ratio <= 1.0:
        raise ValueError(f"aspect ratio must lie in (0, 1], got {c_ratio}")
    s = math.sqrt(c_ratio)
    return (1.0 - s) ** 2, (1.0 + s) ** 2


def limiting_density(kind: EnsembleKind, lam) -> np.ndarray:
    """Wigner semicircle (square families) or Marchenko-Pastur density (rect)."""
    lam = np.asarray(lam, dtype=float)
    if kind.family in (REAL_SYMMETRIC, IMAGINARY_ANTISYMMETRIC):
        out = np.zeros(lam.shape)
        inside = np.abs(lam) < 2.0
        out[inside] = np.sqrt(4.0 - lam[inside] ** 2) / (2.0 * math.pi)
        return out
    c = kind.m / kind.n
    lo, hi = mp_edges(c)
    out = np.zeros(lam.shape)
    inside = (lam > lo) & (lam < hi)
    x = lam[inside]
    out[inside] = np.sqrt((hi - x) * (x - lo)) / (2.0 * math.pi * c * x)
    return out


@functools.lru_cache(maxsize=32)
def _mp_cdf_grid(c: float) -> tuple[np.ndarray, np.ndarray]:
    # theta substitution lam = lo + (hi - lo) sin^2(theta) removes the
    # square-root edge singularities, so the trapezoid sum converges fast.
    lo, hi = mp_edges(c)
    theta = np.linspace(0.0, math.pi / 2.0, 20001)
    lam = lo + (hi - lo) * np.sin(theta) ** 2
    rho = np.sqrt(np.clip((hi - lam) * (lam - lo), 0.0, None)) / (2.0 * math.pi * c * lam)
    dlam = (hi - lo) * 2.0 * np.sin(theta) * np.cos(theta)
    integrand = rho * dlam
    cdf = np.concatenate(([0.0], np.cumsum(
        0.5 * (integrand[1:] + integrand[:-1]) * np.diff(theta))))
    cdf /= cdf[-1]
    return lam, cdf


def limiting_cdf(kind: EnsembleKind, lam) -> np.ndarray:
    """CDF of the limiting density; closed form for the semicircle."""
    lam = np.asarray(lam, dtype=float)
    if kind.family in (REAL_SYMMETRIC, IMAGINARY_ANTISYMMETRIC):
        x = np.clip(lam, -2.0, 2.0)
        return 0.5 + x * np.sqrt(4.0 - x ** 2) / (4.0 * math.pi) + np.arcsin(x / 2.0) / math.pi
    grid, cdf = _mp_cdf_grid(kind.m / kind.n)
    return np.interp(lam, grid, cdf, left=0.0, right=1.0)


def ou_coefficients() -> tuple[float, float]:
    """(drift slope, diffusion) = (-2, 1/2) of the rescaled distance process."""
    return -2.0, 0.5
