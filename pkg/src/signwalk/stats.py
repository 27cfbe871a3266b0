"""Statistical comparison machinery: KS/TV distances, unfolding, regressions."""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Callable, Sequence

import numpy as np

from .ensemble import EnsembleKind
from . import theory


@dataclass(frozen=True)
class ComparisonReport:
    """One named statistic against its pass threshold; pure data."""

    name: str
    statistic: float
    threshold: float
    n_samples: int
    seed: int | None = None

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


def ks_distance(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Sup-norm distance between the empirical CDF and ``cdf``."""
    samples = np.sort(np.asarray(samples, dtype=float))
    n = samples.size
    if n == 0:
        raise ValueError("no samples")
    f = np.asarray(cdf(samples), dtype=float)
    upper = np.max(np.arange(1, n + 1) / n - f)
    lower = np.max(f - np.arange(0, n) / n)
    return float(max(upper, lower))


def unfold_and_spacings(spectra: Sequence[np.ndarray], kind: EnsembleKind,
                        edge_fraction: float = 0.2) -> np.ndarray:
    """Consecutive unfolded spacings pooled from the central bulk.

    Eigenvalues are mapped through the integrated limiting density, so the
    mean spacing is 1; a fixed fraction is dropped at each spectral edge
    where bulk universality fails.
    """
    pooled = []
    for values in spectra:
        values = np.asarray(values, dtype=float)
        k = values.size
        lo = int(np.floor(k * edge_fraction))
        hi = k - lo
        if hi - lo < 2:
            raise ValueError("spectrum too short after edge exclusion")
        unfolded = values.size * theory.limiting_cdf(kind, values)
        pooled.append(np.diff(unfolded[lo:hi]))
    return np.concatenate(pooled)


def wigner_surmise_goe(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return (np.pi * s / 2.0) * np.exp(-np.pi * s ** 2 / 4.0)


def wigner_surmise_gue(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return (32.0 / np.pi ** 2) * s ** 2 * np.exp(-4.0 * s ** 2 / np.pi)


def wigner_surmise_goe_cdf(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return 1.0 - np.exp(-np.pi * s ** 2 / 4.0)


def wigner_surmise_gue_cdf(s: np.ndarray) -> np.ndarray:
    from scipy.special import erf
    s = np.asarray(s, dtype=float)
    a = 2.0 / np.sqrt(np.pi)
    return erf(a * s) - (4.0 * s / np.pi) * np.exp(-a * a * s * s)


def poisson_spacing_cdf(s: np.ndarray) -> np.ndarray:
    return 1.0 - np.exp(-np.asarray(s, dtype=float))


def drift_regression(empirical: np.ndarray, se: np.ndarray,
                     predicted: np.ndarray) -> tuple[float, float, float]:
    """Weighted least squares of empirical values on theory values.

    Weights are 1/SE^2.  Returns (slope, intercept, R^2); perfect agreement
    gives (1, 0, 1).  Constant theory values make the design degenerate.
    """
    y = np.asarray(empirical, dtype=float)
    x = np.asarray(predicted, dtype=float)
    se = np.asarray(se, dtype=float)
    if y.shape != x.shape or y.shape != se.shape:
        raise ValueError("shape mismatch")
    if np.ptp(x) == 0.0:
        raise ValueError("degenerate design: constant theory values")
    w = 1.0 / se ** 2
    sw = w.sum()
    xbar = (w * x).sum() / sw
    ybar = (w * y).sum() / sw
    sxx = (w * (x - xbar) ** 2).sum()
    sxy = (w * (x - xbar) * (y - ybar)).sum()
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    resid = y - slope * x - intercept
    ss_res = (w * resid ** 2).sum()
    ss_tot = (w * (y - ybar) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def tv_empirical(samples_a: np.ndarray, samples_b: np.ndarray, bins: int) -> float:
    """Half-L1 distance between histogram densities over the common range."""
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample set")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if lo == hi:
        return 0.0
    edges = np.linspace(lo, hi, bins + 1)
    pa, _ = np.histogram(a, bins=edges)
    pb, _ = np.histogram(b, bins=edges)
    return 0.5 * float(np.sum(np.abs(pa / a.size - pb / b.size)))
