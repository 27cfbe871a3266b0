"""Birth-death analysis of the Hamming distance under the lazy hypercube walk.

The distance X from a reference vertex moves down with probability X/(d+1),
up with (d-X)/(d+1) and stays with 1/(d+1).  The stationary law is
Binomial(d, 1/2); mixing happens around t_crit = d ln(d) / 4, and near the
centre the rescaled coordinate xi = (X - d/2)/sqrt(d) follows an
Ornstein-Uhlenbeck process in the time eta = t/d.

Total-variation distances use the one-sided convention
``sum_{X: P >= Q} (P - Q)``, which equals half the L1 distance for
probability vectors.  The asymptotic mixing profile is
``erf(exp(-2 c(t)) / sqrt(8))`` with ``c(t) = (t - t_crit)/d`` and the
standard error function: its small-argument limit reproduces the exponential
tail ``exp(-2 c(t)) / sqrt(2 pi)``, which pins the normalisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import erf

from . import theory


@dataclass(frozen=True, eq=False)
class HammingDistribution:
    """Probability vector over distances X in {0, ..., d} at integer time t."""

    d: int
    probs: np.ndarray
    t: int = 0

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.shape != (self.d + 1,):
            raise ValueError(f"expected {self.d + 1} probabilities, got {arr.shape}")
        if np.any(arr < 0):
            raise ValueError("negative probability mass")
        if abs(arr.sum() - 1.0) > 1e-12:
            raise ValueError(f"mass {arr.sum()} not normalised")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    def mean(self) -> float:
        return float(np.arange(self.d + 1) @ self.probs)

    def variance(self) -> float:
        x = np.arange(self.d + 1)
        mu = self.mean()
        return float(((x - mu) ** 2) @ self.probs)


def point_mass(d: int, x: int = 0) -> HammingDistribution:
    probs = np.zeros(d + 1)
    probs[x] = 1.0
    return HammingDistribution(d, probs)


def transition_probs(d: int, x: int) -> tuple[float, float, float]:
    """(down, stay, up) probabilities from distance x."""
    down, stay, up = exact_transition_probs(d, x)
    return float(down), float(stay), float(up)


def exact_transition_probs(d: int, x: int) -> tuple[Fraction, Fraction, Fraction]:
    if not 0 <= x <= d:
        raise ValueError(f"distance {x} out of range [0, {d}]")
    return (Fraction(x, d + 1), Fraction(1, d + 1), Fraction(d - x, d + 1))


def evolve(dist: HammingDistribution) -> HammingDistribution:
    """One step of the birth-death recursion; conserves mass exactly."""
    d, p = dist.d, dist.probs
    x = np.arange(d + 1)
    up = (d - x) / (d + 1)
    down = x / (d + 1)
    new = p / (d + 1)
    new[1:] += p[:-1] * up[:-1]
    new[:-1] += p[1:] * down[1:]
    return HammingDistribution(d, new, dist.t + 1)


def evolve_steps(dist: HammingDistribution, steps: int) -> HammingDistribution:
    for _ in range(steps):
        dist = evolve(dist)
    return dist


def exact_distance_distribution(d: int, t: int) -> list[Fraction]:
    """Rational P_t(X) from a point mass at X = 0; exact for modest d, t."""
    probs = [Fraction(0)] * (d + 1)
    probs[0] = Fraction(1)
    for _ in range(t):
        new = [p * Fraction(1, d + 1) for p in probs]
        for x in range(d):
            new[x + 1] += probs[x] * Fraction(d - x, d + 1)
        for x in range(1, d + 1):
            new[x - 1] += probs[x] * Fraction(x, d + 1)
        probs = new
    return probs


def stationary(d: int) -> HammingDistribution:
    """Binomial(d, 1/2), computed from exact binomials and rounded once."""
    if d < 1:
        raise ValueError("need d >= 1")
    half = Fraction(1, 2 ** d)
    probs = np.array([float(math.comb(d, x) * half) for x in range(d + 1)])
    return HammingDistribution(d, probs)


def walk_operator_spectrum(d: int) -> list[Fraction]:
    """Eigenvalues (1 - 2j/(d+1)), j = 0..d, descending, as exact rationals."""
    if d < 1:
        raise ValueError("need d >= 1")
    return [Fraction(d + 1 - 2 * j, d + 1) for j in range(d + 1)]


def transition_matrix(d: int) -> np.ndarray:
    """Dense (d+1) x (d+1) birth-death operator, columns = source states."""
    op = np.zeros((d + 1, d + 1))
    for x in range(d + 1):
        down, stay, up = transition_probs(d, x)
        op[x, x] = stay
        if x > 0:
            op[x - 1, x] = down
        if x < d:
            op[x + 1, x] = up
    return op


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    """One-sided total variation: sum of (p - q) over states where p >= q."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    return float(np.sum(np.clip(p - q, 0.0, None)))


def t_crit(d: int) -> float:
    """Critical mixing time d ln(d) / 4 (natural logarithm)."""
    return d * math.log(d) / 4.0


def tv_exact_curve(d: int, times: np.ndarray) -> np.ndarray:
    """Exact TV-to-stationarity at the requested integer times, from X = 0."""
    times = np.asarray(times, dtype=np.int64)
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")
    pi = stationary(d).probs
    cur = point_mass(d)
    out = np.empty(times.shape)
    pos = 0
    if times.size and times[0] == 0:
        out[0] = tv_distance(cur.probs, pi)
        pos = 1
    for t in range(1, int(times[-1]) + 1) if times.size else ():
        cur = evolve(cur)
        if pos < times.size and times[pos] == t:
            out[pos] = tv_distance(cur.probs, pi)
            pos += 1
    return out


def tv_asymptotic(t, d: int):
    """Large-d mixing profile erf(exp(-2 (t - t_crit)/d) / sqrt(8))."""
    c = (np.asarray(t, dtype=float) - t_crit(d)) / d
    return erf(np.exp(-2.0 * c) / math.sqrt(8.0))


def tv_tail(t, d: int):
    """Exponential late-time form exp(-2 (t - t_crit)/d) / sqrt(2 pi)."""
    c = (np.asarray(t, dtype=float) - t_crit(d)) / d
    return np.exp(-2.0 * c) / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class RescaledDensity:
    """Density samples over xi = (X - d/2)/sqrt(d), with OU reference data."""

    xi: np.ndarray
    density: np.ndarray
    d: int
    drift_slope: float
    diffusion: float

    def mean(self) -> float:
        w = self.density / self.density.sum()
        return float(self.xi @ w)

    def variance(self) -> float:
        w = self.density / self.density.sum()
        mu = self.xi @ w
        return float(((self.xi - mu) ** 2) @ w)

    def drift(self, xi) -> np.ndarray:
        return self.drift_slope * np.asarray(xi, dtype=float)


def ou_limit(dist: HammingDistribution) -> RescaledDensity:
    """Map a distance distribution onto the OU coordinate xi.

    Probabilities become densities through the Jacobian sqrt(d); the
    stationary output has mean 0, variance 1/4 and density ~ exp(-2 xi^2),
    matching an OU process with drift -2 xi and diffusion 1/2.
    """
    d = dist.d
    xi = (np.arange(d + 1) - d / 2.0) / math.sqrt(d)
    density = dist.probs * math.sqrt(d)
    slope, diff = theory.ou_coefficients()
    return RescaledDensity(xi, density, d, slope, diff)
