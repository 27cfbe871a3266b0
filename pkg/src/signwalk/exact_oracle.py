"""Brute-force ground truth on tiny hypercubes.

States are integers in [0, 2^d); bit j set means sign j is -1, so index 0 is
the all-plus vertex.  Distributions over all 2^d states fit in memory up to
d = 20 (float) and d = 12 (exact rationals).  The walk operator is applied
implicitly through single-bit flips; no 2^d x 2^d matrix is ever stored.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .ensemble import (EnsembleKind, RECTANGULAR, REAL_SYMMETRIC,
                       IMAGINARY_ANTISYMMETRIC, SignVector, _entry_table,
                       realize, flip_delta)
from .spectral import spectrum_values

FLOAT_GUARD = 20
EXACT_GUARD = 12
SEQUENCE_GUARD = 14
CACHE_VERSION = 1


def _check_guard(d: int, limit: int = FLOAT_GUARD) -> None:
    if d > limit:
        raise ValueError(f"hypercube dimension {d} exceeds the oracle guard {limit}")


@functools.lru_cache(maxsize=8)
def popcounts(d: int) -> np.ndarray:
    """Bit counts of every index below 2^d."""
    _check_guard(d)
    idx = np.arange(1 << d, dtype=np.uint32)
    counts = np.zeros(1 << d, dtype=np.uint8)
    for j in range(d):
        counts += ((idx >> j) & 1).astype(np.uint8)
    counts.setflags(write=False)
    return counts


@dataclass(frozen=True, eq=False)
class FullStateDistribution:
    """Probability vector over all 2^d sign vectors."""

    d: int
    probs: np.ndarray

    def __post_init__(self):
        _check_guard(self.d)
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.shape != (1 << self.d,):
            raise ValueError(f"expected 2^{self.d} entries, got {arr.shape}")
        if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-12:
            raise ValueError("not a probability vector")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)


def uniform_distribution(d: int) -> FullStateDistribution:
    size = 1 << d
    return FullStateDistribution(d, np.full(size, 1.0 / size))


def point_distribution(d: int, state: int = 0) -> FullStateDistribution:
    probs = np.zeros(1 << d)
    probs[state] = 1.0
    return FullStateDistribution(d, probs)


def _neighbour_sum(vec: np.ndarray, d: int) -> np.ndarray:
    """sum over single-bit flips of vec, via axis reversals (no index arrays)."""
    total = np.zeros_like(vec)
    for j in range(d):
        total += vec.reshape(-1, 2, 1 << j)[:, ::-1, :].reshape(vec.shape)
    return total


def apply_walk_operator(dist: FullStateDistribution) -> FullStateDistribution:
    """One lazy-walk step: new[v] = (old[v] + sum_neighbours old) / (d + 1)."""
    p = dist.probs
    new = (p + _neighbour_sum(p, dist.d)) / (dist.d + 1)
    return FullStateDistribution(dist.d, new)


def apply_to_deviation(vec: np.ndarray, d: int) -> np.ndarray:
    """The same linear operator on a signed deviation vector.

    Evolving P - P_inf directly keeps full relative precision deep into the
    exponential decay, where forming the difference would hit the float
    noise floor.
    """
    return (vec + _neighbour_sum(vec, d)) / (d + 1)


def apply_walk_operator_exact(probs: list[Fraction], d: int) -> list[Fraction]:
    """Rational-arithmetic walk step (d <= 12): mass is conserved exactly."""
    _check_guard(d, EXACT_GUARD)
    size = 1 << d
    if len(probs) != size:
        raise ValueError("wrong support size")
    w = Fraction(1, d + 1)
    new = [p * w for p in probs]
    for v in range(size):
        pv = probs[v]
        if pv:
            contrib = pv * w
            for j in range(d):
                new[v ^ (1 << j)] += contrib
    return new


def hamming_marginal(dist: FullStateDistribution, reference: int = 0) -> np.ndarray:
    """Distribution of the Hamming distance to ``reference``."""
    idx = np.arange(1 << dist.d, dtype=np.uint32)
    dists = popcounts(dist.d)[idx ^ np.uint32(reference)]
    return np.bincount(dists, weights=dist.probs, minlength=dist.d + 1)


def signs_to_state(signs: SignVector) -> int:
    bits = np.nonzero(signs.bits < 0)[0]
    return int(np.sum(1 << bits.astype(np.int64)))


def state_to_signs(kind: EnsembleKind, state: int) -> SignVector:
    d = kind.dimension
    bits = np.array([-1 if (state >> j) & 1 else 1 for j in range(d)], dtype=np.int8)
    return SignVector(kind, bits)


def exact_transition_kernel(start: SignVector, dt: int) -> np.ndarray:
    """Exact P_dt(X): distance distribution after dt steps from ``start``."""
    d = start.kind.dimension
    _check_guard(d)
    origin = signs_to_state(start)
    dist = point_distribution(d, origin)
    for _ in range(dt):
        dist = apply_walk_operator(dist)
    return hamming_marginal(dist, origin)


def _bits_block(kind: EnsembleKind, states: np.ndarray) -> np.ndarray:
    d = kind.dimension
    bits = np.empty((states.size, d), dtype=np.int8)
    for j in range(d):
        bits[:, j] = 1 - 2 * ((states >> j) & 1)
    return bits


def enumerate_spectra(kind: EnsembleKind, chunk: int = 1 << 14) -> np.ndarray:
    """Spectral vectors of every ensemble member, indexed by state."""
    d = kind.dimension
    _check_guard(d)
    rows, cols, mags = _entry_table(kind)
    n_states = 1 << d
    out = np.empty((n_states, kind.spectrum_size))
    shape = kind.shape
    for lo in range(0, n_states, chunk):
        states = np.arange(lo, min(lo + chunk, n_states), dtype=np.int64)
        vals = _bits_block(kind, states) * mags
        mats = np.zeros((states.size,) + shape)
        mats[:, rows, cols] = vals
        if kind.family == REAL_SYMMETRIC:
            mats[:, cols, rows] = vals
            out[states] = np.linalg.eigvalsh(mats)
        elif kind.family == IMAGINARY_ANTISYMMETRIC:
            mats[:, cols, rows] = -vals
            out[states] = np.linalg.eigvalsh(1j * mats)
        else:
            grams = np.einsum("spq,spr->sqr", mats, mats)
            out[states] = np.linalg.eigvalsh(grams)
    return out


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    """Discrete measure over distinct spectra, merged at a fixed resolution."""

    kind: EnsembleKind
    resolution: float
    atlas: np.ndarray       # (k, spectrum_size) representative spectra
    weights: np.ndarray     # (k,) probabilities

    def key_of(self, values: np.ndarray) -> bytes:
        return np.round(np.asarray(values) / self.resolution).astype(np.int64).tobytes()

    def as_dict(self) -> dict[bytes, float]:
        return {self.key_of(row): float(w) for row, w in zip(self.atlas, self.weights)}


def exact_stationary_spectral_measure(kind: EnsembleKind,
                                      resolution: float = 1e-9) -> SpectralMeasure:
    """Uniform-measure spectral distribution from total enumeration."""
    spectra = enumerate_spectra(kind)
    keys = np.round(spectra / resolution).astype(np.int64)
    _, first_idx, inverse, counts = np.unique(
        keys, axis=0, return_index=True, return_inverse=True, return_counts=True)
    atlas = spectra[first_idx]
    weights = counts / spectra.shape[0]
    order = np.argsort(first_idx)  # keep first-seen order deterministic
    del inverse
    return SpectralMeasure(kind, resolution, atlas[order], weights[order])


def spectral_measure_tv(measure: SpectralMeasure, samples: np.ndarray) -> float:
    """Half-L1 distance between the measure and an empirical sample of spectra."""
    ref = measure.as_dict()
    counts: dict[bytes, int] = {}
    for row in np.asarray(samples):
        key = measure.key_of(row)
        counts[key] = counts.get(key, 0) + 1
    total = sum(counts.values())
    tv = 0.0
    for key in ref.keys() | counts.keys():
        tv += abs(ref.get(key, 0.0) - counts.get(key, 0) / total)
    return 0.5 * tv


@dataclass(frozen=True)
class ExhaustiveMoments:
    """Raw expectations over every length-dt step sequence from one matrix."""

    dt: int
    d: int
    first: np.ndarray        # E[ d(lambda)_nu ]
    second: np.ndarray       # E[ d(lambda)_nu d(lambda)_mu ]
    third: np.ndarray        # E[ d(lambda)_nu^2 d(lambda)_mu ]
    fourth: np.ndarray       # E[ d(lambda)_nu^2 d(lambda)_mu^2 ]
    mean_delta_matrix: np.ndarray

    @property
    def d_eta(self) -> float:
        return self.dt / self.d


def exhaustive_flip_mean(signs: SignVector) -> np.ndarray:
    """Average of all d single-flip difference matrices; equals -2 B / d."""
    total = np.zeros(signs.kind.shape)
    for i in range(signs.kind.dimension):
        total += flip_delta(signs, i).array
    return total / signs.kind.dimension


def exhaustive_moments(signs: SignVector, dt: int) -> ExhaustiveMoments:
    """Exact moments by enumerating all (d+1)^dt step sequences."""
    kind = signs.kind
    d = kind.dimension
    if dt not in (1, 2):
        raise ValueError("total enumeration supports dt in {1, 2}")
    if dt == 2:
        _check_guard(d, SEQUENCE_GUARD)
    else:
        _check_guard(d)
    base = realize(signs)
    lam0 = spectrum_values(base)
    k = lam0.size

    first = np.zeros(k)
    second = np.zeros((k, k))
    third = np.zeros((k, k))
    fourth = np.zeros((k, k))
    mean_delta = np.zeros(kind.shape)
    weight = 1.0 / (d + 1) ** dt

    def visit(bits: np.ndarray):
        nonlocal mean_delta
        cur = SignVector(kind, bits)
        arr = realize(cur)
        dlam = spectrum_values(arr) - lam0
        mean_delta = mean_delta + weight * (arr.array - base.array)
        first_l = weight * dlam
        first[:] += first_l
        second[:] += weight * np.outer(dlam, dlam)
        sq = dlam ** 2
        third[:] += weight * np.outer(sq, dlam)
        fourth[:] += weight * np.outer(sq, sq)

    if dt == 1:
        for i in range(d + 1):
            bits = signs.bits.copy()
            if i < d:
                bits[i] = -bits[i]
            visit(bits)
    else:
        for i in range(d + 1):
            for j in range(d + 1):
                bits = signs.bits.copy()
                if i < d:
                    bits[i] = -bits[i]
                if j < d:
                    bits[j] = -bits[j]
                visit(bits)
    return ExhaustiveMoments(dt, d, first, second, third, fourth, mean_delta)


def measure_cache_path(cache_dir: Path, kind: EnsembleKind) -> Path:
    m = kind.m if kind.m is not None else 0
    return Path(cache_dir) / f"measure_{kind.family}_n{kind.n}_m{m}_v{CACHE_VERSION}.npz"


def save_spectral_measure(path: Path, measure: SpectralMeasure) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, version=CACHE_VERSION, family=measure.kind.family,
             n=measure.kind.n, m=measure.kind.m if measure.kind.m else 0,
             resolution=measure.resolution,
             atlas=measure.atlas, weights=measure.weights)


def load_spectral_measure(path: Path, kind: EnsembleKind) -> SpectralMeasure | None:
    path = Path(path)
    if not path.exists():
        return None
    data = np.load(path, allow_pickle=False)
    if int(data["version"]) != CACHE_VERSION or str(data["family"]) != kind.family:
        return None
    if int(data["n"]) != kind.n or int(data["m"]) != (kind.m or 0):
        return None
    return SpectralMeasure(kind, float(data["resolution"]),
                           data["atlas"], data["weights"])


def cached_stationary_spectral_measure(kind: EnsembleKind, cache_dir: Path,
                                       resolution: float = 1e-9) -> SpectralMeasure:
    path = measure_cache_path(cache_dir, kind)
    cached = load_spectral_measure(path, kind)
    if cached is not None and cached.resolution == resolution:
        return cached
    measure = exact_stationary_spectral_measure(kind, resolution)
    save_spectral_measure(path, measure)
    return measure
