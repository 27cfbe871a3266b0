"""Lazy random walk on the sign hypercube, plus its path-counting combinatorics.

One step draws a single uniform integer in ``[0, d]``: values ``< d`` flip
that sign, the value ``d`` is the lazy stay, so every one of the d+1 moves has
probability 1/(d+1).  Walkers own independent generator streams derived from
``child_stream(seed, walker_id)``; trajectories are deterministic given
(seed, steps, observer schedule).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

import numpy as np

from .ensemble import SignVector


def child_stream(seed: int, walker_id: int = 0) -> np.random.Generator:
    """Counter-based stream for one walker, reproducible across worker counts."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(walker_id,))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class WalkState:
    signs: SignVector
    t: int
    rng: np.random.Generator

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("step count must be nonnegative")


@dataclass(frozen=True)
class WalkTrajectory:
    """Samples of one observable along a walk, at strictly increasing times."""

    observable: str
    times: np.ndarray
    etas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")


def step(state: WalkState) -> WalkState:
    """Advance one step, consuming exactly one uniform draw in [0, d]."""
    d = state.signs.kind.dimension
    k = int(state.rng.integers(0, d + 1))
    signs = state.signs if k == d else state.signs.flip(k)
    return WalkState(signs, state.t + 1, state.rng)


def advance(signs: SignVector, steps: int, rng: np.random.Generator) -> SignVector:
    """Equivalent of ``steps`` single steps, drawn as one batch of integers."""
    if steps == 0:
        return signs
    d = signs.kind.dimension
    draws = rng.integers(0, d + 1, size=steps)
    flips = draws[draws < d]
    parity = np.bincount(flips, minlength=d).astype(np.int8) & 1
    return SignVector(signs.kind, signs.bits * (1 - 2 * parity))


def run(state: WalkState, steps: int,
        observers: Mapping[str, Callable[[SignVector], float]],
        stride: int | None = None) -> dict[str, WalkTrajectory]:
    """Walk ``steps`` steps, sampling every observer each ``stride`` steps.

    The default stride d/10 gives resolution 0.1 in the rescaled time
    eta = t/d.  t = 0 is always sampled, so steps = 0 yields exactly the
    initial sample.
    """
    d = state.signs.kind.dimension
    if stride is None:
        stride = max(1, d // 10)
    times, records = [], {name: [] for name in observers}

    def sample(s: WalkState):
        times.append(s.t)
        for name, fn in observers.items():
            records[name].append(fn(s.signs))

    sample(state)
    for _ in range(steps):
        state = step(state)
        if state.t % stride == 0 or state.t == steps:
            sample(state)

    t_arr = np.array(times, dtype=np.int64)
    etas = t_arr / d
    return {name: WalkTrajectory(name, t_arr, etas, np.array(vals))
            for name, vals in records.items()}


def hamming_observer(reference: SignVector) -> Callable[[SignVector], float]:
    """Observer returning the Hamming distance to a fixed reference vertex."""
    ref = reference.bits

    def observe(signs: SignVector) -> float:
        return float(np.count_nonzero(signs.bits != ref))

    return observe


def count_ordered_paths(d: int, x: int) -> int:
    """Number of ordered x-step paths with all-distinct flip indices: C(d, x)."""
    if not 0 <= x <= d:
        raise ValueError(f"need 0 <= x <= d, got x={x}, d={d}")
    return math.comb(d, x)


def count_paths_containing(d: int, x: int, l: int) -> int:
    """Ordered x-paths that contain l given distinct indices: C(d - l, x - l)."""
    if not 0 <= l <= x <= d:
        raise ValueError(f"need 0 <= l <= x <= d, got l={l}, x={x}, d={d}")
    return math.comb(d - l, x - l)


def containment_fraction(d: int, x: int, l: int) -> Fraction:
    """Exact ratio C(d-l, x-l)/C(d, x) = prod_i (x-i)/(d-i) over i < l."""
    frac = Fraction(count_paths_containing(d, x, l), count_ordered_paths(d, x))
    return frac


def prob_max_distance(d: int, dt: int, exact: bool = False) -> float | Fraction:
    """Probability that dt lazy-walk steps reach the maximal distance dt.

    Equals dt! C(d, dt) / (d+1)^dt = prod_{j<dt} (d - j) / (d+1)^dt, computed
    as an exact big rational and rounded only on return.
    """
    if not 0 <= dt <= d:
        raise ValueError(f"need 0 <= dt <= d, got dt={dt}, d={d}")
    num = 1
    for j in range(dt):
        num *= d - j
    frac = Fraction(num, (d + 1) ** dt)
    return frac if exact else float(frac)
