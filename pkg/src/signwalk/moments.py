"""Monte Carlo estimation of eigenvalue-increment moments over short walk bursts.

A burst walks dt = round(N^c) steps (0 < c < 1, so dt is far below both the
matrix size and the mixing time) and records the sorted-aligned spectral
increment.  Moments are sample means divided by the rescaled burst length
d_eta = dt/d.

Two anchor protocols:

* ``refresh`` -- the chain keeps moving; anchors are separated by d/10
  decorrelation steps.  Every anchor is a stationary sample when the start
  was, so anchor-averaged drifts vanish in equilibrium; use this for
  diffusion and higher-moment estimates.
* ``fixed``   -- every burst restarts from one equilibrated anchor, which is
  what per-eigenvalue drift comparisons against the anchor's theory values
  need.

Bursts are split into a worker-count-independent set of chunks with derived
generator streams, and chunk results are merged in a fixed order, so reported
statistics do not depend on the degree of parallelism.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from . import theory
from .ensemble import (EnsembleKind, IMAGINARY_ANTISYMMETRIC, RECTANGULAR,
                       ScaledMatrix, SignVector, realize)
from .metawalk import advance, child_stream
from .perturbation import wishart_increment
from .spectral import NumericalError, spectrum, spectrum_values

log = logging.getLogger(__name__)

ANCHOR_STREAM_ID = 2 ** 31 - 1
ZERO_MODE_TOL = 1e-10


@dataclass(frozen=True)
class MomentConfig:
    kind: EnsembleKind
    samples: int
    seed: int
    c_exponent: float = 0.5
    dt: int | None = None                 # overrides round(N^c); 0 allowed for tests
    equilibration_steps: int | None = None  # default: ceil(d ln d / 4)
    refresh_steps: int | None = None        # default: d // 10
    anchor_mode: str = "refresh"

    def __post_init__(self):
        if not 0.0 < self.c_exponent < 1.0:
            raise ValueError("c exponent must lie in (0, 1)")
        if self.samples < 100:
            raise ValueError("need at least 100 bursts")
        if self.anchor_mode not in ("refresh", "fixed"):
            raise ValueError(f"unknown anchor mode {self.anchor_mode!r}")
        if self.dt is not None and self.dt < 0:
            raise ValueError("dt must be nonnegative")

    @property
    def burst_steps(self) -> int:
        if self.dt is not None:
            return self.dt
        return int(round(self.kind.n ** self.c_exponent))

    @property
    def equilibration(self) -> int:
        if self.equilibration_steps is not None:
            return self.equilibration_steps
        d = self.kind.dimension
        return int(math.ceil(d * math.log(d) / 4.0))

    @property
    def refresh(self) -> int:
        if self.refresh_steps is not None:
            return self.refresh_steps
        return max(1, self.kind.dimension // 10)


def bulk_indices(kind: EnsembleKind, size: int, fraction: float = 0.6) -> np.ndarray:
    """Central spectral indices, excluding the pinned antisym zero mode."""
    lo = int(math.floor(size * (1.0 - fraction) / 2.0))
    idx = np.arange(lo, size - lo)
    if kind.family == IMAGINARY_ANTISYMMETRIC and kind.n % 2 == 1:
        idx = idx[idx != (size - 1) // 2]
    return idx


def theory_drift_full(kind: EnsembleKind, lam: np.ndarray) -> np.ndarray:
    """Theory drift in full sorted coordinates (mirrored for antisym pairs)."""
    if kind.family != IMAGINARY_ANTISYMMETRIC:
        return theory.drift(kind, lam)
    pos = lam[lam > ZERO_MODE_TOL]
    d_pos = theory.drift(kind, pos)
    out = np.zeros(lam.shape)
    out[lam > ZERO_MODE_TOL] = d_pos
    out[lam < -ZERO_MODE_TOL] = -d_pos[::-1]
    return out


@dataclass(frozen=True)
class MomentEstimate:
    """Sample moments per unit rescaled time, with their standard errors."""

    kind: EnsembleKind
    n_samples: int
    dt: int
    d_eta: float
    discards: int
    lam_anchor: np.ndarray
    drift: np.ndarray
    drift_se: np.ndarray
    second: np.ndarray
    second_se: np.ndarray
    third: np.ndarray
    fourth: np.ndarray
    theory_drift: np.ndarray
    theory_diffusion: np.ndarray
    autocorr_lag1: float

    @property
    def diffusion(self) -> np.ndarray:
        return np.diag(self.second).copy()

    @property
    def diffusion_se(self) -> np.ndarray:
        return np.diag(self.second_se).copy()

    def bulk(self, fraction: float = 0.6) -> np.ndarray:
        return bulk_indices(self.kind, self.lam_anchor.size, fraction)

    def to_json_dict(self) -> dict:
        bulk = self.bulk()
        per_nu = [{
            "lambda": float(self.lam_anchor[i]),
            "drift": float(self.drift[i]),
            "drift_se": float(self.drift_se[i]),
            "diff": float(self.diffusion[i]),
            "diff_se": float(self.diffusion_se[i]),
            "theory_drift": float(self.theory_drift[i]),
            "theory_diff": float(self.theory_diffusion[i]),
        } for i in range(self.lam_anchor.size)]
        return {
            "kind": self.kind.family,
            "N": self.kind.n,
            "M": self.kind.m,
            "dt": self.dt,
            "samples": self.n_samples,
            "discards": self.discards,
            "d_eta": self.d_eta,
            "per_nu": per_nu,
            "offdiag_max_ratio": offdiag_max_ratio(self, bulk),
            "autocorr_lag1": self.autocorr_lag1,
        }


class RunError(RuntimeError):
    """Too many discarded bursts for the estimate to be trustworthy."""


def _blank_accumulator(k: int, shape: tuple[int, int]) -> dict:
    return {
        "n": 0,
        "s1": np.zeros(k),
        "s2": np.zeros((k, k)),
        "s3": np.zeros((k, k)),
        "s4": np.zeros((k, k)),
        "anchor": np.zeros(k),
        "theory_drift": np.zeros(k),
        "theory_n": 0,
        "discards": 0,
        "lag_num": 0.0,
        "lag_cnt": 0,
        "prev_scalar": None,
        "scalar_s1": 0.0,
        "scalar_s2": 0.0,
        "mean_delta": np.zeros(shape),
    }


def _merge(into: dict, part: dict) -> dict:
    for key, val in part.items():
        if key == "prev_scalar":
            continue
        into[key] = into[key] + val if into[key] is not None else val
    return into


def _run_chunk(config: MomentConfig, chunk_id: int, n_bursts: int,
               anchor_signs: SignVector, equilibrate: bool) -> dict:
    kind = config.kind
    rng = child_stream(config.seed, chunk_id)
    dt = config.burst_steps
    k = kind.spectrum_size
    acc = _blank_accumulator(k, kind.shape)
    acc["prev_scalar"] = None

    signs = anchor_signs
    if equilibrate:
        signs = advance(signs, config.equilibration, rng)
    fixed = config.anchor_mode == "fixed"
    lam0 = None
    arr0 = None
    bulk = bulk_indices(kind, k)

    for b in range(n_bursts):
        if fixed:
            anchor = signs
        else:
            anchor = signs if b == 0 else advance(signs, config.refresh, rng)
        try:
            if lam0 is None or not fixed:
                arr0 = realize(anchor)
                lam0 = spectrum_values(arr0)
            after = advance(anchor, dt, rng)
            arr1 = realize(after)
            lam1 = spectrum_values(arr1)
        except NumericalError:
            acc["discards"] += 1
            log.warning("discarded burst %d of chunk %d", b, chunk_id)
            if not fixed:
                signs = anchor
            continue
        dlam = lam1 - lam0
        acc["n"] += 1
        acc["s1"] += dlam
        outer = np.outer(dlam, dlam)
        acc["s2"] += outer
        sq = dlam ** 2
        acc["s3"] += np.outer(sq, dlam)
        acc["s4"] += np.outer(sq, sq)
        acc["anchor"] += lam0
        acc["mean_delta"] += arr1.array - arr0.array
        try:
            acc["theory_drift"] += theory_drift_full(kind, lam0)
            acc["theory_n"] += 1
        except theory.SingularSpectrumError:
            pass
        scalar = float(np.mean(sq[bulk])) if bulk.size else float(np.mean(sq))
        acc["scalar_s1"] += scalar
        acc["scalar_s2"] += scalar * scalar
        if acc["prev_scalar"] is not None:
            acc["lag_num"] += scalar * acc["prev_scalar"]
            acc["lag_cnt"] += 1
        acc["prev_scalar"] = scalar
        if not fixed:
            signs = after
    return acc


def _chunk_plan(samples: int) -> list[int]:
    """Fixed decomposition of the burst count, independent of worker count."""
    n_chunks = min(16, max(1, samples // 256))
    base, extra = divmod(samples, n_chunks)
    return [base + (1 if i < extra else 0) for i in range(n_chunks)]


def _zero_estimate(config: MomentConfig, anchor: SignVector) -> MomentEstimate:
    lam = spectrum_values(realize(anchor))
    k = lam.size
    zeros = np.zeros(k)
    zmat = np.zeros((k, k))
    return MomentEstimate(config.kind, config.samples, 0, 0.0, 0, lam,
                          zeros, zeros, zmat, zmat, zmat.copy(), zmat.copy(),
                          theory_drift_full(config.kind, lam),
                          theory.diffusion(config.kind, lam), 0.0)


def estimate(config: MomentConfig, start: SignVector | None = None,
             workers: int = 1) -> MomentEstimate:
    """Run the burst protocol and return moment estimates per unit eta."""
    kind = config.kind
    anchor_rng = child_stream(config.seed, ANCHOR_STREAM_ID)
    signs = start if start is not None else SignVector.uniform(kind, anchor_rng)

    if config.burst_steps == 0:
        return _zero_estimate(config, signs)

    # Fixed mode equilibrates once here so every chunk shares the anchor;
    # refresh chunks equilibrate their own independent chains.
    equilibrate_in_chunk = config.anchor_mode == "refresh"
    if config.anchor_mode == "fixed" and config.equilibration > 0:
        signs = advance(signs, config.equilibration, anchor_rng)

    plan = _chunk_plan(config.samples)
    args = [(config, cid, n, signs, equilibrate_in_chunk)
            for cid, n in enumerate(plan)]
    if workers > 1 and len(plan) > 1:
        with get_context("fork").Pool(workers) as pool:
            parts = pool.starmap(_run_chunk, args)
    else:
        parts = [_run_chunk(*a) for a in args]

    total = parts[0]
    for part in parts[1:]:
        total = _merge(total, part)

    n = total["n"]
    if n == 0:
        raise RunError("all bursts discarded")
    if total["discards"] > 0.01 * config.samples:
        raise RunError(f"{total['discards']} of {config.samples} bursts discarded")

    dt = config.burst_steps
    d_eta = dt / kind.dimension
    drift = total["s1"] / n / d_eta
    second = total["s2"] / n / d_eta
    var_first = np.clip(np.diag(total["s2"]) / n - (total["s1"] / n) ** 2, 0.0, None)
    drift_se = np.sqrt(var_first / n) / d_eta
    var_second = np.clip(total["s4"] / n - (total["s2"] / n) ** 2, 0.0, None)
    second_se = np.sqrt(var_second / n) / d_eta
    lam_anchor = total["anchor"] / n
    t_n = max(total["theory_n"], 1)
    theory_drift = total["theory_drift"] / t_n
    theory_diff = theory.diffusion(kind, lam_anchor)

    mean_scalar = total["scalar_s1"] / n
    var_scalar = max(total["scalar_s2"] / n - mean_scalar ** 2, 0.0)
    if total["lag_cnt"] > 0 and var_scalar > 0:
        autocorr = (total["lag_num"] / total["lag_cnt"] - mean_scalar ** 2) / var_scalar
    else:
        autocorr = 0.0

    return MomentEstimate(kind, n, dt, d_eta, total["discards"], lam_anchor,
                          drift, drift_se, second, second_se,
                          total["s3"] / n / d_eta, total["s4"] / n / d_eta,
                          theory_drift, theory_diff, float(autocorr))


def offdiag_max_ratio(est: MomentEstimate, bulk: np.ndarray | None = None) -> float:
    """max_{nu != mu} |M_numu| over the bulk, relative to the mean diagonal."""
    if bulk is None:
        bulk = est.bulk()
    sub = est.second[np.ix_(bulk, bulk)]
    diag_mean = float(np.mean(np.diag(sub)))
    off = sub[~np.eye(sub.shape[0], dtype=bool)]
    if off.size == 0 or diag_mean == 0.0:
        return 0.0
    return float(np.max(np.abs(off)) / diag_mean)


@dataclass(frozen=True)
class OffdiagReport:
    n: int
    max_ratio: float
    median_ratio: float
    diag_mean: float


def offdiag_suppression(config: MomentConfig, start: SignVector | None = None,
                        workers: int = 1) -> OffdiagReport:
    est = estimate(config, start, workers)
    bulk = est.bulk()
    sub = est.second[np.ix_(bulk, bulk)]
    diag_mean = float(np.mean(np.diag(sub)))
    off = np.abs(sub[~np.eye(sub.shape[0], dtype=bool)])
    return OffdiagReport(config.kind.n, float(off.max() / diag_mean),
                         float(np.median(off) / diag_mean), diag_mean)


@dataclass(frozen=True)
class DriftCheckReport:
    kind: EnsembleKind
    samples: int
    dt: int
    coefficient: float      # kappa for square kinds, A for rect
    se: float
    theory: float


def matrix_drift_check(kind: EnsembleKind, samples: int, dt: int, seed: int,
                       equilibration: int | None = None) -> DriftCheckReport:
    """Entrywise drift of the matrix itself at a fixed anchor.

    Square families: fits kappa in E[Delta B] ~ kappa * d_eta * B (theory -2).
    Rect: fits A in E[<nu|Delta W|nu>]/d_eta ~ A (1 - lambda_nu) (theory 4).
    """
    if dt < 1:
        raise ValueError("need dt >= 1")
    rng = child_stream(seed, ANCHOR_STREAM_ID)
    signs = SignVector.uniform(kind, rng)
    d = kind.dimension
    equil = equilibration if equilibration is not None else int(math.ceil(d * math.log(d) / 4))
    signs = advance(signs, equil, rng)
    anchor = realize(signs)
    d_eta = dt / d

    burst_rng = child_stream(seed, 0)
    rect = kind.family == RECTANGULAR
    if rect:
        spec, basis = spectrum(anchor)
        x = 1.0 - spec.values
        xx = float(x @ x)
        theory_value = 4.0
    else:
        bb = float(np.sum(anchor.array * anchor.array))
        theory_value = -2.0

    s1 = s2 = 0.0
    for _ in range(samples):
        after = advance(signs, dt, burst_rng)
        delta = realize(after).array - anchor.array
        if rect:
            dw = wishart_increment(anchor, ScaledMatrix(kind, delta))
            y = np.einsum("pn,pq,qn->n", basis.vectors, dw, basis.vectors) / d_eta
            coeff = float((y @ x) / xx)
        else:
            coeff = float(np.sum(delta * anchor.array) / bb) / d_eta
        s1 += coeff
        s2 += coeff * coeff
    mean = s1 / samples
    se = math.sqrt(max(s2 / samples - mean * mean, 0.0) / samples)
    return DriftCheckReport(kind, samples, dt, mean, se, theory_value)


@dataclass(frozen=True)
class ScalingPoint:
    n: int
    diag_mean: float
    median_third: float
    median_fourth: float

    @property
    def third_ratio(self) -> float:
        return self.median_third / self.diag_mean

    @property
    def fourth_ratio(self) -> float:
        return self.median_fourth / self.diag_mean ** 2


@dataclass(frozen=True)
class ScalingReport:
    points: list[ScalingPoint]
    slope_third: float
    slope_fourth: float

    def ratios_shrink(self) -> tuple[bool, bool]:
        r3 = [p.third_ratio for p in self.points]
        r4 = [p.fourth_ratio for p in self.points]
        return r3[-1] < r3[0], r4[-1] < r4[0]


def higher_moment_scaling(configs: list[MomentConfig],
                          workers: int = 1) -> ScalingReport:
    """Median third/fourth mixed moments against N, with log-log slopes.

    The informative acceptance quantity is the ratio to the diagonal second
    moment (and its square), which must shrink as N grows; the raw slopes are
    reported for context.
    """
    if len(configs) < 2:
        raise ValueError("need at least two matrix sizes")
    if len({cfg.kind.n for cfg in configs}) != len(configs):
        raise ValueError("matrix sizes must differ")
    points = []
    for cfg in sorted(configs, key=lambda c: c.kind.n):
        est = estimate(cfg, workers=workers)
        bulk = est.bulk()
        off_mask = ~np.eye(bulk.size, dtype=bool)
        third = np.abs(est.third[np.ix_(bulk, bulk)][off_mask])
        fourth = np.abs(est.fourth[np.ix_(bulk, bulk)][off_mask])
        diag_mean = float(np.mean(np.diag(est.second[np.ix_(bulk, bulk)])))
        points.append(ScalingPoint(cfg.kind.n, diag_mean,
                                   float(np.median(third)), float(np.median(fourth))))
    ns = np.log([p.n for p in points])
    slope3 = float(np.polyfit(ns, np.log([p.median_third for p in points]), 1)[0])
    slope4 = float(np.polyfit(ns, np.log([p.median_fourth for p in points]), 1)[0])
    return ScalingReport(points, slope3, slope4)
