"""Command-line front end: seeded reproducible runs emitting CSV/JSON artifacts.

Subcommands: hamming | spectra | moments | oracle | stationary.  All file
schemas are documented in docs/formats.md and versioned in the header comment
of every file.  Exit codes: 0 success, 1 usage error, 2 numerical failure,
3 acceptance/comparison failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__, exact_oracle, hamming, metawalk, moments, stats, theory
from .ensemble import (ConfigurationError, EnsembleKind, SignVector,
                       imaginary_antisymmetric, real_symmetric, rectangular,
                       realize)
from .spectral import NumericalError, spectrum_values

USAGE_ERROR = 1
NUMERICAL_ERROR = 2
COMPARISON_FAILURE = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _version_string() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).parent)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return __version__


def _config_sha(cfg: dict) -> str:
    blob = json.dumps({k: str(v) for k, v in sorted(cfg.items())}, sort_keys=True)
    return hashlib.sha1(blob.encode()).hexdigest()[:12]


def _header(schema: str, cfg: dict) -> str:
    return (f"# schema={schema} seed={cfg.get('seed')} "
            f"config_sha={_config_sha(cfg)} version={_version_string()}")


def write_csv(path: Path, schema: str, cfg: dict, columns: list[str],
              rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_header(schema, cfg), ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, schema: str, cfg: dict, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    body = {"schema": schema, "seed": cfg.get("seed"),
            "config_sha": _config_sha(cfg), "version": _version_string(),
            **payload}
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def kind_from_args(args) -> EnsembleKind:
    if args.kind == "realsym":
        return real_symmetric(args.n)
    if args.kind == "antisym":
        return imaginary_antisymmetric(args.n)
    if args.kind == "rect":
        if args.m is None:
            raise UsageError("rect kind needs --m")
        return rectangular(args.n, args.m)
    raise UsageError(f"unknown kind {args.kind!r}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=["realsym", "antisym", "rect"], default="realsym")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--seed", type=int, required=False)
    p.add_argument("--walkers", type=int, default=5)
    p.add_argument("--eta-max", type=float, default=6.0)
    p.add_argument("--c", dest="c_exponent", type=float, default=0.5)
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", type=Path, default=None,
                   help="flat key=value file; command-line flags override")


def build_parser() -> _Parser:
    parser = _Parser(prog="signwalk")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("hamming", help="distance-from-start process and mixing curves")
    _add_common(p)
    p.add_argument("--stride", type=int, default=None)

    p = sub.add_parser("spectra", help="spectral trajectories along walks")
    _add_common(p)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--pool-draws", type=int, default=0,
                   help="extra independent draws for a stationary histogram")
    p.add_argument("--bins", type=int, default=50)

    p = sub.add_parser("moments", help="drift/diffusion moment estimation")
    _add_common(p)
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--dt", type=int, default=None)

    p = sub.add_parser("oracle", help="brute-force checks on tiny hypercubes")
    _add_common(p)
    p.add_argument("--mc-samples", type=int, default=100000)
    p.add_argument("--exact", action="store_true",
                   help="use exact rational arithmetic (d <= 12)")
    p.add_argument("--cache-dir", type=Path, default=None)

    p = sub.add_parser("stationary", help="pooled stationary spectra and spacing stats")
    _add_common(p)
    p.add_argument("--draws", type=int, default=500)
    p.add_argument("--bins", type=int, default=50)
    return parser


def _load_config_file(path: Path) -> dict:
    out = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"bad config line: {line!r}")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        file_conf = _load_config_file(args.config)
        # Re-parse so explicit flags win over file values over defaults.
        parser2 = build_parser()
        for action in parser2._subparsers._group_actions[0].choices[args.command]._actions:
            if action.dest in file_conf:
                value = file_conf[action.dest]
                action.default = action.type(value) if action.type else value
        args = parser2.parse_args(argv)
    if args.seed is None:
        raise UsageError("--seed is required for stochastic runs")
    if args.eta_max <= 0:
        raise UsageError("--eta-max must be positive")
    return args


def _cfg_dict(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "config"}


def cmd_hamming(args) -> int:
    kind = kind_from_args(args)
    d = kind.dimension
    cfg = _cfg_dict(args)
    out = args.out
    steps = int(round(args.eta_max * d))
    stride = args.stride or max(1, d // 10)

    start = SignVector.all_plus(kind)
    observer = {"hamming": metawalk.hamming_observer(start)}
    rows = []
    for w in range(args.walkers):
        state = metawalk.WalkState(start, 0, metawalk.child_stream(args.seed, w))
        traj = metawalk.run(state, steps, observer, stride)["hamming"]
        rows.extend((w, int(t), float(e), "hamming", float(v))
                    for t, e, v in zip(traj.times, traj.etas, traj.values))
    if args.walkers > 0:
        write_csv(out / "trajectory.csv", "trajectory-v1", cfg,
                  ["walker_id", "t", "eta", "observable", "value"], rows)

    times = np.unique(np.concatenate([
        np.arange(0, steps + 1, stride), [steps]])).astype(np.int64)
    times = times[times >= 0]
    tv = hamming.tv_exact_curve(d, times)
    curve_rows = [(int(t), t / d, float(v),
                   float(hamming.tv_asymptotic(t, d)), float(hamming.tv_tail(t, d)))
                  for t, v in zip(times, tv)]
    write_csv(out / "tv_curve.csv", "tv-curve-v1", cfg,
              ["t", "eta", "tv_exact", "tv_asymptotic", "tail_form"], curve_rows)

    mapped = hamming.ou_limit(hamming.stationary(d))
    payload = {
        "eta_crit": hamming.t_crit(d) / d,
        "t_crit": hamming.t_crit(d),
        "d": d,
        "ou_drift_slope": mapped.drift_slope,
        "ou_diffusion": mapped.diffusion,
        "stationary_xi_mean": mapped.mean(),
        "stationary_xi_variance": mapped.variance(),
    }
    window = [row[4] for row in rows if 3.0 <= row[2] <= 6.0]
    if window:
        payload["window_mean_fraction"] = float(np.mean(window) / (d + 1))
    write_json(out / "ou_report.json", "ou-report-v1", cfg, payload)
    return 0


def cmd_spectra(args) -> int:
    kind = kind_from_args(args)
    d = kind.dimension
    k = kind.spectrum_size
    cfg = _cfg_dict(args)
    out = args.out
    steps = int(round(args.eta_max * d))
    stride = args.stride or max(1, d // 10)

    columns = ["walker_id", "t", "eta"] + [f"lambda_{i + 1}" for i in range(k)]
    rows = []
    for w in range(args.walkers):
        rng = metawalk.child_stream(args.seed, w)
        signs = SignVector.all_plus(kind)
        t = 0
        rows.append((w, t, 0.0) + tuple(map(float, spectrum_values(realize(signs)))))
        while t < steps:
            chunk = min(stride, steps - t)
            signs = metawalk.advance(signs, chunk, rng)
            t += chunk
            rows.append((w, t, t / d) + tuple(map(float, spectrum_values(realize(signs)))))
    write_csv(out / "spectra.csv", "spectra-v1", cfg, columns, rows)

    if args.pool_draws > 0:
        rng = metawalk.child_stream(args.seed, 10 ** 6)
        pooled = np.concatenate([
            spectrum_values(realize(SignVector.uniform(kind, rng)))
            for _ in range(args.pool_draws)])
        lo, hi = float(pooled.min()), float(pooled.max())
        edges = np.linspace(lo, hi, args.bins + 1)
        counts, _ = np.histogram(pooled, bins=edges)
        dens = counts / counts.sum() / np.diff(edges)
        centres = (edges[:-1] + edges[1:]) / 2
        write_csv(out / "histogram.csv", "histogram-v1", cfg,
                  ["bin_left", "bin_right", "count", "density", "theory_density"],
                  [(float(edges[i]), float(edges[i + 1]), int(counts[i]),
                    float(dens[i]), float(theory.limiting_density(kind, centres[i: i + 1])[0]))
                   for i in range(args.bins)])
    return 0


def cmd_moments(args) -> int:
    kind = kind_from_args(args)
    cfg = _cfg_dict(args)
    out = args.out
    if args.dt is not None and args.dt < 1:
        raise UsageError("--dt must be a positive step count")

    base = dict(kind=kind, samples=args.samples, seed=args.seed,
                c_exponent=args.c_exponent, dt=args.dt)
    est = moments.estimate(moments.MomentConfig(**base), workers=args.workers)
    write_json(out / "moment_estimate.json", "moment-estimate-v1", cfg,
               est.to_json_dict())

    fixed = moments.estimate(
        moments.MomentConfig(**base, anchor_mode="fixed"), workers=args.workers)
    write_json(out / "moment_estimate_fixed.json", "moment-estimate-v1", cfg,
               fixed.to_json_dict())

    bulk = est.bulk()
    n = kind.n
    reports = []
    if kind.family == "rect":
        lam = est.lam_anchor[bulk]
        slope, intercept, r2 = stats.drift_regression(
            est.diffusion[bulk], np.maximum(est.diffusion_se[bulk], 1e-300), lam)
        reports.append(stats.ComparisonReport(
            "diffusion_slope_vs_lambda", abs(n * slope - 16.0), 1.6,
            est.n_samples, args.seed))
    else:
        target = 8.0 if kind.family == "realsym" else 4.0
        bulk_mean = float(np.mean(est.diffusion[bulk])) * n
        reports.append(stats.ComparisonReport(
            "diffusion_bulk_mean", abs(bulk_mean - target), 0.1 * target,
            est.n_samples, args.seed))

    fb = fixed.bulk()
    slope, intercept, r2 = stats.drift_regression(
        fixed.drift[fb], np.maximum(fixed.drift_se[fb], 1e-300),
        fixed.theory_drift[fb])
    reports.append(stats.ComparisonReport(
        "drift_regression_slope", abs(slope - 1.0), 0.1, fixed.n_samples, args.seed))
    reports.append(stats.ComparisonReport(
        "drift_regression_r2", 1.0 - r2, 0.05, fixed.n_samples, args.seed))

    write_json(out / "comparison_report.json", "comparison-v1", cfg,
               {"reports": [r.to_dict() for r in reports],
                "drift_slope": slope, "drift_intercept": intercept, "drift_r2": r2})
    return 0 if all(r.passed for r in reports) else COMPARISON_FAILURE


def cmd_oracle(args) -> int:
    kind = kind_from_args(args)
    d = kind.dimension
    cfg = _cfg_dict(args)
    if d > exact_oracle.FLOAT_GUARD:
        raise UsageError(f"d={d} exceeds the oracle guard {exact_oracle.FLOAT_GUARD}")
    if args.exact and d > exact_oracle.EXACT_GUARD:
        raise UsageError(
            f"exact rational mode refused: d={d} exceeds guard {exact_oracle.EXACT_GUARD}")

    reports = []
    start = SignVector.all_plus(kind)
    for dt in (1, 2, 3):
        kernel = exact_oracle.exact_transition_kernel(start, dt)
        closed = metawalk.prob_max_distance(d, dt)
        reports.append(stats.ComparisonReport(
            f"kernel_max_distance_dt{dt}", abs(float(kernel[dt]) - closed), 1e-13, 1))

    dist = exact_oracle.point_distribution(d, exact_oracle.signs_to_state(start))
    rec = hamming.point_mass(d)
    worst = 0.0
    for _ in range(min(50, 4 * d)):
        dist = exact_oracle.apply_walk_operator(dist)
        rec = hamming.evolve(rec)
        worst = max(worst, float(np.max(np.abs(
            exact_oracle.hamming_marginal(dist, exact_oracle.signs_to_state(start))
            - rec.probs))))
    reports.append(stats.ComparisonReport("marginal_vs_recursion", worst, 1e-13, 1))

    if args.exact:
        probs = [0] * (1 << d)
        probs[0] = 1
        from fractions import Fraction
        probs = [Fraction(p) for p in probs]
        for _ in range(3):
            probs = exact_oracle.apply_walk_operator_exact(probs, d)
        reports.append(stats.ComparisonReport(
            "exact_mass_conservation", abs(float(sum(probs) - 1)), 0.0, 1))

    cache_dir = args.cache_dir or (args.out / "oracle_cache")
    measure = exact_oracle.cached_stationary_spectral_measure(kind, cache_dir)
    if args.mc_samples > 0:
        rng = metawalk.child_stream(args.seed, 0)
        burn = int(10 * hamming.t_crit(d)) + 1
        stride_steps = max(1, int(2 * hamming.t_crit(d)))
        signs = metawalk.advance(SignVector.uniform(kind, rng), burn, rng)
        samples = np.empty((args.mc_samples, kind.spectrum_size))
        for i in range(args.mc_samples):
            signs = metawalk.advance(signs, stride_steps, rng)
            samples[i] = spectrum_values(realize(signs))
        tv = exact_oracle.spectral_measure_tv(measure, samples)
        reports.append(stats.ComparisonReport(
            "stationary_measure_tv", tv, 0.02, args.mc_samples, args.seed))

    write_json(args.out / "oracle_report.json", "comparison-v1", cfg,
               {"reports": [r.to_dict() for r in reports], "d": d})
    return 0 if all(r.passed for r in reports) else COMPARISON_FAILURE


def cmd_stationary(args) -> int:
    kind = kind_from_args(args)
    cfg = _cfg_dict(args)
    out = args.out
    rng = metawalk.child_stream(args.seed, 0)
    spectra = [spectrum_values(realize(SignVector.uniform(kind, rng)))
               for _ in range(args.draws)]
    pooled = np.concatenate(spectra)

    write_csv(out / "pooled_eigenvalues.csv", "pooled-v1", cfg,
              ["draw", "index", "value"],
              [(i, j, float(v)) for i, row in enumerate(spectra)
               for j, v in enumerate(row)])

    edges = np.linspace(float(pooled.min()), float(pooled.max()), args.bins + 1)
    counts, _ = np.histogram(pooled, bins=edges)
    dens = counts / counts.sum() / np.diff(edges)
    centres = (edges[:-1] + edges[1:]) / 2
    write_csv(out / "histogram.csv", "histogram-v1", cfg,
              ["bin_left", "bin_right", "count", "density", "theory_density"],
              [(float(edges[i]), float(edges[i + 1]), int(counts[i]), float(dens[i]),
                float(theory.limiting_density(kind, centres[i:i + 1])[0]))
               for i in range(args.bins)])

    ks = stats.ks_distance(pooled, lambda x: theory.limiting_cdf(kind, x))
    spacings = stats.unfold_and_spacings(spectra, kind)
    write_csv(out / "spacings.csv", "spacings-v1", cfg, ["spacing"],
              [(float(s),) for s in spacings])
    threshold = 0.03 if kind.family == "rect" else 0.02
    report = stats.ComparisonReport("pooled_ks_vs_limit", ks, threshold,
                                    pooled.size, args.seed)
    write_json(out / "ks_report.json", "comparison-v1", cfg, {
        "reports": [report.to_dict()],
        "mean_unfolded_spacing": float(np.mean(spacings)),
        "ks_goe_surmise": stats.ks_distance(spacings, stats.wigner_surmise_goe_cdf),
        "ks_gue_surmise": stats.ks_distance(spacings, stats.wigner_surmise_gue_cdf),
        "ks_poisson": stats.ks_distance(spacings, stats.poisson_spacing_cdf),
    })
    return 0 if report.passed else COMPARISON_FAILURE


COMMANDS = {
    "hamming": cmd_hamming,
    "spectra": cmd_spectra,
    "moments": cmd_moments,
    "oracle": cmd_oracle,
    "stationary": cmd_stationary,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ConfigurationError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
