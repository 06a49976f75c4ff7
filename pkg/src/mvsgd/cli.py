"""Command-line front end: run / benchmark / density.

Exit codes: 0 success, 2 config error, 3 divergence, 4 tolerance not
reached under --strict-tol.  All numeric CSV output uses 12 significant
digits (the benchmark cache uses 17 so a reload is bit-exact), and
identically seeded invocations produce byte-identical run outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .analysis import relative_error_values
from .config import (
    ConfigError,
    ExperimentConfig,
    build_basis,
    build_clamp,
    build_grid,
    build_model,
    build_penalty,
    build_sgd_config,
    load_config,
)
from .hermite import density_reconstruct
from .models import SampledCurve, linear_oracle_curve
from .sgd import run
from .simulate import simulate_particle_system

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_TOL = 4


def _fmt(x, digits=12):
    return f"{x:.{digits}g}"


def _write_table(path, header, rows, digits=12):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [
                cell if isinstance(cell, str) else _fmt(cell, digits) for cell in row
            ]
            fh.write(",".join(cells) + "\n")


# ----- benchmark handling -----


def _benchmark_cache_path(cfg: ExperimentConfig, out_dir: Path) -> Path:
    params = "-".join(
        f"{k}_{_fmt(v)}" for k, v in sorted(cfg.model_params.items())
    )
    name = (
        f"gamma_{cfg.model_name}_{params}"
        f"_N{cfg.benchmark_n}_h{_fmt(cfg.h)}_seed{cfg.benchmark_seed}.csv"
    )
    return out_dir / "benchmarks" / name


def _load_benchmark(path: Path, grid, K: int) -> SampledCurve:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape != (grid.steps + 1, K + 1):
        raise ConfigError(
            f"benchmark cache {path} has shape {data.shape}, "
            f"expected {(grid.steps + 1, K + 1)}; delete it to recompute"
        )
    return SampledCurve(grid=grid, values=data[:, 1:])


def _store_benchmark(path: Path, grid, curve: SampledCurve):
    path.parent.mkdir(parents=True, exist_ok=True)
    K = curve.values.shape[1]
    header = ["t"] + [f"gamma_{k}" for k in range(K)]
    rows = [
        [t] + list(vals) for t, vals in zip(grid.times, curve.values)
    ]
    _write_table(path, header, rows, digits=17)


def _ensure_benchmark(cfg: ExperimentConfig, model, grid, out_dir: Path, *, refresh=False):
    if cfg.benchmark_kind == "analytic":
        if cfg.model_name != "linear-oracle":
            raise ConfigError(
                "benchmark.kind 'analytic' is only available for the "
                "linear-oracle model"
            )
        return linear_oracle_curve(cfg.model_params["x0"], grid), None
    path = _benchmark_cache_path(cfg, out_dir)
    if path.exists() and not refresh:
        print(f"benchmark cache hit: {path}")
        return _load_benchmark(path, grid, model.K), path
    curve = simulate_particle_system(model, grid, cfg.benchmark_n, cfg.benchmark_seed)
    _store_benchmark(path, grid, curve)
    print(f"benchmark computed ({cfg.benchmark_n} particles): {path}")
    return curve, path


# ----- commands -----


def _write_curve_csv(path, grid, lifted, bench_values):
    K = lifted.shape[1]
    header = ["t"] + [f"curve_{k}" for k in range(K)]
    cols = [grid.times[:, None], lifted]
    if bench_values is not None:
        header += [f"benchmark_{k}" for k in range(K)]
        cols.append(bench_values)
    table = np.hstack(cols)
    _write_table(path, header, table)


def cmd_run(cfg: ExperimentConfig, strict_tol: bool = False) -> int:
    model = build_model(cfg)
    grid = build_grid(cfg)
    basis = build_basis(cfg, model)
    clamp = build_clamp(cfg)
    penalty = build_penalty(cfg, model)
    sgd_cfg = build_sgd_config(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    bench = None
    bench_values = None
    if cfg.benchmark_enable:
        bench, _ = _ensure_benchmark(cfg, model, grid, out_dir)
        bench_values = bench.values_on(grid)

    agg_rows = []
    timing_rows = []
    reports = []
    for r in range(cfg.repeat):
        report = run(
            model, basis, grid, sgd_cfg, clamp, penalty, bench, seed=cfg.seed + r
        )
        reports.append(report)
        report.write_csv(out_dir / f"run_{r:03d}.csv")
        final = report.final_coeffs
        if np.isfinite(final).all():
            lifted = basis.lift(final, grid.times)
            _write_curve_csv(out_dir / f"curve_{r:03d}.csv", grid, lifted, bench_values)
        eps = report.records[-1].epsilon
        agg_rows.append(
            [str(r), str(report.iterations), report.termination,
             "" if eps is None else _fmt(eps)]
        )
        timing_rows.append([str(r), _fmt(report.total_time)])
        print(
            f"run {r:03d}: iterations={report.iterations} "
            f"termination={report.termination}"
            + (f" epsilon={eps:.4g}" if eps is not None else "")
        )

    mean_iters = float(np.mean([rep.iterations for rep in reports]))
    agg_rows.append(["mean", _fmt(mean_iters), "", ""])
    _write_table(
        out_dir / "aggregate.csv",
        ["run", "iterations", "termination", "final_epsilon"],
        agg_rows,
    )
    mean_time = float(np.mean([rep.total_time for rep in reports]))
    timing_rows.append(["mean", _fmt(mean_time)])
    _write_table(out_dir / "timings.csv", ["run", "seconds"], timing_rows)

    reached = sum(rep.tol_reached for rep in reports)
    print(f"mean iterations: {mean_iters:.4g} (tolerance reached in {reached}/{cfg.repeat} runs)")
    if any(rep.termination == "diverged" for rep in reports):
        print("at least one run diverged", file=sys.stderr)
        return EXIT_DIVERGED
    if strict_tol and cfg.benchmark_enable and reached < cfg.repeat:
        print("tolerance not reached in every run (--strict-tol)", file=sys.stderr)
        return EXIT_TOL
    return EXIT_OK


def cmd_benchmark(cfg: ExperimentConfig) -> int:
    model = build_model(cfg)
    grid = build_grid(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _, path = _ensure_benchmark(cfg, model, grid, out_dir, refresh=True)
    if path is None:
        print("analytic benchmark needs no cache")
    return EXIT_OK


def cmd_density(cfg: ExperimentConfig, strict_tol: bool = False) -> int:
    if cfg.model_name != "convolution":
        raise ConfigError("the density command requires model.name = convolution")
    if not cfg.benchmark_enable:
        raise ConfigError("the density command requires benchmark.enable = true")
    model = build_model(cfg)
    grid = build_grid(cfg)
    basis = build_basis(cfg, model)
    clamp = build_clamp(cfg)
    penalty = build_penalty(cfg, model)
    sgd_cfg = build_sgd_config(cfg)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    bench, _ = _ensure_benchmark(cfg, model, grid, out_dir)
    bench_values = bench.values_on(grid)
    report = run(model, basis, grid, sgd_cfg, clamp, penalty, bench, seed=cfg.seed)
    report.write_csv(out_dir / "run_000.csv")
    eps = report.records[-1].epsilon
    print(
        f"run 000: iterations={report.iterations} termination={report.termination}"
        + (f" epsilon={eps:.4g}" if eps is not None else "")
    )
    if report.termination == "diverged":
        print("run diverged", file=sys.stderr)
        return EXIT_DIVERGED

    lifted = basis.lift(report.final_coeffs, grid.times)
    _write_curve_csv(out_dir / "curve_000.csv", grid, lifted, bench_values)

    k_trunc = int(cfg.model_params["k_trunc"])
    xs = np.linspace(cfg.density_x_min, cfg.density_x_max, cfg.density_points)
    gamma_sgd = lifted[-1, : k_trunc + 1]
    gamma_mc = bench_values[-1, : k_trunc + 1]
    w_sgd = density_reconstruct(gamma_sgd, xs)
    w_mc = density_reconstruct(gamma_mc, xs)
    _write_table(
        out_dir / "density.csv",
        ["x", "w_sgd", "w_mc"],
        np.column_stack([xs, w_sgd, w_mc]),
    )
    print(f"density table written: {out_dir / 'density.csv'}")
    if strict_tol and not report.tol_reached:
        print("tolerance not reached (--strict-tol)", file=sys.stderr)
        return EXIT_TOL
    return EXIT_OK


# ----- argument parsing -----


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvsgd",
        description="stochastic gradient approximation of mean-field curves",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("run", "run the SGD experiment described by the config"),
        ("benchmark", "compute and cache the particle-system benchmark curve"),
        ("density", "run SGD and reconstruct the terminal density (convolution model)"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, default=None, help="override sgd.seed")
        p.add_argument("--out-dir", default=None, help="override output.directory")
        if name in ("run", "density"):
            p.add_argument(
                "--strict-tol",
                action="store_true",
                help="exit nonzero when the tolerance is not reached",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out_dir is not None:
            cfg.out_dir = args.out_dir
        if args.command == "run":
            return cmd_run(cfg, args.strict_tol)
        if args.command == "benchmark":
            return cmd_benchmark(cfg)
        return cmd_density(cfg, args.strict_tol)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
