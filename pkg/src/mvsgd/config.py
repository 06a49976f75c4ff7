"""Experiment configuration: nested YAML sections, validation, round trip.

The on-disk format is a YAML mapping with sections model / basis / clamp /
penalty / grid / sgd / benchmark / output / density plus a top-level
`repeat`.  Only model.name is required; everything else has documented
defaults.  `from_dict(to_dict(cfg))` is the identity, and unknown keys are
rejected with the offending dotted name in the message.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .basis import Clamp, LagrangeBasis, Penalty, default_penalty_radius
from .models import (
    SeparableModel,
    make_convolution_projected,
    make_kuramoto,
    make_linear_oracle,
    make_polydrift,
)
from .sgd import SGDConfig, WeightSpec
from .simulate import TimeGrid

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "dump_config",
    "build_model",
    "build_grid",
    "build_basis",
    "build_clamp",
    "build_penalty",
    "build_sgd_config",
]


class ConfigError(ValueError):
    pass


MODEL_DEFAULTS = {
    "kuramoto": {"T": 0.5, "x0": 0.5, "sigma": 0.5},
    "polydrift": {"T": 0.1, "x0": 1.0, "delta": 0.8},
    "convolution": {"T": 1.0, "k_trunc": 10, "sigma": 0.1},
    "linear-oracle": {"T": 1.0, "x0": 1.0},
}


@dataclass
class ExperimentConfig:
    model_name: str
    model_params: dict = field(default_factory=dict)
    n: int = 3
    clamp_mode: str = "identity"
    clamp_radius: float | None = None
    clamp_smoothing: float | None = None
    penalty_mode: str = "zero"
    penalty_rho: float | None = None
    h: float = 0.01
    r0: float = 1.0
    rho: float = 0.7
    M: int = 100
    m_max: int = 500
    tol: float = 0.01
    seed: int = 0
    weight_c1: float | None = None
    weight_c2: float | None = None
    benchmark_enable: bool = True
    benchmark_kind: str = "particles"
    benchmark_n: int = 100000
    benchmark_seed: int = 7
    out_dir: str = "out"
    repeat: int = 1
    density_x_min: float = -3.0
    density_x_max: float = 4.0
    density_points: int = 141


def _coerce(value, kind, key):
    try:
        if kind is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if kind is int:
            out = int(value)
            if out != float(value):
                raise TypeError
            return out
        if kind is float:
            return float(value)
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
    except (TypeError, ValueError):
        raise ConfigError(f"key {key} has invalid value {value!r}") from None
    raise AssertionError(kind)  # pragma: no cover


def _section(data, name):
    sec = data.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section {name} must be a mapping")
    return dict(sec)


def _reject_unknown(section: dict, name: str, allowed):
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key {name}.{unknown[0]}")


def from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    known_sections = {
        "model", "basis", "clamp", "penalty", "grid", "sgd",
        "benchmark", "output", "density", "repeat",
    }
    unknown = sorted(set(data) - known_sections)
    if unknown:
        raise ConfigError(f"unknown section {unknown[0]}")

    model = _section(data, "model")
    if "name" not in model:
        raise ConfigError("missing required key model.name")
    name = model.pop("name")
    if name not in MODEL_DEFAULTS:
        raise ConfigError(
            f"model.name must be one of {sorted(MODEL_DEFAULTS)}, got {name!r}"
        )
    defaults = MODEL_DEFAULTS[name]
    _reject_unknown(model, "model", defaults)
    params = {}
    for key, default in defaults.items():
        kind = int if key == "k_trunc" else float
        params[key] = _coerce(model.get(key, default), kind, f"model.{key}")

    cfg = ExperimentConfig(model_name=name, model_params=params)

    basis_sec = _section(data, "basis")
    _reject_unknown(basis_sec, "basis", {"n"})
    if "n" in basis_sec:
        cfg.n = _coerce(basis_sec["n"], int, "basis.n")

    clamp_sec = _section(data, "clamp")
    _reject_unknown(clamp_sec, "clamp", {"mode", "radius", "smoothing"})
    cfg.clamp_mode = _coerce(clamp_sec.get("mode", cfg.clamp_mode), str, "clamp.mode")
    if clamp_sec.get("radius") is not None:
        cfg.clamp_radius = _coerce(clamp_sec["radius"], float, "clamp.radius")
    if clamp_sec.get("smoothing") is not None:
        cfg.clamp_smoothing = _coerce(clamp_sec["smoothing"], float, "clamp.smoothing")

    pen_sec = _section(data, "penalty")
    _reject_unknown(pen_sec, "penalty", {"mode", "rho"})
    cfg.penalty_mode = _coerce(pen_sec.get("mode", cfg.penalty_mode), str, "penalty.mode")
    if pen_sec.get("rho") is not None:
        cfg.penalty_rho = _coerce(pen_sec["rho"], float, "penalty.rho")

    grid_sec = _section(data, "grid")
    _reject_unknown(grid_sec, "grid", {"h"})
    if "h" in grid_sec:
        cfg.h = _coerce(grid_sec["h"], float, "grid.h")

    sgd_sec = _section(data, "sgd")
    _reject_unknown(sgd_sec, "sgd", {"r0", "rho", "M", "m_max", "tol", "seed", "weight"})
    for key, kind in (
        ("r0", float), ("rho", float), ("M", int),
        ("m_max", int), ("tol", float), ("seed", int),
    ):
        if key in sgd_sec:
            setattr(cfg, key, _coerce(sgd_sec[key], kind, f"sgd.{key}"))
    weight_sec = sgd_sec.get("weight") or {}
    if not isinstance(weight_sec, dict):
        raise ConfigError("section sgd.weight must be a mapping")
    _reject_unknown(weight_sec, "sgd.weight", {"c1", "c2"})
    if weight_sec:
        if not {"c1", "c2"} <= set(weight_sec):
            raise ConfigError("sgd.weight requires both c1 and c2")
        cfg.weight_c1 = _coerce(weight_sec["c1"], float, "sgd.weight.c1")
        cfg.weight_c2 = _coerce(weight_sec["c2"], float, "sgd.weight.c2")

    bench_sec = _section(data, "benchmark")
    _reject_unknown(bench_sec, "benchmark", {"enable", "kind", "N", "seed"})
    if "enable" in bench_sec:
        cfg.benchmark_enable = _coerce(bench_sec["enable"], bool, "benchmark.enable")
    if "kind" in bench_sec:
        cfg.benchmark_kind = _coerce(bench_sec["kind"], str, "benchmark.kind")
        if cfg.benchmark_kind not in ("particles", "analytic"):
            raise ConfigError(
                f"benchmark.kind must be 'particles' or 'analytic', got {cfg.benchmark_kind!r}"
            )
    if "N" in bench_sec:
        cfg.benchmark_n = _coerce(bench_sec["N"], int, "benchmark.N")
    if "seed" in bench_sec:
        cfg.benchmark_seed = _coerce(bench_sec["seed"], int, "benchmark.seed")

    out_sec = _section(data, "output")
    _reject_unknown(out_sec, "output", {"directory"})
    if "directory" in out_sec:
        cfg.out_dir = _coerce(out_sec["directory"], str, "output.directory")

    if "repeat" in data and data["repeat"] is not None:
        cfg.repeat = _coerce(data["repeat"], int, "repeat")
        if cfg.repeat < 1:
            raise ConfigError(f"repeat must be >= 1, got {cfg.repeat}")

    dens_sec = _section(data, "density")
    _reject_unknown(dens_sec, "density", {"x_min", "x_max", "points"})
    if "x_min" in dens_sec:
        cfg.density_x_min = _coerce(dens_sec["x_min"], float, "density.x_min")
    if "x_max" in dens_sec:
        cfg.density_x_max = _coerce(dens_sec["x_max"], float, "density.x_max")
    if "points" in dens_sec:
        cfg.density_points = _coerce(dens_sec["points"], int, "density.points")
    return cfg


def to_dict(cfg: ExperimentConfig) -> dict:
    out = {
        "model": {"name": cfg.model_name, **cfg.model_params},
        "basis": {"n": cfg.n},
        "clamp": {"mode": cfg.clamp_mode},
        "penalty": {"mode": cfg.penalty_mode},
        "grid": {"h": cfg.h},
        "sgd": {
            "r0": cfg.r0, "rho": cfg.rho, "M": cfg.M,
            "m_max": cfg.m_max, "tol": cfg.tol, "seed": cfg.seed,
        },
        "benchmark": {
            "enable": cfg.benchmark_enable, "kind": cfg.benchmark_kind,
            "N": cfg.benchmark_n, "seed": cfg.benchmark_seed,
        },
        "output": {"directory": cfg.out_dir},
        "repeat": cfg.repeat,
        "density": {
            "x_min": cfg.density_x_min, "x_max": cfg.density_x_max,
            "points": cfg.density_points,
        },
    }
    if cfg.clamp_radius is not None:
        out["clamp"]["radius"] = cfg.clamp_radius
    if cfg.clamp_smoothing is not None:
        out["clamp"]["smoothing"] = cfg.clamp_smoothing
    if cfg.penalty_rho is not None:
        out["penalty"]["rho"] = cfg.penalty_rho
    if cfg.weight_c1 is not None:
        out["sgd"]["weight"] = {"c1": cfg.weight_c1, "c2": cfg.weight_c2}
    return out


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as err:
        raise ConfigError(f"config file is not valid YAML: {err}") from None
    return from_dict(data if data is not None else {})


def dump_config(cfg: ExperimentConfig, path):
    with open(path, "w") as fh:
        yaml.safe_dump(to_dict(cfg), fh, sort_keys=False)


# ----- builders -----


def _wrap(builder, *args, **kwargs):
    try:
        return builder(*args, **kwargs)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def build_model(cfg: ExperimentConfig) -> SeparableModel:
    p = cfg.model_params
    if cfg.model_name == "kuramoto":
        return _wrap(make_kuramoto, x0=p["x0"], sigma=p["sigma"], horizon=p["T"])
    if cfg.model_name == "polydrift":
        return _wrap(make_polydrift, x0=p["x0"], delta=p["delta"], horizon=p["T"])
    if cfg.model_name == "convolution":
        return _wrap(
            make_convolution_projected,
            k_trunc=p["k_trunc"], sigma=p["sigma"], horizon=p["T"],
        )
    if cfg.model_name == "linear-oracle":
        return _wrap(make_linear_oracle, x0=p["x0"], horizon=p["T"])
    raise ConfigError(f"unknown model {cfg.model_name!r}")  # pragma: no cover


def build_grid(cfg: ExperimentConfig) -> TimeGrid:
    return _wrap(TimeGrid.from_step, cfg.model_params["T"], cfg.h)


def build_basis(cfg: ExperimentConfig, model: SeparableModel) -> LagrangeBasis:
    return _wrap(LagrangeBasis, cfg.n, model.horizon)


def build_clamp(cfg: ExperimentConfig) -> Clamp:
    return _wrap(
        Clamp, mode=cfg.clamp_mode, radius=cfg.clamp_radius, smoothing=cfg.clamp_smoothing
    )


def build_penalty(cfg: ExperimentConfig, model: SeparableModel) -> Penalty:
    if cfg.penalty_mode == "zero":
        return Penalty()
    rho = cfg.penalty_rho
    if rho is None:
        if model.phi_sup is None:
            raise ConfigError(
                "penalty.rho is required for a quadratic penalty when the "
                f"model's phi is unbounded ({cfg.model_name})"
            )
        rho = default_penalty_radius(model.phi_sup, cfg.n)
    return _wrap(Penalty, mode=cfg.penalty_mode, rho=rho)


def build_sgd_config(cfg: ExperimentConfig) -> SGDConfig:
    weight = None
    if cfg.weight_c1 is not None:
        weight = _wrap(WeightSpec, c1=cfg.weight_c1, c2=cfg.weight_c2)
    return _wrap(
        SGDConfig,
        r0=cfg.r0, rho=cfg.rho, M=cfg.M, m_max=cfg.m_max,
        tol=cfg.tol, seed=cfg.seed, weight=weight,
    )
