"""Curve norms and error metrics on the simulation grid.

All integrals are left-endpoint Riemann sums over the same uniform grid
the simulations run on: ||f||^2 = sum_{i<steps} w(t_i) |f(t_i)|^2 h.
"""

from __future__ import annotations

import numpy as np

__all__ = ["l2_norm", "relative_error", "relative_error_values"]


def _values_matrix(curve, grid) -> np.ndarray:
    v = np.asarray(curve.values_on(grid), dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.shape[0] != grid.steps + 1:
        raise ValueError(
            f"curve values have {v.shape[0]} rows, expected {grid.steps + 1}"
        )
    return v


def _weights(grid, weight) -> np.ndarray:
    if weight is None:
        return np.ones(grid.steps)
    w = np.asarray(weight(grid.times[:-1]), dtype=float)
    if w.shape != (grid.steps,) or (w < 0).any():
        raise ValueError("weight must map grid times to nonnegative values")
    return w


def l2_norm(values: np.ndarray, grid, components=None, weight=None) -> float:
    """Discrete (optionally weighted) L2 norm of a sampled curve."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    v = v[:-1]
    if components is not None:
        v = v[:, list(components)]
    w = _weights(grid, weight)
    return float(np.sqrt((w * (v * v).sum(axis=1)).sum() * grid.h))


def relative_error_values(
    candidate_values, benchmark_values, grid, components=None, weight=None
) -> float:
    """||candidate - benchmark|| / ||benchmark|| on the grid's left endpoints."""
    cand = np.asarray(candidate_values, dtype=float)
    bench = np.asarray(benchmark_values, dtype=float)
    if cand.shape != bench.shape:
        raise ValueError(
            f"curve shapes differ: {cand.shape} vs {bench.shape}"
        )
    denom = l2_norm(bench, grid, components, weight)
    if denom == 0.0:
        raise ValueError("benchmark curve has zero norm on the active components")
    return l2_norm(cand - bench, grid, components, weight) / denom


def relative_error(candidate, benchmark, grid, components=None, weight=None) -> float:
    """Relative L2 distance between two curves evaluated on a common grid.

    `components` restricts the norm to the listed phi components, which is
    how constant (inactive) components are excluded; `weight` is an
    optional nonnegative function of time applied inside both norms.
    """
    cand = _values_matrix(candidate, grid)
    bench = _values_matrix(benchmark, grid)
    return relative_error_values(cand, bench, grid, components, weight)
