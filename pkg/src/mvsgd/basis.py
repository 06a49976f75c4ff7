"""Polynomial projection space on [0, T] and its pointwise operators.

The approximation space is spanned by the Lagrange polynomials g_0..g_n of
the Chebyshev nodes

    t_j = T/2 + (T/2) cos((2j+1) pi / (2n+2)),    j = 0..n,

which lie in the open interval (0, T) and decrease in j.  A coefficient
matrix a in R^{(n+1) x K} represents the K-component polynomial curve

    (La)(t) = sum_h a_h g_h(t),

so that (La)(t_j) = a_j exactly.  Evaluation uses the barycentric form,
which is numerically stable for the node counts used here.

This module also hosts the two pointwise nonlinearities applied to lifted
curves: the clamp (identity, or a smooth radial saturation with exact
Jacobian) and the norm penalty used to regularise the stochastic descent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "chebyshev_nodes",
    "LagrangeBasis",
    "interpolate_curve",
    "Clamp",
    "clamp_apply",
    "Penalty",
    "penalty_value",
    "penalty_gradient",
    "default_penalty_radius",
]


def chebyshev_nodes(n: int, horizon: float) -> np.ndarray:
    """Chebyshev nodes of the first kind mapped to (0, horizon).

    Returned in the natural index order, which is strictly decreasing in j
    and symmetric about horizon/2.
    """
    n = int(n)
    if n < 0:
        raise ValueError(f"degree n must be >= 0, got {n}")
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    j = np.arange(n + 1)
    return horizon / 2.0 + horizon / 2.0 * np.cos((2 * j + 1) * np.pi / (2 * n + 2))


class LagrangeBasis:
    """Lagrange basis over the Chebyshev nodes of [0, horizon].

    Immutable after construction.  `eval` returns the basis row g(t), and
    `lift` applies the lifting operator to a coefficient matrix.
    """

    def __init__(self, n: int, horizon: float):
        self.n = int(n)
        self.horizon = float(horizon)
        self.nodes = chebyshev_nodes(self.n, self.horizon)
        diff = self.nodes[:, None] - self.nodes[None, :]
        np.fill_diagonal(diff, 1.0)
        w = 1.0 / diff.prod(axis=1)
        # common rescaling cancels in the barycentric ratio
        self.weights = w / np.abs(w).max()

    def __repr__(self):  # pragma: no cover
        return f"LagrangeBasis(n={self.n}, horizon={self.horizon})"

    def _check_domain(self, ts: np.ndarray) -> np.ndarray:
        tol = 1e-10 * max(self.horizon, 1.0)
        if ts.size and (ts.min() < -tol or ts.max() > self.horizon + tol):
            raise ValueError(
                f"evaluation time outside [0, {self.horizon}]: "
                f"range [{ts.min()}, {ts.max()}]"
            )
        return np.clip(ts, 0.0, self.horizon)

    def eval(self, t) -> np.ndarray:
        """Basis values g_h(t): shape (n+1,) for scalar t, else (n+1, m)."""
        scalar = np.ndim(t) == 0
        ts = self._check_domain(np.atleast_1d(np.asarray(t, dtype=float)))
        d = ts[None, :] - self.nodes[:, None]  # (n+1, m)
        exact = d == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            r = self.weights[:, None] / d
            g = r / r.sum(axis=0, keepdims=True)
        hit = exact.any(axis=0)
        if hit.any():
            # a query exactly on a node: the basis row is one-hot there
            g[:, hit] = exact[:, hit].astype(float)
        return g[:, 0] if scalar else g

    def lift(self, a: np.ndarray, t) -> np.ndarray:
        """(La)(t) = sum_h a_h g_h(t): (K,) for scalar t, else (m, K)."""
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != self.n + 1:
            raise ValueError(
                f"coefficients must have shape (n+1, K) = ({self.n + 1}, K), "
                f"got {a.shape}"
            )
        g = self.eval(t)
        if g.ndim == 1:
            return a.T @ g
        return g.T @ a


def interpolate_curve(basis: LagrangeBasis, curve) -> np.ndarray:
    """Coefficients of the interpolant of `curve` at the basis nodes.

    `curve` maps a time to a K-vector (scalars are promoted to K=1); the
    result satisfies lift(a, t_j) = curve(t_j) by construction.
    """
    rows = [np.atleast_1d(np.asarray(curve(t), dtype=float)) for t in basis.nodes]
    return np.stack(rows, axis=0)


# ----- clamp -----


@dataclass(frozen=True)
class Clamp:
    """Pointwise map applied to lifted curve values.

    mode "identity" is a no-op.  mode "ball" saturates the Euclidean norm
    at `radius` through a C^1 radial profile: the map is the identity for
    |y| <= radius - smoothing, blends quadratically on
    [radius - smoothing, radius + smoothing], and is constant beyond, so
    outputs never exceed `radius` in norm.  Default smoothing is 10% of
    the radius.
    """

    mode: str = "identity"
    radius: float | None = None
    smoothing: float | None = None

    def __post_init__(self):
        if self.mode not in ("identity", "ball"):
            raise ValueError(f"unknown clamp mode {self.mode!r}")
        if self.mode == "ball":
            if self.radius is None or not self.radius > 0:
                raise ValueError("ball clamp requires radius > 0")
            if self.smoothing is None:
                object.__setattr__(self, "smoothing", 0.1 * self.radius)
            if not 0 < self.smoothing < self.radius:
                raise ValueError(
                    "ball clamp smoothing must lie in (0, radius), "
                    f"got {self.smoothing} for radius {self.radius}"
                )


def _radial_profile(clamp: Clamp, r: np.ndarray):
    """Saturation profile s(r) and its derivative for the ball clamp."""
    R, w = clamp.radius, clamp.smoothing
    inner = r <= R - w
    outer = r >= R + w
    blend = r - (r - (R - w)) ** 2 / (4.0 * w)
    s = np.where(inner, r, np.where(outer, R, blend))
    sp = np.where(inner, 1.0, np.where(outer, 0.0, 1.0 - (r - (R - w)) / (2.0 * w)))
    return s, sp


def clamp_apply(clamp: Clamp, y: np.ndarray):
    """Clamped value and exact Jacobian at y.

    y has shape (..., K); returns (value (..., K), jacobian (..., K, K)).
    """
    y = np.asarray(y, dtype=float)
    K = y.shape[-1]
    if clamp.mode == "identity":
        jac = np.broadcast_to(np.eye(K), y.shape + (K,)).copy()
        return y.copy(), jac
    r = np.linalg.norm(y, axis=-1)
    s, sp = _radial_profile(clamp, r)
    safe = np.where(r > 0, r, 1.0)
    u = np.where(r > 0, s / safe, 1.0)
    value = y * u[..., None]
    # d/dy [ y s(r)/r ] = (s/r) I + (s' r - s)/r^3 y y^T; the second factor
    # vanishes identically on the pass-through region
    coef = np.where(r > 0, (sp * r - s) / safe**3, 0.0)
    outer = y[..., :, None] * y[..., None, :]
    jac = u[..., None, None] * np.eye(K) + coef[..., None, None] * outer
    return value, jac


# ----- penalty -----


@dataclass(frozen=True)
class Penalty:
    """Norm penalty H added to the descent objective.

    mode "zero" contributes nothing.  mode "quadratic" with radius rho is
    H(a) = (|a| - rho)_+^2 on the Frobenius norm of the coefficient matrix;
    its gradient is Lipschitz with constant 2.
    """

    mode: str = "zero"
    rho: float | None = None

    def __post_init__(self):
        if self.mode not in ("zero", "quadratic"):
            raise ValueError(f"unknown penalty mode {self.mode!r}")
        if self.mode == "quadratic":
            if self.rho is None or not self.rho > 0:
                raise ValueError("quadratic penalty requires rho > 0")


def penalty_value(penalty: Penalty, a: np.ndarray) -> float:
    if penalty.mode == "zero":
        return 0.0
    excess = np.linalg.norm(a) - penalty.rho
    return float(excess**2) if excess > 0 else 0.0


def penalty_gradient(penalty: Penalty, a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if penalty.mode == "zero":
        return np.zeros_like(a)
    nrm = np.linalg.norm(a)
    if nrm <= penalty.rho:
        return np.zeros_like(a)
    return 2.0 * (nrm - penalty.rho) * a / nrm


def default_penalty_radius(phi_sup: float, n: int) -> float:
    """Heuristic penalty radius 2 * sup|phi| * sqrt(n+1)."""
    if not phi_sup > 0:
        raise ValueError("phi_sup must be positive")
    return 2.0 * phi_sup * np.sqrt(n + 1.0)
