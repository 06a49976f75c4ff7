"""Mean-field models with separable coefficients, and curve containers.

A model packages the coefficients of

    dX_t = gamma(t) ( alpha(t, X_t) dt + beta(t, X_t) dW_t ),
    X_0 ~ initial_law,    gamma(t) = E[ phi(X_t) ],

where gamma(t) is a K-vector contracting the K axis of alpha and beta.

Shape contract, batched over arbitrary leading axes of the state x:

    drift(t, x):              (..., d) -> (..., K, d)
    diffusion(t, x):          (..., d) -> (..., K, d, q)
    phi(x):                   (..., d) -> (..., K)
    phi_jacobian(x):          (..., d) -> (..., K, d)
    drift_jacobian(t, x):     (..., d) -> (..., K, d, d)    last axis: d/dx_i
    diffusion_jacobian(t, x): (..., d) -> (..., K, d, q, d)

t is a scalar.  The state jacobians are optional; simulation falls back to
central finite differences (step 1e-6) and flags the run when it does.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import LagrangeBasis
from . import hermite

__all__ = [
    "InitialLaw",
    "SeparableModel",
    "LiftedCurve",
    "SampledCurve",
    "make_kuramoto",
    "make_polydrift",
    "make_linear_oracle",
    "make_convolution_projected",
    "linear_oracle_curve",
    "fd_drift_jacobian",
    "fd_diffusion_jacobian",
    "check_model",
]

FD_JACOBIAN_STEP = 1e-6


# ----- initial laws -----


@dataclass(frozen=True)
class InitialLaw:
    """Law of X_0.  kinds: "dirac", "gaussian" (standard), "custom".

    Custom laws supply sampler(rng, n) -> (n, d).  Dirac sampling returns
    x0 exactly, with no rng consumption.
    """

    kind: str
    d: int
    x0: np.ndarray | None = None
    sampler: Callable | None = None

    @classmethod
    def dirac(cls, x0) -> "InitialLaw":
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        return cls(kind="dirac", d=x0.size, x0=x0)

    @classmethod
    def standard_gaussian(cls, d: int = 1) -> "InitialLaw":
        return cls(kind="gaussian", d=int(d))

    @classmethod
    def custom(cls, sampler: Callable, d: int) -> "InitialLaw":
        return cls(kind="custom", d=int(d), sampler=sampler)

    def sample(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        size = 1 if n is None else int(n)
        if self.kind == "dirac":
            out = np.tile(self.x0, (size, 1))
        elif self.kind == "gaussian":
            out = rng.standard_normal((size, self.d))
        elif self.kind == "custom":
            out = np.asarray(self.sampler(rng, size), dtype=float)
            if out.shape != (size, self.d):
                raise ValueError(
                    f"custom sampler returned shape {out.shape}, "
                    f"expected {(size, self.d)}"
                )
        else:  # pragma: no cover
            raise ValueError(f"unknown initial law kind {self.kind!r}")
        return out[0] if n is None else out


# ----- the model container -----


@dataclass(frozen=True)
class SeparableModel:
    name: str
    d: int
    q: int
    K: int
    drift: Callable
    diffusion: Callable
    phi: Callable
    phi_jacobian: Callable
    initial_law: InitialLaw
    horizon: float
    drift_jacobian: Callable | None = None
    diffusion_jacobian: Callable | None = None
    # components actually learned by the descent; None means all of them.
    # Constant phi components (known to give gamma_k == 1) are left out.
    active_components: tuple[int, ...] | None = None
    # sup_x |phi(x)| when finite and known; feeds the penalty-radius heuristic
    phi_sup: float | None = None

    def __post_init__(self):
        if min(self.d, self.q, self.K) < 1:
            raise ValueError("d, q, K must all be >= 1")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")


def fd_drift_jacobian(drift: Callable, step: float = FD_JACOBIAN_STEP) -> Callable:
    """Central finite-difference state jacobian of a drift-like callable."""

    def jac(t, x):
        x = np.asarray(x, dtype=float)
        d = x.shape[-1]
        cols = []
        for i in range(d):
            e = np.zeros(d)
            e[i] = step
            cols.append((drift(t, x + e) - drift(t, x - e)) / (2.0 * step))
        return np.stack(cols, axis=-1)

    return jac


# same construction; the extra q axis rides along in the stack
fd_diffusion_jacobian = fd_drift_jacobian


# ----- curve containers -----


@dataclass(frozen=True)
class LiftedCurve:
    """Curve represented by basis coefficients, evaluated by lifting."""

    basis: LagrangeBasis
    coeffs: np.ndarray

    def values_on(self, grid) -> np.ndarray:
        return self.basis.lift(self.coeffs, grid.times)


@dataclass(frozen=True)
class SampledCurve:
    """Curve known only through its values on a fixed time grid."""

    grid: object
    values: np.ndarray  # (steps + 1, K)

    def values_on(self, grid) -> np.ndarray:
        same = grid.steps == self.grid.steps and np.isclose(
            grid.horizon, self.grid.horizon, rtol=1e-12, atol=0.0
        )
        if not same:
            raise ValueError(
                "sampled curve lives on a different grid "
                f"(steps {self.grid.steps} vs {grid.steps}, "
                f"horizon {self.grid.horizon} vs {grid.horizon})"
            )
        return self.values


# ----- built-in models -----


def make_kuramoto(x0: float = 0.5, sigma: float = 0.5, horizon: float = 0.5) -> SeparableModel:
    """Mean-field oscillator: dX = (E[sin X] cos X - E[cos X] sin X) dt + sigma dW.

    phi = (sin x, cos x, 1); the third component is constant, so only the
    first two are active.  With the drift suppressed, X_t = x0 + sigma W_t
    and E[sin X_t] = sin(x0) exp(-sigma^2 t / 2), which serves as an oracle.
    """

    def phi(x):
        xx = x[..., 0]
        return np.stack([np.sin(xx), np.cos(xx), np.ones_like(xx)], axis=-1)

    def phi_jacobian(x):
        xx = x[..., 0]
        return np.stack([np.cos(xx), -np.sin(xx), np.zeros_like(xx)], axis=-1)[..., None]

    def drift(t, x):
        xx = x[..., 0]
        return np.stack([np.cos(xx), -np.sin(xx), np.zeros_like(xx)], axis=-1)[..., None]

    def diffusion(t, x):
        xx = x[..., 0]
        z = np.zeros_like(xx)
        return np.stack([z, z, np.full_like(xx, sigma)], axis=-1)[..., None, None]

    def drift_jacobian(t, x):
        xx = x[..., 0]
        return np.stack([-np.sin(xx), -np.cos(xx), np.zeros_like(xx)], axis=-1)[
            ..., None, None
        ]

    def diffusion_jacobian(t, x):
        return np.zeros(x.shape[:-1] + (3, 1, 1, 1))

    return SeparableModel(
        name="kuramoto",
        d=1,
        q=1,
        K=3,
        drift=drift,
        diffusion=diffusion,
        phi=phi,
        phi_jacobian=phi_jacobian,
        drift_jacobian=drift_jacobian,
        diffusion_jacobian=diffusion_jacobian,
        initial_law=InitialLaw.dirac(x0),
        horizon=horizon,
        active_components=(0, 1),
        phi_sup=float(np.sqrt(2.0)),
    )


def make_polydrift(x0: float = 1.0, delta: float = 0.8, horizon: float = 0.1) -> SeparableModel:
    """Polynomial interaction: dX = (E[X] - X E[X^2] + delta X) dt + X dW.

    phi = (x, x^2, 1) with the constant component inactive.  phi is
    unbounded, so no phi_sup is declared.
    """

    def phi(x):
        xx = x[..., 0]
        return np.stack([xx, xx * xx, np.ones_like(xx)], axis=-1)

    def phi_jacobian(x):
        xx = x[..., 0]
        return np.stack([np.ones_like(xx), 2.0 * xx, np.zeros_like(xx)], axis=-1)[..., None]

    def drift(t, x):
        xx = x[..., 0]
        return np.stack([np.ones_like(xx), -xx, delta * xx], axis=-1)[..., None]

    def diffusion(t, x):
        xx = x[..., 0]
        z = np.zeros_like(xx)
        return np.stack([z, z, xx], axis=-1)[..., None, None]

    def drift_jacobian(t, x):
        xx = x[..., 0]
        z = np.zeros_like(xx)
        return np.stack([z, -np.ones_like(xx), np.full_like(xx, delta)], axis=-1)[
            ..., None, None
        ]

    def diffusion_jacobian(t, x):
        xx = x[..., 0]
        z = np.zeros_like(xx)
        return np.stack([z, z, np.ones_like(xx)], axis=-1)[..., None, None, None]

    return SeparableModel(
        name="polydrift",
        d=1,
        q=1,
        K=3,
        drift=drift,
        diffusion=diffusion,
        phi=phi,
        phi_jacobian=phi_jacobian,
        drift_jacobian=drift_jacobian,
        diffusion_jacobian=diffusion_jacobian,
        initial_law=InitialLaw.dirac(x0),
        horizon=horizon,
        active_components=(0, 1),
    )


def make_linear_oracle(x0: float = 1.0, horizon: float = 1.0) -> SeparableModel:
    """Noiseless sanity model dX = E[X] dt with known curve x0 e^t."""

    def phi(x):
        return np.asarray(x, dtype=float).copy()

    def phi_jacobian(x):
        return np.ones(x.shape[:-1] + (1, 1))

    def drift(t, x):
        return np.ones(x.shape[:-1] + (1, 1))

    def diffusion(t, x):
        return np.zeros(x.shape[:-1] + (1, 1, 1))

    def drift_jacobian(t, x):
        return np.zeros(x.shape[:-1] + (1, 1, 1))

    def diffusion_jacobian(t, x):
        return np.zeros(x.shape[:-1] + (1, 1, 1, 1))

    return SeparableModel(
        name="linear-oracle",
        d=1,
        q=1,
        K=1,
        drift=drift,
        diffusion=diffusion,
        phi=phi,
        phi_jacobian=phi_jacobian,
        drift_jacobian=drift_jacobian,
        diffusion_jacobian=diffusion_jacobian,
        initial_law=InitialLaw.dirac(x0),
        horizon=horizon,
    )


def linear_oracle_curve(x0: float, grid) -> SampledCurve:
    """Closed-form curve gamma(t) = x0 e^t of the linear sanity model."""
    return SampledCurve(grid=grid, values=x0 * np.exp(grid.times)[:, None])


def _phi_sup_convolution(k_trunc: int) -> float:
    # sup_x sqrt(1 + sum_k phi_k(x)^2); the Hermite functions decay past
    # |x| ~ sqrt(2 k_trunc + 1), so a generous probe grid suffices
    xs = np.linspace(-12.0, 12.0, 4001)
    p = hermite.hermite_functions(xs, k_trunc)
    return float(np.sqrt(1.0 + (p * p).sum(axis=-1)).max())


def make_convolution_projected(
    k_trunc: int = 10, sigma: float = 0.1, horizon: float = 1.0
) -> SeparableModel:
    """Gaussian-convolution drift projected onto k_trunc + 1 Hermite terms.

    Approximates dX = E[ exp(-(X_t - x)^2 / 2) ]|_{x = X_t} dt + sigma dW
    by expanding the kernel: drift terms alpha_k paired with phi_k for
    k = 0..k_trunc.  The additive noise needs a gamma component that is
    identically one, so the model carries one extra constant slot
    (phi = 1, alpha = 0, beta = sigma), masked out of the descent exactly
    like the constant components of the other built-ins.
    """
    k_trunc = int(k_trunc)
    if k_trunc < 1:
        raise ValueError(f"k_trunc must be >= 1, got {k_trunc}")
    K = k_trunc + 2
    const = K - 1  # index of the constant slot

    def phi(x):
        xx = x[..., 0]
        herm = hermite.hermite_functions(xx, k_trunc)
        return np.concatenate([herm, np.ones(xx.shape + (1,))], axis=-1)

    def phi_jacobian(x):
        xx = x[..., 0]
        dherm = hermite.hermite_function_derivatives(xx, k_trunc)
        return np.concatenate([dherm, np.zeros(xx.shape + (1,))], axis=-1)[..., None]

    def drift(t, x):
        xx = x[..., 0]
        alpha = hermite.kernel_coefficients(xx, k_trunc)
        return np.concatenate([alpha, np.zeros(xx.shape + (1,))], axis=-1)[..., None]

    def diffusion(t, x):
        out = np.zeros(x.shape[:-1] + (K, 1, 1))
        out[..., const, 0, 0] = sigma
        return out

    def drift_jacobian(t, x):
        xx = x[..., 0]
        dalpha = hermite.kernel_coefficient_derivatives(xx, k_trunc)
        return np.concatenate([dalpha, np.zeros(xx.shape + (1,))], axis=-1)[
            ..., None, None
        ]

    def diffusion_jacobian(t, x):
        return np.zeros(x.shape[:-1] + (K, 1, 1, 1))

    return SeparableModel(
        name="convolution",
        d=1,
        q=1,
        K=K,
        drift=drift,
        diffusion=diffusion,
        phi=phi,
        phi_jacobian=phi_jacobian,
        drift_jacobian=drift_jacobian,
        diffusion_jacobian=diffusion_jacobian,
        initial_law=InitialLaw.standard_gaussian(1),
        horizon=horizon,
        active_components=tuple(range(k_trunc + 1)),
        phi_sup=_phi_sup_convolution(k_trunc),
    )


# ----- contract checks -----


def check_model(model: SeparableModel, rng: np.random.Generator, n_probes: int = 100):
    """Probe the shape contract with random (t, x); raises on violation."""
    d, q, K = model.d, model.q, model.K
    for _ in range(n_probes):
        t = float(rng.uniform(0.0, model.horizon))
        x = rng.normal(scale=2.0, size=d)
        checks = [
            (model.drift(t, x), (K, d), "drift"),
            (model.diffusion(t, x), (K, d, q), "diffusion"),
            (model.phi(x), (K,), "phi"),
            (model.phi_jacobian(x), (K, d), "phi_jacobian"),
        ]
        if model.drift_jacobian is not None:
            checks.append((model.drift_jacobian(t, x), (K, d, d), "drift_jacobian"))
        if model.diffusion_jacobian is not None:
            checks.append(
                (model.diffusion_jacobian(t, x), (K, d, q, d), "diffusion_jacobian")
            )
        for value, shape, label in checks:
            value = np.asarray(value)
            if value.shape != shape:
                raise ValueError(
                    f"{model.name}.{label}: shape {value.shape}, expected {shape}"
                )
            if not np.isfinite(value).all():
                raise ValueError(f"{model.name}.{label}: non-finite output at x={x}")
    # batched evaluation must broadcast
    xb = rng.normal(scale=2.0, size=(7, d))
    if np.asarray(model.phi(xb)).shape != (7, K):
        raise ValueError(f"{model.name}.phi does not broadcast over batches")
    if np.asarray(model.drift(0.0, xb)).shape != (7, K, d):
        raise ValueError(f"{model.name}.drift does not broadcast over batches")
