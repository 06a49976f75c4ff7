"""Time grids, seeded noise streams, and Euler-Maruyama kernels.

Conventions shared by every kernel and by all Riemann sums downstream:

* uniform grid t_i = i h, i = 0..steps, with steps * h = horizon;
* coefficients and lifted curves are evaluated at the left endpoint t_i
  when stepping from t_i to t_{i+1};
* a non-finite state at any step aborts with the step index attached.

Noise streams are derived from numpy SeedSequences keyed by
(entropy=seed, spawn_key=(domain, iteration, sample, role)), so every
gradient sample owns two independent reproducible streams (role 0 drives
the forward copy, role 1 the tangent copy) and no noise is ever reused
across iterations.  Batched kernels reduce over the sample axis in index
order, so results never depend on how work is batched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import SampledCurve, SeparableModel, fd_drift_jacobian, fd_diffusion_jacobian
from .basis import LagrangeBasis, Clamp, clamp_apply

__all__ = [
    "TimeGrid",
    "SimulationDivergedError",
    "stream",
    "DrivingNoise",
    "NoiseBundle",
    "draw_noise_bundle",
    "PathBundle",
    "simulate_forward",
    "simulate_with_tangents",
    "simulate_particle_system",
]

# seed-stream domains
_DOMAIN_INIT = 0
_DOMAIN_GRADIENT = 1
_DOMAIN_PARTICLES = 2


class SimulationDivergedError(RuntimeError):
    """Euler state left the finite range; `step` is the offending index."""

    def __init__(self, step: int, context: str = "simulation"):
        self.step = step
        super().__init__(f"{context} produced a non-finite state at step {step}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, horizon] with steps * h = horizon."""

    horizon: float
    steps: int

    def __post_init__(self):
        if int(self.steps) < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not self.horizon > 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    @classmethod
    def from_step(cls, horizon: float, h: float) -> "TimeGrid":
        if not h > 0:
            raise ValueError(f"step h must be positive, got {h}")
        steps = round(horizon / h)
        if steps < 1 or abs(steps * h - horizon) > 1e-9 * max(1.0, abs(horizon)):
            raise ValueError(f"step h={h} does not divide horizon {horizon}")
        return cls(horizon=float(horizon), steps=int(steps))

    @property
    def h(self) -> float:
        return self.horizon / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Reproducible generator for the given seed and stream key."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


# ----- noise -----


@dataclass(frozen=True)
class DrivingNoise:
    """One initial draw and one Brownian increment panel (steps, q)."""

    xi: np.ndarray
    dW: np.ndarray


@dataclass(frozen=True)
class NoiseBundle:
    """The two independent noise copies consumed by one gradient sample."""

    key: tuple
    forward: DrivingNoise
    tangent: DrivingNoise


def _draw_driving(model: SeparableModel, grid: TimeGrid, rng: np.random.Generator) -> DrivingNoise:
    xi = model.initial_law.sample(rng)
    dW = rng.standard_normal((grid.steps, model.q)) * np.sqrt(grid.h)
    return DrivingNoise(xi=xi, dW=dW)


def draw_noise_bundle(
    model: SeparableModel, grid: TimeGrid, seed: int, iteration: int, sample: int
) -> NoiseBundle:
    fwd = _draw_driving(model, grid, stream(seed, _DOMAIN_GRADIENT, iteration, sample, 0))
    tan = _draw_driving(model, grid, stream(seed, _DOMAIN_GRADIENT, iteration, sample, 1))
    return NoiseBundle(key=(int(seed), int(iteration), int(sample)), forward=fwd, tangent=tan)


def _draw_batch(model: SeparableModel, grid: TimeGrid, seed: int, iteration: int, m: int):
    """Stacked noise for samples 0..m-1 of one iteration, in index order."""
    bundles = [draw_noise_bundle(model, grid, seed, iteration, i) for i in range(m)]
    xi = np.stack([b.forward.xi for b in bundles])
    dW = np.stack([b.forward.dW for b in bundles])
    xit = np.stack([b.tangent.xi for b in bundles])
    dWt = np.stack([b.tangent.dW for b in bundles])
    return xi, dW, xit, dWt


# ----- Euler kernels (batched over a leading sample axis) -----


def _euler_forward(model, curve, grid, xi, dW, context="forward simulation"):
    """Euler chain Z_{i+1} = Z_i + c_i.alpha h + c_i.beta dW_i.

    curve: clamped lifted values at the left endpoints, (steps, K).
    xi: (B, d), dW: (B, steps, q).  Returns paths (B, steps + 1, d).
    """
    if not np.isfinite(xi).all():
        raise SimulationDivergedError(0, context)
    steps, h = grid.steps, grid.h
    times = grid.times
    B, d = xi.shape
    out = np.empty((B, steps + 1, d))
    Z = np.array(xi, dtype=float)
    out[:, 0] = Z
    for i in range(steps):
        c = curve[i]
        alpha = model.drift(times[i], Z)
        beta = model.diffusion(times[i], Z)
        Z = (
            Z
            + np.einsum("k,bkd->bd", c, alpha) * h
            + np.einsum("k,bkdq,bq->bd", c, beta, dW[:, i])
        )
        if not np.isfinite(Z).all():
            raise SimulationDivergedError(i + 1, context)
        out[:, i + 1] = Z
    return out


def _state_jacobians(model: SeparableModel):
    """Model state-derivatives, falling back to finite differences."""
    used_fd = False
    djac = model.drift_jacobian
    sjac = model.diffusion_jacobian
    if djac is None:
        djac = fd_drift_jacobian(model.drift)
        used_fd = True
    if sjac is None:
        sjac = fd_diffusion_jacobian(model.diffusion)
        used_fd = True
    return djac, sjac, used_fd


def _euler_tangents(model, curve, forcing_w, grid, xi, dW, context="tangent simulation"):
    """Euler chain for Z and its exact coefficient derivatives Y.

    forcing_w: (steps, S, K), the slot weights g_{h_s}(t_i) J_i[:, j_s].
    Returns (Z (B, steps+1, d), Y (B, S, steps+1, d)).  The recursion for Y
    is the exact a-derivative of the discrete forward chain:

        Y_{i+1} = Y_i + [forcing_w . (alpha h + beta dW)]
                      + sum_i' Y^{i'} [c . (d_i' alpha h + d_i' beta dW)].
    """
    if not np.isfinite(xi).all():
        raise SimulationDivergedError(0, context)
    djac, sjac, _ = _state_jacobians(model)
    steps, h = grid.steps, grid.h
    times = grid.times
    B, d = xi.shape
    S = forcing_w.shape[1]
    zout = np.empty((B, steps + 1, d))
    yout = np.empty((B, S, steps + 1, d))
    Z = np.array(xi, dtype=float)
    Y = np.zeros((B, S, d))
    zout[:, 0] = Z
    yout[:, :, 0] = Y
    for i in range(steps):
        c = curve[i]
        dw = dW[:, i]
        alpha = model.drift(times[i], Z)
        beta = model.diffusion(times[i], Z)
        dalpha = djac(times[i], Z)
        dbeta = sjac(times[i], Z)
        force = (
            np.einsum("sk,bkd->bsd", forcing_w[i], alpha) * h
            + np.einsum("sk,bkdq,bq->bsd", forcing_w[i], beta, dw)
        )
        lin = (
            np.einsum("k,bkdi->bdi", c, dalpha) * h
            + np.einsum("k,bkdqi,bq->bdi", c, dbeta, dw)
        )
        Y = Y + force + np.einsum("bsi,bdi->bsd", Y, lin)
        Z = (
            Z
            + np.einsum("k,bkd->bd", c, alpha) * h
            + np.einsum("k,bkdq,bq->bd", c, beta, dw)
        )
        if not np.isfinite(Z).all():
            raise SimulationDivergedError(i + 1, context)
        zout[:, i + 1] = Z
        yout[:, :, i + 1] = Y
    return zout, yout


# ----- lifted-curve preparation shared by the public entry points -----


def all_slots(n: int, K: int) -> tuple:
    return tuple((h, j) for h in range(n + 1) for j in range(K))


def lifted_inputs(basis: LagrangeBasis, a, clamp: Clamp, grid: TimeGrid, slots=None):
    """Clamped curve values at left endpoints, plus per-slot forcing weights.

    Returns (c (steps, K), forcing_w (steps, S, K) or None).  The forcing
    weight of slot s = (h, j) at t_i is g_h(t_i) times column j of the
    clamp Jacobian, which is d/d a_{h,j} of the clamped lifted curve.
    """
    a = np.asarray(a, dtype=float)
    tleft = grid.times[:-1]
    G = basis.eval(tleft)  # (n+1, steps)
    values = G.T @ a
    c, jac = clamp_apply(clamp, values)
    if slots is None:
        return c, None
    hs = [s[0] for s in slots]
    js = [s[1] for s in slots]
    forcing_w = G[hs].T[:, :, None] * np.swapaxes(jac[:, :, js], 1, 2)
    return c, forcing_w


# ----- public single-path entry points -----


@dataclass(frozen=True)
class PathBundle:
    """A tangent-copy path with its coefficient derivatives.

    z: (steps + 1, d); tangents: (S, steps + 1, d) in slot order, where
    slots lists the simulated (h, j) pairs.
    """

    z: np.ndarray
    tangents: np.ndarray
    slots: tuple

    def tangent(self, h: int, j: int) -> np.ndarray:
        try:
            s = self.slots.index((h, j))
        except ValueError:
            raise KeyError(f"slot ({h}, {j}) was not simulated") from None
        return self.tangents[s]


def simulate_forward(
    model: SeparableModel,
    basis: LagrangeBasis,
    a,
    clamp: Clamp,
    grid: TimeGrid,
    noise: DrivingNoise,
) -> np.ndarray:
    """Euler path of the frozen-curve equation; returns (steps + 1, d)."""
    c, _ = lifted_inputs(basis, a, clamp, grid)
    paths = _euler_forward(model, c, grid, noise.xi[None], noise.dW[None])
    return paths[0]


def simulate_with_tangents(
    model: SeparableModel,
    basis: LagrangeBasis,
    a,
    clamp: Clamp,
    grid: TimeGrid,
    noise: DrivingNoise,
    slots=None,
) -> PathBundle:
    """Euler path plus tangents for the requested (h, j) slots (default all)."""
    if slots is None:
        slots = all_slots(basis.n, model.K)
    slots = tuple((int(h), int(j)) for h, j in slots)
    c, forcing_w = lifted_inputs(basis, a, clamp, grid, slots)
    z, y = _euler_tangents(model, c, forcing_w, grid, noise.xi[None], noise.dW[None])
    return PathBundle(z=z[0], tangents=y[0], slots=slots)


# ----- interacting particle benchmark -----


def simulate_particle_system(
    model: SeparableModel, grid: TimeGrid, n_particles: int, seed: int
) -> SampledCurve:
    """Empirical curve gamma_hat(t_i) = mean_k phi(X^k_{t_i}) of the particle system.

    The empirical means from step i feed the Euler update from t_i to
    t_{i+1}; no clamp is involved.  One seed-stream drives the whole
    system, so results are bit-identical across repeats.
    """
    n = int(n_particles)
    if n < 1:
        raise ValueError(f"n_particles must be >= 1, got {n}")
    rng = stream(seed, _DOMAIN_PARTICLES)
    steps, h = grid.steps, grid.h
    times = grid.times
    X = model.initial_law.sample(rng, n)
    if not np.isfinite(X).all():
        raise SimulationDivergedError(0, "particle system")
    gamma = np.empty((steps + 1, model.K))
    sqh = np.sqrt(h)
    for i in range(steps):
        gamma[i] = model.phi(X).mean(axis=0)
        dw = rng.standard_normal((n, model.q)) * sqh
        alpha = model.drift(times[i], X)
        beta = model.diffusion(times[i], X)
        X = (
            X
            + np.einsum("k,nkd->nd", gamma[i], alpha) * h
            + np.einsum("k,nkdq,nq->nd", gamma[i], beta, dw)
        )
        if not np.isfinite(X).all():
            raise SimulationDivergedError(i + 1, "particle system")
    gamma[steps] = model.phi(X).mean(axis=0)
    return SampledCurve(grid=grid, values=gamma)
