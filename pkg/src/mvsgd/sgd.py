"""Stochastic gradient descent on the projected fixed-point defect.

For a coefficient matrix a in R^{(n+1) x K} the objective is

    G(a) = int_0^T | E[ phi(Z^a_t) ] - h((La)(t)) |^2 dt + H(a),

with Z^a the frozen-curve Euler chain.  One gradient sample consumes two
independent noise copies (xi, W) and (xi~, W~):

    v_{h,j} = 2 int_0^T w(t) < phi(Z_t(xi, W)) - h((La)(t)),
                              dphi(Z_t(xi~, W~)) Y^{h,j}_t(xi~, W~)
                              - g_h(t) Jc(t)[:, j] > dt,

where Y is the tangent of the tangent copy and Jc the clamp Jacobian along
the lifted curve.  The tangent recursion is the exact a-derivative of the
discrete chain, so E[v] equals the gradient of the discretised objective
exactly.  Integrals are left-endpoint Riemann sums on the simulation grid.

Iterates follow a_{m+1} = a_m - eta_m v_{m+1} with eta_m = r0 / (m+1)^rho,
where v_{m+1} averages M independent samples at a_m and adds the penalty
gradient once.  Components outside the active mask are never moved.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .basis import Clamp, LagrangeBasis, Penalty, penalty_gradient, penalty_value
from .analysis import relative_error_values
from .simulate import (
    SimulationDivergedError,
    TimeGrid,
    _DOMAIN_INIT,
    _draw_batch,
    _euler_forward,
    _euler_tangents,
    _state_jacobians,
    draw_noise_bundle,
    lifted_inputs,
    stream,
)
from .models import SeparableModel

__all__ = [
    "WeightSpec",
    "SGDConfig",
    "IterationRecord",
    "RunReport",
    "learning_rate",
    "normalize_mask",
    "sample_gradient",
    "minibatch_gradient",
    "run",
]

DIVERGENCE_NORM = 1e6
PLATEAU_WINDOW = 20
PLATEAU_RTOL = 1e-3


@dataclass(frozen=True)
class WeightSpec:
    """Exponential time weight w(t) = c1 exp(c2 t) for the gradient integrand."""

    c1: float = 1.0
    c2: float = 0.0

    def __post_init__(self):
        if not self.c1 > 0:
            raise ValueError(f"weight c1 must be positive, got {self.c1}")

    def __call__(self, t):
        return self.c1 * np.exp(self.c2 * np.asarray(t, dtype=float))


@dataclass
class SGDConfig:
    r0: float
    rho: float
    M: int
    m_max: int = 500
    tol: float | None = 0.01
    seed: int = 0
    weight: WeightSpec | None = None
    # active mask over (h, j): None defers to the model's active components;
    # a sequence of component indices activates whole columns; a boolean
    # (n+1, K) array selects arbitrary slots
    active: object = None
    # explicit start; None draws X~_0 from the initial law and replicates
    # phi(X~_0) across rows
    a0: np.ndarray | None = None

    def __post_init__(self):
        if not self.r0 > 0:
            raise ValueError(f"r0 must be positive, got {self.r0}")
        if not 0.5 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0.5, 1], got {self.rho}")
        if int(self.M) < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        if int(self.m_max) < 0:
            raise ValueError(f"m_max must be >= 0, got {self.m_max}")
        if self.tol is not None and self.tol < 0:
            raise ValueError(f"tol must be >= 0, got {self.tol}")


def learning_rate(r0: float, rho: float, m: int) -> float:
    """eta_m = r0 / (m + 1)^rho for the 0-based iteration index m."""
    return r0 / (m + 1.0) ** rho


def normalize_mask(active, n: int, K: int) -> np.ndarray:
    """Boolean (n+1, K) mask of learned slots from any accepted spelling."""
    if active is None:
        return np.ones((n + 1, K), dtype=bool)
    arr = np.asarray(active)
    if arr.dtype == bool:
        if arr.shape != (n + 1, K):
            raise ValueError(
                f"boolean mask must have shape {(n + 1, K)}, got {arr.shape}"
            )
        return arr.copy()
    mask = np.zeros((n + 1, K), dtype=bool)
    cols = [int(j) for j in np.atleast_1d(arr)]
    if any(j < 0 or j >= K for j in cols):
        raise ValueError(f"component indices {cols} out of range for K={K}")
    mask[:, cols] = True
    return mask


def _mask_slots(mask: np.ndarray) -> tuple:
    return tuple((h, j) for h in range(mask.shape[0]) for j in range(mask.shape[1]) if mask[h, j])


def _gradient_core(model, basis, a, clamp, grid, xi, dW, xit, dWt, slots, weight):
    """Per-sample slot gradients (B, S) and the G estimate of the batch."""
    c, forcing_w = lifted_inputs(basis, a, clamp, grid, slots)
    zf = _euler_forward(model, c, grid, xi, dW)
    zt, y = _euler_tangents(model, c, forcing_w, grid, xit, dWt)
    phi_f = model.phi(zf[:, :-1])  # (B, steps, K)
    defect = phi_f - c[None]
    dphi = model.phi_jacobian(zt[:, :-1])  # (B, steps, K, d)
    probe = np.einsum("btkd,bstd->bstk", dphi, y[:, :, :-1])
    probe -= np.swapaxes(forcing_w, 0, 1)[None]
    wts = np.ones(grid.steps) if weight is None else np.asarray(weight(grid.times[:-1]), float)
    dw = defect * (wts * grid.h)[None, :, None]
    v = 2.0 * np.einsum("btk,bstk->bs", dw, probe)
    mean_phi = phi_f.mean(axis=0)
    g_est = float((((mean_phi - c) ** 2).sum(axis=1) * wts).sum() * grid.h)
    return v, g_est


def _scatter(v_slots: np.ndarray, slots, n: int, K: int) -> np.ndarray:
    out = np.zeros((n + 1, K))
    for s, (h, j) in enumerate(slots):
        out[h, j] = v_slots[s]
    return out


def sample_gradient(
    model: SeparableModel,
    basis: LagrangeBasis,
    a,
    clamp: Clamp,
    grid: TimeGrid,
    noise,
    active=None,
    weight: WeightSpec | None = None,
) -> np.ndarray:
    """Single-sample gradient estimate v(a; xi, W; xi~, W~), (n+1, K).

    Components outside the active mask come back as zero.
    """
    a = np.asarray(a, dtype=float)
    mask = normalize_mask(active if active is not None else model.active_components,
                          basis.n, model.K)
    slots = _mask_slots(mask)
    v, _ = _gradient_core(
        model, basis, a, clamp, grid,
        noise.forward.xi[None], noise.forward.dW[None],
        noise.tangent.xi[None], noise.tangent.dW[None],
        slots, weight,
    )
    return _scatter(v[0], slots, basis.n, model.K)


def minibatch_gradient(
    model: SeparableModel,
    basis: LagrangeBasis,
    a,
    clamp: Clamp,
    penalty: Penalty,
    grid: TimeGrid,
    M: int,
    seed: int,
    iteration: int,
    active=None,
    weight: WeightSpec | None = None,
    with_estimate: bool = False,
):
    """Average of M independent gradient samples plus the penalty gradient.

    Each sample draws its own noise bundle from the per-sample seed stream
    (seed, iteration, sample); the reduction runs in sample-index order.
    With M=1 this equals sample_gradient on the same stream plus the
    penalty term.
    """
    a = np.asarray(a, dtype=float)
    mask = normalize_mask(active if active is not None else model.active_components,
                          basis.n, model.K)
    slots = _mask_slots(mask)
    xi, dW, xit, dWt = _draw_batch(model, grid, seed, iteration, int(M))
    v, g_est = _gradient_core(model, basis, a, clamp, grid, xi, dW, xit, dWt, slots, weight)
    total = _scatter(v.mean(axis=0), slots, basis.n, model.K)
    total += penalty_gradient(penalty, a)
    total[~mask] = 0.0
    if with_estimate:
        return total, g_est + penalty_value(penalty, a)
    return total


# ----- the descent loop -----


@dataclass
class IterationRecord:
    m: int
    a: np.ndarray
    epsilon: float | None
    g_estimate: float | None
    v: np.ndarray | None
    wall_time: float


@dataclass
class RunReport:
    records: list[IterationRecord] = field(default_factory=list)
    termination: str = ""
    stopping_mode: str = ""
    seed: int = 0
    used_fd_model_derivatives: bool = False
    diverged_step: int | None = None

    @property
    def iterations(self) -> int:
        return self.records[-1].m

    @property
    def tol_reached(self) -> bool:
        return self.termination == "tol-reached"

    @property
    def final_coeffs(self) -> np.ndarray:
        return self.records[-1].a

    @property
    def total_time(self) -> float:
        return sum(r.wall_time for r in self.records)

    def write_csv(self, path):
        """Deterministic per-iteration table: iteration, epsilon, g_estimate.

        Wall-clock times are deliberately left out so identically seeded
        runs serialise byte-identically; timings stay on the records.
        """
        def fmt(x):
            return "" if x is None else f"{x:.12g}"

        with open(path, "w", newline="") as fh:
            fh.write("iteration,epsilon,g_estimate\n")
            for r in self.records:
                fh.write(f"{r.m},{fmt(r.epsilon)},{fmt(r.g_estimate)}\n")


def _plateaued(history) -> bool:
    w = PLATEAU_WINDOW
    if len(history) < 2 * w:
        return False
    recent = float(np.mean(history[-w:]))
    previous = float(np.mean(history[-2 * w : -w]))
    return abs(recent - previous) <= PLATEAU_RTOL * max(abs(previous), 1e-300)


def run(
    model: SeparableModel,
    basis: LagrangeBasis,
    grid: TimeGrid,
    config: SGDConfig,
    clamp: Clamp | None = None,
    penalty: Penalty | None = None,
    benchmark=None,
    seed: int | None = None,
) -> RunReport:
    """Run the descent and report per-iteration iterates and errors.

    With a benchmark curve the loop stops once the relative error on the
    active components drops below config.tol ("tol-reached"), else at
    m_max.  Without a benchmark it runs standalone: m_max, or a plateau of
    the moving-average G estimate (window 20, relative change < 1e-3).
    A non-finite iterate, |a| > 1e6, or a diverging simulation terminates
    with reason "diverged".
    """
    clamp = clamp if clamp is not None else Clamp()
    penalty = penalty if penalty is not None else Penalty()
    seed = config.seed if seed is None else int(seed)
    n, K = basis.n, model.K
    mask = normalize_mask(
        config.active if config.active is not None else model.active_components, n, K
    )
    error_components = [j for j in range(K) if mask[:, j].any()]
    _, _, used_fd = _state_jacobians(model)

    if config.a0 is not None:
        a = np.array(config.a0, dtype=float)
        if a.shape != (n + 1, K):
            raise ValueError(f"a0 must have shape {(n + 1, K)}, got {a.shape}")
    else:
        x_start = model.initial_law.sample(stream(seed, _DOMAIN_INIT))
        a = np.tile(np.asarray(model.phi(x_start), dtype=float)[None, :], (n + 1, 1))

    bench_values = None
    if benchmark is not None:
        bench_values = np.asarray(benchmark.values_on(grid), dtype=float)

    def epsilon_of(coeffs):
        if bench_values is None:
            return None
        if not np.isfinite(coeffs).all():
            return None
        lifted = basis.lift(coeffs, grid.times)
        return relative_error_values(lifted, bench_values, grid, error_components)

    report = RunReport(
        stopping_mode="benchmark" if benchmark is not None else "standalone",
        seed=seed,
        used_fd_model_derivatives=used_fd,
    )
    report.records.append(IterationRecord(0, a.copy(), epsilon_of(a), None, None, 0.0))
    g_history: list[float] = []
    m = 0
    while True:
        last = report.records[-1]
        if (
            bench_values is not None
            and config.tol is not None
            and last.epsilon is not None
            and last.epsilon < config.tol
        ):
            report.termination = "tol-reached"
            break
        if m >= config.m_max:
            report.termination = "m-max"
            break
        if bench_values is None and _plateaued(g_history):
            report.termination = "plateau"
            break
        t0 = time.perf_counter()
        try:
            v, g_est = minibatch_gradient(
                model, basis, a, clamp, penalty, grid,
                M=config.M, seed=seed, iteration=m,
                active=mask, weight=config.weight, with_estimate=True,
            )
        except SimulationDivergedError as err:
            report.termination = "diverged"
            report.diverged_step = err.step
            break
        last.g_estimate = g_est
        g_history.append(g_est)
        a = a - learning_rate(config.r0, config.rho, m) * v
        m += 1
        elapsed = time.perf_counter() - t0
        diverged = (not np.isfinite(a).all()) or np.linalg.norm(a) > DIVERGENCE_NORM
        report.records.append(
            IterationRecord(m, a.copy(), epsilon_of(a), None, v.copy(), elapsed)
        )
        if diverged:
            report.termination = "diverged"
            break
    return report
