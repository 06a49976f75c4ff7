"""Hermite-function machinery for the Gaussian-kernel interaction.

phi_k(x) = (2^k k! sqrt(pi))^{-1/2} H_k(x) e^{-x^2/2} are the orthonormal
Hermite functions of L^2(R) (physicists' H_k).  The Gaussian kernel
b(x, y) = exp(-(y - x)^2 / 2) expands as b(x, .) = sum_k alpha_k(x) phi_k
with coefficients

    alpha_k(x) = pi^{1/4} (1/2)^{k/2} x^k e^{-x^2/4} / sqrt(k!).

Everything here is evaluated through two-term recurrences so factorials
never appear explicitly and no overflow can occur at any truncation order.
All evaluators broadcast: x of shape (...) gives output (..., k_max + 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "hermite_functions",
    "hermite_function_derivatives",
    "normalized_hermite",
    "kernel_coefficients",
    "kernel_coefficient_derivatives",
    "HermiteSystem",
    "project_kernel",
    "density_reconstruct",
]


def _recurrence(x, k_max, first):
    """sqrt(2/(k+1)) x u_k - sqrt(k/(k+1)) u_{k-1}, shared by phi and Hbar."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (k_max + 1,))
    out[..., 0] = first
    if k_max >= 1:
        out[..., 1] = np.sqrt(2.0) * x * out[..., 0]
    for k in range(1, k_max):
        out[..., k + 1] = (
            np.sqrt(2.0 / (k + 1)) * x * out[..., k]
            - np.sqrt(k / (k + 1.0)) * out[..., k - 1]
        )
    return out


def hermite_functions(x, k_max: int) -> np.ndarray:
    """phi_0..phi_{k_max} at x; shape (..., k_max + 1)."""
    x = np.asarray(x, dtype=float)
    return _recurrence(x, k_max, np.pi**-0.25 * np.exp(-0.5 * x * x))


def normalized_hermite(x, k_max: int) -> np.ndarray:
    """Hbar_0..Hbar_{k_max} at x (normalized, without the Gaussian factor)."""
    x = np.asarray(x, dtype=float)
    return _recurrence(x, k_max, np.full(x.shape, np.pi**-0.25))


def hermite_function_derivatives(x, k_max: int) -> np.ndarray:
    """phi_k'(x) via phi_k' = sqrt(k/2) phi_{k-1} - sqrt((k+1)/2) phi_{k+1}."""
    phi = hermite_functions(x, k_max + 1)
    out = np.empty(phi.shape[:-1] + (k_max + 1,))
    for k in range(k_max + 1):
        lower = np.sqrt(k / 2.0) * phi[..., k - 1] if k >= 1 else 0.0
        out[..., k] = lower - np.sqrt((k + 1) / 2.0) * phi[..., k + 1]
    return out


def kernel_coefficients(x, k_max: int) -> np.ndarray:
    """alpha_0..alpha_{k_max} at x via alpha_{k+1} = alpha_k x / sqrt(2(k+1))."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (k_max + 1,))
    out[..., 0] = np.pi**0.25 * np.exp(-x * x / 4.0)
    for k in range(k_max):
        out[..., k + 1] = out[..., k] * x / np.sqrt(2.0 * (k + 1))
    return out


def kernel_coefficient_derivatives(x, k_max: int) -> np.ndarray:
    """alpha_k'(x), differentiating the recurrence term by term."""
    x = np.asarray(x, dtype=float)
    a = np.empty(x.shape + (k_max + 1,))
    da = np.empty_like(a)
    a[..., 0] = np.pi**0.25 * np.exp(-x * x / 4.0)
    da[..., 0] = -0.5 * x * a[..., 0]
    for k in range(k_max):
        c = 1.0 / np.sqrt(2.0 * (k + 1))
        a[..., k + 1] = c * x * a[..., k]
        da[..., k + 1] = c * (a[..., k] + x * da[..., k])
    return da


@dataclass(frozen=True)
class HermiteSystem:
    """Evaluator bundle for a fixed truncation order k_trunc >= 1."""

    k_trunc: int

    def __post_init__(self):
        if int(self.k_trunc) < 1:
            raise ValueError(f"k_trunc must be >= 1, got {self.k_trunc}")

    def phi(self, x):
        return hermite_functions(x, self.k_trunc)

    def phi_prime(self, x):
        return hermite_function_derivatives(x, self.k_trunc)

    def hbar(self, x):
        return normalized_hermite(x, self.k_trunc)

    def alpha(self, x):
        return kernel_coefficients(x, self.k_trunc)

    def alpha_prime(self, x):
        return kernel_coefficient_derivatives(x, self.k_trunc)

    def kernel_truncation(self, x, y):
        """Partial sum sum_{k<=k_trunc} alpha_k(x) phi_k(y), broadcasting x, y."""
        a = self.alpha(np.asarray(x, dtype=float))
        p = self.phi(np.asarray(y, dtype=float))
        return np.einsum("...k,...k->...", a, p)


def project_kernel(x, k_trunc: int) -> np.ndarray:
    """Kernel coefficients (alpha_0(x), ..., alpha_{k_trunc}(x))."""
    return kernel_coefficients(x, int(k_trunc))


def density_reconstruct(gamma, xs) -> np.ndarray:
    """Density expansion w(x) = sum_k gamma_k phi_k(x) on the grid xs.

    gamma holds the k_trunc + 1 leading curve components at the chosen
    time.  The result is the raw expansion; it is deliberately not clipped
    to be nonnegative.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 1 or gamma.size < 1:
        raise ValueError("gamma must be a nonempty vector of coefficients")
    phi = hermite_functions(np.asarray(xs, dtype=float), gamma.size - 1)
    return phi @ gamma
