"""Hermite functions, Gaussian-kernel coefficients, density reconstruction."""

import numpy as np
import pytest

from mvsgd.hermite import (
    HermiteSystem,
    density_reconstruct,
    hermite_function_derivatives,
    hermite_functions,
    kernel_coefficient_derivatives,
    kernel_coefficients,
    project_kernel,
)

# Gauss-Legendre quadrature on [-12, 12]; the integrands decay like
# exp(-x^2/2) so the window truncation error is far below 1e-6
_QX, _QW = np.polynomial.legendre.leggauss(400)
_QX = _QX * 12.0
_QW = _QW * 12.0


def test_phi0_at_zero():
    # phi_0(x) = pi^(-1/4) exp(-x^2/2)
    assert hermite_functions(0.0, 0)[0] == pytest.approx(0.7511255444649425, abs=1e-15)


def test_orthonormality_to_1e6():
    phi = hermite_functions(_QX, 10)  # (400, 11)
    gram = (phi * _QW[:, None]).T @ phi
    np.testing.assert_allclose(gram, np.eye(11), rtol=0, atol=1e-6)


def test_derivatives_match_fd():
    xs = np.linspace(-3.0, 3.0, 41)
    step = 1e-6
    d = hermite_function_derivatives(xs, 8)
    fd = (hermite_functions(xs + step, 8) - hermite_functions(xs - step, 8)) / (2 * step)
    np.testing.assert_allclose(d, fd, rtol=0, atol=1e-5)


def test_alpha0_at_zero():
    assert kernel_coefficients(0.0, 0)[0] == pytest.approx(1.3313353638003897, abs=1e-15)


def test_project_kernel_at_zero():
    gamma = project_kernel(0.0, 6)
    assert gamma[0] == pytest.approx(np.pi**0.25, abs=1e-15)
    np.testing.assert_allclose(gamma[1:], 0.0, rtol=0, atol=1e-15)


def test_alpha_closed_form_vs_quadrature():
    # alpha_k(x) is the L^2 coefficient of y -> exp(-(x-y)^2/2) on phi_k
    for x in (-2.0, 0.0, 2.0):
        target = np.exp(-((x - _QX) ** 2) / 2.0)
        phi = hermite_functions(_QX, 10)
        quad = (phi * (_QW * target)[:, None]).sum(axis=0)
        closed = kernel_coefficients(x, 10)
        np.testing.assert_allclose(closed, quad, rtol=0, atol=1e-6)


def test_alpha_derivatives_match_fd():
    xs = np.linspace(-2.5, 2.5, 31)
    step = 1e-6
    d = kernel_coefficient_derivatives(xs, 10)
    fd = (kernel_coefficients(xs + step, 10) - kernel_coefficients(xs - step, 10)) / (
        2 * step
    )
    np.testing.assert_allclose(d, fd, rtol=0, atol=1e-5)


def test_kernel_diagonal_at_one():
    # sum_k alpha_k(1) phi_k(1) approximates b(1,1) = exp(0) = 1
    total = float(kernel_coefficients(1.0, 10) @ hermite_functions(1.0, 10))
    assert abs(total - 1.0) <= 1e-3


def test_kernel_truncation_error_monotone():
    # L^2 error of the truncated kernel at x=0 is non-increasing in the cut
    ys = np.linspace(-6.0, 6.0, 1201)
    target = np.exp(-(ys**2) / 2.0)
    errs = []
    for k in (1, 3, 5, 10):
        approx = hermite_functions(ys, k) @ kernel_coefficients(0.0, k)
        errs.append(np.sqrt(np.trapezoid((approx - target) ** 2, ys)))
    assert all(a >= b - 1e-12 for a, b in zip(errs, errs[1:]))


def test_kernel_sup_error_envelope():
    # sup error of the rank-k kernel on [-3,3]^2: ~4e-2 at cut 10, and the
    # 1e-3 level is reached around cut 20
    xs = np.linspace(-3.0, 3.0, 121)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    target = np.exp(-((X - Y) ** 2) / 2.0)

    def sup_err(k):
        approx = kernel_coefficients(xs, k) @ hermite_functions(xs, k).T
        return np.abs(approx - target).max()

    assert sup_err(10) <= 5e-2
    assert sup_err(20) <= 1e-3


def test_hermite_system_consistency():
    sys10 = HermiteSystem(k_trunc=10)
    xs = np.linspace(-2.0, 2.0, 17)
    np.testing.assert_array_equal(sys10.phi(xs), hermite_functions(xs, 10))
    np.testing.assert_array_equal(sys10.alpha(xs), kernel_coefficients(xs, 10))
    np.testing.assert_array_equal(sys10.phi_prime(xs), hermite_function_derivatives(xs, 10))
    diag = sys10.kernel_truncation(1.0, 1.0)
    assert diag == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(ValueError):
        HermiteSystem(k_trunc=0)


def test_high_order_evaluation_is_finite():
    # recurrence form must not overflow where naive factorials would
    vals = kernel_coefficients(2.0, 60)
    assert np.isfinite(vals).all()
    phis = hermite_functions(3.0, 60)
    assert np.isfinite(phis).all()


def test_density_reconstruct_gaussian():
    # gamma_k = E[phi_k(xi)], xi ~ N(0,1); reconstruction recovers the pdf
    pdf = np.exp(-(_QX**2) / 2.0) / np.sqrt(2 * np.pi)
    phi = hermite_functions(_QX, 10)
    gamma = (phi * (_QW * pdf)[:, None]).sum(axis=0)
    xs = np.linspace(-3.0, 3.0, 301)
    w = density_reconstruct(gamma, xs)
    truth = np.exp(-(xs**2) / 2.0) / np.sqrt(2 * np.pi)
    assert np.abs(w - truth).max() <= 1e-3


def test_density_reconstruct_single_term():
    xs = np.linspace(-2.0, 2.0, 9)
    gamma = np.zeros(4)
    gamma[0] = 1.0
    np.testing.assert_allclose(
        density_reconstruct(gamma, xs), hermite_functions(xs, 0)[..., 0]
    )


def test_density_not_clipped():
    # truncation artifacts may go negative; they are reported as-is
    xs = np.linspace(-2.0, 2.0, 33)
    w = density_reconstruct(-np.array([1.0]), xs)
    assert (w < 0).all()


def test_density_reconstruct_validation():
    with pytest.raises(ValueError):
        density_reconstruct(np.zeros((2, 2)), np.linspace(-1, 1, 5))
    with pytest.raises(ValueError):
        density_reconstruct(np.array([]), np.linspace(-1, 1, 5))
