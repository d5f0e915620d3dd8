import numpy as np
import pytest

from bubblelab import bubbles as bb


def test_critical_exponent_values():
    assert bb.critical_exponent(3) == 5.0
    assert bb.critical_exponent(4) == 3.0
    assert bb.critical_exponent(6) == 2.0
    with pytest.raises(ValueError):
        bb.critical_exponent(2)


def test_dimensional_constant_values():
    assert bb.dimensional_constant(3) == pytest.approx(3.0**0.25, rel=1e-12)
    assert bb.dimensional_constant(4) == pytest.approx(np.sqrt(8.0), rel=1e-12)
    assert bb.dimensional_constant(6) == pytest.approx(24.0, rel=1e-12)


def test_eval_bubble_pointwise():
    b = bb.BubbleParams(3, 1.0)
    a3 = bb.dimensional_constant(3)
    assert bb.eval_bubble(b, np.zeros(3)) == pytest.approx(a3, rel=1e-14)
    assert bb.eval_bubble(b, np.array([1.0, 0, 0])) == pytest.approx(a3 * 2 ** (-0.5), rel=1e-14)
    b5 = bb.BubbleParams(5, 0.1)
    assert bb.eval_bubble(b5, np.zeros(5)) == pytest.approx(bb.dimensional_constant(5) * 10.0**1.5, rel=1e-13)


def test_eval_bubble_dimension_mismatch():
    b = bb.BubbleParams(3, 1.0)
    with pytest.raises(ValueError):
        bb.eval_bubble(b, np.zeros(4))


def test_param_derivative_special_points():
    b = bb.BubbleParams(3, 1.0)
    a3 = bb.dimensional_constant(3)
    assert bb.eval_param_derivative(b, 0, np.zeros(3)) == pytest.approx(-a3 / 2, rel=1e-14)
    # sign-change locus of the dilation mode at |x - xi| = delta
    b2 = bb.BubbleParams(4, 0.3, np.array([0.1, 0, 0, -0.2]))
    x = b2.xi + np.array([0.3, 0, 0, 0.0])
    assert abs(bb.eval_param_derivative(b2, 0, x)) < 1e-14
    # translation modes are odd: zero at the center
    for k in range(1, 5):
        assert bb.eval_param_derivative(b2, k, b2.xi) == 0.0


def test_scaling_covariance():
    rng = np.random.default_rng(3)
    for n in (3, 4, 5, 7):
        ref = bb.BubbleParams(n, 1.0)
        for _ in range(20):
            delta = float(rng.uniform(0.02, 2.0))
            xi = rng.standard_normal(n)
            x = rng.standard_normal(n) * 2.0
            b = bb.BubbleParams(n, delta, xi)
            lhs = bb.eval_bubble(b, x)
            rhs = delta ** (-(n - 2) / 2.0) * bb.eval_bubble(ref, (x - xi) / delta)
            assert lhs == pytest.approx(rhs, rel=1e-12)


def test_derivatives_match_central_differences():
    rng = np.random.default_rng(5)
    step = 1e-5
    for n in (3, 5):
        for _ in range(50):
            delta = float(rng.uniform(0.05, 1.5))
            xi = rng.standard_normal(n) * 0.5
            x = rng.standard_normal(n)
            b = bb.BubbleParams(n, delta, xi)
            scale = bb.eval_bubble(b, x) + 1.0
            up = bb.eval_bubble(bb.BubbleParams(n, delta * (1 + step), xi), x)
            dn = bb.eval_bubble(bb.BubbleParams(n, delta * (1 - step), xi), x)
            fd = (up - dn) / (2 * step)
            assert abs(bb.eval_param_derivative(b, 0, x) - fd) <= 1e-6 * scale
            k = int(rng.integers(1, n + 1))
            dxi = np.zeros(n)
            dxi[k - 1] = step * delta
            up = bb.eval_bubble(bb.BubbleParams(n, delta, xi + dxi), x)
            dn = bb.eval_bubble(bb.BubbleParams(n, delta, xi - dxi), x)
            fd = (up - dn) / (2 * step)
            assert abs(bb.eval_param_derivative(b, k, x) - fd) <= 1e-6 * scale


def test_pde_residual_roundoff():
    rng = np.random.default_rng(11)
    pts3 = rng.uniform(-5, 5, size=(100, 3))
    assert bb.bubble_pde_residual(bb.BubbleParams(3, 1.0), pts3) <= 1e-9
    pts4 = rng.uniform(-5, 5, size=(100, 4))
    assert bb.bubble_pde_residual(bb.BubbleParams(4, 0.5), pts4) <= 1e-9
    pts7 = rng.uniform(-5, 5, size=(100, 7))
    assert bb.bubble_pde_residual(bb.BubbleParams(7, 1.0), pts7) <= 1e-8


def test_nondegeneracy_residual():
    rng = np.random.default_rng(13)
    for n in (3, 4, 6):
        b = bb.BubbleParams(n, 0.7, rng.standard_normal(n) * 0.2)
        pts = rng.uniform(-3, 3, size=(200, n))
        for k in range(0, n + 1):
            assert bb.nondegeneracy_residual(b, k, pts) <= 1e-8


def test_sobolev_energy_consistency():
    for n in (3, 4, 5):
        s0, j_u = bb.sobolev_energy(n)
        assert abs(j_u - s0 ** (n / 2.0) / n) / abs(j_u) <= 1e-8
        assert s0 == pytest.approx(bb.sobolev_constant_exact(n), rel=1e-9)
