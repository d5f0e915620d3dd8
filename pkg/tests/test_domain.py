import numpy as np
import pytest

from bubblelab import bubbles as bb
from bubblelab.domain import (
    Field,
    GridSpec,
    ball_harmonic_extension_H,
    box,
    field_from_csv,
    robin_function,
    sample_on_grid,
    unit_ball,
)


def test_distance_to_boundary():
    ball = unit_ball(3)
    assert ball.distance_to_boundary(np.zeros(3)) == pytest.approx(1.0)
    assert ball.distance_to_boundary(np.array([0.9, 0, 0])) == pytest.approx(0.1)
    cube = box([(0, 1)] * 3)
    assert cube.distance_to_boundary(np.array([0.2, 0.5, 0.5])) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        ball.distance_to_boundary(np.array([1.5, 0, 0]))


def test_field_arithmetic():
    dom = unit_ball(3)
    grid = GridSpec("radial_1d", 64)
    f = sample_on_grid(dom, grid, lambda x: -np.ones(x.shape[0]))
    assert np.all(f.positive_part().values == 0.0)
    assert np.all(f.scale(0.0).values == 0.0)
    b = bb.BubbleParams(3, 0.3)
    u = sample_on_grid(dom, grid, lambda x: bb.eval_bubble_radial(b, x[:, 0]))
    pw = u.pointwise_power(b.p)
    direct = bb.eval_bubble_radial(b, u.coords()[:, 0]) ** b.p
    assert np.max(np.abs(pw.values - direct)) <= 1e-12 * np.max(direct)


def test_field_grid_mismatch():
    dom = unit_ball(3)
    f = sample_on_grid(dom, GridSpec("radial_1d", 64), lambda x: x[:, 0])
    g = sample_on_grid(dom, GridSpec("radial_1d", 128), lambda x: x[:, 0])
    with pytest.raises(ValueError):
        f.add(g)


def test_field_csv_roundtrip(tmp_path):
    dom = unit_ball(4)
    grid = GridSpec("radial_1d", 64)
    f = sample_on_grid(dom, grid, lambda x: np.cos(x[:, 0]))
    path = tmp_path / "field.csv"
    f.to_csv(path)
    g = field_from_csv(path)
    assert g.domain == dom and g.grid == grid
    assert np.max(np.abs(g.values - f.values)) <= 1e-15
    header = path.read_text().splitlines()[0]
    assert header == "# domain=unit_ball n=4 grid=radial_1d:64"


def test_harmonic_extension_center_and_boundary():
    rng = np.random.default_rng(0)
    for n in (3, 5):
        x = rng.standard_normal((20, n))
        x = 0.99 * x / np.linalg.norm(x, axis=1, keepdims=True) * rng.uniform(0.1, 1.0, (20, 1))
        assert np.allclose(ball_harmonic_extension_H(n, np.zeros(n), x), 1.0, atol=1e-14)
        # defining boundary condition at |x| = 1
        y = rng.standard_normal(n)
        y *= 0.6 / np.linalg.norm(y)
        xb = rng.standard_normal((30, n))
        xb /= np.linalg.norm(xb, axis=1, keepdims=True)
        h = ball_harmonic_extension_H(n, y, xb)
        exact = np.sum((xb - y) ** 2, axis=1) ** ((2.0 - n) / 2.0)
        assert np.max(np.abs(h - exact) / exact) <= 1e-12


def test_harmonic_extension_diagonal_value():
    y = np.array([0.5, 0.0, 0.0])
    assert ball_harmonic_extension_H(3, y, y) == pytest.approx(4.0 / 3.0, rel=1e-12)


def test_harmonic_extension_symmetry_kelvin():
    rng = np.random.default_rng(7)
    for n in (3, 4, 6):
        for _ in range(100):
            y = rng.standard_normal(n)
            y *= rng.uniform(0.05, 0.95) / np.linalg.norm(y)
            x = rng.standard_normal(n)
            x *= rng.uniform(0.05, 0.95) / np.linalg.norm(x)
            hxy = ball_harmonic_extension_H(n, y, x)
            hyx = ball_harmonic_extension_H(n, x, y)
            assert abs(hxy - hyx) <= 1e-10 * abs(hxy)


def test_harmonic_extension_is_harmonic_fd():
    # second-difference laplacian of the images formula at random interior x
    rng = np.random.default_rng(21)
    n = 3
    y = np.array([0.5, 0.0, 0.0])
    h = 1e-4
    for _ in range(10):
        x = rng.standard_normal(n)
        x *= rng.uniform(0.1, 0.7) / np.linalg.norm(x)
        lap = 0.0
        hc = ball_harmonic_extension_H(n, y, x)
        for a in range(n):
            e = np.zeros(n)
            e[a] = h
            lap += (
                ball_harmonic_extension_H(n, y, x + e)
                - 2.0 * hc
                + ball_harmonic_extension_H(n, y, x - e)
            ) / h**2
        assert abs(lap) <= 1e-3 * abs(hc) / h**0  # O(h^2) * |H''''| scale


def test_robin_function_laplace():
    ball3, ball4 = unit_ball(3), unit_ball(4)
    assert robin_function(ball3, np.zeros(3)) == pytest.approx(1.0)
    x = np.zeros(4)
    x[0] = 0.9
    assert robin_function(ball4, x) == pytest.approx((1 - 0.81) ** (-2.0), rel=1e-12)
    xz = np.zeros(3)
    xz[0] = 0.95
    d = 0.05
    assert robin_function(ball3, xz) == pytest.approx(1.0 / (2 * d), rel=0.1)


def test_robin_boundary_law_and_gradient():
    # phi(x) (2d)^{n-2} = 1 + O(d) with a bounded correction slope, and the
    # gradient law |grad phi| (2d)^{n-1} / (2(n-2)) -> 1, via central differences
    ds = np.geomspace(1e-3, 1e-1, 9)
    for n in (3, 4, 5):
        ball = unit_ball(n)
        ratios = []
        for d in ds:
            x = np.zeros(n)
            x[0] = 1.0 - d
            ratios.append(robin_function(ball, x) * (2 * d) ** (n - 2))
        ratios = np.array(ratios)
        # ratio = (2/(2-d))^{n-2} = 1 + (n-2)/2 d + O(d^2): linear-in-d envelope
        assert np.all(np.abs(ratios - 1.0) <= 0.9 * (n - 2) * ds)
        slope = np.polyfit(ds, ratios - 1.0, 1)[0]
        assert abs(slope) <= 2.0 * (n - 2)
        h = 1e-6
        for d in (1e-2, 1e-1):
            x = np.zeros(n)
            x[0] = 1.0 - d
            e = np.zeros(n)
            e[0] = h
            grad = (robin_function(ball, x + e) - robin_function(ball, x - e)) / (2 * h)
            ratio = abs(grad) * (2 * d) ** (n - 1) / (2.0 * (n - 2))
            assert abs(ratio - 1.0) <= 2.0 * d
