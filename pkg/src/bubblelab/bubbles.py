"""Closed-form evaluation of the extremal concentration profiles ("bubbles").

The profile with scale delta > 0 and center xi in R^n (n >= 3) is

    U_{delta,xi}(x) = a_n (delta / (delta^2 + |x-xi|^2))^{(n-2)/2},
    a_n = (n(n-2))^{(n-2)/4},

normalized so that -Delta U = U^p with p = (n+2)/(n-2).  The parameter
derivatives

    Z^0 = delta dU/d(delta),   Z^k = delta dU/d(xi^k)  (k = 1..n)

span the kernel of the linearization -Delta - p U^{p-1}.  Everything here is
exact arithmetic on closed forms; no discretization enters.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn


def check_dimension(n):
    if int(n) != n or n < 3:
        raise ValueError(f"dimension must be an integer >= 3, got {n!r}")
    return int(n)


def critical_exponent(n):
    """p = 2* - 1 = (n+2)/(n-2)."""
    n = check_dimension(n)
    return (n + 2.0) / (n - 2.0)


def dimensional_constant(n):
    """a_n = (n(n-2))^{(n-2)/4}, the normalization making -Delta U = U^p."""
    n = check_dimension(n)
    return (n * (n - 2.0)) ** ((n - 2.0) / 4.0)


def sphere_area(n):
    """Surface area of the unit sphere S^{n-1} in R^n."""
    n = int(n)
    return 2.0 * np.pi ** (n / 2.0) / gamma_fn(n / 2.0)


@dataclass(frozen=True)
class BubbleParams:
    """One concentration profile: dimension n, scale delta, center xi."""

    n: int
    delta: float
    xi: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "n", check_dimension(self.n))
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be a positive finite real, got {self.delta}")
        xi = np.zeros(self.n) if self.xi is None else np.asarray(self.xi, dtype=float)
        if xi.shape != (self.n,) or not np.all(np.isfinite(xi)):
            raise ValueError(f"xi must be a finite vector of length {self.n}")
        object.__setattr__(self, "xi", xi)

    @property
    def p(self):
        return critical_exponent(self.n)

    @property
    def a_n(self):
        return dimensional_constant(self.n)


def _r2(b, x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != b.n:
        raise ValueError(f"points must have last dimension {b.n}, got shape {x.shape}")
    d = x - b.xi
    return np.sum(d * d, axis=-1)


def eval_bubble(b, x):
    """U_{delta,xi}(x); x may be a single point or an (..., n) array."""
    rho = b.delta**2 + _r2(b, x)
    return b.a_n * (b.delta / rho) ** ((b.n - 2) / 2.0)


def eval_bubble_radial(b, r):
    """U as a function of r = |x - xi| (radial closed form)."""
    r = np.asarray(r, dtype=float)
    rho = b.delta**2 + r * r
    return b.a_n * (b.delta / rho) ** ((b.n - 2) / 2.0)


def eval_param_derivative(b, k, x):
    """Z^k_{delta,xi}(x): k=0 the dilation mode, k>=1 the k-th translation.

    Factored closed forms (no large-term cancellation near |x-xi| = delta):

        Z^0 = (n-2)/2 * U * (|x-xi|^2 - delta^2) / (delta^2 + |x-xi|^2)
        Z^k = (n-2)   * U * delta (x-xi)^k       / (delta^2 + |x-xi|^2)
    """
    if int(k) != k or not 0 <= k <= b.n:
        raise ValueError(f"derivative index must be in 0..{b.n}, got {k}")
    x = np.asarray(x, dtype=float)
    r2 = _r2(b, x)
    rho = b.delta**2 + r2
    u = b.a_n * (b.delta / rho) ** ((b.n - 2) / 2.0)
    if k == 0:
        return (b.n - 2) / 2.0 * u * (r2 - b.delta**2) / rho
    return (b.n - 2.0) * u * b.delta * (x - b.xi)[..., k - 1] / rho


def eval_dilation_radial(b, r):
    """Z^0 as a function of r = |x - xi|."""
    r = np.asarray(r, dtype=float)
    r2 = r * r
    rho = b.delta**2 + r2
    u = b.a_n * (b.delta / rho) ** ((b.n - 2) / 2.0)
    return (b.n - 2) / 2.0 * u * (r2 - b.delta**2) / rho


def bubble_laplacian(b, x):
    """Closed-form Delta U: equals -U^p identically."""
    n, dl = b.n, b.delta
    rho = dl**2 + _r2(b, x)
    return -b.a_n * n * (n - 2.0) * dl ** ((n + 2) / 2.0) * rho ** (-(n + 2) / 2.0)


def derivative_laplacian(b, k, x):
    """Closed-form Delta Z^k, assembled from explicit second derivatives.

    Independent of the linearized-equation identity Delta Z^k = -p U^{p-1} Z^k,
    so the two can be compared as a nondegeneracy check.
    """
    if int(k) != k or not 0 <= k <= b.n:
        raise ValueError(f"derivative index must be in 0..{b.n}, got {k}")
    x = np.asarray(x, dtype=float)
    n, dl, an = b.n, b.delta, b.a_n
    nu = (n - 2) / 2.0
    r2 = _r2(b, x)
    rho = dl**2 + r2
    if k == 0:
        # Z^0 = nu * a_n * delta^nu * g(r), g = (r^2 - delta^2) rho^{-n/2}
        lap_g = (
            2.0 * n * rho ** (-n / 2.0)
            - n * rho ** (-(n + 2) / 2.0) * ((n + 4) * r2 - n * dl**2)
            + n * (n + 2.0) * r2 * (r2 - dl**2) * rho ** (-(n + 4) / 2.0)
        )
        return nu * an * dl**nu * lap_g
    # Z^k = (n-2) a_n delta^{nu+1} (x-xi)^k rho^{-n/2};
    # Delta((x)^k f(r)) = (x)^k (f'' + (n+1) f'/r) = -n(n+2) delta^2 (x)^k rho^{-(n+4)/2}
    xk = (x - b.xi)[..., k - 1]
    return -((n - 2.0)) * an * dl ** (nu + 1) * n * (n + 2.0) * dl**2 * xk * rho ** (-(n + 4) / 2.0)


def bubble_pde_residual(b, points):
    """max over the sample set of |Delta U + U^p|, from closed forms."""
    points = np.asarray(points, dtype=float)
    return float(np.max(np.abs(bubble_laplacian(b, points) + eval_bubble(b, points) ** b.p)))


def nondegeneracy_residual(b, k, points):
    """max over samples of |Delta Z^k + p U^{p-1} Z^k| from closed forms."""
    points = np.asarray(points, dtype=float)
    u = eval_bubble(b, points)
    z = eval_param_derivative(b, k, points)
    return float(np.max(np.abs(derivative_laplacian(b, k, points) + b.p * u ** (b.p - 1) * z)))


def radial_integral(f, n, epsrel=1e-12):
    """integral over R^n of a radial integrand f(r), via r = tan(theta).

    Adaptive Gauss-Kronrod on theta in (0, pi/2); returns (value, abserr).
    """
    area = sphere_area(n)

    def g(theta):
        r = np.tan(theta)
        return f(r) * r ** (n - 1) * (1.0 + r * r)

    val, err = quad(g, 0.0, np.pi / 2, epsabs=0.0, epsrel=epsrel, limit=400)
    return area * val, area * err


def sobolev_energy(n):
    """(S0, J(U)) by high-precision radial quadrature.

    S0 is the Rayleigh quotient of U; J(U) = (1/2)|grad U|^2 - (1/2*)|U|^{2*}
    must equal S0^{n/2}/n.  Both gradient- and potential-side integrals are
    quadratured independently (they agree analytically), so the internal
    consistency |J - S0^{n/2}/n| is a genuine two-route check.
    """
    n = check_dimension(n)
    b = BubbleParams(n, 1.0)
    p = b.p
    an = b.a_n
    nu = (n - 2) / 2.0

    def grad2(r):
        # U' = -2 nu a_n r (1+r^2)^{-nu-1}, and 2(nu+1) = n
        return 4.0 * nu**2 * an**2 * r**2 * (1.0 + r * r) ** (-float(n))

    def upow(r):
        return (an * (1.0 + r * r) ** (-nu)) ** (p + 1)

    dirichlet, err_d = radial_integral(grad2, n)
    potential, err_p = radial_integral(upow, n)
    if max(err_d, err_p) > 1e-8 * max(dirichlet, potential):
        raise RuntimeError("radial quadrature did not converge for sobolev_energy")
    s0 = dirichlet / potential ** (2.0 / (p + 1.0))
    j_u = 0.5 * dirichlet - potential / (p + 1.0)
    return s0, j_u


def sobolev_constant_exact(n):
    """Reference closed form S0 = pi n(n-2) (Gamma(n/2)/Gamma(n))^{2/n}."""
    n = check_dimension(n)
    return np.pi * n * (n - 2.0) * (gamma_fn(n / 2.0) / gamma_fn(float(n))) ** (2.0 / n)
