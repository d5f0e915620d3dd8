"""Bounded domains (unit ball, axis-aligned box), their discretizations, and
nodal fields.

A Field stores values at the interior nodes of a discretization; homogeneous
Dirichlet data is implicit.  The unit ball additionally carries the exact
regular part H(x,y) of the Laplace kernel (method of images) and the diagonal
Robin function phi(x) = H(x,x), which blows up like (2 d(x))^{2-n} at the
boundary.
"""

import io
from dataclasses import dataclass, field, replace

import numpy as np

from .bubbles import check_dimension


@dataclass(frozen=True)
class DomainModel:
    kind: str  # 'unit_ball' | 'box'
    n: int
    box_extents: tuple = None  # ((lo, hi),) * n, box only
    ball_radius: float = 1.0

    def __post_init__(self):
        if self.kind == "unit_ball":
            object.__setattr__(self, "n", check_dimension(self.n))
            if not self.ball_radius > 0:
                raise ValueError("ball_radius must be positive")
        elif self.kind == "box":
            # n = 2 boxes are allowed as solver infrastructure self-tests
            if int(self.n) != self.n or self.n < 2:
                raise ValueError(f"box dimension must be an integer >= 2, got {self.n!r}")
            object.__setattr__(self, "n", int(self.n))
            if not self.box_extents:
                raise ValueError("box requires nonempty box_extents")
            ext = tuple((float(lo), float(hi)) for lo, hi in self.box_extents)
            if len(ext) != self.n or any(hi <= lo for lo, hi in ext):
                raise ValueError("box_extents must be n intervals of positive length")
            object.__setattr__(self, "box_extents", ext)
        else:
            raise ValueError(f"unknown domain kind {self.kind!r}")

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        if self.kind == "unit_ball":
            return np.sqrt(np.sum(x * x, axis=-1)) <= self.ball_radius + tol
        ok = np.ones(x.shape[:-1], dtype=bool)
        for a, (lo, hi) in enumerate(self.box_extents):
            ok &= (x[..., a] >= lo - tol) & (x[..., a] <= hi + tol)
        return ok

    def distance_to_boundary(self, x):
        """Exact d(x, boundary); raises if x lies outside the closure."""
        x = np.asarray(x, dtype=float)
        if not np.all(self.contains(x, tol=1e-14)):
            raise ValueError("point outside the closure of the domain")
        if self.kind == "unit_ball":
            return self.ball_radius - np.sqrt(np.sum(x * x, axis=-1))
        dists = [np.minimum(x[..., a] - lo, hi - x[..., a]) for a, (lo, hi) in enumerate(self.box_extents)]
        return np.min(np.stack(dists, axis=0), axis=0)

    def first_eigenvalue_exact(self):
        """Closed-form lambda_1: box is separable, ball uses the Bessel zero."""
        if self.kind == "box":
            return sum((np.pi / (hi - lo)) ** 2 for lo, hi in self.box_extents)
        from scipy.optimize import brentq
        from scipy.special import jv

        order = self.n / 2.0 - 1.0
        lo, hi = 1e-3, 3.5 + order * 2.5
        while jv(order, hi) > 0:
            hi += 1.0
        z = brentq(lambda t: jv(order, t), lo, hi, xtol=1e-13)
        return (z / self.ball_radius) ** 2


def unit_ball(n):
    return DomainModel("unit_ball", n)


def box(extents):
    return DomainModel("box", len(extents), box_extents=tuple(extents))


@dataclass(frozen=True)
class GridSpec:
    mode: str  # 'radial_1d' | 'tensor_nd'
    points_per_axis: int = 64  # radial_1d: number of radial nodes

    def __post_init__(self):
        if self.mode not in ("radial_1d", "tensor_nd"):
            raise ValueError(f"unknown grid mode {self.mode!r}")
        if self.points_per_axis < 16:
            raise ValueError("points_per_axis must be >= 16")

    def label(self):
        return f"{self.mode}:{self.points_per_axis}"


def validate_grid(domain, grid):
    if grid.mode == "radial_1d" and domain.kind != "unit_ball":
        raise ValueError("radial_1d grids are only defined on the ball")
    if grid.mode == "tensor_nd" and domain.n > 3:
        raise ValueError("tensor_nd grids are desk-scale only for n <= 3")


@dataclass
class Field:
    """Real values on the interior nodes of (domain, grid); zero trace implied."""

    domain: DomainModel
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        validate_grid(self.domain, self.grid)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("Field values must be a flat nodal vector")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Field values must be finite")

    def _check_compatible(self, other):
        if self.domain != other.domain or self.grid != other.grid:
            raise ValueError("fields live on different domain/grid pairs")
        if self.values.shape != other.values.shape:
            raise ValueError("field value counts differ")

    def copy_with(self, values):
        return replace(self, values=np.asarray(values, dtype=float))

    def add(self, other):
        self._check_compatible(other)
        return self.copy_with(self.values + other.values)

    def sub(self, other):
        self._check_compatible(other)
        return self.copy_with(self.values - other.values)

    def scale(self, c):
        return self.copy_with(self.values * float(c))

    def pointwise_power(self, s):
        if np.any(self.values < 0):
            raise ValueError("pointwise_power on a field with negative values")
        return self.copy_with(self.values**float(s))

    def positive_part(self):
        return self.copy_with(np.maximum(self.values, 0.0))

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.sub(other)

    def mesh(self):
        from .meshes import get_mesh

        return get_mesh(self.domain, self.grid)

    def coords(self):
        return self.mesh().coords()

    def to_csv(self, path_or_buf):
        """`# domain=<kind> n=<n> grid=<spec>` header then index,x1..xn,value rows."""
        xs = self.coords()
        header = f"# domain={self.domain.kind} n={self.domain.n} grid={self.grid.label()}\n"
        cols = ",".join(f"x{a+1}" for a in range(xs.shape[1]))
        buf = io.StringIO()
        buf.write(header)
        buf.write(f"index,{cols},value\n")
        for i, (x, v) in enumerate(zip(xs, self.values)):
            buf.write(f"{i}," + ",".join(f"{c:.17g}" for c in x) + f",{v:.17g}\n")
        text = buf.getvalue()
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w") as fh:
                fh.write(text)


def field_from_csv(path):
    """Inverse of Field.to_csv; reconstructs the (domain, grid) pair."""
    with open(path) as fh:
        header = fh.readline().strip()
        fh.readline()  # column names
        body = np.loadtxt(fh, delimiter=",", ndmin=2)
    meta = dict(tok.split("=") for tok in header.lstrip("# ").split())
    n = int(meta["n"])
    mode, pts = meta["grid"].split(":")
    if meta["domain"] == "unit_ball":
        dom = unit_ball(n)
    else:
        raise ValueError("CSV round-trip supports the unit ball; box fields carry extents externally")
    grid = GridSpec(mode, int(pts))
    return Field(dom, grid, body[:, -1])


def sample_on_grid(domain, grid, fn):
    """Field with values fn(x) at the interior nodes (fn vectorized over (...,n))."""
    from .meshes import get_mesh

    mesh = get_mesh(domain, grid)
    return Field(domain, grid, np.asarray(fn(mesh.coords()), dtype=float))


def ball_harmonic_extension_H(n, y, x, radius=1.0):
    """Regular part H(x,y) on the ball: harmonic in x with H = |x-y|^{2-n} on the sphere.

    Method of images: H(x,y) = (|y| |x - y*| / R)^{2-n} with y* = R^2 y/|y|^2.
    The y -> 0 limit is the constant R^{2-n} (removable in code, not in math).
    """
    n = check_dimension(n)
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    R = float(radius)
    ay = np.sqrt(np.sum(y * y, axis=-1))
    if np.any(ay >= R):
        raise ValueError("y must be interior to the ball")
    if ay.ndim == 0 and ay < 1e-300:
        return np.broadcast_to(R ** (2.0 - n), x.shape[:-1]).copy() if x.ndim > 1 else R ** (2.0 - n)
    ystar = R**2 * y / np.sum(y * y, axis=-1, keepdims=True)
    d = np.sqrt(np.sum((x - ystar) ** 2, axis=-1))
    return (ay * d / R) ** (2.0 - n)


def robin_function(domain, x, variant="laplace", lam=None, grid=None):
    """Diagonal regular part: phi(x) (laplace) or phi^n_lambda(x) (helmholtz).

    The Laplace variant on the ball is closed form,
    phi(x) = ((R^2 - |x|^2)/R)^{2-n}; the Helmholtz variant requires the
    elliptic solver backend (n = 3, 4, 5 only).
    """
    if domain.kind != "unit_ball":
        raise NotImplementedError("robin_function is provided on the ball only")
    x = np.asarray(x, dtype=float)
    R = domain.ball_radius
    r2 = np.sum(x * x, axis=-1)
    if np.any(r2 >= R * R):
        raise ValueError("x must be interior")
    if variant == "laplace":
        return ((R * R - r2) / R) ** (2.0 - domain.n)
    if variant == "helmholtz":
        if lam is None or lam <= 0:
            raise ValueError("helmholtz variant requires lambda > 0")
        from .solver import helmholtz_robin_value

        return helmholtz_robin_value(domain.n, lam, x, radius=R, grid=grid)
    raise ValueError(f"unknown robin variant {variant!r}")
