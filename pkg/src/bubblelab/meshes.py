"""Discrete operators behind the Field container.

Three families of meshes:

* RadialMesh    -- graded 1D P1 finite elements on [0, R] with weight
                   |S^{n-1}| r^{n-1}; exact symmetric stiffness/mass, so the
                   discrete quadratic form equals the weighted H^1_0 energy of
                   the P1 interpolant.  Used for all radially symmetric work
                   on the ball (any n).
* BoxMesh       -- uniform tensor finite differences on an axis-aligned box
                   (n <= 3), second-order centered stencils, lumped mass.
* BallSWMesh    -- tensor lattice inside the ball with boundary-cut
                   (Shortley-Weller) stencils; Dirichlet solves only, the cut
                   stencil has no exact symmetric quadratic form.
* AxisymMesh    -- Q1 finite elements in spherical coordinates (s, mu=cos
                   theta) for fields invariant under rotation about an axis;
                   separable weights make the assembly a Kronecker sum.

Meshes are cached per (domain, grid); sparse factorizations are cached per
shift lambda.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bubbles import sphere_area
from .domain import validate_grid

# 5-point Gauss-Legendre on [0,1]
_GX, _GW = np.polynomial.legendre.leggauss(5)
_GX = 0.5 * (_GX + 1.0)
_GW = 0.5 * _GW

_SOLVER_TOL = 1e-12


def graded_nodes(a, b, num, gamma0=1.0, gamma1=1.0):
    """num+1 nodes on [a,b]; gamma>1 clusters toward the respective end."""
    s = np.linspace(0.0, 1.0, num + 1)
    if gamma0 == 1.0 and gamma1 == 1.0:
        g = s
    else:
        g = s**gamma0 / (s**gamma0 + (1.0 - s) ** gamma1)
    return a + (b - a) * g


def fem1d_matrices(nodes, weight):
    """P1 stiffness and consistent mass with a positive weight w(r).

    Entries are per-element 5-point Gauss; with polynomial weights up to
    degree 8 this is exact.
    """
    nodes = np.asarray(nodes, dtype=float)
    m = len(nodes)
    K = sp.lil_matrix((m, m))
    M = sp.lil_matrix((m, m))
    for e in range(m - 1):
        r0, r1 = nodes[e], nodes[e + 1]
        h = r1 - r0
        rq = r0 + h * _GX
        wq = weight(rq) * h * _GW
        phi0 = (r1 - rq) / h
        phi1 = (rq - r0) / h
        w_int = np.sum(wq)
        K[e, e] += w_int / h**2
        K[e + 1, e + 1] += w_int / h**2
        K[e, e + 1] -= w_int / h**2
        K[e + 1, e] -= w_int / h**2
        M[e, e] += np.sum(wq * phi0 * phi0)
        M[e + 1, e + 1] += np.sum(wq * phi1 * phi1)
        m01 = np.sum(wq * phi0 * phi1)
        M[e, e + 1] += m01
        M[e + 1, e] += m01
    return K.tocsc(), M.tocsc()


class RadialMesh:
    """Radially symmetric fields on the ball of radius R; node r=0 included."""

    def __init__(self, n, radius=1.0, num=2000, gamma0=2.4, gamma1=2.0):
        self.n = n
        self.radius = float(radius)
        self.num = int(num)
        self.gamma0, self.gamma1 = gamma0, gamma1
        self.nodes = graded_nodes(0.0, self.radius, self.num, gamma0, gamma1)
        area = sphere_area(n)
        self.K_full, self.M_full = fem1d_matrices(self.nodes, lambda r: area * r ** (n - 1))
        self.interior = slice(0, self.num)  # all but the Dirichlet node r=R
        self.r = self.nodes[: self.num]
        self._factors = {}

    # -- geometry ---------------------------------------------------------
    def coords(self):
        return self.r[:, None]

    def num_interior(self):
        return self.num

    def refined(self, factor=2):
        return RadialMesh(self.n, self.radius, self.num * factor, self.gamma0, self.gamma1)

    # -- operators --------------------------------------------------------
    def stiffness(self):
        return self.K_full[: self.num, : self.num].tocsc()

    def mass(self):
        return self.M_full[: self.num, : self.num].tocsc()

    def shifted_operator(self, lam):
        return (self.stiffness() - lam * self.mass()).tocsc()

    def _factor(self, lam):
        # symmetric Jacobi equilibration: the graded weights r^{n-1} spread the
        # matrix entries over many orders of magnitude, and the raw LU loses
        # componentwise accuracy near the origin without it
        if lam not in self._factors:
            op = self.shifted_operator(lam)
            dinv = 1.0 / np.sqrt(np.abs(op.diagonal()))
            D = sp.diags(dinv)
            self._factors[lam] = (spla.splu((D @ op @ D).tocsc()), dinv, op)
        return self._factors[lam]

    def boundary_lift(self, lam, g_value):
        """rhs contribution of Dirichlet data u(R) = g_value."""
        colK = np.asarray(self.K_full[: self.num, self.num].todense()).ravel()
        colM = np.asarray(self.M_full[: self.num, self.num].todense()).ravel()
        return -(colK - lam * colM) * g_value

    def rhs_from_nodal(self, f_interior, f_boundary=0.0):
        """Consistent load vector M f for nodal data (boundary value of f included)."""
        full = np.concatenate([f_interior, [f_boundary]])
        return (self.M_full @ full)[: self.num]

    def solve_shifted(self, lam, rhs_vec):
        """u with (K - lam M) u = rhs_vec (already a load vector)."""
        lu, dinv, op = self._factor(lam)

        def apply_inverse(r):
            return dinv * lu.solve(dinv * r)

        u = apply_inverse(rhs_vec)
        u = u + apply_inverse(rhs_vec - op @ u)  # one refinement step
        res = np.linalg.norm(op @ u - rhs_vec)
        scale = np.linalg.norm(rhs_vec)
        if scale > 0 and res > 1e-9 * scale:
            raise RuntimeError(f"radial solve residual {res:.2e} exceeds tolerance")
        return u

    # -- functionals ------------------------------------------------------
    def quad_weights(self):
        """w with w.f = integral over the ball of the P1 interpolant of f."""
        w_full = np.asarray(self.M_full.sum(axis=1)).ravel()
        return w_full[: self.num]

    def integrate(self, f_interior):
        return float(self.quad_weights() @ f_interior)

    def h1_energy(self, lam, u):
        return float(u @ (self.shifted_operator(lam) @ u))

    def interp(self, values, r_query):
        r_all = self.nodes
        v_all = np.concatenate([values, [0.0]])
        return np.interp(np.asarray(r_query, dtype=float), r_all, v_all)

    def lambda1(self, tol=1e-11, maxit=400):
        """Smallest Dirichlet eigenvalue via inverse power iteration.

        Iterates until the eigenvector settles, so the pair (mu, u) satisfies
        K u = mu M u to solver accuracy."""
        K, M = self.stiffness(), self.mass()
        u = np.ones(self.num)
        u /= np.sqrt(u @ (M @ u))
        for _ in range(maxit):
            w = self.solve_shifted(0.0, M @ u)
            w /= np.sqrt(w @ (M @ w))
            delta = np.max(np.abs(w - u))
            u = w
            if delta < tol * np.max(np.abs(u)):
                return float(u @ (K @ u)), u
        raise RuntimeError("inverse power iteration did not converge")


class BoxMesh:
    """Uniform tensor FD grid on a box, homogeneous Dirichlet implicit."""

    def __init__(self, extents, num=48):
        self.extents = tuple((float(lo), float(hi)) for lo, hi in extents)
        self.n = len(self.extents)
        if self.n > 3:
            raise ValueError("tensor grids are desk-scale only for n <= 3")
        self.num = int(num)
        self.shape = tuple([self.num] * self.n)
        self.h = np.array([(hi - lo) / (self.num + 1) for lo, hi in self.extents])
        self.cell_volume = float(np.prod(self.h))
        axes = [lo + self.h[a] * np.arange(1, self.num + 1) for a, (lo, hi) in enumerate(self.extents)]
        mesh = np.meshgrid(*axes, indexing="ij")
        self._coords = np.stack([m.ravel() for m in mesh], axis=-1)
        self.size = self._coords.shape[0]
        self.A = self._assemble() * self.cell_volume
        self._factors = {}
        self._amg = None

    def _assemble(self):
        m = self.num
        one = sp.identity(m, format="csr")
        T = sp.diags([-1.0, 2.0, -1.0], [-1, 0, 1], shape=(m, m), format="csr")
        mats = []
        for a in range(self.n):
            pieces = [one] * self.n
            pieces[a] = T * (1.0 / self.h[a] ** 2)
            acc = pieces[0]
            for piece in pieces[1:]:
                acc = sp.kron(acc, piece, format="csr")
            mats.append(acc)
        return sum(mats)

    def coords(self):
        return self._coords

    def num_interior(self):
        return self.size

    def refined(self, factor=2):
        return BoxMesh(self.extents, self.num * factor)

    def stiffness(self):
        return self.A

    def mass(self):
        return sp.identity(self.size, format="csr") * self.cell_volume

    def shifted_operator(self, lam):
        return (self.A - lam * self.cell_volume * sp.identity(self.size, format="csr")).tocsr()

    def quad_weights(self):
        return np.full(self.size, self.cell_volume)

    def integrate(self, f):
        return float(self.cell_volume * np.sum(f))

    def h1_energy(self, lam, u):
        return float(u @ (self.shifted_operator(lam) @ u))

    def rhs_from_nodal(self, f, f_boundary=None):
        return self.cell_volume * f

    def boundary_lift(self, lam, g):
        """rhs from Dirichlet data g(x) on the box faces (g a callable)."""
        rhs = np.zeros(self.size)
        m = self.num
        idx = np.arange(self.size).reshape(self.shape)
        for a in range(self.n):
            for side, layer in ((0, 0), (1, m - 1)):
                sel = [slice(None)] * self.n
                sel[a] = layer
                nodes = idx[tuple(sel)].ravel()
                xb = self._coords[nodes].copy()
                xb[:, a] = self.extents[a][side]
                rhs[nodes] += self.cell_volume / self.h[a] ** 2 * np.asarray(g(xb), dtype=float)
        return rhs

    def _amg_solver(self):
        if self._amg is None:
            try:
                import pyamg

                self._amg = pyamg.smoothed_aggregation_solver(self.A.tocsr())
            except Exception:
                self._amg = False
        return self._amg

    def solve_shifted(self, lam, rhs):
        """SPD solve (requires lam < lambda_1); CG with AMG preconditioning."""
        op = self.shifted_operator(lam)
        ml = self._amg_solver()
        precond = ml.aspreconditioner(cycle="V") if ml else None
        scale = np.linalg.norm(rhs)
        if scale == 0:
            return np.zeros_like(rhs)
        u, info = spla.cg(op, rhs, rtol=1e-12, atol=1e-13 * scale, maxiter=4000, M=precond)
        if info != 0:
            raise RuntimeError(f"box CG failed to converge (info={info})")
        res = np.linalg.norm(op @ u - rhs)
        if res > 1e-9 * scale:
            raise RuntimeError(f"box solve residual {res:.2e} exceeds tolerance")
        return u

    def solve_indefinite(self, mat, rhs):
        """Symmetric indefinite solve (linearized operators): MINRES."""
        scale = np.linalg.norm(rhs)
        if scale == 0:
            return np.zeros_like(rhs)
        u, info = spla.minres(mat, rhs, rtol=1e-10, maxiter=20000)
        if info != 0:
            raise RuntimeError(f"MINRES failed to converge (info={info})")
        return u

    def lambda1(self, tol=1e-10, maxit=100):
        ml = self._amg_solver()
        precond = ml.aspreconditioner(cycle="V") if ml else None
        u = np.random.default_rng(0).standard_normal(self.size)
        mu_old = 0.0
        for _ in range(maxit):
            u, info = spla.cg(self.A, self.cell_volume * u, rtol=1e-10, atol=0.0, M=precond, maxiter=4000)
            if info != 0:
                raise RuntimeError("inverse power CG failure")
            u /= np.sqrt(self.cell_volume) * np.linalg.norm(u)
            mu = float(u @ (self.A @ u))
            if abs(mu - mu_old) < tol * mu:
                return mu, u
            mu_old = mu
        raise RuntimeError("inverse power iteration did not converge")


class BallSWMesh:
    """Tensor lattice inside the ball; Shortley-Weller boundary-cut stencils.

    Dirichlet solves only: the cut stencil is exact on constants and linears
    but has no exact symmetric quadratic form, so norms are not offered here.
    """

    def __init__(self, n, radius=1.0, num=33):
        if n != 3:
            raise ValueError("ball tensor grids are provided for n = 3")
        self.n = n
        self.radius = float(radius)
        self.num = int(num)
        h = 2.0 * self.radius / (self.num + 1)
        self.h = h
        axis = -self.radius + h * np.arange(1, self.num + 1)
        mesh = np.meshgrid(axis, axis, axis, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        rad = np.sqrt(np.sum(pts * pts, axis=1))
        inside = rad < self.radius - 1e-12
        self._coords = pts[inside]
        self.size = self._coords.shape[0]
        lattice_index = -np.ones(self.num**3, dtype=np.int64)
        lattice_index[np.flatnonzero(inside)] = np.arange(self.size)
        self._lattice_index = lattice_index.reshape(self.num, self.num, self.num)
        self._assemble()
        self._lu = None

    def _neighbor(self, ix, axis, direction):
        jx = list(ix)
        jx[axis] += direction
        if 0 <= jx[axis] < self.num:
            k = self._lattice_index[tuple(jx)]
            if k >= 0:
                return k
        return -1

    def _cut_fraction(self, x, axis, direction):
        """t/h where t solves |x + t*dir*e_axis| = R, t in (0, h]."""
        b = x[axis] * direction
        c = float(np.sum(x * x)) - self.radius**2
        t = -b + np.sqrt(b * b - c)
        return min(t / self.h, 1.0)

    def _assemble(self):
        rows, cols, vals = [], [], []
        bdry_rows, bdry_pts, bdry_coefs = [], [], []
        diag = np.zeros(self.size)
        grid_of = {}
        inside_flat = np.argwhere(self._lattice_index >= 0)
        for ix in inside_flat:
            grid_of[self._lattice_index[tuple(ix)]] = tuple(ix)
        h = self.h
        for i in range(self.size):
            x = self._coords[i]
            ix = grid_of[i]
            for axis in range(3):
                hm = hp = 1.0
                km = self._neighbor(ix, axis, -1)
                kp = self._neighbor(ix, axis, +1)
                if km < 0:
                    hm = max(self._cut_fraction(x, axis, -1), 1e-6)
                if kp < 0:
                    hp = max(self._cut_fraction(x, axis, +1), 1e-6)
                cm = 2.0 / (hm * (hm + hp) * h * h)
                cp = 2.0 / (hp * (hm + hp) * h * h)
                diag[i] += cm + cp
                for k, c, frac, direction in ((km, cm, hm, -1), (kp, cp, hp, +1)):
                    if k >= 0:
                        rows.append(i)
                        cols.append(k)
                        vals.append(-c)
                    else:
                        xb = x.copy()
                        xb[axis] += direction * frac * h
                        xb *= self.radius / np.linalg.norm(xb)
                        bdry_rows.append(i)
                        bdry_pts.append(xb)
                        bdry_coefs.append(c)
        rows.extend(range(self.size))
        cols.extend(range(self.size))
        vals.extend(diag)
        self.A = sp.csr_matrix((vals, (rows, cols)), shape=(self.size, self.size))
        self._bdry_rows = np.array(bdry_rows, dtype=np.int64)
        self._bdry_pts = np.array(bdry_pts).reshape(-1, 3)
        self._bdry_coefs = np.array(bdry_coefs)

    def coords(self):
        return self._coords

    def num_interior(self):
        return self.size

    def boundary_rhs(self, g):
        rhs = np.zeros(self.size)
        if len(self._bdry_rows):
            gv = np.asarray(g(self._bdry_pts), dtype=float)
            np.add.at(rhs, self._bdry_rows, self._bdry_coefs * gv)
        return rhs

    def solve_laplace(self, f, g=None):
        """-Delta u = f in the ball, u = g on the sphere (f nodal, g callable)."""
        rhs = np.asarray(f, dtype=float).copy()
        if g is not None:
            rhs = rhs + self.boundary_rhs(g)
        if self._lu is None:
            self._lu = spla.splu(self.A.tocsc())
        u = self._lu.solve(rhs)
        res = np.linalg.norm(self.A @ u - rhs)
        scale = max(np.linalg.norm(rhs), 1e-300)
        if res > 1e-8 * scale:
            raise RuntimeError(f"ball SW solve residual {res:.2e} exceeds tolerance")
        return u

    def integrate(self, f):
        # cell-volume rule; diagnostics only
        return float(np.sum(f) * self.h**3)


class AxisymMesh:
    """Q1 FEM for axially symmetric functions u(s, mu) on the ball, n in 3..5.

    Coordinates: s = |x| in (0, R], mu = cos(angle to the symmetry axis).
    The weighted energy separates, so stiffness and mass are Kronecker sums of
    1D matrices.  Dirichlet data lives on s = R.
    """

    def __init__(self, n, s_nodes, mu_nodes, radius=1.0):
        self.n = n
        self.radius = float(radius)
        self.s_nodes = np.asarray(s_nodes, dtype=float)
        self.mu_nodes = np.asarray(mu_nodes, dtype=float)
        if abs(self.s_nodes[-1] - self.radius) > 1e-12:
            raise ValueError("last s node must equal the ball radius")
        area = sphere_area(n - 1)  # |S^{n-2}|
        a2 = (n - 3) / 2.0
        Ks, Ms = fem1d_matrices(self.s_nodes, lambda s: s ** (n - 1))
        Ks3, Ms3 = fem1d_matrices(self.s_nodes, lambda s: np.maximum(s, 1e-300) ** (n - 3))
        Kmu, Mmu = fem1d_matrices(self.mu_nodes, lambda m: (1.0 - m * m) ** a2 if a2 else np.ones_like(m))
        Kmu4, _ = fem1d_matrices(self.mu_nodes, lambda m: (1.0 - m * m) ** (a2 + 1.0))
        self._area = area
        self.Kfull = area * (sp.kron(Ks, Mmu) + sp.kron(Ms3, Kmu4))
        self.Mfull = area * sp.kron(Ms, Mmu)
        self.ns, self.nmu = len(self.s_nodes), len(self.mu_nodes)
        keep = np.ones(self.ns, dtype=bool)
        keep[-1] = False
        self._keep = np.repeat(keep, self.nmu)
        self._bnd = ~self._keep
        self.K = self.Kfull.tocsr()[self._keep][:, self._keep].tocsc()
        self.M = self.Mfull.tocsr()[self._keep][:, self._keep].tocsc()
        self.Kb = self.Kfull.tocsr()[self._keep][:, self._bnd].tocsc()
        self.Mb = self.Mfull.tocsr()[self._keep][:, self._bnd].tocsc()
        self._factors = {}

    def solve(self, lam, rhs_fn, g_mu):
        """(-Delta - lam) u = rhs_fn(s, mu) in the ball, u(R, mu) = g_mu(mu)."""
        S, MU = np.meshgrid(self.s_nodes, self.mu_nodes, indexing="ij")
        f = np.asarray(rhs_fn(S, MU), dtype=float).ravel()
        load = (self.Mfull @ f)[self._keep]
        g = np.asarray(g_mu(self.mu_nodes), dtype=float)
        load -= (self.Kb - lam * self.Mb) @ g
        key = float(lam)
        if key not in self._factors:
            self._factors[key] = spla.splu((self.K - lam * self.M).tocsc())
        u = self._factors[key].solve(load)
        full = np.empty(self.ns * self.nmu)
        full[self._keep] = u
        full[self._bnd] = g
        return full.reshape(self.ns, self.nmu)

    def evaluate(self, ugrid, s, mu):
        """Bilinear interpolation of a solved grid at (s, mu) points."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        i = np.clip(np.searchsorted(self.s_nodes, s) - 1, 0, self.ns - 2)
        j = np.clip(np.searchsorted(self.mu_nodes, mu) - 1, 0, self.nmu - 2)
        s0, s1 = self.s_nodes[i], self.s_nodes[i + 1]
        m0, m1 = self.mu_nodes[j], self.mu_nodes[j + 1]
        ts = np.clip((s - s0) / (s1 - s0), 0.0, 1.0)
        tm = np.clip((mu - m0) / (m1 - m0), 0.0, 1.0)
        v = (
            ugrid[i, j] * (1 - ts) * (1 - tm)
            + ugrid[i + 1, j] * ts * (1 - tm)
            + ugrid[i, j + 1] * (1 - ts) * tm
            + ugrid[i + 1, j + 1] * ts * tm
        )
        return v if v.size > 1 else float(v[0])


def axisym_mesh_for_offset(n, offset, radius=1.0, base=160):
    """Axisymmetric mesh graded for a source/evaluation point at distance
    d = radius - offset from the sphere along the +axis."""
    d = max(radius - offset, 1e-6)
    # s: resolve both the boundary layer of width ~d and the bulk
    ns_fine = base
    s_bulk = graded_nodes(0.0, max(radius - 3.0 * d, radius * 0.3), base // 2, 1.0, 1.4)
    s_layer = radius - np.geomspace(max(3.0 * d, 1e-9), radius - s_bulk[-1], ns_fine)[::-1]
    s_inner = radius - np.geomspace(d * 1e-3, 3.0 * d, ns_fine // 2 * 3)[::-1]
    s_nodes = np.unique(np.concatenate([s_bulk, s_layer, s_inner, [radius]]))
    # mu: resolve 1 - mu ~ d^2 near the axis
    scale = min(d * d / (2.0 * radius * max(offset, 1e-3)), 0.5)
    mu_fine = 1.0 - np.geomspace(scale * 1e-3, 2.0, int(base * 1.2))
    mu_nodes = np.unique(np.concatenate([[-1.0], mu_fine, [1.0]]))
    return AxisymMesh(n, s_nodes, mu_nodes, radius)


_MESH_CACHE = {}


def get_mesh(domain, grid):
    validate_grid(domain, grid)
    key = (domain, grid)
    if key not in _MESH_CACHE:
        if grid.mode == "radial_1d":
            _MESH_CACHE[key] = RadialMesh(domain.n, domain.ball_radius, grid.points_per_axis)
        elif domain.kind == "box":
            _MESH_CACHE[key] = BoxMesh(domain.box_extents, grid.points_per_axis)
        else:
            _MESH_CACHE[key] = BallSWMesh(domain.n, domain.ball_radius, grid.points_per_axis)
    return _MESH_CACHE[key]
