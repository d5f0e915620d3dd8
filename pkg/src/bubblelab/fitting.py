"""Nearest-configuration fitting in the shifted energy norm.

Given a nonnegative nodal field u and a background u0 (a supplied solution or
zero), find bubble parameters (delta_i, xi_i) minimizing

    | u - (u0 + sum_i PU_{delta_i, xi_i}) |_{lam-weighted H^1_0}

by Levenberg-damped Gauss-Newton whose Jacobian columns are the projected
parameter derivatives PZ_i^k.  First-order stationarity of the objective is
exactly the orthogonality of the remainder against every PZ_i^k, which is the
reported convergence measure.  On radial grids the centers are pinned to the
origin and only the scales move (translation modes vanish by symmetry).
"""

from dataclasses import dataclass, field

import numpy as np

from . import bubbles as bb
from . import solver as sv
from .bubbles import BubbleParams
from .domain import Field
from .meshes import RadialMesh, get_mesh


class FitEscapeError(RuntimeError):
    """Parameters left the admissible region (under-resolved scale or center
    escaping the domain)."""


@dataclass
class DecompositionState:
    u: Field
    u0: Field
    kind: object
    lam: float
    bubbles: list
    sigma: Field
    rho: Field
    distance: float
    ortho_residuals: np.ndarray  # (nu, n_params_per_bubble)
    converged: bool
    iterations: int
    raw_bubble_distance: float = 0.0  # diagnostic: distance to the free-bubble family

    def ortho_max(self):
        return float(np.max(np.abs(self.ortho_residuals))) if self.ortho_residuals.size else 0.0


@dataclass
class ErrorFields:
    I0: Field
    I1: Field
    I2: Field
    I3: Field


def _zero_field(domain, grid):
    return Field(domain, grid, np.zeros(get_mesh(domain, grid).num_interior()))


def assemble_error_fields(state):
    """Pointwise error fields of the fitted decomposition.

    I3 uses the algebraic forms that are exact given the defining problems:
    lam PU + PU^p - U^p for the laplace projection, PU^p - U^p for the shifted
    one."""
    domain, grid = state.u.domain, state.u.grid
    p = bb.critical_exponent(domain.n)
    u0 = state.u0.values if state.u0 is not None else 0.0
    pus = [sv.project_bubble(state.kind, b, domain, grid, state.lam, check=False).values for b in state.bubbles]
    us = [sv.bubble_field(b, domain, grid).values for b in state.bubbles]
    sigma = np.sum(pus, axis=0) if pus else np.zeros_like(state.u.values)
    rho = state.rho.values
    base = u0 + sigma
    i0 = np.abs(base + rho) ** (p - 1) * (base + rho) - base**p - p * base ** (p - 1) * rho
    i1 = base**p - (u0**p if np.ndim(u0) else 0.0) - sigma**p
    i2 = sigma**p - np.sum([pu**p for pu in pus], axis=0)
    if state.kind.tag == "pu1":
        i3 = np.sum([state.lam * pu + pu**p - u**p for pu, u in zip(pus, us)], axis=0)
    else:
        i3 = np.sum([pu**p - u**p for pu, u in zip(pus, us)], axis=0)
    mk = lambda v: Field(domain, grid, v)
    return ErrorFields(mk(i0), mk(i1), mk(i2), mk(i3))


def _pack(bubbles, radial):
    if radial:
        return np.array([np.log(b.delta) for b in bubbles])
    return np.concatenate([[np.log(b.delta), *b.xi] for b in bubbles])


def _unpack(theta, n, nu, radial):
    out = []
    if radial:
        for i in range(nu):
            out.append(BubbleParams(n, float(np.exp(theta[i]))))
        return out
    per = 1 + n
    for i in range(nu):
        chunk = theta[i * per : (i + 1) * per]
        out.append(BubbleParams(n, float(np.exp(chunk[0])), np.array(chunk[1:])))
    return out


def _check_admissible(bubbles, domain):
    for b in bubbles:
        if b.delta < 1e-4 or b.delta > 0.45 * _domain_scale(domain):
            raise FitEscapeError(f"scale escaped the admissible range: delta={b.delta:.3g}")
        if not domain.contains(b.xi) or domain.distance_to_boundary(b.xi) < 2e-2:
            raise FitEscapeError(f"center escaped the domain interior: xi={b.xi}")


def _domain_scale(domain):
    if domain.kind == "unit_ball":
        return domain.ball_radius
    return min(hi - lo for lo, hi in domain.box_extents)


def _sigma_and_columns(kind, bubbles, domain, grid, lam, radial):
    n = domain.n
    pus, cols = [], []
    for b in bubbles:
        pus.append(sv.project_bubble(kind, b, domain, grid, lam, check=False).values)
        ks = (0,) if radial else tuple(range(n + 1))
        for k in ks:
            pz = sv.project_derivative(kind, b, k, domain, grid, lam).values
            # d sigma / d log delta = PZ^0; d sigma / d xi^k = PZ^k / delta
            cols.append(pz if k == 0 else pz / b.delta)
    sigma = np.sum(pus, axis=0)
    return sigma, np.stack(cols, axis=1)


def sort_bubbles(bubbles):
    """Permutation tie-break: by scale, then lexicographic center."""
    return sorted(bubbles, key=lambda b: (b.delta, *b.xi))


def fit(u, u0, nu, kind, lam, init, max_iter=40, tol=1e-8):
    """Gauss-Newton/Levenberg fit of nu bubbles to u - u0.

    init is a list of BubbleParams within the trust region of the target
    configuration.  Returns a DecompositionState; convergence means the
    relative orthogonality residuals fell below tol.
    """
    domain, grid = u.domain, u.grid
    mesh = get_mesh(domain, grid)
    radial = isinstance(mesh, RadialMesh)
    n = domain.n
    if len(init) != nu:
        raise ValueError("init must supply one bubble per requested profile")
    K = mesh.shifted_operator(lam)
    target = u.values - (u0.values if u0 is not None else 0.0)
    theta = _pack(init, radial)
    mu = 1e-4
    sigma, J = _sigma_and_columns(kind, _unpack(theta, n, nu, radial), domain, grid, lam, radial)
    r = target - sigma
    obj = 0.5 * float(r @ (K @ r))
    iterations = 0
    converged = False
    for it in range(max_iter):
        iterations = it + 1
        KJ = K @ J
        g = J.T @ (K @ r)
        G = J.T @ KJ
        # relative orthogonality residuals
        rnorm = np.sqrt(max(2.0 * obj, 0.0))
        col_norms = np.sqrt(np.maximum(np.einsum("ij,ij->j", J, KJ), 1e-300))
        rel = np.abs(g) / (max(rnorm, 1e-14 * np.linalg.norm(target)) * col_norms)
        if np.max(rel) <= tol:
            converged = True
            break
        stepped = False
        for _ in range(12):
            try:
                delta = np.linalg.solve(G + mu * np.diag(np.maximum(np.diag(G), 1e-300)), g)
            except np.linalg.LinAlgError:
                raise FitEscapeError("singular normal equations: collinear derivative modes")
            cand = theta + delta
            cand_bubbles = _unpack(cand, n, nu, radial)
            try:
                _check_admissible(cand_bubbles, domain)
            except FitEscapeError:
                mu *= 10.0
                continue
            sigma_c, J_c = _sigma_and_columns(kind, cand_bubbles, domain, grid, lam, radial)
            r_c = target - sigma_c
            obj_c = 0.5 * float(r_c @ (K @ r_c))
            if obj_c <= obj * (1.0 + 1e-14):
                theta, sigma, J, r, obj = cand, sigma_c, J_c, r_c, obj_c
                mu = max(mu * 0.3, 1e-12)
                stepped = True
                break
            mu *= 10.0
        if not stepped:
            converged = np.max(rel) <= 1e-6
            break
    bubbles = sort_bubbles(_unpack(theta, n, nu, radial))
    _check_admissible(bubbles, domain)
    sigma, J = _sigma_and_columns(kind, bubbles, domain, grid, lam, radial)
    r = target - sigma
    rnorm = np.sqrt(max(float(r @ (K @ r)), 0.0))
    KJ = K @ J
    col_norms = np.sqrt(np.maximum(np.einsum("ij,ij->j", J, KJ), 1e-300))
    g = J.T @ (K @ r)
    rel = np.abs(g) / (max(rnorm, 1e-14 * np.linalg.norm(target)) * col_norms)
    per = 1 if radial else n + 1
    raw_sigma = np.sum([sv.bubble_field(b, domain, grid).values for b in bubbles], axis=0)
    raw_r = target - raw_sigma
    return DecompositionState(
        u=u,
        u0=u0,
        kind=kind,
        lam=lam,
        bubbles=bubbles,
        sigma=Field(domain, grid, sigma),
        rho=Field(domain, grid, r),
        distance=rnorm,
        ortho_residuals=rel.reshape(nu, per),
        converged=bool(converged),
        iterations=iterations,
        raw_bubble_distance=float(np.sqrt(max(raw_r @ (K @ raw_r), 0.0))),
    )


def default_starts(domain, nu, multistart, seed=0):
    """Coarse start grid: scales {0.05, 0.1, 0.2} x interior centers."""
    rng = np.random.default_rng(seed)
    n = domain.n
    if domain.kind == "unit_ball":
        centers = [np.zeros(n)]
        offsets = 0.3 * np.eye(n)
        centers.extend(offsets)
    else:
        lo = np.array([l for l, _ in domain.box_extents])
        hi = np.array([h for _, h in domain.box_extents])
        mid = 0.5 * (lo + hi)
        centers = [mid]
        centers.extend(mid + 0.2 * (hi - lo) * e for e in np.eye(n))
    starts = []
    deltas = (0.1, 0.05, 0.2)
    for s in range(multistart):
        bubbles = []
        for i in range(nu):
            d = deltas[(s + i) % len(deltas)]
            c = centers[(s + i) % len(centers)] if nu > 1 or s % 2 else centers[0]
            jitter = 0.02 * rng.standard_normal(n) if s >= len(deltas) else 0.0
            bubbles.append(BubbleParams(n, d, np.asarray(c) + jitter))
        starts.append(bubbles)
    return starts


def distance_functional(u, u0, nu, kind, lam, multistart=4, seed=0, starts=None):
    """Best fit distance over multistart initializations (deterministic in seed).

    Returns (distance, best_state, report_rows); report rows follow the
    schema start,converged,distance,delta_i...,xi_i...,ortho_max."""
    domain = u.domain
    mesh = get_mesh(domain, u.grid)
    radial = isinstance(mesh, RadialMesh)
    if starts is None:
        starts = default_starts(domain, nu, multistart, seed)
        if radial:
            starts = [[BubbleParams(domain.n, b.delta) for b in st] for st in starts]
    rows = [_report_header(domain.n, nu)]
    best = None
    for idx, st in enumerate(starts):
        try:
            state = fit(u, u0, nu, kind, lam, st)
            row = [idx, int(state.converged), state.distance]
            for b in state.bubbles:
                row.extend([b.delta, *b.xi])
            row.append(state.ortho_max())
            rows.append(row)
            key = (state.distance, idx)
            if state.converged and (best is None or key < best[0]):
                best = (key, state)
        except FitEscapeError as err:
            row = [idx, 0, float("nan")] + [float("nan")] * (nu * (1 + domain.n)) + [float("nan")]
            rows.append(row)
    if best is None:
        raise RuntimeError("no multistart fit converged")
    return best[1].distance, best[1], rows


def _report_header(n, nu):
    head = ["start", "converged", "distance"]
    for i in range(1, nu + 1):
        head.append(f"delta_{i}")
        head.extend(f"xi_{i}_{a+1}" for a in range(n))
    head.append("ortho_max")
    return head


def write_report_csv(rows, path):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(",".join(str(c) for c in row) + "\n")
