"""Interaction integrals between concentration profiles, the structural
constants driving leading-order projections, and pair bookkeeping.

Whole-space radial integrals use the tan substitution; two-center integrals
use importance-sampled Monte Carlo with a 50/50 mixture of the two bubble
shapes as proposal (radial law r^{n-1}(1+r^2)^{-n}, sampled exactly through a
Beta(n/2, n/2) draw).  Every Monte Carlo routine takes an explicit seed and
reports a statistical error bar.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import betaln

from . import bubbles as bb
from .bubbles import BubbleParams


class RegimeRefusal(ValueError):
    """A requested prediction lies outside the hypotheses of the known
    leading-order formulas; carries the violated hypothesis."""


# -- pair bookkeeping ---------------------------------------------------------


@dataclass(frozen=True)
class PairInteraction:
    q: float
    separation: float  # R_ij
    regime: str  # 'distance-dominated' | 'scale-dominated-i' | 'scale-dominated-j'


def pair_quantities(b_i, b_j):
    """q_ij, R_ij and the dominating term of the separation measure."""
    if b_i.n != b_j.n:
        raise ValueError("bubbles live in different dimensions")
    n = b_i.n
    d2 = float(np.sum((b_i.xi - b_j.xi) ** 2))
    terms = {
        "distance-dominated": np.sqrt(d2 / (b_i.delta * b_j.delta)),
        "scale-dominated-i": np.sqrt(b_i.delta / b_j.delta),
        "scale-dominated-j": np.sqrt(b_j.delta / b_i.delta),
    }
    regime = max(terms, key=terms.get)  # dict order breaks ties toward distance
    bracket = b_i.delta / b_j.delta + b_j.delta / b_i.delta + d2 / (b_i.delta * b_j.delta)
    q = bracket ** (-(n - 2) / 2.0)
    return PairInteraction(q=float(q), separation=float(terms[regime]), regime=regime)


# -- Monte Carlo proposal matched to the bubble tails -------------------------


def _proposal_log_norm(n):
    # density C_n delta^{-n} (1+|y|^2)^{-n}; C_n = 1/(|S^{n-1}| B(n/2,n/2)/2)
    return -(np.log(bb.sphere_area(n)) + betaln(n / 2.0, n / 2.0) - np.log(2.0))


def _sample_bubble_proposal(rng, b, m):
    w = rng.beta(b.n / 2.0, b.n / 2.0, size=m)
    r = np.sqrt(w / (1.0 - w))
    u = rng.standard_normal((m, b.n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return b.xi + b.delta * r[:, None] * u


def _proposal_density(x, b, log_norm):
    y2 = np.sum((x - b.xi) ** 2, axis=1) / b.delta**2
    return np.exp(log_norm) * b.delta ** (-b.n) * (1.0 + y2) ** (-b.n)


def mc_integral(fn, proposals, n_samples, seed):
    """Importance-sampled integral of fn over R^n with an equal mixture of
    bubble proposals; returns (value, stderr)."""
    rng = np.random.default_rng(seed)
    n = proposals[0].n
    log_norm = _proposal_log_norm(n)
    m = n_samples // len(proposals)
    xs = np.concatenate([_sample_bubble_proposal(rng, b, m) for b in proposals], axis=0)
    dens = np.mean([_proposal_density(xs, b, log_norm) for b in proposals], axis=0)
    w = fn(xs) / dens
    value = float(np.mean(w))
    stderr = float(np.std(w) / np.sqrt(len(w)))
    return value, stderr


# -- single-bubble norms ------------------------------------------------------


def bubble_lp_norm(b, domain, s, n_samples=200_000, seed=0):
    """integral over the domain of U^s; domain=None means all of R^n.

    Centered-ball and whole-space cases reduce to radial quadrature; anything
    else is importance-sampled Monte Carlo.  Returns (value, stderr).
    """
    if s <= 0:
        raise ValueError("s must be positive")
    n = b.n

    def integrand(r):
        return bb.eval_bubble_radial(b, r) ** s

    if domain is None:
        if s * (n - 2) <= n:
            raise ValueError("the whole-space integral diverges for s <= n/(n-2)")
        val, err = bb.radial_integral(integrand, n)
        return val, err
    if domain.kind == "unit_ball" and np.all(b.xi == 0.0):
        area = bb.sphere_area(n)
        val, err = quad(lambda r: integrand(r) * r ** (n - 1), 0.0, domain.ball_radius, epsrel=1e-11, limit=300)
        return area * val, area * err
    return mc_integral(
        lambda x: (bb.eval_bubble(b, x) ** s) * domain.contains(x), [b], n_samples, seed
    )


LP_SCALING_CASES = ("subcritical", "log", "supercritical")


def lp_scaling_case(n, s):
    thr = n / (n - 2.0)
    if abs(s - thr) < 1e-12:
        return "log", n / 2.0
    if s < thr:
        return "subcritical", s * (n - 2) / 2.0
    return "supercritical", n - s * (n - 2) / 2.0


def fit_lp_scaling(b_template, domain, s, deltas, seed=0):
    """Fitted delta-exponent of the domain L^s mass, log factor compensated.

    Returns (fitted_exponent, expected_exponent, case)."""
    n = b_template.n
    case, expected = lp_scaling_case(n, s)
    vals = []
    for i, d in enumerate(deltas):
        v, _ = bubble_lp_norm(BubbleParams(n, d, b_template.xi), domain, s, seed=seed + i)
        vals.append(v)
    y = np.log(vals)
    if case == "log":
        y = y - np.log(np.abs(np.log(deltas)))
    slope = np.polyfit(np.log(deltas), y, 1)[0]
    return float(slope), float(expected), case


# -- two-bubble cross integrals -----------------------------------------------


def cross_integral(b_i, b_j, s, t, domain=None, n_samples=400_000, seed=0):
    """integral of U_i^s U_j^t (s + t = 2n/(n-2)) over the domain or R^n.

    Coincident centers reduce to radial quadrature; otherwise stratified
    importance MC on the two-bubble mixture.  Returns (value, stderr)."""
    n = b_i.n
    two_star = 2.0 * n / (n - 2.0)
    if s < 0 or t < 0 or abs(s + t - two_star) > 1e-10:
        raise ValueError("exponents must be nonnegative with s + t = 2n/(n-2)")
    if t == 0:
        return bubble_lp_norm(b_i, domain, s, n_samples, seed)
    if s == 0:
        return bubble_lp_norm(b_j, domain, t, n_samples, seed)
    if np.all(b_i.xi == b_j.xi):
        def integrand(r):
            return bb.eval_bubble_radial(b_i, r) ** s * bb.eval_bubble_radial(b_j, r) ** t

        if domain is None:
            return bb.radial_integral(integrand, n)
        if domain.kind == "unit_ball" and np.all(b_i.xi == 0.0):
            area = bb.sphere_area(n)
            val, err = quad(
                lambda r: integrand(r) * r ** (n - 1), 0.0, domain.ball_radius, epsrel=1e-11, limit=300
            )
            return area * val, area * err

    def fn(x):
        val = bb.eval_bubble(b_i, x) ** s * bb.eval_bubble(b_j, x) ** t
        if domain is not None:
            val = val * domain.contains(x)
        return val

    return mc_integral(fn, [b_i, b_j], n_samples, seed)


def coincident_qlog_fit(n, ratios, seed=0):
    """Growth law of the balanced cross term for coincident centers.

    For s = t = n/(n-2) and delta_j/delta_i = rho -> 0 the integral grows like
    q^{n/(n-2)} |log q| with q = (rho + 1/rho)^{-(n-2)/2}; returns the fitted
    exponent of q after compensating the log factor (expected n/(n-2))."""
    s = n / (n - 2.0)
    vals, qs = [], []
    for rho in ratios:
        b_i = BubbleParams(n, 1.0)
        b_j = BubbleParams(n, rho)
        v, _ = cross_integral(b_i, b_j, s, s, domain=None, seed=seed)
        vals.append(v)
        qs.append(pair_quantities(b_i, b_j).q)
    qs, vals = np.asarray(qs), np.asarray(vals)
    y = np.log(vals) - np.log(np.abs(np.log(qs)))
    slope = np.polyfit(np.log(qs), y, 1)[0]
    return float(slope), n / (n - 2.0)


# -- Riesz potential of a bubble power ----------------------------------------


def riesz_potential_profile(n, alpha, delta, r_x, r_dom=1.0):
    """integral over the centered ball of |x-z|^{2-n} (delta/(delta^2+|z|^2))^{alpha/2}.

    Radial reduction by the spherical mean value of the kernel:
    the average of |x-z|^{2-n} over |z| = s equals max(s, |x|)^{2-n}."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    area = bb.sphere_area(n)

    def f(s):
        return np.maximum(s, r_x) ** (2.0 - n) * (delta / (delta**2 + s * s)) ** (alpha / 2.0) * s ** (n - 1)

    pts = sorted({min(max(r_x, 1e-12), r_dom), min(delta, r_dom)})
    val, err = quad(f, 0.0, r_dom, epsrel=1e-10, limit=400, points=pts)
    return area * val, area * err


def riesz_case(n, alpha):
    if alpha < 2:
        return "small"
    if alpha == 2:
        return "edge"
    if alpha < n:
        return "middle"
    if alpha == n:
        return "log"
    return "large"


# -- structural constants -----------------------------------------------------


@dataclass(frozen=True)
class ConstantValue:
    value: float
    stderr: float
    method: str

    def excludes_zero(self):
        return abs(self.value) > 3.0 * self.stderr


@dataclass(frozen=True)
class StructuralConstants:
    """Positive whole-space integrals against the dilation/translation modes.

    a_n  = p * integral U^{p-1} Z^0           (dilation response of the u0 term)
    b_n  = integral U Z^0              (n>=5; equals integral U^2)
    b4   = 3 sqrt(2) integral U^{p-1} Z^0     (n=4 replacement, log regime)
    b3   = (a_3 p / 2) integral U^{p-1} Z^0   (n=3 pair term)
    bbar5, c_n, e_n as used by the leading-order projections.
    """

    n: int
    a_n: ConstantValue
    c_n: ConstantValue
    e_n: ConstantValue
    upz_margin: ConstantValue  # integral U^{p-1} Z^0 itself (sign margin)
    b_n: ConstantValue = None
    b4: ConstantValue = None
    b3: ConstantValue = None
    bbar5: ConstantValue = None

    def as_rows(self):
        rows = []
        for name in ("a_n", "b_n", "b4", "b3", "bbar5", "c_n", "e_n"):
            cv = getattr(self, name)
            if cv is not None:
                rows.append((name, self.n, cv.value, cv.stderr, cv.method))
        return rows


def _two_precision(f, n, label):
    coarse, _ = bb.radial_integral(f, n, epsrel=1e-8)
    fine, err = bb.radial_integral(f, n, epsrel=1e-12)
    spread = abs(fine - coarse) + err
    return ConstantValue(float(fine), float(max(spread, 1e-15 * abs(fine))), label)


def structural_constants(n):
    """All constants by radial quadrature at two precisions, with error bars."""
    n = bb.check_dimension(n)
    p = bb.critical_exponent(n)
    an = bb.dimensional_constant(n)
    one = BubbleParams(n, 1.0)

    def upz(r):
        return bb.eval_bubble_radial(one, r) ** (p - 1) * bb.eval_dilation_radial(one, r)

    margin = _two_precision(upz, n, "radial-quadrature")
    a_n = ConstantValue(p * margin.value, p * margin.stderr, "radial-quadrature")
    c_n = ConstantValue(an * a_n.value, an * a_n.stderr, "radial-quadrature")

    def ezz(r):
        u_pm1 = bb.eval_bubble_radial(one, r) ** (p - 1)
        return r * r * u_pm1 * an * (n - 2.0) * (1.0 + r * r) ** (-n / 2.0)

    kn = _two_precision(ezz, n, "radial-quadrature")
    e_n = ConstantValue(p * an / (2.0 * n) * kn.value, p * an / (2.0 * n) * kn.stderr, "radial-quadrature")

    b_n = b4 = b3 = bbar5 = None
    if n >= 5:
        def uz(r):
            return bb.eval_bubble_radial(one, r) * bb.eval_dilation_radial(one, r)

        b_n = _two_precision(uz, n, "radial-quadrature")
    if n == 4:
        b4 = ConstantValue(3.0 * np.sqrt(2.0) * margin.value, 3.0 * np.sqrt(2.0) * margin.stderr, "radial-quadrature")
    if n == 3:
        b3 = ConstantValue(0.5 * an * p * margin.value, 0.5 * an * p * margin.stderr, "radial-quadrature")
    if n == 5:
        def first(r):
            return upz(r) / r

        def second(r):
            return ((1.0 + r * r) ** (-1.5) - r ** (-3.0)) * (r * r - 1.0) * (1.0 + r * r) ** (-2.5)

        f1 = _two_precision(first, 5, "radial-quadrature")
        f2 = _two_precision(second, 5, "radial-quadrature")
        val = 0.5 * an * f1.value + an**2 * p * f2.value
        err = 0.5 * an * f1.stderr + an**2 * p * f2.stderr
        bbar5 = ConstantValue(val, err, "radial-quadrature")

    return StructuralConstants(
        n=n, a_n=a_n, c_n=c_n, e_n=e_n, upz_margin=margin, b_n=b_n, b4=b4, b3=b3, bbar5=bbar5
    )


def bn_or_b4(n):
    """Route the linear-term constant: b_n for n >= 5, b4 for n = 4.

    The integrand U Z^0 is not absolutely integrable in dimension 4, so asking
    for b_n there is an error, not a number."""
    if n >= 5:
        return structural_constants(n).b_n
    if n == 4:
        return structural_constants(4).b4
    raise ValueError("the linear-term constant b_n requires n >= 5 (use b4 for n = 4)")


def constants_csv_rows(ns=(3, 4, 5, 6, 7)):
    rows = [("constant", "n", "value", "stderr", "method")]
    for n in ns:
        for row in structural_constants(n).as_rows():
            rows.append(row)
    return rows


def estimate_dn(n, seed=0, n_samples=300_000):
    """Empirical pair constant: slope of the cross term integral U_i^p Z_j^0
    against q^{n/(n-2)} (q^{-2/(n-2)} - 2 delta_j/delta_i) over configurations.

    Coincident-center configurations are exact radial quadratures; separated
    ones use MC.  Returns (d_n, rms_relative_residual)."""
    p = bb.critical_exponent(n)
    xs, ys = [], []
    # coincident centers, scale-dominated
    for rho in (0.02, 0.01, 0.005):
        b_i = BubbleParams(n, 1.0)
        b_j = BubbleParams(n, rho)

        def integrand(r):
            return bb.eval_bubble_radial(b_i, r) ** p * bb.eval_dilation_radial(b_j, r)

        val, _ = bb.radial_integral(integrand, n)
        ys.append(val)
        xs.append(_dn_predictor(b_i, b_j))
    # separated, distance-dominated
    rng_seed = seed
    for d in (0.5, 0.8):
        for dl in (0.02, 0.04):
            b_i = BubbleParams(n, dl)
            xi_j = np.zeros(n)
            xi_j[0] = d
            b_j = BubbleParams(n, dl, xi_j)

            def fn(x):
                return bb.eval_bubble(b_i, x) ** p * bb.eval_param_derivative(b_j, 0, x)

            val, _ = mc_integral(fn, [b_i, b_j], n_samples, rng_seed)
            rng_seed += 1
            ys.append(val)
            xs.append(_dn_predictor(b_i, b_j))
    xs, ys = np.asarray(xs), np.asarray(ys)
    dn = float(xs @ ys / (xs @ xs))
    resid = float(np.sqrt(np.mean((ys - dn * xs) ** 2) / np.mean(ys**2)))
    return dn, resid


def _dn_predictor(b_i, b_j):
    n = b_i.n
    q = pair_quantities(b_i, b_j).q
    return q ** (n / (n - 2.0)) * (q ** (-2.0 / (n - 2.0)) - 2.0 * b_j.delta / b_i.delta)


# -- leading-order projection predictions -------------------------------------


@dataclass
class ProjectionPrediction:
    dilation: float
    dilation_terms: dict
    translation_coefficient: float  # multiplies -d(phi)/d(xi^k)
    phi_variant: str  # 'laplace' | 'helmholtz'


def projection_prediction(n, kind, lam, delta, u0_at_center, phi_value, nu=1, pair_term=0.0):
    """Leading-order prediction of the dilation projection of the error terms
    for one bubble, plus the coefficient of the translation projection.

    phi_value is the diagonal regular part at the center in the variant the
    regime calls for (plain for the laplace projection and for n >= 6, shifted
    for the shifted projection, n in {3,4,5}).  Refuses regimes for which the
    known formulas carry same-order unknown corrections.
    """
    n = bb.check_dimension(n)
    if kind not in ("pu1", "pu2"):
        raise ValueError("kind must be 'pu1' or 'pu2'")
    if nu < 1:
        raise RegimeRefusal("at least one bubble is required")
    sc = structural_constants(n)
    terms = {}
    if u0_at_center > 0:
        if kind == "pu2" and n >= 4:
            raise RegimeRefusal(
                "background term with the shifted projection is only controlled for n = 3"
            )
        terms["background"] = sc.a_n.value * u0_at_center * delta ** ((n - 2) / 2.0)
    if kind == "pu1":
        if u0_at_center == 0 and n in (3, 4):
            raise RegimeRefusal(
                "laplace projection with zero background in dimension %d: the linear-term "
                "contribution is domain-dependent at the same order as the predicted term" % n
            )
        if n >= 5:
            terms["linear"] = lam * sc.b_n.value * delta**2
        terms["boundary"] = -sc.c_n.value * phi_value * delta ** (n - 2.0)
        variant = "laplace"
    else:
        if n == 3:
            terms["boundary"] = -sc.c_n.value * phi_value * delta
        elif n == 4:
            terms["linear"] = sc.b4.value * lam * delta**2 * abs(np.log(delta))
            terms["boundary"] = -sc.c_n.value * phi_value * delta**2
            terms["linear_offset"] = -96.0 * bb.sphere_area(4) * lam * delta**2
        elif n == 5:
            terms["linear"] = sc.bbar5.value * lam * delta**2
            terms["boundary"] = -sc.c_n.value * phi_value * delta**3
        else:
            raise RegimeRefusal("the shifted projection is defined for n in {3,4,5}")
        variant = "helmholtz"
    if nu >= 2:
        terms["pair"] = pair_term
    total = float(sum(terms.values()))
    return ProjectionPrediction(
        dilation=total,
        dilation_terms=terms,
        translation_coefficient=sc.e_n.value * delta ** (n - 1.0),
        phi_variant=variant,
    )


# -- elementary inequality suite ----------------------------------------------


def _ratio_max(num, den):
    mask = den > 0
    return float(np.max(num[mask] / den[mask]))


def verify_elementary_inequalities(seed=7, trials=100_000):
    """Randomized constants for the pointwise power inequalities.

    Samples (a, b, s) log-uniformly and returns the empirical constant of each
    bound; all should be finite and modest (<= 1e3)."""
    rng = np.random.default_rng(seed)
    a = 10.0 ** rng.uniform(-3, 3, trials)
    b = 10.0 ** rng.uniform(-3, 3, trials)
    out = {}

    s = rng.uniform(1.0, 2.0, trials)
    lhs = np.abs((a + b) ** s - a**s - b**s)
    out["split_power_s_le_2"] = _ratio_max(lhs, np.minimum(a ** (s - 1) * b, a * b ** (s - 1)))

    s = rng.uniform(2.0, 6.0, trials)
    lhs = np.abs((a + b) ** s - a**s - b**s)
    out["split_power_s_gt_2"] = _ratio_max(lhs, a ** (s - 1) * b + a * b ** (s - 1))

    s = rng.uniform(0.2, 5.0, trials)
    lhs = np.abs((a + b) ** s - a**s)
    den = np.where(s > 1, a ** (s - 1) * b, 0.0) + b**s
    out["increment"] = _ratio_max(lhs, den)

    s = rng.uniform(1.0 + 1e-9, 5.0, trials)
    lhs = np.abs((a + b) ** s - a**s - s * a ** (s - 1) * b)
    den = np.where(s > 2, a ** (s - 2) * b**2, 0.0) + b**s
    out["first_order_remainder"] = _ratio_max(lhs, den)

    s = rng.uniform(2.0 + 1e-9, 6.0, trials)
    lhs = np.abs((a + b) ** s - a**s - s * a ** (s - 1) * b - 0.5 * s * (s - 1) * a ** (s - 2) * b**2)
    den = np.where(s > 3, a ** (s - 3) * b**3, 0.0) + b**s
    out["second_order_remainder"] = _ratio_max(lhs, den)

    # signed increment with a + b >= 0 and 1 < s < 2
    s = rng.uniform(1.0 + 1e-6, 2.0 - 1e-6, trials)
    bs = a * rng.uniform(-1.0, 3.0, trials)
    lhs = np.abs((a + bs) ** s - a**s - s * a ** (s - 1) * bs)
    den = np.minimum(a ** (s - 2) * bs**2, np.abs(bs) ** s)
    out["signed_first_order"] = _ratio_max(lhs, den)
    return out
