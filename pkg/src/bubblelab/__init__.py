"""Desk-scale numerical laboratory for bubble concentration on bounded domains:
projected bubbles, interaction integrals, decomposition fitting, and empirical
stability exponents of the critical shifted Dirichlet problem."""

from .bubbles import (
    BubbleParams,
    bubble_pde_residual,
    critical_exponent,
    dimensional_constant,
    eval_bubble,
    eval_param_derivative,
    sobolev_energy,
)
from .domain import (
    DomainModel,
    Field,
    GridSpec,
    ball_harmonic_extension_H,
    box,
    robin_function,
    unit_ball,
)
from .solver import (
    PU1,
    PU2,
    OperatorSpec,
    ProjectionKind,
    dual_norm,
    estimate_lambda1,
    gamma_residual,
    h1_norm,
    laplace,
    project_bubble,
    project_derivative,
    shifted,
    solve_dirichlet,
    solve_dn_profile,
    solve_ground_state,
)

__version__ = "0.1.0"
