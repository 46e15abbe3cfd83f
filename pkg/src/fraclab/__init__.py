"""Numerical toolkit for fractional diffusion with growing coefficients.

The package solves a(x) (-Delta)^s u (+ d_t u) - c(x) u = f on nested balls
with the exterior datum prescribed all the way to infinity, builds the decay
barriers that make the truncation legitimate, and certifies every run
against the envelopes those barriers provide.
"""

from .barriers import (
    CoefficientField,
    DecayBarrierV,
    GlobalBarrierH,
    assemble_global_barrier,
    build_V0,
    getoor,
    select_V_params,
    verify_V_supersolution,
    verify_h_supersolution,
)
from .elliptic import (
    EllipticProblem,
    NestedSchedule,
    SolutionField,
    elliptic_nested_limit,
    solve_elliptic_ball,
    verify_elliptic_decay,
)
from .errors import (
    AccuracyError,
    ConfigError,
    ConstructionError,
    DomainError,
    FracLabError,
    HypothesisError,
    InvariantError,
    StabilityError,
    StateError,
)
from .operator import (
    DiscreteFracOp,
    Grid1D,
    apply_discrete,
    build_discrete_op,
    frac_lap_quadrature,
    frac_lap_radial_power,
)
from .parabolic import (
    BoundaryTrajectory,
    CutoffFamily,
    ParabolicProblem,
    TimeGrid,
    long_time_limit,
    monotone_envelope_run,
    parabolic_nested_limit,
    solve_parabolic_ball,
    verify_uniform_boundary,
)
from .special import c_ns, hyp2f1, hyp2f1_limit_extrapolated, hyp_limit

__version__ = "0.1.0"

__all__ = [
    "AccuracyError",
    "BoundaryTrajectory",
    "CoefficientField",
    "ConfigError",
    "ConstructionError",
    "CutoffFamily",
    "DecayBarrierV",
    "DiscreteFracOp",
    "DomainError",
    "EllipticProblem",
    "FracLabError",
    "GlobalBarrierH",
    "Grid1D",
    "HypothesisError",
    "InvariantError",
    "NestedSchedule",
    "ParabolicProblem",
    "SolutionField",
    "StabilityError",
    "StateError",
    "TimeGrid",
    "apply_discrete",
    "assemble_global_barrier",
    "build_V0",
    "build_discrete_op",
    "c_ns",
    "elliptic_nested_limit",
    "frac_lap_quadrature",
    "frac_lap_radial_power",
    "getoor",
    "hyp2f1",
    "hyp2f1_limit_extrapolated",
    "hyp_limit",
    "long_time_limit",
    "monotone_envelope_run",
    "parabolic_nested_limit",
    "select_V_params",
    "solve_elliptic_ball",
    "solve_parabolic_ball",
    "verify_V_supersolution",
    "verify_elliptic_decay",
    "verify_h_supersolution",
    "verify_uniform_boundary",
]
