"""Elliptic solves on expanding balls with a prescribed value at infinity.

The equation is a(x) (-Delta)^s u - c(x) u = f on (-L, L) with u = gamma on
the exterior. Growing L with everything else fixed produces the nested
family whose limit realizes the condition at infinity; the limit is watched
through sup-differences of consecutive solutions on a fixed window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve

from .barriers import CoefficientField, GlobalBarrierH
from .errors import DomainError, HypothesisError
from .operator import Grid1D, build_discrete_op


@dataclass(frozen=True)
class EllipticProblem:
    """Problem data for a(x) (-Delta)^s u - c(x) u = f, u = gamma outside.

    The zero-order coefficient must be declared nonpositive: with c > 0
    somewhere the operator can lose invertibility as the ball grows, and
    none of the limit statements survive.
    """

    s: float
    coeffs: CoefficientField
    gamma: float

    def __post_init__(self):
        if not 0.0 < self.s < 0.5:
            raise DomainError(f"s must be in (0, 1/2), got {self.s}")
        if not self.coeffs.c_nonpositive:
            raise HypothesisError(
                "elliptic solves on expanding balls require c <= 0; "
                "set c_nonpositive on the coefficient field"
            )
        object.__setattr__(self, "gamma", float(self.gamma))


@dataclass(frozen=True)
class SolutionField:
    """Discrete solution on a grid together with its exterior value."""

    grid: Grid1D
    values: np.ndarray
    exterior_value: float


def solve_elliptic_ball(p: EllipticProblem, L: float, n: int) -> SolutionField:
    """Direct dense solve of the discretized problem on (-L, L)."""
    grid = Grid1D(half_width=float(L), n=int(n))
    op = build_discrete_op(grid, p.s)
    x = grid.nodes
    a = np.asarray(p.coeffs.a(x), dtype=float)
    if np.any(a <= 0.0):
        raise DomainError("diffusion coefficient a(x) must be positive on the grid")
    c = np.asarray(p.coeffs.c(x), dtype=float)
    f = np.asarray(p.coeffs.f(x), dtype=float)

    system = a[:, None] * op.matrix
    system[np.diag_indices_from(system)] -= c
    rhs = f + a * op.exterior_coeff * p.gamma
    u = solve(system, rhs)
    return SolutionField(grid=grid, values=u, exterior_value=p.gamma)


@dataclass(frozen=True)
class NestedSchedule:
    """Increasing half-widths at a fixed spacing; at least three levels, so
    the difference trace has at least two entries to judge a trend."""

    half_widths: tuple
    dx: float

    def __post_init__(self):
        if len(self.half_widths) < 3:
            raise DomainError("schedule needs at least three levels")
        if not all(b > a for a, b in zip(self.half_widths, self.half_widths[1:])):
            raise DomainError("half_widths must be strictly increasing")
        for L in self.half_widths:
            Grid1D.from_spacing(L, self.dx)  # wall/lattice commensurability

    @classmethod
    def doubling(cls, L0: float, levels: int, dx: float) -> "NestedSchedule":
        return cls(
            half_widths=tuple(L0 * 2.0**j for j in range(levels)),
            dx=dx,
        )


@dataclass(frozen=True)
class NestedResult:
    """Finest-level solution, the sup-difference trace between consecutive
    levels on the comparison window, and whether the last difference met the
    tolerance. Exhausting the schedule without meeting it is a result, not
    an error."""

    solution: SolutionField
    trace: np.ndarray
    converged: bool


def _window_values(field: SolutionField, window: float) -> dict:
    """Map lattice index -> value for nodes with |x| <= window. Grids with a
    common dx nest exactly, so integer lattice coordinates line up."""
    dx = field.grid.dx
    out = {}
    for xi, ui in zip(field.grid.nodes, field.values):
        k = round(xi / dx)
        if abs(k * dx) <= window + 1e-12:
            out[k] = ui
    return out


def elliptic_nested_limit(
    p: EllipticProblem, schedule: NestedSchedule, window: float, tol: float
) -> NestedResult:
    """Solve on every level of the schedule and trace the stabilization.

    The window must sit strictly inside the smallest ball; differences are
    measured node-by-node on the shared lattice.
    """
    if not 0.0 < window < schedule.half_widths[0]:
        raise DomainError(
            f"window {window} must lie inside the smallest half-width "
            f"{schedule.half_widths[0]}"
        )
    prev = None
    trace = []
    field = None
    for L in schedule.half_widths:
        grid = Grid1D.from_spacing(L, schedule.dx)
        field = solve_elliptic_ball(p, L, grid.n)
        current = _window_values(field, window)
        if prev is not None:
            common = sorted(set(prev) & set(current))
            if not common:
                raise DomainError("no shared window nodes between levels")
            trace.append(max(abs(current[k] - prev[k]) for k in common))
        prev = current
    trace = np.asarray(trace)
    return NestedResult(
        solution=field, trace=trace, converged=bool(trace[-1] <= tol)
    )


@dataclass(frozen=True)
class DecayReport:
    """Outcome of the barrier comparison for an elliptic solution."""

    bound_ok: bool
    outer_ok: bool
    max_deviation: float
    outer_deviation: float

    @property
    def passed(self) -> bool:
        return self.bound_ok and self.outer_ok


def verify_elliptic_decay(
    u: SolutionField, p: EllipticProblem, h: GlobalBarrierH
) -> DecayReport:
    """Check the solution against the comparison-principle envelope.

    The shifted solution u - gamma is controlled by M h with
    M = |gamma| c_sup + f_sup (the source size after shifting), up to a
    small additive slack for solver rounding. Independently, the deviation
    from gamma on the outer tenth of the ball must not exceed half its
    global maximum: the solution has to be settling toward its exterior
    value, not piling up at the wall.
    """
    x = u.grid.nodes
    dev = np.abs(u.values - u.exterior_value)
    M = abs(u.exterior_value) * p.coeffs.c_sup + p.coeffs.f_sup
    bound = M * h.value(np.abs(x)) + 1e-6
    bound_ok = bool(np.all(dev <= bound))

    outer = np.abs(x) >= 0.9 * u.grid.half_width
    outer_dev = float(dev[outer].max()) if np.any(outer) else 0.0
    outer_ok = outer_dev <= 0.5 * float(dev.max()) + 1e-8
    return DecayReport(
        bound_ok=bound_ok,
        outer_ok=outer_ok,
        max_deviation=float(dev.max()),
        outer_deviation=outer_dev,
    )
