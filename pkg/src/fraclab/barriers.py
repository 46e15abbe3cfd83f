"""Supersolution barriers for operators with growing diffusion coefficient.

The construction proceeds in three stages. First a radial power profile is
scaled so that a(x) (-Delta)^s V >= 2 outside a small ball, using only the
assumed growth floor a(x) >= C0 (1+|x|^2)^(alpha/2). Then the profile is
glued to a multiple of the exit-time solution of the ball B_Rhat, with Rhat
chosen by a doubling scan until two explicit inequalities certify that the
glued function is a supersolution across the seam. The result, after
normalization, bounds every solution the parabolic module produces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ConstructionError, DomainError, HypothesisError
from .operator import (
    Grid1D,
    RadialPowerProfile,
    build_discrete_op,
    calibrate_fv_constant,
    frac_lap_radial_power,
)
from .special import c_ns, hyp_limit

_SAFETY = 1.0 + 1e-9
_RHAT_CAP_EXP = 30
_MU1_SAMPLES = 4097


@dataclass(frozen=True)
class CoefficientField:
    """Coefficients of the operator a(x) (-Delta)^s u - c(x) u = f.

    `a`, `c`, `f` are vectorized callables on coordinates (dimension one) or
    radii (radial geometry). The floats are the analytic side of the
    contract: a(x) >= C0 (1+|x|^2)^(alpha/2) everywhere, |c| <= c_sup,
    |f| <= f_sup. `c_nonpositive` declares the sign condition that the
    infinite-horizon results need; solvers that require it check the flag,
    not the callable.
    """

    a: Callable
    C0: float
    alpha: float
    c: Callable
    c_sup: float
    c_nonpositive: bool
    f: Callable
    f_sup: float

    def __post_init__(self):
        if not self.C0 > 0:
            raise DomainError(f"C0 must be positive, got {self.C0}")
        if not self.alpha >= 0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha}")
        if self.c_sup < 0 or self.f_sup < 0:
            raise DomainError("c_sup and f_sup are sup norms, must be >= 0")


@dataclass(frozen=True)
class DecayBarrierV:
    """Scaled decay profile V(r) = C (1+r^2)^(-beta/2) with the property
    a(x) (-Delta)^s V >= 2 for |x| >= R0 (margin 2, so later perturbations
    keep a full unit)."""

    N: int
    s: float
    beta: float
    K: float
    C: float
    R0: float
    profile: RadialPowerProfile

    def value(self, r):
        return self.profile.value(r)

    def frac_lap(self, r):
        return frac_lap_radial_power(self.profile, r)


def select_V_params(N: int, s: float, coeffs: CoefficientField) -> DecayBarrierV:
    """Choose the decay exponent and scaling of the outer barrier profile.

    beta = min(0.9 (N-2s), alpha-2s) keeps the hypergeometric limit K
    positive and the decay compatible with the coefficient growth; the
    amplitude 2/(C0 fv K) then makes a (-Delta)^s V >= 2 outside every
    candidate radius, so the scan accepts the first one.
    """
    if not 0.0 < s < 0.5:
        raise DomainError(f"barrier construction requires s in (0, 1/2), got {s}")
    beta = min(0.9 * (N - 2.0 * s), coeffs.alpha - 2.0 * s)
    if beta <= 0:
        raise HypothesisError(
            f"coefficient growth alpha={coeffs.alpha} must exceed 2s={2 * s} "
            "for a decaying barrier to exist"
        )
    # Any smaller beta is an equally valid choice, so walk it off the stripe
    # where (N-beta)/2 is nearly an integer and the hypergeometric evaluator
    # has to fall back to its slow series at large radii.
    for _ in range(200):
        d = (N - beta) / 2.0
        if abs(d - round(d)) >= 0.06:
            break
        beta *= 0.95
    else:
        raise ConstructionError("could not steer beta away from a degenerate stripe")
    K = hyp_limit(-s, beta / 2.0 + s, N / 2.0)
    fv = calibrate_fv_constant(beta, N, s)
    C = 2.0 / (coeffs.C0 * fv * K) * _SAFETY
    profile = RadialPowerProfile(beta=beta, N=N, s=s, amplitude=C, fv_const=fv)

    R0 = 1.0
    while R0 <= 2.0**20:
        radii = np.geomspace(R0, max(1e6, 100.0 * R0), 128)
        margins = np.asarray(coeffs.a(radii)) * frac_lap_radial_power(profile, radii)
        if np.all(margins >= 1.0):
            return DecayBarrierV(
                N=N, s=s, beta=beta, K=K, C=C, R0=R0, profile=profile
            )
        R0 *= 2.0
    raise ConstructionError("no radius R0 <= 2^20 gives a supersolution margin >= 1")


@dataclass(frozen=True)
class MarginReport:
    """Pointwise supersolution margins and the verdict against a floor."""

    radii: np.ndarray
    margins: np.ndarray
    threshold: float
    passed: bool

    @property
    def min_margin(self) -> float:
        return float(self.margins.min())


def verify_V_supersolution(
    V: DecayBarrierV, coeffs: CoefficientField, radii
) -> MarginReport:
    """Evaluate a(r) (-Delta)^s V(r) at the given radii (closed form) and
    compare against the design floor of 1."""
    r = np.atleast_1d(np.asarray(radii, dtype=float))
    if np.any(r < V.R0):
        raise DomainError(f"barrier property is only claimed for r >= R0={V.R0}")
    margins = np.asarray(coeffs.a(r)) * V.frac_lap(r)
    return MarginReport(
        radii=r, margins=margins, threshold=1.0, passed=bool(np.all(margins >= 1.0))
    )


@dataclass(frozen=True)
class ExitTimeSolution:
    """Explicit solution of (-Delta)^s w = 1 in the ball of radius R_hat,
    zero outside: w(x) = C1 (R_hat^2 - |x|^2)_+^s."""

    R_hat: float
    N: int
    s: float
    C1: float

    def value(self, r):
        rr = np.asarray(r, dtype=float)
        out = self.C1 * np.clip(self.R_hat**2 - rr * rr, 0.0, None) ** self.s
        return float(out) if out.ndim == 0 else out


def getoor(R_hat: float, N: int, s: float) -> ExitTimeSolution:
    if not R_hat > 0:
        raise DomainError(f"R_hat must be positive, got {R_hat}")
    if not (isinstance(N, int) and N >= 1):
        raise DomainError(f"N must be a positive integer, got {N}")
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must be in (0, 1), got {s}")
    C1 = math.gamma(N / 2.0) / (
        4.0**s * math.gamma(N / 2.0 + s) * math.gamma(1.0 + s)
    )
    return ExitTimeSolution(R_hat=R_hat, N=N, s=s, C1=C1)


def _mu1_bound(coeffs: CoefficientField, R_hat: float, N: int, mu0: float) -> float:
    """Upper bound for mu0 sup(1/a) over the ball of radius R_hat: coarse
    sampling, one local refinement around the coarse argmax, and twice the
    coarse-to-fine gap as padding."""
    xs = (
        np.linspace(-R_hat, R_hat, _MU1_SAMPLES)
        if N == 1
        else np.linspace(0.0, R_hat, _MU1_SAMPLES)
    )
    inv = 1.0 / np.asarray(coeffs.a(xs))
    k = int(np.argmax(inv))
    step = xs[1] - xs[0]
    lo = max(xs[0], xs[k] - step)
    hi = min(xs[-1], xs[k] + step)
    fine = 1.0 / np.asarray(coeffs.a(np.linspace(lo, hi, _MU1_SAMPLES)))
    coarse_max = float(inv.max())
    fine_max = max(float(fine.max()), coarse_max)
    return mu0 * (fine_max + 2.0 * (fine_max - coarse_max)) * _SAFETY


@dataclass(frozen=True)
class GlobalBarrierH:
    """Glued barrier h = C_bar min(V_tilde, W).

    W = mu1 w + mu2 (shifted exit-time solution) rules inside the crossing
    radius R_bar; the scaled decay profile V_tilde = vbar V rules outside.
    The doubling scan guarantees W < V_tilde at R0 and W > V_tilde at
    R_hat/2, and the transversality of the crossing makes the minimum a
    genuine supersolution across the seam.
    """

    N: int
    s: float
    V: DecayBarrierV
    exit: ExitTimeSolution
    R_hat: float
    R_bar: float
    vbar: float
    mu0: float
    mu1: float
    mu2: float
    C_bar: float
    slack_bulk: float

    def v_tilde(self, r):
        rr = np.asarray(r, dtype=float)
        out = self.vbar * self.V.C * (1.0 + rr * rr) ** (-self.V.beta / 2.0)
        return float(out) if out.ndim == 0 else out

    def w_profile(self, r):
        return self.mu1 * self.exit.value(r) + self.mu2

    def value(self, r):
        out = self.C_bar * np.minimum(self.v_tilde(r), self.w_profile(r))
        return float(out) if np.ndim(out) == 0 else out


def find_crossing(V_tilde, W, bracket, tol: float | None = None) -> float:
    """Radius where W - V_tilde changes sign, by bisection to tol.

    Both endpoints must bracket a sign change; anything else means the
    doubling scan handed over inconsistent profiles, which is a construction
    failure rather than a root-finding hiccup.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if tol is None:
        tol = 2e-12 * hi
    diff = lambda r: W(r) - V_tilde(r)
    d_lo, d_hi = diff(lo), diff(hi)
    if not (d_lo < 0.0 < d_hi or d_hi < 0.0 < d_lo):
        raise ConstructionError(
            f"no sign change of W - V_tilde on [{lo}, {hi}]: "
            f"endpoints {d_lo:.3e}, {d_hi:.3e}"
        )
    return float(brentq(diff, lo, hi, xtol=tol))


def assemble_global_barrier(
    N: int, s: float, coeffs: CoefficientField, V: DecayBarrierV
) -> GlobalBarrierH:
    """Run the doubling scan for R_hat and glue the two barrier pieces.

    At each candidate the two certifying inequalities are

        vbar C (1+(R_hat/2)^2)^(-beta/2)  <  mu2  <  vbar C - mu1 C1 R_hat^s
        s mu1 C1 (1 + R_hat^2)  <=  beta mu2

    with vbar = R_hat^(s+nu) and mu2 = R_hat^(s+nu-beta+delta). The first
    guarantees W crosses V_tilde inside (R0, R_hat/2) from below; the second
    controls the seam region. The scan accepts the first R_hat where both
    hold, doubling from 4 up to 2^30.
    """
    beta, C = V.beta, V.C
    delta = beta / 2.0
    nu = max(0.0, beta - s + 2.0) + 1.0
    mu0 = 1.0
    C1 = getoor(1.0, N, s).C1

    chosen = None
    failing = ""
    for k in range(2, _RHAT_CAP_EXP + 1):
        R_hat = float(2**k)
        mu1 = _mu1_bound(coeffs, R_hat, N, mu0)
        vbar = R_hat ** (s + nu)
        mu2 = R_hat ** (s + nu - beta + delta)
        lhs = vbar * C * (1.0 + (R_hat / 2.0) ** 2) ** (-beta / 2.0)
        rhs = vbar * C - mu1 * C1 * R_hat**s
        bulk = beta * mu2 - s * mu1 * C1 * (1.0 + R_hat**2)
        if not lhs < mu2:
            failing = "crossing inequality (lower part)"
        elif not mu2 < rhs:
            failing = "crossing inequality (upper part)"
        elif not bulk >= 0.0:
            failing = "seam inequality"
        else:
            chosen = (R_hat, mu1, vbar, mu2, bulk)
            break
    if chosen is None:
        raise ConstructionError(
            f"doubling scan exhausted at R_hat = 2^{_RHAT_CAP_EXP}; "
            f"last failure: {failing}"
        )

    R_hat, mu1, vbar, mu2, bulk = chosen
    exit_sol = getoor(R_hat, N, s)
    v_tilde = lambda r: vbar * C * (1.0 + r * r) ** (-beta / 2.0)
    w_prof = lambda r: mu1 * exit_sol.value(r) + mu2
    R_bar = find_crossing(v_tilde, w_prof, (V.R0, R_hat / 2.0))

    # Transversality at the seam: the exit-time piece must fall off faster,
    # so the minimum switches branch exactly once.
    dv = -beta * R_bar * vbar * C * (1.0 + R_bar * R_bar) ** (-beta / 2.0 - 1.0)
    dw = -2.0 * s * mu1 * exit_sol.C1 * R_bar * (
        R_hat**2 - R_bar * R_bar
    ) ** (s - 1.0)
    if not dw > dv:
        raise ConstructionError(
            f"gluing is not transversal at R_bar={R_bar}: W'={dw:.3e} <= V'={dv:.3e}"
        )

    C_bar = max(1.0 / mu0, 1.0 / vbar) * _SAFETY
    return GlobalBarrierH(
        N=N,
        s=s,
        V=V,
        exit=exit_sol,
        R_hat=R_hat,
        R_bar=R_bar,
        vbar=vbar,
        mu0=mu0,
        mu1=mu1,
        mu2=mu2,
        C_bar=C_bar,
        slack_bulk=bulk,
    )


def verify_h_supersolution(
    h: GlobalBarrierH,
    coeffs: CoefficientField,
    grid: Grid1D,
    threshold: float = 0.95,
) -> MarginReport:
    """Grid check that a(x) (A h)(x) - c(x) h(x) stays above the floor.

    The discrete operator is recomposed with the true exterior values of h
    instead of a constant datum: the wall ramp interpolates to h at the
    wall, and the exterior rays are integrated against h itself by
    quadrature. The grid must extend to at least 4 R_hat so the whole seam
    region is interior.
    """
    if h.N != 1:
        raise DomainError("grid verification is one-dimensional; h has N != 1")
    if grid.half_width < 4.0 * h.R_hat:
        raise DomainError(
            f"grid half-width {grid.half_width} is smaller than "
            f"4 R_hat = {4.0 * h.R_hat}; the seam must be interior"
        )
    op = build_discrete_op(grid, h.s)
    x = grid.nodes
    u = h.value(np.abs(x))
    wall = h.value(grid.half_width)

    n = grid.n
    w_ext = np.concatenate(([0.0], op.neighbor_weights))
    cols = np.arange(n)
    interior = np.empty(n)
    for start in range(0, n, 512):
        rows = np.arange(start, min(start + 512, n))
        w_block = w_ext[np.abs(rows[:, None] - cols[None, :])]
        interior[rows] = np.einsum(
            "ij,ij->i", w_block, u[rows][:, None] - u[None, :]
        )

    kernel_scale = c_ns(1, h.s)
    q = 1.0 + 2.0 * h.s
    L = grid.half_width
    ext = np.empty(n)
    for i, xi in enumerate(x):
        # Substitute y = L/u: the slowly decaying ray integral becomes a
        # mild endpoint singularity on (0, 1], which adaptive quadrature
        # resolves without straining.
        def integrand(uu, xi=xi):
            y = L / uu
            return h.value(y) * ((y - xi) ** -q + (y + xi) ** -q) * L / (uu * uu)

        val, _ = quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=200)
        ext[i] = kernel_scale * val

    Ah = (
        interior
        + (op.ramp_left + op.ramp_right) * (u - wall)
        + (op.tail_left + op.tail_right) * u
        - ext
    )
    margins = np.asarray(coeffs.a(x)) * Ah - np.asarray(coeffs.c(x)) * u
    return MarginReport(
        radii=np.abs(x),
        margins=margins,
        threshold=threshold,
        passed=bool(np.all(margins >= threshold)),
    )


def build_V0(h: GlobalBarrierH) -> Callable:
    """Normalized parabolic barrier V0 = h + 1: dominates 1, inherits the
    supersolution margin, and decays to 1 at infinity."""

    def V0(r):
        return h.value(np.abs(np.asarray(r, dtype=float))) + 1.0

    return V0
