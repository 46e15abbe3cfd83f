"""Fractional Laplacian machinery: closed forms, quadrature, discretization.

Three independent evaluation routes live here on purpose. The closed form
for decaying radial powers (`frac_lap_radial_power`) feeds the barrier
construction; the adaptive quadrature (`frac_lap_quadrature`) is the slow
reference everything else is checked against; the grid operator
(`build_discrete_op`) is what the elliptic and parabolic solvers actually
use. They share nothing beyond the kernel constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.linalg import toeplitz

from .errors import AccuracyError, DomainError, StateError
from .special import c_ns, hyp2f1

_APPLY_CHUNK = 512


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid of n interior nodes on (-half_width, half_width).

    Spacing is dx = 2 half_width / (n + 1); nodes sit at -half_width +
    (i+1) dx, so both walls are half a stencil away from the first and last
    node and the node set is symmetric about the origin.
    """

    half_width: float
    n: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError(f"half_width must be positive, got {self.half_width}")
        if not (isinstance(self.n, int) and self.n >= 1):
            raise DomainError(f"n must be a positive integer, got {self.n}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / (self.n + 1)

    @cached_property
    def nodes(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(1, self.n + 1)

    @classmethod
    def from_spacing(cls, half_width: float, dx: float) -> "Grid1D":
        """Grid whose spacing is exactly dx; 2 half_width / dx must be an
        integer (within rounding), otherwise the walls would not be
        commensurate with the lattice."""
        ratio = 2.0 * half_width / dx
        m = round(ratio)
        if m < 2 or abs(ratio - m) > 1e-9 * max(1.0, abs(ratio)):
            raise DomainError(
                f"2*half_width/dx = {ratio} is not an integer >= 2; "
                "grid walls must lie on the lattice"
            )
        return cls(half_width=half_width, n=m - 1)


@dataclass(frozen=True)
class ExteriorDatum:
    """Constant value prescribed on the whole exterior of the grid interval.

    Wraps a bare float so call sites say what the number means; anywhere a
    datum is expected, a plain float is accepted too.
    """

    value: float

    def __float__(self) -> float:
        return float(self.value)


def _exterior_value(g) -> float:
    return float(g)


def _pow_diff(m: np.ndarray, p: float) -> np.ndarray:
    """(m+1)^p - m^p for integer m >= 1, without cancellation."""
    return m**p * np.expm1(p * np.log1p(1.0 / m))


def _lambda_weights(count: int, s: float) -> np.ndarray:
    """lambda(m) = integral_0^1 t (m+t)^(-1-2s) dt for m = 0 .. count-1."""
    out = np.empty(count)
    out[0] = 1.0 / (1.0 - 2.0 * s)
    if count > 1:
        m = np.arange(1, count, dtype=float)
        out[1:] = _pow_diff(m, 1.0 - 2.0 * s) / (1.0 - 2.0 * s) + (
            m / (2.0 * s)
        ) * _pow_diff(m, -2.0 * s)
    return out


def _mu_weights(count: int, s: float) -> np.ndarray:
    """mu(m) = integral_0^1 (1-t) (m+t)^(-1-2s) dt for m = 1 .. count."""
    m = np.arange(1, count + 1, dtype=float)
    return -(m + 1.0) * _pow_diff(m, -2.0 * s) / (2.0 * s) - _pow_diff(
        m, 1.0 - 2.0 * s
    ) / (1.0 - 2.0 * s)


@dataclass(frozen=True)
class DiscreteFracOp:
    """Dense discretization of the fractional Laplacian on a Grid1D.

    Acting on a field u with constant exterior value g, the operator is
    (matrix @ u) - exterior_coeff * g. The pieces are kept separately so
    verification code can swap the constant-exterior tail for an exact
    integral against a known exterior profile:

    - neighbor_weights[m-1]: coupling to the node m steps away (the kernel
      integrated against the piecewise-linear hat chain), m = 1 .. n-1;
    - ramp_left/ramp_right: weight of the half-cell between the outermost
      node and the wall, where the interpolant ramps from u to g;
    - tail_left/tail_right: exact integral of the kernel over the exterior
      ray, applied to (u_i - g).

    All entries carry the physical scaling C(1,s) dx^(-2s) already.
    """

    s: float
    grid: Grid1D
    matrix: np.ndarray
    exterior_coeff: np.ndarray
    neighbor_weights: np.ndarray
    ramp_left: np.ndarray
    ramp_right: np.ndarray
    tail_left: np.ndarray
    tail_right: np.ndarray


def build_discrete_op(grid: Grid1D, s: float) -> DiscreteFracOp:
    """Assemble the dense fractional-Laplacian matrix for s in (0, 1/2).

    Interior cells integrate the kernel exactly against the piecewise-linear
    interpolant (no punctured ball: for s < 1/2 the hat-function singularity
    is integrable). Exterior rays are integrated in closed form, so a
    constant field equal to the exterior datum is annihilated exactly.
    """
    if not 0.0 < s < 0.5:
        raise DomainError(f"grid operator requires s in (0, 1/2), got s={s}")
    n = grid.n
    unit = c_ns(1, s) * grid.dx ** (-2.0 * s)

    lam = _lambda_weights(n, s)
    w = unit * (lam[:-1] + _mu_weights(n - 1, s)) if n > 1 else np.empty(0)

    ramp_left = unit * lam
    ramp_right = ramp_left[::-1].copy()
    idx = np.arange(1, n + 1, dtype=float)
    tail_left = unit * idx ** (-2.0 * s) / (2.0 * s)
    tail_right = tail_left[::-1].copy()
    exterior_coeff = ramp_left + ramp_right + tail_left + tail_right

    matrix = toeplitz(np.concatenate(([0.0], -w)))
    csum = np.concatenate(([0.0], np.cumsum(w)))
    row_weight = csum[np.arange(n)] + csum[n - 1 - np.arange(n)]
    np.fill_diagonal(matrix, row_weight + exterior_coeff)

    return DiscreteFracOp(
        s=s,
        grid=grid,
        matrix=matrix,
        exterior_coeff=exterior_coeff,
        neighbor_weights=w,
        ramp_left=ramp_left,
        ramp_right=ramp_right,
        tail_left=tail_left,
        tail_right=tail_right,
    )


def apply_discrete(op: DiscreteFracOp, field: np.ndarray, exterior) -> np.ndarray:
    """Apply the discrete operator to a field with constant exterior value.

    Evaluates in difference form, sum_j w_ij (u_i - u_j) plus the exterior
    coupling times (u_i - g), so a constant field equal to the exterior
    datum maps to exactly zero, not merely to rounding noise. Solvers use
    the matrix form; the two agree to machine precision.
    """
    u = np.asarray(field, dtype=float)
    n = op.grid.n
    if u.shape != (n,):
        raise DomainError(f"field has shape {u.shape}, grid expects ({n},)")
    g = _exterior_value(exterior)

    w_ext = np.concatenate(([0.0], op.neighbor_weights))
    cols = np.arange(n)
    out = np.empty(n)
    for start in range(0, n, _APPLY_CHUNK):
        rows = np.arange(start, min(start + _APPLY_CHUNK, n))
        w_block = w_ext[np.abs(rows[:, None] - cols[None, :])]
        diffs = u[rows][:, None] - u[None, :]
        out[rows] = np.einsum("ij,ij->i", w_block, diffs)
    out += op.exterior_coeff * (u - g)
    return out


@dataclass(frozen=True)
class RadialPowerProfile:
    """Radial profile u(r) = amplitude * (1 + r^2)^(-beta/2).

    Its fractional Laplacian has the closed form

        amplitude * fv * (1+r^2)^(-(beta/2+s)) * 2F1(-s, beta/2+s; N/2; r^2/(1+r^2)),

    where fv is the value at the origin for unit amplitude. fv is stored
    after calibration (`calibrated`); evaluating the closed form first
    requires it.
    """

    beta: float
    N: int
    s: float
    amplitude: float = 1.0
    fv_const: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not (isinstance(self.N, int) and self.N >= 1):
            raise DomainError(f"N must be a positive integer, got {self.N}")
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must be in (0, 1), got {self.s}")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        out = self.amplitude * (1.0 + r * r) ** (-self.beta / 2.0)
        return float(out) if out.ndim == 0 else out

    def calibrated(self) -> "RadialPowerProfile":
        return replace(self, fv_const=calibrate_fv_constant(self.beta, self.N, self.s))


def calibrate_fv_constant(beta: float, N: int, s: float) -> float:
    """Fractional Laplacian of (1+r^2)^(-beta/2) at the origin, unit amplitude.

    Computed as the radial integral C(N,s) omega_(N-1) int_0^infty
    (1 - (1+rho^2)^(-beta/2)) rho^(-1-2s) drho, with the bracket evaluated
    through expm1 so small rho does not cancel. This is the calibration
    route; the Gamma-product identity for the same constant is exercised
    against it in the tests.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    if not (isinstance(N, int) and N >= 1):
        raise DomainError(f"N must be a positive integer, got {N}")
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must be in (0, 1), got {s}")

    def integrand(rho: float) -> float:
        return -math.expm1(-(beta / 2.0) * math.log1p(rho * rho)) * rho ** (
            -1.0 - 2.0 * s
        )

    inner, err_inner = quad(integrand, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    outer, err_outer = quad(
        integrand, 1.0, np.inf, epsabs=1e-14, epsrel=1e-13, limit=200
    )
    surface = 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)
    value = c_ns(N, s) * surface * (inner + outer)
    err = c_ns(N, s) * surface * (err_inner + err_outer)
    if err > 1e-9 * max(1.0, abs(value)):
        raise AccuracyError(
            f"calibration quadrature error {err:.2e} too large "
            f"(beta={beta}, N={N}, s={s})",
            value=value,
            error_bound=err,
        )
    return value


def frac_lap_radial_power(p: RadialPowerProfile, r):
    """Closed-form fractional Laplacian of a calibrated radial power profile.

    Accepts a scalar radius or an array; negative inputs are treated by
    radial symmetry.
    """
    if p.fv_const is None:
        raise StateError(
            "profile is not calibrated; call calibrate_fv_constant or "
            "RadialPowerProfile.calibrated first"
        )
    r_arr = np.abs(np.asarray(r, dtype=float))
    flat = np.atleast_1d(r_arr).ravel()
    out = np.empty_like(flat)
    for k, rv in enumerate(flat):
        z = rv * rv / (1.0 + rv * rv)
        out[k] = (
            p.amplitude
            * p.fv_const
            * (1.0 + rv * rv) ** (-(p.beta / 2.0 + p.s))
            * hyp2f1(-p.s, p.beta / 2.0 + p.s, p.N / 2.0, z)
        )
    if np.asarray(r).ndim == 0:
        return float(out[0])
    return out.reshape(r_arr.shape)


@dataclass(frozen=True)
class SmoothBoundedFunction:
    """Scalar profile with the derivatives the quadrature route needs.

    For dim == 1 the function is read as u(x) on the line; for dim == 3 as a
    radial profile u(|x|). `breakpoints` lists locations (coordinates for
    dim 1, radii for dim 3) where smoothness degrades; they are fed to the
    quadrature as subdivision points and must stay away from the evaluation
    point, near which u has to be C^2.
    """

    func: Callable[[float], float]
    deriv: Callable[[float], float]
    deriv2: Callable[[float], float]
    limit_at_infinity: float
    breakpoints: tuple = ()
    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 3):
            raise DomainError(f"dim must be 1 or 3, got {self.dim}")


def _quad_piece(f, a: float, b: float, pts=None):
    kwargs = dict(epsabs=1e-13, epsrel=1e-12, limit=200)
    if pts is not None and b != np.inf:
        interior = [p for p in pts if a < p < b]
        if interior:
            kwargs["points"] = sorted(interior)
    return quad(f, a, b, **kwargs)


def _switch_radius(x: float, breakpoints, extra_cap: float = np.inf) -> float:
    dists = [abs(b - x) for b in breakpoints]
    if any(d <= 1e-10 for d in dists):
        raise DomainError(
            f"evaluation point {x} coincides with a breakpoint; the "
            "quadrature needs u to be C^2 near the evaluation point"
        )
    rho0 = min([1.0] + [d / 2.0 for d in dists])
    return min(1e-3, rho0 / 10.0, extra_cap)


def _outer_cut(x: float, breakpoints) -> float:
    far = max((abs(b - x) for b in breakpoints), default=0.0)
    return max(10.0, 2.0 * abs(x) + 10.0, far + 1.0)


def _frac_lap_quad_1d(u: SmoothBoundedFunction, x: float, s: float):
    h_sw = _switch_radius(x, u.breakpoints)
    H = _outer_cut(x, u.breakpoints)
    u_x = float(u.func(x))
    u_inf = u.limit_at_infinity

    # Below h_sw the paired difference is u''(x) h^2 up to O(h^4); the kernel
    # integral of the leading term is analytic and the quartic remainder is
    # smaller than the noise adaptive quadrature would commit on the
    # near-singular integrand.
    main = -float(u.deriv2(x)) * h_sw ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    err = (1.0 + abs(float(u.deriv2(x)))) * h_sw ** (4.0 - 2.0 * s)

    def paired(h: float) -> float:
        return (2.0 * u_x - float(u.func(x + h)) - float(u.func(x - h))) * h ** (
            -1.0 - 2.0 * s
        )

    pts = [abs(b - x) for b in u.breakpoints]
    mid, e_mid = _quad_piece(paired, h_sw, H, pts)

    far_exact = 2.0 * (u_x - u_inf) * H ** (-2.0 * s) / (2.0 * s)

    def corr_plus(h: float) -> float:
        return (u_inf - float(u.func(x + h))) * h ** (-1.0 - 2.0 * s)

    def corr_minus(h: float) -> float:
        return (u_inf - float(u.func(x - h))) * h ** (-1.0 - 2.0 * s)

    cp, e_cp = _quad_piece(corr_plus, H, np.inf)
    cm, e_cm = _quad_piece(corr_minus, H, np.inf)

    const = c_ns(1, s)
    value = const * (main + mid + far_exact + cp + cm)
    err_total = const * (err + e_mid + e_cp + e_cm)
    return value, err_total


def _frac_lap_quad_3d_origin(u: SmoothBoundedFunction, s: float):
    h_sw = _switch_radius(0.0, u.breakpoints)
    H = _outer_cut(0.0, u.breakpoints)
    u_0 = float(u.func(0.0))
    u_inf = u.limit_at_infinity

    # Radial smoothness forces u'(0) = 0, so u(0) - u(rho) = -u''(0) rho^2/2
    # to leading order.
    d2 = float(u.deriv2(0.0))
    main = -(d2 / 2.0) * h_sw ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    err = (1.0 + abs(d2)) * h_sw ** (4.0 - 2.0 * s)

    def mid_f(rho: float) -> float:
        return (u_0 - float(u.func(rho))) * rho ** (-1.0 - 2.0 * s)

    mid, e_mid = _quad_piece(mid_f, h_sw, H, list(u.breakpoints))
    far_exact = (u_0 - u_inf) * H ** (-2.0 * s) / (2.0 * s)

    def corr(rho: float) -> float:
        return (u_inf - float(u.func(rho))) * rho ** (-1.0 - 2.0 * s)

    cr, e_cr = _quad_piece(corr, H, np.inf)

    const = c_ns(3, s) * 4.0 * math.pi
    return const * (main + mid + far_exact + cr), const * (err + e_mid + e_cr)


def _frac_lap_quad_3d(u: SmoothBoundedFunction, r0: float, s: float):
    if r0 < 1e-12:
        return _frac_lap_quad_3d_origin(u, s)

    h_sw = _switch_radius(r0, u.breakpoints, extra_cap=r0 / 2.0)
    H = _outer_cut(r0, u.breakpoints)
    u_r0 = float(u.func(r0))
    u_inf = u.limit_at_infinity
    q = 1.0 + 2.0 * s

    def phi(rho: float) -> float:
        return (u_r0 - float(u.func(rho))) * rho

    def kernel(rho: float) -> float:
        # |rho-r0|^(-1-2s) - (rho+r0)^(-1-2s), written so the far-field
        # cancellation between the two powers happens inside expm1.
        d = abs(rho - r0)
        return d**-q * -math.expm1(q * math.log(d / (rho + r0)))

    # phi(r0) = 0 and phi''(r0) = -(r0 u'' + 2 u'), so the paired collar
    # integral against the singular power is analytic to leading order.
    phi2 = -(r0 * float(u.deriv2(r0)) + 2.0 * float(u.deriv(r0)))
    main = phi2 * h_sw ** (2.0 - 2.0 * s) / (2.0 - 2.0 * s)
    err = (1.0 + abs(phi2)) * h_sw ** (4.0 - 2.0 * s)

    collar_reg, e_collar = _quad_piece(
        lambda rho: -phi(rho) * (rho + r0) ** -q, r0 - h_sw, r0 + h_sw
    )
    pts = list(u.breakpoints)
    left, e_left = _quad_piece(lambda rho: phi(rho) * kernel(rho), 0.0, r0 - h_sw, pts)
    mid, e_mid = _quad_piece(lambda rho: phi(rho) * kernel(rho), r0 + h_sw, H, pts)

    # Far field: split phi into its non-decaying part (u(r0) - u_inf) rho,
    # whose kernel integral is elementary, plus a decaying correction.
    a, b = H - r0, H + r0
    if s == 0.5:
        fin = math.log(b / a) + r0 * (1.0 / a - 1.0 / b)
    else:
        fin = (b ** (1.0 - 2.0 * s) - a ** (1.0 - 2.0 * s)) / (1.0 - 2.0 * s) - (
            r0 / (2.0 * s)
        ) * (b ** (-2.0 * s) - a ** (-2.0 * s))
    i1 = fin + 2.0 * r0 * b ** (-2.0 * s) / (2.0 * s)
    far_exact = (u_r0 - u_inf) * i1

    def far_corr(rho: float) -> float:
        return (u_inf - float(u.func(rho))) * rho * kernel(rho)

    fc, e_fc = _quad_piece(far_corr, H, np.inf)

    pref = c_ns(3, s) * 2.0 * math.pi / (r0 * q)
    value = pref * (main + collar_reg + left + mid + far_exact + fc)
    err_total = pref * (err + e_collar + e_left + e_mid + e_fc)
    return value, err_total


def frac_lap_quadrature(
    u: SmoothBoundedFunction, x: float, s: float, tol: float = 1e-8
) -> float:
    """Fractional Laplacian of a bounded profile by adaptive quadrature.

    Reference route: slow, no closed forms assumed about u beyond the
    descriptor. The singular pairing near the evaluation point is replaced
    below a switch radius by its analytic leading term; everything else is
    adaptive quadrature with declared breakpoints as subdivision points and
    the non-decaying far field integrated exactly.

    Raises AccuracyError, carrying the computed value, if the accumulated
    error estimate exceeds tol.
    """
    if not 0.0 < s < 1.0:
        raise DomainError(f"s must be in (0, 1), got s={s}")
    if u.dim == 1:
        value, err = _frac_lap_quad_1d(u, float(x), s)
    else:
        value, err = _frac_lap_quad_3d(u, abs(float(x)), s)
    if err > tol:
        raise AccuracyError(
            f"quadrature error estimate {err:.2e} exceeds tol={tol:.2e}",
            value=value,
            error_bound=err,
        )
    return value


if __name__ == "__main__":
    profile = RadialPowerProfile(beta=0.45, N=1, s=0.25).calibrated()
    desc = SmoothBoundedFunction(
        func=profile.value,
        deriv=lambda r: -0.45 * r * (1.0 + r * r) ** -1.225,
        deriv2=lambda r: -0.45 * (1.0 + r * r) ** -1.225
        + 0.45 * 2.45 * r * r * (1.0 + r * r) ** -2.225,
        limit_at_infinity=0.0,
        dim=1,
    )
    for r in (0.0, 0.5, 2.0, 5.0):
        closed = frac_lap_radial_power(profile, r)
        quad_val = frac_lap_quadrature(desc, r, 0.25)
        print(f"r={r:4.1f}  closed={closed:+.12e}  quad={quad_val:+.12e}")
