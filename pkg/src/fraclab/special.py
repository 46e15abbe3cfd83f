"""Gamma and Gauss hypergeometric evaluation.

Everything here is real-parameter only and aimed at the two regimes the
barrier constructions actually visit: series argument z in [0, 1) reached
directly, and z < 0 reached through the Pfaff transformation. The z -> 1
limit is a Gamma quotient evaluated separately (`hyp_limit`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AccuracyError, DomainError

_SERIES_RTOL = 1e-16
_SERIES_CAP = 10000
# Connection-formula coefficients blow up as c-a-b approaches an integer; below
# this distance the raw series is used instead.
_CONNECTION_GAP = 0.05


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gamma(t: float) -> float:
    """Gamma function for t > 0, relative error ~1e-15 on (0, 170].

    Thin validation wrapper: the underlying libm implementation is the
    standard rational approximation with reflection, which is all this
    package needs on the positive axis.
    """
    if not t > 0:
        raise DomainError(f"gamma requires t > 0, got t={t}")
    return math.gamma(t)


def _reciprocal_gamma(t: float) -> float:
    """1/Gamma(t), with the convention 0 at the poles (t a nonpositive int)."""
    if _is_nonpositive_integer(t):
        return 0.0
    return 1.0 / math.gamma(t)


@dataclass(frozen=True)
class Hyp2F1Query:
    """Validated argument tuple for ``hyp2f1``.

    Requires c > 0 and z < 1; those are the only regimes the evaluator
    supports (z >= 1 sits on or beyond the branch cut).
    """

    a: float
    b: float
    c: float
    z: float

    def __post_init__(self):
        if _is_nonpositive_integer(self.c) or not self.c > 0:
            raise DomainError(f"hyp2f1 requires c > 0, got c={self.c}")
        if not self.z < 1:
            raise DomainError(f"hyp2f1 requires z < 1, got z={self.z}")


def _series(a: float, b: float, c: float, z: float) -> float:
    """Raw power series sum_n (a)_n (b)_n / (c)_n z^n / n!.

    Converges for |z| < 1. Used internally with transformed parameters, so c
    may be any real except a nonpositive integer.
    """
    if _is_nonpositive_integer(c):
        raise DomainError(f"series undefined for nonpositive integer c={c}")
    total = 1.0
    term = 1.0
    for n in range(_SERIES_CAP):
        term *= (a + n) * (b + n) / ((c + n) * (1.0 + n)) * z
        total += term
        if abs(term) <= _SERIES_RTOL * abs(total):
            return total
    raise AccuracyError(
        f"hypergeometric series did not converge within {_SERIES_CAP} terms "
        f"(a={a}, b={b}, c={c}, z={z})",
        value=total,
        error_bound=abs(term) * _SERIES_CAP,
    )


def _polynomial(m: int, other: float, c: float, z: float) -> float:
    # (a)_n vanishes for n > m when a = -m, so the series is a degree-m
    # polynomial and converges for every z.
    total = 1.0
    term = 1.0
    for n in range(m):
        term *= (n - m) * (other + n) / ((c + n) * (1.0 + n)) * z
        total += term
    return total


def _hyp2f1(a: float, b: float, c: float, z: float) -> float:
    # Finite sum first: exact at any argument, and required for z <= -1
    # where neither series nor the b-Pfaff image converges directly.
    if _is_nonpositive_integer(a):
        return _polynomial(int(-a), b, c, z)
    if _is_nonpositive_integer(b):
        return _polynomial(int(-b), a, c, z)
    if z == 0.0:
        return 1.0
    if z < 0.0:
        # Pfaff: F(a,b,c,z) = (1-z)^(-b) F(c-a, b, c, z/(z-1)), mapping
        # z < 0 into (0, 1).
        return (1.0 - z) ** (-b) * _hyp2f1(c - a, b, c, z / (z - 1.0))
    if z < 0.5:
        return _series(a, b, c, z)
    gap = abs(c - a - b - round(c - a - b))
    if gap >= _CONNECTION_GAP:
        # Linear transformation to argument 1-z in (0, 0.5]. The 1/Gamma
        # convention drops a term cleanly when c-a or c-b is a nonpositive
        # integer.
        w = 1.0 - z
        coeff1 = (
            math.gamma(c)
            * math.gamma(c - a - b)
            * _reciprocal_gamma(c - a)
            * _reciprocal_gamma(c - b)
        )
        coeff2 = (
            math.gamma(c)
            * math.gamma(a + b - c)
            * _reciprocal_gamma(a)
            * _reciprocal_gamma(b)
        )
        part1 = 0.0 if coeff1 == 0.0 else coeff1 * _series(a, b, a + b - c + 1.0, w)
        part2 = (
            0.0
            if coeff2 == 0.0
            else coeff2 * w ** (c - a - b) * _series(c - a, c - b, c - a - b + 1.0, w)
        )
        return part1 + part2
    # Near-integer c-a-b: the connection coefficients are near a pole, so
    # fall back to the raw series; it converges for z < 1, just slowly.
    return _series(a, b, c, z)


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real arguments.

    Supported domain: c > 0 and z < 1. Negative z is mapped into (0, 1) by
    the Pfaff transformation; z in [0.5, 1) goes through the 1-z connection
    formula when c-a-b is safely non-integer. Relative accuracy is ~1e-9 or
    better for z bounded away from 1.

    Raises DomainError outside the supported domain and AccuracyError (with
    the partial value attached) if the series cannot converge within the
    term cap, which happens only for z very close to 1 with near-integer
    c-a-b.
    """
    q = Hyp2F1Query(a, b, c, z)
    return _hyp2f1(q.a, q.b, q.c, q.z)


def hyp_limit(a: float, b: float, c: float) -> float:
    """Limit of 2F1(a, b; c; z) as z -> 1-, as a Gamma quotient.

    Returns Gamma(c)Gamma(c-a-b) / (Gamma(c-a)Gamma(c-b)). All four Gamma
    arguments are required to be positive; every use in the barrier
    construction satisfies that, and it keeps the quotient pole-free.
    """
    args = {"c": c, "c-a-b": c - a - b, "c-a": c - a, "c-b": c - b}
    for name, value in args.items():
        if not value > 0:
            raise DomainError(f"hyp_limit requires {name} > 0, got {value}")
    log = (
        math.lgamma(c)
        + math.lgamma(c - a - b)
        - math.lgamma(c - a)
        - math.lgamma(c - b)
    )
    return math.exp(log)


def hyp2f1_limit_extrapolated(a: float, b: float, c: float) -> float:
    """Series route to the z -> 1 limit: evaluate at z = 1 - 10^-k, k = 4..8,
    then accelerate with two Aitken sweeps.

    Independent of `hyp_limit` (no Gamma quotient involved), so agreement of
    the two is a real consistency check rather than a tautology.
    """
    values = [hyp2f1(a, b, c, 1.0 - 10.0**-k) for k in range(4, 9)]
    for _ in range(2):
        if len(values) < 3:
            break
        accelerated = []
        for v0, v1, v2 in zip(values, values[1:], values[2:]):
            d1, d2 = v1 - v0, v2 - v1
            if abs(d2 - d1) <= 1e-14 * (1.0 + abs(v2)):
                # Already converged to rounding; Aitken would divide by noise.
                accelerated.append(v2)
            else:
                accelerated.append(v2 - d2 * d2 / (d2 - d1))
        values = accelerated
    return values[-1]


def c_ns(N: int, s: float) -> float:
    """Normalization constant of the fractional Laplacian kernel,
    2^(2s) s Gamma((N+2s)/2) / (pi^(N/2) Gamma(1-s)).
    """
    if not (isinstance(N, int) and N >= 1):
        raise DomainError(f"c_ns requires a positive integer dimension, got N={N}")
    if not 0.0 < s < 1.0:
        raise DomainError(f"c_ns requires s in (0, 1), got s={s}")
    return (
        2.0 ** (2.0 * s)
        * s
        * math.gamma((N + 2.0 * s) / 2.0)
        / (math.pi ** (N / 2.0) * math.gamma(1.0 - s))
    )
