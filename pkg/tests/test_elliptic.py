import numpy as np
import pytest

from fraclab.elliptic import (
    EllipticProblem,
    NestedSchedule,
    elliptic_nested_limit,
    solve_elliptic_ball,
    verify_elliptic_decay,
)
from fraclab.errors import DomainError, HypothesisError
from tests.conftest import make_bump, make_coeffs


def constant(value: float):
    return lambda x: value * np.ones_like(np.asarray(x, dtype=float))


class TestEllipticProblem:
    def test_requires_sign_condition(self):
        coeffs = make_coeffs(c=constant(0.5), c_sup=0.5, c_nonpositive=False)
        with pytest.raises(HypothesisError):
            EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.0)

    def test_s_domain(self):
        with pytest.raises(DomainError):
            EllipticProblem(s=0.5, coeffs=make_coeffs(), gamma=0.0)


class TestSolveEllipticBall:
    def test_pure_exterior_datum_is_exact(self):
        # c = f = 0: the unique solution is the constant gamma.
        p = EllipticProblem(s=0.25, coeffs=make_coeffs(), gamma=0.7)
        u = solve_elliptic_ball(p, 8.0, 255)
        np.testing.assert_allclose(u.values, 0.7, atol=1e-12)

    def test_constant_balance_is_exact(self):
        # f = -c gamma makes the constant gamma an exact solution.
        coeffs = make_coeffs(
            c=constant(-0.5), c_sup=0.5, f=constant(0.25), f_sup=0.25
        )
        p = EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.5)
        u = solve_elliptic_ball(p, 8.0, 255)
        np.testing.assert_allclose(u.values, 0.5, atol=1e-12)

    def test_positivity_and_symmetry(self):
        coeffs = make_coeffs(f=make_bump(0.1), f_sup=0.1)
        p = EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.0)
        u = solve_elliptic_ball(p, 8.0, 255)
        assert np.all(u.values >= -1e-14)
        assert np.argmax(u.values) == 127
        np.testing.assert_allclose(u.values, u.values[::-1], rtol=1e-10)

    def test_absorption_shrinks_solution(self):
        f = make_bump(0.1)
        p0 = EllipticProblem(
            s=0.25, coeffs=make_coeffs(f=f, f_sup=0.1), gamma=0.0
        )
        pm = EllipticProblem(
            s=0.25,
            coeffs=make_coeffs(c=constant(-0.5), c_sup=0.5, f=f, f_sup=0.1),
            gamma=0.0,
        )
        u0 = solve_elliptic_ball(p0, 8.0, 127)
        um = solve_elliptic_ball(pm, 8.0, 127)
        assert np.all(um.values <= u0.values + 1e-14)

    def test_domain_growth_is_monotone(self):
        # Zero exterior datum constrains less as the ball grows.
        coeffs = make_coeffs(f=make_bump(0.1), f_sup=0.1)
        p = EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.0)
        centers = []
        for L, n in ((4.0, 31), (8.0, 63), (16.0, 127)):
            u = solve_elliptic_ball(p, L, n)
            centers.append(u.values[n // 2])
        assert centers[0] < centers[1] < centers[2]

    def test_nonpositive_diffusion_rejected(self):
        coeffs = make_coeffs(a=lambda x: np.asarray(x, dtype=float) ** 2)
        p = EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.0)
        with pytest.raises(DomainError):
            solve_elliptic_ball(p, 4.0, 31)


class TestNestedSchedule:
    def test_doubling(self):
        sched = NestedSchedule.doubling(4.0, 4, 0.25)
        assert sched.half_widths == (4.0, 8.0, 16.0, 32.0)

    def test_validation(self):
        with pytest.raises(DomainError):
            NestedSchedule(half_widths=(4.0, 8.0), dx=0.25)
        with pytest.raises(DomainError):
            NestedSchedule(half_widths=(8.0, 4.0, 16.0), dx=0.25)
        with pytest.raises(DomainError):
            NestedSchedule(half_widths=(4.0, 8.0, 15.9), dx=0.25)


class TestNestedLimit:
    def test_window_validation(self):
        p = EllipticProblem(s=0.25, coeffs=make_coeffs(), gamma=0.0)
        sched = NestedSchedule.doubling(4.0, 3, 0.25)
        with pytest.raises(DomainError):
            elliptic_nested_limit(p, sched, window=4.0, tol=1e-4)

    def test_constant_case_converges_immediately(self):
        coeffs = make_coeffs(
            c=constant(-0.5), c_sup=0.5, f=constant(0.25), f_sup=0.25
        )
        p = EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.5)
        sched = NestedSchedule.doubling(4.0, 3, 0.25)
        result = elliptic_nested_limit(p, sched, window=2.0, tol=1e-10)
        assert result.converged
        assert np.all(result.trace <= 1e-10)

    def test_bump_trace_decreasing(self):
        coeffs = make_coeffs(f=make_bump(0.1), f_sup=0.1)
        p = EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.0)
        sched = NestedSchedule.doubling(4.0, 4, 0.25)
        result = elliptic_nested_limit(p, sched, window=2.0, tol=1e-12)
        assert len(result.trace) == 3
        assert np.all(np.diff(result.trace) < 0.0)
        assert not result.converged


class TestVerifyEllipticDecay:
    def test_localized_source_passes(self, reference_h):
        coeffs = make_coeffs(f=make_bump(0.01), f_sup=0.01)
        p = EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.0)
        u = solve_elliptic_ball(p, 16.0, 127)
        report = verify_elliptic_decay(u, p, reference_h)
        assert report.bound_ok
        assert report.outer_ok
        assert report.passed

    def test_wall_concentration_fails_outer_check(self, reference_h):
        # Mass piled against the wall is exactly what the outer check is
        # there to flag.
        coeffs = make_coeffs(f=make_bump(0.01, center=15.0), f_sup=0.01)
        p = EllipticProblem(s=0.25, coeffs=coeffs, gamma=0.0)
        u = solve_elliptic_ball(p, 16.0, 127)
        report = verify_elliptic_decay(u, p, reference_h)
        assert not report.outer_ok
        assert not report.passed
