import numpy as np
import pytest

from fraclab.barriers import (
    CoefficientField,
    assemble_global_barrier,
    build_V0,
    find_crossing,
    getoor,
    select_V_params,
    verify_V_supersolution,
    verify_h_supersolution,
)
from fraclab.errors import ConstructionError, DomainError, HypothesisError
from fraclab.operator import Grid1D, SmoothBoundedFunction, frac_lap_quadrature
from tests.conftest import make_coeffs, zero_field


class TestCoefficientField:
    def test_validation(self):
        with pytest.raises(DomainError):
            make_coeffs(C0=0.0)
        with pytest.raises(DomainError):
            make_coeffs(alpha=-0.5)
        with pytest.raises(DomainError):
            make_coeffs(f_sup=-1.0)


class TestSelectVParams:
    def test_reference_values(self, reference_V):
        # beta = min(0.9 (1-0.5), 1.5-0.5) = 0.45; K and C pinned from an
        # independent high-precision run.
        assert reference_V.beta == pytest.approx(0.45, rel=1e-15)
        np.testing.assert_allclose(reference_V.K, 0.1202146724911984663, rtol=1e-12)
        np.testing.assert_allclose(reference_V.C, 36.9860395607317813, rtol=1e-12)
        assert reference_V.R0 == 1.0
        assert reference_V.profile.fv_const is not None

    def test_growth_hypothesis_required(self):
        with pytest.raises(HypothesisError):
            select_V_params(1, 0.25, make_coeffs(alpha=0.4))

    def test_s_domain(self, reference_coeffs):
        with pytest.raises(DomainError):
            select_V_params(1, 0.6, reference_coeffs)

    def test_degenerate_stripe_is_avoided(self):
        # alpha - 2s = 1.0 would put (N-beta)/2 exactly on an integer; the
        # selector must shrink beta off that stripe.
        V = select_V_params(3, 0.3, make_coeffs(alpha=1.6))
        d = (3 - V.beta) / 2.0
        assert abs(d - round(d)) >= 0.06
        assert 0 < V.beta < 1.0


class TestVerifyVSupersolution:
    def test_design_margin_of_two(self, reference_V, reference_coeffs):
        report = verify_V_supersolution(
            reference_V, reference_coeffs, np.geomspace(1.0, 1e6, 64)
        )
        assert report.passed
        # C was sized for a margin of 2, not just 1.
        assert report.min_margin >= 2.0

    def test_inside_R0_rejected(self, reference_V, reference_coeffs):
        with pytest.raises(DomainError):
            verify_V_supersolution(reference_V, reference_coeffs, [0.5])

    def test_three_dimensional_case(self):
        coeffs = make_coeffs(alpha=1.6)
        V = select_V_params(3, 0.3, coeffs)
        report = verify_V_supersolution(V, coeffs, np.geomspace(1.0, 1e5, 48))
        assert report.passed
        assert report.min_margin >= 2.0


class TestGetoor:
    def test_frozen_constants(self):
        np.testing.assert_allclose(
            getoor(1.0, 1, 0.25).C1, 1.1283791670955126, rtol=1e-13
        )
        np.testing.assert_allclose(getoor(1.0, 1, 0.5).C1, 1.0, rtol=1e-13)
        np.testing.assert_allclose(getoor(1.0, 3, 0.5).C1, 0.5, rtol=1e-13)

    def test_profile_shape(self):
        w = getoor(2.0, 1, 0.25)
        assert w.value(3.0) == 0.0
        np.testing.assert_allclose(w.value(0.0), w.C1 * 4.0**0.25, rtol=1e-15)
        vals = w.value(np.array([0.0, 1.0, 1.9, 2.0, 5.0]))
        assert vals.shape == (5,)
        assert np.all(np.diff(vals) <= 0.0)

    def test_validation(self):
        with pytest.raises(DomainError):
            getoor(-1.0, 1, 0.25)
        with pytest.raises(DomainError):
            getoor(1.0, 1, 1.2)

    def test_unit_source_identity(self):
        # (-Delta)^s of the exit-time profile is exactly 1 inside the ball;
        # checked through the independent quadrature route.
        s = 0.25
        w = getoor(1.0, 1, s)
        C1 = w.C1

        def func(y):
            t = 1.0 - y * y
            return C1 * t**s if t > 0 else 0.0

        def deriv(y):
            t = 1.0 - y * y
            return -2.0 * C1 * s * y * t ** (s - 1.0) if t > 0 else 0.0

        def deriv2(y):
            t = 1.0 - y * y
            if t <= 0:
                return 0.0
            return C1 * (
                -2.0 * s * t ** (s - 1.0)
                + 4.0 * s * (s - 1.0) * y * y * t ** (s - 2.0)
            )

        desc = SmoothBoundedFunction(
            func=func,
            deriv=deriv,
            deriv2=deriv2,
            limit_at_infinity=0.0,
            breakpoints=(-1.0, 1.0),
        )
        for x in (0.0, 0.3, 0.6):
            np.testing.assert_allclose(
                frac_lap_quadrature(desc, x, s, tol=1e-6), 1.0, rtol=1e-9
            )


class TestFindCrossing:
    def test_linear_crossing(self):
        r = find_crossing(lambda r: 2.0 - r, lambda r: r, (0.0, 2.0), tol=1e-12)
        assert abs(r - 1.0) < 1e-10

    def test_no_sign_change(self):
        with pytest.raises(ConstructionError):
            find_crossing(lambda r: 1.0, lambda r: 2.0, (0.0, 1.0))


class TestAssembleGlobalBarrier:
    def test_reference_frozen_values(self, reference_h):
        h = reference_h
        assert h.R_hat == 67108864.0
        np.testing.assert_allclose(h.mu1, 1.0 + 1e-9, rtol=1e-12)
        np.testing.assert_allclose(h.vbar, 1.0055197634548825e27, rtol=1e-12)
        np.testing.assert_allclose(h.mu2, 1.7432719267037787e25, rtol=1e-12)
        np.testing.assert_allclose(h.R_bar, 24998759.268393069, rtol=1e-9)
        np.testing.assert_allclose(h.slack_bulk, 7.8447236688965619e24, rtol=1e-9)
        np.testing.assert_allclose(h.value(0.0), 1.7432719284470506e25, rtol=1e-12)
        np.testing.assert_allclose(h.C_bar, 1.0 + 1e-9, rtol=1e-12)

    def test_crossing_is_bracketed_and_sharp(self, reference_h):
        h = reference_h
        assert h.w_profile(h.V.R0) < h.v_tilde(h.V.R0)
        assert h.w_profile(h.R_hat / 2.0) > h.v_tilde(h.R_hat / 2.0)
        gap = abs(h.w_profile(h.R_bar) - h.v_tilde(h.R_bar))
        assert gap <= 1e-6 * h.w_profile(h.R_bar)

    def test_min_switches_branch_at_crossing(self, reference_h):
        h = reference_h
        r_in, r_out = 0.1 * h.R_bar, 1.2 * h.R_bar
        np.testing.assert_allclose(
            h.value(r_in), h.C_bar * h.w_profile(r_in), rtol=1e-15
        )
        np.testing.assert_allclose(
            h.value(r_out), h.C_bar * h.v_tilde(r_out), rtol=1e-15
        )

    def test_barrier_decreasing(self, reference_h):
        r = np.geomspace(0.01, 1e10, 300)
        assert np.all(np.diff(reference_h.value(r)) <= 0.0)


class TestVerifyHSupersolution:
    def test_reference_margins(self, reference_h, reference_coeffs):
        grid = Grid1D(half_width=4.0 * reference_h.R_hat, n=256)
        report = verify_h_supersolution(reference_h, reference_coeffs, grid)
        assert report.passed
        # The construction leaves astronomic slack; anything near the 0.95
        # floor would mean the composition is wrong, not merely inaccurate.
        assert report.min_margin > 1e25

    def test_grid_too_small(self, reference_h, reference_coeffs):
        grid = Grid1D(half_width=reference_h.R_hat, n=64)
        with pytest.raises(DomainError):
            verify_h_supersolution(reference_h, reference_coeffs, grid)


class TestBuildV0:
    def test_dominates_one(self, reference_h, reference_V0):
        r = np.geomspace(1e-3, 1e12, 100)
        assert np.all(reference_V0(r) >= 1.0)
        np.testing.assert_allclose(
            reference_V0(0.0), reference_h.value(0.0) + 1.0, rtol=1e-15
        )

    def test_negative_argument_radialized(self, reference_V0):
        np.testing.assert_allclose(
            reference_V0(-3.0), reference_V0(3.0), rtol=1e-15
        )
