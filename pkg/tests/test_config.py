import numpy as np
import pytest

from fraclab.config import (
    ScenarioConfig,
    boundary_trajectory,
    coefficient_field,
    dump_config,
    initial_profile,
    parse_config,
    reference_config,
    with_overrides,
)
from fraclab.errors import ConfigError


class TestRoundTrip:
    @pytest.mark.parametrize(
        "kind", ["barriers", "elliptic", "parabolic", "asymptotic", "verify-all"]
    )
    def test_reference_configs_round_trip(self, kind):
        cfg = reference_config(kind)
        assert parse_config(dump_config(cfg)) == cfg

    def test_dump_is_stable(self):
        cfg = reference_config("parabolic")
        assert dump_config(cfg) == dump_config(parse_config(dump_config(cfg)))

    def test_comments_and_blanks_ignored(self):
        cfg = parse_config(
            "# a scenario\n\nscenario = barriers\ns = 0.3  # fractional order\n"
        )
        assert cfg.kind == "barriers"
        assert cfg.s == 0.3


class TestParsing:
    def test_unknown_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config("scenario = barriers\nwhatever = 3\n")
        assert err.value.field == "whatever"

    def test_unparsable_value(self):
        with pytest.raises(ConfigError) as err:
            parse_config("scenario = barriers\ns = fast\n")
        assert err.value.field == "s"

    def test_missing_scenario(self):
        with pytest.raises(ConfigError) as err:
            parse_config("s = 0.25\n")
        assert err.value.field == "scenario"

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as err:
            parse_config("scenario = barriers\ns = 0.2\ns = 0.3\n")
        assert err.value.field == "s"

    def test_line_without_assignment(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("scenario = barriers\njust some words\n")


class TestValidation:
    def test_bad_scenario_kind(self):
        with pytest.raises(ConfigError) as err:
            parse_config("scenario = heat\n")
        assert err.value.field == "scenario"

    def test_s_range(self):
        with pytest.raises(ConfigError) as err:
            parse_config("scenario = barriers\ns = 0.75\n")
        assert err.value.field == "s"

    def test_alpha_versus_s(self):
        with pytest.raises(ConfigError, match="alpha must exceed 2 s"):
            parse_config("scenario = barriers\ns = 0.45\nalpha = 0.5\n")

    def test_infinite_horizon_needs_nonpositive_c(self):
        text = (
            "scenario = asymptotic\nc.kind = constant\nc.value = 0.1\n"
            "g.kind = exp_decay\ng.gamma = 0.0\nu0.kind = match\n"
        )
        with pytest.raises(ConfigError, match="c <= 0") as err:
            parse_config(text)
        assert err.value.field == "c.value"

    def test_elliptic_needs_nonpositive_c(self):
        with pytest.raises(ConfigError, match="c <= 0"):
            parse_config(
                "scenario = elliptic\nc.kind = constant\nc.value = 2.0\n"
            )

    def test_positive_c_with_large_dt(self):
        text = (
            "scenario = parabolic\nc.kind = constant\nc.value = 4.0\n"
            "time.dt = 0.5\ntime.T = 1.0\n"
        )
        with pytest.raises(ConfigError, match="stability") as err:
            parse_config(text)
        assert err.value.field == "time.dt"

    def test_positive_c_with_small_dt_is_fine(self):
        cfg = parse_config(
            "scenario = parabolic\nc.kind = constant\nc.value = 4.0\n"
            "time.dt = 0.05\ntime.T = 1.0\n"
        )
        assert cfg.c_value == 4.0

    def test_incompatible_initial_level(self):
        text = (
            "scenario = parabolic\ng.kind = constant\ng.gamma = 1.0\n"
            "u0.kind = constant\nu0.value = 0.2\n"
        )
        with pytest.raises(ConfigError, match="g\\(0\\)") as err:
            parse_config(text)
        assert err.value.field == "u0.value"

    def test_grid_commensurability(self):
        with pytest.raises(ConfigError) as err:
            parse_config("scenario = parabolic\ngrid.L = 10.0\ngrid.dx = 0.3\n")
        assert err.value.field == "grid.dx"

    def test_dt_must_divide_horizon(self):
        with pytest.raises(ConfigError) as err:
            parse_config("scenario = parabolic\ntime.dt = 0.3\ntime.T = 1.0\n")
        assert err.value.field == "time.dt"

    def test_asymptotic_dt_must_divide_unit_window(self):
        with pytest.raises(ConfigError) as err:
            parse_config(
                "scenario = asymptotic\ng.kind = exp_decay\nu0.kind = match\n"
                "window = 2.0\ntime.dt = 0.4\ntime.T = 2.0\n"
            )
        assert err.value.field == "time.dt"

    def test_window_inside_smallest_ball(self):
        with pytest.raises(ConfigError) as err:
            parse_config(
                "scenario = elliptic\ngrid.L = 16.0\ngrid.levels = 3\nwindow = 6.0\n"
            )
        assert err.value.field == "window"

    def test_grid_scenarios_are_one_dimensional(self):
        with pytest.raises(ConfigError) as err:
            parse_config("scenario = elliptic\nN = 3\n")
        assert err.value.field == "N"

    def test_barriers_ignores_grid_fields(self):
        cfg = parse_config("scenario = barriers\nN = 3\ngrid.dx = 0.3\n")
        assert cfg.N == 3

    def test_with_overrides_revalidates(self):
        cfg = reference_config("elliptic")
        with pytest.raises(ConfigError):
            with_overrides(cfg, tol=-1.0)


class TestFamilies:
    def test_power_law_coefficient(self):
        cfg = ScenarioConfig(kind="barriers", C0=0.2, alpha=1.5)
        coeffs = coefficient_field(cfg)
        assert coeffs.a(0.0) == pytest.approx(0.2)
        np.testing.assert_allclose(
            coeffs.a(np.array([2.0])), 0.2 * 5.0**0.75, rtol=1e-14
        )

    def test_gaussian_well(self):
        cfg = ScenarioConfig(
            kind="parabolic", c_kind="gaussian_well", c_value=-0.5, c_width=2.0
        )
        coeffs = coefficient_field(cfg)
        assert coeffs.c_nonpositive
        assert coeffs.c_sup == 0.5
        assert coeffs.c(0.0) == pytest.approx(-0.5)
        assert coeffs.c(np.array([2.0]))[0] == pytest.approx(-0.5 * np.exp(-1.0))

    def test_bump_source(self):
        cfg = ScenarioConfig(
            kind="parabolic", f_kind="bump", f_amplitude=0.3, f_radius=2.0
        )
        coeffs = coefficient_field(cfg)
        assert coeffs.f_sup == 0.3
        assert coeffs.f(np.array([0.0]))[0] == pytest.approx(0.3)
        assert coeffs.f(np.array([2.5]))[0] == 0.0

    def test_constant_boundary(self):
        cfg = ScenarioConfig(kind="parabolic", g_kind="constant", g_gamma=-0.7)
        b = boundary_trajectory(cfg)
        assert b.g(3.0) == -0.7
        assert b.g_sup == 0.7
        assert b.limit == -0.7
        assert b.monotonicity is None

    def test_sin_decay_boundary(self):
        cfg = ScenarioConfig(
            kind="parabolic", g_kind="sin_decay", g_gamma=0.2, g_scale=0.5
        )
        b = boundary_trajectory(cfg)
        assert b.g(0.0) == pytest.approx(0.2)
        assert b.g_sup == 0.7
        assert b.limit == 0.2

    def test_exp_decay_monotonicity_follows_sign(self):
        up = ScenarioConfig(
            kind="parabolic", g_kind="exp_decay", g_gamma=0.0, g_scale=-1.0,
            u0_kind="match",
        )
        down = ScenarioConfig(
            kind="parabolic", g_kind="exp_decay", g_gamma=0.0, g_scale=1.0,
            u0_kind="match",
        )
        assert boundary_trajectory(up).monotonicity == "nondecreasing"
        assert boundary_trajectory(down).monotonicity == "nonincreasing"

    def test_initial_profile_matches_boundary(self):
        cfg = ScenarioConfig(
            kind="parabolic", g_kind="exp_decay", g_gamma=0.5, g_scale=1.0,
            u0_kind="match",
        )
        u0 = initial_profile(cfg)
        np.testing.assert_allclose(u0(np.array([0.0, 3.0])), 1.5)

    def test_initial_bump_rides_on_g0(self):
        cfg = ScenarioConfig(
            kind="parabolic", g_gamma=0.25,
            u0_kind="bump", u0_amplitude=0.5, u0_radius=1.0,
        )
        u0 = initial_profile(cfg)
        assert u0(np.array([0.0]))[0] == pytest.approx(0.75)
        assert u0(np.array([4.0]))[0] == pytest.approx(0.25)
