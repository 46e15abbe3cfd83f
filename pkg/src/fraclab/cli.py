"""Command line front end.

Each subcommand runs one scenario: build the coefficient family from the
config, run the matching pipeline, check its certificates, and write a
deterministic report plus data tables and figures into the output
directory. Exit status is 0 only when every certificate passes; config
problems exit with 2 and name the offending field.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .barriers import (
    assemble_global_barrier,
    build_V0,
    select_V_params,
    verify_V_supersolution,
    verify_h_supersolution,
)
from .config import (
    ScenarioConfig,
    boundary_trajectory,
    coefficient_field,
    initial_profile,
    load_config,
    reference_config,
    save_config,
    with_overrides,
)
from .elliptic import (
    EllipticProblem,
    NestedSchedule,
    elliptic_nested_limit,
    verify_elliptic_decay,
)
from .errors import ConfigError, FracLabError
from .operator import Grid1D
from .parabolic import (
    ParabolicProblem,
    TimeGrid,
    long_time_limit,
    solve_parabolic_ball,
    verify_uniform_boundary,
)
from .plots import line_plot
from .report import Certificate, emit_report, render_text, write_series

_SCENARIOS = ("barriers", "elliptic", "parabolic", "asymptotic")


def run_barriers(cfg: ScenarioConfig, out: Path) -> list:
    coeffs = coefficient_field(cfg)
    V = select_V_params(cfg.N, cfg.s, coeffs)
    radii = np.geomspace(V.R0, 1e3 * V.R0, 64)
    vrep = verify_V_supersolution(V, coeffs, radii)

    h = assemble_global_barrier(cfg.N, cfg.s, coeffs, V)
    beta = h.V.beta
    slack_lower = h.mu2 - h.vbar * h.V.C * (1.0 + (h.R_hat / 2.0) ** 2) ** (-beta / 2.0)
    slack_upper = (h.vbar * h.V.C - h.mu1 * h.exit.C1 * h.R_hat**h.s) - h.mu2
    crossing_ok = V.R0 < h.R_bar < h.R_hat / 2.0

    grid = Grid1D(half_width=4.0 * h.R_hat, n=255)
    hrep = verify_h_supersolution(h, coeffs, grid)

    certs = [
        Certificate(
            name="decay_margin",
            statement="a(x) (-Delta)^s V stays above 1 on 64 radii in "
            "[R0, 1000 R0]",
            value=vrep.min_margin, threshold=vrep.threshold,
            passed=vrep.passed,
        ),
        Certificate(
            name="crossing_radius",
            statement="decayed and bounded profiles cross strictly between "
            "R0 and R_hat/2",
            value=h.R_bar, threshold=h.R_hat / 2.0, passed=crossing_ok,
        ),
        Certificate(
            name="crossing_slack_lower",
            statement="interior level mu2 clears the decayed profile at "
            "R_hat/2",
            value=slack_lower, threshold=0.0, passed=slack_lower > 0.0,
        ),
        Certificate(
            name="crossing_slack_upper",
            statement="interior level mu2 stays below the decayed profile "
            "at the origin offset",
            value=slack_upper, threshold=0.0, passed=slack_upper > 0.0,
        ),
        Certificate(
            name="seam_slack",
            statement="the glued profile keeps a supersolution margin "
            "across the seam",
            value=h.slack_bulk, threshold=0.0, passed=h.slack_bulk >= 0.0,
        ),
        Certificate(
            name="glued_margin",
            statement="a(x) (-Delta)^s h - c h stays above the threshold on "
            "the ball of radius 4 R_hat",
            value=hrep.min_margin, threshold=hrep.threshold,
            passed=hrep.passed,
        ),
    ]

    write_series(out / "decay_margins.csv",
                 {"radius": radii, "margin": vrep.margins})
    profile_r = np.geomspace(1e-2, h.R_hat, 400)
    write_series(
        out / "barrier_profile.csv",
        {
            "radius": profile_r,
            "h": h.value(profile_r),
            "decayed": h.C_bar * h.v_tilde(profile_r),
            "bounded": h.C_bar * h.w_profile(profile_r),
        },
    )
    line_plot(
        out / "decay_margins.svg",
        {"margin": (radii, vrep.margins)},
        xlabel="radius", ylabel="a (-Delta)^s V", xscale="log",
        title="outer barrier margin",
    )
    line_plot(
        out / "barrier_profile.svg",
        {
            "h": (profile_r, h.value(profile_r)),
            "decayed branch": (profile_r, h.C_bar * h.v_tilde(profile_r)),
        },
        xlabel="radius", ylabel="barrier", xscale="log", yscale="log",
        title="glued barrier profile",
    )
    return certs


def run_elliptic(cfg: ScenarioConfig, out: Path) -> list:
    coeffs = coefficient_field(cfg)
    p = EllipticProblem(cfg.s, coeffs, cfg.g_gamma)
    schedule = NestedSchedule.doubling(cfg.schedule_start, cfg.levels, cfg.dx)
    res = elliptic_nested_limit(p, schedule, cfg.window, cfg.tol)

    V = select_V_params(1, cfg.s, coeffs)
    h = assemble_global_barrier(1, cfg.s, coeffs, V)
    drep = verify_elliptic_decay(res.solution, p, h)

    x = res.solution.grid.nodes
    dev = np.abs(res.solution.values - cfg.g_gamma)
    M = abs(cfg.g_gamma) * coeffs.c_sup + coeffs.f_sup
    violation = float((dev - (M * h.value(np.abs(x)) + 1e-6)).max())

    trace = np.asarray(res.trace, dtype=float)
    trend = float(np.diff(trace).max()) if trace.size > 1 else 0.0
    trend_slack = 1e-12 * max(1.0, float(trace.max(initial=0.0)))

    certs = [
        Certificate(
            name="nested_trace_monotone",
            statement="sup-window differences between consecutive levels "
            "never increase",
            value=trend, threshold=trend_slack, passed=trend <= trend_slack,
        ),
        Certificate(
            name="nested_converged",
            statement="the last level-to-level difference meets the "
            "tolerance",
            value=float(trace[-1]), threshold=cfg.tol, passed=res.converged,
        ),
        Certificate(
            name="decay_envelope",
            statement="|u - gamma| <= M h + 1e-6 at every node, with "
            "M = |gamma| sup|c| + sup|f|",
            value=violation, threshold=0.0, passed=drep.bound_ok,
        ),
        Certificate(
            name="outer_settling",
            statement="deviation from gamma on the outer tenth is at most "
            "half its global maximum",
            value=drep.outer_deviation,
            threshold=0.5 * drep.max_deviation + 1e-8,
            passed=drep.outer_ok,
        ),
    ]

    write_series(
        out / "nested_trace.csv",
        {"half_width": np.asarray(schedule.half_widths[1:], dtype=float),
         "difference": trace},
    )
    write_series(out / "solution_profile.csv",
                 {"x": x, "u": res.solution.values})
    line_plot(
        out / "solution_profile.svg",
        {"u": (x, res.solution.values)},
        xlabel="x", ylabel="u", title="stationary profile",
    )
    line_plot(
        out / "nested_trace.svg",
        {"difference": (np.asarray(schedule.half_widths[1:], dtype=float),
                        np.maximum(trace, 1e-18))},
        xlabel="half-width", ylabel="sup difference",
        xscale="log", yscale="log", title="domain stabilization",
    )
    return certs


def _growth_ratio(traj) -> float:
    sup = np.abs(traj.values).max(axis=1)
    env = traj.kt_constant * np.exp(traj.kt_rate * traj.times)
    ratio = np.divide(sup, env, out=np.zeros_like(sup), where=env > 0)
    return float(ratio.max())


def _barrier_ratio(traj, V0) -> float:
    denom = traj.v0_bound * V0(traj.grid.nodes)
    ratio = np.divide(
        np.abs(traj.values), denom[None, :],
        out=np.zeros_like(traj.values), where=denom[None, :] > 0,
    )
    return float(ratio.max())


def run_parabolic(cfg: ScenarioConfig, out: Path) -> list:
    coeffs = coefficient_field(cfg)
    boundary = boundary_trajectory(cfg)
    p = ParabolicProblem(cfg.s, coeffs, boundary, initial_profile(cfg))
    grid = Grid1D.from_spacing(cfg.L, cfg.dx)
    tg = TimeGrid.from_dt(cfg.T, cfg.dt)

    V = select_V_params(1, cfg.s, coeffs)
    V0 = None
    if coeffs.c_nonpositive:
        V0 = build_V0(assemble_global_barrier(1, cfg.s, coeffs, V))

    traj = solve_parabolic_ball(p, cfg.L, tg, grid, V0=V0)
    R = max(V.R0, min(2.0, 0.45 * cfg.L))
    ub = verify_uniform_boundary(traj, p, V, R)

    growth = _growth_ratio(traj)
    certs = [
        Certificate(
            name="growth_envelope",
            statement="max|u(t)| stays below the exponential envelope "
            "K exp((1 + sup c) t) built from the data",
            value=growth, threshold=1.0 + 1e-8,
            passed=growth <= 1.0 + 1e-8,
        ),
    ]
    if V0 is not None:
        ratio = _barrier_ratio(traj, V0)
        certs.append(
            Certificate(
                name="barrier_envelope",
                statement="|u| <= B V0 at every step for the recorded "
                "barrier constant B",
                value=ratio, threshold=1.0 + 1e-8,
                passed=ratio <= 1.0 + 1e-8,
            )
        )
    decade = ub.radii >= 0.09 * cfg.L
    env_decade = ub.envelope[decade]
    jump = float(np.diff(env_decade).max()) if env_decade.size > 1 else 0.0
    env_slack = 1e-10 * max(1.0, float(ub.envelope.max(initial=0.0)))
    certs.extend(
        [
            Certificate(
                name="boundary_fit",
                statement="worst deviation from g(t) over the outer region "
                "fits under a modest multiple of the decay barrier",
                value=ub.C_bar, threshold=100.0,
                passed=bool(np.isfinite(ub.C_bar)) and ub.C_bar <= 100.0,
            ),
            Certificate(
                name="boundary_envelope_monotone",
                statement="the radial deviation envelope is nonincreasing "
                "across the outer decade",
                value=jump, threshold=env_slack, passed=ub.monotone,
            ),
        ]
    )

    x = grid.nodes
    steps = traj.values.shape[0] - 1
    picks = sorted({0, steps // 4, steps // 2, (3 * steps) // 4, steps})
    write_series(
        out / "time_slices.csv",
        {"x": x, **{f"t={traj.times[k]:g}": traj.values[k] for k in picks}},
    )
    write_series(
        out / "boundary_envelope.csv",
        {
            "radius": ub.radii,
            "deviation": ub.envelope,
            "fitted_bound": ub.C_bar * V.value(ub.radii) + 1e-3,
        },
    )
    line_plot(
        out / "time_slices.svg",
        {f"t={traj.times[k]:g}": (x, traj.values[k]) for k in picks},
        xlabel="x", ylabel="u", title="evolution snapshots",
    )
    line_plot(
        out / "boundary_envelope.svg",
        {
            "deviation": (ub.radii, np.maximum(ub.envelope, 1e-16)),
            "fitted bound": (ub.radii, ub.C_bar * V.value(ub.radii) + 1e-3),
        },
        xlabel="radius", ylabel="sup_t |u - g|", yscale="log",
        title="boundary deviation envelope",
    )
    return certs


def _stationary_distance(res, window: float) -> float:
    dx = res.grid.dx
    sol = res.elliptic.solution
    ref = {
        round(xi / dx): vi
        for xi, vi in zip(sol.grid.nodes, sol.values)
        if abs(xi) <= window
    }
    worst = 0.0
    for xi, vi in zip(res.grid.nodes, res.final):
        if abs(xi) <= window and round(xi / dx) in ref:
            worst = max(worst, abs(vi - ref[round(xi / dx)]))
    return worst


def run_asymptotic(cfg: ScenarioConfig, out: Path) -> list:
    coeffs = coefficient_field(cfg)
    boundary = boundary_trajectory(cfg)
    p = ParabolicProblem(cfg.s, coeffs, boundary, initial_profile(cfg))
    grid = Grid1D.from_spacing(cfg.L, cfg.dx)
    schedule = NestedSchedule.doubling(cfg.schedule_start, cfg.levels, cfg.dx)

    V = select_V_params(1, cfg.s, coeffs)
    V0 = build_V0(assemble_global_barrier(1, cfg.s, coeffs, V))
    res = long_time_limit(
        p, cfg.T, cfg.window, cfg.tol,
        grid=grid, dt=cfg.dt, elliptic_schedule=schedule, V0=V0,
    )

    distances = np.asarray(res.distances, dtype=float)
    trend = float(np.diff(distances).max()) if distances.size > 1 else 0.0
    final_dist = (
        float(distances[-1]) if distances.size
        else _stationary_distance(res, cfg.window)
    )
    cauchy = np.asarray(res.cauchy, dtype=float)
    shrink = float(cauchy[-1] / cauchy[0]) if cauchy[0] > 0 else 0.0

    certs = [
        Certificate(
            name="checkpoint_distances_nonincreasing",
            statement="sup-window distance to the stationary state does "
            "not increase across the reached checkpoints",
            value=trend, threshold=1e-9, passed=trend <= 1e-9,
        ),
        Certificate(
            name="stationary_distance",
            statement="the final state sits within 1e-2 of the stationary "
            "solution on the comparison window",
            value=final_dist, threshold=1e-2, passed=final_dist <= 1e-2,
        ),
        Certificate(
            name="unit_increments_shrink",
            statement="the unit-window movement of the state decays "
            "relative to its first value",
            value=shrink, threshold=1.0, passed=shrink < 1.0,
        ),
        Certificate(
            name="stationary_reference_converged",
            statement="the independent stationary computation met its own "
            "tolerance",
            value=float(res.elliptic.trace[-1]), threshold=cfg.tol,
            passed=res.elliptic.converged,
        ),
    ]

    units = np.arange(1.0, cauchy.size + 1.0)
    write_series(out / "unit_increments.csv",
                 {"T": units, "increment": cauchy})
    if distances.size:
        write_series(
            out / "checkpoint_distances.csv",
            {"T": np.asarray(res.checkpoints, dtype=float),
             "distance": distances},
        )
    mask = np.abs(grid.nodes) <= cfg.window
    sol = res.elliptic.solution
    ref_mask = np.abs(sol.grid.nodes) <= cfg.window
    write_series(
        out / "window_profiles.csv",
        {"x": grid.nodes[mask], "final": res.final[mask]},
    )
    line_plot(
        out / "unit_increments.svg",
        {"increment": (units, np.maximum(cauchy, 1e-18))},
        xlabel="T", ylabel="sup |u(T) - u(T-1)|", yscale="log",
        title="movement per unit window",
    )
    line_plot(
        out / "window_profiles.svg",
        {
            "final state": (grid.nodes[mask], res.final[mask]),
            "stationary": (sol.grid.nodes[ref_mask], sol.values[ref_mask]),
        },
        xlabel="x", ylabel="u", title="long-time limit vs stationary state",
    )
    return certs


_PIPELINES = {
    "barriers": run_barriers,
    "elliptic": run_elliptic,
    "parabolic": run_parabolic,
    "asymptotic": run_asymptotic,
}


def run_scenario(cfg: ScenarioConfig, out_dir, parallel: bool = False) -> list:
    """Run one scenario (or all four references) and emit its report."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if cfg.kind == "verify-all":
        subcfgs = [
            with_overrides(reference_config(kind), tol=cfg.tol)
            if kind in ("elliptic", "asymptotic") else reference_config(kind)
            for kind in _SCENARIOS
        ]

        def run_one(sub):
            return run_scenario(sub, out_dir / sub.kind)

        if parallel:
            with ThreadPoolExecutor(max_workers=len(subcfgs)) as pool:
                results = list(pool.map(run_one, subcfgs))
        else:
            results = [run_one(sub) for sub in subcfgs]
        certs = [
            Certificate(
                name=f"{sub.kind}.{c.name}",
                statement=c.statement,
                value=c.value, threshold=c.threshold, passed=c.passed,
            )
            for sub, sub_certs in zip(subcfgs, results)
            for c in sub_certs
        ]
        emit_report(certs, out_dir)
        return certs

    save_config(cfg, out_dir / "scenario.cfg")
    certs = _PIPELINES[cfg.kind](cfg, out_dir)
    emit_report(certs, out_dir)
    return certs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fraclab",
        description="Verified runs for nonlocal equations with growing "
        "coefficients and data prescribed at infinity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "barriers": "construct and check the decay and glued barriers",
        "elliptic": "stationary problem on nested balls",
        "parabolic": "time marching on one ball with envelope checks",
        "asymptotic": "long-time limit against the stationary state",
        "verify-all": "run every reference scenario and aggregate",
    }
    for name in (*_SCENARIOS, "verify-all"):
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", type=Path, default=None,
                        help="scenario file in the flat key = value format")
        sp.add_argument("--out", type=Path, default=None,
                        help="output directory (else config, else "
                        "FRACLAB_OUT, else ./fraclab-out)")
        sp.add_argument("--tol", type=float, default=None,
                        help="override the convergence tolerance")
        sp.add_argument("--parallel", action="store_true",
                        help="run verify-all scenarios concurrently")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config is not None:
            cfg = load_config(args.config)
            if cfg.kind != args.command:
                raise ConfigError(
                    f"config describes a {cfg.kind!r} scenario but the "
                    f"{args.command} command was invoked",
                    field="scenario",
                )
        else:
            cfg = reference_config(args.command)
        if args.tol is not None:
            cfg = with_overrides(cfg, tol=args.tol)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or cfg.out or os.environ.get("FRACLAB_OUT") or "fraclab-out"
    try:
        certs = run_scenario(cfg, out_dir, parallel=args.parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FracLabError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1

    sys.stdout.write(render_text(certs))
    print(f"report written to {Path(out_dir).resolve()}")
    return 0 if all(c.passed for c in certs) else 1


if __name__ == "__main__":
    sys.exit(main())
