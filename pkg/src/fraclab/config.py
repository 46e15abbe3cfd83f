"""Flat key = value scenario configuration.

One file describes one scenario run: the coefficient family, the data
selectors, the grids, and the tolerances. Keys are dotted and typed; the
canonical dump re-loads to an equal config, which is what makes runs
reproducible from their own output directories.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .barriers import CoefficientField
from .errors import ConfigError
from .parabolic import BoundaryTrajectory

SCENARIO_KINDS = ("barriers", "elliptic", "parabolic", "asymptotic", "verify-all")

_C_KINDS = ("zero", "constant", "gaussian_well")
_F_KINDS = ("zero", "bump")
_G_KINDS = ("constant", "sin_decay", "exp_decay")
_U0_KINDS = ("match", "constant", "bump")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    N: int = 1
    s: float = 0.25
    alpha: float = 1.5
    C0: float = 1.0
    c_kind: str = "zero"
    c_value: float = 0.0
    c_width: float = 1.0
    f_kind: str = "zero"
    f_amplitude: float = 0.0
    f_radius: float = 1.0
    g_kind: str = "constant"
    g_gamma: float = 0.0
    g_scale: float = 1.0
    u0_kind: str = "match"
    u0_value: float = 0.0
    u0_amplitude: float = 0.0
    u0_radius: float = 1.0
    L: float = 16.0
    dx: float = 0.25
    levels: int = 3
    dt: float = 0.05
    T: float = 20.0
    window: float = 5.0
    tol: float = 1e-4
    out: str = ""

    @property
    def schedule_start(self) -> float:
        return self.L / 2.0 ** (self.levels - 1)

    def g0(self) -> float:
        if self.g_kind == "constant":
            return self.g_gamma
        if self.g_kind == "sin_decay":
            return self.g_gamma
        return self.g_gamma + self.g_scale  # exp_decay at t = 0


# file key -> dataclass field, in canonical dump order
_KEYS = (
    ("scenario", "kind"),
    ("N", "N"),
    ("s", "s"),
    ("alpha", "alpha"),
    ("C0", "C0"),
    ("c.kind", "c_kind"),
    ("c.value", "c_value"),
    ("c.width", "c_width"),
    ("f.kind", "f_kind"),
    ("f.amplitude", "f_amplitude"),
    ("f.radius", "f_radius"),
    ("g.kind", "g_kind"),
    ("g.gamma", "g_gamma"),
    ("g.scale", "g_scale"),
    ("u0.kind", "u0_kind"),
    ("u0.value", "u0_value"),
    ("u0.amplitude", "u0_amplitude"),
    ("u0.radius", "u0_radius"),
    ("grid.L", "L"),
    ("grid.dx", "dx"),
    ("grid.levels", "levels"),
    ("time.dt", "dt"),
    ("time.T", "T"),
    ("window", "window"),
    ("tol", "tol"),
    ("out", "out"),
)
_KEY_TO_FIELD = dict(_KEYS)
_FIELD_TYPES = {f.name: f.type for f in fields(ScenarioConfig)}


def _coerce(key: str, field: str, raw: str):
    kind = _FIELD_TYPES[field]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {kind}", field=key) from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse the flat key = value format; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"unknown key on line {lineno}", field=key)
        field = _KEY_TO_FIELD[key]
        if field in values:
            raise ConfigError("duplicate key", field=key)
        values[field] = _coerce(key, field, raw)
    if "kind" not in values:
        raise ConfigError("missing required key", field="scenario")
    cfg = ScenarioConfig(**values)
    validate_config(cfg)
    return cfg


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def dump_config(cfg: ScenarioConfig) -> str:
    lines = [f"{key} = {getattr(cfg, field)}" for key, field in _KEYS]
    return "\n".join(lines) + "\n"


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))


def validate_config(cfg: ScenarioConfig) -> None:
    """Re-check every precondition the pipelines rely on, naming the field."""
    if cfg.kind not in SCENARIO_KINDS:
        raise ConfigError(
            f"scenario must be one of {SCENARIO_KINDS}, got {cfg.kind!r}",
            field="scenario",
        )
    if cfg.N < 1:
        raise ConfigError("N must be a positive integer", field="N")
    if not 0.0 < cfg.s < 0.5:
        raise ConfigError(f"s must be in (0, 1/2), got {cfg.s}", field="s")
    if cfg.alpha <= 2.0 * cfg.s:
        raise ConfigError(
            f"alpha must exceed 2 s = {2.0 * cfg.s}, got {cfg.alpha}",
            field="alpha",
        )
    if cfg.C0 <= 0.0:
        raise ConfigError("C0 must be positive", field="C0")
    if cfg.c_kind not in _C_KINDS:
        raise ConfigError(f"c.kind must be one of {_C_KINDS}", field="c.kind")
    if cfg.f_kind not in _F_KINDS:
        raise ConfigError(f"f.kind must be one of {_F_KINDS}", field="f.kind")
    if cfg.g_kind not in _G_KINDS:
        raise ConfigError(f"g.kind must be one of {_G_KINDS}", field="g.kind")
    if cfg.u0_kind not in _U0_KINDS:
        raise ConfigError(f"u0.kind must be one of {_U0_KINDS}", field="u0.kind")
    if cfg.c_kind == "gaussian_well" and cfg.c_width <= 0.0:
        raise ConfigError("c.width must be positive", field="c.width")
    if cfg.f_kind == "bump" and cfg.f_radius <= 0.0:
        raise ConfigError("f.radius must be positive", field="f.radius")
    if cfg.tol <= 0.0:
        raise ConfigError("tol must be positive", field="tol")

    if cfg.kind == "barriers" or cfg.kind == "verify-all":
        return

    if cfg.N != 1:
        raise ConfigError(
            "grid scenarios are one-dimensional; N must be 1", field="N"
        )
    if cfg.L <= 0.0 or cfg.dx <= 0.0:
        raise ConfigError("grid.L and grid.dx must be positive", field="grid.L")
    ratio = cfg.L / cfg.dx
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
        raise ConfigError(
            f"grid.L = {cfg.L} is not an integer multiple of grid.dx = {cfg.dx}",
            field="grid.dx",
        )

    c_positive = cfg.c_kind != "zero" and cfg.c_value > 0.0
    if cfg.kind in ("elliptic", "asymptotic") and c_positive:
        raise ConfigError(
            f"{cfg.kind} scenarios run on an unbounded horizon and require "
            "c <= 0; set c.value to a nonpositive level",
            field="c.value",
        )

    if cfg.kind in ("elliptic", "asymptotic"):
        if cfg.levels < 3:
            raise ConfigError(
                "nested schedules need at least 3 levels", field="grid.levels"
            )
        if not 0.0 < cfg.window < cfg.schedule_start:
            raise ConfigError(
                f"window must lie inside the smallest ball "
                f"{cfg.schedule_start}", field="window",
            )

    if cfg.kind in ("parabolic", "asymptotic"):
        if cfg.dt <= 0.0 or cfg.T <= 0.0:
            raise ConfigError("time.dt and time.T must be positive", field="time.dt")
        steps = cfg.T / cfg.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError(
                f"time.T = {cfg.T} is not an integer multiple of time.dt",
                field="time.dt",
            )
        if c_positive and cfg.dt >= 1.0 / cfg.c_value:
            raise ConfigError(
                f"time.dt = {cfg.dt} breaks stability: need dt < "
                f"1/sup(c+) = {1.0 / cfg.c_value}", field="time.dt",
            )
        if cfg.u0_kind == "constant":
            g0 = cfg.g0()
            if abs(cfg.u0_value - g0) > 1e-9:
                raise ConfigError(
                    f"u0.value = {cfg.u0_value} is not compatible with "
                    f"g(0) = {g0}; the initial profile must level out to g(0)",
                    field="u0.value",
                )

    if cfg.kind == "asymptotic":
        per_unit = round(1.0 / cfg.dt)
        if per_unit < 1 or abs(per_unit * cfg.dt - 1.0) > 1e-9:
            raise ConfigError(
                "asymptotic runs need time.dt dividing the unit window",
                field="time.dt",
            )
        if abs(cfg.T - round(cfg.T)) > 1e-9:
            raise ConfigError(
                "asymptotic runs need a whole number of unit windows",
                field="time.T",
            )


def smooth_bump(amplitude: float, radius: float = 1.0, center: float = 0.0):
    """Compactly supported mollifier profile, `amplitude` at the center."""

    def bump(x):
        x = np.asarray(x, dtype=float)
        t = 1.0 - ((x - center) / radius) ** 2
        out = np.zeros_like(x)
        mask = t > 0
        out[mask] = amplitude * np.exp(1.0 - 1.0 / t[mask])
        return out

    return bump


def _zero(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def coefficient_field(cfg: ScenarioConfig) -> CoefficientField:
    C0, alpha = cfg.C0, cfg.alpha

    def a(x):
        return C0 * (1.0 + np.asarray(x, dtype=float) ** 2) ** (alpha / 2.0)

    if cfg.c_kind == "zero":
        c, c_sup = _zero, 0.0
    elif cfg.c_kind == "constant":
        level = cfg.c_value
        c = lambda x: np.full_like(np.asarray(x, dtype=float), level)
        c_sup = abs(level)
    else:  # gaussian well
        level, width = cfg.c_value, cfg.c_width
        c = lambda x: level * np.exp(-((np.asarray(x, dtype=float) / width) ** 2))
        c_sup = abs(level)

    if cfg.f_kind == "zero":
        f, f_sup = _zero, 0.0
    else:
        f = smooth_bump(cfg.f_amplitude, cfg.f_radius)
        f_sup = abs(cfg.f_amplitude)

    return CoefficientField(
        a=a, C0=C0, alpha=alpha,
        c=c, c_sup=c_sup,
        c_nonpositive=cfg.c_kind == "zero" or cfg.c_value <= 0.0,
        f=f, f_sup=f_sup,
    )


def boundary_trajectory(cfg: ScenarioConfig) -> BoundaryTrajectory:
    gamma, scale = cfg.g_gamma, cfg.g_scale
    if cfg.g_kind == "constant":
        return BoundaryTrajectory(
            g=lambda t: gamma, g_sup=abs(gamma), limit=gamma
        )
    if cfg.g_kind == "sin_decay":
        return BoundaryTrajectory(
            g=lambda t: gamma + scale * np.exp(-t) * np.sin(t),
            g_sup=abs(gamma) + abs(scale),
            limit=gamma,
        )
    mono = None
    if scale > 0.0:
        mono = "nonincreasing"
    elif scale < 0.0:
        mono = "nondecreasing"
    return BoundaryTrajectory(
        g=lambda t: gamma + scale * np.exp(-t),
        g_sup=abs(gamma) + abs(scale),
        limit=gamma,
        monotonicity=mono,
    )


def initial_profile(cfg: ScenarioConfig):
    g0 = cfg.g0()
    if cfg.u0_kind == "match":
        return lambda x: np.full_like(np.asarray(x, dtype=float), g0)
    if cfg.u0_kind == "constant":
        value = cfg.u0_value
        return lambda x: np.full_like(np.asarray(x, dtype=float), value)
    bump = smooth_bump(cfg.u0_amplitude, cfg.u0_radius)
    return lambda x: g0 + bump(x)


_REFERENCES = {
    "barriers": ScenarioConfig(kind="barriers"),
    "elliptic": ScenarioConfig(
        kind="elliptic",
        f_kind="bump", f_amplitude=0.01,
        g_gamma=0.5,
        L=256.0, dx=0.25, levels=5,
        window=5.0, tol=1e-4,
    ),
    "parabolic": ScenarioConfig(
        kind="parabolic",
        g_kind="sin_decay", g_gamma=0.0, g_scale=0.5,
        L=16.0, dx=0.125,
        dt=0.05, T=10.0,
    ),
    "asymptotic": ScenarioConfig(
        kind="asymptotic",
        f_kind="bump", f_amplitude=0.01,
        g_kind="exp_decay", g_gamma=0.5, g_scale=1.0,
        u0_kind="constant", u0_value=1.5,
        L=512.0, dx=0.25, levels=4,
        dt=0.05, T=50.0,
        window=5.0, tol=1e-4,
    ),
    "verify-all": ScenarioConfig(kind="verify-all"),
}


def reference_config(kind: str) -> ScenarioConfig:
    """Built-in configuration for each scenario: the coefficient family
    a = C0 (1 + x^2)^(alpha/2) with (N, s, alpha, C0) = (1, 0.25, 1.5, 1)."""
    if kind not in _REFERENCES:
        raise ConfigError(
            f"scenario must be one of {SCENARIO_KINDS}, got {kind!r}",
            field="scenario",
        )
    cfg = _REFERENCES[kind]
    validate_config(cfg)
    return cfg


def with_overrides(cfg: ScenarioConfig, **kwargs) -> ScenarioConfig:
    out = replace(cfg, **kwargs)
    validate_config(out)
    return out
