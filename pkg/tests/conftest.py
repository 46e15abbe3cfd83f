import numpy as np
import pytest

from fraclab.barriers import (
    CoefficientField,
    assemble_global_barrier,
    build_V0,
    select_V_params,
)


def zero_field(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def make_bump(amplitude: float, radius: float = 1.0, center: float = 0.0):
    """Smooth compactly supported bump, amplitude at the center, zero
    outside |x - center| >= radius."""

    def bump(x):
        x = np.asarray(x, dtype=float)
        t = 1.0 - ((x - center) / radius) ** 2
        out = np.zeros_like(x)
        mask = t > 0
        out[mask] = amplitude * np.exp(1.0 - 1.0 / t[mask])
        return out

    return bump


def make_coeffs(**overrides) -> CoefficientField:
    """Reference coefficient family: a = C0 (1+x^2)^(alpha/2), c = f = 0."""
    base = dict(
        C0=1.0,
        alpha=1.5,
        c=zero_field,
        c_sup=0.0,
        c_nonpositive=True,
        f=zero_field,
        f_sup=0.0,
    )
    base.update(overrides)
    if "a" not in base:
        C0, alpha = base["C0"], base["alpha"]
        base["a"] = lambda x: C0 * (1.0 + np.asarray(x, dtype=float) ** 2) ** (
            alpha / 2.0
        )
    return CoefficientField(**base)


@pytest.fixture(scope="session")
def reference_coeffs() -> CoefficientField:
    return make_coeffs()


@pytest.fixture(scope="session")
def reference_V(reference_coeffs):
    return select_V_params(1, 0.25, reference_coeffs)


@pytest.fixture(scope="session")
def reference_h(reference_coeffs, reference_V):
    return assemble_global_barrier(1, 0.25, reference_coeffs, reference_V)


@pytest.fixture(scope="session")
def reference_V0(reference_h):
    return build_V0(reference_h)
