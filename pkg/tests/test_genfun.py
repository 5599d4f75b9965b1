import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import complex_grid, radial_bump
from zollcap.genfun import (FlowGeneratingFamily, NotNearIdentityError, ThresholdExceeded, critical_points,
                            fixed_points, flatten_near_fixed_point, flatten_test_hamiltonian,
                            generating_function_of, genfun_residual, hj_residual, invert_midpoint,
                            map_of_generating_function, quadratic_generating_function, radial_cutoff, rotation,
                            rotation_family, smoothstep, time_step)
from zollcap.lift import fixed_point_action


@given(st.floats(-0.4, 0.4))
def test_quadratic_generates_rotation(c):
    phi = map_of_generating_function(quadratic_generating_function(c))
    z = complex_grid(5, 5)[:, None]
    assert np.allclose(phi(z), rotation(2 * math.atan(c))(z), atol=1e-13)


def test_rotation_generating_function_closed_form():
    theta = 0.3
    S = generating_function_of(rotation(theta), basepoint=np.zeros(1))
    u = complex_grid(7, 9)[:, None]
    assert np.allclose(S(u), math.tan(theta / 2) * np.abs(u[:, 0]) ** 2, atol=1e-13)


def shears(f, g):
    """(x, y) -> (x, y + f(x)) followed by (x, y) -> (x + g(y), y); exactly symplectic."""

    def phi(z):
        x, y = z.real, z.imag
        y = y + f(x)
        return x + g(y) + 1j * y

    return phi


def test_map_roundtrip_through_generating_function():
    phi0 = shears(lambda x: 0.05 * np.cos(x), lambda y: 0.04 * y ** 2 + 0.01)
    S = generating_function_of(phi0, basepoint=np.zeros(1))
    phi = map_of_generating_function(S)
    z = complex_grid(4, 4, 0.4)[:, None]
    assert np.max(np.abs(phi(z) - phi0(z))) < 1e-8
    assert genfun_residual(S, phi0, z) < 1e-8


def test_path_independence():
    phi0 = shears(lambda x: 0.03 * x ** 3, lambda y: -0.02 * np.sin(3 * y))
    S1 = generating_function_of(phi0, basepoint=np.zeros(1))
    S2 = generating_function_of(phi0, basepoint=np.zeros(1), path="axis")
    u = complex_grid(4, 4, 0.4)[:, None]
    assert np.max(np.abs(S1(u) - S2(u))) < 1e-12


def test_rotation_family_hamilton_jacobi():
    theta = 0.7
    H = lambda t, w: -(theta / 2) * np.abs(w) ** 2
    assert hj_residual(rotation_family(theta), H, [0.2, 0.6], complex_grid(5, 5)) < 1e-10


def test_flow_family_value_at_fixed_point_is_minus_action():
    H = radial_bump(0.2, 0.5)
    fam = FlowGeneratingFamily(H)
    act = float(fixed_point_action(H, np.array(0j)))
    assert float(fam.value(1.0, np.array([0j]))[0]) == pytest.approx(-act, abs=1e-11)


def test_fixed_and_critical_points_agree():
    # fixed points at (+-0.2, 0), which are also the midpoints there
    phi0 = shears(lambda x: 0.05 * (x ** 2 - 0.04), lambda y: 0.1 * y)
    S = generating_function_of(phi0, basepoint=np.zeros(1))
    seeds = np.array([0.25, -0.25, 0.1j])
    fp = sorted(complex(p[0]).real for p in fixed_points(phi0, seeds))
    cp = sorted(complex(p[0]).real for p in critical_points(S, seeds))
    assert np.allclose(fp, [-0.2, 0.2], atol=1e-10) and np.allclose(cp, fp, atol=1e-7)


def test_threshold_and_divergence_errors():
    with pytest.raises(ThresholdExceeded):
        map_of_generating_function(quadratic_generating_function(2.0))
    with pytest.raises(NotNearIdentityError):
        invert_midpoint(lambda z: -3 * z, np.array([0.5 + 0j]))


@given(st.floats(-0.5, 1.5))
def test_smoothstep_properties(x):
    s = float(smoothstep(x))
    assert 0 <= s <= 1
    assert s + float(smoothstep(1 - x)) == pytest.approx(1.0, abs=1e-15)
    h = 1e-6
    assert float(smoothstep(x, 1)) >= 0
    assert float(smoothstep(x, 1)) == pytest.approx((float(smoothstep(x + h)) - float(smoothstep(x - h))) / (2 * h),
                                                    abs=1e-6)
    assert float(smoothstep(x, 2)) == pytest.approx(
        (float(smoothstep(x + h, 1)) - float(smoothstep(x - h, 1))) / (2 * h), abs=1e-5)


def test_time_step_and_cutoff_plateaus():
    assert np.all(time_step(np.linspace(0, 0.1, 5)) == 0)
    assert np.all(time_step(np.linspace(0.9, 1, 5)) == 1)
    assert np.all(radial_cutoff(np.linspace(0, 0.1, 5), 0.3) == 1)
    assert np.all(radial_cutoff(np.linspace(0.2, 0.5, 5), 0.3) == 0)


def test_flatten_rejects_nonzero_action():
    H = radial_bump(0.01, 0.8)
    with pytest.raises(ValueError, match="zero action"):
        flatten_near_fixed_point(H, 0.3, 0.05)


def test_flatten_rejects_large_hamiltonian():
    with pytest.raises(ThresholdExceeded):
        flatten_near_fixed_point(flatten_test_hamiltonian(c=0.5), 0.3, 0.05)


@pytest.mark.slow
def test_flatten_family_properties(flattened):
    fam, rep = flattened
    assert rep.passed, rep.measured
    H1 = fam.member(1.0)
    w = 0.05 * np.exp(1j * np.linspace(0, 6, 7))
    # O(|w|^2): the ratio stays bounded as w shrinks
    assert np.max(np.abs(H1(0.5, w / 4)) / np.abs(w / 4) ** 2) <= 2 * rep.measured["ratio_h1"] + 1e-12
