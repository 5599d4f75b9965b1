import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zollcap.numerics import (FlowMap, IntegratorConfig, IntegratorError, bisect_roots, disk_rule, fd_gradient,
                              fd_jacobian, find_closed_orbit, first_return_time, flow_between, hopf_coordinates,
                              hopf_map, hopf_point, integrate_flow, normalize, quadrature, s3_rule, sphere_rule,
                              symplectic_defect, torus_disk_rule)


def oscillator(t, x):
    return np.stack([x[..., 1], -x[..., 0]], axis=-1)


def test_adaptive_matches_rotation():
    x0 = np.array([[1.0, 0.0], [0.3, -0.7]])
    out = integrate_flow(oscillator, x0, 2.5, t_eval=[2.5]).endpoint
    c, s = math.cos(2.5), math.sin(2.5)
    exact = np.stack([c * x0[:, 0] + s * x0[:, 1], -s * x0[:, 0] + c * x0[:, 1]], axis=-1)
    assert np.max(np.abs(out - exact)) < 1e-10


def test_backward_integration_inverts():
    x0 = np.array([0.4, 0.1])
    fwd = integrate_flow(oscillator, x0, 1.3, t_eval=[1.3]).endpoint
    back = integrate_flow(oscillator, fwd, -1.3, t_eval=[1.3]).endpoint
    assert np.max(np.abs(back - x0)) < 1e-11


def test_symplectic_method_conserves_energy():
    cfg = IntegratorConfig(method="symplectic", step=0.05)
    tr = integrate_flow(oscillator, np.array([1.0, 0.0]), 50.0, cfg)
    energy = np.sum(tr.points ** 2, axis=-1)
    # Gauss-Legendre preserves quadratic invariants
    assert np.max(np.abs(energy - 1)) < 1e-12


def test_t_eval_hits_requested_times():
    tr = integrate_flow(oscillator, np.array([1.0, 0.0]), 1.0, t_eval=[0.25, 0.5, 1.0])
    assert np.allclose(tr.times[1:], [0.25, 0.5, 1.0])
    assert tr.points[1:, 0] == pytest.approx(np.cos([0.25, 0.5, 1.0]), abs=1e-11)


def test_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    with pytest.raises(ValueError):
        IntegratorConfig(abs_tol=0.0)
    tight = IntegratorConfig().tightened(10)
    assert tight.abs_tol == pytest.approx(1e-13)


def test_non_finite_field_raises():
    with pytest.raises(IntegratorError):
        integrate_flow(lambda t, x: x / 0.0 * 0.0 + np.nan, np.array([1.0]), 1.0)


def test_flow_between_per_point_times():
    x0 = np.array([[1.0, 0.0], [1.0, 0.0]])
    out = flow_between(oscillator, x0, [0.0, 0.5], [1.0, 2.0])
    assert out[0, 0] == pytest.approx(math.cos(1.0), abs=1e-11)
    assert out[1, 0] == pytest.approx(math.cos(1.5), abs=1e-11)


def test_s3_rule_measure_and_moments():
    rule = s3_rule(8, 8, 8)
    assert quadrature(lambda x: np.ones(len(x)), rule) == pytest.approx(math.pi ** 2, abs=1e-12)
    # |z1|^2 is uniform on [0, 1] for this measure
    assert quadrature(lambda x: x[:, 0] ** 2 + x[:, 1] ** 2, rule) == pytest.approx(math.pi ** 2 / 2, abs=1e-12)
    assert quadrature(lambda x: (x[:, 0] ** 2 + x[:, 1] ** 2) ** 3, rule) == pytest.approx(math.pi ** 2 / 4)


def test_sphere_rule_s5_measure():
    rule = sphere_rule(3, 8)
    assert quadrature(lambda x: np.ones(len(x)), rule) == pytest.approx(math.pi ** 3, rel=1e-10)


def test_disk_rules():
    d = disk_rule(16, 32, radius=0.7)
    assert quadrature(lambda w: np.abs(w) ** 2, d) == pytest.approx(math.pi * 0.7 ** 4 / 2, rel=1e-12)
    t = torus_disk_rule(4, 8, 16, radius=0.5)
    assert quadrature(lambda n: np.cos(2 * math.pi * n[:, 0].real) ** 2 * 0 + 1, t) == pytest.approx(
        math.pi * 0.25)


@given(st.floats(0.01, 0.99), st.floats(-3.1, 3.1), st.floats(-3.1, 3.1))
def test_hopf_coordinates_roundtrip(u, theta, phi):
    x = hopf_point(u, theta, phi)
    assert np.linalg.norm(x) == pytest.approx(1.0)
    u2, th2, ph2 = hopf_coordinates(x)
    assert np.allclose(hopf_point(u2, th2, ph2), x, atol=1e-12)
    # the Hopf map forgets the fiber angle
    assert np.allclose(hopf_map(hopf_point(u, theta + 0.7, phi)), hopf_map(x), atol=1e-12)


def test_fd_gradient_orders():
    fn = lambda x: np.sin(x[..., 0]) * x[..., 1] ** 2
    x = np.array([[0.3, 0.5]])
    exact = np.array([math.cos(0.3) * 0.25, math.sin(0.3) * 1.0])
    assert np.allclose(fd_gradient(fn, x)[0], exact, atol=1e-9)
    assert np.allclose(fd_gradient(fn, x, order=4)[0], exact, atol=1e-11)


def test_symplectic_defect_shear_and_scaling():
    shear = lambda x: np.stack([x[..., 0] + x[..., 1] ** 3, x[..., 1]], axis=-1)
    assert symplectic_defect(fd_jacobian(shear, np.array([0.2, 0.4]))) < 1e-8
    squash = lambda x: np.stack([2 * x[..., 0], x[..., 1]], axis=-1)
    assert symplectic_defect(fd_jacobian(squash, np.array([0.2, 0.4]))) == pytest.approx(1.0)


def test_bisect_roots_vectorised():
    r = bisect_roots(lambda x: x ** 3 - np.array([1.0, 8.0]), [0.0, 0.0], [3.0, 3.0])
    assert np.allclose(r, [1.0, 2.0], atol=1e-12)
    with pytest.raises(ValueError):
        bisect_roots(lambda x: x + 1, 0.0, 1.0)


def s3_rotation(t, x):
    # the alpha_0 Reeb flow e^{2 i t} z
    c, s = np.cos(2 * t), np.sin(2 * t)
    out = np.empty_like(x)
    out[..., 0::2] = c * x[..., 0::2] - s * x[..., 1::2]
    out[..., 1::2] = s * x[..., 0::2] + c * x[..., 1::2]
    return out


def test_closed_orbit_of_hopf_flow():
    flow = FlowMap(exact=s3_rotation, project=normalize)
    orb = find_closed_orbit(flow, hopf_point(0.3, 0.2, 1.0), 3.0)
    assert orb is not None and orb.period == pytest.approx(math.pi, abs=1e-9)


def test_closed_orbit_reduces_double_cover():
    flow = FlowMap(exact=s3_rotation, project=normalize)
    orb = find_closed_orbit(flow, hopf_point(0.5, 0.0, 0.0), 2 * math.pi, max_divisor=3)
    assert orb is None or orb.period == pytest.approx(math.pi, abs=1e-9)


def test_first_return_time_integrated_field():
    def field(t, x):
        z = x.copy()
        z[..., 0::2], z[..., 1::2] = -2 * x[..., 1::2], 2 * x[..., 0::2]
        return z

    flow = FlowMap(field, IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12), project=normalize)
    T = first_return_time(flow, hopf_point(0.4, 0.0, 0.3), 2.0, 4.0)
    assert T == pytest.approx(math.pi, abs=1e-10)
