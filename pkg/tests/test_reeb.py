import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zollcap.domains import ContactAmplitude, complex_unit, constant_amplitude, ellipsoid_amplitude
from zollcap.numerics import hopf_point, normalize
from zollcap.reeb import (SearchConfig, alpha0, amplitude_extremum, certify_orbit, contact_volume, ellipsoid_flow,
                          reeb_field, reeb_flow, systole)

points = st.tuples(st.floats(0.05, 0.95), st.floats(0, 6.3), st.floats(0, 6.3))


@given(points)
def test_standard_reeb_field_is_2iz(p):
    x = hopf_point(*p)
    R = reeb_field(constant_amplitude(1))(0.0, x)
    assert np.allclose(R, 2 * complex_unit(x), atol=1e-12)


@given(points, st.floats(1.0, 5.0), st.floats(1.0, 5.0))
def test_reeb_field_normalised(p, a, b):
    amp = ellipsoid_amplitude(a, b)
    x = hopf_point(*p)
    R = reeb_field(amp)(0.0, x)
    # alpha(R) = g alpha_0(R) = 1 and R is tangent to the sphere
    assert float(amp(x) * alpha0(x, R)) == pytest.approx(1.0, abs=1e-12)
    assert abs(np.dot(R, x)) < 1e-12


def test_ellipsoid_flow_matches_integration():
    a, b = 2.0, 3.5
    x = hopf_point(0.3, 0.4, 1.1)
    flow = reeb_flow(ellipsoid_amplitude(a, b))
    for t in (0.7, 2.0, 5.3):
        assert np.allclose(flow(t, x), ellipsoid_flow(a, b)(t, x), atol=1e-9)


def test_contact_volume_of_ellipsoid_form():
    # u = |z1|^2 is uniform on S^3, so the integral of g^2 reduces to ab
    assert contact_volume(ellipsoid_amplitude(1.5, 4.0)) == pytest.approx(6.0, rel=1e-10)
    assert contact_volume(constant_amplitude(1)) == pytest.approx(math.pi ** 2, rel=1e-12)


def test_systole_of_ellipsoid():
    rep = systole(ellipsoid_amplitude(2.0, 3.0))
    assert rep.status == "ok" and rep.systole == pytest.approx(2.0, abs=1e-8)
    assert rep.ratio == pytest.approx(4.0 / 6.0, rel=1e-8)
    assert rep.orbit_certificates[0].fiber_flag


def test_zoll_ratio_is_one():
    rep = systole(constant_amplitude(1))
    assert rep.systole == pytest.approx(math.pi, abs=1e-8) and rep.ratio == pytest.approx(1.0, abs=1e-8)


def test_non_invariant_search_finds_axis_orbits():
    # g = ellipsoid factor times a bump that is invariant under both circle actions
    base = ellipsoid_amplitude(2.0, 2.6)
    amp = ContactAmplitude(lambda x: base(x) * (1 + 0.02 * (x[..., 0] ** 2 + x[..., 1] ** 2) ** 2
                                                 + 1e-3 * x[..., 0] * x[..., 2]))
    rep = systole(amp, SearchConfig(n_u=3, n_phi=2))
    assert rep.status == "ok" and rep.systole is not None
    assert rep.systole <= 2.0 * 1.02 + 1e-3


def test_ceiling_gives_inconclusive():
    rep = systole(ellipsoid_amplitude(20.0, 30.0))
    assert rep.status == "inconclusive" and rep.systole is None


def test_amplitude_extremum():
    x, g = amplitude_extremum(ellipsoid_amplitude(2.0, 3.0), -1.0)
    assert g == pytest.approx(3 / math.pi, abs=1e-10) and abs(x[0]) < 1e-5


def test_certify_rejects_wrong_guess():
    orb = certify_orbit(ellipsoid_amplitude(2.0, 2.0), hopf_point(0.5, 0, 0), 2.0)
    assert orb is not None and orb.period == pytest.approx(2.0, abs=1e-9)
    assert certify_orbit(ellipsoid_amplitude(2.0, 2.0), hopf_point(0.5, 0, 0), 20.0) is None
