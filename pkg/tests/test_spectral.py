import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from zollcap.capacities import PI
from zollcap.domains import ContactAmplitude, constant_amplitude, ellipsoid_amplitude
from zollcap.numerics import s3_rule
from zollcap.spectral import (OutsideRegimeError, UnsupportedInputError, bm_distance_near_zoll, critical_fibers,
                              fiber_average, geodesic_path, invariant_perturbation, log_oscillation,
                              short_orbits_from_average, spectral_c0_c1, systolic_corollary_check)

near_one = st.fractions(min_value=Fraction(19, 20), max_value=Fraction(21, 20), max_denominator=100)


def test_fiber_average_kills_charged_harmonics():
    rule = s3_rule(8, 8, 8)
    avg = fiber_average(lambda x: x[:, 0] ** 2 - x[:, 1] ** 2, rule)  # Re z1^2 has fiber charge 2
    assert np.max(np.abs(avg.values)) < 1e-14
    inv = lambda x: x[:, 0] * x[:, 2] + x[:, 1] * x[:, 3]  # Re(z1 conj z2)
    avg = fiber_average(inv, rule)
    assert np.allclose(avg.lifted(), inv(rule.nodes), atol=1e-14)
    assert avg.base_points().shape == (8, 8, 3)


def test_fiber_average_needs_product_rule():
    from zollcap.numerics import disk_rule
    with pytest.raises(ValueError):
        fiber_average(lambda x: x, disk_rule(4, 4))


def test_critical_fibers_of_ellipsoid_and_ball():
    pts, manifold = critical_fibers(ellipsoid_amplitude(1.0, 1.3))
    u = np.sort(pts[:, 0] ** 2 + pts[:, 1] ** 2)
    assert not manifold and np.allclose(u, [0, 1], atol=1e-8)
    _, manifold = critical_fibers(constant_amplitude(1))
    assert manifold


def test_short_orbits_rejects_non_invariant():
    amp = ContactAmplitude(lambda x: 1 + 0.05 * x[..., 0])
    with pytest.raises(UnsupportedInputError):
        short_orbits_from_average(amp)
    with pytest.raises(UnsupportedInputError):
        spectral_c0_c1(amp)


def test_short_orbits_on_critical_manifold():
    certs = short_orbits_from_average(constant_amplitude(1.1))
    assert certs and all(c.kind == "manifold" for c in certs)
    assert all(abs(c.integrated_period - 1.1 * math.pi) < 1e-8 for c in certs)


@given(near_one, near_one, st.fractions(min_value=Fraction(1, 5), max_value=5, max_denominator=20))
def test_c0_c1_conformal_and_ordered(a, b, t):
    c0, c1 = spectral_c0_c1(ellipsoid_amplitude(a, b))
    assert c0 <= c1 and (c0, c1) == (min(a, b), max(a, b))
    assert spectral_c0_c1(ellipsoid_amplitude(t * a, t * b)) == (t * c0, t * c1)


@given(near_one, near_one, near_one)
def test_c0_c1_monotone(a, b, s):
    small = spectral_c0_c1(ellipsoid_amplitude(a, b))
    big = spectral_c0_c1(ellipsoid_amplitude(max(a, a * s), b))
    assert small[0] <= big[0] and small[1] <= big[1]


def test_constant_form_values():
    assert spectral_c0_c1(constant_amplitude(Fraction(1, 2))) == (PI / 2, PI / 2)
    c0, c1 = spectral_c0_c1(constant_amplitude(1.0))
    assert c0 == c1 == pytest.approx(math.pi)


def test_c0_c1_without_closed_form(rng):
    amp = invariant_perturbation(rng, osc=0.1)
    c0, c1 = spectral_c0_c1(amp)
    grid = amp(s3_rule(24, 24, 4).nodes)
    # the optimizer must do at least as well as the grid
    assert c0 <= math.pi * grid.min() + 1e-12 and c1 >= math.pi * grid.max() - 1e-12
    assert c1 / c0 <= 1.1 / 0.999


def test_regime_is_enforced():
    with pytest.raises(OutsideRegimeError):
        spectral_c0_c1(ellipsoid_amplitude(1, 2))
    with pytest.raises(OutsideRegimeError):
        bm_distance_near_zoll(ellipsoid_amplitude(1.0, 2.0))
    assert spectral_c0_c1(ellipsoid_amplitude(1, 2), regime=1.0) == (1, 2)


def test_geodesic_path_endpoints_and_length():
    amp = ellipsoid_amplitude(1.0, 1.1)
    f = lambda x: np.log(amp(x))
    nodes = s3_rule(6, 6, 6).nodes
    path = geodesic_path(f, 5)
    assert np.allclose(path.field(0)(nodes), 1.0)
    assert np.allclose(path.field(-1)(nodes), amp(nodes))
    assert path.length(nodes) == pytest.approx(np.ptp(f(nodes)), abs=1e-14)
    assert len(path.tables(nodes[:3])) == 6
    with pytest.raises(ValueError):
        geodesic_path(f, 1)


def test_bm_distance_bounded_by_oscillation(rng):
    amp = invariant_perturbation(rng, osc=0.1)
    rep = bm_distance_near_zoll(amp)
    assert rep.status == "ok" and rep.consistent
    assert rep.distance == pytest.approx(log_oscillation(amp), abs=1e-8)


def test_corollary_rigidity():
    rep = systolic_corollary_check(constant_amplitude(1))
    assert rep.equality and rep.constant and rep.rigid
    rep = systolic_corollary_check(ellipsoid_amplitude(1.0, 1.2))
    assert rep.ratio == pytest.approx(1 / 1.2, rel=1e-8) and rep.bounded and not rep.equality


def test_invariant_perturbation_is_invariant(rng):
    amp = invariant_perturbation(rng, osc=0.05)
    assert amp.invariance_flag and amp.osc() <= 0.05
