import math

import numpy as np
import pytest
from scipy.integrate import quad

from zollcap.counterexamples import (ConfigurationError, CounterexampleConfig, RadialProfile,
                                     assemble_counterexample, calabi_rule, conjugation_gap, contact_counterexample,
                                     orbit_action, periodic_samples, rescale)
from zollcap.lift import calabi, fixed_point_action


def test_profile_slope_and_support():
    f = RadialProfile(0.27)
    h = 1e-6
    rho = np.array([0.05, 0.15, 0.24])
    assert np.allclose((f(rho + h) - f(rho - h)) / (2 * h), -math.pi / 2, atol=1e-8)
    # the profile is C^1 through the cap and vanishes from rho_supp on
    rho = np.linspace(0.251, 0.269, 7)
    assert np.allclose((f(rho + h) - f(rho - h)) / (2 * h), f.d1(rho), atol=1e-7)
    assert np.all(f(np.array([0.27, 0.3, 0.9])) == 0)


def test_profile_calabi_vs_adaptive_quadrature():
    f = RadialProfile(0.27)
    oracle = math.pi * quad(lambda r: float(f(np.array([r]))[0]), 0, 0.27, points=[0.25], epsabs=1e-14)[0]
    assert f.calabi() == pytest.approx(oracle, abs=1e-12)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        CounterexampleConfig(rho_supp=0.2)
    with pytest.raises(ConfigurationError):
        CounterexampleConfig(u_center=0.3, u_radius=0.25)
    with pytest.raises(ConfigurationError):
        CounterexampleConfig(calabi_margin=0)


def test_F_rotates_half_disk_and_displaces_U(counterexample_H):
    H = counterexample_H
    w = 0.4 * np.exp(1j * np.linspace(0, 6, 5))
    assert np.allclose(H.phi_F(w), -w, atol=1e-14)
    assert H.displacement.min_distance > 0 and H.displacement.flow_check < 1e-8


def test_closed_form_composition_matches_flow(counterexample_H):
    assert max(counterexample_H.composition) < 1e-6


def test_fixed_points_have_nonnegative_action(counterexample_H):
    census = counterexample_H.census
    assert census.subset_of_F and census.min_action >= -1e-9 and census.integrated_gap < 1e-8
    # the origin is fixed with action f(0) > 0
    assert float(fixed_point_action(counterexample_H, np.array(0j))) == pytest.approx(
        float(counterexample_H.F(0j)), abs=1e-9)


def test_calabi_is_negative_margin(counterexample_H):
    H = counterexample_H
    # Cal(F # G) = Cal F + Cal G and G was sized to give -(Cal F + 2 margin)
    cal = calabi(H, calabi_rule(H.support_radius))
    assert cal == pytest.approx(-2 * H.cfg.calabi_margin, abs=1e-6)


def test_rescaling_conjugates_time_one_maps(counterexample_H):
    lam = 0.2
    Hl = rescale(counterexample_H, lam)
    assert Hl.support_radius == pytest.approx(lam * counterexample_H.support_radius)
    w = lam * np.array([0.1 + 0.05j, -0.2 + 0.3j])
    assert conjugation_gap(counterexample_H, lam, w) < 1e-8
    assert rescale(counterexample_H, 1) is counterexample_H
    with pytest.raises(ValueError):
        rescale(counterexample_H, 1.5)


def test_periodic_actions_by_composition(counterexample_H):
    ps = periodic_samples(counterexample_H, 2, n_seeds=40)
    if len(ps.points):
        back = ps.points
        for _ in range(2):
            back = counterexample_H.time_one(back)
        assert np.max(np.abs(back - ps.points)) < 1e-9
        assert np.allclose(orbit_action(counterexample_H, ps.points, 2), ps.actions)


def test_report_rows(counterexample_report):
    rep = counterexample_report
    assert len(rep.rows) == 5 and rep.calabi < 0
    for r in rep.rows:
        assert r.systole == math.pi and r.strict and r.ratio > 1
        assert r.volume == pytest.approx(math.pi ** 2 / 2 + r.lam ** 4 * rep.calabi)
        assert r.conjugation_gap < 1e-8
    assert rep.to_csv().splitlines()[0] == "lambda,systole,volume,ratio,strict"


def test_lambda_out_of_range(counterexample_H):
    with pytest.raises(ConfigurationError, match="validated range"):
        assemble_counterexample(lambdas=[0.9], H=counterexample_H)


@pytest.mark.slow
def test_volume_quadrature_cross_check(counterexample_H, counterexample_report):
    lam = counterexample_report.lambda_max
    rep = assemble_counterexample(lambdas=[lam], H=counterexample_H, volume_check_at=lam)
    row = rep.rows[0]
    assert abs(row.volume_quadrature - row.volume) / (math.pi ** 2 / 2) < 1e-5


def test_contact_model(counterexample_H):
    zoll = contact_counterexample(0)
    assert zoll.ratio == 1
    # validated while lambda^2 c <= 1/2, about 0.163 here
    m = contact_counterexample(0.15, H=counterexample_H)
    assert m.volume == pytest.approx(m.volume_formula, abs=1e-9)
    assert m.systole == 1 and m.volume < 1 and m.ratio > 1
    with pytest.raises(ConfigurationError):
        contact_counterexample(0.5, H=counterexample_H)
