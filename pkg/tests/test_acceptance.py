"""Ten end-to-end acceptance criteria, one test each, at their stated tolerances.

Each test records a PASS/FAIL line; the lines are printed in the terminal
summary (see conftest.py).
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE
from helpers import complex_grid, radial_bump


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def test_criterion_01_capacity_tables():
    from zollcap.capacities import (ech_capacities_ellipsoid, ech_capacities_polydisk, ehgh_capacity,
                                    ehgh_table, polydisk_ehgh, polydisk_k_bounds)
    from zollcap.domains import Ellipsoid, Polydisk

    t0 = time.perf_counter()
    E = Ellipsoid((1, 2))
    table = [ehgh_table(E, 6)[k] for k in range(1, 7)]
    c3E = ehgh_capacity(E, 3)
    c3P = polydisk_ehgh(Polydisk(1, 1), 3)
    strict = [k for k in range(1, 101) if polydisk_k_bounds(k)[0] < polydisk_k_bounds(k)[1]]
    ech_E = ech_capacities_ellipsoid(1, 2, 100).values
    ech_P = ech_capacities_polydisk(1, 1, 100).values
    elapsed = time.perf_counter() - t0
    ok = (table == [1, 2, 2, 3, 4, 4] and c3E == 2 and c3P == 3 and strict == list(range(3, 101))
          and ech_E == ech_P and elapsed < 1.0)
    record(1, ok, f"c_k(E(1,2))={[str(v) for v in table]} c3(P(1,1))={c3P} ech tables equal={ech_E == ech_P} "
                  f"{elapsed:.2f}s")


def test_criterion_02_lifted_volume():
    from zollcap.lift import lifted_volume, random_bump_hamiltonian

    rng = np.random.default_rng(2024)
    worst, slowest = 0.0, 0.0
    for _ in range(20):
        H = random_bump_hamiltonian(rng)
        t0 = time.perf_counter()
        rep = lifted_volume(H)
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, rep.relative_gap)
    record(2, worst <= 1e-5 and slowest <= 10.0,
           f"max relative volume gap {worst:.2e} over 20 instances, slowest {slowest:.1f}s")


def test_criterion_03_radial_characteristic_action():
    from zollcap.lift import characteristic_from_periodic_point

    H = radial_bump(0.3, 0.5)
    cert = characteristic_from_periodic_point(H, 0j, 1)
    expected = math.pi + float(H(0.0, 0j))
    gap = abs(cert.action_integrated - expected)
    record(3, gap <= 1e-6, f"integrated action {cert.action_integrated:.12f} vs pi + f(0), gap {gap:.1e}")


def test_criterion_04_counterexample_family():
    from zollcap.counterexamples import (CounterexampleConfig, assemble_counterexample,
                                         build_counterexample_hamiltonian)

    t0 = time.perf_counter()
    cfg = CounterexampleConfig()
    H = build_counterexample_hamiltonian(cfg)
    rep = assemble_counterexample(cfg=cfg, H=H)
    elapsed = time.perf_counter() - t0
    census_ok = all(r.min_action >= -1e-4 and r.systole >= math.pi - 1e-4 for r in rep.rows)
    margin_ok = all(math.pi ** 2 / 2 - r.volume >= abs(r.calabi) * (1 - 1e-9) for r in rep.rows)
    strict_ok = all(r.strict for r in rep.rows)
    in_range = len(rep.rows) == 5 and all(0 < r.lam <= rep.lambda_max for r in rep.rows)
    ok = census_ok and margin_ok and strict_ok and in_range and elapsed <= 300
    record(4, ok, f"lambda_max={rep.lambda_max:.4f} strict={[r.strict for r in rep.rows]} "
                  f"min volume deficit={min(math.pi ** 2 / 2 - r.volume for r in rep.rows):.2e} {elapsed:.0f}s")


def test_criterion_05_generating_functions(flattened):
    from zollcap.genfun import FlowGeneratingFamily, generating_function_of, genfun_residual, hj_residual, rotation
    from zollcap.lift import bump_hamiltonian

    rot = rotation(0.1)
    S = generating_function_of(rot, basepoint=np.zeros(1))
    grid = complex_grid(25, 40)[:, None]
    assert len(np.unique(grid)) == 1000
    res = genfun_residual(S, rot, grid)

    H = bump_hamiltonian([0.2 + 0.1j], [0.5], [0.05], [0.3], 0.3)
    hj = hj_residual(FlowGeneratingFamily(H), H, [0.3, 0.7], complex_grid(6, 6, 0.6))

    _, flat = flattened
    ok = res <= 1e-9 and hj <= 1e-6 and flat.passed
    record(5, ok, f"rotation residual {res:.1e}, HJ residual {hj:.1e}, flatten checks {flat.checks}")


AB_GRID = [(math.pi * 1.02, math.pi * 0.98), (math.pi * 1.05, math.pi * 0.95)]


def test_criterion_06_short_orbits_and_systole():
    from zollcap.domains import ellipsoid_amplitude
    from zollcap.reeb import systole
    from zollcap.spectral import invariant_perturbation, short_orbits_from_average, systolic_corollary_check

    worst_period = worst_sys = 0.0
    for a, b in AB_GRID:
        amp = ellipsoid_amplitude(a, b)
        periods = sorted(c.integrated_period for c in short_orbits_from_average(amp))
        assert len(periods) == 2
        worst_period = max(worst_period, abs(periods[0] - min(a, b)), abs(periods[1] - max(a, b)))
        worst_sys = max(worst_sys, abs(systole(amp).systole - min(a, b)))
    rng = np.random.default_rng(6)
    ratios = []
    for _ in range(5):
        amp = invariant_perturbation(rng, osc=0.1)
        assert amp.osc() <= 0.1
        ratios.append(systolic_corollary_check(amp).ratio)
    ok = worst_period <= 1e-6 and worst_sys <= 1e-6 and all(r is not None and r <= 1 for r in ratios)
    record(6, ok, f"period error {worst_period:.1e}, systole error {worst_sys:.1e}, "
                  f"max rho_sys {max(ratios):.6f}")


def test_criterion_07_spectral_closed_forms():
    from zollcap.capacities import PI
    from zollcap.domains import constant_amplitude, ellipsoid_amplitude
    from zollcap.spectral import spectral_c0_c1

    vals = [Fraction(50 + j, 50) for j in range(10)]
    table = {(a, b): spectral_c0_c1(ellipsoid_amplitude(a, b)) for a in vals for b in vals}
    t = Fraction(3, 7)
    scaling = all(spectral_c0_c1(ellipsoid_amplitude(t * a, t * b)) == (t * c0, t * c1)
                  for (a, b), (c0, c1) in table.items())
    increasing = all(c0 <= c1 for c0, c1 in table.values())
    monotone = all(table[(a, b)][i] <= table[(a2, b2)][i]
                   for (a, b) in table for (a2, b2) in table if a <= a2 and b <= b2 for i in (0, 1))
    zoll = spectral_c0_c1(constant_amplitude(1)) == (PI, PI)
    ok = scaling and increasing and monotone and zoll
    record(7, ok, f"scaling={scaling} increasing={increasing} monotone={monotone} c0=c1=pi on alpha0={zoll}")


def test_criterion_08_banach_mazur():
    from zollcap.domains import default_rule, ellipsoid_amplitude
    from zollcap.spectral import bm_distance_near_zoll, geodesic_path

    worst = 0.0
    for a, b in AB_GRID:
        rep = bm_distance_near_zoll(ellipsoid_amplitude(a, b))
        worst = max(worst, abs(rep.distance - math.log(max(a, b) / min(a, b))))
    nodes = default_rule().nodes
    amp = ellipsoid_amplitude(*AB_GRID[1])
    f = lambda x: np.log(amp(x))
    total = float(np.ptp(f(nodes)))
    tele = max(abs(geodesic_path(f, n).length(nodes) - total) for n in (2, 4, 8, 16, 32))
    ok = worst <= 1e-9 and tele <= 1e-12
    record(8, ok, f"distance error {worst:.1e}, telescoping error {tele:.1e}")


def test_criterion_09_anosov_katok(ak_run):
    state, cert, elapsed = ak_run
    form = max(r.form_deviation for r in state.reports)
    budgets = all(r.amplitude_distance <= r.budget for r in state.reports)
    ok = state.stage == 3 and form < 1e-7 and budgets and cert.passed and elapsed <= 600
    record(9, ok, f"form deviation {form:.1e}, C0 distances "
                  f"{[f'{r.amplitude_distance:.2e}<={r.budget}' for r in state.reports]}, "
                  f"covered {int(cert.covered.sum())}/{len(cert.centers)} (max gap {cert.max_gap:.3f}), "
                  f"{elapsed:.0f}s")


def test_criterion_10_numerics_baseline():
    from zollcap.lift import bump_hamiltonian, disk_map
    from zollcap.numerics import fd_jacobian, quadrature, s3_rule, symplectic_defect

    H = bump_hamiltonian([0.1 + 0.2j, -0.3j], [0.5, 0.4], [0.2, -0.15], [0.0, 0.4], 0.3)

    def time_one(x):
        z = disk_map(H, x[..., 0] + 1j * x[..., 1], 0.0, 1.0)
        return np.stack([z.real, z.imag], axis=-1)

    worst = max(symplectic_defect(fd_jacobian(time_one, np.array(p))) for p in [(0.1, 0.1), (-0.2, 0.3), (0.0, -0.4)])
    measure = quadrature(lambda x: np.ones(len(x)), s3_rule(8, 8, 8))
    ok = worst <= 1e-6 and abs(measure - math.pi ** 2) <= 1e-8
    record(10, ok, f"symplectic defect {worst:.1e}, S3 measure error {abs(measure - math.pi ** 2):.1e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
