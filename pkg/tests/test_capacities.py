import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from zollcap.capacities import (PI, CapacityTable, MixedUnitError, PiRational, as_exact, c2_maximizer_scan,
                                ech_capacities_ellipsoid, ech_capacities_polydisk, ehgh_capacity, ehgh_table,
                                polydisk_ehgh, polydisk_k_bounds, viterbo_check)
from zollcap.domains import Ellipsoid, Polydisk

fractions = st.fractions(min_value=Fraction(1, 10), max_value=10, max_denominator=50)


def brute_ehgh(a, k):
    """k-th smallest of {h a_j : h >= 1} by listing k multiples of every a_j."""
    return sorted(h * x for x in a for h in range(1, k + 1))[k - 1]


def brute_ech(a, b, k):
    """(k+1)-th smallest of {h a + j b} by a full double loop."""
    n = k + 2
    return sorted(h * a + j * b for h in range(n) for j in range(n))[k]


def test_ehgh_e12_table():
    assert [ehgh_table(Ellipsoid((1, 2)), 6)[k] for k in range(1, 7)] == [1, 2, 2, 3, 4, 4]


@given(fractions, fractions, st.integers(1, 30))
def test_ehgh_matches_enumeration(a, b, k):
    assert ehgh_capacity(Ellipsoid((a, b)), k) == brute_ehgh((a, b), k)


@given(fractions, fractions, st.integers(0, 40))
def test_ech_matches_enumeration(a, b, k):
    assert ech_capacities_ellipsoid(a, b, k)[k] == brute_ech(a, b, k)


@given(fractions, fractions, fractions, st.integers(1, 12))
def test_ehgh_conformal(a, b, t, k):
    assert ehgh_capacity(Ellipsoid((t * a, t * b)), k) == t * ehgh_capacity(Ellipsoid((a, b)), k)


@given(fractions, fractions, st.integers(1, 20))
def test_ehgh_monotone_in_k_and_domain(a, b, k):
    E = Ellipsoid((a, b))
    assert ehgh_capacity(E, k) <= ehgh_capacity(E, k + 1)
    assert ehgh_capacity(E, k) <= ehgh_capacity(Ellipsoid((a + 1, b)), k)


def test_polydisk_ech_equals_e12():
    assert ech_capacities_polydisk(1, 1, 100).values == ech_capacities_ellipsoid(1, 2, 100).values


def test_polydisk_bounds_strict_from_three():
    assert [polydisk_k_bounds(k)[0] < polydisk_k_bounds(k)[1] for k in range(1, 6)] == [False, False, True,
                                                                                        True, True]
    assert polydisk_ehgh(Polydisk(1, 1), 3) == 3
    with pytest.raises(ValueError):
        polydisk_k_bounds(0)


def test_pi_units():
    E = Ellipsoid((PI, 2 * PI))
    assert ehgh_capacity(E, 3) == 2 * PI
    assert float(ehgh_capacity(E, 3)) == pytest.approx(2 * math.pi)
    with pytest.raises(MixedUnitError):
        PI < Fraction(1)
    assert PI * PI == PiRational(1, 2)
    assert PiRational(0, 3) == 0


def test_float_parameters_stay_float():
    v = ehgh_capacity(Ellipsoid((1.5, 2.25)), 2)
    assert isinstance(v, float) and v == 2.25


def test_csv_roundtrip():
    tab = ech_capacities_ellipsoid(PI, 2 * PI, 10)
    back = CapacityTable.from_csv(tab.to_csv(), "ECH", tab.domain_descriptor)
    assert back.values == tab.values and back.k_start == 0
    assert tab.to_csv().splitlines()[0] == "k,value_numerator,value_denominator,pi_power"


def test_table_rejects_decreasing_values():
    with pytest.raises(ValueError):
        CapacityTable("EHGH", "x", [2, 1])
    with pytest.raises(ValueError):
        CapacityTable("bogus", "x", [1])


def test_viterbo_exact():
    rep = viterbo_check(Ellipsoid((1, 2)), ehgh_capacity(Ellipsoid((1, 2)), 1))
    assert rep.holds and rep.lhs == 1 and rep.rhs == 2
    # ball: equality
    rep = viterbo_check(Ellipsoid((1, 1)), 1)
    assert rep.equality_gap == 0


def test_c2_scan_peaks_at_ratio_two():
    # c_2(E(a, r a)) = min(2 a, r a) at fixed volume peaks where 2 a = r a
    rep = c2_maximizer_scan(1.0, [1 + 0.05 * i for i in range(41)])
    assert rep.argmax_ratio == pytest.approx(2.0)


def test_as_exact_rejects_strings():
    with pytest.raises(TypeError):
        as_exact("1")
