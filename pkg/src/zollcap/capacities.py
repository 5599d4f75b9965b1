"""Exact capacity combinatorics for ellipsoids and polydisks.

Values are rationals times a power of pi (:class:`PiRational`); comparing
quantities carrying different powers of pi is refused instead of rounded.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering

from .domains import Ellipsoid, Polydisk, volume


class MixedUnitError(TypeError):
    pass


@total_ordering
@dataclass(frozen=True)
class PiRational:
    coeff: Fraction
    pi_power: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coeff", Fraction(self.coeff))

    def _same_unit(self, other):
        other = as_exact(other)
        if other.coeff != 0 and self.coeff != 0 and other.pi_power != self.pi_power:
            raise MixedUnitError(f"cannot compare pi^{self.pi_power} with pi^{other.pi_power}")
        return other

    def __add__(self, other):
        other = self._same_unit(other)
        power = self.pi_power if self.coeff != 0 else other.pi_power
        return PiRational(self.coeff + other.coeff, power)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-as_exact(other))

    def __rsub__(self, other):
        return as_exact(other) - self

    def __neg__(self):
        return PiRational(-self.coeff, self.pi_power)

    def __mul__(self, other):
        other = as_exact(other)
        return PiRational(self.coeff * other.coeff, self.pi_power + other.pi_power)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_exact(other)
        return PiRational(self.coeff / other.coeff, self.pi_power - other.pi_power)

    def __pow__(self, n: int):
        return PiRational(self.coeff ** n, self.pi_power * n)

    def __eq__(self, other):
        try:
            other = as_exact(other)
        except TypeError:
            return NotImplemented
        if self.coeff == 0 and other.coeff == 0:
            return True
        return self.coeff == other.coeff and self.pi_power == other.pi_power

    def __hash__(self):
        return hash((self.coeff, self.pi_power if self.coeff else 0))

    def __lt__(self, other):
        other = self._same_unit(other)
        return self.coeff < other.coeff

    def __float__(self):
        return float(self.coeff) * math.pi ** self.pi_power

    def __repr__(self):
        if self.pi_power == 0:
            return f"{self.coeff}"
        return f"{self.coeff}*pi^{self.pi_power}"


PI = PiRational(Fraction(1), 1)


def as_exact(x) -> PiRational:
    if isinstance(x, PiRational):
        return x
    if isinstance(x, (int, Fraction)):
        return PiRational(Fraction(x), 0)
    if isinstance(x, float):
        return PiRational(Fraction(x), 0)
    raise TypeError(f"not an exact quantity: {x!r}")


def is_exact(x):
    return isinstance(x, (int, Fraction, PiRational))


@dataclass
class CapacityTable:
    kind: str
    domain_descriptor: str
    values: list
    k_start: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("EHGH", "ECH", "lower_k", "upper_k"):
            raise ValueError(f"unknown capacity kind {self.kind}")
        for prev, nxt in zip(self.values, self.values[1:]):
            if nxt < prev:
                raise ValueError("capacity values must be non-decreasing in k")

    def __getitem__(self, k):
        return self.values[k - self.k_start]

    def rows(self):
        for i, v in enumerate(self.values):
            if isinstance(v, PiRational):
                yield self.k_start + i, v.coeff.numerator, v.coeff.denominator, v.pi_power
            else:
                f = Fraction(v)
                yield self.k_start + i, f.numerator, f.denominator, 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "value_numerator", "value_denominator", "pi_power"])
        w.writerows(self.rows())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, kind, domain_descriptor):
        rows = list(csv.DictReader(io.StringIO(text)))
        values = [PiRational(Fraction(int(r["value_numerator"]), int(r["value_denominator"])),
                             int(r["pi_power"])) for r in rows]
        k_start = int(rows[0]["k"]) if rows else 1
        return cls(kind, domain_descriptor, values, k_start)


def _kth_smallest(generators, k, count_below, enumerate_below, unit):
    """k-th smallest element, growing the search threshold geometrically."""
    target = unit
    while count_below(target) < k:
        target = target * 2
    values = sorted(enumerate_below(target))
    return values[k - 1]


def ehgh_capacity(E: Ellipsoid, k: int):
    """k-th smallest element of the multiset {h * a_j : h >= 1}."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    a = list(E.a)
    exact = all(is_exact(x) for x in a)
    if exact:
        a = [as_exact(x) for x in a]
    amin = min(a)

    def count(T):
        return sum(int(math.floor(_ratio(T, x))) for x in a)

    def below(T):
        out = []
        for x in a:
            for h in range(1, int(math.floor(_ratio(T, x))) + 1):
                out.append(h * x)
        return out

    return _kth_smallest(a, k, count, below, amin)


def _ratio(T, x):
    if isinstance(T, PiRational):
        r = T / x
        if r.pi_power != 0:
            raise MixedUnitError("ellipsoid parameters carry different units")
        return r.coeff
    return T / x


def polydisk_ehgh(P: Polydisk, k: int):
    if k < 1:
        raise ValueError("k must be a positive integer")
    a, b = P.a, P.b
    if is_exact(a) and is_exact(b):
        return k * min(as_exact(a), as_exact(b))
    return k * min(a, b)


def ech_capacities_ellipsoid(a, b, k_max: int) -> CapacityTable:
    """c_k^ECH(E(a, b)) for k = 0..k_max: the (k+1)-th smallest of {h a + j b}."""
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    exact = is_exact(a) and is_exact(b)
    if exact:
        a, b = as_exact(a), as_exact(b)
    lo, hi = (a, b) if a <= b else (b, a)

    def count(T):
        n = 0
        h = 0
        while h * lo <= T:
            n += int(math.floor(_ratio(T - h * lo, hi))) + 1
            h += 1
        return n

    def below(T):
        out = []
        h = 0
        while h * lo <= T:
            rest = T - h * lo
            for j in range(int(math.floor(_ratio(rest, hi))) + 1):
                out.append(h * lo + j * hi)
            h += 1
        return out

    target = lo
    while count(target) < k_max + 1:
        target = target * 2
    values = sorted(below(target))[: k_max + 1]
    return CapacityTable("ECH", f"E({a},{b})", values, k_start=0)


def ech_capacities_polydisk(a, b, k_max: int) -> CapacityTable:
    """ECH capacities of P(a, b): min{a m + b n : (m+1)(n+1) >= k+1}."""
    exact = is_exact(a) and is_exact(b)
    if exact:
        a, b = as_exact(a), as_exact(b)
    values = []
    for k in range(k_max + 1):
        best = None
        for m in range(k + 1):
            n = max(0, -(-(k + 1) // (m + 1)) - 1)
            v = m * a + n * b
            if best is None or v < best:
                best = v
        values.append(best)
    return CapacityTable("ECH", f"P({a},{b})", values, k_start=0)


def ehgh_table(E: Ellipsoid, k_max: int) -> CapacityTable:
    return CapacityTable("EHGH", f"E{tuple(E.a)}", [ehgh_capacity(E, k) for k in range(1, k_max + 1)])


def polydisk_k_bounds(k: int):
    """(lower, upper) k-normalized capacities of P(1,1): (c_k(E(1,2)), k)."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    return ehgh_capacity(Ellipsoid((1, 2)), k), as_exact(k)


@dataclass(frozen=True)
class ViterboReport:
    lhs: object
    rhs: object
    holds: bool
    equality_gap: object


def viterbo_check(domain, c_value) -> ViterboReport:
    """Compare c^n with n! vol, exactly when both sides are exact."""
    if float(c_value) < 0:
        raise ValueError("capacity value must be non-negative")
    n = domain.dimension_n
    vol = volume(domain)
    if is_exact(c_value) and is_exact(vol):
        lhs = as_exact(c_value) ** n
        rhs = math.factorial(n) * as_exact(vol)
    else:
        lhs = float(c_value) ** n
        rhs = math.factorial(n) * float(vol)
    gap = rhs - lhs
    return ViterboReport(lhs, rhs, bool(lhs <= rhs), gap)


@dataclass(frozen=True)
class ScanReport:
    argmax_ratio: float
    profile: list


def c2_maximizer_scan(volume_level: float, grid) -> ScanReport:
    """Second EHGH capacity of E(a, r a) rescaled to the given volume, over ratios r."""
    grid = list(grid)
    if not grid:
        raise ValueError("empty ratio grid")
    profile = []
    for r in grid:
        a = math.sqrt(2 * volume_level / r)
        profile.append((r, float(ehgh_capacity(Ellipsoid((a, r * a)), 2))))
    best = max(profile, key=lambda p: p[1])
    return ScanReport(best[0], profile)
