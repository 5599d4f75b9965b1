"""Ellipsoids, polydisks and star-shaped domains A_f, with volumes."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

import numpy as np

from .numerics import QuadratureRule, fd_gradient, normalize, quadrature, s3_rule, sphere_rule


@dataclass(frozen=True)
class Ellipsoid:
    a: tuple

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        if not self.a or any(float(x) <= 0 for x in self.a):
            raise ValueError("ellipsoid parameters must be positive")

    @property
    def dimension_n(self):
        return len(self.a)


@dataclass(frozen=True)
class Polydisk:
    a: object
    b: object

    def __post_init__(self):
        if float(self.a) <= 0 or float(self.b) <= 0:
            raise ValueError("polydisk parameters must be positive")

    dimension_n = 2


def to_complex(x):
    x = np.asarray(x)
    return x[..., 0::2] + 1j * x[..., 1::2]


def from_complex(z):
    z = np.asarray(z)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def complex_unit(x):
    """i * x for real 4-vectors (x1, y1, x2, y2)."""
    out = np.empty_like(x)
    out[..., 0::2] = -x[..., 1::2]
    out[..., 1::2] = x[..., 0::2]
    return out


_default_rule = None


def default_rule():
    global _default_rule
    if _default_rule is None:
        _default_rule = s3_rule(16, 16, 16)
    return _default_rule


class ContactAmplitude:
    """Positive conformal factor g on S^3, alpha = g * alpha_0.

    ``conformal`` and ``gradient`` receive real 4-vectors; the field is always
    evaluated on normalized points, so it behaves as a 0-homogeneous function.
    ``closed_form`` is an optional exact description used by capacity-type
    computations, e.g. ``("ellipsoid", a, b)`` or ``("constant", c)``.
    """

    def __init__(self, conformal, gradient=None, closed_form=None, name="", rule=None):
        self._g = conformal
        self._grad = gradient
        self.closed_form = closed_form
        self.name = name or (str(closed_form) if closed_form else "amplitude")
        rule = rule or default_rule()
        vals = self(rule.nodes).reshape(rule.shape)
        if not np.all(vals > 0):
            raise ValueError(f"{self.name}: conformal factor must be positive on all nodes")
        self.fiber_oscillation = float(np.max(np.ptp(vals, axis=-1)))
        self.invariance_flag = self.fiber_oscillation < 1e-10
        self.node_min = float(vals.min())
        self.node_max = float(vals.max())

    def __call__(self, x):
        return self._g(normalize(np.asarray(x, dtype=float)))

    def grad(self, x):
        """Tangential gradient on S^3."""
        x = normalize(np.asarray(x, dtype=float))
        if self._grad is not None:
            g = self._grad(x)
        else:
            g = fd_gradient(lambda y: self._g(normalize(y)), x)
        return g - np.sum(g * x, axis=-1, keepdims=True) * x

    def scaled(self, r):
        cf = self.closed_form
        if cf is not None and cf[0] == "ellipsoid":
            return ellipsoid_amplitude(r * cf[1], r * cf[2])
        if cf is not None and cf[0] == "constant":
            return constant_amplitude(r * cf[1])
        grad = None if self._grad is None else (lambda x: r * self._grad(x))
        return ContactAmplitude(lambda x: r * self._g(x), grad, None, f"{r}*{self.name}")

    def osc(self):
        return self.node_max - self.node_min


def constant_amplitude(c=1.0):
    cf = float(c)
    return ContactAmplitude(lambda x: np.full(x.shape[:-1], cf), lambda x: np.zeros_like(x),
                            ("constant", c), f"constant {c}")


def ellipsoid_amplitude(a, b) -> ContactAmplitude:
    """g(z) = (pi |z1|^2 / a + pi |z2|^2 / b)^{-1}, the conformal factor of the ellipsoid form."""
    af, bf = float(a), float(b)
    if af <= 0 or bf <= 0:
        raise ValueError("ellipsoid parameters must be positive")

    def q(x):
        return math.pi * ((x[..., 0] ** 2 + x[..., 1] ** 2) / af + (x[..., 2] ** 2 + x[..., 3] ** 2) / bf)

    def g(x):
        return 1.0 / q(x)

    def grad(x):
        # gradient of the 0-homogeneous extension |x|^2 / q(x) at |x| = 1
        qq = q(x)[..., None]
        dq = 2 * math.pi * x * np.array([1 / af, 1 / af, 1 / bf, 1 / bf])
        return 2 * x / qq - dq / qq ** 2

    return ContactAmplitude(g, grad, ("ellipsoid", a, b), f"ellipsoid({a},{b})")


class StarShapedDomain:
    """A_f = {r z : z in S^{2n-1}, 0 <= r < f(z)}."""

    def __init__(self, amplitude, dimension_n=2, rule: QuadratureRule | None = None, closed_form=None):
        self.amplitude = amplitude
        self.dimension_n = dimension_n
        self.rule = rule or (default_rule() if dimension_n == 2 else sphere_rule(dimension_n))
        self.closed_form = closed_form
        expected = 2 * dimension_n
        if self.rule.nodes.shape[-1] != expected:
            raise ValueError(f"quadrature rule lives in R^{self.rule.nodes.shape[-1]}, domain needs R^{expected}")
        if not np.min(self.amplitude(self.rule.nodes)) > 0:
            raise ValueError("amplitude must be positive on all quadrature nodes")

    @classmethod
    def from_contact(cls, amp: ContactAmplitude, rule=None):
        return cls(lambda x: np.sqrt(amp(x)), 2, rule, amp.closed_form)

    def scaled(self, r):
        return StarShapedDomain(lambda x: r * self.amplitude(x), self.dimension_n, self.rule)

    def volume(self):
        n = self.dimension_n
        return quadrature(lambda x: self.amplitude(x) ** (2 * n), self.rule) / math.factorial(n)


def volume(domain):
    """Symplectic (Euclidean) volume; exact for exact ellipsoid/polydisk parameters."""
    if isinstance(domain, Ellipsoid):
        prod = reduce(lambda p, q: p * q, domain.a)
        n = domain.dimension_n
        if isinstance(prod, float):
            return prod / math.factorial(n)
        return prod * Fraction(1, math.factorial(n))
    if isinstance(domain, Polydisk):
        return domain.a * domain.b
    if isinstance(domain, StarShapedDomain):
        return domain.volume()
    raise TypeError(f"unsupported domain {type(domain).__name__}")


def domain_record(domain) -> dict:
    if isinstance(domain, Ellipsoid):
        return {"kind": "ellipsoid", "a": [str(x) for x in domain.a]}
    if isinstance(domain, Polydisk):
        return {"kind": "polydisk", "a": str(domain.a), "b": str(domain.b)}
    if isinstance(domain, StarShapedDomain):
        return {"kind": "star-shaped", "n": domain.dimension_n,
                "closed_form": None if domain.closed_form is None else [str(c) for c in domain.closed_form]}
    raise TypeError(f"unsupported domain {type(domain).__name__}")


def amplitude_table(fn, nodes) -> str:
    """CSV sample table: coordinates then value, one row per node."""
    nodes = np.asarray(nodes)
    vals = fn(nodes)
    d = nodes.shape[-1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i}" for i in range(d)] + ["value"])
    for p, v in zip(nodes, vals):
        w.writerow([repr(float(c)) for c in p] + [repr(float(v))])
    return buf.getvalue()
