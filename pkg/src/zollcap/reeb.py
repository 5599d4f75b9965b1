"""Reeb flows of g * alpha_0 on S^3, closed-orbit search, systole and systolic ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .domains import ContactAmplitude, complex_unit
from .numerics import (FlowMap, IntegratorConfig, find_closed_orbit, hopf_point, normalize,
                       quadrature, s3_rule)


class NotStarShapedError(ValueError):
    pass


def _defining_gradient(amp: ContactAmplitude, y):
    """Gradient of F(y) = |y|^2 / g(y/|y|) at arbitrary y != 0."""
    r = np.linalg.norm(y, axis=-1, keepdims=True)
    x = y / r
    g = amp(x)[..., None]
    dg = amp.grad(x)
    grad = 2 * y / g - r * dg / g ** 2
    if not np.all(np.isfinite(grad)) or np.any(np.sum(grad * y, axis=-1) <= 0):
        raise NotStarShapedError("defining function has no outward radial derivative at some node")
    return grad


def boundary_reeb_field(amp: ContactAmplitude):
    """Characteristic field J grad F on the boundary of A_f, with F 2-homogeneous."""

    def field(t, y):
        return complex_unit(_defining_gradient(amp, y))

    return field


def defining_function(amp, y):
    y = np.asarray(y, dtype=float)
    return np.sum(y * y, axis=-1) / amp(y)


def reeb_field(amp: ContactAmplitude):
    """Reeb field of g * alpha_0 on S^3 as field(t, x), x unit 4-vectors.

    The characteristic field on the boundary {F = 1} is pushed to the sphere
    by the radial projection y -> y/|y|.
    """

    def field(t, x):
        f = np.sqrt(amp(x))[..., None]
        y = f * x
        R = complex_unit(_defining_gradient(amp, y))
        return (R - np.sum(R * x, axis=-1, keepdims=True) * x) / f

    return field


def alpha0(x, v):
    """alpha_0 = 1/2 sum(x dy - y dx) evaluated on (point, vector)."""
    return 0.5 * np.sum(complex_unit(x) * v, axis=-1)


def ellipsoid_flow(a, b):
    """Closed-form Reeb flow of the ellipsoid form: (e^{2 pi i t/a} z1, e^{2 pi i t/b} z2)."""
    af, bf = float(a), float(b)

    def flow(t, x):
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        for k, p in ((0, af), (2, bf)):
            c, s = np.cos(2 * math.pi * t / p), np.sin(2 * math.pi * t / p)
            out[..., k] = c * x[..., k] - s * x[..., k + 1]
            out[..., k + 1] = s * x[..., k] + c * x[..., k + 1]
        return out

    return flow


def reeb_flow(amp: ContactAmplitude, cfg: IntegratorConfig | None = None) -> FlowMap:
    return FlowMap(reeb_field(amp), cfg or IntegratorConfig(), project=normalize)


@dataclass(frozen=True)
class ClosedReebOrbit:
    basepoint: np.ndarray
    period: float
    residual: float
    fiber_flag: bool

    def record(self):
        return {"basepoint": [float(c) for c in self.basepoint], "period": self.period,
                "residual": self.residual, "fiber": self.fiber_flag}


@dataclass
class SystolicReport:
    systole: float | None
    contact_volume: float
    ratio: float | None
    orbit_certificates: list = field(default_factory=list)
    status: str = "ok"
    invariant_check: float | None = None

    def record(self):
        return {"status": self.status, "systole": self.systole, "contact_volume": self.contact_volume,
                "ratio": self.ratio, "invariant_check": self.invariant_check,
                "orbits": [o.record() for o in self.orbit_certificates]}


@dataclass(frozen=True)
class SearchConfig:
    period_ceiling: float = 4 * math.pi
    n_u: int = 5
    n_phi: int = 4
    tol: float = 1e-9
    integrator: IntegratorConfig = IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)


def _is_fiber(flow, x, period, n=16, tol=1e-6):
    _, pts = flow.sample(period, x, n)
    # an alpha_0 fiber stays in the complex line through x
    z1 = pts[:, 0] + 1j * pts[:, 1]
    z2 = pts[:, 2] + 1j * pts[:, 3]
    w1 = x[0] + 1j * x[1]
    w2 = x[2] + 1j * x[3]
    return bool(np.max(np.abs(z1 * w2 - z2 * w1)) < tol)


def certify_orbit(amp, x, period_guess, search: SearchConfig | None = None):
    search = search or SearchConfig()
    flow = reeb_flow(amp, search.integrator)
    orb = find_closed_orbit(flow, normalize(np.asarray(x, float)), period_guess, search.tol)
    if orb is None:
        return None
    return ClosedReebOrbit(orb.point, orb.period, orb.residual, _is_fiber(flow, orb.point, orb.period))


def amplitude_extremum(amp: ContactAmplitude, sign=1.0, n=12):
    """Minimizer (sign=1) or maximizer (sign=-1) of g on S^3, grid start plus quasi-Newton polish."""
    u = (np.arange(n) + 0.5) / n
    phi = 2 * math.pi * np.arange(n) / n
    th = 2 * math.pi * np.arange(4) / 4
    grid = hopf_point(*np.meshgrid(u, th, phi, indexing="ij")).reshape(-1, 4)
    grid = np.concatenate([grid, np.eye(4)])
    vals = sign * amp(grid)
    x0 = grid[int(np.argmin(vals))]

    def obj(y):
        r = np.linalg.norm(y)
        return sign * float(amp(y / r)), sign * amp.grad(y / r) / r

    res = minimize(obj, x0, jac=True, method="BFGS", options={"gtol": 1e-13})
    x = normalize(res.x)
    return x, float(amp(x))


def contact_volume(amp: ContactAmplitude, rule=None) -> float:
    """Integral of g^2 against alpha_0 ^ d alpha_0."""
    rule = rule or s3_rule(32, 32, 32)
    return quadrature(lambda x: amp(x) ** 2, rule)


def systole(amp: ContactAmplitude, search: SearchConfig | None = None) -> SystolicReport:
    """Smallest certified closed-orbit period below the search ceiling.

    Invariant amplitudes: the fiber through the minimum of g is certified by
    integration and compared with pi * min g. Otherwise a seed grid of Hopf
    tori is searched with period guesses pi * g(seed).
    """
    search = search or SearchConfig()
    vol = contact_volume(amp)
    certs = []
    check = None
    if amp.invariance_flag:
        x, gmin = amplitude_extremum(amp, 1.0)
        if math.pi * gmin <= search.period_ceiling:
            orb = certify_orbit(amp, x, math.pi * gmin, search)
            if orb is not None:
                certs.append(orb)
                check = abs(orb.period - math.pi * gmin)
    else:
        u = (np.arange(search.n_u) + 0.5) / search.n_u
        u = np.concatenate([[0.0, 1.0], u])
        phi = 2 * math.pi * np.arange(search.n_phi) / search.n_phi
        seen = []
        for uu in u:
            for ph in (phi if 0 < uu < 1 else [0.0]):
                x = hopf_point(uu, 0.0, ph)
                guess = math.pi * float(amp(x))
                if guess > search.period_ceiling:
                    continue
                orb = certify_orbit(amp, x, guess, search)
                if orb is not None and orb.period <= search.period_ceiling:
                    if not any(abs(orb.period - p) < 1e-7 for p in seen):
                        seen.append(orb.period)
                    certs.append(orb)
    if not certs:
        return SystolicReport(None, vol, None, [], "inconclusive", check)
    s = min(o.period for o in certs)
    return SystolicReport(s, vol, s ** 2 / vol, certs, "ok", check)


def systolic_ratio(amp: ContactAmplitude, search: SearchConfig | None = None) -> SystolicReport:
    return systole(amp, search)
