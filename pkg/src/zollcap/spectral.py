"""Fiber averaging, short orbits on critical fibers, c0/c1 and Banach-Mazur distances near alpha_0."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .capacities import PiRational, is_exact, as_exact
from .domains import ContactAmplitude, amplitude_table, constant_amplitude
from .numerics import first_return_time, hopf_map, hopf_point, normalize, s3_rule
from .reeb import SearchConfig, amplitude_extremum, reeb_flow, systole

FIBER_PERIOD = math.pi
NEAR_ZOLL = 0.2


class UnsupportedInputError(ValueError):
    pass


class OutsideRegimeError(ValueError):
    pass


# ----------------------------------------------------------------- averaging

@dataclass(frozen=True)
class AveragedField:
    """Fiber means on the base of a Hopf product rule; ``values`` has shape (n_u, n_phi)."""

    values: np.ndarray
    rule: object
    source: str = ""
    fiber_period: float = FIBER_PERIOD

    def lifted(self):
        """Values on every node of the rule, constant along fibers."""
        return np.repeat(self.values[..., None], self.rule.shape[-1], axis=-1).reshape(-1)

    def base_points(self):
        """Points of S^2 (Hopf image of the first node of each fiber)."""
        nodes = self.rule.nodes.reshape(self.rule.shape + (4,))
        return hopf_map(nodes[..., 0, :])


def fiber_average(fn, rule=None, source="") -> AveragedField:
    """Mean over the alpha_0 Reeb fiber on a Hopf product rule.

    ``fn`` is a callable on unit 4-vectors or an array of node values. The
    fiber angle is equispaced, so harmonics below the fiber resolution average
    to zero exactly.
    """
    rule = rule or s3_rule(16, 16, 16)
    if len(rule.shape) != 3:
        raise ValueError("fiber averaging needs a Hopf product rule")
    vals = fn(rule.nodes) if callable(fn) else np.asarray(fn, dtype=float)
    vals = np.reshape(vals, rule.shape)
    return AveragedField(vals.mean(axis=-1), rule, source or getattr(fn, "__name__", ""))


# ------------------------------------------------------------ short orbits

@dataclass(frozen=True)
class ShortOrbitCertificate:
    basepoint: np.ndarray
    predicted_period: float
    integrated_period: float
    closure_residual: float
    kind: str = "isolated"

    def record(self):
        return {"basepoint": [float(c) for c in self.basepoint], "predicted_period": self.predicted_period,
                "integrated_period": self.integrated_period, "closure_residual": self.closure_residual,
                "kind": self.kind}


def _seed_grid(n=12):
    u = np.concatenate([[0.0, 1.0], (np.arange(n) + 0.5) / n])
    phi = 2 * np.pi * np.arange(n) / n
    pts = [hopf_point(uu, 0.0, p) for uu in u for p in (phi if 0 < uu < 1 else [0.0])]
    return np.array(pts)


def critical_fibers(amp: ContactAmplitude, n=12, tol=1e-10):
    """Basepoints of fibers where the tangential gradient of g vanishes, one per base point.

    Returns (points, is_manifold): a critical set with more than 2 n distinct
    base points (for instance g constant) is reported as a manifold.
    """
    found, base = [], []
    for x0 in _seed_grid(n):
        res = least_squares(lambda y: amp.grad(normalize(y)), x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        x = normalize(res.x)
        if np.linalg.norm(amp.grad(x)) > tol:
            continue
        b = hopf_map(x)
        if all(np.linalg.norm(b - c) > 1e-6 for c in base):
            base.append(b)
            found.append(x)
    return np.array(found), len(found) > 2 * n


def short_orbits_from_average(amp: ContactAmplitude, search: SearchConfig | None = None,
                              samples=4) -> list:
    """Certify the closed Reeb orbits on the critical fibers of an invariant amplitude.

    Each critical fiber should close after pi * g; the orbit is integrated and
    the period refined independently. For a critical manifold only ``samples``
    of its fibers are certified.
    """
    if not amp.invariance_flag:
        raise UnsupportedInputError("amplitude is not invariant under the fiber action")
    search = search or SearchConfig()
    pts, manifold = critical_fibers(amp)
    if manifold:
        pts = pts[:: max(1, len(pts) // samples)][:samples]
    flow = reeb_flow(amp, search.integrator)
    certs = []
    for x in pts:
        predicted = math.pi * float(amp(x))
        # period measured from the section crossing, not from the prediction
        T = first_return_time(flow, x, predicted / 2, 2 * predicted)
        if T is None:
            continue
        residual = float(np.linalg.norm(flow(T, x) - x))
        if residual >= search.tol:
            continue
        certs.append(ShortOrbitCertificate(x, predicted, T, residual, "manifold" if manifold else "isolated"))
    return certs


# --------------------------------------------------------------- c0 and c1

def _closed_extrema(amp):
    """(min c, max c) of pi * g from a closed form: exact for exact parameters, else floats."""
    cf = amp.closed_form
    if cf is None:
        return None
    if cf[0] == "constant":
        vals = (cf[1], cf[1])
    elif cf[0] == "ellipsoid":
        # pi g = 1/(|z1|^2/a + |z2|^2/b) ranges over [min(a, b), max(a, b)]
        vals = (min(cf[1], cf[2]), max(cf[1], cf[2]))
    else:
        return None
    if all(is_exact(v) for v in vals):
        if cf[0] == "constant":
            return tuple(PiRational(1, 1) * as_exact(v) for v in vals)
        return tuple(as_exact(v) for v in vals)
    if cf[0] == "constant":
        return tuple(math.pi * float(v) for v in vals)
    return tuple(float(v) for v in vals)


def log_oscillation(amp, rule=None):
    ex = _closed_extrema(amp)
    if ex is not None:
        return math.log(float(ex[1]) / float(ex[0]))
    _, lo = amplitude_extremum(amp, 1.0)
    _, hi = amplitude_extremum(amp, -1.0)
    return math.log(hi / lo)


def spectral_c0_c1(amp: ContactAmplitude, regime=NEAR_ZOLL):
    """(pi min g, pi max g) for invariant amplitudes with log(max g / min g) <= regime.

    Exact (:class:`PiRational`) for closed-form ellipsoid and constant amplitudes.
    """
    if not amp.invariance_flag:
        raise UnsupportedInputError("c0/c1 closed forms need an invariant amplitude")
    if log_oscillation(amp) > regime:
        raise OutsideRegimeError(f"log oscillation exceeds the near-Zoll regime {regime}")
    ex = _closed_extrema(amp)
    if ex is not None:
        return ex
    _, lo = amplitude_extremum(amp, 1.0)
    _, hi = amplitude_extremum(amp, -1.0)
    return math.pi * lo, math.pi * hi


# ------------------------------------------------------------ Banach-Mazur

@dataclass
class GeodesicPath:
    """gamma(t) = e^{t f} g0 sampled at ``times``."""

    times: np.ndarray
    f: object
    base: object

    def field(self, i):
        t = self.times[i]
        return lambda x: np.exp(t * self.f(x)) * self.base(x)

    def segment_oscillations(self, nodes):
        fv = self.f(nodes)
        out = []
        for a, b in zip(self.times[:-1], self.times[1:]):
            seg = b * fv - a * fv
            out.append(float(seg.max() - seg.min()))
        return out

    def length(self, nodes):
        return math.fsum(self.segment_oscillations(nodes))

    def tables(self, nodes):
        return [amplitude_table(self.field(i), nodes) for i in range(len(self.times))]


def geodesic_path(f, steps: int, base=None, times=None) -> GeodesicPath:
    """Conformal path e^{t f} g0 from g0 to e^f g0 on ``steps`` equal segments (or given times)."""
    if times is None:
        if steps < 2:
            raise ValueError("steps must be >= 2")
        times = np.linspace(0.0, 1.0, steps + 1)
    base = base or (lambda x: np.ones(np.shape(x)[:-1]))
    return GeodesicPath(np.asarray(times, float), f, base)


@dataclass
class BMReport:
    T_min: float | None
    T_max: float | None
    distance: float | None
    oscillation_bound: float
    status: str = "ok"
    certificates: list = field(default_factory=list)
    geodesic: GeodesicPath | None = None

    @property
    def consistent(self):
        return self.distance is not None and self.distance <= self.oscillation_bound + 1e-9

    def record(self):
        return {"status": self.status, "T_min": self.T_min, "T_max": self.T_max, "distance": self.distance,
                "oscillation_bound": self.oscillation_bound,
                "certificates": [c.record() for c in self.certificates]}


def bm_distance_near_zoll(amp: ContactAmplitude, steps=4, regime=NEAR_ZOLL,
                          search: SearchConfig | None = None) -> BMReport:
    """d(alpha_0, g alpha_0) = log(T_max / T_min) over certified short orbits.

    Invariant amplitudes use the critical fibers; otherwise the Reeb orbit
    search supplies periods and orbits longer than pi max g are not short.
    """
    bound = log_oscillation(amp)
    if bound > regime:
        raise OutsideRegimeError(f"log oscillation {bound:.3g} exceeds the near-Zoll regime {regime}")
    if amp.invariance_flag:
        certs = short_orbits_from_average(amp, search)
        periods = [c.integrated_period for c in certs]
    else:
        rep = systole(amp, search)
        certs = []
        ceiling = math.pi * amp.node_max * (1 + 1e-6)
        periods = [o.period for o in rep.orbit_certificates if o.period <= ceiling]
    path = geodesic_path(lambda x: np.log(amp(x)), steps)
    if not periods:
        return BMReport(None, None, None, bound, "inconclusive", certs, path)
    lo, hi = min(periods), max(periods)
    return BMReport(lo, hi, math.log(hi / lo), bound, "ok", certs, path)


# ------------------------------------------------------------ systolic ratio

@dataclass(frozen=True)
class CorollaryReport:
    ratio: float | None
    bounded: bool
    equality: bool
    constant: bool
    status: str

    @property
    def rigid(self):
        return not self.equality or self.constant


def systolic_corollary_check(amp: ContactAmplitude, tol=1e-9, search: SearchConfig | None = None):
    """rho_sys <= 1 near alpha_0, with equality only for constant g."""
    rep = systole(amp, search)
    if rep.status != "ok":
        return CorollaryReport(None, False, False, False, rep.status)
    ratio = rep.ratio
    # the systole is measured in units of pi: rho = sys^2 / vol with vol(alpha_0) = pi^2
    equality = abs(ratio - 1) <= tol
    return CorollaryReport(ratio, ratio <= 1 + tol, equality, amp.osc() <= tol, "ok")


def invariant_perturbation(rng, osc=0.1, n_modes=3) -> ContactAmplitude:
    """Random fiber-invariant g = 1 + combination of base harmonics, with osc(g) <= osc."""
    coeffs = rng.normal(size=(n_modes, 3))

    def raw(x):
        z1 = x[..., 0] + 1j * x[..., 1]
        z2 = x[..., 2] + 1j * x[..., 3]
        b = [np.abs(z1) ** 2 - np.abs(z2) ** 2, np.real(np.conj(z1) * z2), np.imag(np.conj(z1) * z2)]
        out = 0.0
        for k in range(n_modes):
            lin = sum(coeffs[k, j] * b[j] for j in range(3))
            out = out + lin ** (k + 1) / (k + 1)
        return out

    rule = s3_rule(12, 12, 4)
    v = raw(rule.nodes)
    # 0.9 leaves room for values between nodes
    scale = 0.9 * osc / max(np.ptp(v), 1e-300)
    return ContactAmplitude(lambda x: 1 + scale * raw(x), name="invariant perturbation")


__all__ = ["AveragedField", "fiber_average", "ShortOrbitCertificate", "critical_fibers",
           "short_orbits_from_average", "spectral_c0_c1", "log_oscillation", "GeodesicPath", "geodesic_path",
           "BMReport", "bm_distance_near_zoll", "CorollaryReport", "systolic_corollary_check",
           "invariant_perturbation", "UnsupportedInputError", "OutsideRegimeError", "constant_amplitude"]
