"""Lift of disk Hamiltonians to star-shaped domains in C^2.

Phi(s, t, w) = e^{2 pi i t} (sqrt(1 + s/pi - |w|^2), w) turns the graph of a
time-periodic Hamiltonian H into the boundary of a domain D(H); periodic
points of the time-one map become closed characteristics on that boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domains import ContactAmplitude, StarShapedDomain, amplitude_table, complex_unit
from .numerics import (IntegratorConfig, IntegratorError, Trajectory, flow_between, fd_gradient,
                       integrate_flow, quadrature, s3_rule, torus_disk_rule)


class PreconditionError(ValueError):
    pass


class TimePeriodicHamiltonian:
    """H(t, w) on T x disk, 1-periodic in t, vanishing for |w| >= support_radius.

    ``value(t, w)`` takes real t and complex w (broadcastable arrays).
    ``gradient`` returns dH/dx + i dH/dy; missing derivatives fall back to
    central differences.
    """

    def __init__(self, value, gradient=None, support_radius=0.9, time_derivative=None, name="H",
                 check=True):
        if not 0 < support_radius < 1:
            raise ValueError("support radius must lie in (0, 1)")
        self._value = value
        self._grad = gradient
        self._dt = time_derivative
        self.support_radius = float(support_radius)
        self.name = name
        if check:
            self.check_admissible()

    def __call__(self, t, w):
        return self._value(np.asarray(t, dtype=float), np.asarray(w, dtype=complex))

    def grad(self, t, w):
        t = np.asarray(t, dtype=float)
        w = np.asarray(w, dtype=complex)
        if self._grad is not None:
            return self._grad(t, w)
        h = 1e-6
        gx = (self._value(t, w + h) - self._value(t, w - h)) / (2 * h)
        gy = (self._value(t, w + 1j * h) - self._value(t, w - 1j * h)) / (2 * h)
        return gx + 1j * gy

    def dt(self, t, w):
        t = np.asarray(t, dtype=float)
        w = np.asarray(w, dtype=complex)
        if self._dt is not None:
            return self._dt(t, w)
        h = 1e-5
        return (self._value(t + h, w) - self._value(t - h, w)) / (2 * h)

    def field(self):
        """Real field (t, [x, y]) -> (H_y, -H_x), i.e. X_H = -i grad H."""

        def f(t, X):
            w = X[..., 0] + 1j * X[..., 1]
            g = -1j * self.grad(t, w)
            return np.stack([g.real, g.imag], axis=-1)

        return f

    def check_admissible(self, n_t=8, n_r=24, n_theta=24):
        t = np.arange(n_t) / n_t
        r = np.linspace(0, 1, n_r, endpoint=False)
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        T, R, TH = np.meshgrid(t, r, th, indexing="ij")
        W = R * np.exp(1j * TH)
        vals = self(T, W)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"{self.name}: non-finite values")
        if np.max(np.abs(self(T + 1, W) - vals)) > 1e-10:
            raise ValueError(f"{self.name}: not 1-periodic in time")
        outside = R >= self.support_radius
        if np.any(outside) and np.max(np.abs(vals[outside])) > 1e-12:
            raise ValueError(f"{self.name}: nonzero outside the declared support radius")
        if np.any(vals <= -math.pi * (1 - R ** 2)):
            raise ValueError(f"{self.name}: violates H > -pi (1 - |w|^2)")

    def transversality_margin(self, n_t=8, n_r=24, n_theta=24):
        """min of 2(pi + H) - <grad H, w>; positive means D(H) is star-shaped."""
        t = np.arange(n_t) / n_t
        r = np.linspace(0, self.support_radius, n_r)
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        T, R, TH = np.meshgrid(t, r, th, indexing="ij")
        W = R * np.exp(1j * TH)
        return float(np.min(2 * (math.pi + self(T, W)) - np.real(np.conj(self.grad(T, W)) * W)))


def zero_hamiltonian(support_radius=0.5):
    return TimePeriodicHamiltonian(lambda t, w: np.zeros(np.broadcast(t, w).shape),
                                   lambda t, w: np.zeros(np.broadcast(t, w).shape, dtype=complex),
                                   support_radius, lambda t, w: np.zeros(np.broadcast(t, w).shape), "zero")


# ------------------------------------------------------------------- Phi

def phi_map(s, t, w):
    """Phi(s, t, w) as complex pairs (z1, z2); requires s > pi (|w|^2 - 1)."""
    s, t, w = np.broadcast_arrays(np.asarray(s, float), np.asarray(t, float), np.asarray(w, complex))
    rad = 1 + s / math.pi - np.abs(w) ** 2
    if np.any(rad <= 0):
        raise PreconditionError("point outside the domain of Phi: need s > pi (|w|^2 - 1)")
    e = np.exp(2j * math.pi * t)
    return np.stack([e * np.sqrt(rad), e * w], axis=-1)


def phi_inverse(z):
    """(s, t, w) with t in [0, 1) from complex pairs; z1 must be nonzero."""
    z = np.asarray(z, dtype=complex)
    z1, z2 = z[..., 0], z[..., 1]
    if np.any(np.abs(z1) == 0):
        raise PreconditionError("Phi is not onto {z1 = 0}")
    arg = np.angle(z1)
    s = math.pi * (np.abs(z1) ** 2 + np.abs(z2) ** 2 - 1)
    return s, np.mod(arg / (2 * math.pi), 1.0), z2 * np.exp(-1j * arg)


def to_real(z):
    z = np.asarray(z)
    return np.stack([z[..., 0].real, z[..., 0].imag, z[..., 1].real, z[..., 1].imag], axis=-1)


def to_pair(x):
    x = np.asarray(x)
    return np.stack([x[..., 0] + 1j * x[..., 1], x[..., 2] + 1j * x[..., 3]], axis=-1)


# ------------------------------------------------------------- disk flows

def disk_flow(H: TimePeriodicHamiltonian, t, w, cfg: IntegratorConfig | None = None, t_eval=None) -> Trajectory:
    """phi_H^t(w) with accumulators of int lambda_hat_0(w') dt and int H dt.

    The returned trajectory stores states (x, y, a_lambda, a_H); the action
    of a periodic point is the sum of the last two entries.
    """
    base = H.field()

    def augmented(s, X):
        v = base(s, X[..., :2])
        w_ = X[..., 0] + 1j * X[..., 1]
        dl = 0.5 * (X[..., 0] * v[..., 1] - X[..., 1] * v[..., 0])
        return np.concatenate([v, dl[..., None], H(s, w_)[..., None]], axis=-1)

    w = np.asarray(w, dtype=complex)
    X0 = np.stack([w.real, w.imag, np.zeros(w.shape), np.zeros(w.shape)], axis=-1)
    if t_eval is None:
        t_eval = [float(t)]
    traj = integrate_flow(augmented, X0, float(t), cfg, t_eval=t_eval)
    pts = traj.points
    if np.any(pts[..., 0] ** 2 + pts[..., 1] ** 2 >= 1):
        raise IntegratorError("stiff/blow-up", "trajectory left the open unit disk")
    end = pts[-1]
    acts = {"lambda": end[..., 2], "H": end[..., 3]}
    return Trajectory(traj.times, pts, traj.t0, traj.direction, acts)


def flow_point(traj: Trajectory, i=-1):
    p = traj.points[i]
    return p[..., 0] + 1j * p[..., 1]


def fixed_point_action(H, w, k=1, cfg=None):
    tr = disk_flow(H, k, w, cfg)
    return tr.action_integrals["lambda"] + tr.action_integrals["H"]


def disk_map(H, w, t_start, t_stop, cfg=None):
    """Batched phi from per-point t_start to t_stop (either direction)."""
    w = np.asarray(w, dtype=complex)
    X = np.stack([w.real, w.imag], axis=-1)
    out = flow_between(H.field(), X, t_start, t_stop, cfg)
    return out[..., 0] + 1j * out[..., 1]


# ------------------------------------------------------------ Calabi / D(H)

def calabi(H: TimePeriodicHamiltonian, rule=None) -> float:
    """Integral of H over T x disk against dt ^ omega_hat."""
    rule = rule or torus_disk_rule(16, 32, 128, radius=H.support_radius, panels=4)
    t = rule.nodes[:, 0].real
    w = rule.nodes[:, 1]
    return quadrature(H(t, w), rule)


class LiftedDomain:
    """D(H) seen through its radial amplitude f on S^3."""

    def __init__(self, H: TimePeriodicHamiltonian):
        self.H = H
        t = np.linspace(0, 1, 9)
        r = np.linspace(0, H.support_radius, 25)
        th = np.linspace(0, 2 * np.pi, 25)
        T, R, TH = np.meshgrid(t, r, th, indexing="ij")
        self.h_max = float(np.max(H(T, R * np.exp(1j * TH))))
        margin = H.transversality_margin()
        if margin <= 0:
            raise PreconditionError(f"D(H) is not star-shaped: transversality margin {margin:.3g}")

    def amplitude(self, x):
        """Radius f(x) where the ray through the unit vector x meets the boundary."""
        x = np.asarray(x, dtype=float)
        z1 = x[..., 0] + 1j * x[..., 1]
        z2 = x[..., 2] + 1j * x[..., 3]
        a1 = np.abs(z1)
        safe = a1 > 1e-300
        unit = np.where(safe, z1 / np.where(safe, a1, 1.0), 1.0)
        t = np.mod(np.angle(unit) / (2 * math.pi), 1.0)
        w_hat = z2 * np.conj(unit)
        H = self.H

        def h(r):
            return math.pi * (r ** 2 - 1) - H(t, r * w_hat)

        lo = np.zeros(x.shape[:-1])
        hi = np.full(x.shape[:-1], math.sqrt(1 + (max(self.h_max, 0.0) + 1) / math.pi))
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            neg = h(mid) < 0
            lo = np.where(neg, mid, lo)
            hi = np.where(neg, hi, mid)
        r = 0.5 * (lo + hi)
        for _ in range(4):
            dh = 2 * math.pi * r - np.real(np.conj(H.grad(t, r * w_hat)) * w_hat)
            r = r - h(r) / dh
        return np.where(np.abs(w_hat) >= H.support_radius, 1.0, r)

    def contact_amplitude(self) -> ContactAmplitude:
        return ContactAmplitude(lambda x: self.amplitude(x) ** 2, name=f"D({self.H.name})")

    def star_shaped(self, rule=None) -> StarShapedDomain:
        R = self.H.support_radius
        rule = rule or s3_rule(24, 128, 12, panels=4, u_range=(1 - R ** 2, 1.0))
        return StarShapedDomain(self.amplitude, 2, rule)

    def contains(self, z):
        x = to_real(z)
        r = np.linalg.norm(x, axis=-1)
        return r < self.amplitude(x / r[..., None])

    def sample_table(self, nodes):
        return amplitude_table(self.amplitude, nodes)


@dataclass(frozen=True)
class LiftedVolume:
    formula_value: float
    quadrature_value: float
    calabi: float

    @property
    def relative_gap(self):
        return abs(self.formula_value - self.quadrature_value) / (math.pi ** 2 / 2)


def lifted_volume(H: TimePeriodicHamiltonian, calabi_rule=None, sphere_rule=None) -> LiftedVolume:
    """vol(D(H)) from the Calabi formula and from quadrature of f^4 over S^3 (n = 2)."""
    cal = calabi(H, calabi_rule)
    quad = LiftedDomain(H).star_shaped(sphere_rule).volume()
    return LiftedVolume(math.pi ** 2 / 2 + cal, quad, cal)


# ----------------------------------------------------- characteristics

@dataclass(frozen=True)
class CharacteristicCertificate:
    w: complex
    k: int
    basepoint: np.ndarray
    action_formula: float
    action_integrated: float
    disk_residual: float
    closure_residual: float

    @property
    def period(self):
        return self.action_integrated


def _divisors(k):
    return [d for d in range(1, k) if k % d == 0]


def lifted_hamiltonian(H):
    """K = H(t(z), w(z)) - s(z) on C^2 (real 4-vectors); its zero level is Phi(Gamma(H))."""

    def K(x):
        s, t, w = phi_inverse(to_pair(x))
        return H(t, w) - s

    return K


def characteristic_field(H):
    """-i grad K in C^2, with a fourth-order difference gradient."""
    K = lifted_hamiltonian(H)

    def f(t, x):
        return -complex_unit(fd_gradient(K, x, order=4))

    return f


def characteristic_from_periodic_point(H, w, k: int, cfg: IntegratorConfig | None = None,
                                       period_tol=1e-9) -> CharacteristicCertificate:
    """Closed characteristic on the boundary of D(H) through the lift of a k-periodic point.

    The action is computed twice: k pi plus the disk action of the periodic
    point, and the integral of lambda_0 along the characteristic integrated
    directly in C^2.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    w = complex(w)
    tr = disk_flow(H, k, np.array(w), cfg, t_eval=list(range(1, k + 1)))
    ends = tr.points[1:, 0] + 1j * tr.points[1:, 1]
    res = abs(ends[-1] - w)
    if res >= period_tol:
        raise PreconditionError(f"w is not {k}-periodic: |phi^k(w) - w| = {res:.3g}")
    for d in _divisors(k):
        if abs(ends[d - 1] - w) < period_tol:
            raise PreconditionError(f"w has period {d}, smaller than k = {k}")
    a_formula = k * math.pi + float(tr.action_integrals["lambda"] + tr.action_integrals["H"])

    z0 = to_real(phi_map(H(0.0, w), 0.0, w))
    fld = characteristic_field(H)

    def augmented(t, X):
        v = fld(t, X[..., :4])
        dl = 0.5 * np.sum(complex_unit(X[..., :4]) * v, axis=-1)
        return np.concatenate([v, dl[..., None]], axis=-1)

    out = integrate_flow(augmented, np.append(z0, 0.0), float(k), cfg, t_eval=[float(k)]).endpoint
    return CharacteristicCertificate(w, k, z0, a_formula, float(out[4]), float(res),
                                     float(np.linalg.norm(out[:4] - z0)))


# ------------------------------------------------- interpolation data

@dataclass
class InterpolationReport:
    lambdas: list
    time_one_gap: float
    graph_gap: float
    subclaim_gap: float
    fixed_point_actions: list = field(default_factory=list)


class InterpolationData:
    """G^lambda = H^lambda # conj(H^0) and the induced maps on R x T x disk.

    ``family(lam)`` returns a :class:`TimePeriodicHamiltonian`; all members
    must share the time-one map of ``family(0)``.
    """

    def __init__(self, family, cfg: IntegratorConfig | None = None):
        self.family = family
        self.cfg = cfg or IntegratorConfig(abs_tol=1e-12, rel_tol=1e-12)
        self.H0 = family(0.0)

    def psi(self, lam, t, w):
        """psi^t = phi^t_{H^lam} o (phi^t_{H^0})^{-1}."""
        w = np.asarray(w, dtype=complex)
        t = np.broadcast_to(np.asarray(t, float), w.shape)
        back = disk_map(self.H0, w, t, np.zeros(w.shape), self.cfg)
        return disk_map(self.family(lam), back, np.zeros(w.shape), t, self.cfg)

    def psi_inverse(self, lam, t, v):
        v = np.asarray(v, dtype=complex)
        t = np.broadcast_to(np.asarray(t, float), v.shape)
        back = disk_map(self.family(lam), v, t, np.zeros(v.shape), self.cfg)
        return disk_map(self.H0, back, np.zeros(v.shape), t, self.cfg)

    def G(self, lam, t, v):
        H = self.family(lam)
        return H(t, v) - self.H0(t, self.psi_inverse(lam, t, v))

    def psi_tilde(self, lam, s, t, w):
        v = self.psi(lam, t, w)
        return s + self.G(lam, t, v), t, v

    def report(self, lambdas, w_grid, n_t=32, h=1e-3) -> InterpolationReport:
        w_grid = np.asarray(w_grid, dtype=complex).ravel()
        time_one = 0.0
        graph = 0.0
        sub = 0.0
        actions = []
        tq, wq = np.polynomial.legendre.leggauss(n_t)
        tq, wq = 0.5 * (tq + 1), 0.5 * wq
        for lam in lambdas:
            H = self.family(lam)
            one = self.psi(lam, np.ones(w_grid.shape), w_grid)
            time_one = max(time_one, float(np.max(np.abs(one - w_grid))))
            # graph of H^0 goes to graph of H^lam
            T = np.repeat(tq, len(w_grid))
            W = np.tile(w_grid, n_t)
            s_new, _, v = self.psi_tilde(lam, self.H0(T, W), T, W)
            graph = max(graph, float(np.max(np.abs(s_new - H(T, v)))))
            # integral of d/dlam G along the closed G-trajectories
            lo, hi = max(lam - h, 0.0), min(lam + h, 1.0)
            dG = (self.G(hi, T, v) - self.G(lo, T, v)) / (hi - lo)
            integral = (wq[:, None] * dG.reshape(n_t, -1)).sum(axis=0)
            sub = max(sub, float(np.max(np.abs(integral))))
            actions.append(float(fixed_point_action(H, np.array(0j), 1, self.cfg)))
        return InterpolationReport(list(lambdas), time_one, graph, sub, actions)


def interpolation_symplectomorphism(family, lambdas=(0.0, 0.25, 0.5, 0.75, 1.0), w_grid=None,
                                    cfg=None, tol=1e-7):
    """Build G^lambda and psi_tilde for a family with a common time-one map and verify them."""
    data = InterpolationData(family, cfg)
    if w_grid is None:
        r = np.linspace(0, 0.8, 5)
        th = 2 * np.pi * np.arange(6) / 6
        w_grid = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    w_grid = np.asarray(w_grid, dtype=complex)
    ref = disk_map(data.H0, w_grid, 0.0, 1.0, data.cfg)
    for lam in lambdas:
        gap = float(np.max(np.abs(disk_map(family(lam), w_grid, 0.0, 1.0, data.cfg) - ref)))
        if gap > tol:
            raise PreconditionError(f"time-one maps differ at lambda={lam}: gap {gap:.3g}")
    return data, data.report(lambdas, w_grid)


# ------------------------------------------------------------ test inputs

def smooth_bump(s):
    """exp(1 - 1/(1 - s)) on s < 1, zero beyond; equals 1 at s = 0."""
    s = np.asarray(s, dtype=float)
    inside = s < 1
    d = np.where(inside, 1 - s, 1.0)
    val = np.where(inside, np.exp(1 - 1 / d), 0.0)
    dval = np.where(inside, -val / d ** 2, 0.0)
    return val, dval


def bump_hamiltonian(centers, radii, heights, phases=None, wobble=0.0, name="bumps"):
    """Sum of heights_k * (1 + wobble sin 2 pi (t + phase_k)) * bump(|w - c_k|^2 / r_k^2)."""
    centers = np.asarray(centers, dtype=complex)
    radii = np.asarray(radii, dtype=float)
    heights = np.asarray(heights, dtype=float)
    phases = np.zeros(len(centers)) if phases is None else np.asarray(phases, dtype=float)
    support = float(np.max(np.abs(centers) + radii))

    def parts(t, w):
        t = np.asarray(t, dtype=float)[..., None]
        w = np.asarray(w, dtype=complex)[..., None]
        s = np.abs(w - centers) ** 2 / radii ** 2
        b, db = smooth_bump(s)
        ang = 2 * math.pi * (t + phases)
        tau = heights * (1 + wobble * np.sin(ang))
        dtau = heights * wobble * 2 * math.pi * np.cos(ang)
        return w, b, db, tau, dtau

    def value(t, w):
        _, b, _, tau, _ = parts(t, w)
        return np.sum(tau * b, axis=-1)

    def grad(t, w):
        ww, _, db, tau, _ = parts(t, w)
        return np.sum(tau * db * 2 * (ww - centers) / radii ** 2, axis=-1)

    def dt(t, w):
        _, b, _, _, dtau = parts(t, w)
        return np.sum(dtau * b, axis=-1)

    return TimePeriodicHamiltonian(value, grad, min(support + 1e-9, 0.999), dt, name)


def random_bump_hamiltonian(rng, n_bumps=3, max_radius=0.8, max_height=0.4, min_margin=1.0):
    """Random admissible sum of time-modulated bumps inside the disk of radius max_radius.

    Draws are repeated until D(H) is star-shaped with the given margin.
    """
    while True:
        rad = rng.uniform(0.15, 0.35, n_bumps)
        dist = rng.uniform(0, 1, n_bumps) * (max_radius - rad)
        centers = dist * np.exp(2j * math.pi * rng.uniform(0, 1, n_bumps))
        heights = rng.uniform(-max_height, max_height, n_bumps)
        H = bump_hamiltonian(centers, rad, heights, rng.uniform(0, 1, n_bumps), rng.uniform(0, 0.5),
                             name="random bumps")
        if H.transversality_margin() > min_margin:
            return H
