"""Hamiltonians with non-negative fixed-point actions and negative Calabi invariant.

H = F # G where F(w) = f(|w|^2) rotates the disk of radius 1/2 by pi and G is
a negative bump on a disk U displaced by that rotation. Rescaling by lambda and
lifting gives domains A_lambda close to the ball with systole pi and volume
below pi^2/2, so the ball capacity sits strictly below the systole.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .genfun import smoothstep, time_step
from .lift import (TimePeriodicHamiltonian, calabi, disk_flow, disk_map, LiftedDomain,
                   lifted_volume)
from .numerics import IntegratorConfig, hopf_point, quadrature, torus_disk_rule


class ConfigurationError(ValueError):
    pass


_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


@dataclass(frozen=True)
class CounterexampleConfig:
    """Profile, bump and lambda grid.

    ``rho_supp`` is where f reaches 0; ``u_center``/``u_radius`` describe U;
    the bump is flat on the inner ``plateau`` fraction of |w - c|^2 / r^2.
    ``lambdas`` are fractions of the validated maximum unless ``absolute``.
    """

    rho_supp: float = 0.27
    u_center: complex = 0.25
    u_radius: float = 0.24
    plateau: float = 0.0
    calabi_margin: float = 0.02
    time_flat: float = 0.05
    lambdas: tuple = (0.2, 0.4, 0.6, 0.8, 1.0)
    absolute: bool = False
    k_max: int = 8
    action_floor: float = 1e-4
    cfg: IntegratorConfig = IntegratorConfig(abs_tol=1e-11, rel_tol=1e-11)

    def __post_init__(self):
        if not 0.25 < self.rho_supp < 1:
            raise ConfigurationError("rho_supp must lie in (1/4, 1)")
        if self.calabi_margin <= 0:
            raise ConfigurationError("calabi_margin must be positive")
        if not 0 <= self.plateau < 1:
            raise ConfigurationError("plateau must lie in [0, 1)")
        if abs(complex(self.u_center)) + self.u_radius >= 0.5:
            raise ConfigurationError("U must lie inside the disk of radius 1/2")


class RadialProfile:
    """f with f' = -pi/2 on [0, 1/4], capped to 0 at rho_supp by a smooth step."""

    def __init__(self, rho_supp=0.3):
        self.rho_supp = float(rho_supp)
        self.span = self.rho_supp - 0.25
        self.rho0 = 0.25 + self.span / 2

    def _x(self, rho):
        return (np.asarray(rho, float) - 0.25) / self.span

    def m(self, rho):
        return 1 - smoothstep(self._x(rho))

    def d1(self, rho):
        return -0.5 * math.pi * self.m(rho)

    def d2(self, rho):
        return 0.5 * math.pi * smoothstep(self._x(rho), 1) / self.span

    def __call__(self, rho):
        rho = np.asarray(rho, float)
        x = self._x(rho)
        out = np.where(rho <= 0.25, 0.5 * math.pi * (self.rho0 - rho), 0.0)
        cap = (x > 0) & (x < 1)
        # int_x^1 (1 - step) = int_0^{1-x} step, by the symmetry of the step
        a = (1 - x[cap])[:, None]
        tail = np.sum(0.5 * a * _GL_W * smoothstep(0.5 * a * (_GL_X + 1)), axis=-1)
        out[cap] = 0.5 * math.pi * self.span * tail
        return out

    def calabi(self):
        """pi * int_0^1 f(rho) d rho, split at 1/4."""
        inner = 0.5 * math.pi * (self.rho0 / 4 - 1 / 32)
        x = 0.25 + self.span * 0.5 * (_GL_X + 1)
        outer = 0.5 * self.span * float(np.sum(_GL_W * self(x)))
        return math.pi * (inner + outer)


def plateau_bump(s, plateau):
    """1 on s <= plateau, 0 for s >= 1; value and d/ds."""
    x = (np.asarray(s, float) - plateau) / (1 - plateau)
    return 1 - smoothstep(x), -smoothstep(x, 1) / (1 - plateau)


class CounterexampleHamiltonian(TimePeriodicHamiltonian):
    """F # G with G(t, w) = tau'(t) G0(w); keeps its parts for diagnostics."""

    def __init__(self, cfg: CounterexampleConfig):
        self.cfg = cfg
        self.profile = prof = RadialProfile(cfg.rho_supp)
        self.center = c = complex(cfg.u_center)
        self.u_radius = r = float(cfg.u_radius)
        a = cfg.plateau
        self.calabi_F = prof.calabi()
        self.bump_area = math.pi * r ** 2 * (a + (1 - a) / 2)
        # Int G = -(Cal F + 2 margin), strictly below -(Cal F + margin)
        self.height = (self.calabi_F + 2 * cfg.calabi_margin) / self.bump_area
        self.calabi_G = -self.height * self.bump_area
        flat = cfg.time_flat

        def g0(v):
            s = np.abs(v - c) ** 2 / r ** 2
            b, db = plateau_bump(s, a)
            return -self.height * b, -self.height * db * 2 * (v - c) / r ** 2

        def rate(v):
            # X_G0 = i kappa (v - c): G0 is radial about c
            s = np.abs(v - c) ** 2 / r ** 2
            return 2 * self.height * plateau_bump(s, a)[1] / r ** 2

        def parts(t, w):
            t = np.asarray(t, float)
            w = np.asarray(w, complex)
            s = np.mod(t, 1.0)
            rho = np.abs(w) ** 2
            d1 = prof.d1(rho)
            v = np.exp(2j * s * d1) * w
            G, dG = g0(v)
            return s, rho, d1, v, G, dG

        def value(t, w):
            s, rho, _, _, G, _ = parts(t, w)
            return prof(rho) + time_step(s, 1, flat) * G

        def grad(t, w):
            s, rho, d1, v, G, dG = parts(t, w)
            w = np.asarray(w, complex)
            alpha = 2 * s * d1
            dalpha = 2 * s * prof.d2(rho)
            inner = np.exp(-1j * alpha) * dG + 2 * dalpha * np.real(1j * np.conj(dG) * v) * w
            return 2 * d1 * w + time_step(s, 1, flat) * inner

        def dt(t, w):
            s, rho, d1, v, G, dG = parts(t, w)
            dv = 2j * d1 * v
            return time_step(s, 2, flat) * G + time_step(s, 1, flat) * np.real(np.conj(dG) * dv)

        self.G0 = g0
        self.rate = rate
        support = max(math.sqrt(cfg.rho_supp), abs(c) + r) + 1e-9
        # only the rescaled H^lambda has to satisfy H > -pi (1 - |w|^2)
        super().__init__(value, grad, support, dt, "F#G", check=False)

    def F(self, w):
        return self.profile(np.abs(np.asarray(w, complex)) ** 2)

    def phi_F(self, w, t=1.0):
        """Closed-form flow of F: e^{-2 i t f'(|w|^2)} w."""
        w = np.asarray(w, complex)
        return np.exp(-2j * t * self.profile.d1(np.abs(w) ** 2)) * w

    def phi_G(self, w):
        """Closed-form time-one map of G: rotation about c by kappa(|w - c|)."""
        w = np.asarray(w, complex)
        return self.center + np.exp(1j * self.rate(w)) * (w - self.center)

    def time_one(self, w):
        """phi_H^1 = phi_F^1 o phi_G^1 without integration."""
        return self.phi_F(self.phi_G(w))

    def sigma_F(self, w):
        rho = np.abs(np.asarray(w, complex)) ** 2
        return self.profile(rho) - rho * self.profile.d1(rho)

    F_action = sigma_F

    def sigma_G(self, w):
        """int_0^1 (lambda_hat_0(X) + G0) along the rotation about c."""
        w = np.asarray(w, complex)
        c = self.center
        k = self.rate(w)
        d = w - c
        lam = 0.5 * (k * np.abs(d) ** 2 + np.real(-1j * np.conj(c) * d * (np.exp(1j * k) - 1)))
        return self.G0(w)[0] + lam

    def sigma(self, w):
        """Action of one step of phi_H^1 starting at w (composition rule for F # G)."""
        return self.sigma_F(self.phi_G(w)) + self.sigma_G(w)


# ------------------------------------------------------------------ checks

@dataclass(frozen=True)
class DisplacementReport:
    min_distance: float
    overlap: bool
    flow_check: float


def displacement_check(H: CounterexampleHamiltonian, n_r=12, n_theta=48, cfg=None) -> DisplacementReport:
    """Distance between phi_F^1(U) and U over a polar grid of U including its boundary."""
    r = np.linspace(0, H.u_radius, n_r)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    pts = (H.center + r[:, None] * np.exp(1j * th[None, :])).ravel()
    img = H.phi_F(pts)
    dist = float(np.min(np.abs(img - H.center)) - H.u_radius)
    # integrate F alone on a few points to confirm the closed form
    F = TimePeriodicHamiltonian(lambda t, w: H.F(w) + 0 * t,
                                lambda t, w: 2 * H.profile.d1(np.abs(w) ** 2) * w + 0 * t,
                                H.support_radius, name="F", check=False)
    sub = pts[:: max(1, len(pts) // 16)]
    flow = float(np.max(np.abs(disk_map(F, sub, 0.0, 1.0, cfg) - H.phi_F(sub))))
    return DisplacementReport(dist, dist <= 0, flow)


def _iterate(H, w, k):
    for _ in range(k):
        w = H.time_one(w)
    return w


def _periodic_newton(H, seeds, k, tol=1e-12, max_iter=60, h=1e-7, max_step=0.05):
    """Newton on phi^k(w) - w over the closed-form time-one map, batched; converged points only."""
    w = np.asarray(seeds, complex).ravel().copy()
    ok = np.zeros(w.shape, bool)
    offs = np.array([0, h, -h, 1j * h, -1j * h])
    for _ in range(max_iter):
        img = _iterate(H, w[:, None] + offs[None, :], k)
        res = img[:, 0] - w
        ok = np.abs(res) < tol
        if np.all(ok):
            break
        dx = (img[:, 1] - img[:, 2]) / (2 * h) - 1
        dy = (img[:, 3] - img[:, 4]) / (2 * h) - 1j
        J = np.stack([np.stack([dx.real, dy.real], -1), np.stack([dx.imag, dy.imag], -1)], -2)
        rhs = np.stack([res.real, res.imag], -1)[..., None]
        step = -(np.linalg.pinv(J, rcond=1e-10) @ rhs)[..., 0]
        step = step[:, 0] + 1j * step[:, 1]
        n = np.abs(step)
        step = np.where(n > max_step, step * max_step / np.maximum(n, 1e-300), step)
        w = np.where(ok, w, w + step)
        r = np.abs(w)
        w = np.where(r < 0.999, w, 0.999 * w / np.maximum(r, 1e-300))
    return w[ok]


def _dedupe(points, tol=1e-7):
    out = []
    for p in points:
        if all(abs(p - q) > tol for q in out):
            out.append(p)
    return np.array(out, complex)


def orbit_action(H, w, k):
    """k-step action as the sum of one-step actions sigma along the orbit."""
    w = np.asarray(w, complex)
    total = np.zeros(w.shape)
    for _ in range(k):
        total = total + H.sigma(w)
        w = H.time_one(w)
    return total


@dataclass
class FixedPointCensus:
    points: np.ndarray
    actions: np.ndarray
    f_residuals: np.ndarray
    outer_family_action: float
    integrated_gap: float

    @property
    def min_action(self):
        return float(min(list(self.actions) + [self.outer_family_action]))

    @property
    def subset_of_F(self):
        return bool(np.all(self.f_residuals < 1e-7))


def composition_gap(H, n=16, cfg=None, seed=0):
    """max distance between integrated phi_H^1 and phi_F^1 o phi_G^1 on random points, plus action gap."""
    rng = np.random.default_rng(seed)
    w = H.support_radius * np.sqrt(rng.uniform(0, 1, n)) * np.exp(2j * np.pi * rng.uniform(0, 1, n))
    tr = disk_flow(H, 1.0, w, cfg or IntegratorConfig(abs_tol=1e-10, rel_tol=1e-10))
    end = tr.points[-1, :, 0] + 1j * tr.points[-1, :, 1]
    act = tr.action_integrals["lambda"] + tr.action_integrals["H"]
    return float(np.max(np.abs(end - H.time_one(w)))), float(np.max(np.abs(act - H.sigma(w))))


def fixed_point_census(H: CounterexampleHamiltonian, n_r=24, n_theta=32, cfg=None) -> FixedPointCensus:
    """Fixed points of phi_H^1 from a polar seed grid inside the support, with actions.

    Newton runs on the composition phi_F^1 o phi_G^1; every fixed point found
    is then integrated as a true H-orbit for its action. Beyond the support
    every point is fixed with action 0; that family is reported separately.
    """
    cfg = cfg or H.cfg.cfg
    R = H.support_radius
    r = (np.arange(n_r) + 0.5) / n_r * R
    th = 2 * np.pi * (np.arange(n_theta) + 0.25) / n_theta
    seeds = np.concatenate([[0j], (r[:, None] * np.exp(1j * th[None, :])).ravel()])
    found = _dedupe(_periodic_newton(H, seeds, 1))
    inside = found[np.abs(found) < R]
    fres = np.abs(H.phi_F(found) - found)
    tr = disk_flow(H, 1.0, inside, cfg)
    acts = np.atleast_1d(tr.action_integrals["lambda"] + tr.action_integrals["H"])
    end = tr.points[-1, :, 0] + 1j * tr.points[-1, :, 1]
    gap = float(np.max(np.abs(end - inside))) if len(inside) else 0.0
    outer = np.array([R + 0.01, -(R + 0.05) * 1j])
    tr_out = disk_flow(H, 1.0, outer, cfg)
    outer_act = float(np.max(np.abs(tr_out.action_integrals["lambda"] + tr_out.action_integrals["H"])))
    return FixedPointCensus(inside, acts, fres, outer_act, gap)


def higher_period_constant(H, n_t=16, n_r=48, n_theta=64) -> float:
    """c = sup |lambda_hat_0(X_H)| + sup |H| on a grid; lambda_hat_0(X_H) = -<w, grad H>/2."""
    t = (np.arange(n_t) + 0.5) / n_t
    r = np.linspace(0, H.support_radius, n_r)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    T, Rr, TH = np.meshgrid(t, r, th, indexing="ij")
    W = Rr * np.exp(1j * TH)
    lam = 0.5 * np.abs(np.real(np.conj(H.grad(T, W)) * W))
    # sampled sup, padded by 5% for the grid
    return 1.05 * float(np.max(lam) + np.max(np.abs(H(T, W))))


@dataclass
class PeriodicSample:
    k: int
    points: np.ndarray
    actions: np.ndarray

    @property
    def worst_ratio(self):
        return float(np.max(np.abs(self.actions)) / self.k) if len(self.actions) else 0.0


def periodic_samples(H, k, n_seeds=200, seed=0) -> PeriodicSample:
    """Points of exact period k found by Newton from random seeds, with their k-step actions."""
    rng = np.random.default_rng(seed + k)
    rad = H.support_radius * np.sqrt(rng.uniform(0, 1, n_seeds))
    seeds = rad * np.exp(2j * np.pi * rng.uniform(0, 1, n_seeds))
    pts = _dedupe(_periodic_newton(H, seeds, k))
    keep = []
    for p in pts:
        q, minimal = p, True
        for d in range(1, k):
            q = H.time_one(q)
            if k % d == 0 and abs(q - p) < 1e-9:
                minimal = False
                break
        if minimal and abs(p) < H.support_radius:
            keep.append(p)
    pts = np.array(keep, complex)
    return PeriodicSample(k, pts, orbit_action(H, pts, k))


# --------------------------------------------------------------- building

def build_counterexample_hamiltonian(cfg: CounterexampleConfig | None = None, verify=True):
    """F # G for the given configuration.

    Raises :class:`ConfigurationError` when phi_F^1 fails to displace U or the
    Calabi condition fails. With ``verify`` the fixed-point census is attached
    as ``H.census``.
    """
    cfg = cfg or CounterexampleConfig()
    H = CounterexampleHamiltonian(cfg)
    disp = displacement_check(H, cfg=cfg.cfg)
    if disp.overlap:
        raise ConfigurationError(f"phi_F^1(U) meets U: signed distance {disp.min_distance:.3g}")
    H.displacement = disp
    if not H.calabi_G < -H.calabi_F - cfg.calabi_margin:
        raise ConfigurationError("Calabi condition on G fails")
    H.census = None
    H.composition = None
    if verify:
        # the census trusts phi_F^1 o phi_G^1, so compare it with the integrated flow first
        H.composition = composition_gap(H)
        if H.composition[0] > 1e-6 or H.composition[1] > 1e-6:
            raise ConfigurationError(f"closed-form time-one map disagrees with the flow: {H.composition}")
        census = fixed_point_census(H)
        if not census.subset_of_F:
            raise ConfigurationError("phi_H^1 has fixed points that phi_F^1 does not")
        if census.min_action < -1e-9:
            raise ConfigurationError(f"negative fixed-point action {census.min_action:.3g}")
        H.census = census
    return H


def rescale(H: TimePeriodicHamiltonian, lam: float) -> TimePeriodicHamiltonian:
    """H^lambda(t, w) = lambda^2 H(t, w / lambda)."""
    if not 0 < lam <= 1:
        raise ValueError("lambda must lie in (0, 1]")
    if lam == 1:
        return H
    out = TimePeriodicHamiltonian(lambda t, w: lam ** 2 * H(t, np.asarray(w) / lam),
                                  lambda t, w: lam * H.grad(t, np.asarray(w) / lam),
                                  lam * H.support_radius,
                                  lambda t, w: lam ** 2 * H.dt(t, np.asarray(w) / lam),
                                  f"{H.name}^{lam:g}", check=False)
    out.parent = H
    out.lam = lam
    return out


def conjugation_gap(H, lam, grid, cfg=None) -> float:
    """max |phi^1_{H^lam}(w) - lam phi^1_H(w / lam)| over grid."""
    grid = np.asarray(grid, complex)
    a = disk_map(rescale(H, lam), grid, 0.0, 1.0, cfg)
    b = lam * disk_map(H, grid / lam, 0.0, 1.0, cfg)
    return float(np.max(np.abs(a - b)))


def c1_norm(H, n_t=8, n_r=32, n_theta=32) -> float:
    t = (np.arange(n_t) + 0.5) / n_t
    R = H.support_radius
    r = np.linspace(0, R, n_r)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    T, Rr, TH = np.meshgrid(t, r, th, indexing="ij")
    W = Rr * np.exp(1j * TH)
    return float(np.max(np.abs(H(T, W))) + np.max(np.abs(H.grad(T, W))))


# --------------------------------------------------------------- assembly

@dataclass(frozen=True)
class LambdaReport:
    lam: float
    systole: float
    volume: float
    ball_capacity_bound: float
    strict: bool
    calabi: float
    min_action: float
    conjugation_gap: float
    amplitude_c0: float
    volume_quadrature: float | None = None

    @property
    def ratio(self):
        return self.systole ** 2 / (2 * self.volume)


@dataclass
class CounterexampleReport:
    H: CounterexampleHamiltonian
    c: float
    lambda_max: float
    calabi: float
    periodic: list
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", "systole", "volume", "ratio", "strict"])
        for r in self.rows:
            w.writerow([repr(r.lam), repr(r.systole), repr(r.volume), repr(r.ratio), int(r.strict)])
        return buf.getvalue()


def calabi_rule(radius):
    # 32 time nodes resolve the switch-on of G; 16 leave a 1e-5 error
    return torus_disk_rule(32, 32, 128, radius=radius, panels=4)


def validated_lambda_max(H, c=None) -> float:
    """Largest lambda with lambda^2 c <= pi/2, D(H^lambda) star-shaped and H^lambda > -pi(1 - |w|^2)."""
    c = higher_period_constant(H) if c is None else c
    lam = min(1.0, math.sqrt(math.pi / (2 * c)))
    while lam > 1e-6:
        Hl = rescale(H, lam)
        try:
            Hl.check_admissible()
            if Hl.transversality_margin() > 0:
                return lam
        except ValueError:
            pass
        lam *= 0.9
    raise ConfigurationError("no admissible rescaling found")


def assemble_counterexample(lambdas=None, cfg: CounterexampleConfig | None = None, H=None,
                            volume_check_at=None) -> CounterexampleReport:
    """Per-lambda systole, volume and ball-capacity bound for A_lambda = D(H^lambda).

    The census runs once on H: fixed points of phi^1_{H^lam} are lam times
    those of phi^1_H with actions scaled by lam^2. Periods k >= 2 are covered
    by k pi + A >= k (pi - lam^2 c) >= pi, which holds for lam^2 c <= pi/2.
    """
    cfg = cfg or CounterexampleConfig()
    H = H or build_counterexample_hamiltonian(cfg)
    c = higher_period_constant(H)
    lam_max = validated_lambda_max(H, c)
    if lambdas is None:
        lambdas = cfg.lambdas if cfg.absolute else [f * lam_max for f in cfg.lambdas]
    lambdas = [float(x) for x in lambdas]
    bad = [x for x in lambdas if not 0 < x <= lam_max]
    if bad:
        raise ConfigurationError(f"lambda outside the validated range (0, {lam_max:.6g}]: {bad}")
    cal = calabi(H, calabi_rule(H.support_radius))
    periodic = [periodic_samples(H, k) for k in range(2, cfg.k_max + 1)]
    for ps in periodic:
        if ps.worst_ratio > c:
            raise ConfigurationError(f"k={ps.k} action exceeds the higher-period bound")
    census = H.census if H.census is not None else fixed_point_census(H)
    check = np.array([0.1 + 0.05j, -0.2 + 0.3j, 0.35j, 0.5])
    report = CounterexampleReport(H, c, lam_max, cal, periodic)
    for lam in lambdas:
        min_fixed = lam ** 2 * census.min_action
        # k-periodic lower bounds and sampled periodic orbits
        bounds = [k * math.pi - lam ** 2 * c * k for k in range(2, cfg.k_max + 1)]
        sampled = [ps.k * math.pi + lam ** 2 * a for ps in periodic for a in ps.actions]
        shortest = min([math.pi + min_fixed] + bounds + sampled)
        if shortest < math.pi - cfg.action_floor:
            systole = shortest
        else:
            # the outer fixed family has action exactly 0, so pi is attained
            systole = math.pi
        vol = math.pi ** 2 / 2 + lam ** 4 * cal
        bound = math.sqrt(2 * vol)
        gap = conjugation_gap(H, lam, lam * check, cfg.cfg)
        Hl = rescale(H, lam)
        amp = LiftedDomain(Hl)
        nodes = _amplitude_nodes(Hl.support_radius)
        c0 = float(np.max(np.abs(amp.amplitude(nodes) - 1)))
        vq = None
        if volume_check_at is not None and abs(lam - volume_check_at) < 1e-12:
            vq = lifted_volume(Hl).quadrature_value
        report.rows.append(LambdaReport(lam, systole, vol, bound, bool(bound < systole), lam ** 4 * cal,
                                        min_fixed, gap, c0, vq))
    return report


def _amplitude_nodes(R, n=24):
    u = np.linspace(1 - R ** 2, 1, n)
    th = 2 * np.pi * np.arange(n) / n
    ph = 2 * np.pi * np.arange(n) / n
    return hopf_point(*np.meshgrid(u, th, ph, indexing="ij")).reshape(-1, 4)


# ------------------------------------------------------- contact model

@dataclass(frozen=True)
class ContactModel:
    """alpha = (1 + H) dt + lambda_hat_0 on T x disk, glued into alpha_0 / pi on S^3.

    The chart e^{2 pi i t}(sqrt(1 - pi|v|^2), sqrt(pi) v) pulls alpha_0 / pi
    back to dt + lambda_hat_0, so the Zoll reference has volume 1 and period 1.
    """

    lam: float
    H: TimePeriodicHamiltonian | None
    systole: float
    volume: float
    volume_formula: float

    @property
    def ratio(self):
        return self.systole ** 2 / self.volume


def contact_counterexample(lam, H=None, cfg: CounterexampleConfig | None = None, rule=None) -> ContactModel:
    """Contact-form version of the counterexample at scale lam (lam = 0 is the Zoll model)."""
    if lam == 0:
        return ContactModel(0.0, None, 1.0, 1.0, 1.0)
    cfg = cfg or CounterexampleConfig()
    H = H or build_counterexample_hamiltonian(cfg)
    Hl = rescale(H, lam)
    chart = 1 / math.sqrt(math.pi)
    if Hl.support_radius >= chart:
        raise ConfigurationError(f"H^lambda support {Hl.support_radius:.3g} exceeds the chart radius {chart:.3g}")
    c = higher_period_constant(H)
    # periods k + lam^2 A with |A| <= k c; k >= 2 stays >= 1 when lam^2 c <= 1/2
    if lam ** 2 * c > 0.5:
        raise ConfigurationError("lambda outside the validated range of the contact model")
    census = H.census if H.census is not None else fixed_point_census(H)
    sys_ = 1.0 + min(0.0, lam ** 2 * census.min_action)
    rule = rule or calabi_rule(Hl.support_radius)
    t = rule.nodes[:, 0].real
    w = rule.nodes[:, 1]
    # alpha ^ d alpha = (1 + H - <w, grad H>/2) dt ^ omega_hat on the chart
    density = Hl(t, w) - 0.5 * np.real(np.conj(Hl.grad(t, w)) * w)
    vol = 1.0 + quadrature(density, rule)
    return ContactModel(lam, Hl, sys_, vol, 1.0 + 2 * calabi(Hl, rule))
