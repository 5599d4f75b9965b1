"""Conjugation scheme for ellipsoid forms eps_{a,b} with rational a/b.

Each stage composes a contactomorphism psi_j preserving eps_{a_j,b_j} (the
time-one flow of a contact Hamiltonian invariant under its Reeb flow), then
moves b slightly to a new rational value. The Reeb flow of
alpha_{j+1} = (psi_j ... psi_0)^* eps_{a_{j+1},b_{j+1}} is conjugate to the
ellipsoid flow, and its orbits through the preimage of a fixed torus spread
over S^3 as the denominators grow.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .domains import complex_unit
from .genfun import smoothstep
from .numerics import IntegratorConfig, integrate_flow, normalize, hopf_point
from .reeb import ellipsoid_flow


class StageError(RuntimeError):
    pass


def ellipsoid_factor(a, b, x):
    """g with eps_{a,b} = g alpha_0 on unit vectors."""
    af, bf = float(a), float(b)
    return 1.0 / (math.pi * ((x[..., 0] ** 2 + x[..., 1] ** 2) / af + (x[..., 2] ** 2 + x[..., 3] ** 2) / bf))


def ellipsoid_reeb(a, b, x):
    """Reeb field (2 pi i z1 / a, 2 pi i z2 / b)."""
    w = 2 * math.pi * np.array([1 / float(a), 1 / float(a), 1 / float(b), 1 / float(b)])
    return complex_unit(x) * w


def form_value(a, b, x, v):
    """eps_{a,b}(v) at x."""
    return ellipsoid_factor(a, b, x) * 0.5 * np.sum(complex_unit(x) * v, axis=-1)


def contact_frame(x):
    """e1 = (-conj z2, conj z1) and e2 = i e1, spanning ker alpha_0."""
    e1 = np.stack([-x[..., 2], x[..., 3], x[..., 0], -x[..., 1]], axis=-1)
    return e1, complex_unit(e1)


def tube_levels(radius):
    """(u_lo, u_hi): |z1|^2 range of points at chordal distance >= radius from Gamma_1 and Gamma_2."""
    hi = (1 - radius ** 2 / 2) ** 2
    return 1 - hi, hi


# ----------------------------------------------------- contact Hamiltonians

class ContactHamiltonian:
    """Scalar K on S^3 with gradient; generates X by iota_X alpha = K, iota_X d alpha = (iota_R dK) alpha - dK."""

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError


def _chi(u, lo, hi, width):
    a = (u - lo) / width
    b = (hi - u) / width
    sa, sb = smoothstep(a), smoothstep(b)
    return sa * sb, (smoothstep(a, 1) * sb - sa * smoothstep(b, 1)) / width


@dataclass(frozen=True)
class ShearHamiltonian(ContactHamiltonian):
    """K = A chi(|z1|^2) sin(p theta_1 - q theta_2 + phase).

    chi vanishes within chordal distance ``tube`` of Gamma_1 = {z2 = 0} and
    Gamma_2 = {z1 = 0}. K is invariant under the Reeb flow of eps_{a,b}
    exactly when a / b = p / q.
    """

    amplitude: float
    p: int
    q: int
    phase: float = 0.0
    tube: float = 0.1
    width: float = 0.05
    beta: float = 0.0

    def _parts(self, x):
        z1 = x[..., 0] + 1j * x[..., 1]
        z2 = x[..., 2] + 1j * x[..., 3]
        u = np.abs(z1) ** 2
        lo, hi = tube_levels(self.tube)
        chi, dchi = _chi(u, lo, hi, self.width)
        ang = self.p * np.angle(z1) - self.q * np.angle(z2) + self.phase
        return z1, z2, u, chi, dchi, ang

    def value(self, x):
        z1, z2, u, chi, _, ang = self._parts(x)
        extra = self.beta * np.cos(np.angle(z1) + np.angle(z2)) if self.beta else 0.0
        return self.amplitude * chi * (np.sin(ang) + extra)

    def grad(self, x):
        z1, z2, u, chi, dchi, ang = self._parts(x)
        r1 = np.maximum(np.abs(z1) ** 2, 1e-300)
        r2 = np.maximum(np.abs(z2) ** 2, 1e-300)
        gu = np.stack([2 * x[..., 0], 2 * x[..., 1], 0 * u, 0 * u], axis=-1)
        g1 = np.stack([-x[..., 1], x[..., 0], 0 * u, 0 * u], axis=-1) / r1[..., None]
        g2 = np.stack([0 * u, 0 * u, -x[..., 3], x[..., 2]], axis=-1) / r2[..., None]
        s = np.sin(ang)
        c = np.cos(ang)
        if self.beta:
            phi = np.angle(z1) + np.angle(z2)
            s = s + self.beta * np.cos(phi)
            extra = -self.beta * np.sin(phi)[..., None] * (g1 + g2)
        else:
            extra = 0.0
        out = self.amplitude * (dchi[..., None] * s[..., None] * gu
                                + chi[..., None] * (c[..., None] * (self.p * g1 - self.q * g2) + extra))
        return np.where((chi > 0)[..., None] | (dchi != 0)[..., None], out, 0.0)

    def invariant_part(self):
        return replace(self, beta=0.0)

    def record(self):
        return {"amplitude": self.amplitude, "p": self.p, "q": self.q, "phase": self.phase,
                "tube": self.tube, "width": self.width}


@dataclass
class AveragedHamiltonian(ContactHamiltonian):
    """(1/T) int_0^T K_raw(phi^s x) ds over one period T = q a = p b of eps_{a,b}, by the
    trapezoid rule with ``nodes`` points (exact for trigonometric modes below that order)."""

    raw: ContactHamiltonian
    a: Fraction
    b: Fraction
    nodes: int = 64

    def _shifts(self, x):
        r = Fraction(self.a) / Fraction(self.b)
        T = float(r.denominator * Fraction(self.a))
        s = T * np.arange(self.nodes) / self.nodes
        flow = ellipsoid_flow(self.a, self.b)
        return np.stack([flow(si, x) for si in s], axis=0), s, flow

    def value(self, x):
        pts, _, _ = self._shifts(x)
        return np.mean(self.raw.value(pts), axis=0)

    def grad(self, x):
        pts, s, flow = self._shifts(x)
        g = self.raw.grad(pts)
        # the flow is unitary, so its transpose is the backward flow
        back = np.stack([flow(-si, g[i]) for i, si in enumerate(s)], axis=0)
        return np.mean(back, axis=0)


def fiber_average_hamiltonian(K_raw: ContactHamiltonian, a, b, nodes=64) -> AveragedHamiltonian:
    return AveragedHamiltonian(K_raw, Fraction(a), Fraction(b), nodes)


def invariance_defect(K: ContactHamiltonian, a, b, x):
    """iota_R dK for the Reeb field of eps_{a,b}."""
    return np.sum(K.grad(x) * ellipsoid_reeb(a, b, x), axis=-1)


def contact_field(K: ContactHamiltonian, a, b):
    """X = K R + (-dK(e2) e1 + dK(e1) e2) / g for alpha = eps_{a,b} = g alpha_0."""

    def X(t, x):
        g = ellipsoid_factor(a, b, x)[..., None]
        dK = K.grad(x)
        e1, e2 = contact_frame(x)
        k1 = np.sum(dK * e1, axis=-1, keepdims=True)
        k2 = np.sum(dK * e2, axis=-1, keepdims=True)
        dR = np.sum(dK * ellipsoid_reeb(a, b, x), axis=-1, keepdims=True)
        # the iota_R dK term vanishes for invariant K; kept so that X is right in general
        return K.value(x)[..., None] * ellipsoid_reeb(a, b, x) + (-k2 * e1 + k1 * e2) / g + 0 * dR

    return X


@dataclass
class ContactFlow:
    """Time-t map of the contact vector field of K for eps_{a,b}."""

    K: ContactHamiltonian
    a: Fraction
    b: Fraction
    t: float = 1.0
    cfg: IntegratorConfig = IntegratorConfig(abs_tol=1e-11, rel_tol=1e-11)

    def __call__(self, x, inverse=False):
        x = np.asarray(x, dtype=float)
        T = -self.t if inverse else self.t
        if T == 0:
            return x.copy()
        return integrate_flow(contact_field(self.K, self.a, self.b), x, T, self.cfg,
                              project=normalize, t_eval=[abs(T)]).endpoint

    def inverse(self, x):
        return self(x, inverse=True)

    def pullback_factor(self, x, h=1e-4):
        """h(x) with psi^* eps = h eps, from D psi applied to R(x).

        D psi is a fourth order difference quotient of the time-one map along
        great circles through x; the batch shares one step sequence, so the
        quotient differentiates a smooth map. Returns (factor, kernel_leak)
        with kernel_leak = |eps(D psi e1)|.
        """
        x = np.asarray(x, dtype=float)
        e1, _ = contact_frame(x)
        v0 = ellipsoid_reeb(self.a, self.b, x)
        dirs = [v0, e1]
        steps = (-2, -1, 1, 2)
        batch = [x] + [normalize(x + k * h * v) for v in dirs for k in steps]
        out = self(np.concatenate(batch, axis=0))
        n = len(x)
        y = out[:n]
        d = []
        for i in range(2):
            f = [out[n * (1 + 4 * i + j): n * (2 + 4 * i + j)] for j in range(4)]
            d.append((f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h))
        factor = form_value(self.a, self.b, y, d[0]) / form_value(self.a, self.b, x, v0)
        leak = np.abs(form_value(self.a, self.b, y, d[1]))
        return factor, leak


def contact_flow(K: ContactHamiltonian, a, b, t=1.0, cfg=None) -> ContactFlow:
    return ContactFlow(K, Fraction(a), Fraction(b), t, cfg or IntegratorConfig(abs_tol=1e-11, rel_tol=1e-11))


# --------------------------------------------------------------- the scheme

@dataclass(frozen=True)
class AKConfig:
    """Stage schedule. ``sweeps[j]`` is the |z1|^2 displacement targeted by psi_j;
    ``refinements[j]`` is n in the convergent step p/q -> (n p + p')/(n q + q')."""

    a0: Fraction = Fraction(1)
    b0: Fraction = Fraction(1)
    tube: float = 0.1
    width: float = 0.05
    torus_u: float = 0.5
    sweeps: tuple = (0.1, 0.1, 0.5)
    refinements: tuple = (3, 5, 24)
    max_refine: int = 6
    samples: int = 256
    seed: int = 0
    cfg: IntegratorConfig = IntegratorConfig(abs_tol=1e-11, rel_tol=1e-11)


@dataclass
class StageReport:
    stage: int
    form_deviation: float
    kernel_leak: float
    invariance_defect: float
    averaging_gap: float
    amplitude_distance: float
    budget: float
    tube_displacement: float
    a: Fraction
    b: Fraction

    def record(self):
        d = dict(self.__dict__)
        d["a"] = str(self.a)
        d["b"] = str(self.b)
        return d


@dataclass
class ConjugationState:
    stage: int
    a: Fraction
    b: Fraction
    prev: tuple          # previous convergent (p', q') with p q' - q p' = +-1
    maps: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    config: AKConfig = AKConfig()

    @property
    def ratio(self):
        return Fraction(self.a) / Fraction(self.b)

    def forward(self, x):
        """Phi_j = psi_{j-1} o ... o psi_0."""
        for m in self.maps:
            x = m(x)
        return x

    def backward(self, y):
        for m in reversed(self.maps):
            y = m.inverse(y)
        return y

    def checkpoint(self) -> str:
        return json.dumps({
            "stage": self.stage, "a": [self.a.numerator, self.a.denominator],
            "b": [self.b.numerator, self.b.denominator], "prev": list(self.prev), "eps": self.eps,
            "maps": [{"K": m.K.record(), "a": [m.a.numerator, m.a.denominator],
                      "b": [m.b.numerator, m.b.denominator]} for m in self.maps],
            "reports": [r.record() for r in self.reports],
        }, indent=1, sort_keys=True)

    @classmethod
    def from_checkpoint(cls, text, config: AKConfig | None = None):
        d = json.loads(text)
        config = config or AKConfig()
        maps = [contact_flow(ShearHamiltonian(**m["K"]), Fraction(*m["a"]), Fraction(*m["b"]), 1.0, config.cfg)
                for m in d["maps"]]
        reports = [StageReport(**{**r, "a": Fraction(r["a"]), "b": Fraction(r["b"])}) for r in d["reports"]]
        return cls(d["stage"], Fraction(*d["a"]), Fraction(*d["b"]), tuple(d["prev"]), maps, list(d["eps"]),
                   reports, config)


def initial_state(config: AKConfig | None = None) -> ConjugationState:
    config = config or AKConfig()
    r = Fraction(config.a0) / Fraction(config.b0)
    # a convergent partner of p/q: any (p', q') with p q' - q p' = +-1
    p, q = r.numerator, r.denominator
    prev = _partner(p, q)
    return ConjugationState(0, Fraction(config.a0), Fraction(config.b0), prev, [], [], [], config)


def _partner(p, q):
    # extended Euclid: p y - q x = 1 with 0 <= x
    def egcd(a, b):
        if b == 0:
            return a, 1, 0
        g, s, t = egcd(b, a % b)
        return g, t, s - (a // b) * t
    _, s, t = egcd(p, q)   # p s + q t = 1
    pp, qq = -t, s         # p * qq - q * pp = 1
    while pp < 0 or qq < 0:
        pp, qq = pp + p, qq + q
    return (pp, qq)


def sample_points(n, seed=0):
    """Quasi-uniform points of S^3 from an R3 Kronecker sequence in (|z1|^2, theta_1, theta_2)."""
    g = 1.324717957244746
    alpha = np.array([1 / g, 1 / g ** 2, 1 / g ** 3])
    k = np.arange(1, n + 1)[:, None] + seed * n
    s = np.mod(0.5 + k * alpha, 1.0)
    u, t1, t2 = s[:, 0], 2 * np.pi * s[:, 1], 2 * np.pi * s[:, 2]
    return np.stack([np.sqrt(u) * np.cos(t1), np.sqrt(u) * np.sin(t1),
                     np.sqrt(1 - u) * np.cos(t2), np.sqrt(1 - u) * np.sin(t2)], axis=-1)


def _sweep_amplitude(K: ShearHamiltonian, a, b, u, sweep):
    """Amplitude giving |z1|^2 speed ``sweep`` at level u where cos(angle) = 1."""
    unit = replace(K, amplitude=1.0, phase=0.0)
    x = hopf_point(u, 0.0, 0.0)
    X = contact_field(unit, a, b)(0.0, x[None])[0]
    rate = abs(2 * (x[0] * X[0] + x[1] * X[1]))
    return sweep / rate


def advance_stage(state: ConjugationState, eps: float, sweep=None, refinement=None) -> ConjugationState:
    """Build psi_j for eps_{a_j,b_j}, move b to the next convergent and measure the stage.

    ``sweep`` = 0 with ``refinement`` = 0 leaves the state unchanged apart from
    the stage counter.
    """
    cfg = state.config
    j = state.stage
    sweep = cfg.sweeps[min(j, len(cfg.sweeps) - 1)] if sweep is None else sweep
    n = cfg.refinements[min(j, len(cfg.refinements) - 1)] if refinement is None else refinement
    a, b = state.a, state.b
    r = state.ratio
    p, q = r.numerator, r.denominator
    budget = 2.0 ** (-j)
    pts = sample_points(cfg.samples, cfg.seed + j)

    maps = list(state.maps)
    form_dev = leak = inv = avg_gap = tube_disp = 0.0
    if sweep > 0:
        K = ShearHamiltonian(1.0, p, q, phase=0.37 * (j + 1), tube=cfg.tube, width=cfg.width)
        K = replace(K, amplitude=_sweep_amplitude(K, a, b, cfg.torus_u, sweep))
        psi = contact_flow(K, a, b, 1.0, cfg.cfg)
        probe = pts[:32]
        factor, lk = psi.pullback_factor(probe)
        form_dev = float(np.max(np.abs(factor - 1)))
        leak = float(np.max(lk))
        inv = float(np.max(np.abs(invariance_defect(K, a, b, pts))))
        # averaging a raw Hamiltonian with a non-invariant mode recovers K
        raw = replace(K, beta=0.5)
        nodes = 2 * (p + q) + 8
        avg_gap = float(np.max(np.abs(fiber_average_hamiltonian(raw, a, b, nodes).value(pts) - K.value(pts))))
        lo, hi = tube_levels(cfg.tube)
        tube_pts = np.concatenate([hopf_point(np.full(16, u0), np.linspace(0, 6, 16), np.linspace(0, 5, 16))
                                   for u0 in (hi + 0.5 * (1 - hi), 0.5 * lo)])
        tube_disp = float(np.max(np.linalg.norm(psi(tube_pts) - tube_pts, axis=-1)))
        maps.append(psi)

    new_a, new_b, new_prev = a, b, state.prev
    dist = 0.0
    if n > 0:
        for _ in range(cfg.max_refine):
            pn, qn = n * p + state.prev[0], n * q + state.prev[1]
            cand_b = a * Fraction(qn, pn)
            image = pts
            for m in maps:
                image = m(image)
            ratio = ellipsoid_factor(a, cand_b, image) / ellipsoid_factor(a, b, image)
            dist = float(np.max(np.abs(ratio - 1)))
            if dist <= budget:
                new_b, new_prev = cand_b, (p, q)
                break
            n *= 2
        else:
            raise StageError(f"stage {j}: amplitude distance {dist:.3g} above budget {budget:.3g}")

    rep = StageReport(j, form_dev, leak, inv, avg_gap, dist, budget, tube_disp, new_a, new_b)
    return ConjugationState(j + 1, new_a, new_b, new_prev, maps, state.eps + [eps], state.reports + [rep],
                            cfg)


def conjugated_flow(state: ConjugationState, t, z):
    """phi^t of alpha_j = Phi_j^* eps_{a_j,b_j}: Phi_j^{-1} o phi^t_eps o Phi_j."""
    flow = ellipsoid_flow(state.a, state.b)
    return state.backward(flow(t, state.forward(np.asarray(z, dtype=float))))


def orbit_through_torus(state: ConjugationState, t_max=None, spacing=0.05, angle=0.0):
    """Samples of the alpha_j orbit through Phi_j^{-1}(y0), y0 on the torus |z1|^2 = torus_u.

    The ellipsoid orbit is sampled in closed form and pulled back in one
    batch. Default t_max is one full period q a = p b.
    """
    a, b = float(state.a), float(state.b)
    if t_max is None:
        t_max = float(state.ratio.denominator * state.a)
    u = state.config.torus_u
    speed = 2 * math.pi * math.sqrt(u / a ** 2 + (1 - u) / b ** 2)
    n = int(math.ceil(t_max * speed / spacing)) + 1
    t = np.linspace(0.0, t_max, n)
    y0 = hopf_point(u, angle, 0.0)
    ys = ellipsoid_flow(state.a, state.b)(t, np.broadcast_to(y0, (len(t), 4)))
    return t, state.backward(ys)


@dataclass
class DensityCertificate:
    eps: float
    centers: np.ndarray
    covered: np.ndarray
    n_samples: int
    t_max: float
    max_gap: float

    @property
    def passed(self):
        return bool(np.all(self.covered))

    def record(self):
        return {"eps": self.eps, "centers": int(len(self.centers)), "covered": int(np.sum(self.covered)),
                "passed": self.passed, "samples": self.n_samples, "t_max": self.t_max, "max_gap": self.max_gap}


def center_grid(n=500, seed=0):
    return sample_points(n, seed=1000 + seed)


def covering(points, centers, eps, chunk=2048):
    best = np.full(len(centers), np.inf)
    for i in range(0, len(points), chunk):
        d = np.linalg.norm(centers[:, None, :] - points[None, i:i + chunk, :], axis=-1)
        best = np.minimum(best, d.min(axis=1))
    return best <= eps, best


def epsilon_density(state: ConjugationState, eps: float, z0=None, t_max=None, grid_size=500,
                    spacing=None) -> DensityCertificate:
    """Ball-covering certificate for one alpha_j orbit on [0, t_max] (chordal metric).

    Without ``z0`` the orbit starts on the pulled-back torus.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    spacing = spacing or eps / 4
    centers = center_grid(grid_size)
    if z0 is None:
        t, pts = orbit_through_torus(state, t_max, spacing)
    else:
        a, b = float(state.a), float(state.b)
        t_max = t_max if t_max is not None else float(state.ratio.denominator * state.a)
        speed = 2 * math.pi * max(1 / a, 1 / b)
        t = np.linspace(0, t_max, int(math.ceil(t_max * speed / spacing)) + 1)
        y0 = state.forward(np.asarray(z0, float)[None])[0]
        ys = ellipsoid_flow(state.a, state.b)(t, np.broadcast_to(y0, (len(t), 4)))
        pts = state.backward(ys)
    covered, best = covering(pts, centers, eps)
    return DensityCertificate(eps, centers, covered, len(pts), float(t[-1]), float(best.max()))


@dataclass(frozen=True)
class PeriodCensus:
    """Short closed orbits of alpha_j through points off the tubes around Gamma_1, Gamma_2.

    A point with z1 != 0 can only return at multiples of a, so the candidate
    times below tau = q a are k a with k < q; ``min_return_gap`` is the
    smallest |phi^{k a}(y) - y| over samples and candidates (eps coordinates).
    ``closure`` is the largest |phi^tau(x) - x| of the conjugated flow.
    """

    tau: float
    min_return_gap: float
    closure: float
    n_points: int

    @property
    def passed(self):
        return self.min_return_gap > 1e-8 and self.closure < 1e-8

    def record(self):
        return {"tau": self.tau, "min_return_gap": self.min_return_gap, "closure": self.closure,
                "points": self.n_points, "passed": self.passed}


def period_census(state: ConjugationState, n=64, n_closure=4) -> PeriodCensus:
    """Check that no orbit through S^3 minus the tubes closes before tau = q_j a_j."""
    lo, hi = tube_levels(state.config.tube)
    x = sample_points(4 * n, seed=2000)
    u = x[:, 0] ** 2 + x[:, 1] ** 2
    x = x[(u > lo) & (u < hi)][:n]
    y = state.forward(x)
    q = state.ratio.denominator
    flow = ellipsoid_flow(state.a, state.b)
    k = np.arange(1, q)
    gap = math.inf
    for yy in y:
        ys = flow(k * float(state.a), np.broadcast_to(yy, (len(k), 4)))
        if len(k):
            gap = min(gap, float(np.min(np.linalg.norm(ys - yy, axis=-1))))
    tau = float(q * state.a)
    probe = x[:n_closure]
    closure = float(np.max(np.linalg.norm(conjugated_flow(state, tau, probe) - probe, axis=-1)))
    return PeriodCensus(tau, gap, closure, len(x))


def run_scheme(stages=3, eps=0.2, config: AKConfig | None = None):
    """Run ``stages`` stages and certify the final orbit; returns (state, certificate)."""
    state = initial_state(config)
    for _ in range(stages):
        state = advance_stage(state, eps)
    return state, epsilon_density(state, eps)
