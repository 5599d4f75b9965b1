"""Shared numerical kernel: flow integration, product quadrature, closed-orbit search."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate._ivp import dop853_coefficients as _dop

EPS = np.finfo(float).eps
FD_STEP = EPS ** (1.0 / 3.0)

# Dormand-Prince 8(5,3) tableau; the stepping loop below is our own so that
# batches, projections and exact landing times are supported.
_A = _dop.A[: _dop.N_STAGES, : _dop.N_STAGES]
_B = _dop.B
_C = _dop.C[: _dop.N_STAGES]
_E3 = _dop.E3
_E5 = _dop.E5
_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 10.0

# 2-stage Gauss-Legendre collocation (symplectic, order 4)
_GL_A = np.array([[0.25, 0.25 - math.sqrt(3) / 6], [0.25 + math.sqrt(3) / 6, 0.25]])
_GL_B = np.array([0.5, 0.5])
_GL_C = np.array([0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6])


class IntegratorError(RuntimeError):
    """Raised when a flow cannot be integrated; ``kind`` says why."""

    def __init__(self, kind, message):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "adaptive"
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_step: float = 0.25
    step: float = 1e-2

    def __post_init__(self):
        if self.method not in ("adaptive", "symplectic"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("integrator tolerances must be positive")
        if not (self.max_step > 0 and self.step > 0):
            raise ValueError("max_step and step must be positive")

    def tightened(self, factor=10.0):
        return replace(self, abs_tol=self.abs_tol / factor, rel_tol=self.rel_tol / factor,
                       step=self.step / factor ** 0.25)


@dataclass(frozen=True)
class Trajectory:
    """Sampled solution. ``times`` are elapsed times starting at 0."""

    times: np.ndarray
    points: np.ndarray
    t0: float = 0.0
    direction: float = 1.0
    action_integrals: dict = field(default_factory=dict)

    @property
    def endpoint(self):
        return self.points[-1]

    @property
    def start(self):
        return self.points[0]


def _error_norm(K, h, scale):
    # per-point version of the DOP853 error estimate, reduced by max over the batch
    err5 = np.tensordot(_E5, K, axes=1) / scale
    err3 = np.tensordot(_E3, K, axes=1) / scale
    d = K.shape[-1]
    e5 = np.sum(err5 ** 2, axis=-1)
    e3 = np.sum(err3 ** 2, axis=-1)
    denom = e5 + 0.01 * e3
    with np.errstate(invalid="ignore", divide="ignore"):
        err = np.where(denom > 0, abs(h) * e5 / np.sqrt(denom * d), 0.0)
    return float(np.max(err)) if err.size else 0.0


def _check_finite(arr, t):
    if not np.all(np.isfinite(arr)):
        raise IntegratorError("domain escape", f"non-finite field value near t={t:.6g}")


def _initial_step(field, t, y, f0, direction, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y + h0 * direction * f0
    f1 = np.asarray(field(t + h0 * direction, y1), dtype=float)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    return min(100 * h0, h1, cfg.max_step)


def _adaptive(field, y, t0, t1, cfg, project, t_eval):
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    stops = np.asarray(t_eval, dtype=float) if t_eval is not None else None
    rec_t, rec_y = [0.0], [y.copy()]
    if span == 0:
        return np.array(rec_t), np.array(rec_y)
    t = t0
    f = np.asarray(field(t, y), dtype=float)
    _check_finite(f, t)
    h_abs = _initial_step(field, t, y, f, direction, cfg)
    K = np.empty((_dop.N_STAGES + 1,) + y.shape)
    stop_idx = 0
    while True:
        elapsed = abs(t - t0)
        if elapsed >= span * (1 - 4 * EPS):
            break
        target = span
        if stops is not None:
            while stop_idx < len(stops) and stops[stop_idx] <= elapsed * (1 + 4 * EPS) + 1e-300:
                stop_idx += 1
            if stop_idx < len(stops):
                target = min(span, stops[stop_idx])
        min_step = 10 * abs(np.nextafter(t, direction * np.inf) - t)
        accepted = False
        rejected = False
        while not accepted:
            if h_abs < min_step:
                raise IntegratorError("stiff/blow-up", f"step size underflow at t={t:.6g}")
            h_abs = min(h_abs, cfg.max_step)
            land = False
            if elapsed + h_abs >= target * (1 - 4 * EPS):
                h_abs_try = target - elapsed
                land = True
            else:
                h_abs_try = h_abs
            h = direction * h_abs_try
            K[0] = f
            for s in range(1, _dop.N_STAGES):
                dy = np.tensordot(_A[s, :s], K[:s], axes=1) * h
                K[s] = field(t + _C[s] * h, y + dy)
            y_new = y + h * np.tensordot(_B, K[: _dop.N_STAGES], axes=1)
            f_new = np.asarray(field(t + h, y_new), dtype=float)
            K[-1] = f_new
            _check_finite(K, t)
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = _error_norm(K, h, scale)
            if err < 1:
                factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, _SAFETY * err ** (-1.0 / 8.0))
                if rejected:
                    factor = min(1.0, factor)
                accepted = True
                t = t0 + direction * target if land else t + h
                y = y_new
                if project is not None:
                    y = project(y)
                f = f_new
                if not land:
                    h_abs = h_abs_try * factor
                else:
                    h_abs = max(h_abs, h_abs_try * factor) if not rejected else h_abs
            else:
                h_abs = h_abs_try * max(_MIN_FACTOR, _SAFETY * err ** (-1.0 / 8.0))
                rejected = True
        elapsed = abs(t - t0)
        if stops is None or (stop_idx < len(stops) and abs(elapsed - stops[stop_idx]) <= 4 * EPS * max(1.0, span)) \
                or elapsed >= span * (1 - 4 * EPS):
            rec_t.append(elapsed)
            rec_y.append(y.copy())
    return np.array(rec_t), np.array(rec_y)


def _gauss_step(field, t, y, h, tol=1e-15, max_iter=50):
    k = np.stack([field(t + c * h, y) for c in _GL_C])
    for _ in range(max_iter):
        k_new = np.stack([field(t + _GL_C[i] * h, y + h * np.tensordot(_GL_A[i], k, axes=1))
                          for i in range(2)])
        delta = np.max(np.abs(k_new - k)) * abs(h)
        k = k_new
        if delta <= tol * max(1.0, np.max(np.abs(y))):
            break
    return y + h * np.tensordot(_GL_B, k, axes=1)


def _symplectic(field, y, t0, t1, cfg, project, t_eval):
    direction = 1.0 if t1 >= t0 else -1.0
    span = abs(t1 - t0)
    n = max(1, int(math.ceil(span / cfg.step - 1e-9)))
    h = direction * span / n
    rec_t, rec_y = [0.0], [y.copy()]
    stops = set()
    if t_eval is not None:
        stops = {int(round(s / abs(h))) for s in t_eval}
    t = t0
    for i in range(1, n + 1):
        y = _gauss_step(field, t, y, h)
        _check_finite(y, t)
        if project is not None:
            y = project(y)
        t = t0 + i * h
        if t_eval is None or i in stops or i == n:
            rec_t.append(i * abs(h))
            rec_y.append(y.copy())
    return np.array(rec_t), np.array(rec_y)


def integrate_flow(field: Callable, x0, t_end: float, cfg: IntegratorConfig | None = None, *,
                   t0: float = 0.0, project: Callable | None = None, t_eval=None) -> Trajectory:
    """Integrate ``dx/dt = field(t, x)`` from ``t0`` to ``t_end``.

    ``x0`` may carry a leading batch axis; all points share the step sequence.
    ``t_eval`` lists elapsed times (increasing, positive) that are hit exactly;
    without it every accepted step is recorded.
    """
    cfg = cfg or IntegratorConfig()
    y = np.array(x0, dtype=float)
    if cfg.method == "adaptive":
        times, pts = _adaptive(field, y, float(t0), float(t_end), cfg, project, t_eval)
    else:
        times, pts = _symplectic(field, y, float(t0), float(t_end), cfg, project, t_eval)
    return Trajectory(times=times, points=pts, t0=float(t0), direction=1.0 if t_end >= t0 else -1.0)


def normalize(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def flow_between(field, x0, t_start, t_stop, cfg=None, project=None):
    """Endpoints of the time-dependent flow from per-point ``t_start`` to ``t_stop``.

    Uses the rescaled time s in [0, 1] so that a whole batch with different
    start and stop times is one integration.
    """
    x0 = np.asarray(x0, dtype=float)
    ts = np.broadcast_to(np.asarray(t_start, dtype=float), x0.shape[:-1])
    te = np.broadcast_to(np.asarray(t_stop, dtype=float), x0.shape[:-1])
    span = (te - ts)[..., None]

    def rescaled(s, x):
        return span * field(ts + (te - ts) * s, x)

    return integrate_flow(rescaled, x0, 1.0, cfg, project=project, t_eval=[1.0]).endpoint


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    domain: str
    measure: float
    shape: tuple = ()

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if abs(self.weights.sum() - self.measure) > 1e-12 * max(1.0, self.measure):
            raise ValueError("quadrature weights do not sum to the domain measure")


def quadrature(fn, rule: QuadratureRule) -> float:
    values = fn(rule.nodes) if callable(fn) else np.asarray(fn)
    return float(np.dot(rule.weights, np.ravel(values)))


def _panel_legendre(n, a, b, panels=1, grade=1.0):
    """Composite Gauss-Legendre on [a, b]; ``grade`` > 1 clusters panels toward b."""
    x, w = leggauss(n)
    edges = a + (b - a) * (1 - (1 - np.linspace(0, 1, panels + 1)) ** grade)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def hopf_point(u, theta, phi):
    """Point e^{i theta}(sqrt(u), sqrt(1-u) e^{i phi}) of S^3 as a real 4-vector."""
    u, theta, phi = np.broadcast_arrays(u, theta, phi)
    r1, r2 = np.sqrt(u), np.sqrt(np.clip(1 - u, 0, None))
    return np.stack([r1 * np.cos(theta), r1 * np.sin(theta),
                     r2 * np.cos(theta + phi), r2 * np.sin(theta + phi)], axis=-1)


def hopf_coordinates(x):
    """Inverse of :func:`hopf_point` (u, theta, phi) for unit vectors."""
    z1 = x[..., 0] + 1j * x[..., 1]
    z2 = x[..., 2] + 1j * x[..., 3]
    u = np.abs(z1) ** 2 / (np.abs(z1) ** 2 + np.abs(z2) ** 2)
    return u, np.angle(z1), np.angle(z2) - np.angle(z1)


def hopf_map(x):
    """Hopf projection S^3 -> S^2 in R^3."""
    z1 = x[..., 0] + 1j * x[..., 1]
    z2 = x[..., 2] + 1j * x[..., 3]
    w = 2 * np.conj(z1) * z2
    return np.stack([w.real, w.imag, np.abs(z1) ** 2 - np.abs(z2) ** 2], axis=-1)


def s3_rule(n_u=32, n_phi=32, n_fiber=32, panels=1, u_range=None, grade=1.0) -> QuadratureRule:
    """Hopf product rule on S^3 for the measure alpha_0 ^ d alpha_0 (total pi^2).

    Nodes are ordered with shape (n_u*panels, n_phi, n_fiber); the last axis
    runs along the alpha_0 Reeb fiber, so fiber means are plain axis means.
    ``u_range`` restricts the Legendre panels to a sub-interval of [0, 1] and
    fills the rest with a single coarse panel.
    """
    if u_range is None:
        u, wu = _panel_legendre(n_u, 0.0, 1.0, panels, grade)
    else:
        lo, hi = u_range
        parts = []
        if lo > 0:
            parts.append(_panel_legendre(8, 0.0, lo))
        parts.append(_panel_legendre(n_u, lo, hi, panels, grade))
        if hi < 1:
            parts.append(_panel_legendre(8, hi, 1.0))
        u = np.concatenate([p[0] for p in parts])
        wu = np.concatenate([p[1] for p in parts])
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    theta = 2 * np.pi * np.arange(n_fiber) / n_fiber
    U, P, T = np.meshgrid(u, phi, theta, indexing="ij")
    nodes = hopf_point(U, T, P).reshape(-1, 4)
    weights = (0.25 * wu[:, None, None] * (2 * np.pi / n_phi) * (2 * np.pi / n_fiber)
               * np.ones_like(U)).reshape(-1)
    return QuadratureRule(nodes, weights, "S3", math.pi ** 2, (len(u), n_phi, n_fiber))


def sphere_rule(n, order=12) -> QuadratureRule:
    """Rule on S^{2n-1} for alpha_0 ^ d alpha_0^{n-1} (total pi^n).

    The moment map pushes this measure to (n-1)!/2^n times Lebesgue on the
    simplex, with independent uniform angles.
    """
    if n == 2:
        return s3_rule(order, order, order)
    if n == 1:
        th = 2 * np.pi * np.arange(order) / order
        return QuadratureRule(np.stack([np.cos(th), np.sin(th)], -1), np.full(order, math.pi / order),
                              "S1", math.pi)
    # collapsed coordinates on the simplex: u_j = x_j * prod_{i<j} (1 - x_i)
    x, w = leggauss(order)
    x, w = 0.5 * (x + 1), 0.5 * w
    X = np.array(list(itertools.product(x, repeat=n - 1)))
    W = np.prod(np.array(list(itertools.product(w, repeat=n - 1))), axis=1)
    u = np.empty((len(X), n))
    rem = np.ones(len(X))
    for j in range(n - 1):
        u[:, j] = rem * X[:, j]
        W = W * rem if j > 0 else W
        rem = rem * (1 - X[:, j])
    u[:, n - 1] = rem
    n_ang = max(4, order // 2)
    ang = 2 * np.pi * np.arange(n_ang) / n_ang
    angles = np.array(list(itertools.product(ang, repeat=n)))
    z = np.sqrt(u)[:, None, :] * np.exp(1j * angles[None, :, :])
    nodes = np.stack([z.real, z.imag], axis=-1).reshape(len(u) * len(angles), 2 * n)
    const = math.factorial(n - 1) / 2 ** n
    weights = (const * W[:, None] * (2 * np.pi / n_ang) ** n * np.ones((1, len(angles)))).reshape(-1)
    return QuadratureRule(nodes, weights, f"S{2 * n - 1}", math.pi ** n)


def disk_rule(n_r=32, n_theta=64, radius=1.0, panels=1) -> QuadratureRule:
    """Polar rule on the disk of given radius, Lebesgue measure; nodes are complex."""
    rho, wr = _panel_legendre(n_r, 0.0, radius ** 2, panels)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    R, T = np.meshgrid(rho, th, indexing="ij")
    nodes = (np.sqrt(R) * np.exp(1j * T)).reshape(-1)
    weights = (0.5 * wr[:, None] * (2 * np.pi / n_theta) * np.ones_like(R)).reshape(-1)
    return QuadratureRule(nodes, weights, "disk", math.pi * radius ** 2, (len(rho), n_theta))


def torus_disk_rule(n_t=32, n_r=32, n_theta=64, radius=1.0, panels=1) -> QuadratureRule:
    """Rule on T x disk for dt ^ omega; nodes are (t, w) pairs stored as complex t + 0j, w."""
    d = disk_rule(n_r, n_theta, radius, panels)
    t = np.arange(n_t) / n_t
    nodes = np.stack([np.repeat(t, len(d.nodes)).astype(complex), np.tile(d.nodes, n_t)], axis=-1)
    weights = np.repeat(np.full(n_t, 1.0 / n_t), len(d.nodes)) * np.tile(d.weights, n_t)
    return QuadratureRule(nodes, weights, "torus x disk", d.measure, (n_t,) + d.shape)


# ------------------------------------------------------------ derivatives

def fd_gradient(fn, x, scale=1.0, order=2):
    """Central-difference gradient of a batched scalar function of R^d points."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    h = (FD_STEP if order == 2 else EPS ** 0.2) * scale
    grad = np.empty_like(x)
    for i in range(d):
        e = np.zeros(d)
        e[i] = h
        if order == 2:
            grad[..., i] = (fn(x + e) - fn(x - e)) / (2 * h)
        else:
            grad[..., i] = (8 * (fn(x + e) - fn(x - e)) - (fn(x + 2 * e) - fn(x - 2 * e))) / (12 * h)
    return grad


def fd_jacobian(fn, x, h=1e-6):
    """Jacobian of a map R^d -> R^d at a single point; all 2d evaluations batched."""
    x = np.asarray(x, dtype=float)
    d = x.size
    pert = np.concatenate([x + h * np.eye(d), x - h * np.eye(d)])
    out = fn(pert)
    return ((out[:d] - out[d:]) / (2 * h)).T


J0 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def symplectic_defect(jac):
    """max |J^T J0 J - J0| for a 2m x 2m Jacobian in (x1, y1, ..., xm, ym) order."""
    m = jac.shape[0] // 2
    big = np.kron(np.eye(m), J0)
    return float(np.max(np.abs(jac.T @ big @ jac - big)))


def bisect_roots(fn, lo, hi, tol=1e-13, max_iter=200):
    """Vectorised safeguarded bisection for increasing ``fn`` with fn(lo) < 0 < fn(hi)."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    flo, fhi = fn(lo), fn(hi)
    if np.any(flo > 0) or np.any(fhi < 0):
        raise ValueError("root not bracketed")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        below = fm < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) < tol:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------- closed orbits

class FlowMap:
    """Time-t map of an autonomous field (or a closed-form flow)."""

    def __init__(self, field=None, cfg=None, project=None, exact=None):
        if field is None and exact is None:
            raise ValueError("need a field or a closed-form flow")
        self.field = field
        self.cfg = cfg or IntegratorConfig()
        self.project = project
        self.exact = exact

    def __call__(self, t, x):
        if self.exact is not None:
            return self.exact(t, x)
        return integrate_flow(self.field, x, t, self.cfg, project=self.project, t_eval=[abs(t)]).endpoint

    def velocity(self, x):
        if self.field is not None:
            return self.field(0.0, x)
        h = 1e-6
        return (self.exact(h, x) - self.exact(-h, x)) / (2 * h)

    def sample(self, t_end, x, n):
        times = np.linspace(0, t_end, n + 1)[1:]
        if self.exact is not None:
            return np.concatenate([[0.0], times]), np.stack([x] + [self.exact(t, x) for t in times])
        traj = integrate_flow(self.field, x, t_end, self.cfg, project=self.project, t_eval=times)
        return traj.times, traj.points

    def tightened(self, factor=10.0):
        return FlowMap(self.field, self.cfg.tightened(factor), self.project, self.exact)


@dataclass(frozen=True)
class ClosedOrbit:
    point: np.ndarray
    period: float
    residual: float


def _newton_orbit(flow, x, T, tol, max_iter, h=1e-7):
    d = x.size
    v0 = flow.velocity(x)
    best = None
    for _ in range(max_iter):
        # evaluate x and FD perturbations in a single batched call
        pert = np.concatenate([x[None], x + h * np.eye(d), x - h * np.eye(d)])
        out = flow(T, pert)
        r = out[0] - x
        res = float(np.linalg.norm(r))
        if best is None or res < best[2]:
            best = (x.copy(), T, res)
        if res < tol / 10:
            break
        J = ((out[1:d + 1] - out[d + 1:]) / (2 * h)).T - np.eye(d)
        vT = flow.velocity(out[0])
        M = np.vstack([np.column_stack([J, vT]), np.append(v0, 0.0)])
        rhs = np.append(-r, 0.0)
        step = np.linalg.lstsq(M, rhs, rcond=1e-12)[0]
        x = x + step[:d]
        if flow.project is not None:
            x = flow.project(x)
        T = T + step[d]
        if not np.isfinite(T) or T <= 0:
            return best
        if np.linalg.norm(step) < 1e-15:
            break
    return best


def _section_seed(flow, seed, lo, hi, n=400):
    v = flow.velocity(seed)
    times, pts = flow.sample(hi, seed, n)
    s = (pts - seed) @ v
    dist = np.linalg.norm(pts - seed, axis=-1)
    best = None
    for i in range(1, len(times) - 1):
        if times[i + 1] < lo:
            continue
        if s[i] < 0 <= s[i + 1]:
            ta, tb = times[i], times[i + 1]
            fa, fb = s[i], s[i + 1]
            for _ in range(60):
                tm = 0.5 * (ta + tb)
                fm = float((flow(tm, seed) - seed) @ v)
                if fm < 0:
                    ta, fa = tm, fm
                else:
                    tb, fb = tm, fm
                if tb - ta < 1e-13:
                    break
            cand = (0.5 * (ta + tb), dist[i])
            if best is None or cand[1] < best[1]:
                best = cand
    return None if best is None else best[0]


def first_return_time(flow: FlowMap, x, lo: float, hi: float, n: int = 400, near: float = 0.1):
    """First time in [lo, hi] at which the orbit of x crosses the hyperplane through x normal
    to the velocity while within ``near`` (relative to the orbit diameter) of x; None if none."""
    x = np.asarray(x, dtype=float)
    v = flow.velocity(x)
    times, pts = flow.sample(hi, x, n)
    s = (pts - x) @ v
    dist = np.linalg.norm(pts - x, axis=-1)
    scale = near * max(float(dist.max()), 1e-300)
    for i in range(1, len(times) - 1):
        if times[i + 1] < lo or not (s[i] < 0 <= s[i + 1]) or min(dist[i], dist[i + 1]) > scale:
            continue
        ta, tb = times[i], times[i + 1]
        for _ in range(80):
            tm = 0.5 * (ta + tb)
            if float((flow(tm, x) - x) @ v) < 0:
                ta = tm
            else:
                tb = tm
            if tb - ta < 1e-14 * max(1.0, tb):
                break
        t = 0.5 * (ta + tb)
        if lo <= t <= hi:
            return t
    return None


def find_closed_orbit(flow: FlowMap, seed, period_guess: float, tol: float = 1e-9, *,
                      max_iter: int = 25, min_displacement: float = 1e-6, max_divisor: int = 6):
    """Closed orbit near ``seed`` with period in [guess/2, 2*guess], or None.

    Newton on the return map with the period as an unknown; if that does not
    close, the period is re-seeded from crossings of a transverse section.
    A returned orbit is re-integrated at ten times tighter tolerance and must
    still close within ``tol``.
    """
    seed = np.asarray(seed, dtype=float)
    lo, hi = period_guess / 2, 2 * period_guess
    cand = _newton_orbit(flow, seed, period_guess, tol, max_iter)
    if cand is None or cand[2] >= tol or not lo <= cand[1] <= hi:
        t_sec = _section_seed(flow, seed, lo, hi)
        if t_sec is None:
            return None
        cand = _newton_orbit(flow, seed, t_sec, tol, max_iter)
        if cand is None or cand[2] >= tol:
            return None
    x, T, _ = cand
    # minimal period filter: reject stationary points, reduce multiple covers
    times, pts = flow.sample(T, x, 64)
    if np.max(np.linalg.norm(pts - x, axis=-1)) < min_displacement:
        return None
    for k in range(max_divisor, 1, -1):
        if np.linalg.norm(flow(T / k, x) - x) < tol:
            T = T / k
            break
    if not lo <= T <= hi:
        return None
    residual = float(np.linalg.norm(flow.tightened(10.0)(T, x) - x))
    if residual >= tol:
        return None
    return ClosedOrbit(point=x, period=float(T), residual=residual)
