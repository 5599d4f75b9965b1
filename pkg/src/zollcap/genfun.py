"""Generating functions of near-identity symplectic maps of C^m.

A map phi is encoded by S with  i (z - phi(z)) = grad S((z + phi(z)) / 2).
Gradients of functions on C^m are complex vectors dS/dx + i dS/dy.

Flows follow w' = -i grad H. With this convention the generating functions
S_t of the isotopy phi_H^t satisfy  dS_t/dt (u) = -H(t, u + (i/2) grad S_t(u))
and S equals minus the action at a fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import NdBSpline, make_interp_spline

from .lift import TimePeriodicHamiltonian, disk_map
from .numerics import IntegratorConfig, flow_between


class NotNearIdentityError(ValueError):
    pass


class ThresholdExceeded(ValueError):
    pass


def _as_points(z, m):
    z = np.asarray(z, dtype=complex)
    if m == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
    return z


def c2_norm(fn, m=1, radius=1.0, n=25, h=1e-3):
    """max of |f|, |grad f| and |second differences| on a square grid (C^2 size)."""
    x = np.linspace(-radius, radius, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    pts = np.zeros(X.shape + (m,), dtype=complex)
    pts[..., 0] = X + 1j * Y
    f0 = fn(pts)
    norm = float(np.max(np.abs(f0)))
    for d in range(m):
        for e in (1.0, 1j):
            step = np.zeros(m, dtype=complex)
            step[d] = h * e
            fp, fm = fn(pts + step), fn(pts - step)
            norm = max(norm, float(np.max(np.abs(fp - fm))) / (2 * h),
                       float(np.max(np.abs(fp - 2 * f0 + fm))) / h ** 2)
    return norm


class GeneratingFunction:
    """Scalar S on C^m, with gradient (analytic or central differences)."""

    def __init__(self, value, gradient=None, m=1, support_radius=math.inf, c2_threshold=1.0,
                 measure_radius=None):
        self._value = value
        self._grad = gradient
        self.m = m
        self.support_radius = support_radius
        self.c2_threshold = c2_threshold
        self._measure_radius = measure_radius or (support_radius if math.isfinite(support_radius) else 1.0)
        self._c2 = None

    @property
    def c2(self):
        """Sampled C^2 size, measured on first use."""
        if self._c2 is None:
            self._c2 = c2_norm(self, self.m, self._measure_radius, n=9)
        return self._c2

    def __call__(self, u):
        u = _as_points(u, self.m)
        return self._value(u)

    def grad(self, u):
        u = _as_points(u, self.m)
        if self._grad is not None:
            return self._grad(u)
        h = 6e-6 * max(1.0, float(np.max(np.abs(u))) if u.size else 1.0)
        g = np.zeros(u.shape, dtype=complex)
        for d in range(self.m):
            for e in (1.0, 1j):
                step = np.zeros(self.m, dtype=complex)
                step[d] = h * e
                g[..., d] += e * (self._value(u + step) - self._value(u - step)) / (2 * h)
        return g


def quadratic_generating_function(c, m=1):
    """S(z) = c |z|^2; generates the rotation by 2 arctan(c) near the origin."""
    return GeneratingFunction(lambda u: c * np.sum(np.abs(u) ** 2, axis=-1), lambda u: 2 * c * u, m)


def rotation(theta):
    return lambda z: np.exp(1j * theta) * np.asarray(z, dtype=complex)


def invert_midpoint(phi, u, tol=1e-15, max_iter=200):
    """z with (z + phi(z))/2 = u, by the fixed-point iteration z <- u - (phi(z) - z)/2."""
    u = np.asarray(u, dtype=complex)
    z = u.copy()
    prev = math.inf
    for _ in range(max_iter):
        pz = phi(z)
        new = u - 0.5 * (pz - z)
        delta = float(np.max(np.abs(new - z))) if z.size else 0.0
        z = new
        if not math.isfinite(delta) or delta > 10 * prev + 1e-6:
            raise NotNearIdentityError("midpoint map is not invertible here (iteration diverged)")
        if delta <= tol * max(1.0, float(np.max(np.abs(u)))):
            break
        if delta < 1e-11 and delta > 0.5 * prev:
            # stalled at the noise level of phi itself
            break
        prev = delta
    else:
        raise NotNearIdentityError("midpoint inversion did not converge")
    return z, phi(z)


def implicit_gradient(phi, u):
    """grad S(u) = i (z - phi(z)) where u is the midpoint of z and phi(z)."""
    z, pz = invert_midpoint(phi, u)
    return 1j * (z - pz)


def generating_function_of(phi, m=1, support_radius=None, basepoint=None, path="straight",
                           n_path=24, panels=2) -> GeneratingFunction:
    """Reconstruct S by integrating the implicitly defined gradient along paths.

    The path starts where S is known to vanish: outside ``support_radius``
    (radially) or at ``basepoint`` where S = 0 is imposed. ``path`` is
    "straight" or "axis" (coordinate-by-coordinate polyline).
    """
    x, w = leggauss(n_path)
    s = np.concatenate([(x + 1 + 2 * p) / (2 * panels) for p in range(panels)])
    ws = np.concatenate([w / (2 * panels)] * panels)

    def start(u):
        if support_radius is not None:
            r = np.linalg.norm(u, axis=-1, keepdims=True)
            safe = np.where(r > 0, r, 1.0)
            direction = np.where(r > 0, u / safe, 1.0 + 0j)
            return direction * support_radius * 1.0001
        b = np.zeros(m, dtype=complex) if basepoint is None else np.asarray(basepoint, dtype=complex)
        return np.broadcast_to(b, u.shape)

    def segments(a, b):
        if path == "straight":
            return [(a, b)]
        pts = [a]
        cur = a.copy()
        for d in range(m):
            for part in ("real", "imag"):
                nxt = cur.copy()
                if part == "real":
                    nxt[..., d] = b[..., d].real + 1j * cur[..., d].imag
                else:
                    nxt[..., d] = b[..., d]
                pts.append(nxt)
                cur = nxt
        return list(zip(pts[:-1], pts[1:]))

    def value(u):
        u = np.asarray(u, dtype=complex)
        b = start(u)
        total = np.zeros(u.shape[:-1])
        for a0, a1 in segments(np.array(b), u):
            nodes = a0[None] + s.reshape((-1,) + (1,) * a0.ndim) * (a1 - a0)[None]
            g = implicit_gradient(phi, nodes)
            integrand = np.sum(np.real(np.conj(g) * (a1 - a0)[None]), axis=-1)
            total = total + np.tensordot(ws, integrand, axes=1)
        if support_radius is not None:
            total = np.where(np.linalg.norm(u, axis=-1) >= support_radius, 0.0, total)
        return total

    return GeneratingFunction(value, None, m, support_radius if support_radius else math.inf)


def map_of_generating_function(S: GeneratingFunction, tol=1e-15, max_iter=200):
    """Evaluator of the map encoded by S: solve u = z + (i/2) grad S(u), then phi = 2u - z."""
    if S.c2 >= S.c2_threshold:
        raise ThresholdExceeded(f"C^2 size {S.c2:.3g} exceeds threshold {S.c2_threshold}")

    def phi(z):
        z = _as_points(z, S.m)
        u = z.copy()
        prev = math.inf
        for _ in range(max_iter):
            new = z + 0.5j * S.grad(u)
            delta = float(np.max(np.abs(new - u))) if u.size else 0.0
            u = new
            if not math.isfinite(delta) or delta > 10 * prev + 1e-6:
                raise ThresholdExceeded("Newton iteration for the midpoint diverged")
            if delta <= tol * max(1.0, float(np.max(np.abs(z)))):
                break
            if delta < 1e-11 and delta > 0.5 * prev:
                # stalled at the noise level of grad S
                break
            prev = delta
        else:
            raise ThresholdExceeded("midpoint iteration did not converge")
        return 2 * u - z

    return phi


def genfun_residual(S: GeneratingFunction, phi, grid) -> float:
    """max over grid of |i (z - phi(z)) - grad S((z + phi(z))/2)|."""
    z = _as_points(grid, S.m)
    pz = phi(z)
    return float(np.max(np.abs(1j * (z - pz) - S.grad(0.5 * (z + pz)))))


def newton_zeros(fn, seeds, m=1, tol=1e-12, max_iter=50, h=1e-7, dedupe=1e-7):
    """Zeros of a C^m-valued function from many seeds; duplicates merged."""
    found = []
    for z in _as_points(seeds, m).reshape(-1, m):
        x = np.concatenate([z.real, z.imag])

        def F(v):
            val = fn(v[:m] + 1j * v[m:])
            return np.concatenate([np.real(val), np.imag(val)])

        ok = False
        for _ in range(max_iter):
            r = F(x)
            if np.linalg.norm(r) < tol:
                ok = True
                break
            J = np.column_stack([(F(x + h * e) - F(x - h * e)) / (2 * h) for e in np.eye(2 * m)])
            try:
                x = x - np.linalg.solve(J, r)
            except np.linalg.LinAlgError:
                break
        if ok:
            zz = x[:m] + 1j * x[m:]
            if not any(np.linalg.norm(zz - f) < dedupe for f in found):
                found.append(zz)
    return found


def critical_points(S: GeneratingFunction, seeds):
    return newton_zeros(lambda u: S.grad(u[None])[0], seeds, S.m)


def fixed_points(phi, seeds, m=1):
    return newton_zeros(lambda z: phi(z[None])[0] - z, seeds, m)


# -------------------------------------------- families from Hamiltonian flows

def _flow_with_action(H: TimePeriodicHamiltonian, z, t, cfg):
    """phi_H^t(z) and the action integral over [0, t], per point times."""
    base = H.field()

    def augmented(s, X):
        v = base(s, X[..., :2])
        w = X[..., 0] + 1j * X[..., 1]
        dl = 0.5 * (X[..., 0] * v[..., 1] - X[..., 1] * v[..., 0])
        return np.concatenate([v, (dl + H(s, w))[..., None]], axis=-1)

    z = np.asarray(z, dtype=complex)
    X0 = np.stack([z.real, z.imag, np.zeros(z.shape)], axis=-1)
    out = flow_between(augmented, X0, np.zeros(z.shape), t, cfg)
    return out[..., 0] + 1j * out[..., 1], out[..., 2]


class FlowGeneratingFamily:
    """S_t generating phi_H^t on C (m = 1), evaluated through the flow itself.

    S_t(u) = -A_t(z) + Im(conj(z) phi(z)) / 2, where u is the midpoint of z and
    phi_H^t(z) and A_t is the action of the path from z.
    """

    def __init__(self, H: TimePeriodicHamiltonian, cfg: IntegratorConfig | None = None):
        self.H = H
        self.cfg = cfg or IntegratorConfig(abs_tol=1e-13, rel_tol=1e-13)
        self.m = 1

    def _solve(self, t, u):
        u = np.asarray(u, dtype=complex)
        t = np.broadcast_to(np.asarray(t, float), u.shape)
        return invert_midpoint(lambda z: disk_map(self.H, z, 0.0, t, self.cfg), u, tol=1e-14)

    def value(self, t, u):
        u = np.asarray(u, dtype=complex)
        t = np.broadcast_to(np.asarray(t, float), u.shape)
        z, _ = self._solve(t, u)
        pz, act = _flow_with_action(self.H, z, t, self.cfg)
        return -act + 0.5 * np.imag(np.conj(z) * pz)

    def grad(self, t, u):
        z, pz = self._solve(t, u)
        return 1j * (z - pz)

    def at(self, t) -> GeneratingFunction:
        return GeneratingFunction(lambda u: self.value(t, u[..., 0]),
                                  lambda u: self.grad(t, u[..., 0])[..., None], 1,
                                  self.H.support_radius, measure_radius=self.H.support_radius)


def hj_residual(family, H, times, grid, h=1e-3) -> float:
    """max |dS_t/dt(u) + H(t, u + (i/2) grad S_t(u))| over times x grid (fourth-order d/dt)."""
    grid = np.asarray(grid, dtype=complex).ravel()
    worst = 0.0
    for t in times:
        T = np.full(grid.shape, float(t))
        ts = [T + k * h for k in (-2, -1, 1, 2)]
        v = [family.value(tt, grid) for tt in ts]
        dS = (v[0] - 8 * v[1] + 8 * v[2] - v[3]) / (12 * h)
        w = grid + 0.5j * family.grad(T, grid)
        worst = max(worst, float(np.max(np.abs(dS + H(T, w)))))
    return worst


@dataclass(frozen=True)
class AnalyticFamily:
    """S_t given in closed form with value(t, u), grad(t, u)."""

    value: object
    grad: object


def rotation_family(theta):
    """S_t = tan(theta t / 2) |u|^2, generated by H = -(theta/2)|w|^2."""
    return AnalyticFamily(lambda t, u: np.tan(theta * t / 2) * np.abs(u) ** 2,
                          lambda t, u: 2 * np.tan(theta * t / 2) * u)


# --------------------------------------------------------------- smooth steps

def _psi(x, nu=0):
    x = np.asarray(x, dtype=float)
    # exp(-1/x) underflows to zero below 1/750; masking there keeps e/x^k finite
    pos = x > 1 / 750
    xs = np.where(pos, x, 1.0)
    e = np.where(pos, np.exp(-1 / xs), 0.0)
    if nu == 0:
        return e
    if nu == 1:
        return np.where(pos, e / xs ** 2, 0.0)
    return np.where(pos, e * (1 - 2 * xs) / xs ** 4, 0.0)


def smoothstep(x, nu=0):
    """exp(-1/x) based step: 0 for x <= 0, 1 for x >= 1, with derivatives nu = 0, 1, 2."""
    a, b = _psi(x), _psi(1 - np.asarray(x, float))
    D = a + b
    if nu == 0:
        return a / D
    a1, b1 = _psi(x, 1), -_psi(1 - np.asarray(x, float), 1)
    D1 = a1 + b1
    if nu == 1:
        return (a1 * D - a * D1) / D ** 2
    a2, b2 = _psi(x, 2), _psi(1 - np.asarray(x, float), 2)
    D2 = a2 + b2
    return (a2 * D - a * D2) / D ** 2 - 2 * D1 * (a1 * D - a * D1) / D ** 3


def time_step(t, nu=0, flat=0.1):
    """eta: 0 on [0, flat], 1 on [1 - flat, 1], monotone in between."""
    span = 1 - 2 * flat
    return smoothstep((np.asarray(t, float) - flat) / span, nu) / span ** nu


def radial_cutoff(rho, r, nu=0):
    """1 on [0, r/3], 0 beyond 2r/3."""
    x = (np.asarray(rho, float) - r / 3) / (r / 3)
    sign = -1.0 if nu else 1.0
    base = smoothstep(x, nu) * sign / (r / 3) ** nu
    return 1 - base if nu == 0 else base


# --------------------------------------------------------------- flattening

class TabulatedFamily:
    """Quintic tensor-product spline of (t, x, y) -> S_t(x + iy) on a box."""

    def __init__(self, times, xs, values, k=5):
        coeffs = values
        knots = []
        for axis, grid in enumerate((times, xs, xs)):
            spl = make_interp_spline(grid, coeffs, k=k, axis=axis)
            coeffs = np.moveaxis(spl.c, 0, axis)
            knots.append(spl.t)
        self.spline = NdBSpline(tuple(knots), coeffs, k)
        self.box = float(xs[-1])

    def __call__(self, t, u, nu=(0, 0, 0)):
        t, u = np.broadcast_arrays(np.asarray(t, float), np.asarray(u, complex))
        pts = np.stack([t, u.real, u.imag], axis=-1)
        return self.spline(pts.reshape(-1, 3), nu=nu).reshape(t.shape)


def tabulate_family(H, n_t=33, n_x=49, box=None, cfg=None):
    """Generating functions S_t of phi_H^t on a (t, x, y) grid, then splined."""
    box = box or H.support_radius * 1.05
    fam = FlowGeneratingFamily(H, cfg)
    ts = np.linspace(0, 1, n_t)
    xs = np.linspace(-box, box, n_x)
    T, X, Y = np.meshgrid(ts, xs, xs, indexing="ij")
    U = X + 1j * Y
    vals = np.zeros(T.shape)
    inside = np.abs(U) < H.support_radius * 1.02
    vals[inside] = fam.value(T[inside], U[inside])
    return TabulatedFamily(ts, xs, vals)


@dataclass
class FlattenReport:
    checks: dict
    measured: dict
    lambdas: list = field(default_factory=list)

    @property
    def passed(self):
        return all(self.checks.values())


class FlattenedFamily:
    """H^lambda from S^lambda_t = S^0_t + lambda chi (eta(t) S^0_1 - S^0_t).

    The Hamilton-Jacobi Hamiltonian of the splined family is corrected by
    the defect of the unmodified family, so H^0 = H and H^lambda = H
    wherever the cut-off vanishes, exactly.
    """

    def __init__(self, H, r, table: TabulatedFamily):
        self.H = H
        self.r = r
        self.table = table

    def _parts(self, t, u, lam):
        S = self.table
        one = np.ones_like(t)
        s0, st = S(t, u), S(t, u, (1, 0, 0))
        g0 = np.stack([S(t, u, (0, 1, 0)), S(t, u, (0, 0, 1))], -1)
        gt = np.stack([S(t, u, (1, 1, 0)), S(t, u, (1, 0, 1))], -1)
        h0 = np.stack([S(t, u, (0, 2, 0)), S(t, u, (0, 1, 1)), S(t, u, (0, 0, 2))], -1)
        p = S(one, u)
        gp = np.stack([S(one, u, (0, 1, 0)), S(one, u, (0, 0, 1))], -1)
        hp = np.stack([S(one, u, (0, 2, 0)), S(one, u, (0, 1, 1)), S(one, u, (0, 0, 2))], -1)
        rho = np.abs(u)
        c, c1, c2 = (radial_cutoff(rho, self.r, k) for k in range(3))
        e, e1 = time_step(t), time_step(t, 1)
        unit = np.stack([u.real, u.imag], -1) / np.where(rho > 0, rho, 1.0)[..., None]
        dchi = c1[..., None] * unit
        inv = np.where(rho > 0, 1 / np.where(rho > 0, rho, 1.0), 0.0)
        uu = np.stack([unit[..., 0] ** 2, unit[..., 0] * unit[..., 1], unit[..., 1] ** 2], -1)
        iden = np.array([1.0, 0.0, 1.0])
        hchi = c2[..., None] * uu + (c1 * inv)[..., None] * (iden - uu)
        L = lam * c
        val_t = (1 - L) * st + L * e1 * p
        grad = ((1 - L)[..., None] * g0 - lam * s0[..., None] * dchi
                + lam * e[..., None] * (c[..., None] * gp + p[..., None] * dchi))

        def sym(a, b):
            return np.stack([2 * a[..., 0] * b[..., 0], a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0],
                             2 * a[..., 1] * b[..., 1]], -1)

        hess = ((1 - L)[..., None] * h0 - lam * sym(dchi, g0) - lam * s0[..., None] * hchi
                + lam * e[..., None] * (c[..., None] * hp + sym(dchi, gp) + p[..., None] * hchi))
        grad_t = ((1 - L)[..., None] * gt - lam * st[..., None] * dchi
                  + lam * e1[..., None] * (c[..., None] * gp + p[..., None] * dchi))
        return val_t, grad, hess, grad_t

    def raw(self, t, w, lam, with_grad=False):
        """-dS/dt at the u solving u + (i/2) grad S(u) = w, plus its w-gradient."""
        t, w = np.broadcast_arrays(np.asarray(t, float), np.asarray(w, complex))
        u = w.copy()
        for _ in range(30):
            _, g, hs, _ = self._parts(t, u, lam)
            theta = u + 0.5j * (g[..., 0] + 1j * g[..., 1]) - w
            # D theta = I + J Hess / 2, J(a, b) = (-b, a)
            a = 1 - 0.5 * hs[..., 1]
            b = -0.5 * hs[..., 2]
            c = 0.5 * hs[..., 0]
            d = 1 + 0.5 * hs[..., 1]
            det = a * d - b * c
            rx, ry = theta.real, theta.imag
            du = ((d * rx - b * ry) + 1j * (-c * rx + a * ry)) / det
            u = u - du
            if np.max(np.abs(du)) < 1e-16:
                break
        vt, g, hs, gt = self._parts(t, u, lam)
        val = -vt
        if not with_grad:
            return val
        a = 1 - 0.5 * hs[..., 1]
        b = -0.5 * hs[..., 2]
        c = 0.5 * hs[..., 0]
        d = 1 + 0.5 * hs[..., 1]
        det = a * d - b * c
        # grad_w H = -(D theta)^{-T} grad_u dS/dt
        gx, gy = -gt[..., 0], -gt[..., 1]
        hx = (d * gx - c * gy) / det
        hy = (-b * gx + a * gy) / det
        return val, hx + 1j * hy

    def member(self, lam) -> TimePeriodicHamiltonian:
        H = self.H
        if lam == 0:
            return H

        def active(w):
            return np.abs(w) < self.r

        def value(t, w):
            t, w = np.broadcast_arrays(np.asarray(t, float), np.asarray(w, complex))
            tt = np.mod(t, 1.0)
            out = H(t, w).astype(float)
            m = active(w)
            if np.any(m):
                out[m] = out[m] + self.raw(tt[m], w[m], lam) - self.raw(tt[m], w[m], 0.0)
            return out

        def grad(t, w):
            t, w = np.broadcast_arrays(np.asarray(t, float), np.asarray(w, complex))
            tt = np.mod(t, 1.0)
            out = np.array(H.grad(t, w), dtype=complex)
            m = active(w)
            if np.any(m):
                out[m] = out[m] + self.raw(tt[m], w[m], lam, True)[1] - self.raw(tt[m], w[m], 0.0, True)[1]
            return out

        return TimePeriodicHamiltonian(value, grad, H.support_radius, None, f"flattened({lam})", check=False)


def _vanishes_near_endpoints(H, flat=0.1, n=16):
    t = np.concatenate([np.linspace(0, flat, n), np.linspace(1 - flat, 1, n)])
    r = np.linspace(0, H.support_radius, 12)
    th = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    T, R, TH = np.meshgrid(t, r, th, indexing="ij")
    return float(np.max(np.abs(H(T, R * np.exp(1j * TH))))) == 0.0


def reparametrize(H: TimePeriodicHamiltonian) -> TimePeriodicHamiltonian:
    """eta'(t) H(eta(t), w): same time-one map, vanishing near t = 0 and t = 1."""

    def value(t, w):
        tt = np.mod(t, 1.0)
        return time_step(tt, 1) * H(time_step(tt), w)

    def grad(t, w):
        tt = np.mod(t, 1.0)
        return time_step(tt, 1) * H.grad(time_step(tt), w)

    return TimePeriodicHamiltonian(value, grad, H.support_radius, None, f"reparam({H.name})")


def flatten_near_fixed_point(H: TimePeriodicHamiltonian, r: float, eps: float, *, c2_threshold=1.0,
                             lambdas=(0.0, 0.25, 0.5, 0.75, 1.0), n_t=33, n_x=49, check_radius=None,
                             cfg=None):
    """Family H^lambda with H^0 = H, H^lambda = H off B_r, common time-one map and H^1 = O(|z|^2).

    H must vanish for t near 0 and 1; otherwise it is first replaced by its
    time reparametrization (same time-one map) and the report says so.
    Returns (family, report).
    """
    from .lift import fixed_point_action

    cfg = cfg or IntegratorConfig(abs_tol=1e-13, rel_tol=1e-13)
    norm = c2_norm(lambda p: H(0.5, p[..., 0]), 1, H.support_radius)
    norm = max(norm, max(c2_norm(lambda p: H(t, p[..., 0]), 1, H.support_radius) for t in (0.25, 0.75)))
    if norm >= c2_threshold:
        raise ThresholdExceeded(f"measured C^2 norm {norm:.3g} exceeds threshold {c2_threshold}")
    end = disk_map(H, np.array([0j]), 0.0, 1.0, cfg)[0]
    action = float(fixed_point_action(H, np.array(0j), 1, cfg))
    if abs(end) > 1e-9 or abs(action) > 1e-9:
        raise ValueError(f"0 must be a fixed point of zero action (|phi(0)| = {abs(end):.3g}, A = {action:.3g})")
    reparam = not _vanishes_near_endpoints(H)
    base = reparametrize(H) if reparam else H
    table = tabulate_family(base, n_t, n_x, cfg=cfg)
    fam = FlattenedFamily(base, r, table)
    report = check_flattened(fam, eps, lambdas, check_radius or min(0.9, base.support_radius), cfg)
    report.measured["c2_norm"] = norm
    report.measured["reparametrized"] = reparam
    return fam, report


def check_flattened(fam: FlattenedFamily, eps, lambdas, radius, cfg=None, n_t=21, n_r=12, n_th=12):
    """Checks (i)-(v) on a polar grid (z != 0) times a time grid; the origin is checked separately."""
    H = fam.H
    r = np.linspace(0, radius, n_r + 1)[1:]
    th = 2 * np.pi * np.arange(n_th) / n_th
    W = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    ts = np.linspace(0, 1, n_t)
    T, WW = np.meshgrid(ts, W, indexing="ij")
    members = {lam: fam.member(lam) for lam in lambdas}
    ref = disk_map(H, W, 0.0, 1.0, cfg)
    measured = {"time_one_gap": 0.0, "outside_gap": 0.0, "c0": 0.0, "ratio_h1": 0.0}
    h0 = float(np.max(np.abs(members[0.0](T, WW) - H(T, WW)))) if 0.0 in members else 0.0
    outside = np.abs(WW) >= fam.r
    for lam, Hl in members.items():
        vals = Hl(T, WW)
        measured["c0"] = max(measured["c0"], float(np.max(np.abs(vals))))
        if np.any(outside):
            measured["outside_gap"] = max(measured["outside_gap"],
                                          float(np.max(np.abs(vals[outside] - H(T, WW)[outside]))))
        gap = float(np.max(np.abs(disk_map(Hl, W, 0.0, 1.0, cfg) - ref)))
        measured["time_one_gap"] = max(measured["time_one_gap"], gap)
    H1 = fam.member(1.0)
    ratio = np.abs(H1(T, WW)) / np.abs(WW) ** 2
    measured["ratio_h1"] = float(np.max(ratio))
    measured["origin_h1"] = float(np.max(np.abs(H1(ts, np.zeros(ts.shape, complex)))))
    checks = {
        "i": h0 == 0.0,
        "ii": measured["outside_gap"] == 0.0,
        "iii": measured["time_one_gap"] < 1e-7,
        "iv": measured["c0"] < eps,
        "v": measured["ratio_h1"] <= eps,
    }
    return FlattenReport(checks, measured, list(lambdas))


def flatten_test_hamiltonian(c=0.01, c3=0.005, support=0.8, flat=0.15):
    """rho(t) (c |w|^2 + c3 Re w^3) bump(|w|^2/support^2), rho vanishing near t = 0 and 1.

    The origin is a fixed point of zero action.
    """
    from .lift import smooth_bump

    def parts(t, w):
        rho = time_step(np.mod(t, 1.0), 1, flat)
        b, db = smooth_bump(np.abs(w) ** 2 / support ** 2)
        P = c * np.abs(w) ** 2 + c3 * np.real(w ** 3)
        dP = 2 * c * w + 3 * c3 * np.conj(w) ** 2
        return rho, b, db, P, dP

    def value(t, w):
        rho, b, _, P, _ = parts(t, w)
        return rho * P * b

    def grad(t, w):
        rho, b, db, P, dP = parts(t, w)
        return rho * (dP * b + P * db * 2 * w / support ** 2)

    return TimePeriodicHamiltonian(value, grad, min(support + 1e-9, 0.999), None, "flatten test")
