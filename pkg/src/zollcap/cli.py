"""Command line runner: file-driven experiments with CSV/JSON artifacts and a hashed manifest.

Exit status is 0 on success, 2 when a run finishes without a verdict
(inconclusive search, failed density certificate) and 1 on errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

OUTPUT_ENV = "ZOLLCAP_OUTPUT_DIR"
SUBCOMMANDS = ("capacities", "volume", "reeb", "lift", "genfun", "counterexample", "spectral", "bm",
               "anosov-katok", "selftest")

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


# ---------------------------------------------------------------- values

def parse_exact(text):
    """'3', '3/2', '1.25' -> Fraction; a trailing 'pi' (as in '2pi' or '1/2*pi') gives a PiRational."""
    from .capacities import PiRational

    s = text.strip().replace(" ", "")
    if s.endswith("pi"):
        head = s[:-2].rstrip("*")
        return PiRational(Fraction(head) if head else Fraction(1), 1)
    return Fraction(s)


def parse_real(text):
    v = parse_exact(text)
    return float(v)


def parse_pair(text, conv=parse_exact):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError("expected two comma separated values")
    return tuple(conv(p) for p in parts)


def parse_grid(text):
    """'lo:hi:n' -> n equispaced values including both ends; 'a,b,c' -> list."""
    if ":" in text:
        lo, hi, n = text.split(":")
        n = int(n)
        if n < 1:
            raise ValueError("grid needs at least one point")
        lo, hi = float(lo), float(hi)
        return [lo] if n == 1 else [lo + (hi - lo) * i / (n - 1) for i in range(n)]
    return [float(v) for v in text.split(",") if v.strip()]


def _positive(conv):
    def f(text):
        v = conv(text)
        if not v > 0:
            raise ValueError("must be positive")
        return v
    return f


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


# key -> (parser, default, help)
SCHEMA = {
    "ellipsoid": (parse_pair, None, "ellipsoid parameters a,b (exact: 1, 3/2, 2pi)"),
    "polydisk": (parse_pair, None, "polydisk parameters a,b"),
    "k_max": (_positive(int), 6, "largest capacity index"),
    "lambda_grid": (parse_grid, None, "lambda values, lo:hi:n or a comma list"),
    "stages": (_positive(int), 3, "conjugation stages"),
    "eps": (_positive(float), 0.2, "density radius"),
    "grid_size": (_positive(int), 500, "density centers"),
    "checkpoint": (str, None, "resume the conjugation scheme from this checkpoint"),
    "instances": (_positive(int), 3, "random Hamiltonians for lift"),
    "theta": (float, 0.1, "rotation angle for genfun"),
    "grid_n": (_positive(int), 10, "points per axis of the genfun grid"),
    "steps": (_positive(int), 4, "geodesic segments"),
    "regime": (_positive(float), 0.2, "near-Zoll log-oscillation bound"),
    "abs_tol": (_positive(float), 1e-12, "integrator absolute tolerance"),
    "rel_tol": (_positive(float), 1e-12, "integrator relative tolerance"),
    "search_tol": (_positive(float), 1e-9, "closing tolerance of certified orbits"),
    "seed": (int, 0, "random seed"),
    "output_dir": (str, None, "output directory"),
    "quick": (_bool, False, "selftest: skip the slow checks"),
}


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def __getattr__(self, key):
        params = self.__dict__.get("params", {})
        if key in params:
            return params[key]
        if key in SCHEMA:
            return SCHEMA[key][1]
        raise AttributeError(key)

    @property
    def integrator(self):
        from .numerics import IntegratorConfig
        return IntegratorConfig(abs_tol=self.abs_tol, rel_tol=self.rel_tol)

    @property
    def out(self) -> Path:
        base = self.output_dir or os.environ.get(OUTPUT_ENV) or "zollcap-output"
        return Path(base) / self.subcommand


def read_config_file(path, seen=None) -> dict:
    """Flat 'key = value' lines; '#' starts a comment; 'include = other' merges a file first."""
    path = Path(path)
    seen = set() if seen is None else seen
    real = path.resolve()
    if real in seen:
        raise ConfigError("include", f"include cycle through {path}")
    seen.add(real)
    out = {}
    for n, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}", "expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "include":
            out.update(read_config_file(path.parent / value, seen))
        else:
            out[key] = value
    return out


def build_config(subcommand, raw: dict) -> ExperimentConfig:
    if subcommand not in SUBCOMMANDS:
        raise ConfigError("subcommand", f"unknown subcommand {subcommand!r}")
    params = {}
    for key, value in raw.items():
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key")
        conv = SCHEMA[key][0]
        try:
            params[key] = conv(value) if isinstance(value, str) else value
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(key, f"invalid value {value!r} ({exc})") from None
    if "ellipsoid" in params and "polydisk" in params:
        raise ConfigError("polydisk", "give either ellipsoid or polydisk, not both")
    return ExperimentConfig(subcommand, params, dict(raw))


# ---------------------------------------------------------------- writing

class Artifacts:
    def __init__(self, out: Path):
        self.out = out
        self.files = {}

    def write(self, name, text):
        self.out.mkdir(parents=True, exist_ok=True)
        data = text.encode()
        (self.out / name).write_bytes(data)
        self.files[name] = hashlib.sha256(data).hexdigest()

    def csv(self, name, header, rows):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        self.write(name, buf.getvalue())

    def json(self, name, obj):
        self.write(name, json.dumps(obj, indent=1, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _num(v):
    return repr(float(v))


def exact_columns(v):
    """(numerator, denominator, pi_power) of an exact value."""
    from .capacities import as_exact
    e = as_exact(v)
    return e.coeff.numerator, e.coeff.denominator, e.pi_power


def _versions():
    import scipy
    try:
        from importlib.metadata import version
        own = version("zollcap")
    except Exception:
        own = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "zollcap": own, "platform": platform.platform()}


# ---------------------------------------------------------------- experiments

def _domain(cfg):
    from .domains import Ellipsoid, Polydisk
    if cfg.polydisk is not None:
        return Polydisk(*cfg.polydisk)
    if cfg.ellipsoid is not None:
        return Ellipsoid(cfg.ellipsoid)
    raise ConfigError("ellipsoid", "required (or polydisk)")


def run_capacities(cfg, art):
    from .capacities import ech_capacities_ellipsoid, ech_capacities_polydisk, ehgh_table, polydisk_k_bounds
    from .domains import Ellipsoid
    dom = _domain(cfg)
    k_max = cfg.k_max
    if isinstance(dom, Ellipsoid):
        tab = ehgh_table(dom, k_max)
        art.write("ehgh.csv", tab.to_csv())
        if dom.dimension_n == 2:
            art.write("ech.csv", ech_capacities_ellipsoid(dom.a[0], dom.a[1], k_max).to_csv())
    else:
        art.write("ech.csv", ech_capacities_polydisk(dom.a, dom.b, k_max).to_csv())
        if (dom.a, dom.b) == (1, 1):
            rows = []
            for k in range(1, k_max + 1):
                lo, hi = polydisk_k_bounds(k)
                rows.append((k, *exact_columns(lo), *exact_columns(hi), int(lo < hi)))
            art.csv("k_bounds.csv", ["k", "lower_numerator", "lower_denominator", "lower_pi_power",
                                     "upper_numerator", "upper_denominator", "upper_pi_power", "strict"], rows)
    return EXIT_OK


def run_volume(cfg, art):
    from .capacities import ehgh_capacity, polydisk_ehgh, viterbo_check
    from .domains import Ellipsoid, domain_record, volume
    dom = _domain(cfg)
    vol = volume(dom)
    c1 = ehgh_capacity(dom, 1) if isinstance(dom, Ellipsoid) else polydisk_ehgh(dom, 1)
    rep = viterbo_check(dom, c1)
    art.json("volume.json", {"domain": domain_record(dom), "volume": str(vol), "volume_float": float(vol),
                             "c1": str(c1), "viterbo_lhs": str(rep.lhs), "viterbo_rhs": str(rep.rhs),
                             "viterbo_holds": rep.holds})
    return EXIT_OK


def _search(cfg):
    from .reeb import SearchConfig
    return SearchConfig(tol=cfg.search_tol, integrator=cfg.integrator)


def _amplitude(cfg):
    from .domains import constant_amplitude, ellipsoid_amplitude
    if cfg.ellipsoid is None:
        return constant_amplitude(1)
    a, b = cfg.ellipsoid
    return ellipsoid_amplitude(a, b)


def run_reeb(cfg, art):
    from .reeb import systole
    rep = systole(_amplitude(cfg), _search(cfg))
    art.json("systole.json", rep.record())
    art.csv("orbits.csv", ["period", "residual", "fiber", "x0", "x1", "x2", "x3"],
            [(_num(o.period), _num(o.residual), int(o.fiber_flag), *map(_num, o.basepoint))
             for o in rep.orbit_certificates])
    return EXIT_OK if rep.status == "ok" else EXIT_INCONCLUSIVE


def run_lift(cfg, art):
    from .lift import lifted_volume, random_bump_hamiltonian
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(cfg.instances):
        H = random_bump_hamiltonian(rng)
        rep = lifted_volume(H)
        rows.append((i, _num(rep.calabi), _num(rep.formula_value), _num(rep.quadrature_value),
                     _num(rep.relative_gap)))
    art.csv("lift.csv", ["instance", "calabi", "formula_volume", "quadrature_volume", "relative_gap"], rows)
    return EXIT_OK


def run_genfun(cfg, art):
    from .genfun import generating_function_of, genfun_residual, rotation
    phi = rotation(cfg.theta)
    S = generating_function_of(phi, basepoint=0j)
    xs = np.linspace(-0.5, 0.5, cfg.grid_n)
    grid = (xs[:, None] + 1j * xs[None, :]).ravel()
    res = genfun_residual(S, phi, grid)
    exact = math.tan(cfg.theta / 2)
    u = grid[:: max(1, len(grid) // 25)]
    vals = S(u[:, None])
    art.csv("genfun.csv", ["re_u", "im_u", "S", "S_closed_form"],
            [(_num(p.real), _num(p.imag), _num(v), _num(exact * abs(p) ** 2)) for p, v in zip(u, vals)])
    art.json("genfun.json", {"theta": cfg.theta, "residual": res, "grid_points": len(grid)})
    return EXIT_OK


def run_counterexample(cfg, art):
    from .counterexamples import CounterexampleConfig, assemble_counterexample
    ccfg = CounterexampleConfig()
    rep = assemble_counterexample(cfg.lambda_grid, ccfg)
    art.write("counterexample.csv", rep.to_csv())
    art.json("counterexample.json", {
        "lambda_max": rep.lambda_max, "higher_period_constant": rep.c, "calabi": rep.calabi,
        "rows": [{"lambda": r.lam, "systole": r.systole, "volume": r.volume,
                  "ball_capacity_bound": r.ball_capacity_bound, "strict": r.strict, "min_action": r.min_action,
                  "conjugation_gap": r.conjugation_gap} for r in rep.rows]})
    return EXIT_OK


def run_spectral(cfg, art):
    from .spectral import spectral_c0_c1
    c0, c1 = spectral_c0_c1(_amplitude(cfg), cfg.regime)
    from .capacities import is_exact
    if is_exact(c0):
        art.csv("c0_c1.csv", ["invariant", "value_numerator", "value_denominator", "pi_power"],
                [("c0", *exact_columns(c0)), ("c1", *exact_columns(c1))])
    else:
        art.csv("c0_c1.csv", ["invariant", "value"], [("c0", _num(c0)), ("c1", _num(c1))])
    return EXIT_OK


def run_bm(cfg, art):
    from .spectral import bm_distance_near_zoll
    amp = _amplitude(cfg)
    rep = bm_distance_near_zoll(amp, cfg.steps, cfg.regime, _search(cfg))
    art.json("bm.json", rep.record())
    from .domains import default_rule
    nodes = default_rule().nodes
    segs = rep.geodesic.segment_oscillations(nodes)
    art.csv("geodesic.csv", ["segment", "t0", "t1", "oscillation"],
            [(i, _num(a), _num(b), _num(s)) for i, (a, b, s) in
             enumerate(zip(rep.geodesic.times[:-1], rep.geodesic.times[1:], segs))])
    return EXIT_OK if rep.status == "ok" else EXIT_INCONCLUSIVE


def run_anosov_katok(cfg, art):
    from .anosov_katok import ConjugationState, advance_stage, epsilon_density, initial_state, period_census
    if cfg.checkpoint:
        state = ConjugationState.from_checkpoint(Path(cfg.checkpoint).read_text())
    else:
        state = initial_state()
    while state.stage < cfg.stages:
        state = advance_stage(state, cfg.eps)
        art.write("checkpoint.json", state.checkpoint() + "\n")
    rows = [(r.stage, r.a.numerator, r.a.denominator, r.b.numerator, r.b.denominator, _num(r.form_deviation),
             _num(r.kernel_leak), _num(r.invariance_defect), _num(r.amplitude_distance), _num(r.budget))
            for r in state.reports]
    art.csv("stages.csv", ["stage", "a_numerator", "a_denominator", "b_numerator", "b_denominator",
                           "form_deviation", "kernel_leak", "invariance_defect", "amplitude_distance",
                           "budget"], rows)
    cert = epsilon_density(state, cfg.eps, grid_size=cfg.grid_size)
    art.json("density.json", cert.record())
    census = period_census(state)
    art.json("census.json", census.record())
    return EXIT_OK if cert.passed and census.passed else EXIT_INCONCLUSIVE


def selftest_checks(quick=False):
    """(name, passed, detail) for fast invariant checks across the modules."""
    from .capacities import ehgh_table, polydisk_k_bounds
    from .domains import Ellipsoid, constant_amplitude, ellipsoid_amplitude
    from .numerics import fd_jacobian, quadrature, s3_rule, symplectic_defect
    from .reeb import contact_volume, ellipsoid_flow
    from .spectral import spectral_c0_c1

    out = []

    def check(name, ok, detail=""):
        out.append((name, bool(ok), str(detail)))

    vals = [int(v.coeff) for v in ehgh_table(Ellipsoid((1, 2)), 6).values]
    check("ehgh E(1,2)", vals == [1, 2, 2, 3, 4, 4], vals)
    strict = [k for k in range(1, 101) if polydisk_k_bounds(k)[0] < polydisk_k_bounds(k)[1]]
    check("polydisk bounds strict from k=3", strict == list(range(3, 101)))
    m = quadrature(lambda x: np.ones(len(x)), s3_rule(8, 8, 8))
    check("S3 measure", abs(m - math.pi ** 2) < 1e-8, m)
    flow = ellipsoid_flow(2, 3)
    jac = fd_jacobian(lambda z: flow(0.7, z), np.array([0.3, -0.2, 0.5, 0.1]))
    J = np.array([[jac[0, 0], jac[0, 1]], [jac[1, 0], jac[1, 1]]])
    check("symplectic jacobian", symplectic_defect(J) < 1e-6, symplectic_defect(J))
    cv = contact_volume(constant_amplitude(1))
    check("contact volume alpha0", abs(cv - math.pi ** 2) < 1e-8, cv)
    c0, c1 = spectral_c0_c1(constant_amplitude(1))
    check("c0 = c1 = pi on alpha0", float(c0) == math.pi and float(c1) == math.pi)
    c0, c1 = spectral_c0_c1(ellipsoid_amplitude(Fraction(21, 20), Fraction(1)))
    check("c0/c1 ellipsoid", (c0, c1) == (1, Fraction(21, 20)))
    if not quick:
        from .reeb import systole
        rep = systole(ellipsoid_amplitude(math.pi * 1.02, math.pi * 0.98))
        check("systole eps_ab", rep.systole is not None and abs(rep.systole - math.pi * 0.98) < 1e-6, rep.systole)
    return out


def run_selftest(cfg, art):
    checks = selftest_checks(cfg.quick)
    art.csv("selftest.csv", ["check", "passed", "detail"], [(n, int(ok), d) for n, ok, d in checks])
    for n, ok, d in checks:
        print(f"{'PASS' if ok else 'FAIL'} {n} {d}")
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_ERROR


RUNNERS = {"capacities": run_capacities, "volume": run_volume, "reeb": run_reeb, "lift": run_lift,
           "genfun": run_genfun, "counterexample": run_counterexample, "spectral": run_spectral, "bm": run_bm,
           "anosov-katok": run_anosov_katok, "selftest": run_selftest}


def run(config: ExperimentConfig):
    """Run one experiment; returns (exit status, {file: sha256})."""
    art = Artifacts(config.out)
    t0 = time.perf_counter()
    error = None
    try:
        status = RUNNERS[config.subcommand](config, art)
    except ConfigError:
        raise
    except Exception as exc:  # reported in the manifest
        status, error = EXIT_ERROR, f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - t0
    manifest = {"subcommand": config.subcommand, "inputs": config.raw, "versions": _versions(),
                "timings": {"total_seconds": elapsed}, "status": status, "error": error,
                "files": dict(sorted(art.files.items()))}
    art.out.mkdir(parents=True, exist_ok=True)
    (art.out / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    if error:
        print(error, file=sys.stderr)
    return status, art.files


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are errors, not the inconclusive status 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_ERROR)


def _parser():
    p = _Parser(prog="zollcap", description="Systolic and capacity experiments near Zoll forms.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="flat key = value file (supports include = path)")
    for key, (_, default, help_) in SCHEMA.items():
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                       help=f"{help_} (default {default})")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        raw = read_config_file(args.config) if args.config else {}
        raw.update({k: v for k, v in vars(args).items() if k in SCHEMA and v is not None})
        config = build_config(args.subcommand, raw)
        status, files = run(config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for name in sorted(files):
        print(config.out / name)
    return status


if __name__ == "__main__":
    sys.exit(main())
