"""Command-line driver: config parsing, experiment dispatch, CSV reports.

Configs are INI files with sections [orders], [operator], [initial],
[source], [numerics], [output]; parsing is strict (unknown keys are
errors).  Every run writes a CSV data file plus a manifest echoing the
config, the package constants, and library versions, so identical configs
reproduce byte-identical data files.
"""

from __future__ import annotations

import argparse
import configparser
import datetime
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, analysis, constants, oracle, solver, spectral, specfun

__all__ = ["RunConfig", "parse_config", "run", "main", "PRESETS"]


_SECTION_KEYS = {
    "orders": {"alphas", "qs"},
    "operator": {"interval", "n_interior", "diffusion", "potential"},
    "initial": {"kind"},
    "source": {"kind", "t_final", "n_samples"},
    "numerics": {"t_grid", "quad_panels", "l1_steps", "l1_grading", "gamma",
                 "tau", "lam", "beta0", "levels", "perturb_eps", "threads",
                 "tol"},
    "output": {"path"},
}

_COMMANDS = ("mml-eval", "eigen", "solve", "asymptotics", "stability",
             "counterexample", "verify")


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass
class RunConfig:
    command: str = "solve"
    # problem
    alphas: tuple = (0.5,)
    qs: tuple = (1.0,)
    interval: tuple = (0.0, math.pi)
    n_interior: int = 255
    diffusion: str = "constant:1.0"
    potential: str = "constant:0.0"
    initial_kind: str = "mode:1"
    source_kind: str = "none"
    source_t_final: float = 2.0
    source_n_samples: int = 257
    # numerics
    t_grid: str = "0.01:2:9:log"
    quad_panels: int = 256
    l1_steps: int = 4096
    l1_grading: float = 4.0
    gamma: float = 0.75
    tau: float = 0.8
    lam: float = 10.0
    beta0: float = 1.0
    levels: int = 7
    perturb_eps: float = 0.2
    threads: int = 1
    tol: float = 1e-12
    # output
    out_path: str = "out.csv"

    def orders(self) -> solver.FracOrders:
        return solver.FracOrders(alphas=self.alphas, qs=self.qs)

    def validate(self):
        if self.command not in _COMMANDS:
            raise ConfigError(f"command must be one of {_COMMANDS}")
        if any(not 0.0 < a < 1.0 for a in self.alphas):
            raise ConfigError("alphas must be strictly decreasing in (0,1)")
        if any(a1 <= a2 for a1, a2 in zip(self.alphas, self.alphas[1:])):
            raise ConfigError("alphas must be strictly decreasing in (0,1)")
        if len(self.qs) != len(self.alphas):
            raise ConfigError("qs must match alphas in length")
        if self.qs[0] != 1.0:
            raise ConfigError("q_1 must equal 1")
        if any(q <= 0 for q in self.qs):
            raise ConfigError("qs must be positive")
        if self.n_interior < 1:
            raise ConfigError("n_interior must be positive")
        if self.interval[1] <= self.interval[0]:
            raise ConfigError("interval must be increasing")
        for name in ("quad_panels", "l1_steps", "levels", "threads",
                     "source_n_samples"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        for name in ("l1_grading", "tau", "lam", "beta0",
                     "perturb_eps", "tol", "source_t_final"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.gamma < 0:
            raise ConfigError("gamma must be non-negative")
        d_kind = self.diffusion.split(":")[0]
        if d_kind != "table" and d_kind not in spectral.DIFFUSION_BUILTINS:
            raise ConfigError(f"unknown diffusion builtin: {self.diffusion}")
        c_kind = self.potential.split(":")[0]
        if c_kind != "table" and c_kind not in spectral.POTENTIAL_BUILTINS:
            raise ConfigError(f"unknown potential builtin: {self.potential}")
        # Coefficient invariants (D > 0, c <= 0, table lengths) must surface
        # at validation time, never mid-run: sampling the operator is cheap.
        _build_operator(self)
        kind = self.initial_kind.split(":")[0]
        if kind not in ("zero", "mode", "modal-decay", "bump"):
            raise ConfigError(f"unknown initial kind: {self.initial_kind}")
        skind = self.source_kind.split(":")[0]
        if skind not in ("none", "mode-const"):
            raise ConfigError(f"unknown source kind: {self.source_kind}")
        return self


def _parse_floats(text, key):
    try:
        return tuple(float(v.strip()) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {text!r}") from exc


def parse_config(path) -> RunConfig:
    """Read and validate an INI run configuration (strict key checking)."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    cfg = RunConfig()
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise ConfigError(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")

    def get(section, key, default=None):
        if cp.has_option(section, key):
            return cp.get(section, key)
        return default

    if cp.has_section("orders"):
        if get("orders", "alphas") is not None:
            cfg.alphas = _parse_floats(get("orders", "alphas"), "alphas")
        if get("orders", "qs") is not None:
            cfg.qs = _parse_floats(get("orders", "qs"), "qs")
        elif get("orders", "alphas") is not None:
            cfg.qs = (1.0,) * len(cfg.alphas)
    if cp.has_section("operator"):
        if get("operator", "interval"):
            iv = _parse_floats(get("operator", "interval"), "interval")
            if len(iv) != 2:
                raise ConfigError("interval must have two endpoints")
            cfg.interval = iv
        if get("operator", "n_interior"):
            cfg.n_interior = _parse_int(get("operator", "n_interior"), "n_interior")
        if get("operator", "diffusion"):
            cfg.diffusion = get("operator", "diffusion")
        if get("operator", "potential"):
            cfg.potential = get("operator", "potential")
    if cp.has_section("initial") and get("initial", "kind"):
        cfg.initial_kind = get("initial", "kind")
    if cp.has_section("source"):
        if get("source", "kind"):
            cfg.source_kind = get("source", "kind")
        if get("source", "t_final"):
            cfg.source_t_final = _parse_float(get("source", "t_final"), "t_final")
        if get("source", "n_samples"):
            cfg.source_n_samples = _parse_int(get("source", "n_samples"), "n_samples")
    if cp.has_section("numerics"):
        num = cp["numerics"]
        for key in ("t_grid",):
            if key in num:
                cfg.t_grid = num[key]
        for key, conv in (("quad_panels", int), ("l1_steps", int),
                          ("levels", int), ("threads", int)):
            if key in num:
                setattr(cfg, key, _parse_int(num[key], key))
        for key in ("l1_grading", "gamma", "tau", "lam", "beta0",
                    "perturb_eps", "tol"):
            if key in num:
                setattr(cfg, key, _parse_float(num[key], key))
    if cp.has_section("output") and get("output", "path"):
        cfg.out_path = get("output", "path")
    return cfg.validate()


def _parse_int(text, key):
    try:
        return int(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from exc


def _parse_float(text, key):
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from exc


def _parse_grid(spec) -> np.ndarray:
    """Grid spec 'start:stop:count:scale' with scale log or linear."""
    parts = spec.split(":")
    if len(parts) != 4:
        raise ConfigError(f"t_grid must be start:stop:count:scale, got {spec!r}")
    start, stop = float(parts[0]), float(parts[1])
    count = int(parts[2])
    scale = parts[3].strip().lower()
    if count < 2:
        raise ConfigError("t_grid count must be at least 2")
    if scale == "log":
        if start <= 0 or stop <= 0:
            raise ConfigError("log t_grid needs positive endpoints")
        return np.logspace(math.log10(start), math.log10(stop), count)
    if scale == "linear":
        return np.linspace(start, stop, count)
    raise ConfigError(f"t_grid scale must be log or linear, got {scale!r}")


# ---------------------------------------------------------------------------
# Problem construction from a config

def _coefficient(spec_text, builtins, key):
    """Builtin name with parameters, or 'table:v1,v2,...' raw samples."""
    name, _, rest = spec_text.partition(":")
    if name == "table":
        try:
            return np.array([float(v) for v in rest.split(",")])
        except ValueError as exc:
            raise ConfigError(f"{key}: malformed table values") from exc
    args = [float(v) for v in rest.split(":")] if rest else []
    return builtins[name](*args)


def _build_operator(cfg: RunConfig) -> spectral.Operator1D:
    d = _coefficient(cfg.diffusion, spectral.DIFFUSION_BUILTINS, "diffusion")
    c = _coefficient(cfg.potential, spectral.POTENTIAL_BUILTINS, "potential")
    try:
        return spectral.Operator1D.from_callables(cfg.interval, cfg.n_interior,
                                                  diffusion=d, potential=c)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _initial_values(cfg: RunConfig, s: spectral.Spectrum, op) -> np.ndarray:
    kind, *args = cfg.initial_kind.split(":")
    if kind == "zero":
        return np.zeros(op.n_interior)
    if kind == "mode":
        k = int(args[0]) if args else 1
        if not 1 <= k <= s.n_modes:
            raise ConfigError(f"initial mode index {k} out of range")
        return s.eigvecs[:, k - 1].copy()
    if kind == "modal-decay":
        p = float(args[0]) if args else 4.0
        coeffs = np.arange(1, s.n_modes + 1, dtype=float) ** -p
        return spectral.synthesize(coeffs, s)
    if kind == "bump":
        x = op.interior_x
        w = (x - op.x_left) * (op.x_right - x)
        return w / np.max(w)
    raise ConfigError(f"unknown initial kind: {cfg.initial_kind}")


def _build_source(cfg: RunConfig, s: spectral.Spectrum):
    kind, *args = cfg.source_kind.split(":")
    if kind == "none":
        return None
    if kind == "mode-const":
        k = int(args[0]) if args else 1
        amp = float(args[1]) if len(args) > 1 else 1.0
        if not 1 <= k <= s.n_modes:
            raise ConfigError(f"source mode index {k} out of range")
        times = np.linspace(0.0, cfg.source_t_final, cfg.source_n_samples)
        values = np.tile(amp * s.eigvecs[:, k - 1], (times.size, 1))
        return solver.SampledSource(times=times, values=values)
    raise ConfigError(f"unknown source kind: {cfg.source_kind}")


def _build_problem(cfg: RunConfig) -> solver.Problem:
    op = _build_operator(cfg)
    s = spectral.eigendecompose_operator(op)
    init = _initial_values(cfg, s, op)
    src = _build_source(cfg, s)
    return solver.Problem(orders=cfg.orders(), operator=op, spectrum=s,
                          initial=init, source=src)


# ---------------------------------------------------------------------------
# Report writing

def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_manifest(path, cfg: RunConfig, results: dict):
    cp = configparser.ConfigParser()
    import mpmath
    import scipy
    cp["run"] = {
        "command": cfg.command,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "mtfrac_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "mpmath_version": mpmath.__version__,
    }
    cp["constants"] = {
        "series_contour_crossover": _fmt(constants.SERIES_CONTOUR_CROSSOVER),
        "series_tol": _fmt(constants.SERIES_TOL),
        "algebraic_tol": _fmt(constants.ALGEBRAIC_TOL),
        "specfun_cross_tol": _fmt(constants.SPECFUN_CROSS_TOL),
    }
    cp["config"] = {k: _fmt(getattr(cfg, k)) for k in (
        "alphas", "qs", "interval", "n_interior", "diffusion", "potential",
        "initial_kind", "source_kind", "t_grid", "quad_panels", "l1_steps",
        "l1_grading", "gamma", "tau", "lam", "beta0", "levels",
        "perturb_eps", "threads", "tol", "out_path")}
    if results:
        cp["results"] = {k: _fmt(v) for k, v in results.items()}
    with open(path, "w") as fh:
        cp.write(fh)


# ---------------------------------------------------------------------------
# Commands

def _cmd_mml_eval(cfg: RunConfig):
    orders = cfg.orders()
    grid = _parse_grid(cfg.t_grid)
    rows = []
    for t in grid:
        params = specfun.solver_params(orders, cfg.beta0)
        args = specfun.solver_args(orders, cfg.lam, float(t))
        res = specfun.mml_eval(params, args, tol=cfg.tol)
        rows.append((float(t), float(res.value.real),
                     res.method.value, float(res.abs_error_estimate)))
    return ["t", "value", "method", "abs_error_estimate"], rows, {}


def _cmd_eigen(cfg: RunConfig):
    op = _build_operator(cfg)
    s = spectral.eigendecompose_operator(op)
    rows = [(n + 1, float(lam)) for n, lam in enumerate(s.lambdas)]
    results = {"orthonormality_residual": spectral.check_orthonormal(s)}
    return ["n", "lambda"], rows, results


def _cmd_solve(cfg: RunConfig):
    p = _build_problem(cfg)
    grid = _parse_grid(cfg.t_grid)
    rows = []
    results = {}
    if p.source is None:
        sol = solver.ModalSolution(p)
        a_modal = p.modal_initial
        for t in grid:
            mv = sol.modal_values(float(t))
            rows.append((
                float(t),
                spectral.modal_frac_norm(mv, 0.0, p.spectrum),
                spectral.modal_frac_norm(mv, 0.5, p.spectrum),
                spectral.modal_frac_norm(mv, 1.0, p.spectrum),
                spectral.modal_frac_norm(mv - a_modal, cfg.gamma, p.spectrum),
            ))
        header = ["t", "l2_norm", "h1_norm", "dl_norm", "dist_init_norm"]
        if grid[0] > grid[-1]:
            rep = analysis.short_time_checks(p, cfg.gamma, grid)
            results["short_time_vanishing"] = rep.vanishing
    else:
        quad = solver.QuadConfig(n_panels=cfg.quad_panels)
        g_norm = cfg.gamma + 1.0 - cfg.tau
        for t in grid:
            u = solver.solve_source(p, float(t), quad)
            rows.append((
                float(t),
                spectral.frac_norm(u, 0.0, p.spectrum),
                spectral.frac_norm(u, g_norm, p.spectrum),
            ))
        header = ["t", "l2_norm", "forced_norm"]
        if grid[0] > grid[-1]:
            rep = analysis.short_time_checks(p, cfg.gamma, grid, tau=cfg.tau,
                                             quad=quad)
            results["short_time_vanishing"] = rep.vanishing
    return header, rows, results


def _cmd_asymptotics(cfg: RunConfig):
    p = _build_problem(cfg)
    if p.source is not None:
        raise ConfigError("asymptotics runs on homogeneous problems")
    grid = _parse_grid(cfg.t_grid)
    sol = solver.ModalSolution(p)
    rows = []
    for t in grid:
        t = float(t)
        mv = sol.modal_values(t)
        lead = analysis.asymptotic_leading_term(p, t)
        rows.append((
            t,
            spectral.modal_frac_norm(mv, 0.0, p.spectrum),
            spectral.modal_frac_norm(mv, 1.0, p.spectrum),
            spectral.frac_norm(lead, 1.0, p.spectrum),
            analysis.asymptotic_residual(p, t, sol),
        ))
    norms = [r[2] for r in rows]
    fit = analysis.decay_fit(grid, norms)
    exp, flagged = analysis.residual_exponent(p.orders)
    results = {
        "fitted_decay_exponent": fit.exponent,
        "fit_r_squared": fit.r_squared,
        "expected_decay_exponent": -p.orders.alphas[-1],
        "residual_exponent": exp,
        "residual_exponent_single_term_substitution": flagged,
    }
    return ["t", "l2_norm", "dl_norm", "leading_norm", "scaled_residual"], rows, results


def _cmd_stability(cfg: RunConfig):
    p = _build_problem(cfg)
    if p.source is not None:
        raise ConfigError("stability runs on homogeneous problems")
    rows = []
    results = {}
    base_sol = solver.ModalSolution(p)
    for channel in ("alpha", "q", "diffusion", "all"):
        ratios = []
        for level in range(cfg.levels):
            eps = cfg.perturb_eps * 0.5 ** level
            pert = analysis.perturbed_problem(p, channel, eps)
            rep = analysis.lipschitz_experiment(
                p, pert, gamma=cfg.gamma, tau=cfg.tau, threads=cfg.threads,
                base_solution=base_sol)
            rows.append((channel, level, float(rep.delta),
                         float(rep.diff_norm), float(rep.ratio)))
            ratios.append(rep.ratio)
        results[f"{channel}_ratio_spread"] = max(ratios) / min(ratios)
    return ["channel", "level", "delta", "diff_norm", "ratio"], rows, results


def _cmd_counterexample(cfg: RunConfig):
    l1 = oracle.L1Config(t_final=cfg.source_t_final, n_steps=cfg.l1_steps,
                         grading=cfg.l1_grading)
    res = oracle.counterexample_run(cfg.lam, l1)
    control = oracle.counterexample_run(cfg.lam, l1, flip_sign=True)
    rows = [(float(t), float(abs(u))) for t, u in zip(res.times, res.values)]
    results = {
        "r_plus": res.r_plus,
        "r_minus": res.r_minus,
        "verdict": res.verdict,
        "control_verdict": control.verdict,
    }
    return ["t", "abs_u"], rows, results


def _verify_suite():
    """Quick invariant suite; yields (name, passed, detail)."""
    rng = np.random.default_rng(20240317)

    def check_recurrence():
        for k in range(1, 9):
            for m in (2, 3):
                for comp in specfun._compositions(k, m):
                    total = sum(
                        specfun.multinomial_coefficient(
                            k - 1, tuple(comp[:j]) + (comp[j] - 1,) + tuple(comp[j + 1:]))
                        for j in range(m))
                    if total != specfun.multinomial_coefficient(k, tuple(comp)):
                        return False, f"failed at k={k}, comp={tuple(comp)}"
        return True, "k <= 8, m <= 3 exact"

    def check_identity():
        worst = 0.0
        for _ in range(20):
            m = int(rng.integers(1, 4))
            betas = tuple(rng.uniform(0.4, 0.95, m))
            beta0 = float(rng.uniform(0.3, 1.0))
            z = tuple(complex(*rng.uniform(-1.0, 1.0, 2)) for _ in range(m))
            r = specfun.lemma31_residual(specfun.MLParams(beta0=beta0, betas=betas),
                                         specfun.MLArgs(z=z))
            worst = max(worst, r)
        return worst < 1e-10, f"max residual {worst:.2e}"

    def check_cross():
        worst = 0.0
        for alphas, qs, lam in (((0.5,), (1.0,), 2.0),
                                ((0.9, 0.3), (1.0, 1.5), 2.0),
                                ((0.8, 0.5, 0.2), (1.0, 1.0, 1.0), 1.5)):
            orders = solver.FracOrders(alphas=alphas, qs=qs)
            params = specfun.solver_params(orders, 1.0 + alphas[0])
            args = specfun.solver_args(orders, lam, 1.0)
            rs = specfun.mml_series(params, args)
            rc = specfun.mml_contour(params, args,
                                     specfun.default_contour_config(params, args))
            worst = max(worst, abs(rs.value - rc.value) / abs(rc.value))
        return worst < 1e-8, f"max rel diff {worst:.2e}"

    def check_derivative_identity():
        orders = solver.FracOrders(alphas=(0.8, 0.4), qs=(1.0, 1.0))
        lam, t = 3.0, 1.1
        f = lambda u: u ** 0.8 * specfun.e_solver(lam, orders, 1.8, u)
        rhs = t ** -0.2 * specfun.e_solver(lam, orders, 0.8, t)
        errs = [abs((f(t + h) - f(t - h)) / (2 * h) - rhs) for h in (1e-2, 5e-3)]
        order = math.log2(errs[0] / errs[1])
        return abs(order - 2.0) < 0.3, f"observed order {order:.3f}"

    def check_positivity():
        for _ in range(20):
            m = int(rng.integers(1, 4))
            alphas = np.sort(rng.uniform(0.1, 0.95, m))[::-1]
            if np.min(np.abs(np.diff(alphas))) < 0.05 if m > 1 else False:
                continue
            orders = solver.FracOrders(
                alphas=tuple(alphas),
                qs=(1.0,) + tuple(rng.uniform(0.2, 3.0, m - 1)))
            lam = float(10 ** rng.uniform(-1, 3))
            t = float(10 ** rng.uniform(-2, 1.5))
            v = t ** (alphas[0] - 1.0) * specfun.e_solver(lam, orders, alphas[0], t)
            if v <= 0:
                return False, f"non-positive at lam={lam:.3g}, t={t:.3g}"
        return True, "20 samples positive"

    def check_spectral():
        op = spectral.Operator1D.from_callables((0.0, math.pi), 63)
        s = spectral.eigendecompose_operator(op)
        n = np.arange(1, 64)
        closed = (4.0 / op.h ** 2) * np.sin(n * op.h / 2.0) ** 2
        err = float(np.max(np.abs(s.lambdas - closed) / closed))
        ortho = spectral.check_orthonormal(s)
        return err < 1e-10 and ortho < 1e-10, f"spectrum {err:.1e}, gram {ortho:.1e}"

    def check_l1():
        orders = solver.FracOrders.single(0.5)
        cfg = oracle.L1Config(t_final=1.0, n_steps=2048, grading=4.0)
        _, us = oracle.l1_solve_mode(1.0, orders, 1.0, None, cfg)
        target = solver.mode_amplitude(orders, 1.0, 1.0)
        return abs(us[-1] - target) < 1e-3, f"|L1 - amplitude| = {abs(us[-1]-target):.2e}"

    def check_hankel():
        orders = solver.FracOrders(alphas=(0.8, 0.4), qs=(1.0, 1.0))
        h = oracle.laplace_mode_eval(5.0, orders, 1.0, 10.0)
        amp = solver.mode_amplitude(orders, 5.0, 10.0)
        return abs(h - amp) / abs(amp) < 1e-6, f"rel diff {abs(h-amp)/abs(amp):.2e}"

    def check_caputo():
        q = solver.QuadConfig(n_panels=128, grading=2.0)
        got = solver.caputo_quadrature(lambda s: np.ones_like(s), 1.5, 0.4, q)
        want = 1.5 ** 0.6 / specfun.gamma_real(1.6)
        return abs(got - want) / want < 1e-10, f"rel err {abs(got-want)/want:.2e}"

    def check_counterexample():
        l1 = oracle.L1Config(t_final=5.0, n_steps=2048, grading=4.0)
        res = oracle.counterexample_run(10.0, l1)
        ctl = oracle.counterexample_run(10.0, l1, flip_sign=True)
        ok = res.verdict == "grows" and ctl.verdict == "decays"
        return ok, f"verdicts {res.verdict}/{ctl.verdict}"

    checks = [
        ("multinomial-recurrence", check_recurrence),
        ("parameter-shift-identity", check_identity),
        ("series-contour-agreement", check_cross),
        ("derivative-identity", check_derivative_identity),
        ("kernel-positivity", check_positivity),
        ("spectral-closed-form", check_spectral),
        ("l1-vs-amplitude", check_l1),
        ("hankel-vs-amplitude", check_hankel),
        ("caputo-power-selftest", check_caputo),
        ("counterexample-verdicts", check_counterexample),
    ]
    for name, fn in checks:
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - verdicts must not abort the suite
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        yield name, ok, detail


def _cmd_verify(cfg: RunConfig):
    rows = []
    all_ok = True
    for name, ok, detail in _verify_suite():
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        rows.append((name, "pass" if ok else "fail", detail))
        all_ok = all_ok and ok
    if not all_ok:
        raise RuntimeError("verification suite failed")
    return ["check", "status", "detail"], rows, {"all_passed": True}


_COMMAND_IMPL = {
    "mml-eval": _cmd_mml_eval,
    "eigen": _cmd_eigen,
    "solve": _cmd_solve,
    "asymptotics": _cmd_asymptotics,
    "stability": _cmd_stability,
    "counterexample": _cmd_counterexample,
    "verify": _cmd_verify,
}


def run(cfg: RunConfig, out_dir: str | None = None) -> int:
    """Execute the configured command; write CSV + manifest; return 0 on
    success.  Errors propagate to the CLI wrapper, which reports them on
    stderr with a nonzero exit status."""
    cfg.validate()
    header, rows, results = _COMMAND_IMPL[cfg.command](cfg)
    out_dir = out_dir or os.environ.get("MTFRAC_OUT") or "."
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, cfg.out_path)
    _write_csv(csv_path, header, rows)
    _write_manifest(csv_path + ".manifest.ini", cfg, results)
    for key, value in results.items():
        print(f"{key} = {value}")
    print(f"wrote {csv_path}")
    return 0


# ---------------------------------------------------------------------------
# Presets (one per headline experiment)

PRESETS: dict[str, dict] = {
    "thm21": dict(command="solve", alphas=(0.7, 0.4), qs=(1.0, 1.2),
                  initial_kind="modal-decay:4", gamma=1.0,
                  t_grid="0.1:1e-8:8:log", out_path="thm21.csv"),
    "thm22": dict(command="solve", alphas=(0.7, 0.4), qs=(1.0, 1.2),
                  initial_kind="zero", source_kind="mode-const:2:1.0",
                  gamma=0.0, tau=0.8, t_grid="0.1:1e-8:8:log",
                  out_path="thm22.csv"),
    "thm23": dict(command="stability", alphas=(0.8, 0.5), qs=(1.0, 1.5),
                  initial_kind="modal-decay:2.5", gamma=0.75, tau=0.5,
                  perturb_eps=0.2, levels=7, out_path="thm23.csv"),
    "thm24": dict(command="asymptotics", alphas=(0.9, 0.3), qs=(1.0, 1.5),
                  initial_kind="modal-decay:2", t_grid="1e2:1e4:15:log",
                  out_path="thm24.csv"),
    "rem36": dict(command="counterexample", lam=10.0, source_t_final=5.0,
                  l1_steps=4096, l1_grading=4.0, out_path="rem36.csv"),
}


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    cfg = RunConfig()
    for key, value in PRESETS[name].items():
        setattr(cfg, key, value)
    return cfg.validate()


_FAST_PROFILE = {"quad_panels": 4, "l1_steps": 4, "levels": 2}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mtfrac",
        description="Multi-term time-fractional diffusion experiments")
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--preset", help=f"built-in preset: {sorted(PRESETS)}")
    parser.add_argument("--out", help="output directory (or $MTFRAC_OUT)")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--tol-profile", choices=("strict", "fast"),
                        default="strict")
    args = parser.parse_args(argv)

    try:
        if args.config and args.preset:
            raise ConfigError("--config and --preset are mutually exclusive")
        if args.preset:
            cfg = preset_config(args.preset)
            if cfg.command != args.command and args.command != "verify":
                raise ConfigError(
                    f"preset {args.preset!r} belongs to command {cfg.command!r}")
        elif args.config:
            cfg = parse_config(args.config)
        else:
            cfg = RunConfig()
        cfg.command = args.command
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError("threads must be positive")
            cfg.threads = args.threads
        if args.tol_profile == "fast":
            for key, divisor in _FAST_PROFILE.items():
                setattr(cfg, key, max(2, getattr(cfg, key) // divisor))
        return run(cfg, out_dir=args.out)
    except (ConfigError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"mtfrac: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
