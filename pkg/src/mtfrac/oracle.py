"""Independent numerical ground truth for the modal solutions.

Three routes that share no code with the primary evaluation path:

* :func:`highprec_series` sums the defining series in software arbitrary
  precision (mpmath) with a rigorous majorant tail bound;
* :func:`l1_solve_mode` time-steps the per-mode multi-term fractional ODE
  with the piecewise-linear (L1) discretization of each Caputo term;
* :func:`laplace_mode_eval` evaluates the mode through its Laplace
  inversion along the cut negative axis, leading decay term plus remainder
  integral.

:func:`counterexample_run` reproduces the unstable negative-coefficient
configuration whose Laplace symbol acquires zeros off the cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np

from .constants import HANKEL_EPS0, HANKEL_REFINE_RTOL
from .specfun import MLArgs, MLParams, gamma_real

__all__ = [
    "L1Config",
    "HankelConfig",
    "HighPrecResult",
    "CounterexampleResult",
    "highprec_series",
    "l1_solve_mode",
    "l1_mesh",
    "laplace_symbol",
    "hankel_integrand",
    "laplace_mode_eval",
    "counterexample_roots",
    "counterexample_run",
]


# ---------------------------------------------------------------------------
# Configs

@dataclass(frozen=True)
class L1Config:
    """Mesh for the L1 stepper: nodes t_k = t_final * (k/n_steps)^grading."""

    t_final: float
    n_steps: int
    grading: float = 1.0

    def __post_init__(self):
        if self.t_final <= 0:
            raise ValueError("t_final must be positive")
        if self.n_steps < 2:
            raise ValueError("n_steps must be at least 2")
        if self.grading < 1.0:
            raise ValueError("grading must be >= 1")


@dataclass(frozen=True)
class HankelConfig:
    """Quadrature for the cut-axis integral.

    ``eps0`` sets the split radius eps0 * lambda between the small-r regime,
    where the symbol is dominated by lambda, and the large-r regime.
    """

    r_max: float
    n_panels: int = 48
    eps0: float = HANKEL_EPS0

    def __post_init__(self):
        if self.r_max <= 0 or self.n_panels < 4 or self.eps0 <= 0:
            raise ValueError("invalid Hankel quadrature configuration")

    def validate_for(self, t: float):
        if self.r_max * t < 36.8:  # e^{-r_max t} above ~1e-16
            raise ValueError(
                f"r_max={self.r_max} too small for t={t}: "
                "exp(-r_max t) tail above 1e-16")

    @classmethod
    def for_time(cls, t: float, **kw) -> "HankelConfig":
        return cls(r_max=40.0 / t, **kw)


# ---------------------------------------------------------------------------
# Extended-precision series

@dataclass(frozen=True)
class HighPrecResult:
    value: complex
    tail_bound: float
    digits: int
    mp_value: object  # mpmath mpc, full precision


def _mp_compositions(k, m):
    if m == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _mp_compositions(k - first, m - 1):
            yield (first,) + rest


def highprec_series(params: MLParams, args: MLArgs, digits: int = 30) -> HighPrecResult:
    """Shell-by-shell summation of the series at >= ``digits`` working digits.

    Stops once the single-exponent majorant S^k / Gamma(b0 + b_min k)
    certifies a tail below 10^-(digits+5); raises if that never happens
    within 10 * digits * (1 + S) shells.
    """
    if params.m != args.m:
        raise ValueError("parameter/argument length mismatch")
    if digits < 10:
        raise ValueError("digits must be at least 10")
    m = params.m
    betas = params.betas
    beta0 = params.beta0
    S = sum(abs(z) for z in args.z)
    beta_min = min(betas)
    max_shells = int(10 * digits * (1.0 + S)) + 20

    with mp.workdps(digits + 10):
        zs = [mp.mpc(z) for z in args.z]
        total = mp.mpc(0)
        target = mp.mpf(10) ** (-(digits + 5))
        tail = None
        for k in range(max_shells):
            shell = mp.mpc(0)
            for comp in _mp_compositions(k, m):
                mult = mp.factorial(k)
                for kj in comp:
                    mult /= mp.factorial(kj)
                term = mult
                for zj, kj in zip(zs, comp):
                    if kj:
                        term *= zj ** kj
                g = beta0
                for bj, kj in zip(betas, comp):
                    g += bj * kj
                shell += term / mp.gamma(g)
            total += shell
            if S == 0:
                tail = mp.mpf(0)
                break
            major = mp.mpf(S) ** (k + 1) / mp.gamma(beta0 + beta_min * (k + 1))
            major_next = mp.mpf(S) ** (k + 2) / mp.gamma(beta0 + beta_min * (k + 2))
            if major_next < major:
                ratio = major_next / major
                bound = major / (1 - ratio)
                if bound < target:
                    tail = bound
                    break
        if tail is None:
            raise ArithmeticError(
                f"high-precision series: tail bound {target} not reached "
                f"within {max_shells} shells (sum |z_j| = {float(S):.3g})")
        return HighPrecResult(value=complex(total), tail_bound=float(tail),
                              digits=digits, mp_value=total)


# ---------------------------------------------------------------------------
# L1 stepper for the per-mode multi-term Caputo ODE

def l1_mesh(cfg: L1Config) -> np.ndarray:
    k = np.arange(cfg.n_steps + 1, dtype=float)
    return cfg.t_final * (k / cfg.n_steps) ** cfg.grading


def _source_values(f, ts):
    if f is None:
        return np.zeros(ts.shape)
    if callable(f):
        return np.asarray([float(f(t)) for t in ts])
    t_samp, v_samp = f
    return np.interp(ts, np.asarray(t_samp, dtype=float), np.asarray(v_samp, dtype=float))


def l1_solve_mode(lam: float, orders, a_n: float, f_n=None,
                  cfg: L1Config = None, stop_abs: float = None):
    """L1 time stepping of  sum_j q_j D^{a_j} u + lam u = f,  u(0) = a_n.

    Each Caputo term is discretized with the piecewise-linear kernel
    weights on the shared (possibly graded) mesh; the implicit update is a
    scalar linear solve per step.  Returns (times, values).  ``stop_abs``
    stops early once |u| exceeds it (used by growth experiments).

    ``orders`` only needs ``alphas``/``qs`` attributes; sign constraints are
    the caller's business, which lets deliberately ill-posed weight patterns
    be simulated.
    """
    if cfg is None:
        raise ValueError("an L1Config is required")
    alphas = np.asarray(orders.alphas, dtype=float)
    qs = np.asarray(orders.qs, dtype=float)
    ts = l1_mesh(cfg)
    fs = _source_values(f_n, ts)
    n_steps = cfg.n_steps

    u = np.empty(n_steps + 1)
    u[0] = a_n
    ginv = 1.0 / gamma_real(2.0 - alphas)     # 1/Gamma(2 - a_j)
    one_minus = 1.0 - alphas

    for n in range(1, n_steps + 1):
        tn = ts[n]
        dt = np.diff(ts[: n + 1])             # length n
        # weights d_k^{(j)} = [(tn-t_k)^{1-a} - (tn-t_{k+1})^{1-a}] / (G(2-a) dt_k)
        back = tn - ts[: n + 1]               # length n+1, last entry 0
        du = np.diff(u[: n + 1])              # u_{k+1} - u_k, last entry unknown
        a_coef = 0.0
        hist = 0.0
        for j in range(alphas.size):
            pw = back ** one_minus[j]
            d = (pw[:-1] - pw[1:]) * ginv[j] / dt
            a_coef += qs[j] * d[-1]
            if n > 1:
                hist += qs[j] * float(d[:-1] @ du[:-1])
        denom = a_coef + lam
        if denom == 0.0:
            raise ArithmeticError("singular L1 update (a_coef + lam = 0)")
        u[n] = (a_coef * u[n - 1] - hist + fs[n]) / denom
        if not np.isfinite(u[n]):
            raise ArithmeticError(f"L1 step produced a non-finite value at t={tn:.4g}")
        if stop_abs is not None and abs(u[n]) >= stop_abs:
            return ts[: n + 1], u[: n + 1]
    return ts, u


# ---------------------------------------------------------------------------
# Laplace inversion along the cut axis

def laplace_symbol(orders, lam: float, s):
    """w(s) = sum_j q_j s^{a_j} + lam."""
    s = np.asarray(s, dtype=complex)
    out = np.full(s.shape, complex(lam))
    for a, q in zip(orders.alphas, orders.qs):
        out = out + q * s ** a
    return out


def hankel_integrand(orders, lam: float, r):
    """H(r, lam) = -(1/pi) Im{ (1/w) sum_j q_j s^{a_j-1}
                               - (q_m/lam) s^{a_m-1} } at s = r e^{i pi}."""
    r = np.asarray(r, dtype=float)
    s = r * np.exp(1j * math.pi)
    w = laplace_symbol(orders, lam, s)
    num = np.zeros(s.shape, dtype=complex)
    for a, q in zip(orders.alphas, orders.qs):
        num = num + q * s ** (a - 1.0)
    lead = (orders.qs[-1] / lam) * s ** (orders.alphas[-1] - 1.0)
    return -(1.0 / math.pi) * (num / w - lead).imag


def _hankel_quad(orders, lam, t, cfg, n_panels):
    """Panel Gauss-Legendre of int_0^r_max H(r) e^{-rt} dr with a split at
    eps0*lam and geometric grading toward r = 0."""
    gl_x, gl_w = np.polynomial.legendre.leggauss(16)
    r_split = min(cfg.eps0 * lam, cfg.r_max)
    edges = []
    # geometric panels from tiny radii up to the split
    r_lo = r_split * 1e-60
    n_geo = max(8, n_panels)
    geo = r_lo * (r_split / r_lo) ** (np.arange(n_geo + 1) / n_geo)
    edges.append(geo)
    if cfg.r_max > r_split:
        n_lin = max(8, n_panels)
        lin = r_split * (cfg.r_max / r_split) ** (np.arange(1, n_lin + 1) / n_lin)
        edges.append(lin)
    grid = np.concatenate(edges)
    total = 0.0
    for lo, hi in zip(grid[:-1], grid[1:]):
        r = 0.5 * (hi - lo) * gl_x + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * float(
            (gl_w * hankel_integrand(orders, lam, r) * np.exp(-r * t)).sum())
    # analytic bound on the dropped [0, r_lo] piece
    below = abs(hankel_integrand(orders, lam, np.array([r_lo]))[0]) * r_lo * 2.0
    return total, below, grid


def laplace_mode_eval(lam: float, orders, a_n: float, t: float,
                      cfg: HankelConfig = None) -> float:
    """Mode value a_n [ q_m / (lam Gamma(1-a_m) t^{a_m}) + int_0^inf H e^{-rt} dr ].

    The integral is evaluated by panel quadrature split at eps0*lam; a
    doubled-panel refinement must agree or an error is raised.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if cfg is None:
        cfg = HankelConfig.for_time(t)
    cfg.validate_for(t)
    alpha_m = orders.alphas[-1]
    q_m = orders.qs[-1]
    leading = q_m / (lam * gamma_real(1.0 - alpha_m) * t ** alpha_m)

    coarse, below_c, _ = _hankel_quad(orders, lam, t, cfg, cfg.n_panels)
    fine, below_f, _ = _hankel_quad(orders, lam, t, cfg, 2 * cfg.n_panels)
    err = abs(fine - coarse) + below_f
    scale = max(abs(leading + fine), abs(leading), 1e-300)
    if err > HANKEL_REFINE_RTOL * scale:
        raise ArithmeticError(
            f"Hankel quadrature refinement disagreement {err:.3g} at t={t}")
    return a_n * (leading + fine)


# ---------------------------------------------------------------------------
# Negative-coefficient counterexample

@dataclass(frozen=True)
class CounterexampleResult:
    times: np.ndarray
    values: np.ndarray
    r_plus: float
    r_minus: float
    verdict: str


class _RawOrders:
    """Order/weight container without the positivity validation; only used
    for deliberately ill-posed experiments."""

    def __init__(self, alphas, qs):
        self.alphas = tuple(alphas)
        self.qs = tuple(qs)


def counterexample_roots(lam: float):
    """Positive roots (3 lam +- sqrt(9 lam^2 - 4 lam)) / 2 of the symbol
    s^{1/2} - 3 lam s^{1/4} + lam viewed as a quadratic in y = s^{1/4},
    computed from the companion matrix rather than the closed form."""
    if 9.0 * lam * lam - 4.0 * lam <= 0:
        raise ValueError("needs 9 lam^2 - 4 lam > 0")
    roots = np.sort(np.roots([1.0, -3.0 * lam, lam]).real)
    return float(roots[0]), float(roots[1])


def counterexample_run(lam: float, cfg: L1Config,
                       flip_sign: bool = False) -> CounterexampleResult:
    """Simulate  D^{1/2} u -+ 3 lam D^{1/4} u + lam u = 0,  u(0) = 1.

    With the negative middle weight the Laplace symbol has zeros with
    positive real part and the mode grows; ``flip_sign=True`` runs the
    all-positive control, which decays.  The verdict is ``grows`` once |u|
    reaches 10x its initial value inside the window.
    """
    r_minus, r_plus = counterexample_roots(lam)
    q2 = 3.0 * lam if flip_sign else -3.0 * lam
    orders = _RawOrders(alphas=(0.5, 0.25), qs=(1.0, q2))
    u0 = 1.0
    ts, us = l1_solve_mode(lam, orders, u0, None, cfg, stop_abs=1e6 * abs(u0))
    peak = np.max(np.abs(us))
    if peak >= 10.0 * abs(u0):
        verdict = "grows"
    elif abs(us[-1]) <= abs(u0) and peak <= 1.05 * abs(u0):
        verdict = "decays"
    else:
        verdict = "indeterminate"
    return CounterexampleResult(times=ts, values=us, r_plus=r_plus,
                                r_minus=r_minus, verdict=verdict)
