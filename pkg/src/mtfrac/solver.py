"""Modal solutions of the multi-term time-fractional diffusion problem.

Homogeneous solutions use the closed per-mode amplitude

    u_n(t) = (1 - lambda_n t^{a_1} E^{(n)}_{1+a_1}(t)) (a, phi_n),

forced solutions the Duhamel convolution of the per-mode propagator
s^{a_1-1} E^{(n)}_{a_1}(s) against the modal source history.  Caputo
derivatives of solutions are computed by product integration: the smooth
special-function factor is interpolated piecewise linearly while both
endpoint singularities s^{a_1-1} and (t-s)^{-beta} go into the weight,
whose panel moments are incomplete-beta integrals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaln

from . import spectral
from .spectral import Operator1D, Spectrum
from .specfun import (
    e_solver,
    e_solver_many,
    e_solver_time_batch,
    gamma_real,
)

__all__ = [
    "FracOrders",
    "Problem",
    "ModalSolution",
    "SampledSource",
    "QuadConfig",
    "mode_amplitude",
    "mode_amplitudes",
    "mode_amplitude_history",
    "solve_homogeneous",
    "solve_source",
    "time_derivative",
    "caputo_derivative",
    "caputo_quadrature",
    "mode_ode_residual",
    "graded_mesh",
]


@dataclass(frozen=True)
class FracOrders:
    """Strictly decreasing Caputo orders in (0,1) with positive weights,
    normalized so the leading weight is 1."""

    alphas: tuple
    qs: tuple

    def __post_init__(self):
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "qs", tuple(float(q) for q in self.qs))
        if len(self.alphas) != len(self.qs):
            raise ValueError("alphas and qs must have equal length")
        if len(self.alphas) < 1:
            raise ValueError("at least one order is required")
        for a in self.alphas:
            if not 0.0 < a < 1.0:
                raise ValueError(f"orders must lie in (0, 1), got {a}")
        if any(a1 <= a2 for a1, a2 in zip(self.alphas, self.alphas[1:])):
            raise ValueError("orders must be strictly decreasing")
        if self.qs[0] != 1.0:
            raise ValueError("leading weight q_1 must equal 1")
        if any(q <= 0 for q in self.qs):
            raise ValueError("weights must be positive")

    @property
    def m(self):
        return len(self.alphas)

    @classmethod
    def single(cls, alpha):
        return cls(alphas=(alpha,), qs=(1.0,))


@dataclass(eq=False)
class SampledSource:
    """Uniformly time-sampled source, linearly interpolated between samples.

    ``values`` rows are grid samples F(., t_i) (or modal coefficients when
    ``modal`` is set).
    """

    times: np.ndarray
    values: np.ndarray
    modal: bool = False

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("source needs at least two time samples")
        dt = np.diff(self.times)
        if np.any(dt <= 0):
            raise ValueError("source times must be increasing")
        if not np.allclose(dt, dt[0], rtol=1e-9):
            raise ValueError("source times must be uniformly spaced")
        if self.times[0] != 0.0:
            raise ValueError("source sampling must start at t = 0")
        if self.values.shape[0] != self.times.size:
            raise ValueError("one value row per time sample is required")

    @property
    def spacing(self):
        return float(self.times[1] - self.times[0])

    def modal_history(self, s: Spectrum) -> np.ndarray:
        """(n_times, n_modes) array of modal coefficients."""
        if self.modal:
            return self.values
        return self.values @ (s.h * s.eigvecs)

    @classmethod
    def from_callable(cls, f, t_final, n_samples, xs):
        """Sample a callable f(x_array, t) -> grid values."""
        times = np.linspace(0.0, t_final, n_samples)
        values = np.array([np.asarray(f(xs, t), dtype=float) for t in times])
        return cls(times=times, values=values)


@dataclass(eq=False)
class Problem:
    """Full initial-boundary value description on the discrete grid."""

    orders: FracOrders
    operator: Operator1D
    spectrum: Spectrum
    initial: np.ndarray
    source: SampledSource | None = None

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=float)
        if self.spectrum.n_modes != self.operator.n_interior:
            raise ValueError("spectrum inconsistent with operator (mode count)")
        if abs(self.spectrum.h - self.operator.h) > 1e-14 * self.operator.h:
            raise ValueError("spectrum inconsistent with operator (grid spacing)")
        if self.initial.shape != (self.operator.n_interior,):
            raise ValueError("initial value must be a grid function")

    @property
    def modal_initial(self) -> np.ndarray:
        a = getattr(self, "_modal_initial", None)
        if a is None:
            a = spectral.project(self.initial, self.spectrum)
            self._modal_initial = a
        return a

    @classmethod
    def build(cls, orders, operator, initial=None, source=None):
        s = spectral.eigendecompose_operator(operator)
        if initial is None:
            init = np.zeros(operator.n_interior)
        elif callable(initial):
            init = np.asarray([float(initial(x)) for x in operator.interior_x])
        else:
            init = np.asarray(initial, dtype=float)
        return cls(orders=orders, operator=operator, spectrum=s,
                   initial=init, source=source)


# ---------------------------------------------------------------------------
# Homogeneous solution

def mode_amplitude(orders: FracOrders, lam: float, t: float) -> float:
    """Per-mode amplitude 1 - lam t^{a_1} E^{(n)}_{1+a_1}(t); exactly 1 at t=0."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return 1.0
    a1 = orders.alphas[0]
    return 1.0 - lam * t ** a1 * e_solver(lam, orders, 1.0 + a1, t)


def mode_amplitudes(orders: FracOrders, lams, t: float) -> np.ndarray:
    """Vectorized :func:`mode_amplitude` over eigenvalues."""
    lams = np.asarray(lams, dtype=float)
    if t == 0.0:
        return np.ones(lams.shape)
    a1 = orders.alphas[0]
    e = e_solver_many(lams, orders, 1.0 + a1, t)
    return 1.0 - lams * t ** a1 * e


def mode_amplitude_history(orders: FracOrders, lam: float, ts) -> np.ndarray:
    """Vectorized :func:`mode_amplitude` over a time grid."""
    ts = np.asarray(ts, dtype=float)
    a1 = orders.alphas[0]
    e = e_solver_time_batch(lam, orders, 1.0 + a1, ts)
    return 1.0 - lam * ts ** a1 * e


class ModalSolution:
    """Per-mode amplitudes of a homogeneous problem, cached per time.

    Amplitude vectors are deterministic, so concurrent cache insertion is
    harmless (last write wins with identical content).
    """

    def __init__(self, problem: Problem):
        if problem.source is not None:
            raise ValueError("ModalSolution handles homogeneous problems only")
        self.problem = problem
        self._amp_cache: dict[float, np.ndarray] = {}

    def amplitudes(self, t: float) -> np.ndarray:
        key = float(t)
        amps = self._amp_cache.get(key)
        if amps is None:
            amps = mode_amplitudes(self.problem.orders,
                                   self.problem.spectrum.lambdas, key)
            self._amp_cache[key] = amps
        return amps

    def amplitude(self, n: int, t: float) -> float:
        """Amplitude of mode n (0-based) at time t."""
        return float(self.amplitudes(t)[n])

    def modal_values(self, t: float) -> np.ndarray:
        return self.amplitudes(t) * self.problem.modal_initial

    def grid(self, t: float) -> np.ndarray:
        return spectral.synthesize(self.modal_values(t), self.problem.spectrum)


def solve_homogeneous(p: Problem, t: float) -> np.ndarray:
    """Grid values of the homogeneous solution at time t."""
    if p.source is not None:
        raise ValueError("solve_homogeneous requires a problem without source")
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return p.initial.copy()
    amps = mode_amplitudes(p.orders, p.spectrum.lambdas, t)
    return spectral.synthesize(amps * p.modal_initial, p.spectrum)


def time_derivative(p: Problem, t: float) -> np.ndarray:
    """d/dt of the homogeneous solution:
    -t^{a_1-1} sum_n lambda_n E^{(n)}_{a_1}(t) a_n phi_n.  Unbounded at t=0."""
    if p.source is not None:
        raise ValueError("time_derivative requires a homogeneous problem")
    if t <= 0:
        raise ValueError("the time derivative is evaluated for t > 0 only")
    a1 = p.orders.alphas[0]
    e = e_solver_many(p.spectrum.lambdas, p.orders, a1, t)
    coeffs = -t ** (a1 - 1.0) * p.spectrum.lambdas * e * p.modal_initial
    return spectral.synthesize(coeffs, p.spectrum)


# ---------------------------------------------------------------------------
# Product quadrature for weakly singular integrals

@dataclass(frozen=True)
class QuadConfig:
    """Mesh for the singular convolution quadratures.

    ``grading`` defaults to 2/a_1 (resolves the s^{a_1 gamma - 1} behavior
    of solution derivatives near the origin).  With ``refine_check`` set,
    results are recomputed on a doubled mesh and a relative disagreement
    above ``refine_rtol`` raises.
    """

    n_panels: int = 256
    grading: float | None = None
    refine_check: bool = False
    refine_rtol: float = 1e-4

    def mesh(self, t: float, alpha1: float, factor: int = 1) -> np.ndarray:
        g = self.grading if self.grading is not None else 2.0 / alpha1
        n = factor * self.n_panels
        k = np.arange(n + 1, dtype=float)
        return t * (k / n) ** g


def graded_mesh(t: float, n: int, grading: float) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    return t * (k / n) ** grading


def _beta_moments(mesh, t, a, b):
    """Panel moments int_{s_i}^{s_i+1} s^{a-1} (t-s)^{b-1} ds for all panels.

    Exact through the regularized incomplete beta function."""
    x = np.clip(mesh / t, 0.0, 1.0)
    reg = betainc(a, b, x)
    lnB = betaln(a, b)
    return np.exp((a + b - 1.0) * np.log(t) + lnB) * np.diff(reg)


def _product_panels(mesh, gvals, t, singular_power, beta):
    """sum over panels of int s^{singular_power} lin[g](s) (t-s)^{-beta} ds."""
    a = singular_power + 1.0
    b = 1.0 - beta
    s0, s1 = mesh[:-1], mesh[1:]
    g0, g1 = gvals[:-1], gvals[1:]
    slope = (g1 - g0) / (s1 - s0)
    c0 = g0 - slope * s0
    m0 = _beta_moments(mesh, t, a, b)
    m1 = _beta_moments(mesh, t, a + 1.0, b)
    return float(np.sum(c0 * m0 + slope * m1))


def caputo_quadrature(smooth, t: float, beta: float, quad: QuadConfig,
                      singular_power: float = 0.0,
                      alpha1: float | None = None) -> float:
    """(1/Gamma(1-beta)) int_0^t s^p g(s) (t-s)^{-beta} ds with p =
    ``singular_power`` and g = ``smooth`` (callable on a vector of s).

    With smooth = 1, p = 0 this is the Caputo derivative of f(t) = t,
    equal to t^{1-beta}/Gamma(2-beta)."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if t <= 0:
        raise ValueError("t must be positive")

    def on_mesh(factor):
        mesh = quad.mesh(t, alpha1 if alpha1 is not None else 1.0, factor)
        gvals = np.asarray(smooth(mesh), dtype=float)
        if gvals.shape != mesh.shape:
            gvals = np.broadcast_to(gvals, mesh.shape).astype(float)
        return _product_panels(mesh, gvals, t, singular_power, beta)

    val = on_mesh(1)
    if quad.refine_check:
        fine = on_mesh(2)
        if abs(fine - val) > quad.refine_rtol * max(abs(fine), 1e-300):
            raise ArithmeticError(
                f"Caputo quadrature refinement disagreement "
                f"{abs(fine - val):.3g} at t={t}")
        val = fine
    return val / gamma_real(1.0 - beta)


def caputo_derivative_modal(p: Problem, beta: float, t: float,
                            quad: QuadConfig) -> np.ndarray:
    """Modal coefficients of the Caputo derivative of the homogeneous
    solution, from the analytic time derivative of each amplitude."""
    if p.source is not None:
        raise ValueError("caputo_derivative requires a homogeneous problem")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if t <= 0:
        raise ValueError("t must be positive")
    a1 = p.orders.alphas[0]
    inv_g = 1.0 / gamma_real(1.0 - beta)

    def on_mesh(factor):
        mesh = quad.mesh(t, a1, factor)
        vals = np.empty(p.spectrum.n_modes)
        for i, lam in enumerate(p.spectrum.lambdas):
            evals = e_solver_time_batch(lam, p.orders, a1, mesh)
            vals[i] = (-lam * p.modal_initial[i] * inv_g
                       * _product_panels(mesh, evals, t, a1 - 1.0, beta))
        return vals

    out = on_mesh(1)
    if quad.refine_check:
        fine = on_mesh(2)
        scale = float(np.linalg.norm(fine))
        if float(np.linalg.norm(fine - out)) > quad.refine_rtol * max(scale, 1e-300):
            raise ArithmeticError(
                f"Caputo quadrature refinement disagreement at t={t}")
        out = fine
    return out


def caputo_derivative(p: Problem, beta: float, t: float,
                      quad: QuadConfig = QuadConfig()) -> np.ndarray:
    """Grid values of the Caputo derivative of order beta of the solution."""
    coeffs = caputo_derivative_modal(p, beta, t, quad)
    return spectral.synthesize(coeffs, p.spectrum)


def mode_ode_residual(orders: FracOrders, lam: float, t: float,
                      quad: QuadConfig = QuadConfig()) -> float:
    """Relative residual of the per-mode equation
    sum_j q_j D^{a_j} u + lam u = 0 for the unit-initial-value amplitude,
    with each Caputo term computed by independent product quadrature."""
    a1 = orders.alphas[0]
    mesh = quad.mesh(t, a1)
    evals = e_solver_time_batch(lam, orders, a1, mesh)
    u_t = mode_amplitude(orders, lam, t)
    total = lam * u_t
    for a_j, q_j in zip(orders.alphas, orders.qs):
        frac = _product_panels(mesh, evals, t, a1 - 1.0, a_j) / gamma_real(1.0 - a_j)
        total += q_j * (-lam) * frac
    return abs(total) / (lam * max(abs(u_t), 1e-30))


# ---------------------------------------------------------------------------
# Forced solution (Duhamel convolution)

def _power_moments(mesh, p):
    """int_{s_i}^{s_i+1} s^{p-1} {1, s} ds for all panels (closed form)."""
    m0 = np.diff(mesh ** p) / p
    m1 = np.diff(mesh ** (p + 1.0)) / (p + 1.0)
    return m0, m1


def solve_source(p: Problem, t: float, quad: QuadConfig = QuadConfig()) -> np.ndarray:
    """Forced solution with zero initial value:
    per mode T_n(t) = int_0^t s^{a_1-1} E^{(n)}_{a_1}(s) F_n(t-s) ds.

    The kernel power s^{a_1-1} is integrated exactly against a piecewise
    linear interpolation of the smooth factor; the mesh is graded at s = 0
    and includes the source sample kinks.
    """
    if p.source is None:
        raise ValueError("solve_source requires a problem with a source")
    if np.any(p.initial != 0.0):
        raise ValueError("solve_source requires zero initial value")
    if t <= 0:
        raise ValueError("t must be positive")
    src = p.source
    if t > src.times[-1] + 1e-12:
        raise ValueError(f"source history ends at {src.times[-1]}, requested t={t}")
    n_in_window = int(np.count_nonzero((src.times > 0.0) & (src.times < t)))
    if n_in_window > 4 * quad.n_panels:
        raise ValueError(
            f"source sampling ({n_in_window} samples inside the window) is finer "
            f"than the quadrature can resolve with n_panels={quad.n_panels}; "
            "increase n_panels")

    a1 = p.orders.alphas[0]
    base = quad.mesh(t, a1)
    kinks = t - src.times
    kinks = kinks[(kinks > 0.0) & (kinks < t)]
    mesh = np.unique(np.concatenate([base, kinks, [0.0, t]]))

    hist = src.modal_history(p.spectrum)          # (n_times, n_modes)
    norms = np.max(np.abs(hist), axis=0)
    # Modes whose history is projection noise contribute nothing.
    active = np.nonzero(norms > 1e-14 * max(norms.max(), 1e-300))[0]

    coeffs = np.zeros(p.spectrum.n_modes)
    s0, s1 = mesh[:-1], mesh[1:]
    m0, m1 = _power_moments(mesh, a1)
    for i in active:
        lam = p.spectrum.lambdas[i]
        evals = e_solver_time_batch(lam, p.orders, a1, mesh)
        fvals = np.interp(t - mesh, src.times, hist[:, i])
        g = evals * fvals
        slope = (g[1:] - g[:-1]) / (s1 - s0)
        c0 = g[:-1] - slope * s0
        coeffs[i] = float(np.sum(c0 * m0 + slope * m1))
    return spectral.synthesize(coeffs, p.spectrum)
