"""Experiment drivers: decay rates, asymptotics, stability.

Batch drivers that turn the regularity and asymptotics statements into
measurable quantities: log-log decay fits, the long-time leading term and
its scaled residual, short-time limit tables, and the Lipschitz stability
of solutions under coefficient perturbations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .solver import FracOrders, ModalSolution, Problem, QuadConfig, solve_source
from .spectral import Operator1D, modal_frac_norm
from .specfun import gamma_real

__all__ = [
    "AdmissibleSets",
    "DecayFit",
    "ShortTimeReport",
    "LipschitzReport",
    "decay_fit",
    "asymptotic_leading_term",
    "asymptotic_residual",
    "residual_exponent",
    "homogeneous_norm",
    "short_time_checks",
    "lipschitz_experiment",
    "perturbation_delta",
    "c1_norm_difference",
    "perturbed_problem",
]


@dataclass(frozen=True)
class AdmissibleSets:
    """Coefficient boxes inside which the stability constant is uniform:
    order window, weight window, and (min value, C1 cap) for the diffusion."""

    alpha_bounds: tuple = (0.05, 0.95)
    q_bounds: tuple = (0.05, 20.0)
    d_bounds: tuple = (1e-3, 50.0)

    def __post_init__(self):
        if not (0.0 < self.alpha_bounds[0] < self.alpha_bounds[1] < 1.0):
            raise ValueError("alpha bounds must be ordered inside (0, 1)")
        if not (0.0 < self.q_bounds[0] <= self.q_bounds[1]):
            raise ValueError("q bounds must be positive and ordered")
        if self.d_bounds[0] <= 0:
            raise ValueError("diffusion lower bound must be positive")

    def contains_orders(self, orders: FracOrders) -> bool:
        lo, hi = self.alpha_bounds
        if not all(lo <= a <= hi for a in orders.alphas):
            return False
        qlo, qhi = self.q_bounds
        return all(qlo <= q <= qhi for q in orders.qs[1:])

    def contains_diffusion(self, op: Operator1D) -> bool:
        delta, cap = self.d_bounds
        if np.any(op.diffusion < delta):
            return False
        d1 = np.abs(np.diff(op.diffusion)) / op.h
        return float(np.max(np.abs(op.diffusion)) + np.max(d1)) <= cap


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    r_squared: float

    def __post_init__(self):
        if not -1e-12 <= self.r_squared <= 1.0 + 1e-12:
            raise ValueError("r_squared must lie in [0, 1]")


def decay_fit(times, norms) -> DecayFit:
    """Least-squares slope of log(norm) against log(t)."""
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if times.size < 5:
        raise ValueError("at least 5 samples are required")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be increasing")
    if np.any(times <= 0) or np.any(norms <= 0):
        raise ValueError("times and norms must be positive")
    lx, ly = np.log(times), np.log(norms)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    sstot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if sstot == 0.0 else 1.0 - float(np.sum(resid ** 2)) / sstot
    return DecayFit(exponent=float(slope), intercept=float(intercept),
                    r_squared=min(max(r2, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Long-time asymptotics

def asymptotic_leading_term(p: Problem, t: float) -> np.ndarray:
    """Leading long-time term  (-L)^{-1}(q_m a) / (Gamma(1-a_m) t^{a_m})."""
    if t <= 0:
        raise ValueError("t must be positive")
    alpha_m = p.orders.alphas[-1]
    q_m = p.orders.qs[-1]
    inv = spectral.apply_inverse(q_m * p.initial, p.spectrum)
    return inv / (gamma_real(1.0 - alpha_m) * t ** alpha_m)


def residual_exponent(orders: FracOrders):
    """Exponent scaling the remainder past the leading term.

    For m >= 2 this is the second-smallest order; the single-term case has
    no such order and the second term of the single-order expansion decays
    with exponent 2a instead, so that substitution is returned flagged.
    """
    if orders.m >= 2:
        return orders.alphas[-2], False
    return 2.0 * orders.alphas[0], True


def asymptotic_residual(p: Problem, t: float,
                        modal: ModalSolution | None = None) -> float:
    """Scaled remainder  t^e * ||u(t) - leading(t)||_{D(-L)} / ||a||_{L2}."""
    if t <= 0:
        raise ValueError("t must be positive")
    exp, _ = residual_exponent(p.orders)
    sol = modal if modal is not None else ModalSolution(p)
    a_modal = p.modal_initial
    alpha_m = p.orders.alphas[-1]
    q_m = p.orders.qs[-1]
    lead_modal = q_m * a_modal / (p.spectrum.lambdas
                                  * gamma_real(1.0 - alpha_m) * t ** alpha_m)
    diff = sol.modal_values(t) - lead_modal
    num = modal_frac_norm(diff, 1.0, p.spectrum)
    den = modal_frac_norm(a_modal, 0.0, p.spectrum)
    return t ** exp * num / den


def homogeneous_norm(p: Problem, t: float, gamma: float,
                     modal: ModalSolution | None = None) -> float:
    """||u(t)||_{D((-L)^gamma)} for the homogeneous solution."""
    sol = modal if modal is not None else ModalSolution(p)
    return modal_frac_norm(sol.modal_values(t), gamma, p.spectrum)


# ---------------------------------------------------------------------------
# Short-time limits

@dataclass(frozen=True)
class ShortTimeReport:
    """Norm table on a decreasing time grid plus the vanishing verdict.

    ``vanishing`` requires the norms to be non-increasing along decreasing
    time (5% slack) and the final norm to drop below 1e-3 of the first.
    """

    kind: str
    gamma: float
    tau: float
    times: np.ndarray
    norms: np.ndarray
    vanishing: bool


def short_time_checks(p: Problem, gamma: float, t_grid, tau: float = 0.8,
                      quad: QuadConfig | None = None) -> ShortTimeReport:
    """Tabulate the short-time norms and decide the vanishing verdict.

    Homogeneous problems track ||u(t) - a||_{D((-L)^gamma)}; forced ones
    (zero initial value) track ||u(t)||_{D((-L)^{gamma+1-tau})}.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(t_grid) >= 0):
        raise ValueError("t_grid must be strictly decreasing")
    if p.source is None:
        kind = "homogeneous"
        sol = ModalSolution(p)
        a_modal = p.modal_initial
        norms = np.array([
            modal_frac_norm(sol.modal_values(t) - a_modal, gamma, p.spectrum)
            for t in t_grid
        ])
    else:
        kind = "forced"
        quad = quad or QuadConfig()
        g_norm = gamma + 1.0 - tau
        norms = np.array([
            spectral.frac_norm(solve_source(p, t, quad), g_norm, p.spectrum)
            for t in t_grid
        ])
    scale = norms[0] if norms[0] > 0 else 1.0
    monotone = bool(np.all(norms[1:] <= norms[:-1] * 1.05 + 1e-300))
    vanishing = monotone and norms[-1] <= 1e-3 * scale
    if np.all(norms == 0.0):
        vanishing = True
    return ShortTimeReport(kind=kind, gamma=gamma, tau=tau, times=t_grid,
                           norms=norms, vanishing=vanishing)


# ---------------------------------------------------------------------------
# Lipschitz stability in the coefficients

def c1_norm_difference(op1: Operator1D, op2: Operator1D) -> float:
    """Discrete C1 norm of D - D~: sup of values plus sup of one-sided
    difference quotients on the grid."""
    if op1.n_interior != op2.n_interior or op1.h != op2.h:
        raise ValueError("operators must share the grid")
    d = op1.diffusion - op2.diffusion
    return float(np.max(np.abs(d)) + np.max(np.abs(np.diff(d))) / op1.h)


def perturbation_delta(base: Problem, perturbed: Problem) -> float:
    """sum |a_j - a~_j| + sum_{j>=2} |q_j - q~_j| + ||D - D~||_{C1}."""
    if base.orders.m != perturbed.orders.m:
        raise ValueError("problems must share the number of terms")
    da = sum(abs(a - b) for a, b in zip(base.orders.alphas, perturbed.orders.alphas))
    dq = sum(abs(a - b) for a, b in zip(base.orders.qs[1:], perturbed.orders.qs[1:]))
    dd = c1_norm_difference(base.operator, perturbed.operator)
    return da + dq + dd


@dataclass(frozen=True)
class LipschitzReport:
    delta: float
    diff_norm: float
    ratio: float
    gamma: float
    tau: float
    time_exponent: float
    space_gamma: float
    exact_match: bool


def _lp_time_norm(values, times, p_exp):
    if np.isinf(p_exp):
        return float(np.max(values))
    v = np.asarray(values, dtype=float) ** p_exp
    return float(np.trapezoid(v, times) ** (1.0 / p_exp))


def lipschitz_experiment(base: Problem, perturbed: Problem, gamma: float,
                         tau: float, t_final: float = 2.0, n_time: int = 25,
                         sets: AdmissibleSets = AdmissibleSets(),
                         threads: int = 1,
                         base_solution: ModalSolution | None = None) -> LipschitzReport:
    """Solution-difference norm per unit coefficient perturbation.

    For gamma < 1/2 the difference is measured in
    L^{1/(1-gamma)}(0,T; D((-L)^{1-tau})), otherwise in L^2(0,T; D(-L)).
    Norms use the base problem's spectrum; the time integral is a composite
    trapezoid on a graded grid.  Perturbation sweeps sharing one base may
    pass its ModalSolution through ``base_solution`` to reuse the cached
    amplitudes.
    """
    if not 0.0 < gamma <= 1.0 or not 0.0 < tau <= 1.0:
        raise ValueError("gamma and tau must lie in (0, 1]")
    if not np.array_equal(base.initial, perturbed.initial):
        raise ValueError("both problems must share the initial value")
    for prob in (base, perturbed):
        if not sets.contains_orders(prob.orders):
            raise ValueError("orders outside the admissible set")
        if not sets.contains_diffusion(prob.operator):
            raise ValueError("diffusion outside the admissible set")

    delta = perturbation_delta(base, perturbed)
    if gamma < 0.5:
        p_exp = 1.0 / (1.0 - gamma)
        space_gamma = 1.0 - tau
    else:
        p_exp = 2.0
        space_gamma = 1.0
    grid = t_final * (np.arange(1, n_time + 1) / n_time) ** 2.0

    if base_solution is not None and base_solution.problem is not base:
        raise ValueError("base_solution belongs to a different problem")
    sol_b = base_solution if base_solution is not None else ModalSolution(base)
    sol_p = ModalSolution(perturbed)

    def diff_norm_at(t):
        ub = spectral.synthesize(sol_b.modal_values(t), base.spectrum)
        up = spectral.synthesize(sol_p.modal_values(t), perturbed.spectrum)
        return spectral.frac_norm(ub - up, space_gamma, base.spectrum)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            norms = list(pool.map(diff_norm_at, grid))
    else:
        norms = [diff_norm_at(t) for t in grid]
    diff = _lp_time_norm(np.asarray(norms), grid, p_exp)

    if delta == 0.0:
        return LipschitzReport(delta=0.0, diff_norm=diff, ratio=float("nan"),
                               gamma=gamma, tau=tau, time_exponent=p_exp,
                               space_gamma=space_gamma, exact_match=True)
    return LipschitzReport(delta=delta, diff_norm=diff, ratio=diff / delta,
                           gamma=gamma, tau=tau, time_exponent=p_exp,
                           space_gamma=space_gamma, exact_match=False)


def perturbed_problem(base: Problem, channel: str, eps: float) -> Problem:
    """Perturbed copy of a homogeneous problem along one coefficient channel.

    ``channel`` is one of ``alpha`` (orders nudged down by staggered
    amounts), ``q`` (secondary weights shifted), ``diffusion`` (sinusoidal
    bump added to D), or ``all`` (one third of each).
    """
    orders = base.orders
    op = base.operator
    if channel not in ("alpha", "q", "diffusion", "all"):
        raise ValueError(f"unknown perturbation channel: {channel}")

    e_a = eps if channel in ("alpha", "all") else 0.0
    e_q = eps if channel in ("q", "all") else 0.0
    e_d = eps if channel in ("diffusion", "all") else 0.0
    if channel == "all":
        e_a = e_q = e_d = eps / 3.0

    m = orders.m
    alphas = tuple(a - e_a * (j + 1) / (2.0 * m) for j, a in enumerate(orders.alphas))
    qs = (1.0,) + tuple(q + e_q / max(m - 1, 1) for q in orders.qs[1:])
    new_orders = FracOrders(alphas=alphas, qs=qs)

    xs = op.full_x
    length = op.x_right - op.x_left
    bump = np.sin(np.pi * (xs - op.x_left) / length)
    new_op = Operator1D(x_left=op.x_left, x_right=op.x_right,
                        n_interior=op.n_interior,
                        diffusion=op.diffusion + e_d * bump,
                        potential=op.potential.copy())
    return Problem.build(new_orders, new_op, initial=base.initial)
