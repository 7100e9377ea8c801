"""Multinomial Mittag-Leffler function: series, contour integral, dispatch.

The function evaluated here is

    E_{(b_1..b_m), b_0}(z_1..z_m)
        = sum_{k>=0} sum_{k_1+..+k_m=k} (k; k_1..k_m) prod_j z_j^{k_j}
          / Gamma(b_0 + sum_j b_j k_j),

the m-variable generalization of the two-parameter Mittag-Leffler function.
Two evaluation routes are provided: the defining power series (shell by
shell, with an explicit truncation-tail estimate) and a contour-integral
representation along a wedge path that is valid for the "solver family" of
parameters b_1 = a_1, b_j = a_1 - a_j with decreasing orders a_j, together
with an adaptive dispatcher between the two.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .constants import (
    COMPOSITION_BUDGET,
    SERIES_COMP_BUDGET,
    CONTOUR_REFINE_RTOL,
    CONTOUR_TAIL_CUTOFF,
    REAL_RESIDUE_TOL,
    SERIES_CONTOUR_CROSSOVER,
    SERIES_MAX_SHELLS,
    SERIES_TOL,
)

__all__ = [
    "MLParams",
    "MLArgs",
    "ContourConfig",
    "EvalResult",
    "Method",
    "SeriesConvergenceError",
    "QuadratureError",
    "UncoveredRegionError",
    "gamma_real",
    "lgamma_real",
    "multinomial_coefficient",
    "mml_series",
    "mml_contour",
    "mml_eval",
    "e_solver",
    "e_solver_many",
    "e_solver_time_batch",
    "lemma31_residual",
    "solver_params",
    "solver_args",
    "default_contour_config",
]


# ---------------------------------------------------------------------------
# Errors

class SeriesConvergenceError(ArithmeticError):
    """Series did not meet its truncation target within the shell budget.

    Carries the partial sum and the number of shells actually summed.
    """

    def __init__(self, message, partial=None, shells=None):
        super().__init__(message)
        self.partial = partial
        self.shells = shells


class QuadratureError(ArithmeticError):
    """Contour/panel quadrature failed its refinement self-check."""


class UncoveredRegionError(ValueError):
    """Arguments fall outside the validity region of every method."""


# ---------------------------------------------------------------------------
# Gamma function (local Lanczos implementation, real arguments)
#
# g = 7, 9-term coefficient set; relative error below 1e-13 on the strip of
# real arguments used by the series denominators.  Exact values are patched
# in at small integers and half-integers.

_LANCZOS_G = 7.0
_LANCZOS_C = np.array([
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
])

_SQRT_PI = math.sqrt(math.pi)
_LN_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

_EXACT_GAMMA = {float(n): float(math.factorial(n - 1)) for n in range(1, 21)}
_EXACT_GAMMA.update({
    n + 0.5: math.factorial(2 * n) * _SQRT_PI / (4.0 ** n * math.factorial(n))
    for n in range(0, 21)
})

# Lookup tables indexed by round(2x) for the exact-value patches.
_EXACT_TABLE_MAX = 41
_EXACT_GAMMA_TABLE = np.full(_EXACT_TABLE_MAX + 1, np.nan)
for _x, _g in _EXACT_GAMMA.items():
    _EXACT_GAMMA_TABLE[int(round(2 * _x))] = _g
_EXACT_LGAMMA_TABLE = np.log(_EXACT_GAMMA_TABLE)


def _patch_exact(x_arr, out, table):
    doubled = 2.0 * x_arr
    idx = np.round(doubled).astype(np.int64)
    mask = ((doubled == np.round(doubled)) & (idx >= 1)
            & (idx <= _EXACT_TABLE_MAX))
    if np.any(mask):
        np.copyto(out, table[np.where(mask, idx, 1)], where=mask)
    return out


def _lanczos_sum(z):
    # z = x - 1 with x >= 0.5
    acc = np.full_like(z, _LANCZOS_C[0])
    for i in range(1, len(_LANCZOS_C)):
        acc = acc + _LANCZOS_C[i] / (z + i)
    return acc


def gamma_real(x):
    """Gamma(x) for real x (poles at non-positive integers excluded).

    Vectorized; scalar input yields a scalar.  Overflows to the usual IEEE
    inf for x beyond ~171.6.
    """
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any((x_arr <= 0) & (x_arr == np.round(x_arr))):
        raise ValueError("gamma_real: pole at non-positive integer argument")

    out = np.empty_like(x_arr)
    small = x_arr < 0.5
    if np.any(small):
        xs = x_arr[small]
        out[small] = math.pi / (np.sin(math.pi * xs) * gamma_real(1.0 - xs))
    mid = ~small & (x_arr <= 20.0)
    if np.any(mid):
        z = x_arr[mid] - 1.0
        t = z + _LANCZOS_G + 0.5
        out[mid] = (math.sqrt(2.0 * math.pi)
                    * np.power(t, z + 0.5) * np.exp(-t) * _lanczos_sum(z))
    large = x_arr > 20.0
    if np.any(large):
        # Log-space route; the direct power would overflow its intermediate.
        z = x_arr[large] - 1.0
        t = z + _LANCZOS_G + 0.5
        out[large] = np.exp(_LN_SQRT_2PI + (z + 0.5) * np.log(t) - t
                            + np.log(_lanczos_sum(z)))

    # Patch exact values at small integers and half-integers.
    _patch_exact(x_arr, out, _EXACT_GAMMA_TABLE)
    return float(out[0]) if scalar else out


def lgamma_real(x):
    """log Gamma(x) for real x > 0.  Vectorized."""
    x_arr = np.asarray(x, dtype=float)
    scalar = x_arr.ndim == 0
    x_arr = np.atleast_1d(x_arr)
    if np.any(x_arr <= 0):
        raise ValueError("lgamma_real requires positive arguments")

    out = np.empty_like(x_arr)
    small = x_arr < 0.5
    if np.any(small):
        xs = x_arr[small]
        out[small] = (np.log(math.pi / np.sin(math.pi * xs))
                      - lgamma_real(1.0 - xs))
    big = ~small
    if np.any(big):
        z = x_arr[big] - 1.0
        t = z + _LANCZOS_G + 0.5
        out[big] = (_LN_SQRT_2PI + (z + 0.5) * np.log(t) - t
                    + np.log(_lanczos_sum(z)))
    _patch_exact(x_arr, out, _EXACT_LGAMMA_TABLE)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Domain types

class Method(Enum):
    SERIES = "series"
    CONTOUR = "contour"


@dataclass(frozen=True)
class MLParams:
    """Parameter tuple (b_0; b_1..b_m) of the multinomial Mittag-Leffler
    function, with 0 < b_0 < 2 and 0 < b_j < 1."""

    beta0: float
    betas: tuple

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "beta0", float(self.beta0))
        if not 0.0 < self.beta0 < 2.0:
            raise ValueError(f"beta0 must lie in (0, 2), got {self.beta0}")
        if len(self.betas) < 1:
            raise ValueError("at least one series exponent is required")
        for b in self.betas:
            if not 0.0 < b < 1.0:
                raise ValueError(f"series exponents must lie in (0, 1), got {b}")

    @property
    def m(self):
        return len(self.betas)


@dataclass(frozen=True)
class MLArgs:
    """Argument tuple (z_1..z_m); length must match MLParams.m."""

    z: tuple

    def __post_init__(self):
        object.__setattr__(self, "z", tuple(complex(v) for v in self.z))
        if len(self.z) < 1:
            raise ValueError("at least one argument is required")

    @property
    def m(self):
        return len(self.z)


@dataclass(frozen=True)
class ContourConfig:
    """Wedge-contour quadrature settings.

    The path consists of a circular arc of radius ``R`` spanning arguments
    [-theta, theta] and two outgoing rays at arguments +-theta, truncated
    where the exponential factor drops below ``tail_cutoff``.  The angles
    must satisfy a_1*pi/2 < theta < mu < a_1*pi.
    """

    R: float
    theta: float
    mu: float
    quad_points: int = 20
    tail_cutoff: float = CONTOUR_TAIL_CUTOFF

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("contour radius R must be positive")
        if self.quad_points < 2:
            raise ValueError("quad_points must be at least 2")
        if not 0.0 < self.tail_cutoff < 1.0:
            raise ValueError("tail_cutoff must lie in (0, 1)")

    def validate_angles(self, alpha1):
        lo = alpha1 * math.pi / 2.0
        hi = alpha1 * math.pi
        if not lo < self.theta < self.mu < hi:
            raise ValueError(
                "contour angles must satisfy "
                f"a1*pi/2 < theta < mu < a1*pi, got theta={self.theta}, "
                f"mu={self.mu} for a1={alpha1}")


@dataclass(frozen=True)
class EvalResult:
    """Value plus an absolute error estimate and the method that produced it."""

    value: complex
    abs_error_estimate: float
    method: Method

    def __post_init__(self):
        if not math.isfinite(self.abs_error_estimate) or self.abs_error_estimate < 0:
            raise ValueError("abs_error_estimate must be finite and non-negative")


# ---------------------------------------------------------------------------
# Multinomial coefficients and shell compositions

# Sanity cap: shells beyond this are outside any regime the series evaluator
# is meant for, and factorials would be astronomically large.
_MAX_EXACT_K = 100_000


def multinomial_coefficient(k, parts):
    """Exact multinomial coefficient (k; k_1, ..., k_m) = k!/(k_1!...k_m!).

    Any part equal to -1 yields 0, matching the degenerate convention used
    by the recurrence sum_j (k-1; ..., k_j - 1, ...) = (k; k_1..k_m).
    """
    parts = list(parts)
    if any(p == -1 for p in parts):
        return 0
    if any(p < 0 for p in parts):
        raise ValueError("parts must be non-negative (or -1 for the degenerate case)")
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > _MAX_EXACT_K:
        raise OverflowError(f"multinomial coefficient requested for k={k} > {_MAX_EXACT_K}")
    if sum(parts) != k:
        raise ValueError(f"parts must sum to k={k}, got sum {sum(parts)}")
    out = 1
    remaining = k
    for p in parts:
        out *= math.comb(remaining, p)
        remaining -= p
    return out


@lru_cache(maxsize=None)
def _compositions(k, m):
    """All m-part compositions of k as an (N, m) int array, first part
    ascending; deterministic order, shared across calls."""
    if m == 1:
        return np.array([[k]], dtype=np.int64)
    blocks = []
    for first in range(k + 1):
        sub = _compositions(k - first, m - 1)
        head = np.full((sub.shape[0], 1), first, dtype=np.int64)
        blocks.append(np.hstack([head, sub]))
    return np.vstack(blocks)


@lru_cache(maxsize=None)
def _log_multinomials(k, m):
    """log (k; k_1..k_m) for every composition in _compositions(k, m)."""
    comps = _compositions(k, m)
    return lgamma_real(float(k) + 1.0) - lgamma_real(comps + 1.0).sum(axis=1)


# ---------------------------------------------------------------------------
# Series evaluation

def _shell_count(k, m):
    return math.comb(k + m - 1, m - 1)


def _series_weights(beta0, betas, z_rest, z1_absmax, tol, max_k):
    """Accumulate the series as a polynomial in z_1.

    Returns (W, absW, shells, tail_estimate) where W[k1] is the
    coefficient of z_1^{k1}, absW[k1] the corresponding sum of term
    magnitudes (the cancellation budget of the inner sums), shells the
    number of shells summed, and tail_estimate a bound on the dropped tail
    at |z_1| = z1_absmax.  Truncation stops once the absolute-value shell
    majorant falls below tol for three consecutive shells.
    """
    m = 1 + len(z_rest)
    betas_arr = np.asarray(betas, dtype=float)
    z_rest = np.asarray(z_rest, dtype=complex)
    abs_rest = np.abs(z_rest)
    with np.errstate(divide="ignore"):
        ln_rest = np.log(abs_rest)           # -inf where z_j = 0
        ln_z1max = math.log(z1_absmax) if z1_absmax > 0 else -math.inf
    arg_rest = np.angle(z_rest)

    S = z1_absmax + abs_rest.sum()
    beta_min = float(betas_arr.min())

    W = np.zeros(max_k + 1, dtype=complex)
    absW = np.zeros(max_k + 1)
    log_tol = math.log(tol) if tol > 0 else -math.inf
    below = 0
    below_major = 0
    sharp_stop = None
    bounds = []
    shells = 0
    comp_total = 0
    for k in range(max_k + 1):
        n_comp = _shell_count(k, m)
        comp_total += n_comp
        if n_comp > COMPOSITION_BUDGET or (
                comp_total > SERIES_COMP_BUDGET and sharp_stop is None):
            raise SeriesConvergenceError(
                f"series cost budget exhausted at shell {k} with m={m} "
                f"({comp_total} compositions enumerated)",
                partial=W[:k].copy(), shells=k)
        comps = _compositions(k, m)
        lnmult = _log_multinomials(k, m)
        garg = beta0 + comps @ betas_arr
        lngam = lgamma_real(garg)
        if m > 1:
            rest = comps[:, 1:]
            with np.errstate(invalid="ignore"):
                ln_pow = np.where(rest > 0, rest * ln_rest, 0.0).sum(axis=1)
            phase = rest @ arg_rest
        else:
            ln_pow = 0.0
            phase = 0.0
        logmag = lnmult + ln_pow - lngam
        coef = np.exp(logmag) * (np.cos(phase) + 1j * np.sin(phase))
        k1 = comps[:, 0]
        W[: k + 1] += (np.bincount(k1, weights=coef.real, minlength=k + 1)
                       + 1j * np.bincount(k1, weights=coef.imag, minlength=k + 1))
        absW[: k + 1] += np.bincount(k1, weights=np.exp(logmag), minlength=k + 1)

        with np.errstate(invalid="ignore"):
            shell_logs = logmag + np.where(k1 > 0, k1 * ln_z1max, 0.0)
        finite = shell_logs[np.isfinite(shell_logs)]
        log_b = -math.inf if finite.size == 0 else _logsumexp(finite)
        bounds.append(log_b)
        shells = k
        if log_b < log_tol:
            below += 1
        else:
            below = 0
        if below >= 3 and sharp_stop is None:
            sharp_stop = k
        if sharp_stop is not None:
            # Keep summing (cheap tiny shells) until the crude majorant
            # S^k / Gamma(b0 + b_min k) certifies the tail too, so the
            # reported error estimate is tight; budget-capped for series
            # whose majorant decays much later than the shells themselves.
            log_major = (k * math.log(S) - lgamma_real(beta0 + beta_min * k)
                         if S > 0 else -math.inf)
            if log_major < log_tol:
                below_major += 1
            else:
                below_major = 0
            if (below_major >= 3 or k >= min(max_k, sharp_stop + 48)
                    or comp_total > SERIES_COMP_BUDGET):
                break
    else:
        raise SeriesConvergenceError(
            f"series did not converge within {max_k} shells "
            f"(sum of |z_j| = {S:.3g})",
            partial=W.copy(), shells=max_k)

    tail = _geometric_tail(bounds, S, beta_min, beta0)
    return W[: shells + 1], absW[: shells + 1], shells, tail


def _logsumexp(v):
    mx = float(np.max(v))
    if not math.isfinite(mx):
        return mx
    return mx + math.log(float(np.exp(v - mx).sum()))


def _geometric_tail(log_bounds, S, beta_min, beta0):
    """Tail estimate past the last summed shell.

    Geometric extrapolation of the observed shell majorants, floored by the
    crude single-exponent majorant S^k / Gamma(beta0 + beta_min k) whenever
    the latter is already decaying.
    """
    if len(log_bounds) < 2:
        return 0.0
    last = log_bounds[-1]
    prev = max(b for b in log_bounds[-4:-1]) if len(log_bounds) >= 4 else log_bounds[-2]
    if not math.isfinite(last):
        return 0.0
    rho = math.exp(min(last - prev, -1e-3)) if math.isfinite(prev) else 0.5
    rho = min(rho, 0.95)
    tail = math.exp(last) * rho / (1.0 - rho)

    k_next = len(log_bounds)
    log_major_next = (k_next * math.log(S) - lgamma_real(beta0 + beta_min * k_next)
                      if S > 0 else -math.inf)
    k_after = k_next + 1
    log_major_after = (k_after * math.log(S) - lgamma_real(beta0 + beta_min * k_after)
                       if S > 0 else -math.inf)
    if log_major_after < log_major_next:  # majorant decaying: usable bound
        rho_m = min(math.exp(log_major_after - log_major_next), 0.95)
        tail = max(tail, math.exp(log_major_next) / (1.0 - rho_m))
    return tail


def _polyval(W, z):
    """Horner evaluation of sum_k W[k] z^k, vectorized over z."""
    z = np.asarray(z, dtype=complex)
    acc = np.full(z.shape, W[-1], dtype=complex)
    for c in W[-2::-1]:
        acc = acc * z + c
    return acc


def _rounding_floor(absW, z_abs):
    """Estimated rounding noise at |z| = z_abs, from the accumulated term
    magnitudes (inner-sum cancellation included)."""
    mags = _polyval(absW.astype(complex), np.asarray(z_abs, dtype=float)).real
    return 16.0 * np.finfo(float).eps * mags


def mml_series(params: MLParams, args: MLArgs, tol: float = SERIES_TOL,
               max_k: int = SERIES_MAX_SHELLS) -> EvalResult:
    """Evaluate the multinomial Mittag-Leffler function by its power series.

    Truncates when the absolute-value shell majorant stays below ``tol``
    for three consecutive shells; the returned error estimate combines the
    geometric tail of that majorant with the double-precision rounding
    floor of the alternating sum.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_k < 1:
        raise ValueError("max_k must be at least 1")
    if params.m != args.m:
        raise ValueError(f"parameter/argument length mismatch: {params.m} != {args.m}")
    z1 = args.z[0]
    z_rest = args.z[1:]
    W, absW, _, tail = _series_weights(params.beta0, params.betas, z_rest,
                                       abs(z1), tol, max_k)
    value = complex(_polyval(W, z1))
    est = tail + float(_rounding_floor(absW, abs(z1)))
    return EvalResult(value, est, Method.SERIES)


# ---------------------------------------------------------------------------
# Contour evaluation (solver family)

def _family_alphas(params: MLParams):
    """Recover the decreasing orders (a_1..a_m) from solver-family exponents
    b_1 = a_1, b_j = a_1 - a_j; raises if the pattern does not hold."""
    a1 = params.betas[0]
    alphas = [a1] + [a1 - b for b in params.betas[1:]]
    for i in range(len(alphas) - 1):
        if not alphas[i] > alphas[i + 1]:
            raise ValueError(
                "contour evaluation requires solver-family parameters "
                "(b_1 = a_1, b_j = a_1 - a_j with decreasing a_j)")
    if alphas[-1] <= 0:
        raise ValueError("recovered orders must be positive")
    return tuple(alphas)


def default_contour_config(params: MLParams, args: MLArgs) -> ContourConfig:
    """Reasonable contour for the given arguments.

    For arguments in the wedge mu <= |arg z_1| <= pi the radius may be held
    small (the integrand has no pole between admissible contours there), so
    R = 1 is used.  Outside the wedge R must clear the series-convergence
    inequality R > |z_1| + K sum_j R^{a_j/a_1}.
    """
    alphas = _family_alphas(params)
    a1 = alphas[0]
    mu = 0.75 * a1 * math.pi
    theta = 0.5 * (a1 * math.pi / 2.0 + mu)
    z1 = args.z[0]
    K = max([abs(v) for v in args.z[1:]], default=0.0)
    if abs(cmath.phase(z1)) >= mu or z1 == 0:
        R = 1.0
    else:
        R = abs(z1) + K + 1.0
        for _ in range(60):
            target = abs(z1) + K * sum(R ** (a / a1) for a in alphas[1:]) + 1.0
            if R > target - 1.0 + 1e-12 and R > target * 0.999:
                break
            R = target
        if R ** (1.0 / a1) > 700.0:
            raise UncoveredRegionError(
                "contour radius required for |arg z_1| < mu overflows the "
                "exponential factor; no valid evaluation region")
    return ContourConfig(R=R, theta=theta, mu=mu)


@lru_cache(maxsize=64)
def _contour_plan(alphas, beta0, R, theta, quad_points, tail_cutoff):
    """Precomputed nodes: returns (zeta, numer, shift_pows) where numer
    already contains the exponential factor, the power of zeta, the path
    derivative, the quadrature weight and the 1/(2 a1 pi i) prefactor."""
    a1 = alphas[0]
    gl_x, gl_w = np.polynomial.legendre.leggauss(quad_points)

    nodes = []
    weights = []

    # Arc |zeta| = R, phi in [-theta, theta], split into panels.
    n_arc = max(4, int(math.ceil(theta / (math.pi / 16.0))))
    edges = np.linspace(-theta, theta, n_arc + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        phi = 0.5 * (hi - lo) * gl_x + 0.5 * (hi + lo)
        zeta = R * np.exp(1j * phi)
        dzeta = 1j * zeta
        nodes.append(zeta)
        weights.append(0.5 * (hi - lo) * gl_w * dzeta)

    # Rays arg = +-theta, rho in [R, rho_max], geometric panels.
    decay = abs(math.cos(theta / a1))
    rho_max = (math.log(1.0 / tail_cutoff) / decay) ** a1
    if rho_max > R:
        ratio = 1.35
        n_ray = max(3, int(math.ceil(math.log(rho_max / R) / math.log(ratio))))
        redges = R * (rho_max / R) ** (np.arange(n_ray + 1) / n_ray)
        for sign in (+1.0, -1.0):
            phase = np.exp(1j * sign * theta)
            for lo, hi in zip(redges[:-1], redges[1:]):
                rho = 0.5 * (hi - lo) * gl_x + 0.5 * (hi + lo)
                zeta = rho * phase
                nodes.append(zeta)
                weights.append(sign * 0.5 * (hi - lo) * gl_w * phase)

    zeta = np.concatenate(nodes)
    w = np.concatenate(weights)
    numer = (np.exp(zeta ** (1.0 / a1)) * zeta ** ((1.0 - beta0) / a1)
             * w / (2.0 * a1 * math.pi * 1j))
    shift_pows = np.array([zeta ** (a / a1) for a in alphas[1:]])
    return zeta, numer, shift_pows


def _contour_eval(alphas, beta0, cfg, z1_arr, z_rest_arr):
    """Evaluate the contour integral for a batch.

    z1_arr has shape (B,); z_rest_arr has shape (B, m-1) or (m-1,) shared.
    Returns (values, refinement_error, primary_scale) arrays of shape (B,):
    primary_scale is the sum of node-contribution magnitudes, the natural
    yardstick when the integral itself nearly cancels.
    """
    z1_arr = np.atleast_1d(np.asarray(z1_arr, dtype=complex))
    z_rest_arr = np.asarray(z_rest_arr, dtype=complex)
    out = []
    scale = None
    for qp in (cfg.quad_points, 2 * cfg.quad_points):
        zeta, numer, pows = _contour_plan(tuple(alphas), beta0, cfg.R,
                                          cfg.theta, qp, cfg.tail_cutoff)
        denom = zeta[None, :] - z1_arr[:, None]
        if pows.shape[0]:
            if z_rest_arr.ndim == 1:
                denom = denom - np.tensordot(z_rest_arr, pows, axes=(0, 0))[None, :]
            else:
                denom = denom - np.einsum("bj,jn->bn", z_rest_arr, pows)
        dmin = np.abs(denom).min()
        if dmin <= 1e-300:
            raise QuadratureError("contour passes through a zero of the denominator")
        contrib = numer[None, :] / denom
        out.append(contrib.sum(axis=1))
        scale = np.abs(contrib).sum(axis=1)
    coarse, fine = out
    return fine, np.abs(fine - coarse), scale


def mml_contour(params: MLParams, args: MLArgs, cfg: ContourConfig) -> EvalResult:
    """Evaluate the solver-family function by the wedge contour integral.

    Requires mu <= |arg z_1| <= pi or, outside that wedge, a radius R
    clearing R > |z_1| + K sum_j R^{a_j/a_1}; the remaining arguments must
    be real and non-positive.
    """
    if params.m != args.m:
        raise ValueError(f"parameter/argument length mismatch: {params.m} != {args.m}")
    alphas = _family_alphas(params)
    a1 = alphas[0]
    cfg.validate_angles(a1)

    z1 = complex(args.z[0])
    z_rest = np.asarray(args.z[1:], dtype=complex)
    if np.any(np.abs(z_rest.imag) > 1e-13 * (1.0 + np.abs(z_rest.real))):
        raise UncoveredRegionError("contour evaluation needs real z_j for j >= 2")
    if np.any(z_rest.real > 1e-300):
        raise UncoveredRegionError("contour evaluation needs z_j <= 0 for j >= 2")
    K = float(np.max(np.abs(z_rest))) if z_rest.size else 0.0

    in_wedge = z1 == 0 or abs(cmath.phase(z1)) >= cfg.mu
    if not in_wedge:
        # Outside the wedge the representation is only backed by the series
        # region, which needs the radius inequality.
        required = abs(z1) + K * sum(cfg.R ** (a / a1) for a in alphas[1:])
        if cfg.R <= required:
            raise UncoveredRegionError(
                f"contour radius R={cfg.R} violates R > |z_1| + K sum R^(a_j/a_1) "
                f"= {required:.6g} and z_1 lies outside the wedge |arg| >= mu")
        if cfg.R ** (1.0 / a1) > 700.0:
            raise QuadratureError("contour radius overflows the exponential factor")

    vals, errs, scales = _contour_eval(alphas, params.beta0, cfg,
                                       np.array([z1]), z_rest.real)
    value, err = complex(vals[0]), float(errs[0])
    scale = max(abs(value), float(scales[0]) * 1e-2, 1e-300)
    if err > CONTOUR_REFINE_RTOL * scale + 1e-15:
        raise QuadratureError(
            f"contour quadrature refinement disagreement {err:.3g} "
            f"exceeds tolerance at value {value:.6g}")
    est = err + 16.0 * np.finfo(float).eps * float(scales[0])
    return EvalResult(value, est, Method.CONTOUR)


# ---------------------------------------------------------------------------
# Dispatch

def _series_feasible(params: MLParams, args: MLArgs, tol, max_k):
    """Cheap shell-count estimate from the single-exponent majorant."""
    S = sum(abs(v) for v in args.z)
    if S == 0:
        return True
    beta_min = min(params.betas)
    below = 0
    for k in range(max_k + 1):
        if _shell_count(k, params.m) > COMPOSITION_BUDGET:
            return False
        log_b = k * math.log(S) - lgamma_real(params.beta0 + beta_min * k)
        if log_b < math.log(tol):
            below += 1
            if below >= 3:
                return True
        else:
            below = 0
    return False


def _contour_applicable(params: MLParams, args: MLArgs):
    try:
        alphas = _family_alphas(params)
    except ValueError:
        return False
    mu = 0.75 * alphas[0] * math.pi
    z1 = complex(args.z[0])
    for v in args.z[1:]:
        v = complex(v)
        if abs(v.imag) > 1e-13 * (1.0 + abs(v.real)) or v.real > 1e-300:
            return False
    return z1 == 0 or abs(cmath.phase(z1)) >= mu


def mml_eval(params: MLParams, args: MLArgs, tol: float = SERIES_TOL,
             max_k: int = SERIES_MAX_SHELLS) -> EvalResult:
    """Adaptive evaluation: series for small arguments, contour beyond.

    Dispatches on the total argument magnitude sum |z_j| (every argument
    feeds the alternating sum, so each contributes to the double-precision
    cancellation budget).  The crossover constant is calibrated offline
    (see scripts/calibrate_crossover.py) and stored in
    :data:`mtfrac.constants.SERIES_CONTOUR_CROSSOVER`.
    """
    if params.m != args.m:
        raise ValueError(f"parameter/argument length mismatch: {params.m} != {args.m}")
    z_total = sum(abs(v) for v in args.z)
    if z_total <= SERIES_CONTOUR_CROSSOVER:
        try:
            return mml_series(params, args, tol=tol, max_k=max_k)
        except SeriesConvergenceError:
            if _contour_applicable(params, args):
                return mml_contour(params, args, default_contour_config(params, args))
            raise
    if _contour_applicable(params, args):
        return mml_contour(params, args, default_contour_config(params, args))
    if _series_feasible(params, args, tol, max_k):
        return mml_series(params, args, tol=tol, max_k=max_k)
    raise UncoveredRegionError(
        f"sum |z_j| = {z_total:.3g} exceeds the series crossover but the "
        "arguments do not satisfy the contour requirements (solver-family "
        "parameters, mu <= |arg z_1| <= pi, real non-positive z_j for j >= 2)")


# ---------------------------------------------------------------------------
# Solver-family helpers: E^{(n)}(t)

def solver_params(orders, beta0: float) -> MLParams:
    """Parameter tuple (beta0; a_1, a_1 - a_2, ..., a_1 - a_m)."""
    alphas = orders.alphas
    betas = (alphas[0],) + tuple(alphas[0] - a for a in alphas[1:])
    return MLParams(beta0=beta0, betas=betas)


def solver_args(orders, lam: float, t: float) -> MLArgs:
    """Argument tuple (-lam t^{a_1}, -q_2 t^{a_1-a_2}, ..., -q_m t^{a_1-a_m})."""
    alphas = orders.alphas
    qs = orders.qs
    a1 = alphas[0]
    z = [-lam * t ** a1]
    z += [-qs[j] * t ** (a1 - alphas[j]) for j in range(1, len(alphas))]
    return MLArgs(z=tuple(z))


def _check_real(value, est, context):
    tol = max(REAL_RESIDUE_TOL * (1.0 + abs(value)), 8.0 * est + 1e-12)
    if abs(value.imag) > tol:
        raise ArithmeticError(
            f"{context}: imaginary residue {value.imag:.3g} above tolerance")
    return value.real


def _check_real_vec(values, ests, context):
    values = np.atleast_1d(values)
    ests = np.broadcast_to(np.atleast_1d(ests), values.shape)
    tol = np.maximum(REAL_RESIDUE_TOL * (1.0 + np.abs(values)),
                     8.0 * ests + 1e-12)
    bad = np.abs(values.imag) > tol
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ArithmeticError(
            f"{context}: imaginary residue {values.imag[i]:.3g} above tolerance")
    return values.real


def e_solver(lam: float, orders, beta0: float, t: float) -> float:
    """E^{(n)}(t) with z_1 = -lam t^{a_1}, z_j = -q_j t^{a_1-a_j}.

    Real-valued by construction; the imaginary residue of the numerical
    evaluation is asserted to be below tolerance.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return 1.0 / gamma_real(beta0)
    params = solver_params(orders, beta0)
    args = solver_args(orders, lam, t)
    res = mml_eval(params, args)
    return _check_real(res.value, res.abs_error_estimate, "e_solver")


def e_solver_many(lams, orders, beta0: float, t: float) -> np.ndarray:
    """Vectorized :func:`e_solver` over a family of eigenvalues at fixed t."""
    lams = np.asarray(lams, dtype=float)
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0.0:
        return np.full(lams.shape, 1.0 / gamma_real(beta0))
    params = solver_params(orders, beta0)
    args0 = solver_args(orders, 0.0, t)
    z_rest = np.asarray(args0.z[1:], dtype=complex)
    a1 = orders.alphas[0]
    z1 = -lams * t ** a1

    out = np.empty(lams.shape, dtype=float)
    rest_total = float(np.abs(z_rest).sum())
    small = np.abs(z1) + rest_total <= SERIES_CONTOUR_CROSSOVER
    if np.any(small):
        try:
            zs = z1[small]
            W, absW, _, tail = _series_weights(params.beta0, params.betas,
                                               tuple(z_rest),
                                               float(np.abs(zs).max()),
                                               SERIES_TOL, SERIES_MAX_SHELLS)
            vals = _polyval(W, zs)
            floors = _rounding_floor(absW, np.abs(zs))
            out[small] = _check_real_vec(vals, tail + np.atleast_1d(floors),
                                         "e_solver_many")
        except SeriesConvergenceError:
            small = np.zeros(lams.shape, dtype=bool)  # contour for everything
    if np.any(~small):
        alphas = _family_alphas(params)
        cfg = default_contour_config(
            params, MLArgs(z=(complex(z1[~small][0]),) + tuple(z_rest)))
        vals, errs, scales = _contour_eval(alphas, beta0, cfg, z1[~small],
                                           z_rest.real)
        scale = np.maximum(np.abs(vals), 1e-2 * scales)
        if np.any(errs > CONTOUR_REFINE_RTOL * scale + 1e-15):
            raise QuadratureError("contour refinement disagreement in batch")
        ests = errs + 16.0 * np.finfo(float).eps * scales
        out[~small] = _check_real_vec(vals, ests, "e_solver_many")
    return out


def e_solver_time_batch(lam: float, orders, beta0: float, ts) -> np.ndarray:
    """Vectorized :func:`e_solver` over a time grid at fixed eigenvalue.

    All positive times are evaluated through the contour representation,
    which is valid for every solver-family argument; t = 0 entries return
    the exact limit 1/Gamma(beta0).
    """
    ts = np.asarray(ts, dtype=float)
    if np.any(ts < 0):
        raise ValueError("times must be non-negative")
    out = np.empty(ts.shape, dtype=float)
    zero = ts == 0.0
    out[zero] = 1.0 / gamma_real(beta0)
    if np.all(zero):
        return out
    tpos = ts[~zero]
    params = solver_params(orders, beta0)
    alphas = orders.alphas
    a1 = alphas[0]
    z1 = -lam * tpos ** a1
    z_rest = np.column_stack([
        -orders.qs[j] * tpos ** (a1 - alphas[j]) for j in range(1, len(alphas))
    ]) if len(alphas) > 1 else np.zeros((tpos.size, 0))
    cfg = default_contour_config(
        params, MLArgs(z=(complex(z1[0]),) + tuple(z_rest[0] if z_rest.size else ())))
    vals, errs, scales = _contour_eval(_family_alphas(params), beta0, cfg,
                                       z1, z_rest)
    scale = np.maximum(np.abs(vals), 1e-2 * scales)
    if np.any(errs > CONTOUR_REFINE_RTOL * scale + 1e-15):
        raise QuadratureError("contour refinement disagreement in time batch")
    ests = errs + 16.0 * np.finfo(float).eps * scales
    out[~zero] = _check_real_vec(vals, ests, "e_solver_time_batch")
    return out


# ---------------------------------------------------------------------------
# Identity residual

def _params_shifted(params: MLParams, shift: float):
    """Parameter tuple with beta0 shifted by a series exponent.

    The shifted first parameter may step past the (0, 2) construction range;
    the series itself stays well-defined, so validation is bypassed here.
    """
    p = object.__new__(MLParams)
    object.__setattr__(p, "beta0", params.beta0 + shift)
    object.__setattr__(p, "betas", params.betas)
    return p


def lemma31_residual(params: MLParams, args: MLArgs,
                     tol: float = 1e-14) -> float:
    """Residual of the parameter-shift identity

        1/Gamma(b_0) + sum_j z_j E_{(b), b_0 + b_j}(z) = E_{(b), b_0}(z),

    evaluated with the series at truncation tolerance ``tol``."""
    if params.m != args.m:
        raise ValueError(f"parameter/argument length mismatch: {params.m} != {args.m}")
    lhs = 1.0 / gamma_real(params.beta0)
    for j, zj in enumerate(args.z):
        lhs += zj * mml_series(_params_shifted(params, params.betas[j]),
                               args, tol=tol).value
    rhs = mml_series(params, args, tol=tol).value
    return abs(lhs - rhs)
