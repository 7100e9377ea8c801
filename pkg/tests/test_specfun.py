import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtfrac import specfun as sf
from mtfrac.solver import FracOrders

# Classical two-parameter value E_{1/2,1}(-1) = e * erfc(1).
E_HALF_AT_MINUS_1 = math.e * math.erfc(1.0)  # 0.42758357615580705

# Frozen from the extended-precision oracle (oracle.highprec_series, 40
# digits): E_{(0.8,0.3),1}(-0.7, -0.4).
E_M2_FROZEN = 0.3962122366410500275


# ---------------------------------------------------------------------------
# Gamma

def test_gamma_exact_points():
    assert sf.gamma_real(1.0) == 1.0
    assert sf.gamma_real(0.5) == math.sqrt(math.pi)
    assert sf.gamma_real(2.0) == 1.0
    assert sf.gamma_real(1.5) == math.sqrt(math.pi) / 2.0


def test_gamma_accuracy_strip():
    xs = np.concatenate([np.linspace(0.01, 0.49, 49),
                         np.linspace(0.51, 30.0, 400)])
    ours = sf.gamma_real(xs)
    ref = np.array([math.gamma(float(x)) for x in xs])
    assert np.max(np.abs(ours - ref) / np.abs(ref)) < 1e-13


def test_lgamma_accuracy():
    xs = np.linspace(0.05, 500.0, 300)
    ours = sf.lgamma_real(xs)
    ref = np.array([math.lgamma(float(x)) for x in xs])
    assert np.max(np.abs(ours - ref) / np.maximum(np.abs(ref), 1.0)) < 1e-13


def test_gamma_pole_rejected():
    with pytest.raises(ValueError):
        sf.gamma_real(0.0)
    with pytest.raises(ValueError):
        sf.lgamma_real(-1.0)


# ---------------------------------------------------------------------------
# Multinomial coefficients

def test_multinomial_basic():
    assert sf.multinomial_coefficient(3, [1, 1, 1]) == 6
    assert sf.multinomial_coefficient(5, [5, 0]) == 1
    assert (sf.multinomial_coefficient(3, [1, 2])
            + sf.multinomial_coefficient(3, [2, 1])
            == sf.multinomial_coefficient(4, [2, 2]) == 6)


def test_multinomial_degenerate_and_errors():
    assert sf.multinomial_coefficient(3, [-1, 4]) == 0
    with pytest.raises(ValueError):
        sf.multinomial_coefficient(3, [1, 1])
    with pytest.raises(ValueError):
        sf.multinomial_coefficient(3, [-2, 5])
    with pytest.raises(OverflowError):
        sf.multinomial_coefficient(200_000, [100_000, 100_000])


@given(st.integers(min_value=1, max_value=12), st.integers(min_value=1, max_value=4),
       st.data())
@settings(max_examples=60, deadline=None)
def test_multinomial_recurrence_property(k, m, data):
    parts = []
    remaining = k
    for j in range(m - 1):
        parts.append(data.draw(st.integers(min_value=0, max_value=remaining)))
        remaining -= parts[-1]
    parts.append(remaining)
    total = sum(
        sf.multinomial_coefficient(k - 1, parts[:j] + [parts[j] - 1] + parts[j + 1:])
        for j in range(m))
    assert total == sf.multinomial_coefficient(k, parts)


# ---------------------------------------------------------------------------
# Series evaluation

def test_series_zero_args_is_inverse_gamma():
    params = sf.MLParams(beta0=1.0, betas=(0.4, 0.7))
    res = sf.mml_series(params, sf.MLArgs(z=(0.0, 0.0)))
    assert res.value == 1.0
    assert res.method is sf.Method.SERIES


def test_series_classical_value():
    res = sf.mml_series(sf.MLParams(beta0=1.0, betas=(0.5,)),
                        sf.MLArgs(z=(-1.0,)))
    assert abs(res.value.real - E_HALF_AT_MINUS_1) < 1e-12
    assert abs(res.value.imag) < 1e-15


def test_series_m2_matches_extended_precision():
    from mtfrac.oracle import highprec_series
    params = sf.MLParams(beta0=1.0, betas=(0.8, 0.3))
    args = sf.MLArgs(z=(-0.7, -0.4))
    res = sf.mml_series(params, args)
    assert abs(res.value.real - E_M2_FROZEN) < 1e-12
    live = highprec_series(params, args, digits=30)
    assert abs(res.value - live.value) < 1e-12


def test_series_nonconvergence_carries_partial():
    params = sf.MLParams(beta0=1.0, betas=(0.5,))
    with pytest.raises(sf.SeriesConvergenceError) as exc:
        sf.mml_series(params, sf.MLArgs(z=(-40.0,)), max_k=30)
    assert exc.value.partial is not None
    assert exc.value.shells == 30


def test_series_input_validation():
    params = sf.MLParams(beta0=1.0, betas=(0.5,))
    with pytest.raises(ValueError):
        sf.mml_series(params, sf.MLArgs(z=(-1.0, -2.0)))
    with pytest.raises(ValueError):
        sf.mml_series(params, sf.MLArgs(z=(-1.0,)), tol=-1.0)
    with pytest.raises(ValueError):
        sf.MLParams(beta0=2.5, betas=(0.5,))
    with pytest.raises(ValueError):
        sf.MLParams(beta0=1.0, betas=(1.5,))
    with pytest.raises(ValueError):
        sf.EvalResult(value=1.0, abs_error_estimate=-1.0, method=sf.Method.SERIES)


# ---------------------------------------------------------------------------
# Contour evaluation

def _family(alphas, qs, beta0, lam, t):
    orders = FracOrders(alphas=alphas, qs=qs)
    return (sf.solver_params(orders, beta0), sf.solver_args(orders, lam, t))


def test_contour_agrees_with_series_overlap():
    for alphas, qs, lam, t in (
        ((0.5,), (1.0,), 2.0, 1.0),
        ((0.9, 0.3), (1.0, 1.5), 2.0, 1.0),
        ((0.8, 0.5, 0.2), (1.0, 1.0, 1.0), 1.5, 1.0),
    ):
        params, args = _family(alphas, qs, 1.0 + alphas[0], lam, t)
        rs = sf.mml_series(params, args)
        rc = sf.mml_contour(params, args, sf.default_contour_config(params, args))
        assert abs(rs.value - rc.value) / abs(rc.value) < 1e-8


def test_contour_large_argument_bound():
    # |E| <= C / |z_1| along the negative axis; the scaled product must stay
    # bounded as |z_1| sweeps five decades.
    params = sf.MLParams(beta0=0.5, betas=(0.5,))
    products = []
    for x in (1e3, 1e4, 1e5, 1e6):
        res = sf.mml_contour(params, sf.MLArgs(z=(-x,)),
                             sf.default_contour_config(params, sf.MLArgs(z=(-x,))))
        products.append((1.0 + x) * abs(res.value))
    assert max(products) < 10.0 * max(products[0], 1e-12)


def test_contour_quad_point_doubling_within_estimate():
    params, args = _family((0.7, 0.3), (1.0, 1.0), 1.7, 30.0, 1.0)
    cfg = sf.default_contour_config(params, args)
    r1 = sf.mml_contour(params, args, cfg)
    cfg2 = sf.ContourConfig(R=cfg.R, theta=cfg.theta, mu=cfg.mu,
                            quad_points=2 * cfg.quad_points,
                            tail_cutoff=cfg.tail_cutoff)
    r2 = sf.mml_contour(params, args, cfg2)
    assert abs(r1.value - r2.value) <= r1.abs_error_estimate + r2.abs_error_estimate


def test_contour_rejects_non_family_params():
    params = sf.MLParams(beta0=1.0, betas=(0.3, 0.8))  # not a_1 > a_1 - a_j pattern
    args = sf.MLArgs(z=(-5.0, -1.0))
    with pytest.raises(ValueError):
        sf.mml_contour(params, args, sf.ContourConfig(R=1.0, theta=0.2, mu=0.25))


def test_contour_radius_inequality_outside_wedge():
    # z_1 off the cut with |arg z_1| < mu requires the series-region radius.
    params = sf.MLParams(beta0=1.0, betas=(0.5,))
    z1 = 5.0 * complex(math.cos(0.3), math.sin(0.3))  # small argument
    args = sf.MLArgs(z=(z1,))
    cfg = sf.ContourConfig(R=1.0, theta=5 * 0.5 * math.pi / 8,
                           mu=3 * 0.5 * math.pi / 4)
    with pytest.raises(sf.UncoveredRegionError):
        sf.mml_contour(params, args, cfg)


def test_contour_config_invariants():
    with pytest.raises(ValueError):
        sf.ContourConfig(R=-1.0, theta=0.3, mu=0.4)
    cfg = sf.ContourConfig(R=1.0, theta=0.9, mu=0.4)  # theta > mu
    with pytest.raises(ValueError):
        cfg.validate_angles(0.5)


# ---------------------------------------------------------------------------
# Dispatch

def test_dispatch_small_uses_series():
    res = sf.mml_eval(sf.MLParams(beta0=1.0, betas=(0.5,)), sf.MLArgs(z=(-1.0,)))
    assert res.method is sf.Method.SERIES


def test_dispatch_large_uses_contour():
    res = sf.mml_eval(sf.MLParams(beta0=1.0, betas=(0.5,)), sf.MLArgs(z=(-1e8,)))
    assert res.method is sf.Method.CONTOUR
    assert abs(res.value) < 1e-6


def test_dispatch_crossover_agreement():
    from mtfrac.constants import SERIES_CONTOUR_CROSSOVER as XC
    params = sf.MLParams(beta0=1.0, betas=(0.6,))
    for x in (XC * 0.98, XC * 1.02):
        args = sf.MLArgs(z=(-x,))
        rs = sf.mml_series(params, args)
        rc = sf.mml_contour(params, args, sf.default_contour_config(params, args))
        assert abs(rs.value - rc.value) / abs(rc.value) < 1e-8


def test_dispatch_uncovered_region():
    # Large argument away from the cut: contour needs an overflowing radius
    # and the series cannot converge.
    params = sf.MLParams(beta0=1.0, betas=(0.5,))
    with pytest.raises(sf.UncoveredRegionError):
        sf.mml_eval(params, sf.MLArgs(z=(1e8,)))


# ---------------------------------------------------------------------------
# Solver-family helper

def test_e_solver_short_time_limit():
    # E -> 1 as t -> 0 at rate t^{a_1 - a_2} (the slowest argument).
    orders = FracOrders(alphas=(0.6, 0.2), qs=(1.0, 1.0))
    assert sf.e_solver(5.0, orders, 1.0, 0.0) == 1.0
    assert abs(sf.e_solver(5.0, orders, 1.0, 1e-9) - 1.0) < 1e-3
    assert abs(sf.e_solver(5.0, orders, 1.0, 1e-14) - 1.0) < 1e-5


def test_e_solver_classical_value():
    orders = FracOrders.single(0.5)
    val = sf.e_solver(1.0, orders, 1.0, 1.0)
    assert abs(val - E_HALF_AT_MINUS_1) < 1e-10


def test_e_solver_decay_bound():
    # |E^{(n)}_{1+a_1}(t)| <= C / (1 + lam t^{a_1}) observed on a sweep.
    orders = FracOrders(alphas=(0.8, 0.4), qs=(1.0, 1.2))
    prods = []
    for lam in (1e1, 1e3, 1e5, 1e7):
        val = sf.e_solver(lam, orders, 1.8, 2.0)
        prods.append(abs(val) * (1.0 + lam * 2.0 ** 0.8))
    assert max(prods) < 5.0


def test_e_solver_batches_match_scalar():
    orders = FracOrders(alphas=(0.9, 0.3), qs=(1.0, 1.5))
    lams = np.array([0.5, 1.0, 5.0, 50.0, 5000.0])
    batch = sf.e_solver_many(lams, orders, 1.9, 1.3)
    scalar = np.array([sf.e_solver(float(l), orders, 1.9, 1.3) for l in lams])
    np.testing.assert_allclose(batch, scalar, rtol=1e-12)

    ts = np.array([0.0, 0.01, 0.5, 2.0, 20.0])
    batch_t = sf.e_solver_time_batch(2.0, orders, 1.9, ts)
    scalar_t = np.array([sf.e_solver(2.0, orders, 1.9, float(t)) for t in ts])
    np.testing.assert_allclose(batch_t, scalar_t, rtol=1e-10, atol=1e-14)


# ---------------------------------------------------------------------------
# Identities

def test_lemma31_zero_args_exact():
    params = sf.MLParams(beta0=0.7, betas=(0.5, 0.3))
    assert sf.lemma31_residual(params, sf.MLArgs(z=(0.0, 0.0))) < 1e-15


def test_lemma31_random_small_args():
    rng = np.random.default_rng(7)
    for _ in range(25):
        m = int(rng.integers(1, 4))
        betas = tuple(rng.uniform(0.4, 0.95, m))
        beta0 = float(rng.uniform(0.3, 1.0))
        radius = {1: 2.0, 2: 2.0, 3: 1.2}[m]
        z = tuple(radius * complex(*rng.uniform(-0.7, 0.7, 2)) for _ in range(m))
        params = sf.MLParams(beta0=beta0, betas=betas)
        assert sf.lemma31_residual(params, sf.MLArgs(z=z)) < 1e-10


def test_lemma31_classical_reduction():
    # m = 1, beta0 = 1: 1 + z E_{a,1+a}(z) = E_{a,1}(z).
    params = sf.MLParams(beta0=1.0, betas=(0.5,))
    assert sf.lemma31_residual(params, sf.MLArgs(z=(-1.0,))) < 1e-10


def test_derivative_identity_second_order():
    orders = FracOrders(alphas=(0.8, 0.4), qs=(1.0, 1.0))
    lam, t = 3.0, 1.1
    a1 = orders.alphas[0]

    def f(u):
        return u ** a1 * sf.e_solver(lam, orders, 1.0 + a1, u)

    rhs = t ** (a1 - 1.0) * sf.e_solver(lam, orders, a1, t)
    errs = [abs((f(t + h) - f(t - h)) / (2 * h) - rhs) for h in (1e-2, 5e-3)]
    order = math.log2(errs[0] / errs[1])
    assert abs(order - 2.0) < 0.2


def test_kernel_positivity_samples():
    from conftest import random_orders
    rng = np.random.default_rng(11)
    for _ in range(25):
        orders = random_orders(rng)
        lam = float(10 ** rng.uniform(-1, 3))
        t = float(10 ** rng.uniform(-2, 1.5))
        a1 = orders.alphas[0]
        assert t ** (a1 - 1.0) * sf.e_solver(lam, orders, a1, t) > 0.0
