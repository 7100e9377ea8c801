import math

import numpy as np
import pytest

from mtfrac import solver as sv, spectral as sp
from mtfrac.specfun import e_solver, gamma_real


@pytest.fixture(scope="module")
def homog_problem(laplace_op, laplace_spectrum):
    orders = sv.FracOrders(alphas=(0.8, 0.4), qs=(1.0, 1.0))
    n = np.arange(1, laplace_spectrum.n_modes + 1, dtype=float)
    a = sp.synthesize(n ** -2.0, laplace_spectrum)
    return sv.Problem(orders=orders, operator=laplace_op,
                      spectrum=laplace_spectrum, initial=a)


def test_frac_orders_validation():
    with pytest.raises(ValueError):
        sv.FracOrders(alphas=(0.3, 0.8), qs=(1.0, 1.0))
    with pytest.raises(ValueError):
        sv.FracOrders(alphas=(0.8, 0.3), qs=(2.0, 1.0))
    with pytest.raises(ValueError):
        sv.FracOrders(alphas=(1.2,), qs=(1.0,))
    with pytest.raises(ValueError):
        sv.FracOrders(alphas=(0.8, 0.3), qs=(1.0, -1.0))
    o = sv.FracOrders.single(0.5)
    assert o.m == 1 and o.qs == (1.0,)


def test_mode_amplitude_at_zero_is_one():
    orders = sv.FracOrders(alphas=(0.9, 0.2), qs=(1.0, 3.0))
    assert sv.mode_amplitude(orders, 123.4, 0.0) == 1.0


def test_mode_amplitude_single_term_is_classical_ml():
    orders = sv.FracOrders.single(0.5)
    # E_{1/2,1}(-sqrt(t)) = e^t erfc(sqrt(t)) at lam = 1
    for t in (0.25, 1.0, 4.0):
        target = math.exp(t) * math.erfc(math.sqrt(t))
        assert abs(sv.mode_amplitude(orders, 1.0, t) - target) < 1e-10


def test_mode_amplitude_long_time_leading_term():
    # amplitude * lam * Gamma(1-a_m) * t^{a_m} -> q_m
    orders = sv.FracOrders(alphas=(0.8, 0.4), qs=(1.0, 1.7))
    lam = 3.0
    vals = []
    for t in (1e3, 1e4, 1e5):
        amp = sv.mode_amplitude(orders, lam, t)
        vals.append(amp * lam * gamma_real(0.6) * t ** 0.4)
    assert abs(vals[-1] - 1.7) < 0.02
    assert abs(vals[-1] - 1.7) < abs(vals[0] - 1.7)


def test_solve_homogeneous_initial_value(homog_problem):
    u0 = sv.solve_homogeneous(homog_problem, 0.0)
    assert np.max(np.abs(u0 - homog_problem.initial)) < 1e-10


def test_solve_homogeneous_single_mode(laplace_op, laplace_spectrum):
    orders = sv.FracOrders.single(0.5)
    phi1 = laplace_spectrum.eigvecs[:, 0]
    lam1 = laplace_spectrum.lambdas[0]
    p = sv.Problem(orders=orders, operator=laplace_op,
                   spectrum=laplace_spectrum, initial=phi1)
    t = 0.7
    u = sv.solve_homogeneous(p, t)
    target = sv.mode_amplitude(orders, lam1, t) * phi1
    np.testing.assert_allclose(u, target, atol=1e-10)


def test_solve_homogeneous_l2_stability(homog_problem):
    a_norm = sp.frac_norm(homog_problem.initial, 0.0, homog_problem.spectrum)
    sol = sv.ModalSolution(homog_problem)
    for t in (1e-3, 0.1, 1.0, 10.0):
        n = sp.modal_frac_norm(sol.modal_values(t), 0.0, homog_problem.spectrum)
        assert n <= 2.0 * a_norm


def test_uniform_amplitude_bound(homog_problem):
    # grid-observed sup |amplitude| < 2 for the tested order sets
    lams = homog_problem.spectrum.lambdas
    for t in (1e-3, 0.1, 1.0, 100.0):
        amps = sv.mode_amplitudes(homog_problem.orders, lams, t)
        assert np.max(np.abs(amps)) < 2.0


def test_smoothing_slope_from_half_regularity(laplace_op, laplace_spectrum):
    # || u(t) ||_{D(-L)} ~ t^{a_1 (gamma - 1)} with gamma = 1/2:
    # the log-log slope as t -> 0 must not fall below a_1(gamma-1) - 0.05.
    orders = sv.FracOrders(alphas=(0.9, 0.5), qs=(1.0, 1.0))
    n = np.arange(1, laplace_spectrum.n_modes + 1, dtype=float)
    a = sp.synthesize(n ** -1.55, laplace_spectrum)
    p = sv.Problem(orders=orders, operator=laplace_op,
                   spectrum=laplace_spectrum, initial=a)
    sol = sv.ModalSolution(p)
    ts = np.logspace(-4, -1, 8)
    norms = [sp.modal_frac_norm(sol.modal_values(t), 1.0, p.spectrum) for t in ts]
    slope = np.polyfit(np.log(ts), np.log(norms), 1)[0]
    assert slope >= 0.9 * (0.5 - 1.0) - 0.05


def test_initial_value_attainment(homog_problem):
    # || u(t) - a ||_{D((-L)^gamma)} decreases monotonically to < 1% of ||a||.
    gamma = 0.5
    sol = sv.ModalSolution(homog_problem)
    a_modal = homog_problem.modal_initial
    norms = []
    for k in range(1, 9):
        mv = sol.modal_values(10.0 ** -k)
        norms.append(sp.modal_frac_norm(mv - a_modal, gamma, homog_problem.spectrum))
    assert all(b <= a * 1.05 for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 0.01 * sp.modal_frac_norm(a_modal, gamma, homog_problem.spectrum)


def test_modal_solution_cache(homog_problem):
    sol = sv.ModalSolution(homog_problem)
    a1 = sol.amplitudes(0.5)
    a2 = sol.amplitudes(0.5)
    assert a1 is a2
    assert sol.amplitude(0, 0.0) == 1.0


def test_time_derivative_matches_finite_differences(homog_problem):
    t = 0.9
    du = sv.time_derivative(homog_problem, t)
    errs = []
    for h in (1e-3, 5e-4):
        fd = (sv.solve_homogeneous(homog_problem, t + h)
              - sv.solve_homogeneous(homog_problem, t - h)) / (2 * h)
        errs.append(np.max(np.abs(fd - du)))
    assert abs(math.log2(errs[0] / errs[1]) - 2.0) < 0.2


def test_time_derivative_single_term_formula(laplace_op, laplace_spectrum):
    orders = sv.FracOrders.single(0.6)
    phi1 = laplace_spectrum.eigvecs[:, 0]
    lam1 = laplace_spectrum.lambdas[0]
    p = sv.Problem(orders=orders, operator=laplace_op,
                   spectrum=laplace_spectrum, initial=phi1)
    t = 0.8
    du = sv.time_derivative(p, t)
    target = -lam1 * t ** (0.6 - 1.0) * e_solver(lam1, orders, 0.6, t) * phi1
    np.testing.assert_allclose(du, target, rtol=1e-9, atol=1e-12)
    # negative for small t when the initial amplitude is positive
    du_small = sv.time_derivative(p, 1e-3)
    assert sp.project(du_small, laplace_spectrum)[0] < 0
    with pytest.raises(ValueError):
        sv.time_derivative(p, 0.0)


def test_caputo_of_linear_function_closed_form():
    q = sv.QuadConfig(n_panels=128, grading=2.0)
    for beta in (0.25, 0.5, 0.75):
        got = sv.caputo_quadrature(lambda s: np.ones_like(s), 2.0, beta, q)
        want = 2.0 ** (1.0 - beta) / gamma_real(2.0 - beta)
        assert abs(got - want) < 1e-12 * want


def test_caputo_equation_residual_single_term():
    # beta = alpha, m = 1: the derivative reproduces -lam u.
    orders = sv.FracOrders.single(0.5)
    r = sv.mode_ode_residual(orders, 3.0, 1.0, sv.QuadConfig(n_panels=256))
    assert r < 1e-4


def test_caputo_equation_residual_multi_term():
    orders = sv.FracOrders(alphas=(0.8, 0.4), qs=(1.0, 1.0))
    for lam, t in ((5.0, 1.5), (1.0, 0.5)):
        r = sv.mode_ode_residual(orders, lam, t, sv.QuadConfig(n_panels=256))
        assert r < 1e-3


def test_caputo_derivative_field_bound(homog_problem):
    # Sanity: the Caputo derivative of the solution exists and
    # shrinks from t-singular early values to small long-time values.
    q = sv.QuadConfig(n_panels=128)
    d1 = sv.caputo_derivative(homog_problem, 0.4, 0.1, q)
    d2 = sv.caputo_derivative(homog_problem, 0.4, 5.0, q)
    n1 = sp.frac_norm(d1, 0.0, homog_problem.spectrum)
    n2 = sp.frac_norm(d2, 0.0, homog_problem.spectrum)
    assert n1 > n2 > 0


def _mode_source(spectrum, mode, t_final=2.0, n=257, amp=1.0):
    times = np.linspace(0.0, t_final, n)
    values = np.tile(amp * spectrum.eigvecs[:, mode], (n, 1))
    return sv.SampledSource(times=times, values=values)


def test_solve_source_zero_source(laplace_op, laplace_spectrum):
    orders = sv.FracOrders.single(0.5)
    times = np.linspace(0.0, 2.0, 65)
    src = sv.SampledSource(times=times,
                           values=np.zeros((65, laplace_op.n_interior)))
    p = sv.Problem(orders=orders, operator=laplace_op, spectrum=laplace_spectrum,
                   initial=np.zeros(laplace_op.n_interior), source=src)
    u = sv.solve_source(p, 1.0)
    assert np.max(np.abs(u)) == 0.0


def test_solve_source_single_term_closed_form(laplace_op, laplace_spectrum):
    orders = sv.FracOrders.single(0.5)
    src = _mode_source(laplace_spectrum, 0)
    p = sv.Problem(orders=orders, operator=laplace_op, spectrum=laplace_spectrum,
                   initial=np.zeros(laplace_op.n_interior), source=src)
    lam1 = laplace_spectrum.lambdas[0]
    for t in (0.5, 1.5):
        u = sv.solve_source(p, t, sv.QuadConfig(n_panels=256))
        got = sp.project(u, laplace_spectrum)[0]
        want = (1.0 - sv.mode_amplitude(orders, lam1, t)) / lam1
        assert abs(got - want) < 1e-4 * abs(want)


def test_solve_source_steady_state_trend(laplace_op, laplace_spectrum):
    orders = sv.FracOrders(alphas=(0.7, 0.3), qs=(1.0, 1.0))
    src = _mode_source(laplace_spectrum, 0, t_final=64.0, n=513)
    p = sv.Problem(orders=orders, operator=laplace_op, spectrum=laplace_spectrum,
                   initial=np.zeros(laplace_op.n_interior), source=src)
    lam1 = laplace_spectrum.lambdas[0]
    steady = 1.0 / lam1
    quad = sv.QuadConfig(n_panels=512)
    errs = []
    for t in (16.0, 60.0):
        got = sp.project(sv.solve_source(p, t, quad), laplace_spectrum)[0]
        # closed form by term-by-term integration: (1 - amplitude)/lam
        want = (1.0 - sv.mode_amplitude(p.orders, lam1, t)) / lam1
        assert abs(got - want) < 2e-4 * abs(want)
        errs.append(abs(got - steady))
    # approach to the steady state is t^{-a_m}: slow but monotone
    assert errs[1] < errs[0]
    assert errs[1] < 0.25 * steady


def test_solve_source_requires_zero_initial(laplace_op, laplace_spectrum):
    orders = sv.FracOrders.single(0.5)
    src = _mode_source(laplace_spectrum, 0)
    p = sv.Problem(orders=orders, operator=laplace_op, spectrum=laplace_spectrum,
                   initial=laplace_spectrum.eigvecs[:, 0], source=src)
    with pytest.raises(ValueError):
        sv.solve_source(p, 1.0)


def test_solve_source_resolution_guard(laplace_op, laplace_spectrum):
    orders = sv.FracOrders.single(0.5)
    times = np.linspace(0.0, 2.0, 4097)
    src = sv.SampledSource(
        times=times,
        values=np.tile(laplace_spectrum.eigvecs[:, 0], (4097, 1)))
    p = sv.Problem(orders=orders, operator=laplace_op, spectrum=laplace_spectrum,
                   initial=np.zeros(laplace_op.n_interior), source=src)
    with pytest.raises(ValueError):
        sv.solve_source(p, 2.0, sv.QuadConfig(n_panels=64))


def test_sampled_source_validation(laplace_spectrum):
    with pytest.raises(ValueError):
        sv.SampledSource(times=np.array([0.0]), values=np.zeros((1, 3)))
    with pytest.raises(ValueError):
        sv.SampledSource(times=np.array([0.5, 1.0]), values=np.zeros((2, 3)))
    with pytest.raises(ValueError):
        sv.SampledSource(times=np.array([0.0, 1.0, 1.5]), values=np.zeros((3, 3)))


def test_source_smoothing_bound(laplace_op, laplace_spectrum):
    # || u ||_{L2(0,T; D(-L))} <= C || F ||_{L2(0,T; L2)} with a modest ratio.
    orders = sv.FracOrders(alphas=(0.7, 0.4), qs=(1.0, 1.2))
    src = _mode_source(laplace_spectrum, 4)
    p = sv.Problem(orders=orders, operator=laplace_op, spectrum=laplace_spectrum,
                   initial=np.zeros(laplace_op.n_interior), source=src)
    ts = np.linspace(0.1, 2.0, 9)
    u_norms = np.array([
        sp.frac_norm(sv.solve_source(p, float(t)), 1.0, laplace_spectrum)
        for t in ts])
    f_norm_sq = 2.0  # ||phi_5||_{L2}^2 integrated over [0, 2]
    u_l2t = math.sqrt(float(np.trapezoid(u_norms ** 2, ts)))
    assert u_l2t <= 10.0 * math.sqrt(f_norm_sq)


def test_problem_consistency_checks(laplace_op, small_spectrum):
    orders = sv.FracOrders.single(0.5)
    with pytest.raises(ValueError):
        sv.Problem(orders=orders, operator=laplace_op, spectrum=small_spectrum,
                   initial=np.zeros(laplace_op.n_interior))


def test_caputo_refinement_check_paths(small_op, small_spectrum):
    q = sv.QuadConfig(n_panels=96, grading=2.0, refine_check=True)
    got = sv.caputo_quadrature(lambda s: np.ones_like(s), 1.0, 0.5, q)
    want = 1.0 / gamma_real(1.5)
    assert abs(got - want) < 1e-10
    orders = sv.FracOrders(alphas=(0.8, 0.4), qs=(1.0, 1.0))
    n = np.arange(1, small_spectrum.n_modes + 1, dtype=float)
    p = sv.Problem(orders=orders, operator=small_op, spectrum=small_spectrum,
                   initial=sp.synthesize(n ** -2.0, small_spectrum))
    d = sv.caputo_derivative(p, 0.4, 1.0,
                             sv.QuadConfig(n_panels=256, refine_check=True))
    assert np.all(np.isfinite(d))
    # a hostile tolerance must trigger the disagreement error
    bad = sv.QuadConfig(n_panels=4, grading=1.0, refine_check=True,
                        refine_rtol=1e-14)
    with pytest.raises(ArithmeticError):
        sv.caputo_quadrature(lambda s: np.cos(3 * s), 2.0, 0.5, bad,
                             singular_power=-0.5)


def test_sampled_source_from_callable(laplace_op, laplace_spectrum):
    src = sv.SampledSource.from_callable(
        lambda xs, t: np.sin(xs) * (1.0 + t), 2.0, 33, laplace_op.interior_x)
    assert src.times.size == 33
    hist = src.modal_history(laplace_spectrum)
    assert hist.shape == (33, laplace_spectrum.n_modes)
    # mode-1 content dominates for sin(x) data
    assert abs(hist[0, 0]) > 10 * np.max(np.abs(hist[0, 1:]))


def test_solve_source_time_varying_vs_l1_oracle(laplace_spectrum, laplace_op):
    # Dual route for the Duhamel quadrature: an oscillating modal source
    # integrated by product quadrature must match the L1 stepper.
    from mtfrac import oracle as orc
    orders = sv.FracOrders(alphas=(0.7, 0.3), qs=(1.0, 1.0))
    lam1 = laplace_spectrum.lambdas[0]
    times = np.linspace(0.0, 2.0, 513)
    values = np.sin(3.0 * times)[:, None] * laplace_spectrum.eigvecs[:, 0][None, :]
    src = sv.SampledSource(times=times, values=values)
    p = sv.Problem(orders=orders, operator=laplace_op,
                   spectrum=laplace_spectrum,
                   initial=np.zeros(laplace_op.n_interior), source=src)
    for t in (0.8, 1.7):
        got = sp.project(sv.solve_source(p, t, sv.QuadConfig(n_panels=384)),
                         laplace_spectrum)[0]
        cfg = orc.L1Config(t_final=t, n_steps=6000, grading=2.0)
        _, us = orc.l1_solve_mode(lam1, orders, 0.0,
                                  lambda tt: np.sin(3.0 * tt), cfg)
        assert abs(got - us[-1]) < 1e-4 * max(abs(us[-1]), 1e-3)


def test_forced_norm_tau_scaling(laplace_spectrum):
    # || u ||_{L2(0,T; D((-L)^{1-tau}))} <= (C/tau) || F ||: the observed
    # product tau * norm stays bounded as tau shrinks (broadband constant
    # source, closed-form modal response).
    orders = sv.FracOrders(alphas=(0.7, 0.4), qs=(1.0, 1.2))
    lams = laplace_spectrum.lambdas
    F = np.arange(1, lams.size + 1, dtype=float) ** -1.0
    tgrid = 2.0 * (np.arange(1, 26) / 25.0) ** 2
    products = []
    norms_by_tau = []
    for tau in (0.8, 0.4, 0.2, 0.1):
        norms = []
        for t in tgrid:
            amps = sv.mode_amplitudes(orders, lams, float(t))
            Tn = F * (1.0 - amps) / lams
            norms.append(math.sqrt(float(np.sum((lams ** (1.0 - tau) * Tn) ** 2))))
        l2t = math.sqrt(float(np.trapezoid(np.asarray(norms) ** 2, tgrid)))
        norms_by_tau.append(l2t)
        products.append(tau * l2t)
    assert max(products) < 1.0  # grid-observed constant, modest
    # smaller tau means a stronger norm: monotone growth
    assert all(a <= b for a, b in zip(norms_by_tau, norms_by_tau[1:]))
