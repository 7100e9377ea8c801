#!/usr/bin/env python3
"""Calibrate the series/contour dispatch threshold on |z_1|.

For each representative solver-family parameter set this script scans |z_1|
upward and records the first point at which the power series either

* needs more than 400 shells to meet a truncation tolerance of 1e-12, or
* loses alternating-sum accuracy in double precision: the rounding floor
  (largest absolute term times machine epsilon) exceeds 1e-9 relative to
  the evaluated value.

The dispatch constant is the minimum over the parameter sets, rounded down
to one decimal.  Its frozen value lives in
``mtfrac.constants.SERIES_CONTOUR_CROSSOVER``; rerun this script after any
change to the series evaluator and update the constant if it moved.
"""

import numpy as np

from mtfrac.specfun import (
    MLArgs,
    MLParams,
    SeriesConvergenceError,
    _polyval,
    _series_weights,
    mml_contour,
    default_contour_config,
)

SHELL_LIMIT = 400
TOL = 1e-12
CANCEL_RTOL = 1e-9

# (label, betas for the solver family, fixed z_2..z_m)
PARAMETER_SETS = [
    ("m=1 a=0.3", (0.3,), ()),
    ("m=1 a=0.5", (0.5,), ()),
    ("m=1 a=0.8", (0.8,), ()),
    ("m=2 a=(0.9,0.3) q2=1.5 t=1", (0.9, 0.9 - 0.3), (-1.5,)),
    ("m=3 a=(0.8,0.5,0.2) t=1", (0.8, 0.3, 0.6), (-1.0, -1.0)),
]


def first_bad_x(betas, z_rest, beta0=1.0):
    eps = np.finfo(float).eps
    for x in np.arange(0.2, 40.0, 0.1):
        try:
            W, absW, shells, _ = _series_weights(beta0, betas, z_rest, x, TOL, 4 * SHELL_LIMIT)
        except SeriesConvergenceError:
            return x
        if shells > SHELL_LIMIT:
            return x
        value = abs(complex(_polyval(W, -x)))
        floor = float(_polyval(absW.astype(complex), np.array(x)).real) * eps
        if floor > CANCEL_RTOL * max(value, 1e-300):
            return x
    return np.inf


def main():
    worst = np.inf
    for label, betas, z_rest in PARAMETER_SETS:
        x_bad = first_bad_x(betas, z_rest)
        worst = min(worst, x_bad)
        print(f"{label:32s} first bad |z_1|: {x_bad:.2f}")
    crossover = np.floor(worst * 10.0 - 1.0) / 10.0
    print(f"\ncalibrated crossover (rounded down): {crossover:.1f}")

    # Sanity: at the chosen crossover both routes must agree to 1e-8.
    for label, betas, z_rest in PARAMETER_SETS:
        params = MLParams(beta0=1.0, betas=betas)
        args = MLArgs(z=(-crossover,) + z_rest)
        W, _, _, tail = _series_weights(1.0, betas, z_rest, crossover, TOL, 4 * SHELL_LIMIT)
        series_val = complex(_polyval(W, -crossover)).real
        contour_val = mml_contour(params, args, default_contour_config(params, args)).value.real
        rel = abs(series_val - contour_val) / abs(contour_val)
        print(f"{label:32s} series/contour rel diff at crossover: {rel:.2e}")


if __name__ == "__main__":
    main()
