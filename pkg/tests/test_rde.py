import math

import numpy as np
import pytest
from helpers import brownian

from roughpaths.controlled import FunctionModel
from roughpaths.errors import GridError, NumericalBlowup, ShapeError
from roughpaths.grids import SampledPath, TimeGrid
from roughpaths.noise import NoiseConfig, sample_bm, strat_enhance
from roughpaths.rde import (
    RDEProblem,
    apriori_bound_check,
    make_preset_problem,
    residual_check,
    solve_picard,
    solve_step_scheme,
)
from roughpaths.rough import RoughPath, lift_piecewise_linear


def time_lift(n, horizon=1.0):
    g = TimeGrid.uniform(horizon, n)
    return lift_piecewise_linear(SampledPath(g, g.times[:, None]))


def zero_driver(n, horizon=1.0):
    g = TimeGrid.uniform(horizon, n)
    return lift_piecewise_linear(SampledPath(g, np.zeros((n + 1, 1))))


def strat_gbm_driver(n, seed=7, path_index=0, oversample=8):
    cfg = NoiseConfig(dim=1, n_steps=n, oversample=oversample, seed=seed)
    return strat_enhance(sample_bm(cfg, path_index), cfg.coarse_grid()), cfg


# ------------------------------------------------------------------ trivial dynamics


def test_zero_coefficients_step_and_picard():
    driver = zero_driver(64)
    problem = RDEProblem(driver, None, None, xi=np.array([2.0]))
    sol = solve_step_scheme(problem)
    assert np.all(sol.values == 2.0)
    sol2 = solve_picard(problem, tol=1e-12)
    assert np.all(sol2.values == 2.0)
    assert sol2.converged
    assert all(it == 1 for it in sol2.diagnostics["iterations"])
    assert residual_check(sol, problem) == 0.0


# ------------------------------------------------------------------ deterministic oracles


def test_euler_drift_only_matches_exponential():
    n = 4096
    problem = make_preset_problem("linear-drift", zero_driver(n), xi=1.0)
    sol = solve_step_scheme(problem)
    assert abs(sol.terminal()[0] - math.e) <= 1e-3


def test_smooth_driver_second_order_exponential():
    # dY = Y dX with X_t = t lifted: the block term upgrades the step scheme
    # to second order, |Y_1 - e| <= 1e-6 at n = 2^12.
    n = 4096
    problem = make_preset_problem("gbm", time_lift(n), xi=1.0, sigma=1.0)
    sol = solve_step_scheme(problem)
    assert abs(sol.terminal()[0] - math.e) <= 1e-6


def test_picard_drift_only_second_order():
    n = 4096
    problem = make_preset_problem("linear-drift", zero_driver(n), xi=1.0)
    sol = solve_picard(problem, tol=1e-12)
    assert sol.converged
    assert abs(sol.terminal()[0] - math.e) <= 1e-6


# ------------------------------------------------------------------ stochastic oracles


def test_gbm_strat_step_matches_closed_form():
    n = 4096
    driver, cfg = strat_gbm_driver(n)
    problem = make_preset_problem("gbm", driver, xi=1.0, sigma=0.5)
    sol = solve_step_scheme(problem)
    oracle = np.exp(0.5 * driver.values[:, 0])
    rel = np.max(np.abs(sol.values[:, 0] - oracle) / np.abs(oracle))
    assert rel <= 1e-2


def test_gbm_picard_cross_validates_step():
    n = 4096
    driver, _ = strat_gbm_driver(n)
    problem = make_preset_problem("gbm", driver, xi=1.0, sigma=0.5)
    step = solve_step_scheme(problem)
    picard = solve_picard(problem, tol=1e-10)
    assert picard.converged
    gap = np.max(np.abs(step.values - picard.values))
    assert gap <= 2e-3
    assert residual_check(picard, problem) <= 10 * 1e-10
    assert picard.diagnostics["controlled_seminorm"] > 0
    assert len(picard.diagnostics["iterations"]) >= picard.diagnostics["windows"]


def test_step_scheme_residual_smooth():
    n = 4096
    problem = make_preset_problem("gbm", time_lift(n), xi=1.0, sigma=1.0)
    sol = solve_step_scheme(problem)
    assert residual_check(sol, problem) <= 1e-4


# ------------------------------------------------------------------ solution structure


def test_derivative_consistency():
    n = 256
    driver, _ = strat_gbm_driver(n, seed=3)
    problem = make_preset_problem("gbm", driver, xi=1.0, sigma=0.5)
    for sol in (solve_step_scheme(problem), solve_picard(problem, tol=1e-9)):
        for k in (0, 100, 256):
            want = problem.diffusion.eval(sol.times[k], sol.values[k])
            np.testing.assert_allclose(sol.deriv[k], want, atol=1e-12)


def test_concatenation_step_scheme_exact():
    n = 512
    driver, _ = strat_gbm_driver(n, seed=5)
    problem = make_preset_problem("gbm", driver, xi=1.0, sigma=0.5)
    full = solve_step_scheme(problem)
    first = solve_step_scheme(
        RDEProblem(driver.restrict(0, n // 2), None, problem.diffusion, problem.xi, validate=False)
    )
    second = solve_step_scheme(
        RDEProblem(
            driver.restrict(n // 2, n), None, problem.diffusion, first.terminal(), validate=False
        )
    )
    np.testing.assert_allclose(full.values[: n // 2 + 1], first.values, atol=1e-12)
    np.testing.assert_allclose(full.values[n // 2 :], second.values, atol=1e-12)


def test_concatenation_picard_within_tolerance():
    n = 512
    tol = 1e-10
    driver, _ = strat_gbm_driver(n, seed=6)
    problem = make_preset_problem("gbm", driver, xi=1.0, sigma=0.5)
    full = solve_picard(problem, window=0.5, tol=tol)
    first = solve_picard(
        RDEProblem(driver.restrict(0, n // 2), None, problem.diffusion, problem.xi, validate=False),
        window=0.5,
        tol=tol,
    )
    second = solve_picard(
        RDEProblem(
            driver.restrict(n // 2, n), None, problem.diffusion, first.terminal(), validate=False
        ),
        window=0.5,
        tol=tol,
    )
    assert full.converged and first.converged and second.converged
    glued = np.concatenate([first.values[:-1], second.values])
    assert np.max(np.abs(full.values - glued)) <= 2 * tol


# ------------------------------------------------------------------ bounds and failure modes


def test_apriori_bound_check():
    n = 256
    driver, _ = strat_gbm_driver(n, seed=8)
    problem = make_preset_problem("ou", driver, xi=1.0)
    sol = solve_step_scheme(problem)
    assert apriori_bound_check(sol, problem, K=np.abs(problem.xi[0]) + 10.0)
    assert not apriori_bound_check(sol, problem, K=np.abs(problem.xi[0]) / 2.0)
    zero = RDEProblem(driver, None, None, xi=np.array([1.0]))
    zsol = solve_step_scheme(zero)
    assert apriori_bound_check(zsol, zero, K=1.0)
    with pytest.raises(GridError):
        apriori_bound_check(sol, problem, K=-1.0)


def test_blowup_reports_position():
    n = 64
    driver = zero_driver(n)
    quad = FunctionModel(
        f=lambda t, y: y * y,
        df=lambda t, y: np.diag(2 * y),
        dim_in=1,
        out_shape=(1,),
    )
    problem = RDEProblem(driver, quad, None, xi=np.array([1e160]), validate=False)
    with pytest.raises(NumericalBlowup) as err, np.errstate(over="ignore", invalid="ignore"):
        solve_step_scheme(problem)
    assert err.value.index is not None
    assert err.value.t is not None


def test_picard_nonconvergence_flag():
    n = 128
    driver, _ = strat_gbm_driver(n, seed=9)
    problem = make_preset_problem("gbm", driver, xi=1.0, sigma=40.0)
    sol = solve_picard(problem, window=1.0, max_iter=3, tol=1e-12, max_halvings=0)
    assert not sol.converged
    assert "failed_at" in sol.diagnostics


def test_problem_validation():
    driver = zero_driver(8)
    bad_drift = FunctionModel(
        f=lambda t, y: np.zeros(2), df=None, dim_in=2, out_shape=(2,)
    )
    with pytest.raises(ShapeError):
        RDEProblem(driver, bad_drift, None, xi=np.array([1.0]))
    with pytest.raises(GridError):
        make_preset_problem("unknown", driver)
    no_df = FunctionModel(
        f=lambda t, y: np.zeros((1, 1)), df=None, dim_in=1, out_shape=(1, 1)
    )
    with pytest.raises(ShapeError):
        RDEProblem(driver, None, no_df, xi=np.array([1.0]))


def test_window_validation():
    driver = zero_driver(8)
    problem = RDEProblem(driver, None, None, xi=np.array([1.0]))
    with pytest.raises(GridError):
        solve_picard(problem, window=0.0)
