import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pytht import (
    DiameterRow,
    Interval,
    StepFunction,
    ValidationException,
    classify,
    diameter_bound,
    diameter_rate,
    make_problem,
    reconstruct_tv,
    solve_penalized,
    svd_of_operator,
    tv_prox,
)
from pytht.constants import ALPHA_RANGE, DISCREPANCY_BAND
from pytht.operator import cell_averages
from pytht.reconstruct import rate_correlation, reconstruction_error
from pytht.types import Seed

GAP = classify(Interval(0, 1), Interval(2, 3))

F_EXACT = StepFunction.from_levels((0.0, 1.0), [1.0, -0.5, 0.75])


@given(
    st.lists(st.floats(-10.0, 10.0), min_size=1, max_size=40),
    st.floats(0.01, 5.0),
)
def test_tv_prox_optimality(values, weight):
    y = np.asarray(values)
    x = tv_prox(y, weight)
    slack = 1e-9 * (1.0 + np.max(np.abs(y)))
    sums = np.cumsum(y - x)
    # the total is preserved, partial sums are dual variables in [-w, w]
    assert abs(sums[-1]) <= slack * len(y)
    assert np.all(np.abs(sums[:-1]) <= weight + slack * len(y))
    jumps = np.diff(x)
    for k, jump in enumerate(jumps):
        if abs(jump) > slack:
            assert sums[k] == pytest.approx(
                -weight * math.copysign(1.0, jump), abs=slack * len(y)
            )


def test_tv_prox_large_weight_flattens():
    y = np.array([3.0, -1.0, 4.0, 1.0, 5.0])
    assert np.allclose(tv_prox(y, 100.0), np.full(5, np.mean(y)))


def test_tv_prox_zero_weight_is_identity():
    y = np.array([3.0, -1.0, 4.0])
    assert np.array_equal(tv_prox(y, 0.0), y)


def test_make_problem_noise_level():
    problem = make_problem(GAP, F_EXACT, 1e-3, noise_seed=Seed(5))
    noise = problem.g_noisy.values - problem.g_exact.values
    assert math.sqrt(problem.op.h_j * np.sum(noise**2)) == pytest.approx(
        1e-3, rel=1e-12
    )
    again = make_problem(GAP, F_EXACT, 1e-3, noise_seed=Seed(5))
    assert np.array_equal(problem.g_noisy.values, again.g_noisy.values)
    assert not problem.pure_noise


def test_make_problem_defaults():
    problem = make_problem(GAP, F_EXACT, 0.0)
    assert problem.op.cells_i == 48
    assert problem.op.cells_j == 32
    assert problem.kappa == pytest.approx(2.75)
    assert np.array_equal(problem.g_noisy.values, problem.g_exact.values)


def test_make_problem_flags_pure_noise():
    problem = make_problem(GAP, F_EXACT, 10.0, noise_seed=Seed(0))
    assert problem.pure_noise


def test_make_problem_data_in_model_range():
    # 40 cells put the breakpoints 1/3 and 2/3 between mesh points
    problem = make_problem(GAP, F_EXACT, 0.0, cells_i=40)
    op = problem.op
    coords = math.sqrt(op.h_i) * cell_averages(op, F_EXACT)
    assert np.allclose(op.entries @ coords, problem.data_coords(), rtol=0, atol=1e-14)


def test_make_problem_rejects_bad_input():
    with pytest.raises(ValidationException):
        make_problem(GAP, F_EXACT, -1.0)
    with pytest.raises(ValidationException):
        make_problem(GAP, StepFunction((0.0, 1.0), (0.0,)), 1e-3)


def test_solve_penalized_fixed_iterations():
    problem = make_problem(GAP, F_EXACT, 1e-3, noise_seed=Seed(1))
    solution = solve_penalized(problem, 1e-6, max_iterations=25, tol=0.0)
    assert solution.iterations == 25
    assert len(solution.history) == 25
    assert not solution.converged
    assert solution.values.shape == (48,)


def test_solve_penalized_scale_equivariance():
    problem = make_problem(GAP, F_EXACT, 1e-3, noise_seed=Seed(2))
    scaled = dataclasses.replace(
        problem, g_noisy=problem.g_noisy.with_values(2.0 * problem.g_noisy.values)
    )
    init = np.linspace(-1.0, 1.0, problem.op.cells_i)
    base = solve_penalized(problem, 1e-5, init, max_iterations=40, tol=0.0)
    double = solve_penalized(scaled, 2e-5, 2.0 * init, max_iterations=40, tol=0.0)
    assert np.allclose(double.values, 2.0 * base.values, rtol=1e-10, atol=1e-14)
    assert double.residual == pytest.approx(2.0 * base.residual, rel=1e-10)


def test_solve_penalized_rejects_negative_alpha():
    problem = make_problem(GAP, F_EXACT, 0.0)
    with pytest.raises(ValidationException):
        solve_penalized(problem, -1.0)


def test_solve_penalized_mean_constraint():
    problem = make_problem(GAP, F_EXACT, 1e-3, noise_seed=Seed(3))
    mean = (1.0 - 0.5 + 0.75) / 3.0
    solution = solve_penalized(problem, 1e-4, mean=mean, max_iterations=5000)
    integral = problem.op.h_i * float(np.sum(solution.values))
    assert integral == pytest.approx(mean, abs=1e-3)


def test_solve_penalized_final_objective_not_above_start():
    problem = make_problem(GAP, F_EXACT, 1e-2, noise_seed=Seed(4))
    solution = solve_penalized(problem, 1e-4, max_iterations=200, tol=0.0)
    assert solution.history[-1] <= solution.history[0] * (1.0 + 1e-12)


def test_reconstruct_tv_noise_free_uses_smallest_alpha():
    problem = make_problem(GAP, F_EXACT, 0.0)
    result = reconstruct_tv(problem, max_iterations=200)
    assert result.alpha == pytest.approx(ALPHA_RANGE[0])
    assert result.f_hat.values.shape == (48,)


@pytest.mark.slow
def test_reconstruct_tv_noise_free_recovers_top_modes():
    problem = make_problem(GAP, F_EXACT, 0.0)
    result = reconstruct_tv(problem)
    assert result.residual <= 1e-9
    exact = problem.op.grid_i(cell_averages(problem.op, F_EXACT))
    top = svd_of_operator(problem.op, 3)
    for u in top.u_funcs:
        assert result.f_hat.inner(u) == pytest.approx(exact.inner(u), abs=1e-3)


@pytest.mark.slow
def test_reconstruct_tv_meets_discrepancy():
    problem = make_problem(GAP, F_EXACT, 1e-2, noise_seed=Seed(0))
    result = reconstruct_tv(problem)
    low, high = DISCREPANCY_BAND
    assert result.converged
    assert low * 1e-2 <= result.residual <= high * 1e-2
    assert ALPHA_RANGE[0] <= result.alpha <= ALPHA_RANGE[1]
    assert math.isfinite(reconstruction_error(problem, result))


def test_diameter_bound():
    assert diameter_bound(1e-6, 1.0, 0.0, 1.0) == pytest.approx(
        math.sqrt(1.0 / (2.0 * math.e) / math.log(5e5))
    )
    assert diameter_bound(1e-6, 1.0, 1.0, 1.0) > diameter_bound(1e-6, 1.0, 0.0, 1.0)
    assert diameter_bound(0.75, 1.0, 0.0, 1.0) is None
    with pytest.raises(ValidationException):
        diameter_bound(0.0, 1.0, 0.0, 1.0)


def test_diameter_bound_shrinks_with_delta():
    bounds = [diameter_bound(d, 1.0, 0.5, 2.0) for d in (1e-2, 1e-4, 1e-8)]
    assert bounds == sorted(bounds, reverse=True)


@pytest.mark.parametrize(
    "deltas",
    [
        (1e-2, 1e-3, 1e-4),
        (1e-2, 1e-3, 1e-4, 1e-4),
        (1e-2, 1e-3, 1e-4, 2e-5),
        (1e-2, 1e-3, -1e-4, -1e-5),
    ],
)
def test_diameter_rate_rejects_noise_levels(deltas):
    with pytest.raises(ValidationException):
        diameter_rate(GAP, F_EXACT, deltas, [0], 1.0, 0.0)


def test_diameter_rate_needs_seeds():
    with pytest.raises(ValidationException):
        diameter_rate(GAP, F_EXACT, (1e-2, 1e-3, 1e-4, 1e-5), [], 1.0, 0.0)


@pytest.mark.slow
def test_diameter_rate_rows():
    deltas = (1e-2, 1e-3, 1e-4, 1e-5)
    rows = diameter_rate(
        GAP, F_EXACT, deltas, [0, 1, 2], 1.0, 0.5, cells_i=24, cells_j=16
    )
    assert [row.delta for row in rows] == list(deltas)
    for row in rows:
        assert len(row.errors) == 3
        assert min(row.errors) <= row.median_error <= max(row.errors)
        assert row.in_regime
        assert row.bound == pytest.approx(diameter_bound(row.delta, 1.0, 0.5, 2.75))


@pytest.mark.slow
def test_diameter_rate_default_sweep():
    deltas = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    rows = diameter_rate(GAP, F_EXACT, deltas, list(range(5)), 1.0, 0.0)
    medians = [row.median_error for row in rows]
    assert all(a > b for a, b in zip(medians, medians[1:]))
    assert rate_correlation(rows) >= 0.8
    assert all(row.converged for row in rows)


def _row(delta, error):
    return DiameterRow(delta, error, None, (error,), (delta,), (1.0,), (1,), True)


def test_rate_correlation_exact_rate():
    deltas = [1e-2, 1e-3, 1e-4, 1e-5]
    rows = [_row(d, 0.3 / math.sqrt(abs(math.log(d)))) for d in deltas]
    assert rate_correlation(rows) == pytest.approx(1.0)


def test_DiameterRow_regime():
    row = _row(0.9, 0.1)
    assert not row.in_regime
    assert row.within_bound
    inside = row._replace(bound=0.05)
    assert inside.in_regime
    assert not inside.within_bound
