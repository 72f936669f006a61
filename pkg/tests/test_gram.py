import math

import numpy as np
import pytest

from pytht import (
    Interval,
    StepFunction,
    ValidationException,
    assemble,
    classify,
    constants,
    decay_fit,
    gram_for_cells,
    least_sine_combination,
)
from pytht.gram import quadratic_form, sine_combination
from pytht.operator import image_norm

GAP = classify(Interval(0, 1), Interval(2, 3))


def test_gram_for_cells_three_cells():
    result = gram_for_cells(GAP, 3, raw_kernel=True)
    low, mid, top = result.eigenvalues
    assert low == pytest.approx(2.2e-8, rel=0.25)
    assert mid == pytest.approx(1.3e-4, rel=0.15)
    assert top == pytest.approx(0.28, rel=0.05)


def test_gram_for_cells_raw_kernel_scales_by_pi_squared():
    unitary = gram_for_cells(GAP, 3)
    raw = gram_for_cells(GAP, 3, raw_kernel=True)
    assert np.allclose(raw.eigenvalues, math.pi**2 * unitary.eigenvalues, rtol=1e-10)


def test_gram_for_cells_five_cells():
    result = gram_for_cells(GAP, 5, raw_kernel=True)
    assert 0.0 < result.lambda_min() <= 1e-14


def test_gram_for_cells_one_cell():
    result = gram_for_cells(GAP, 1)
    op = assemble(GAP, 1, 2048)
    expected = image_norm(op, StepFunction((0.0, 1.0), (1.0,))) ** 2
    assert len(result.eigenvalues) == 1
    assert result.lambda_min() == pytest.approx(expected, rel=1e-4)


def test_gram_for_cells_rejects_empty():
    with pytest.raises(ValidationException):
        gram_for_cells(GAP, 0)


def test_GramResult_worst_function_attains_lambda_min():
    result = gram_for_cells(GAP, 3)
    assert np.linalg.norm(result.worst_coeffs) == pytest.approx(1.0)
    assert quadratic_form(result, result.worst_coeffs) == pytest.approx(
        result.lambda_min(), rel=1e-6
    )
    f = result.worst_function
    assert f.norm_l2() == pytest.approx(1.0, rel=1e-12)
    op = assemble(GAP, 3, 2048)
    assert image_norm(op, f) ** 2 == pytest.approx(result.lambda_min(), rel=1e-4)


def test_GramResult_eigenvalues_ascending():
    result = gram_for_cells(GAP, 4)
    assert np.all(np.diff(result.eigenvalues) > 0.0)
    assert np.allclose(result.matrix_a, result.matrix_a.T)


def test_gram_for_cells_refinement_lowers_lambda_min():
    for n in (2, 3):
        coarse = gram_for_cells(GAP, n).lambda_min()
        fine = gram_for_cells(GAP, 2 * n).lambda_min()
        assert fine <= coarse


def test_gram_for_cells_overlap():
    config = classify(Interval(0, 6), Interval(3, 12))
    result = gram_for_cells(config, 4)
    assert result.eigenvalues[0] > 0.0
    assert result.eigenvalues[-1] <= 1.0 + 1e-10


def test_decay_fit_against_asymptotics():
    fit = decay_fit(GAP, 6)
    assert not fit.truncated
    assert fit.n_values == (2, 3, 4, 5, 6)
    assert list(fit.lambda_min) == sorted(fit.lambda_min, reverse=True)
    predicted = 2.0 * constants(GAP).sigma_rate
    assert fit.beta == pytest.approx(predicted, rel=0.2)


def test_decay_fit_needs_four():
    with pytest.raises(ValidationException):
        decay_fit(GAP, 3)


def test_sine_combination_profile():
    f = sine_combination(Interval(0, 2), [1.0, 0.5], [1, 2], cells=16)
    x = np.array([0.5, 1.0])
    expected = np.sin(math.pi * x / 2) + 0.5 * np.sin(math.pi * x)
    assert np.allclose(f.profile(x), expected)


def test_sine_combination_mismatch():
    with pytest.raises(ValidationException):
        sine_combination(Interval(0, 1), [1.0], [1, 2])


@pytest.mark.slow
def test_least_sine_combination_reproduces_quoted_function():
    op = assemble(GAP, 8, 512)
    result = least_sine_combination(op)
    magnitudes = [abs(c) for c in result.coeffs]
    assert np.allclose(magnitudes, [0.15269, 0.48308, 0.30844, 0.80510], atol=5e-3)
    assert result.coeffs[-1] > 0.0
    assert 1e-8 <= result.ratio <= 1e-6
    assert result.ratio == pytest.approx(9.25e-8, rel=0.1)
