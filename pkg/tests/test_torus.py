import math

import numpy as np
import pytest

from pytht import (
    PeriodicKernel,
    StepFunction,
    ValidationException,
    band_singular_values,
    convolve,
    designed_decay_demo,
    nullspace_vector,
    taibleson_check,
)
from pytht.torus import (
    DECAY_TARGETS,
    fourier_coefficients,
    periodic_grid,
    periodic_tv,
)


def test_PeriodicKernel_validation():
    with pytest.raises(ValidationException):
        PeriodicKernel(np.array([1.0, 1.0], dtype=complex), 8)
    with pytest.raises(ValidationException):
        PeriodicKernel(np.array([1j, 1.0, 1j]), 8)
    with pytest.raises(ValidationException):
        PeriodicKernel(np.ones(5, dtype=complex), 4)


def test_PeriodicKernel_multiplier_layout():
    kernel = PeriodicKernel(np.array([0.25, 0.5, 1.0, 0.5, 0.25], dtype=complex), 8)
    multiplier = kernel.multiplier()
    assert multiplier[0] == 1.0
    assert multiplier[1] == multiplier[-1] == 0.5
    assert multiplier[2] == multiplier[-2] == 0.25
    assert multiplier[4] == 0.0


def test_fourier_coefficients_of_cosine():
    f = periodic_grid(16, lambda x: np.cos(2.0 * math.pi * x))
    coeffs = fourier_coefficients(f, 2)
    assert np.allclose(coeffs, [0.0, 0.5, 0.0, 0.5, 0.0], atol=1e-14)
    with pytest.raises(ValidationException):
        fourier_coefficients(f, 8)


def test_convolve_annihilates_modes_outside_band():
    kernel = PeriodicKernel.from_rate(DECAY_TARGETS["flat"], 2, 32)
    low = periodic_grid(32, lambda x: np.cos(4.0 * math.pi * x))
    high = periodic_grid(32, lambda x: np.sin(10.0 * math.pi * x))
    assert np.allclose(convolve(kernel, low).values, low.values, atol=1e-12)
    assert np.allclose(convolve(kernel, high).values, 0.0, atol=1e-12)


def test_convolve_needs_periodic_grid():
    kernel = PeriodicKernel.from_rate(DECAY_TARGETS["flat"], 2, 32)
    with pytest.raises(ValidationException):
        convolve(kernel, periodic_grid(16, np.cos))


def test_nullspace_vector():
    kernel = PeriodicKernel(np.array([0.0, 1.0, 1.0, 1.0, 0.0], dtype=complex), 16)
    w = nullspace_vector(kernel)
    assert w.norm_l2() == pytest.approx(1.0)
    assert np.allclose(convolve(kernel, w).values, 0.0, atol=1e-12)

    constant = nullspace_vector(
        PeriodicKernel(np.array([0.5, 0.0, 0.5], dtype=complex), 8)
    )
    assert np.all(constant.values == 1.0)


def test_nullspace_vector_injective_kernel():
    kernel = PeriodicKernel.from_rate(DECAY_TARGETS["exponential"], 3, 16)
    with pytest.raises(ValidationException):
        nullspace_vector(kernel)


def test_band_singular_values():
    kernel = PeriodicKernel.from_rate(DECAY_TARGETS["exponential"], 4, 32)
    expected = sorted(
        [1.0] + [math.exp(-n) for n in range(1, 5) for _ in range(2)], reverse=True
    )
    assert np.allclose(band_singular_values(kernel), expected, rtol=1e-10)


def test_taibleson_check_square_wave():
    square = StepFunction((0.0, 0.5, 1.0), (1.0, -1.0))
    assert periodic_tv(square) == 4.0
    assert taibleson_check(square) == pytest.approx(1.0 / (2.0 * math.pi))


def test_taibleson_check_constant():
    assert taibleson_check(StepFunction((0.0, 1.0), (2.0,))) == 0.0


def test_taibleson_check_random_step_functions():
    rng = np.random.default_rng(12)
    for _ in range(50):
        pieces = int(rng.integers(1, 12))
        inner = np.sort(rng.uniform(0.0, 1.0, size=pieces - 1))
        breakpoints = (0.0, *(float(t) for t in inner), 1.0)
        levels = tuple(float(v) for v in rng.uniform(-2.0, 2.0, size=pieces))
        f = StepFunction(breakpoints, levels)
        assert taibleson_check(f) <= (1.0 + 1e-12) / (2.0 * math.pi)


def test_taibleson_check_rejects():
    with pytest.raises(ValidationException):
        taibleson_check(StepFunction((0.0, 1.0), (0.0,)))
    with pytest.raises(ValidationException):
        taibleson_check(StepFunction((0.0, 0.5), (1.0,)))


@pytest.mark.parametrize("name", ["exponential", "polynomial", "flat"])
def test_designed_decay_demo_prefers_target(name):
    demo = designed_decay_demo(DECAY_TARGETS[name], band=32)
    assert demo.preferred == name
    assert demo.n_values == tuple(range(1, 33))
    assert 1.0 <= demo.max_ratio < 1.05
    assert len(demo.to_rows()) == 32


def test_designed_decay_demo_exponential_rate():
    demo = designed_decay_demo(DECAY_TARGETS["exponential"], band=16)
    assert demo.exponential.rate == pytest.approx(1.0, rel=1e-6)
    assert demo.polynomial.aic > demo.exponential.aic


def test_designed_decay_demo_rejects():
    with pytest.raises(ValidationException):
        designed_decay_demo(DECAY_TARGETS["flat"], band=2)
    with pytest.raises(ValidationException):
        designed_decay_demo(lambda n: 1.0 - n / 4.0, band=8)
