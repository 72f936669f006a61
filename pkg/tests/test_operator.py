import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pytht import (
    DomainException,
    GridFunction,
    Interval,
    StepFunction,
    ValidationException,
    apply,
    assemble,
    classify,
    entry,
    h_indicator,
)
from pytht.operator import cell_averages, image_norm, step_image

GAP = classify(Interval(0, 1), Interval(2, 3))


def test_h_indicator_pole():
    with pytest.raises(DomainException):
        h_indicator(0.0, 1.0, np.array([0.5, 1.0]))


def test_h_indicator_antisymmetric_about_midpoint():
    x = np.array([-2.0, -0.5, 0.25])
    assert np.allclose(h_indicator(0.0, 1.0, x), -h_indicator(0.0, 1.0, 1.0 - x))


def test_entry_matches_quadrature():
    nodes, weights = np.polynomial.legendre.leggauss(40)
    x = 2.5 + 0.5 * nodes
    expected = 0.5 * np.sum(weights * h_indicator(0.0, 1.0, x))
    assert float(entry(0.0, 1.0, 2.0, 3.0)) == pytest.approx(expected, rel=1e-13)


def test_entry_skew():
    args = (0.0, 0.7, 0.3, 1.9)
    swapped = (0.3, 1.9, 0.0, 0.7)
    assert float(entry(*args)) == pytest.approx(-float(entry(*swapped)), abs=1e-15)


def test_assemble_rejects_zero_cells():
    with pytest.raises(ValidationException):
        assemble(GAP, 0, 4)


def test_assemble_shape_and_mesh():
    op = assemble(GAP, 8, 5)
    assert op.entries.shape == (5, 8)
    assert op.h_i == pytest.approx(1.0 / 8)
    assert op.h_j == pytest.approx(1.0 / 5)
    assert op.centres_j()[0] == pytest.approx(2.1)


def test_assemble_is_a_contraction():
    for i, j in [((0, 1), (2, 3)), ((0, 6), (3, 12)), ((0, 4), (1, 2))]:
        op = assemble(classify(Interval(*i), Interval(*j)), 24, 24)
        assert op.singular_values()[0] <= 1.0 + 1e-8


def test_assemble_same_interval_is_skew():
    config = classify(Interval(0, 1), Interval(0, 1))
    op = assemble(config, 16, 16)
    assert np.allclose(op.entries, -op.entries.T, rtol=0.0, atol=1e-13)


def test_assemble_separated_entries_agree_with_closed_form():
    op = assemble(GAP, 4, 4)
    mesh_i, mesh_j = op.mesh_i, op.mesh_j
    exact = entry(
        mesh_i[None, :-1], mesh_i[None, 1:], mesh_j[:-1, None], mesh_j[1:, None]
    ) / math.sqrt(op.h_i * op.h_j)
    assert np.allclose(op.entries, exact, rtol=1e-12, atol=0.0)


@settings(max_examples=25)
@given(st.floats(-10.0, 10.0), st.floats(0.1, 10.0))
def test_assemble_translation_and_dilation_covariant(shift, scale):
    base = assemble(classify(Interval(0, 6), Interval(3, 12)), 12, 18)

    def moved(lo: float, hi: float) -> Interval:
        return Interval(scale * lo + shift, scale * hi + shift)

    other = assemble(classify(moved(0, 6), moved(3, 12)), 12, 18)
    assert np.allclose(other.entries, base.entries, rtol=1e-9, atol=1e-11)


def test_OperatorMatrix_to_rows():
    op = assemble(GAP, 3, 2)
    rows = list(op.to_rows())
    assert len(rows) == 6
    assert rows[1] == {"row": 0, "col": 1, "value": float(op.entries[0, 1])}


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-2.0, 2.0), min_size=6, max_size=6))
def test_apply_step_matches_forward(levels):
    op = assemble(GAP, 6, 10)
    f = StepFunction(tuple(float(e) for e in op.mesh_i), tuple(levels))
    image = apply(op, f)
    expected = op.forward(np.asarray(levels))
    assert np.allclose(image.values, expected, rtol=1e-9, atol=1e-12)


def test_apply_grid_matches_step():
    op = assemble(GAP, 8, 12)
    step = StepFunction((0.0, 1.0), (1.0,))
    grid = GridFunction.from_callable(Interval(0, 1), lambda x: 1.0 + 0 * x, 32)
    assert np.allclose(apply(op, grid).values, apply(op, step).values, atol=1e-10)


def test_apply_step_matches_pointwise_image():
    op = assemble(GAP, 4, 400)
    step = StepFunction((0.0, 0.5, 1.0), (1.0, -2.0))
    averages = apply(op, step).values
    assert np.allclose(averages, step_image(step, op.centres_j()), atol=1e-5)


def test_apply_checks_support():
    op = assemble(GAP, 4, 4)
    with pytest.raises(ValidationException):
        apply(op, StepFunction((0.5, 1.5), (1.0,)))


def test_image_norm_bounded_by_norm():
    op = assemble(GAP, 8, 64)
    f = StepFunction.from_levels((0.0, 1.0), [1.0, -1.0, 2.0])
    assert 0.0 < image_norm(op, f) < f.norm_l2()


def test_cell_averages_of_aligned_step():
    op = assemble(GAP, 4, 4)
    f = StepFunction.from_levels((0.0, 1.0), [1.0, 2.0, 3.0, 4.0])
    assert np.allclose(cell_averages(op, f), [1.0, 2.0, 3.0, 4.0])
