import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pytht import (
    CaseId,
    GridFunction,
    Interval,
    StepFunction,
    ValidationException,
    classify,
    mollify,
)
from pytht.core import bump, gauss_grid, smooth_step

finite = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


def test_Interval_rejects_empty():
    with pytest.raises(ValidationException):
        Interval(1.0, 1.0)


def test_Interval_rejects_infinite():
    with pytest.raises(ValidationException):
        Interval(0.0, math.inf)


@pytest.mark.parametrize("text", ["1", "a,b", "0,1,2", "1,0"])
def test_Interval_from_text_bad(text):
    with pytest.raises(ValidationException):
        Interval.from_text(text)


def test_Interval_intersection():
    assert Interval(0, 6).intersection(Interval(3, 12)) == Interval(3, 6)
    assert Interval(0, 1).intersection(Interval(1, 2)) is None


def test_classify_gap_canonical():
    config = classify(Interval(0, 1), Interval(2, 3))
    assert config.case_id is CaseId.GAP
    assert config.endpoints == (-3, -2, -1, 0)
    assert config.reflected


def test_classify_gap_already_left():
    config = classify(Interval(2, 3), Interval(0, 1))
    assert config.case_id is CaseId.GAP
    assert config.endpoints == (0, 1, 2, 3)
    assert not config.reflected


def test_classify_touching_is_gap():
    config = classify(Interval(0, 1), Interval(1, 2))
    assert config.case_id is CaseId.GAP
    a1, a2, a3, a4 = config.endpoints
    assert a2 == a3


def test_classify_overlap():
    config = classify(Interval(0, 6), Interval(3, 12))
    assert config.case_id is CaseId.OVERLAP
    a1, a2, a3, a4 = config.endpoints
    assert a1 < a2 < a3 < a4


def test_classify_interior_and_covered():
    assert classify(Interval(0, 4), Interval(1, 2)).case_id is CaseId.INTERIOR
    assert classify(Interval(1, 2), Interval(0, 4)).case_id is CaseId.COVERED
    assert classify(Interval(0, 1), Interval(0, 1)).case_id is CaseId.COVERED


@given(finite, st.floats(0.01, 10.0), finite, st.floats(0.01, 10.0))
def test_classify_endpoints_ordered(lo_i, len_i, lo_j, len_j):
    config = classify(Interval(lo_i, lo_i + len_i), Interval(lo_j, lo_j + len_j))
    if config.case_id in (CaseId.GAP, CaseId.OVERLAP):
        a1, a2, a3, a4 = config.endpoints
        assert a1 < a2 <= a3 < a4
        # J starts the canonical frame
        assert a1 == min(
            config.to_canonical(config.interval_j.lo),
            config.to_canonical(config.interval_j.hi),
        )
    else:
        assert config.endpoints is None


def test_CaseConfig_require():
    config = classify(Interval(0, 1), Interval(2, 3))
    config.require(CaseId.GAP)
    with pytest.raises(ValidationException):
        config.require(CaseId.OVERLAP)


def test_gauss_grid_integrates_polynomials():
    nodes, weights = gauss_grid(Interval(-1.0, 2.0), 5, 4)
    assert np.sum(weights) == pytest.approx(3.0, abs=1e-13)
    assert np.sum(weights * nodes**3) == pytest.approx((16.0 - 1.0) / 4.0, abs=1e-12)


def test_gauss_grid_bad_points():
    with pytest.raises(ValidationException):
        gauss_grid(Interval(0, 1), 4, 1)


def test_GridFunction_requires_ascending_nodes():
    with pytest.raises(ValidationException):
        GridFunction(
            Interval(0, 1),
            np.array([0.5, 0.25]),
            np.array([0.5, 0.5]),
            np.array([1.0, 1.0]),
        )


def test_GridFunction_resample_uses_profile():
    f = GridFunction.from_callable(Interval(0, 1), np.sin, 4)
    nodes, weights = gauss_grid(Interval(0, 1), 16, 3)
    g = f.resample(Interval(0, 1), nodes, weights)
    assert np.allclose(g.values, np.sin(nodes), rtol=0.0, atol=1e-15)


def test_GridFunction_masked():
    f = GridFunction.from_callable(Interval(0, 2), lambda x: 1.0 + 0 * x, 8, 2)
    g = f.masked(Interval(0, 1))
    assert g.norm_l1() == pytest.approx(1.0, abs=1e-12)


def test_StepFunction_validates():
    with pytest.raises(ValidationException):
        StepFunction((0.0, 1.0), (1.0, 2.0))
    with pytest.raises(ValidationException):
        StepFunction((0.0, 0.0), (1.0,))


def test_StepFunction_norms():
    f = StepFunction((0.0, 0.5, 2.0), (2.0, -1.0))
    assert f.norm_l1() == pytest.approx(2.5)
    assert f.norm_l2() == pytest.approx(math.sqrt(2.0 + 1.5))
    assert f.tv() == pytest.approx(3.0)
    assert f.tv(compact=True) == pytest.approx(6.0)


def test_StepFunction_restrict():
    f = StepFunction.from_levels((0.0, 2.0), [1.0, 2.0])
    g = f.restrict(Interval(0.5, 1.5))
    assert g.norm_l1() == pytest.approx(0.5 + 1.0)
    assert g(np.array([0.25, 0.75, 1.25, 1.75])).tolist() == [0.0, 1.0, 2.0, 0.0]


def test_bump_has_unit_mass():
    nodes, weights = gauss_grid(Interval(-1, 1), 64, 8)
    assert np.sum(weights * bump(nodes)) == pytest.approx(1.0, abs=1e-10)
    assert bump(np.array([1.0, -1.5]))[0] == 0.0


@given(st.lists(st.floats(-3.0, 3.0), min_size=2, max_size=20))
def test_smooth_step_monotone(points):
    s = np.sort(np.asarray(points))
    values = smooth_step(s)
    assert np.all(np.diff(values) >= -1e-9)
    assert np.all((values >= 0.0) & (values <= 1.0))


def test_mollify_stays_inside_support():
    f = StepFunction.from_levels((0.0, 1.0), [0.0, 1.0, -2.0, 0.0])
    g = mollify(f, Interval(0.0, 1.0), 0.05, cells=256)
    near_edge = (g.nodes < 1e-3) | (g.nodes > 1.0 - 1e-3)
    assert np.all(np.abs(g.values[near_edge]) < 1e-12)


def test_mollify_does_not_add_variation():
    f = StepFunction.from_levels((0.0, 1.0), [0.0, 1.0, -2.0, 0.5, 0.0])
    g = mollify(f, Interval(0.0, 1.0), 0.02, cells=512)
    assert g.tv() <= f.tv(compact=True) + 1e-6


def test_mollify_converges_in_l2():
    f = StepFunction.from_levels((0.0, 1.0), [0.0, 1.0, 0.0])
    errors = []
    for width in (1e-2, 1e-3, 1e-4, 1e-5):
        g = mollify(f, Interval(0.0, 1.0), width, cells=2**16)
        diff = g.values - f(g.nodes)
        errors.append(math.sqrt(float(np.sum(g.weights * diff**2))))
    assert all(a > b for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 1e-2


def test_mollify_strict_needs_zero_level():
    f = StepFunction.from_levels((0.0, 1.0), [1.0, 2.0])
    with pytest.raises(ValidationException):
        mollify(f, Interval(0.0, 1.0), 0.05)
    g = mollify(f, Interval(0.0, 1.0), 0.05, strict=False)
    assert g.norm_linf() <= 2.0 + 1e-12


def test_mollify_width_too_large():
    f = StepFunction.from_levels((0.0, 1.0), [0.0, 1.0, 0.0])
    with pytest.raises(ValidationException):
        mollify(f, Interval(0.0, 1.0), 0.5)
