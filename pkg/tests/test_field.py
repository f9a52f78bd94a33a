import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cylcycles.errors import IdenticallyZero, ModelParseError, OnSwitchingLine
from cylcycles.experiments import max_crossings_field
from cylcycles.field import (
    ABOVE,
    BELOW,
    eval_field,
    field_from_dict,
    is_continuous,
    is_crossing,
    load_model,
    make_field,
    max_crossings,
    perturb,
    side_values,
    switching_zero_times,
    two_region,
)
from cylcycles.trigpoly import TrigPoly

ZERO = TrigPoly()
ONE = TrigPoly(1.0)


def test_eval_field_examples():
    F = max_crossings_field(2, 2)
    assert eval_field(F, math.pi / 4, 0.5) == pytest.approx(-6.0, abs=1e-14)
    assert eval_field(make_field([], [(ONE, ZERO)]), 1.23, 2.0) == 2.0
    assert eval_field(two_region(ZERO, ONE, ZERO, -ONE), 0.0, 0.1) == 1.0


def test_eval_on_threshold_refused():
    F = two_region(ZERO, ONE, ZERO, -ONE)
    with pytest.raises(OnSwitchingLine):
        eval_field(F, 0.0, 5e-14)


def test_side_values():
    F = two_region(ZERO, TrigPoly.sin(1), ZERO, TrigPoly.sin(1))
    lo, hi = side_values(F, 1, math.pi / 2)
    assert (lo.value, hi.value) == pytest.approx((1.0, 1.0))
    assert lo.side == BELOW and hi.side == ABOVE
    lo, hi = side_values(max_crossings_field(2, 2), 2, 0.0)
    assert lo.value == 0.0 and hi.value == 0.0


def _lateral(below, above):
    return two_region(ZERO, TrigPoly(above), ZERO, TrigPoly(below))


def test_is_crossing():
    assert is_crossing(_lateral(1, 1), 1, 0.0)
    assert not is_crossing(_lateral(1, -1), 1, 0.0)
    assert not is_crossing(_lateral(0, 1), 1, 0.0)


def test_is_continuous():
    assert is_continuous(max_crossings_field(1, 2))
    assert is_continuous(two_region(ONE, ZERO, -ONE, ZERO, x1=0.0))
    assert not is_continuous(two_region(ONE, ZERO, -ONE, ZERO, x1=1.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(-3, 3), st.floats(0, 7))
def test_continuous_construction_has_equal_sides(x1, c, t):
    a_lo, b_lo = TrigPoly(0.2, [c], [0.5]), TrigPoly(1.0, [0.3], [-c])
    a_hi = TrigPoly(-0.7, [0.1], [c])
    b_hi = b_lo + (a_lo - a_hi) * x1
    F = two_region(a_hi, b_hi, a_lo, b_lo, x1)
    assert is_continuous(F, 1e-10)
    lo, hi = side_values(F, 1, t)
    assert lo.value == pytest.approx(hi.value, abs=1e-10)


def test_perturb():
    F = two_region(ZERO, ONE, ZERO, -ONE)
    assert perturb(F, 0.0) is F
    assert perturb(F, 0.5).piece(2).b.a0 == 1.5
    rng = np.random.default_rng(0)
    G = perturb(max_crossings_field(2, 3), 0.3)
    for t, x in rng.uniform([0, -5], [7, 5], (20, 2)):
        assert eval_field(G, t, x) - eval_field(max_crossings_field(2, 3), t, x) == pytest.approx(0.3, abs=1e-14)


def test_max_crossings():
    F = make_field([0.0, 1.0, 2.0], [(TrigPoly.cos(2), ZERO)] * 4)
    assert max_crossings(F) == 12
    assert max_crossings(make_field([], [(ONE, ZERO)])) == 0
    assert max_crossings(max_crossings_field(3, 2)) == 12


def test_region_index_moves_by_one():
    F = make_field([0.0, 1.0, 2.0], [(ZERO, ONE)] * 4)
    assert [F.region_index(x) for x in (-1, 0.5, 1.5, 3)] == [1, 2, 3, 4]


def test_switching_zero_times():
    F = two_region(ZERO, TrigPoly.sin(1), ZERO, TrigPoly.sin(1), x1=3.0)
    np.testing.assert_allclose(switching_zero_times(F, 1, BELOW), [0.0, math.pi], atol=1e-14)
    with pytest.raises(IdenticallyZero):
        switching_zero_times(two_region(ONE, ZERO, ONE, ZERO), 1, ABOVE)
    z = switching_zero_times(max_crossings_field(2, 2), 1, ABOVE)
    np.testing.assert_allclose(z, [0, math.pi / 2, math.pi, 3 * math.pi / 2], atol=1e-14)


def test_validation():
    with pytest.raises(ValueError):
        make_field([1.0, 0.0], [(ZERO, ZERO)] * 3)
    with pytest.raises(ValueError):
        make_field([0.0], [(ZERO, ZERO)])


def test_model_period_rescaling(tmp_path):
    # x' = 2π sin(2πt) with period 1 becomes x' = sin(s) in the phase s = 2πt
    data = {"period": 1.0, "thresholds": [0.0], "pieces": [{"a": 0, "b": {"sin": [2 * math.pi]}}] * 2}
    F = field_from_dict(data)
    assert F.piece(1).b.allclose(TrigPoly.sin(1), 1e-15)
    path = tmp_path / "m.json"
    path.write_text(json.dumps(F.to_dict()))
    assert load_model(path) == F


@pytest.mark.parametrize(
    "data",
    [
        {"thresholds": [1, 0], "pieces": [{"a": 0, "b": 0}] * 3},
        {"thresholds": [0], "pieces": [{"a": 0, "b": 0}]},
        {"thresholds": [0], "pieces": [{"a": 0}, {"a": 0, "b": 0}]},
        {"thresholds": [0], "pieces": [{"a": {"cos": ["x"]}, "b": 0}] * 2},
        {"thresholds": [0], "pieces": [{"a": 0, "b": 0}] * 2, "period": -1},
        {"thresholds": [0], "pieces": [{"a": 0, "b": 0}] * 2, "bogus": 1},
    ],
)
def test_model_errors(data):
    with pytest.raises(ModelParseError):
        field_from_dict(data)


def test_model_json_error_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"thresholds": [0,\n ]}')
    with pytest.raises(ModelParseError, match="line 2"):
        load_model(path)
