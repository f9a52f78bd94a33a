import json

import pytest

from cylcycles.config import Tolerances, load_tolerances


def test_defaults():
    tol = load_tolerances({})
    assert tol == Tolerances()
    assert tol.simple == 1e-8 and tol.dedup == 1e-8 and tol.default_grid == 2048


def test_inline_override():
    tol = load_tolerances({"CYLCYCLES_TOL": json.dumps({"simple": 1e-6, "default_grid": 512})})
    assert tol.simple == 1e-6 and tol.default_grid == 512


def test_file_override(tmp_path):
    path = tmp_path / "tol.json"
    path.write_text(json.dumps({"tangency": 1e-7}))
    assert load_tolerances({"CYLCYCLES_TOL": str(path)}).tangency == 1e-7


def test_unknown_name_rejected():
    with pytest.raises(ValueError):
        load_tolerances({"CYLCYCLES_TOL": json.dumps({"nope": 1})})
