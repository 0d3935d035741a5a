import json

import numpy as np
import pytest

import abreu


def test_quadratic_instance_is_reproduced():
    s = abreu.solve_abreu(n=33, f0z="const:2")
    assert s["report"]["converged"]
    xx, yy = np.meshgrid(s["x"], s["y"])
    inside = ~np.isnan(s["u"])
    assert inside.sum() > 500
    assert np.nanmax(np.abs(s["u"] - 0.5 * (xx**2 + yy**2))) <= 5e-3
    assert np.nanmax(np.abs(s["w"] - 1.0)) <= 5e-3


def test_unknown_key_and_gate_raise_config_error():
    with pytest.raises(abreu.ConfigError):
        abreu.resolve_config("solve-abreu", {"no_such_key": 1})
    with pytest.raises(abreu.ConfigError):
        abreu.solve_abreu(q=1.5, delta=0.0)
    with pytest.raises(ValueError):
        abreu.solve_rc(eps=2.0)


def test_rc_solve_is_convex_with_small_penalty():
    r = abreu.solve_rc(n=17, eps=0.1)
    assert r["report"]["converged"]
    assert r["eps"] == 0.1
    assert 0.0 < r["penalty_l2"] < 1.0
    assert np.nanmin(r["w"]) > 0.0


def test_run_writes_files_that_read_back(tmp_path):
    out = tmp_path / "run"
    assert abreu.run("solve-abreu", n=17, manufactured=True, out=str(out)) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["converged"] and report["err_u"] < 1e-2
    f = abreu.read_field(out / "u.fld")
    direct = abreu.solve_abreu(n=17, manufactured=True)
    np.testing.assert_array_equal(f["values"], direct["u"])
    assert f["domain"] == "disk"
