import numpy as np
import pytest

from swirllab.errors import FormatError, GridMismatchError
from swirllab.fields import ScalarFieldRZ
from swirllab.swrlio import (make_check, make_report, read_fields,
                             validate_report, write_fields)


def _sample_fields(grid, rng):
    r = grid.radial_nodes[:, None]
    z = grid.z_nodes[None, :]
    gamma = ScalarFieldRZ(grid, r**2 * np.exp(-(r**2 + z**2)), role_tag="gamma")
    g = ScalarFieldRZ(grid, rng.standard_normal((grid.nr, grid.nz)), role_tag="g")
    return {"gamma": gamma, "g": g}


def test_round_trip_bit_exact(tmp_path, grid_small, rng):
    fields = _sample_fields(grid_small, rng)
    path = tmp_path / "state.swrl"
    write_fields(path, grid_small, fields, time=0.125)
    back = read_fields(path)
    assert back.time == 0.125
    assert back.grid == grid_small
    assert list(back.fields) == ["gamma", "g"]
    for name in fields:
        assert np.array_equal(back.fields[name].values, fields[name].values)


def test_magic_mismatch(tmp_path):
    path = tmp_path / "bad.swrl"
    path.write_bytes(b"NOTSWRL!" + b"\x00" * 64)
    with pytest.raises(FormatError, match="magic"):
        read_fields(path)


def test_truncated_payload(tmp_path, grid_small, rng):
    path = tmp_path / "state.swrl"
    write_fields(path, grid_small, _sample_fields(grid_small, rng))
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) - 100])
    with pytest.raises(FormatError, match="truncated"):
        read_fields(path)


def test_grid_mismatch_on_read_into(tmp_path, grid_small, grid_base, rng):
    path = tmp_path / "state.swrl"
    write_fields(path, grid_small, _sample_fields(grid_small, rng))
    with pytest.raises(GridMismatchError):
        read_fields(path, grid=grid_base)


def test_field_name_too_long(tmp_path, grid_small, rng):
    fields = {"x" * 17: _sample_fields(grid_small, rng)["g"]}
    with pytest.raises(FormatError):
        write_fields(tmp_path / "state.swrl", grid_small, fields)


def test_write_requires_shared_grid(tmp_path, grid_small, grid_base):
    f = ScalarFieldRZ(grid_base, np.zeros((grid_base.nr, grid_base.nz)))
    with pytest.raises(GridMismatchError):
        write_fields(tmp_path / "state.swrl", grid_small, {"g": f})


def test_report_schema_round_trip():
    rep = make_report("score", {"file": "x"},
                      [make_check("q_star_finite", 1.0, "finite", True)])
    validate_report(rep)


def test_report_schema_version_mismatch():
    rep = make_report("score", {}, [])
    rep["schema"] = 999
    with pytest.raises(FormatError, match="schema"):
        validate_report(rep)


def test_report_missing_keys():
    with pytest.raises(FormatError):
        validate_report({"tool": "x", "version": "0", "schema": 1, "inputs": {}})
