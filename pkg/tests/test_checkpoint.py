import numpy as np
import pytest

from fbns.checkpoint import (CheckpointError, atomic_write_json,
                             field_from_bytes, field_to_bytes, read_field,
                             roundtrip_report, write_field)
from fbns.spectral import Grid, random_divfree_field, random_scalar_field


def test_roundtrip_scalar_and_vector(tmp_path):
    grid = Grid(dim=3, n=16, period_l=4.0)
    for field in (random_scalar_field(grid, seed=5),
                  random_divfree_field(grid, seed=6)):
        path = tmp_path / "field.fbns"
        write_field(path, field)
        back = read_field(path)
        assert back.grid == field.grid
        assert back.ncomp == field.ncomp
        assert np.array_equal(back.coeffs, field.coeffs)


def test_bytes_roundtrip_is_identity():
    grid = Grid(dim=2, n=8, period_l=1.0)
    field = random_scalar_field(grid, seed=1)
    data = field_to_bytes(field)
    assert field_to_bytes(field_from_bytes(data)) == data


def test_rejects_bad_magic():
    grid = Grid(dim=2, n=8, period_l=1.0)
    data = bytearray(field_to_bytes(random_scalar_field(grid, seed=2)))
    data[:4] = b"NOPE"
    with pytest.raises(CheckpointError, match="magic"):
        field_from_bytes(bytes(data))


def test_rejects_unknown_version():
    grid = Grid(dim=2, n=8, period_l=1.0)
    data = bytearray(field_to_bytes(random_scalar_field(grid, seed=3)))
    data[4] = 99
    with pytest.raises(CheckpointError, match="version"):
        field_from_bytes(bytes(data))


def test_rejects_truncated_payload():
    grid = Grid(dim=2, n=8, period_l=1.0)
    data = field_to_bytes(random_scalar_field(grid, seed=4))
    with pytest.raises(CheckpointError, match="truncated coefficient block"):
        field_from_bytes(data[:-8])
    with pytest.raises(CheckpointError, match="too short"):
        field_from_bytes(data[:10])


def test_rejects_invalid_grid_header():
    grid = Grid(dim=2, n=8, period_l=1.0)
    data = bytearray(field_to_bytes(random_scalar_field(grid, seed=5)))
    data[6] = 7  # dim byte
    with pytest.raises(CheckpointError, match="invalid grid header"):
        field_from_bytes(bytes(data))


def test_write_is_atomic_no_stray_tmp(tmp_path):
    grid = Grid(dim=2, n=8, period_l=1.0)
    path = tmp_path / "nested" / "field.fbns"
    write_field(path, random_scalar_field(grid, seed=6))
    assert path.exists()
    assert [p.name for p in path.parent.iterdir()] == ["field.fbns"]


def test_atomic_json_is_deterministic(tmp_path):
    payload = {"b": 2, "a": [1.5, None], "nested": {"z": True, "y": "s"}}
    p1 = tmp_path / "one.json"
    p2 = tmp_path / "two.json"
    atomic_write_json(p1, payload)
    atomic_write_json(p2, dict(reversed(list(payload.items()))))
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_bytes().endswith(b"\n")


def test_roundtrip_report_fields(tmp_path):
    grid = Grid(dim=3, n=8, period_l=2.0)
    path = tmp_path / "r.fbns"
    write_field(path, random_divfree_field(grid, seed=7))
    rep = roundtrip_report(path)
    assert rep["roundtrip_identical"] is True
    assert rep["dim"] == 3 and rep["n"] == 8 and rep["components"] == 3
    assert rep["period_l"] == 2.0 and rep["version"] == 1
