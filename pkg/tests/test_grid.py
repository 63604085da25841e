import os

import numpy as np
import pytest

from carnot_heat import (
    GridError,
    GridFunction,
    build_structure,
    centered_origins,
    grid_mass,
    load_grid,
    sample_function,
)


@pytest.fixture(scope="module")
def structure():
    return build_structure(1, 1)


def test_centered_origins():
    assert centered_origins((5, 5, 5), (0.3, 0.3, 0.2)) == (-0.6, -0.6, -0.4)
    assert centered_origins((1, 9), (1.0, 0.5)) == (0.0, -2.0)


def test_sample_function_geometry(structure):
    g = sample_function(structure, (5, 7, 9), (0.3, 0.2, 0.1),
                        lambda x1, x2, z: x1 + 10.0 * x2 + 100.0 * z)
    assert g.counts == (5, 7, 9)
    assert np.allclose(g.axis(0), np.array([-0.6, -0.3, 0.0, 0.3, 0.6]))
    x1, x2, z = g.meshgrid()
    assert np.max(np.abs(g.values - (x1 + 10.0 * x2 + 100.0 * z))) == 0.0
    assert abs(g.cell_volume() - 0.3 * 0.2 * 0.1) <= 1e-15


def test_grid_validation(structure):
    with pytest.raises(GridError):
        GridFunction(structure, (5, 5), (0.1, 0.1), (0.0, 0.0),
                     np.zeros((5, 5)))
    with pytest.raises(GridError):
        GridFunction(structure, (5, 5, 5), (0.1,) * 3, (0.0,) * 3,
                     np.zeros((5, 5, 4)))
    with pytest.raises(GridError):
        GridFunction(structure, (5, 5, 5), (0.1, 0.1, -0.1), (0.0,) * 3,
                     np.zeros((5, 5, 5)))


def test_grid_mass_gaussian(structure):
    g = sample_function(structure, (41, 41, 41), (0.2, 0.2, 0.2),
                        lambda x1, x2, z: np.exp(-np.pi * (x1 * x1 + x2 * x2
                                                           + z * z)))
    assert abs(complex(grid_mass(g)).real - 1.0) <= 1e-12


def test_with_values_keeps_geometry(structure):
    g = sample_function(structure, (5, 5, 5), (0.3, 0.3, 0.2),
                        lambda x1, x2, z: x1 * z)
    h = g.with_values(2.0 * g.values, tag="doubled")
    assert h.counts == g.counts and h.spacings == g.spacings
    assert h.origins == g.origins
    assert np.array_equal(h.values, 2.0 * g.values)
    assert h.metadata.get("tag") == "doubled"
    assert "tag" not in g.metadata


def test_save_load_roundtrip(structure, tmp_path):
    rng = np.random.default_rng(311)
    vals = rng.normal(size=(5, 7, 9)) + 1j * rng.normal(size=(5, 7, 9))
    g = GridFunction(structure, (5, 7, 9), (0.3, 0.2, 0.1),
                     centered_origins((5, 7, 9), (0.3, 0.2, 0.1)), vals,
                     metadata={"kernel_time": 0.5, "note": "test"})
    path = tmp_path / "sample.htgf"
    g.save(path)
    raw = path.read_bytes()
    assert raw[:4] == b"HTGF"
    back = load_grid(path)
    assert back.structure.n == 1 and back.structure.m == 1
    assert back.counts == g.counts
    assert back.spacings == g.spacings
    assert back.origins == g.origins
    assert np.array_equal(back.values, g.values)
    # the file carries geometry and samples only; in-memory annotations
    # do not survive a round trip
    assert back.metadata == {}


def test_save_load_high_center_dim(tmp_path):
    s = build_structure(2, 3)
    g = sample_function(s, (3, 3, 3, 3, 3, 3, 3), (0.5,) * 7,
                        lambda *a: sum(a))
    path = tmp_path / "deep.htgf"
    g.save(path)
    back = load_grid(path)
    assert back.structure.n == 2 and back.structure.m == 3
    assert np.array_equal(back.values, g.values)


def test_load_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.htgf"
    bad.write_bytes(b"not a grid file at all padding padding")
    with pytest.raises(GridError):
        load_grid(bad)
    with pytest.raises(FileNotFoundError):
        load_grid(tmp_path / "missing.htgf")
