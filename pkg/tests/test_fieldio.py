import json

import numpy as np
import pytest

from oscphase import fieldio
from oscphase.empirical import binned_current
from oscphase.grid import ComplexField, ScalarField, build_grid
from oscphase.models import make_stuart_landau, StuartLandauParams
from oscphase.simulate import SimConfig, euler_maruyama

FIELD_HEADER = "i_alpha,i_beta,alpha,beta,x,y,value_re,value_im"


@pytest.fixture()
def grid():
    return build_grid(0.4, 1.8, 24, 12)


def test_field_csv_roundtrip_scalar(tmp_path, grid):
    rng = np.random.default_rng(0)
    f = ScalarField(grid=grid, values=rng.normal(size=grid.n_nodes))
    path = tmp_path / "f.csv"
    fieldio.write_field_csv(path, f)
    assert path.read_text().splitlines()[0] == FIELD_HEADER
    back = fieldio.read_field_csv(path)
    assert isinstance(back, ScalarField)
    assert np.allclose(back.values, f.values, rtol=0, atol=0)
    assert back.grid.shape == grid.shape
    assert back.grid.r_in == pytest.approx(grid.r_in)


def test_field_csv_roundtrip_complex(tmp_path, grid):
    rng = np.random.default_rng(1)
    f = ComplexField(grid=grid, values=rng.normal(size=grid.n_nodes)
                     + 1j * rng.normal(size=grid.n_nodes))
    path = tmp_path / "q.csv"
    fieldio.write_field_csv(path, f)
    back = fieldio.read_field_csv(path, grid=grid)
    assert isinstance(back, ComplexField)
    assert np.allclose(back.values, f.values, rtol=0, atol=0)


def test_quiver_csv_roundtrip(tmp_path, sl_model):
    ens = euler_maruyama(sl_model, SimConfig(dt=0.01, n_steps=800,
                                             n_samples=40, seed=6))
    cur = binned_current(ens, bins=12, min_count=5)
    path = tmp_path / "quiver.csv"
    fieldio.write_quiver_csv(path, cur)
    data = fieldio.read_quiver_csv(path)
    assert set(data) == {"x", "y", "jx", "jy", "count"}
    assert len(data["x"]) == int(cur.mask.sum())
    assert np.all(np.isfinite(data["jx"]))


def test_trajectory_csv(tmp_path, sl_model):
    ens = euler_maruyama(sl_model, SimConfig(dt=0.01, n_steps=10,
                                             n_samples=3, seed=0))
    path = tmp_path / "traj.csv"
    fieldio.write_trajectory_csv(path, ens)
    lines = path.read_text().splitlines()
    assert lines[0] == "traj_id,t,x,y"
    assert len(lines) == 1 + 3 * 11
    first = lines[1].split(",")
    assert first[0] == "0" and float(first[1]) == 0.0


def test_isochron_csv(tmp_path):
    polys = [[np.array([[0.0, 1.0], [0.5, 1.5]])],
             [np.array([[1.0, 0.0]]), np.array([[2.0, 0.0], [2.5, 0.1]])]]
    path = tmp_path / "iso.csv"
    fieldio.write_isochron_csv(path, [0.0, np.pi], polys)
    lines = path.read_text().splitlines()
    assert lines[0] == "level,vertex_index,x,y"
    assert len(lines) == 1 + 2 + 1 + 2


def test_manifest_roundtrip(tmp_path):
    m = {"command": "spectral", "lambda1_re": -1.0, "lambda1_im": 2.0,
         "Tbar": np.pi, "delta_omega": 0.01,
         "grid": {"n_alpha": 64}, "model": {"model": "linear_focus"}}
    path = tmp_path / "manifest.json"
    fieldio.write_manifest(path, m)
    back = fieldio.read_manifest(path)
    assert back["lambda1_re"] == -1.0
    assert back["grid"]["n_alpha"] == 64
    # valid, sorted JSON on disk
    raw = json.loads(path.read_text())
    assert list(raw) == sorted(raw)


def test_grid_config_roundtrip(grid):
    cfg = fieldio.grid_to_config(grid)
    g2 = fieldio.grid_from_config(cfg)
    assert g2.shape == grid.shape
    assert np.allclose(g2.r, grid.r)


def test_read_field_rejects_wrong_schema(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(Exception):
        fieldio.read_field_csv(path)


def test_operator_csv(tmp_path, sl_model):
    from oscphase.operators import assemble_backward
    g = build_grid(0.4, 1.8, 16, 8)
    back = assemble_backward(sl_model, g)
    path = tmp_path / "op.csv"
    fieldio.write_operator_csv(path, back)
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,value"
    assert len(lines) == 1 + back.matrix.nnz
