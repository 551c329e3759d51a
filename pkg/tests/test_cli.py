import json

import pytest

from oscphase.cli import DEFAULT_CONFIG, load_config, main

SMALL_CONFIG = {
    "grid": {"n_alpha": 64, "n_beta": 32},
    "sim": {"n_steps": 400, "n_samples": 20, "dt": 0.01,
            "initial": {"r_lo": 0.8, "r_hi": 1.2}},
    "solver": {"negative_tol": 1e-3, "isochron_levels": 4},
}


@pytest.fixture()
def config_path(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(SMALL_CONFIG))
    return str(p)


def test_load_config_merges_defaults(config_path):
    cfg = load_config(config_path)
    assert cfg["grid"]["n_alpha"] == 64
    assert cfg["grid"]["r_in"] == DEFAULT_CONFIG["grid"]["r_in"]
    assert cfg["model"] == DEFAULT_CONFIG["model"]


def test_unknown_section_rejected(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"plotting": {}}))
    assert main(["simulate", "--config", str(p)]) == 1


def test_missing_config_is_domain_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 1


def test_unknown_command_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--frobnicate"])
    assert exc.value.code == 2


def test_spectral_manifest_contract(config_path, tmp_path):
    out = tmp_path / "run1"
    assert main(["spectral", "--config", config_path, "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    for key in ("lambda1_re", "lambda1_im", "Tbar", "delta_omega"):
        assert key in manifest
    assert (out / "psi_field.csv").exists()
    assert (out / "u_field.csv").exists()
    assert (out / "Omega_field.csv").exists()


def test_simulate_reproducible_and_seed_override(config_path, tmp_path):
    a, b, c = (tmp_path / d for d in ("a", "b", "c"))
    assert main(["simulate", "--config", config_path, "--out", str(a)]) == 0
    assert main(["simulate", "--config", config_path, "--out", str(b)]) == 0
    assert ((a / "trajectories.csv").read_bytes()
            == (b / "trajectories.csv").read_bytes())
    assert main(["simulate", "--config", config_path, "--out", str(c),
                 "--seed", "99"]) == 0
    assert ((a / "trajectories.csv").read_bytes()
            != (c / "trajectories.csv").read_bytes())
    manifest = json.loads((c / "manifest.json").read_text())
    assert manifest["config"]["sim"]["seed"] == 99


def test_grid_flag_overrides(config_path, tmp_path):
    out = tmp_path / "run"
    assert main(["mrt", "--config", config_path, "--out", str(out),
                 "--grid-na", "48", "--grid-nb", "24"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["grid"]["n_alpha"] == 48
    lines = (out / "Theta_field.csv").read_text().splitlines()
    assert len(lines) == 1 + 48 * 24


def test_prc_rejects_model_without_cycle(tmp_path):
    p = tmp_path / "focus.json"
    p.write_text(json.dumps({
        "model": {"model": "linear_focus",
                  "params": {"A": [-1.0, -2.0, 2.0, -1.0], "sigma": 0.5}}}))
    assert main(["prc", "--config", str(p), "--out", str(tmp_path)]) == 1


def test_prc_outputs(config_path, tmp_path):
    out = tmp_path / "prc"
    assert main(["prc", "--config", config_path, "--out", str(out)]) == 0
    lines = (out / "cycle_prc.csv").read_text().splitlines()
    assert lines[0] == "t,ux,uy,zx,zy"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["period"] == pytest.approx(2 * 3.14159265, rel=1e-6)


def test_doob_manifest(config_path, tmp_path):
    out = tmp_path / "doob"
    assert main(["doob", "--config", config_path, "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["doob"] == {"h": "u", "f": "conservative"}
    assert "conditioned_velocity" in manifest
    assert (out / "doob_correction_x.csv").exists()
