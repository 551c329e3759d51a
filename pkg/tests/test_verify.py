import numpy as np
import pytest

from oscphase.grid import build_grid
from oscphase.verify import (VerifySettings, isochron_starts,
                             run_identity_suite)

SMALL = VerifySettings(n_samples=80, n_steps=1500, n_groups=4,
                       doob_samples=60, doob_steps=1000, n_returns=500,
                       negative_tol=1e-3)

CHECK_NAMES = ["grid_theta_rate", "grid_psi_omega", "grid_combined",
               "autocorr_eigenvalue", "doob_conditioned_velocity",
               "mrt_homogeneity"]


@pytest.fixture(scope="module")
def sl_report(sl_model):
    grid = build_grid(0.2, 2.5, 64, 32)
    return run_identity_suite(sl_model, grid, SMALL)


def test_six_checks_pass(sl_report):
    assert [c.name for c in sl_report.checks] == CHECK_NAMES
    for c in sl_report.checks:
        assert c.passed, f"{c.name}: {c.value} > {c.tolerance}"
    assert sl_report.all_pass


def test_report_schema(sl_report):
    d = sl_report.to_dict()
    assert set(d) == {"checks", "manifest"}
    for entry in d["checks"]:
        assert set(entry) == {"name", "value", "tolerance", "pass"}
    for key in ("lambda1_re", "lambda1_im", "Tbar", "delta_omega",
                "model", "grid", "seed"):
        assert key in d["manifest"]


def test_report_deterministic(sl_model, sl_report):
    grid = build_grid(0.2, 2.5, 64, 32)
    again = run_identity_suite(sl_model, grid, SMALL)
    for a, b in zip(sl_report.checks, again.checks):
        assert a.value == b.value


def test_grid_checks_use_truncation_tolerance(sl_report):
    trunc = sl_report.manifest["truncation_estimate"]
    for c in sl_report.checks[:3]:
        assert c.tolerance == pytest.approx(10 * trunc)
    for c in sl_report.checks[3:]:
        assert c.tolerance == 3.0


def test_corrupted_amplitude_fails_check_two(nn_model, nn_sol):
    report = run_identity_suite(nn_model, nn_sol.grid, SMALL,
                                u_perturbation=0.1, sol=nn_sol)
    by_name = {c.name: c for c in report.checks}
    assert by_name["grid_theta_rate"].passed
    assert not by_name["grid_psi_omega"].passed
    assert not report.all_pass


def test_isochron_starts_lie_on_isochron(sl_sol):
    starts = isochron_starts(sl_sol.mrt, sl_sol.grid, level=0.5 * np.pi,
                             n_points=5, r_peak=1.0)
    assert starts.shape == (5, 2)
    theta = sl_sol.grid.interpolate_cyclic(sl_sol.mrt.Theta_field.values,
                                           starts)
    d = np.angle(np.exp(1j * (theta - 0.5 * np.pi)))
    assert np.max(np.abs(d)) < 1e-6
    r = np.hypot(starts[:, 0], starts[:, 1])
    assert r.max() - r.min() > 0.5


def test_summary_lines(sl_report):
    text = sl_report.summary()
    assert text.count("\n") == 5
    assert "[PASS]" in text
