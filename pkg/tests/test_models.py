import numpy as np
import pytest

from oscphase.errors import ParameterDomainError
from oscphase.models import (LinearFocusParams, StuartLandauParams,
                             TestFunction, eval_generator_symbolic,
                             make_linear_focus, make_stuart_landau,
                             model_from_config, model_to_config)


def test_stuart_landau_drift_values(sl_model):
    # at (1, 0) with a=b=1: f = (a - 1, b) = (0, 1)
    f = sl_model.drift(np.array([1.0, 0.0]))
    assert np.allclose(f, [0.0, 1.0])
    # polar check: radial part r(a - r^2), angular part b r
    x = np.array([0.3, -0.4])
    r2 = 0.25
    f = sl_model.drift(x)
    assert np.allclose(f, [1.0 * 0.3 + 0.4 - r2 * 0.3,
                           0.3 - 0.4 + r2 * 0.4])


def test_drift_vectorization(sl_model, lf_model):
    pts = np.random.default_rng(3).normal(size=(5, 7, 2))
    for model in (sl_model, lf_model):
        batch = model.drift(pts)
        single = np.stack([[model.drift(p) for p in row] for row in pts])
        assert np.allclose(batch, single)
        D = model.diffusion_tensor(pts)
        assert D.shape == (5, 7, 2, 2)
        g = model.diffusion(pts)
        assert np.allclose(D, 0.5 * np.einsum("...ik,...jk->...ij", g, g))


def test_param_validation():
    with pytest.raises(ParameterDomainError):
        StuartLandauParams(a=0.0, b=1.0, sigma=0.3)
    with pytest.raises(ParameterDomainError):
        StuartLandauParams(a=-1.0, b=1.0, sigma=0.3)
    with pytest.raises(ParameterDomainError):
        StuartLandauParams(a=1.0, b=1.0, sigma=-0.1)
    with pytest.raises(ParameterDomainError):
        LinearFocusParams(A=np.array([[1.0, -2.0], [2.0, 1.0]]), sigma=0.5)  # unstable
    with pytest.raises(ParameterDomainError):
        LinearFocusParams(A=np.array([[-1.0, 0.0], [0.0, -2.0]]), sigma=0.5)  # real spectrum
    with pytest.raises(ParameterDomainError):
        LinearFocusParams(A=np.eye(3), sigma=0.5)


def test_generator_on_quadratic(lf_model):
    # u(x) = x0^2: L u = 2 x0 (A x)_0 + 2 D_00, exact for the symbolic evaluator
    u = TestFunction(value=lambda x: x[0] ** 2,
                     gradient=lambda x: np.array([2 * x[0], 0.0]),
                     hessian=lambda x: np.array([[2.0, 0.0], [0.0, 0.0]]))
    A = lf_model.params["A"]
    sigma = lf_model.params["sigma"]
    x = np.array([0.7, -1.1])
    expected = 2 * x[0] * (A @ x)[0] + 2 * 0.5 * sigma ** 2
    assert eval_generator_symbolic(lf_model, u, x) == pytest.approx(expected)


def test_config_roundtrip(sl_model, lf_model):
    for model in (sl_model, lf_model):
        cfg = model_to_config(model)
        back = model_from_config(cfg)
        assert back.name == model.name
        pts = np.random.default_rng(0).normal(size=(9, 2))
        assert np.allclose(back.drift(pts), model.drift(pts))
        assert np.allclose(back.diffusion_tensor(pts),
                           model.diffusion_tensor(pts))


def test_config_keys(sl_model, lf_model):
    cfg = model_to_config(sl_model)
    assert set(cfg["params"]) == {"a", "b", "sigma"}
    cfg = model_to_config(lf_model)
    assert set(cfg["params"]) == {"A", "sigma"}
    assert len(cfg["params"]["A"]) == 4  # row-major 4-array


def test_unknown_model_config():
    with pytest.raises(ParameterDomainError):
        model_from_config({"model": "van_der_pol", "params": {}})
