import numpy as np
import pytest

from oscphase.doob import (conditioned_phase_velocity, doob_generator,
                           doob_transformed_model, mean_phase_velocity)
from oscphase.errors import ParameterDomainError
from oscphase.grid import ScalarField
from oscphase.operators import interior_mask
from oscphase.simulate import SimConfig, UniformAnnulus

TWO_PI = 2.0 * np.pi


def test_identity_transform_is_exact(sl_sol, sl_model):
    # h = 1: operator and drift must come back bit-identical
    ones = ScalarField(grid=sl_sol.grid, values=np.ones(sl_sol.grid.n_nodes))
    gen = doob_generator(sl_sol.backward, ones, f_choice=0.0)
    assert (gen.matrix != sl_sol.backward.matrix).nnz == 0
    transformed = doob_transformed_model(sl_model, ones, sl_sol.grid)
    pts = np.random.default_rng(0).uniform(-1.5, 1.5, size=(50, 2))
    assert np.array_equal(transformed.effective.drift(pts),
                          sl_model.drift(pts))


def test_conservative_transform_zero_row_sums(sl_sol):
    h = ScalarField(grid=sl_sol.grid, values=sl_sol.spectral.u_field.values)
    gen = doob_generator(sl_sol.backward, h, f_choice="conservative")
    row_sums = np.asarray(gen.matrix @ np.ones(gen.matrix.shape[0]))
    scale = np.max(np.abs(gen.matrix).sum(axis=1))
    assert np.max(np.abs(row_sums)) < 1e-12 * scale


def test_positive_h_required(sl_sol, sl_model):
    bad = ScalarField(grid=sl_sol.grid,
                      values=np.linspace(-1, 1, sl_sol.grid.n_nodes))
    with pytest.raises(ParameterDomainError):
        doob_generator(sl_sol.backward, bad)
    with pytest.raises(ParameterDomainError):
        doob_transformed_model(sl_model, bad, sl_sol.grid)


def test_transformed_generator_adds_drift_correction(sl_sol, sl_model):
    # conditioning on the amplitude tilts the drift by 2 D grad(ln u):
    # L^u[v] = L[v] + (2 D grad ln u) . grad v for periodic test fields
    from oscphase.operators import gradient_xy
    spec = sl_sol.spectral
    grid = sl_sol.grid
    h = ScalarField(grid=grid, values=spec.u_field.values)
    gen = doob_generator(sl_sol.backward, h, f_choice="conservative")
    transformed = doob_transformed_model(sl_model, spec.u_field, grid)
    alpha, beta = grid.node_ab()
    v = np.sin(2 * alpha) * np.exp(beta)
    lhs = gen.matrix @ v
    vx, vy = gradient_xy(grid, v)
    rhs = (sl_sol.backward.matrix @ v
           + transformed.correction_x.values * vx
           + transformed.correction_y.values * vy)
    mask = interior_mask(grid)
    assert np.max(np.abs(lhs - rhs)[mask]) < 10 * sl_sol.truncation


def test_drift_correction_direction(nn_sol, nn_model):
    # 2 D grad(ln u): with u growing in radius near the center, the
    # conditioned drift pushes outward (away from the phaseless focus)
    transformed = doob_transformed_model(nn_model, nn_sol.spectral.u_field,
                                         nn_sol.grid)
    pts = nn_sol.grid.to_xy(np.linspace(0, TWO_PI, 16, endpoint=False),
                            np.full(16, -0.9))
    corr = transformed.effective.drift(pts) - nn_model.drift(pts)
    radial = np.sum(corr * pts / np.linalg.norm(pts, axis=1)[:, None], axis=1)
    assert np.all(radial > 0)


def test_conditioned_velocity_matches_omega1(sl_sol, sl_model):
    transformed = doob_transformed_model(sl_model, sl_sol.spectral.u_field,
                                         sl_sol.grid)
    cfg = SimConfig(dt=0.01, n_steps=1500, n_samples=200, seed=12,
                    initial=UniformAnnulus(0.7, 1.3))
    v, se = conditioned_phase_velocity(transformed, sl_sol.spectral, cfg)
    assert abs(v - sl_sol.spectral.omega1) < 3 * se + 0.01


def test_unconditioned_velocity_shifted_by_omega_average(nn_sol, nn_model):
    # without conditioning the mean phase velocity is omega_1 - <Omega>_P0
    grid = nn_sol.grid
    om = nn_sol.spectral.omega_field.values
    w, P = grid.weights, nn_sol.P0.values
    avg_omega = np.nansum(w * P * om) / np.nansum(w * P)
    cfg = SimConfig(dt=0.005, n_steps=4000, n_samples=300, seed=13,
                    initial=UniformAnnulus(0.3, 1.0))
    v, se = mean_phase_velocity(nn_model, nn_sol.spectral, cfg)
    expected = nn_sol.spectral.omega1 - avg_omega
    assert abs(v - expected) < 3 * se + 0.02
