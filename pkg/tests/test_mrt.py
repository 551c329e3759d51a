import numpy as np
import pytest

from oscphase.errors import SingularOperatorError
from oscphase.mrt import isochron_extract, left_null_vector, solve_mrt
from oscphase.operators import apply_backward_winding, interior_mask

TWO_PI = 2.0 * np.pi


def test_left_null_vector(sl_sol):
    ell = left_null_vector(sl_sol.backward)
    assert np.sum(ell) == pytest.approx(1.0)
    assert np.max(np.abs(sl_sol.backward.matrix.T @ ell)) < 1e-8
    # equals quadrature weight times stationary density (both normalized)
    wp = sl_sol.grid.weights * sl_sol.P0.values
    wp = wp / wp.sum()
    assert np.max(np.abs(ell - wp)) < 1e-6 * wp.max()


def test_generator_identity_on_theta(sl_sol):
    # defining property: L Theta = 2 pi / Tbar away from the boundary
    lt = apply_backward_winding(sl_sol.backward,
                                sl_sol.mrt.theta_smooth.values, 1)
    mask = interior_mask(sl_sol.grid)
    assert np.max(np.abs(lt - TWO_PI / sl_sol.Tbar)[mask]) < 1e-8


def test_return_time_jump(sl_sol):
    # T branch drops by Tbar across one revolution: T(alpha) + Tbar*alpha/2pi
    # is periodic, so first and "wrapped" last columns differ by ~Tbar*dalpha/2pi
    T = sl_sol.mrt.T_field.as_2d()
    grid = sl_sol.grid
    along = T[:, grid.n_beta // 2]
    alpha_last = grid.alpha[-1]
    periodic_defect = along[0] - (along[-1]
                                  + (sl_sol.Tbar / TWO_PI) * alpha_last)
    assert periodic_defect == pytest.approx(0.0, abs=1e-6)
    span = along.max() - along.min()
    assert span == pytest.approx(sl_sol.Tbar * (1 - 1.0 / grid.n_alpha),
                                 rel=0.05)


def test_theta_is_polar_angle_for_isochronous_model(sl_sol):
    # zero shear: isochrons of the isotropic Stuart-Landau are radial rays
    alpha, _ = sl_sol.grid.node_ab()
    d = np.angle(np.exp(1j * (sl_sol.mrt.Theta_field.values - alpha)))
    assert np.max(np.abs(d)) < 1e-6


def test_theta_anchor(sl_sol):
    grid = sl_sol.grid
    anchor = grid.flat_index(0, int(np.argmin(np.abs(grid.beta))))
    assert sl_sol.mrt.Theta_field.values[anchor] == pytest.approx(0.0, abs=1e-12)


def test_compatibility_residual_small(sl_sol, lf_sol):
    assert abs(sl_sol.mrt.compat_residual) < 1e-6
    assert abs(lf_sol.mrt.compat_residual) < 1e-3


def test_wrong_tbar_fails_compatibility(sl_sol):
    with pytest.raises(SingularOperatorError):
        solve_mrt(sl_sol.backward, sl_sol.grid, Tbar=0.7 * sl_sol.Tbar)


def test_isochron_extract(sl_sol):
    for level in (0.0, 1.0, np.pi, 5.0):
        polys = isochron_extract(sl_sol.mrt.Theta_field, level)
        assert len(polys) >= 1
        pts = np.vstack(polys)
        # radial isochron: all vertices at polar angle = level
        ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), TWO_PI)
        d = np.angle(np.exp(1j * (ang - level)))
        assert np.max(np.abs(d)) < 1e-4
        # spans the annulus radially
        r = np.hypot(pts[:, 0], pts[:, 1])
        assert r.min() < 0.35 and r.max() > 2.3


def test_isochrons_curve_for_nonnormal_focus(nn_sol):
    # non-normal focus has amplitude-dependent phase: isochrons are not rays
    polys = isochron_extract(nn_sol.mrt.Theta_field, 1.0)
    pts = np.vstack(polys)
    ang = np.mod(np.arctan2(pts[:, 1], pts[:, 0]), TWO_PI)
    spread = np.ptp(np.unwrap(np.sort(ang)))
    assert spread > 0.05
