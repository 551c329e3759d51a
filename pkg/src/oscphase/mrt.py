"""Mean-return-time phase from the backward boundary-value problem.

The mean return time T solves L[T] = -1 with Neumann radial boundaries
and a jump of one mean period across the cut alpha = 0. The jump is
realized by the ansatz T = -Tbar * alpha / (2 pi) + S with S periodic,
which turns the problem into a standard (singular, compatible) periodic
sparse solve with an explicit Fredholm compatibility residual.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from skimage import measure

from .errors import SingularOperatorError
from .grid import AnnulusGrid, ScalarField
from .operators import SparseOperator

__all__ = ["MrtSolution", "solve_mrt", "isochron_extract", "left_null_vector"]

TWO_PI = 2.0 * np.pi


def left_null_vector(backward: SparseOperator) -> np.ndarray:
    """Left null vector of the discrete generator, normalized to sum 1.

    Equals quadrature-weight times the stationary density.
    """
    M = backward.matrix.T.tolil(copy=True)
    N = M.shape[0]
    i0 = N // 2
    M[i0, :] = 1.0
    rhs = np.zeros(N)
    rhs[i0] = 1.0
    ell = spla.spsolve(M.tocsc(), rhs)
    resid = np.max(np.abs(backward.matrix.T @ ell))
    if resid > 1e-6 * np.max(np.abs(ell)) * float(abs(backward.matrix).sum(axis=1).max()):
        raise SingularOperatorError(f"left null vector residual {resid:.3e} too large")
    return ell / np.sum(ell)


@dataclass
class MrtSolution:
    """Mean-return-time field and the derived phase."""

    T_field: ScalarField            # branch on alpha in [0, 2pi); jumps by Tbar at the cut
    Tbar: float
    Theta_field: ScalarField        # wrapped to [0, 2pi)
    theta_smooth: ScalarField       # unwrapped representative, winding +1 in alpha
    T0: float
    compat_residual: float          # Fredholm compatibility defect of the periodic solve


def solve_mrt(backward: SparseOperator, grid: AnnulusGrid, Tbar: float,
              T0: Optional[float] = None,
              compat_tol: float = 0.05) -> MrtSolution:
    """Solve the mean-return-time problem with the jump decomposition.

    The periodic part S solves L[S] = -1 + (Tbar / 2 pi) L[alpha] with
    mean-zero normalization under the stationary measure; the additive
    constant T0 defaults to anchoring Theta = 0 at the node
    (alpha = 0, beta ~ 0).
    """
    if backward.kind != "backward" or backward.coeffs is None:
        raise SingularOperatorError("solve_mrt needs the assembled backward operator")
    M = backward.matrix
    N = grid.n_nodes
    rhs = -np.ones(N) + (Tbar / TWO_PI) * backward.coeffs["B_a"]

    ell = left_null_vector(backward)
    compat = float(ell @ rhs)
    if abs(compat) > compat_tol:
        raise SingularOperatorError(
            f"MRT problem inconsistent: flux/Tbar mismatch, compatibility "
            f"residual {compat:.3e}")

    # bordered system: [[M, 1], [ell^T, 0]] (S, mu) = (rhs, 0)
    ones = np.ones((N, 1))
    K = sp.bmat([[M, ones], [sp.csr_matrix(ell[None, :]), None]], format="csc")
    sol = spla.spsolve(K, np.concatenate([rhs, [0.0]]))
    S = sol[:N]

    alpha, _ = grid.node_ab()
    T = -Tbar * alpha / TWO_PI + S

    anchor = grid.flat_index(0, int(np.argmin(np.abs(grid.beta))))
    if T0 is None:
        T0 = float(T[anchor])
    theta_smooth = (TWO_PI / Tbar) * (T0 - T)          # = alpha + periodic, winding +1
    theta = np.mod(theta_smooth, TWO_PI)

    return MrtSolution(
        T_field=ScalarField(grid=grid, values=T, name="T", units="time"),
        Tbar=float(Tbar),
        Theta_field=ScalarField(grid=grid, values=theta, name="Theta", units="rad"),
        theta_smooth=ScalarField(grid=grid, values=theta_smooth, name="Theta_smooth",
                                 units="rad", meta={"winding": 1}),
        T0=float(T0),
        compat_residual=compat,
    )


def isochron_extract(Theta_field: ScalarField, level: float) -> list[np.ndarray]:
    """Marching-squares contour of the phase at a level, cut-aware.

    The cyclic field is compared against the level through the wrapped
    difference; cells near the antipodal phase are masked so the 0/2pi
    identification cannot produce spurious segments. Returns polylines
    as (n, 2) Cartesian vertex arrays.
    """
    grid = Theta_field.grid
    d = np.angle(np.exp(1j * (Theta_field.as_2d() - level)))
    d_ext = np.vstack([d, d[:1, :]])                   # close the periodic seam
    mask = np.abs(d_ext) <= 0.5 * np.pi
    contours = measure.find_contours(d_ext, 0.0, mask=mask)
    polylines = []
    for c in contours:
        alpha = c[:, 0] * grid.d_alpha
        beta = -1.0 + c[:, 1] * grid.d_beta
        polylines.append(grid.to_xy(alpha, beta))
    if not polylines:
        raise SingularOperatorError(
            f"empty isochron at level {level}: phase field is corrupted")
    return polylines
