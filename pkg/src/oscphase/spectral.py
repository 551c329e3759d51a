"""Spectral (asymptotic) phase from the leading complex eigenpair.

The slowest-decaying nontrivial eigenpair of the generator yields the
amplitude u = |Q|, the phase psi = arg Q, the geometric angular-velocity
field Omega = 2 sum_ij D_ij (d_i ln u)(d_j psi), and the frequency
mismatch delta_omega = 2 pi / Tbar - omega_1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse.linalg as spla

from .errors import PhaselessRegionError, SingularOperatorError
from .grid import AnnulusGrid, ComplexField, ScalarField
from .models import OscillatorModel
from .operators import (SparseOperator, apply_backward_winding, gradient_xy,
                        interior_mask)

__all__ = [
    "SpectralSolution",
    "spectrum_near",
    "leading_eigenpair",
    "phase_amplitude",
    "omega_field",
    "delta_omega",
    "solve_spectral",
    "phase_decomposition",
    "PhaseDecomposition",
]


def spectrum_near(backward: SparseOperator, sigma: complex, k: int = 8,
                  tol: float = 0.0):
    """Eigenvalues/vectors of the backward operator nearest a complex shift."""
    Mc = backward.matrix.astype(complex).tocsc()
    # fixed start vector keeps the Arnoldi iteration (and so every digit of
    # the output) reproducible run to run
    n = Mc.shape[0]
    v0 = np.full(n, 1.0 / np.sqrt(n), dtype=complex)
    vals, vecs = spla.eigs(Mc, k=k, sigma=sigma, tol=tol, v0=v0)
    return vals, vecs


def _default_omega_guess(backward: SparseOperator) -> float:
    # area-weighted mean angular drift; only needs the right order of magnitude
    w = backward.grid.weights
    return float(abs(np.sum(w * backward.coeffs["B_a"]) / np.sum(w)))


def leading_eigenpair(backward: SparseOperator,
                      omega_guess: Optional[float] = None,
                      k: int = 8,
                      residual_tol: float = 1e-8) -> tuple[complex, ComplexField]:
    """Leading nontrivial complex eigenpair of the generator.

    Shift-invert targets i * omega_guess; among the computed eigenvalues
    the complex one with maximal real part is selected, resolved to
    positive imaginary part, normalized to unit grid-L2 norm with
    arg Q = 0 at the node (alpha=0, beta~0).
    """
    grid = backward.grid
    if omega_guess is None:
        omega_guess = _default_omega_guess(backward)
    vals, vecs = spectrum_near(backward, 1j * abs(omega_guess), k=k)

    im_tol = 1e-8 * max(1.0, float(np.max(np.abs(vals))))
    complex_ix = np.where(np.abs(vals.imag) > im_tol)[0]
    if complex_ix.size == 0:
        raise SingularOperatorError(
            "no complex eigenvalue found near the target frequency; "
            "leading nontrivial eigenvalue appears to be real")
    best = complex_ix[np.argmax(vals[complex_ix].real)]
    lam = vals[best]
    vec = vecs[:, best]

    # multiplicity check: no second eigenvalue (other than the conjugate)
    # may coincide with lambda_1
    for i, v in enumerate(vals):
        if i == best:
            continue
        if abs(v - lam) < 1e-8 * max(1.0, abs(lam)):
            raise SingularOperatorError(
                f"leading complex eigenvalue {lam:.6g} is not simple")

    # a real nontrivial eigenvalue must not dominate lambda_1 (scan near 0)
    scan_sigma = 0.1 * max(abs(lam), 1e-3)
    try:
        near0, _ = spectrum_near(backward, scan_sigma + 0.0j, k=min(6, k))
    except Exception:
        near0 = np.array([])
    triv_tol = 1e-6 * max(1.0, abs(lam))
    for v in near0:
        if abs(v.imag) < im_tol and abs(v) > triv_tol and v.real > lam.real + triv_tol:
            raise SingularOperatorError(
                f"leading nontrivial eigenvalue {v.real:.6g} is real; "
                "the spectral phase is undefined for this model/grid")

    if lam.imag < 0:
        lam = lam.conjugate()
        vec = vec.conjugate()

    resid = np.linalg.norm(backward.matrix @ vec - lam * vec) / np.linalg.norm(vec)
    if resid > residual_tol * max(1.0, float(abs(backward.matrix).sum(axis=1).max())):
        raise SingularOperatorError(f"eigenpair residual {resid:.3e} too large")

    # unit grid-L2 norm, zero phase at the anchor node (alpha=0, beta~0)
    vec = vec / np.sqrt(np.sum(grid.weights * np.abs(vec) ** 2))
    anchor = grid.flat_index(0, int(np.argmin(np.abs(grid.beta))))
    vec = vec * np.exp(-1j * np.angle(vec[anchor]))

    return complex(lam), ComplexField(grid=grid, values=vec, name="Q",
                                      meta={"residual": float(resid)})


def phase_amplitude(Q_field: ComplexField,
                    zero_eps: float = 1e-10) -> tuple[ScalarField, ScalarField]:
    """Polar decomposition of the eigenfunction: amplitude and unwrapped phase.

    The phase is unwrapped along alpha row by row with a cross-row
    consistency pass; its integer winding per revolution is stored in
    ``psi.meta["winding"]``.
    """
    grid = Q_field.grid
    Q = Q_field.as_2d()
    u = np.abs(Q)
    if np.min(u) < zero_eps * np.max(u):
        raise PhaselessRegionError(
            "eigenfunction amplitude vanishes on the grid (phaseless set intrudes)")

    raw = np.angle(Q)                       # (n_alpha, n_beta)
    psi = np.unwrap(raw, axis=0)
    closure = np.angle(np.exp(1j * (raw[0, :] - psi[-1, :])))
    winding_per_col = np.round((psi[-1, :] - psi[0, :] + closure) / (2 * np.pi)).astype(int)
    if np.any(winding_per_col != winding_per_col[0]):
        raise PhaselessRegionError(
            "phase winding differs between radial rows; field is corrupted")
    winding = int(winding_per_col[0])

    # cross-row pass: make psi(alpha=0, beta) continuous in beta
    first = np.unwrap(raw[0, :])
    psi = psi + (first - raw[0, :])[None, :]

    u_field = ScalarField(grid=grid, values=u.ravel(), name="u")
    psi_field = ScalarField(grid=grid, values=psi.ravel(), name="psi",
                            units="rad", meta={"winding": winding})
    return u_field, psi_field


def omega_field(u_field: ScalarField, psi_field: ScalarField,
                model: OscillatorModel, grid: AnnulusGrid,
                mask_eps: float = 1e-8) -> ScalarField:
    """Geometric angular-velocity field 2 sum_ij D_ij (d_i ln u)(d_j psi)."""
    winding = int(psi_field.meta.get("winding", 0))
    u = u_field.values
    mask = u < mask_eps * np.max(u)
    lnu = np.where(mask, np.nan, np.log(np.where(mask, 1.0, u)))
    lx, ly = gradient_xy(grid, lnu)
    px, py = gradient_xy(grid, psi_field.values, alpha_winding=winding)
    D = model.diffusion_tensor(grid.node_xy())
    om = 2.0 * (D[:, 0, 0] * lx * px + D[:, 0, 1] * (lx * py + ly * px)
                + D[:, 1, 1] * ly * py)
    return ScalarField(grid=grid, values=om, name="Omega", units="rad/time")


def delta_omega(Tbar: float, omega1: float) -> float:
    """Frequency mismatch 2 pi / Tbar - omega_1 between the two phase frames."""
    return 2.0 * np.pi / Tbar - omega1


@dataclass
class SpectralSolution:
    """Leading eigenpair and the derived phase/amplitude/geometry fields."""

    lambda1: complex
    Q_field: ComplexField
    u_field: ScalarField
    psi_field: ScalarField          # smooth unwrapped representative
    omega_field: ScalarField
    lpsi_field: ScalarField         # generator applied to psi
    winding: int
    delta_omega: Optional[float] = None
    Tbar: Optional[float] = None

    @property
    def mu1(self) -> float:
        return self.lambda1.real

    @property
    def omega1(self) -> float:
        return self.lambda1.imag


def solve_spectral(model: OscillatorModel, grid: AnnulusGrid,
                   backward: SparseOperator,
                   Tbar: Optional[float] = None,
                   omega_guess: Optional[float] = None,
                   k: int = 8) -> SpectralSolution:
    """End-to-end spectral phase computation on an assembled operator."""
    if omega_guess is None and Tbar is not None:
        omega_guess = 2.0 * np.pi / Tbar
    lam, Q = leading_eigenpair(backward, omega_guess=omega_guess, k=k)
    u, psi = phase_amplitude(Q)
    winding = int(psi.meta["winding"])
    om = omega_field(u, psi, model, grid)
    lpsi = ScalarField(grid=grid,
                       values=apply_backward_winding(backward, psi.values, winding),
                       name="Lpsi", units="rad/time")
    dw = delta_omega(Tbar, lam.imag) if Tbar is not None else None
    return SpectralSolution(lambda1=lam, Q_field=Q, u_field=u, psi_field=psi,
                            omega_field=om, lpsi_field=lpsi, winding=winding,
                            delta_omega=dw, Tbar=Tbar)


@dataclass
class PhaseDecomposition:
    """Per-trajectory total/dynamical/geometric angular velocities."""

    total_rates: np.ndarray
    dynamical_rates: np.ndarray
    geometric_rates: np.ndarray
    omega1: float
    masked_fraction: float

    @property
    def mean_total(self) -> float:
        return float(np.mean(self.total_rates))

    @property
    def mean_dynamical(self) -> float:
        return float(np.mean(self.dynamical_rates))

    @property
    def mean_geometric(self) -> float:
        return float(np.mean(self.geometric_rates))

    @property
    def identity_gap(self) -> float:
        """mean(dynamical) + mean(geometric) - omega_1."""
        return self.mean_dynamical + self.mean_geometric - self.omega1


def phase_decomposition(ensemble, sol: SpectralSolution,
                        max_masked: float = 0.10) -> PhaseDecomposition:
    """Evaluate the angular-velocity decomposition along sample paths.

    Total rate is the unwrapped psi winding per unit time; dynamical and
    geometric rates are path averages of the interpolated generator-of-psi
    and Omega fields. States outside the annulus are masked.
    """
    grid = sol.psi_field.grid
    states = ensemble.states                       # (n_samples, n_times, 2)
    n_samples, n_times, _ = states.shape
    dt_store = float(ensemble.times[1] - ensemble.times[0])

    flat = states.reshape(-1, 2)
    inside = grid.contains(flat)
    masked_fraction = 1.0 - float(np.mean(inside))
    if masked_fraction > max_masked:
        raise PhaselessRegionError(
            f"{100 * masked_fraction:.1f}% of samples left the annulus "
            f"(limit {100 * max_masked:.0f}%)")

    lpsi = np.full(flat.shape[0], np.nan)
    om = np.full(flat.shape[0], np.nan)
    psi_wrap = np.full(flat.shape[0], np.nan)
    lpsi[inside] = sol.lpsi_field.at(flat[inside])
    om[inside] = sol.omega_field.at(flat[inside])
    psi_wrap[inside] = grid.interpolate_cyclic(sol.psi_field.values, flat[inside])

    lpsi = lpsi.reshape(n_samples, n_times)
    om = om.reshape(n_samples, n_times)
    psi_wrap = psi_wrap.reshape(n_samples, n_times)

    dyn = np.nanmean(lpsi, axis=1)
    geo = np.nanmean(om, axis=1)

    dpsi = np.angle(np.exp(1j * np.diff(psi_wrap, axis=1)))
    valid = np.isfinite(dpsi)
    total = np.nansum(np.where(valid, dpsi, 0.0), axis=1) / (
        np.maximum(valid.sum(axis=1), 1) * dt_store)

    return PhaseDecomposition(total_rates=total, dynamical_rates=dyn,
                              geometric_rates=geo, omega1=sol.omega1,
                              masked_fraction=masked_fraction)
