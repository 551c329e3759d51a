"""Cross-validation harness: grid identities vs Monte Carlo estimates.

Six checks: three interior sup-norm identities of the phase fields
(tolerance: 10x the measured truncation estimate), and three Monte Carlo
consistency checks reported as z-scores (tolerance: 3 standard errors) --
the autocorrelation eigenvalue fit, the Doob-conditioned mean phase
velocity, and the homogeneity of mean return times along one isochron.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .doob import conditioned_phase_velocity, doob_transformed_model
from .empirical import autocorrelation, fit_complex_decay
from .fieldio import grid_to_config
from .grid import AnnulusGrid, ScalarField
from .models import OscillatorModel, model_to_config
from .operators import apply_backward_winding, interior_mask
from .pipeline import PhaseSolution, solve_phase
from .simulate import (PhaseSection, SimConfig, TrajectoryEnsemble,
                       UniformAnnulus, euler_maruyama, first_return_times)
from .spectral import omega_field

__all__ = ["CheckResult", "VerificationReport", "VerifySettings",
           "run_identity_suite", "isochron_starts"]

TWO_PI = 2.0 * np.pi


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value,
                "tolerance": self.tolerance, "pass": self.passed}


@dataclass
class VerificationReport:
    checks: list
    manifest: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"checks": [c.to_dict() for c in self.checks],
                "manifest": self.manifest}

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            tag = "PASS" if c.passed else "FAIL"
            lines.append(f"[{tag}] {c.name}: value={c.value:.6g} "
                         f"tolerance={c.tolerance:.6g}")
        return "\n".join(lines)


@dataclass(frozen=True)
class VerifySettings:
    """Monte Carlo budgets for the statistical checks (all seeded)."""

    seed: int = 0
    dt: float = 0.01
    n_steps: int = 4000
    n_samples: int = 400
    n_groups: int = 8
    doob_steps: int = 2000
    doob_samples: int = 200
    n_returns: int = 2000
    n_isochron_points: int = 5
    return_periods: float = 60.0    # timeout horizon in units of Tbar
    negative_tol: float = 1e-10


def _subensemble(ens: TrajectoryEnsemble, sel) -> TrajectoryEnsemble:
    return TrajectoryEnsemble(times=ens.times, states=ens.states[sel],
                              seed=ens.seed, stream_ids=ens.stream_ids[sel],
                              dt_sim=ens.dt_sim)


def _peak_radius(P0: ScalarField) -> float:
    """Radius maximizing the radial marginal density r * <P0>_alpha."""
    grid = P0.grid
    prof = P0.as_2d().mean(axis=0) * grid.r
    return float(grid.r[int(np.argmax(prof))])


def isochron_starts(mrt, grid: AnnulusGrid, level: float,
                    n_points: int, r_peak: float) -> np.ndarray:
    """Points on the Theta = level isochron, spread over radii near r_peak.

    Inverts the unwrapped phase along each of n_points node rows.
    """
    r_lo = max(0.6 * r_peak, grid.r[2])
    r_hi = min(1.5 * r_peak, grid.r[-3])
    radii = np.linspace(r_lo, r_hi, n_points)
    ibs = sorted({int(np.argmin(np.abs(grid.r - r))) for r in radii})
    th2d = mrt.theta_smooth.as_2d()
    pts = []
    for ib in ibs:
        row = th2d[:, ib]
        x = np.concatenate([grid.alpha, [TWO_PI]])
        y = np.concatenate([row, [row[0] + TWO_PI]])
        if np.any(np.diff(y) <= 0):
            # non-monotone row: nearest-node fallback
            a_star = grid.alpha[int(np.argmin(np.abs(
                np.angle(np.exp(1j * (row - level))))))]
        else:
            target = row[0] + np.mod(level - row[0], TWO_PI)
            a_star = float(np.interp(target, y, x)) % TWO_PI
        pts.append(grid.to_xy(a_star, grid.beta[ib]))
    return np.asarray(pts)


def run_identity_suite(model: OscillatorModel, grid: AnnulusGrid,
                       settings: VerifySettings = VerifySettings(),
                       u_perturbation: float = 0.0,
                       sol: PhaseSolution | None = None) -> VerificationReport:
    """Run all six cross-validation checks for one model + grid.

    ``u_perturbation`` adds a constant to the eigenfunction amplitude
    before the geometric-term identity, a negative control demonstrating
    that check (ii) is sensitive to a corrupted amplitude.
    """
    if sol is None:
        sol = solve_phase(model, grid, negative_tol=settings.negative_tol)
    spec = sol.spectral
    Tbar = sol.Tbar
    mask = interior_mask(grid)
    tol_grid = 10.0 * sol.truncation
    checks = []

    # (i) generator applied to the MRT phase is the constant rate 2 pi / Tbar
    ltheta = apply_backward_winding(sol.backward, sol.mrt.theta_smooth.values, 1)
    r1 = np.abs(ltheta - TWO_PI / Tbar)
    checks.append(_check("grid_theta_rate", float(np.max(r1[mask])), tol_grid))

    # (ii) generator on psi plus the geometric term gives omega_1
    if u_perturbation != 0.0:
        u_used = ScalarField(grid=grid,
                             values=spec.u_field.values + u_perturbation,
                             name="u_corrupted")
        om_used = omega_field(u_used, spec.psi_field, model, grid)
    else:
        om_used = spec.omega_field
    r2 = np.abs(spec.lpsi_field.values + om_used.values - spec.omega1)
    checks.append(_check("grid_psi_omega", float(np.nanmax(r2[mask])), tol_grid))

    # (iii) the combined identity relating both phases
    r3 = np.abs(ltheta - (spec.lpsi_field.values + om_used.values
                          + spec.delta_omega))
    checks.append(_check("grid_combined", float(np.nanmax(r3[mask])), tol_grid))

    # shared ensemble for the statistical checks, started near the density peak
    r_peak = _peak_radius(sol.P0)
    initial = UniformAnnulus(max(grid.r_in, 0.7 * r_peak),
                             min(grid.r_out, 1.3 * r_peak), grid.center)
    cfg = SimConfig(dt=settings.dt, n_steps=settings.n_steps,
                    n_samples=settings.n_samples, seed=settings.seed,
                    initial=initial)
    ens = euler_maruyama(model, cfg)

    # (iv) autocorrelation of Q decays/rotates at (mu_1, omega_1)
    usable = ens.states.shape[1] - int(0.2 * (ens.states.shape[1] - 1))
    max_lag = min(usable // 2,
                  max(50, int(2.5 / (abs(spec.mu1) * ens.dt_store))))
    per_group = settings.n_samples // settings.n_groups
    fits = []
    for g in range(settings.n_groups):
        sub = _subensemble(ens, slice(g * per_group, (g + 1) * per_group))
        fits.append(fit_complex_decay(
            autocorrelation(sub, spec.Q_field, max_lag=max_lag)))
    fits = np.asarray(fits)                      # (n_groups, 2): mu, omega
    fmean = fits.mean(axis=0)
    fse = fits.std(axis=0, ddof=1) / np.sqrt(settings.n_groups)
    z_mu = abs(fmean[0] - spec.mu1) / fse[0]
    z_om = abs(fmean[1] - spec.omega1) / fse[1]
    checks.append(_check("autocorr_eigenvalue", float(max(z_mu, z_om)), 3.0))

    # (v) Doob-conditioned ensemble rotates at omega_1
    transformed = doob_transformed_model(model, spec.u_field, grid)
    cfg_doob = SimConfig(dt=settings.dt, n_steps=settings.doob_steps,
                         n_samples=settings.doob_samples,
                         seed=settings.seed + 1, initial=initial)
    v_cond, se_cond = conditioned_phase_velocity(transformed, spec, cfg_doob)
    checks.append(_check("doob_conditioned_velocity",
                         float(abs(v_cond - spec.omega1) / se_cond), 3.0))

    # (vi) mean return times are homogeneous along a Theta isochron
    starts = isochron_starts(sol.mrt, grid, level=0.5 * np.pi,
                             n_points=settings.n_isochron_points,
                             r_peak=r_peak)
    horizon = int(settings.return_periods * Tbar / settings.dt)
    cfg_ret = SimConfig(dt=settings.dt, n_steps=horizon,
                        n_samples=settings.n_returns, seed=settings.seed + 2)
    section = PhaseSection(sol.mrt.Theta_field, 0.5 * np.pi)
    rt = first_return_times(model, cfg_ret, section, starts, center=grid.center)
    z = _max_pairwise_z(rt.means, rt.stderrs)
    checks.append(_check("mrt_homogeneity", float(z), 3.0))

    # meta-invariant: (iii) is the algebraic combination of (i) and (ii)
    if checks[0].passed and checks[1].passed:
        assert checks[2].passed, "combined identity failed while parts passed"

    manifest = {
        "model": model_to_config(model),
        "grid": grid_to_config(grid),
        "seed": settings.seed,
        "lambda1_re": spec.mu1,
        "lambda1_im": spec.omega1,
        "Tbar": Tbar,
        "delta_omega": spec.delta_omega,
        "truncation_estimate": sol.truncation,
        "return_time_means": [float(v) for v in rt.means],
        "return_time_stderrs": [float(v) for v in rt.stderrs],
        "autocorr_fit": {"mu": float(fmean[0]), "omega": float(fmean[1]),
                         "mu_stderr": float(fse[0]),
                         "omega_stderr": float(fse[1])},
        "doob_velocity": {"mean": float(v_cond), "stderr": float(se_cond)},
    }
    return VerificationReport(checks=checks, manifest=manifest)


def _check(name: str, value: float, tolerance: float) -> CheckResult:
    return CheckResult(name=name, value=value, tolerance=tolerance,
                       passed=bool(value <= tolerance))


def _max_pairwise_z(means: np.ndarray, stderrs: np.ndarray) -> float:
    z = 0.0
    for i in range(len(means)):
        for j in range(i + 1, len(means)):
            denom = np.hypot(stderrs[i], stderrs[j])
            z = max(z, abs(means[i] - means[j]) / denom)
    return z
