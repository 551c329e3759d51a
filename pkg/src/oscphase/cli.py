"""Command-line entry point: wires JSON configs to the solver modules and
writes every artifact (CSV fields, quivers, trajectories, manifests) into
an output directory.

Config file sections: "model", "grid", "sim", "solver"; command-line
flags override the corresponding config entries. Exit codes: 0 success,
1 domain/numerical errors, 2 usage errors.
"""
from __future__ import annotations

import argparse
import copy
import datetime
import json
import os
import sys

import numpy as np

from . import fieldio
from .deterministic import adjoint_prc, find_limit_cycle
from .doob import conditioned_phase_velocity, doob_transformed_model, mean_phase_velocity
from .empirical import (autocorrelation, binned_current, empirical_mean_period,
                        fit_complex_decay, kde_density)
from .errors import OscphaseError, ParameterDomainError
from .grid import ComplexField
from .models import make_deterministic_stuart_landau, model_from_config
from .mrt import isochron_extract
from .pipeline import solve_phase
from .simulate import SimConfig, UniformAnnulus, euler_maruyama
from .verify import VerifySettings, run_identity_suite

__all__ = ["main", "DEFAULT_CONFIG", "load_config"]

DEFAULT_CONFIG = {
    "model": {"model": "stuart_landau",
              "params": {"a": 1.0, "b": 1.0, "sigma": 0.3}},
    "grid": {"n_alpha": 128, "n_beta": 64, "r_in": 0.2, "r_out": 2.5,
             "center": [0.0, 0.0]},
    "sim": {"dt": 0.01, "n_steps": 2000, "n_samples": 100, "seed": 0,
            "initial": [1.0, 0.0], "store_stride": 1},
    "solver": {"negative_tol": 1e-10, "k": 8, "isochron_levels": 8,
               "bins": 40, "burn_in": 0.2},
}


def load_config(path=None) -> dict:
    """Merge a JSON config file over the built-in defaults (per section)."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        with open(path) as fh:
            user = json.load(fh)
        for section, content in user.items():
            if section not in cfg:
                raise ParameterDomainError(f"unknown config section {section!r}")
            if section == "model":
                cfg["model"] = content
            else:
                cfg[section].update(content)
    return cfg


def _apply_flag_overrides(cfg: dict, args) -> dict:
    if args.seed is not None:
        cfg["sim"]["seed"] = args.seed
    for flag, key in (("grid_na", "n_alpha"), ("grid_nb", "n_beta"),
                      ("rin", "r_in"), ("rout", "r_out")):
        v = getattr(args, flag)
        if v is not None:
            cfg["grid"][key] = v
    return cfg


def _sim_config(cfg: dict) -> SimConfig:
    s = cfg["sim"]
    init = s.get("initial", [1.0, 0.0])
    if isinstance(init, dict):
        init = UniformAnnulus(r_lo=float(init["r_lo"]), r_hi=float(init["r_hi"]),
                              center=tuple(init.get("center", (0.0, 0.0))))
    else:
        init = tuple(float(v) for v in init)
    return SimConfig(dt=float(s["dt"]), n_steps=int(s["n_steps"]),
                     n_samples=int(s["n_samples"]), seed=int(s["seed"]),
                     initial=init, store_stride=int(s.get("store_stride", 1)))


def _base_manifest(command: str, cfg: dict) -> dict:
    return {"command": command, "config": cfg,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat()}


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _limit_threads(n) -> None:
    if n is None:
        return
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=int(n))
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS"):
            os.environ[var] = str(int(n))


# -- subcommand implementations ---------------------------------------------

def cmd_simulate(cfg, out) -> dict:
    model = model_from_config(cfg["model"])
    ens = euler_maruyama(model, _sim_config(cfg))
    fieldio.write_trajectory_csv(os.path.join(out, "trajectories.csv"), ens)
    return {"n_samples": ens.n_samples, "n_stored": ens.states.shape[1],
            "dt": ens.dt_sim}


def cmd_empirical(cfg, out) -> dict:
    model = model_from_config(cfg["model"])
    grid = fieldio.grid_from_config(cfg["grid"])
    ens = euler_maruyama(model, _sim_config(cfg))
    solver = cfg["solver"]

    dens = kde_density(ens, grid)
    fieldio.write_field_csv(os.path.join(out, "density.csv"), dens)
    cur = binned_current(ens, bins=int(solver["bins"]),
                         burn_in=float(solver["burn_in"]))
    fieldio.write_quiver_csv(os.path.join(out, "current_quiver.csv"), cur)

    # autocorrelation of the polar-angle observable exp(i alpha)
    q = ComplexField(grid=grid, values=np.exp(1j * grid.node_ab()[0]))
    ac = autocorrelation(ens, q, burn_in=float(solver["burn_in"]))
    cols = np.column_stack([ac.taus, ac.C.real, ac.C.imag])
    np.savetxt(os.path.join(out, "autocorr.csv"), cols, delimiter=",",
               header="tau,C_re,C_im", comments="", fmt="%.17g")
    mu, omega = fit_complex_decay(ac)
    period = empirical_mean_period(ens, center=grid.center)
    return {"autocorr_fit": {"mu": mu, "omega": omega},
            "Tbar_empirical": period.Tbar, "Tbar_stderr": period.stderr}


def _grid_quiver(out, name, sol) -> None:
    # node current in Cartesian components, quiver schema with count = 1
    grid = sol.grid
    xy = grid.node_xy()
    cols = np.column_stack([xy[:, 0], xy[:, 1], sol.current.jx,
                            sol.current.jy, np.ones(grid.n_nodes, dtype=int)])
    np.savetxt(os.path.join(out, name), cols, delimiter=",",
               header="x,y,jx,jy,count", comments="",
               fmt=["%.17g"] * 4 + ["%d"])


def cmd_stationary(cfg, out) -> dict:
    model = model_from_config(cfg["model"])
    grid = fieldio.grid_from_config(cfg["grid"])
    sol = solve_phase(model, grid,
                      negative_tol=float(cfg["solver"]["negative_tol"]))
    fieldio.write_field_csv(os.path.join(out, "P0.csv"), sol.P0)
    fieldio.write_field_csv(os.path.join(out, "j_alpha.csv"), sol.current.j_alpha)
    fieldio.write_field_csv(os.path.join(out, "j_beta.csv"), sol.current.j_beta)
    _grid_quiver(out, "current_quiver.csv", sol)
    return {"Tbar": sol.Tbar, "flux_spread": sol.period.spread}


def _isochron_levels(n: int) -> np.ndarray:
    return np.arange(n) * (2.0 * np.pi / n)


def cmd_mrt(cfg, out) -> dict:
    model = model_from_config(cfg["model"])
    grid = fieldio.grid_from_config(cfg["grid"])
    sol = solve_phase(model, grid,
                      negative_tol=float(cfg["solver"]["negative_tol"]))
    fieldio.write_field_csv(os.path.join(out, "T_field.csv"), sol.mrt.T_field)
    fieldio.write_field_csv(os.path.join(out, "Theta_field.csv"),
                            sol.mrt.Theta_field)
    levels = _isochron_levels(int(cfg["solver"]["isochron_levels"]))
    polys = [isochron_extract(sol.mrt.Theta_field, lv) for lv in levels]
    fieldio.write_isochron_csv(os.path.join(out, "isochrons_theta.csv"),
                               levels, polys)
    return {"Tbar": sol.Tbar, "T0": sol.mrt.T0,
            "compat_residual": sol.mrt.compat_residual}


def cmd_spectral(cfg, out) -> dict:
    model = model_from_config(cfg["model"])
    grid = fieldio.grid_from_config(cfg["grid"])
    sol = solve_phase(model, grid,
                      negative_tol=float(cfg["solver"]["negative_tol"]),
                      k=int(cfg["solver"]["k"]))
    spec = sol.spectral
    fieldio.write_field_csv(os.path.join(out, "Q_field.csv"), spec.Q_field)
    fieldio.write_field_csv(os.path.join(out, "u_field.csv"), spec.u_field)
    psi_wrapped = spec.psi_field.__class__(
        grid=grid, values=np.mod(spec.psi_field.values, 2.0 * np.pi),
        name="psi", units="rad")
    fieldio.write_field_csv(os.path.join(out, "psi_field.csv"), psi_wrapped)
    fieldio.write_field_csv(os.path.join(out, "Omega_field.csv"),
                            spec.omega_field)
    levels = _isochron_levels(int(cfg["solver"]["isochron_levels"]))
    polys = [isochron_extract(psi_wrapped, lv) for lv in levels]
    fieldio.write_isochron_csv(os.path.join(out, "isochrons_psi.csv"),
                               levels, polys)
    return {"lambda1_re": spec.mu1, "lambda1_im": spec.omega1,
            "lambda1_arg": float(np.angle(spec.lambda1)),
            "Tbar": sol.Tbar, "delta_omega": spec.delta_omega,
            "winding": spec.winding}


def cmd_doob(cfg, out) -> dict:
    model = model_from_config(cfg["model"])
    grid = fieldio.grid_from_config(cfg["grid"])
    sol = solve_phase(model, grid,
                      negative_tol=float(cfg["solver"]["negative_tol"]))
    transformed = doob_transformed_model(model, sol.spectral.u_field, grid)
    fieldio.write_field_csv(os.path.join(out, "doob_correction_x.csv"),
                            transformed.correction_x)
    fieldio.write_field_csv(os.path.join(out, "doob_correction_y.csv"),
                            transformed.correction_y)
    sim = _sim_config(cfg)
    v_cond, se_cond = conditioned_phase_velocity(transformed, sol.spectral, sim)
    v_unc, se_unc = mean_phase_velocity(model, sol.spectral, sim)
    return {"doob": {"h": "u", "f": "conservative"},
            "omega1": sol.spectral.omega1,
            "conditioned_velocity": {"mean": v_cond, "stderr": se_cond},
            "unconditioned_velocity": {"mean": v_unc, "stderr": se_unc}}


def cmd_prc(cfg, out) -> dict:
    mcfg = cfg["model"]
    if mcfg.get("model") != "stuart_landau":
        raise ParameterDomainError(
            "prc needs a model with a deterministic limit cycle "
            "(stuart_landau)")
    p = mcfg["params"]
    model = make_deterministic_stuart_landau(float(p["a"]), float(p["b"]))
    cycle = find_limit_cycle(model, guess=(np.sqrt(float(p["a"])), 0.0))
    adjoint = adjoint_prc(cycle, model)
    fieldio.write_cycle_csv(os.path.join(out, "cycle_prc.csv"), cycle, adjoint)
    return {"period": cycle.period, "cycle_residual": cycle.residual,
            "prc_normalization_residual": adjoint.normalization_residual}


def cmd_verify(cfg, out) -> tuple[dict, bool]:
    model = model_from_config(cfg["model"])
    grid = fieldio.grid_from_config(cfg["grid"])
    settings = VerifySettings(seed=int(cfg["sim"]["seed"]),
                              negative_tol=float(cfg["solver"]["negative_tol"]))
    report = run_identity_suite(model, grid, settings)
    with open(os.path.join(out, "report.json"), "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(report.summary())
    return {"checks": [c.to_dict() for c in report.checks]}, report.all_pass


def cmd_report(cfg, out) -> dict:
    """Bundle every plotting input into one run directory."""
    info = {}
    info.update(cmd_stationary(cfg, out))
    info.update(cmd_mrt(cfg, out))
    info.update(cmd_spectral(cfg, out))
    info.update(cmd_empirical(cfg, out))
    return info


COMMANDS = {
    "simulate": cmd_simulate,
    "empirical": cmd_empirical,
    "stationary": cmd_stationary,
    "mrt": cmd_mrt,
    "spectral": cmd_spectral,
    "doob": cmd_doob,
    "prc": cmd_prc,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscphase",
        description="Phase definitions for planar stochastic oscillators: "
                    "grid solvers, Monte Carlo estimators, cross-validation.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help="output directory (default: cwd)")
    parser.add_argument("--seed", type=int, help="override sim.seed")
    parser.add_argument("--grid-na", type=int, help="override grid.n_alpha")
    parser.add_argument("--grid-nb", type=int, help="override grid.n_beta")
    parser.add_argument("--rin", type=float, help="override grid.r_in")
    parser.add_argument("--rout", type=float, help="override grid.r_out")
    parser.add_argument("--threads", type=int,
                        help="cap BLAS/OpenMP worker threads")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _limit_threads(args.threads)
    try:
        cfg = load_config(args.config)
        cfg = _apply_flag_overrides(cfg, args)
        out = _out_dir(args)
        result = COMMANDS[args.command](cfg, out)
        ok = True
        if isinstance(result, tuple):
            result, ok = result
        manifest = _base_manifest(args.command, cfg)
        manifest.update(result)
        fieldio.write_manifest(os.path.join(out, "manifest.json"), manifest)
        return 0 if ok else 1
    except (OscphaseError, OSError, KeyError, ValueError) as exc:
        print(f"oscphase {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
