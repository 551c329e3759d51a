"""Figure builders: density + current, phase maps, geometric-term heatmap.

Every builder is read-only over the run directory, writes PNGs named
<subcommand>_<field>.png (the subcommand comes from the manifest), and
uses a fixed figure size and DPI so re-running overwrites the images
byte for byte.
"""
from __future__ import annotations

import os
import warnings

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import Normalize  # noqa: E402

from .runio import (FIELD_SCHEMA, QUIVER_SCHEMA, read_field, read_isochrons,
                    read_manifest, read_quiver, require_file)

__all__ = ["plot_density_current", "plot_phase_maps", "phase_norm"]

TWO_PI = 2.0 * np.pi
DPI = 150


def phase_norm() -> Normalize:
    """Shared colormap normalization for phase panels: [0, 2 pi)."""
    return Normalize(vmin=0.0, vmax=TWO_PI)


def _command(run_dir) -> str:
    try:
        return str(read_manifest(run_dir).get("command", "run"))
    except FileNotFoundError:
        return "run"


def _save(fig, out_dir, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_density_current(run_dir, out_dir=None) -> str:
    """Density contours with the stationary current as white quivers.

    Needs density.csv and current_quiver.csv in ``run_dir``. An empty
    quiver file degrades to a contour-only figure with a warning.
    Returns the path of the written PNG.
    """
    out_dir = run_dir if out_dir is None else out_dir
    dens = read_field(require_file(run_dir, "density.csv", FIELD_SCHEMA))
    quiv = read_quiver(require_file(run_dir, "current_quiver.csv",
                                    QUIVER_SCHEMA))

    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    x, y, v = dens.closed()
    cf = ax.contourf(x, y, v.real, levels=24, cmap="viridis")
    fig.colorbar(cf, ax=ax, label="density")

    if quiv["x"].size == 0:
        warnings.warn("current_quiver.csv has no rows; drawing the "
                      "density contour without quivers")
    else:
        ax.quiver(quiv["x"], quiv["y"], quiv["jx"], quiv["jy"],
                  color="white", width=0.003)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("stationary density and probability current")
    fig.tight_layout()
    return _save(fig, out_dir, f"{_command(run_dir)}_density_current.png")


def _phase_panel(ax, field, isochrons, norm, title: str):
    x, y, v = field.closed()
    pm = ax.pcolormesh(x, y, np.mod(v.real, TWO_PI), cmap="twilight",
                       norm=norm, shading="gouraud")
    for _, poly in isochrons:
        if len(poly) > 1:
            ax.plot(poly[:, 0], poly[:, 1], color="black", lw=0.7)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    return pm


def plot_phase_maps(run_dir, out_dir=None) -> list:
    """Side-by-side Theta/psi phase maps plus the Omega heatmap.

    Needs Theta_field.csv, psi_field.csv and Omega_field.csv; isochron
    CSVs are overlaid when present. Both phase panels share the cyclic
    [0, 2 pi) colormap normalization. Returns the written PNG paths.
    """
    out_dir = run_dir if out_dir is None else out_dir
    theta = read_field(require_file(run_dir, "Theta_field.csv", FIELD_SCHEMA))
    psi = read_field(require_file(run_dir, "psi_field.csv", FIELD_SCHEMA))
    omega = read_field(require_file(run_dir, "Omega_field.csv", FIELD_SCHEMA))

    def optional_isochrons(name):
        path = os.path.join(run_dir, name)
        return read_isochrons(path) if os.path.isfile(path) else []

    cmd = _command(run_dir)
    norm = phase_norm()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.5))
    _phase_panel(ax1, theta, optional_isochrons("isochrons_theta.csv"),
                 norm, "mean-return-time phase")
    pm = _phase_panel(ax2, psi, optional_isochrons("isochrons_psi.csv"),
                      norm, "asymptotic (spectral) phase")
    cbar = fig.colorbar(pm, ax=(ax1, ax2), label="phase [rad]",
                        ticks=[0, np.pi, TWO_PI])
    cbar.ax.set_yticklabels(["0", "pi", "2pi"])
    paths = [_save(fig, out_dir, f"{cmd}_theta_psi.png")]

    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    x, y, v = omega.closed()
    vmax = float(np.nanmax(np.abs(v.real)))
    pm = ax.pcolormesh(x, y, v.real, cmap="RdBu_r", shading="gouraud",
                       vmin=-vmax, vmax=vmax)
    fig.colorbar(pm, ax=ax, label="Omega [rad/time]")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title("geometric angular-velocity field")
    fig.tight_layout()
    paths.append(_save(fig, out_dir, f"{cmd}_omega.png"))
    return paths
