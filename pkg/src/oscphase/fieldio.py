"""CSV/JSON artifact schemas shared by the CLI and downstream plotting.

Field CSV (column order is part of the contract):
    i_alpha, i_beta, alpha, beta, x, y, value_re, value_im
Quiver CSV:      x, y, jx, jy, count
Trajectory CSV:  traj_id, t, x, y
Isochron CSV:    level, vertex_index, x, y
Cycle/PRC CSV:   t, ux, uy, zx, zy
Operator CSV:    row, col, value (coordinate format, debugging aid)
"""
from __future__ import annotations

import csv
import json
from typing import Optional, Union

import numpy as np

from .errors import GridError, ParameterDomainError
from .grid import AnnulusGrid, ComplexField, ScalarField, build_grid

__all__ = [
    "write_field_csv",
    "read_field_csv",
    "write_quiver_csv",
    "read_quiver_csv",
    "write_trajectory_csv",
    "write_isochron_csv",
    "write_cycle_csv",
    "write_operator_csv",
    "grid_to_config",
    "grid_from_config",
    "write_manifest",
    "read_manifest",
]

FIELD_COLUMNS = ["i_alpha", "i_beta", "alpha", "beta", "x", "y",
                 "value_re", "value_im"]

_FMT = "%.17g"


def write_field_csv(path, field: Union[ScalarField, ComplexField]) -> None:
    """Write a grid field in the shared schema (value_im = 0 for real fields)."""
    grid = field.grid
    ia, ib = np.divmod(np.arange(grid.n_nodes), grid.n_beta)
    alpha, beta = grid.node_ab()
    xy = grid.node_xy()
    v = np.asarray(field.values)
    cols = np.column_stack([
        ia, ib, alpha, beta, xy[:, 0], xy[:, 1], v.real,
        v.imag if np.iscomplexobj(v) else np.zeros_like(v.real)])
    header = ",".join(FIELD_COLUMNS)
    np.savetxt(path, cols, delimiter=",", header=header, comments="",
               fmt=["%d", "%d"] + [_FMT] * 6)


def read_field_csv(path, grid: Optional[AnnulusGrid] = None,
                   center: tuple = (0.0, 0.0)):
    """Read a field CSV back into a ScalarField or ComplexField.

    If no grid is given, one is reconstructed from the node coordinates.
    """
    data = np.genfromtxt(path, delimiter=",", names=True)
    if data.dtype.names is None or list(data.dtype.names) != FIELD_COLUMNS:
        raise ParameterDomainError(
            f"{path}: expected field CSV columns {FIELD_COLUMNS}, "
            f"got {data.dtype.names}")
    ia = data["i_alpha"].astype(int)
    ib = data["i_beta"].astype(int)
    n_alpha = int(ia.max()) + 1
    n_beta = int(ib.max()) + 1
    if data.shape[0] != n_alpha * n_beta:
        raise GridError(f"{path}: {data.shape[0]} rows do not fill a "
                        f"{n_alpha} x {n_beta} grid")
    if grid is None:
        r = np.hypot(data["x"] - center[0], data["y"] - center[1])
        grid = build_grid(r_in=float(r.min()), r_out=float(r.max()),
                          n_alpha=n_alpha, n_beta=n_beta, center=center)
    elif grid.shape != (n_alpha, n_beta):
        raise GridError(f"{path}: file grid {(n_alpha, n_beta)} does not "
                        f"match target grid {grid.shape}")
    flat = ia * n_beta + ib
    order = np.argsort(flat)
    re = data["value_re"][order]
    im = data["value_im"][order]
    if np.any(im != 0.0):
        return ComplexField(grid=grid, values=re + 1j * im)
    return ScalarField(grid=grid, values=re)


def write_quiver_csv(path, current) -> None:
    """Write a binned CurrentEstimate as a quiver CSV (masked bins skipped)."""
    X, Y = np.meshgrid(current.x_centers, current.y_centers, indexing="ij")
    m = current.mask
    cols = np.column_stack([X[m], Y[m], current.jx[m], current.jy[m],
                            current.counts[m]])
    np.savetxt(path, cols, delimiter=",", header="x,y,jx,jy,count",
               comments="", fmt=[_FMT] * 4 + ["%d"])


def read_quiver_csv(path) -> dict:
    """Read a quiver CSV into a dict of 1-D column arrays."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = list(data.dtype.names or ())
    if names != ["x", "y", "jx", "jy", "count"]:
        raise ParameterDomainError(
            f"{path}: expected quiver columns x,y,jx,jy,count, got {names}")
    return {k: np.atleast_1d(data[k]) for k in names}


def write_trajectory_csv(path, ensemble) -> None:
    """Write a TrajectoryEnsemble in long form: traj_id, t, x, y."""
    n, nt, _ = ensemble.states.shape
    ids = np.repeat(np.arange(n), nt)
    ts = np.tile(ensemble.times, n)
    xy = ensemble.states.reshape(-1, 2)
    cols = np.column_stack([ids, ts, xy[:, 0], xy[:, 1]])
    np.savetxt(path, cols, delimiter=",", header="traj_id,t,x,y",
               comments="", fmt=["%d"] + [_FMT] * 3)


def write_isochron_csv(path, levels, polylines_by_level) -> None:
    """Write isochron polylines: level, vertex_index, x, y.

    ``polylines_by_level`` pairs with ``levels``; each entry is a list of
    (n, 2) vertex arrays. Vertex indices restart at 0 for each polyline.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "vertex_index", "x", "y"])
        for level, polys in zip(levels, polylines_by_level):
            for poly in polys:
                for k, (x, y) in enumerate(np.asarray(poly)):
                    w.writerow([_FMT % level, k, _FMT % x, _FMT % y])


def write_cycle_csv(path, cycle, adjoint=None) -> None:
    """Write the limit cycle and (optionally) the adjoint PRC: t,ux,uy,zx,zy."""
    Z = adjoint.Z if adjoint is not None else np.zeros_like(cycle.states)
    cols = np.column_stack([cycle.times, cycle.states, Z])
    np.savetxt(path, cols, delimiter=",", header="t,ux,uy,zx,zy",
               comments="", fmt=_FMT)


def write_operator_csv(path, operator) -> None:
    """Dump a sparse operator in coordinate form: row, col, value."""
    coo = operator.matrix.tocoo()
    cols = np.column_stack([coo.row, coo.col, coo.data])
    np.savetxt(path, cols, delimiter=",", header="row,col,value",
               comments="", fmt=["%d", "%d", _FMT])


def grid_to_config(grid: AnnulusGrid) -> dict:
    return {"n_alpha": grid.n_alpha, "n_beta": grid.n_beta,
            "r_in": grid.r_in, "r_out": grid.r_out,
            "center": [grid.center[0], grid.center[1]]}


def grid_from_config(cfg: dict) -> AnnulusGrid:
    return build_grid(r_in=float(cfg["r_in"]), r_out=float(cfg["r_out"]),
                      n_alpha=int(cfg["n_alpha"]), n_beta=int(cfg["n_beta"]),
                      center=tuple(cfg.get("center", (0.0, 0.0))))


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
