"""Readers for the CSV/JSON artifacts a run directory contains.

Schemas (column order is part of the contract):
    field CSV:    i_alpha, i_beta, alpha, beta, x, y, value_re, value_im
    quiver CSV:   x, y, jx, jy, count
    isochron CSV: level, vertex_index, x, y
    manifest:     JSON object, at least {"command": ..., "config": ...}
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FIELD_SCHEMA",
    "QUIVER_SCHEMA",
    "ISOCHRON_SCHEMA",
    "FieldData",
    "require_file",
    "read_field",
    "read_quiver",
    "read_isochrons",
    "read_manifest",
]

FIELD_SCHEMA = ["i_alpha", "i_beta", "alpha", "beta", "x", "y",
                "value_re", "value_im"]
QUIVER_SCHEMA = ["x", "y", "jx", "jy", "count"]
ISOCHRON_SCHEMA = ["level", "vertex_index", "x", "y"]


def require_file(run_dir, name: str, schema) -> str:
    """Path of a run artifact, or FileNotFoundError naming the schema."""
    path = os.path.join(run_dir, name)
    if not os.path.isfile(path):
        raise FileNotFoundError(
            f"{path} is missing; expected a CSV with columns "
            f"{','.join(schema)}")
    return path


@dataclass
class FieldData:
    """One grid field reshaped to (n_alpha, n_beta) plaquettes."""

    x: np.ndarray          # (n_alpha, n_beta) Cartesian node coordinates
    y: np.ndarray
    values: np.ndarray     # real or complex, same shape

    @property
    def shape(self):
        return self.values.shape

    def closed(self):
        """Copies with the first angular row appended (seam closure)."""
        close = lambda a: np.concatenate([a, a[:1]], axis=0)
        return close(self.x), close(self.y), close(self.values)


def read_field(path) -> FieldData:
    """Load a field CSV and reshape it by its (i_alpha, i_beta) indices."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = list(data.dtype.names or ())
    if names != FIELD_SCHEMA:
        raise ValueError(f"{path}: expected columns "
                         f"{','.join(FIELD_SCHEMA)}, got {names}")
    ia = data["i_alpha"].astype(int)
    ib = data["i_beta"].astype(int)
    na, nb = int(ia.max()) + 1, int(ib.max()) + 1
    if data.shape[0] != na * nb:
        raise ValueError(f"{path}: {data.shape[0]} rows do not fill a "
                         f"{na} x {nb} grid")
    order = np.argsort(ia * nb + ib)

    def grid2d(col):
        return np.asarray(col)[order].reshape(na, nb)

    vals = grid2d(data["value_re"])
    im = grid2d(data["value_im"])
    if np.any(im != 0.0):
        vals = vals + 1j * im
    return FieldData(x=grid2d(data["x"]), y=grid2d(data["y"]), values=vals)


def read_quiver(path) -> dict:
    """Load a quiver CSV into 1-D column arrays (may be empty)."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = list(data.dtype.names or ())
    if names != QUIVER_SCHEMA:
        raise ValueError(f"{path}: expected columns "
                         f"{','.join(QUIVER_SCHEMA)}, got {names}")
    return {k: np.atleast_1d(data[k]) for k in names}


def read_isochrons(path) -> list:
    """Load isochron polylines as (level, (n, 2) vertex array) pairs.

    Vertex indices restart at 0 for each polyline, which is how separate
    polylines of the same level are delimited.
    """
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = list(data.dtype.names or ())
    if names != ISOCHRON_SCHEMA:
        raise ValueError(f"{path}: expected columns "
                         f"{','.join(ISOCHRON_SCHEMA)}, got {names}")
    level = np.atleast_1d(data["level"])
    vix = np.atleast_1d(data["vertex_index"]).astype(int)
    xy = np.column_stack([np.atleast_1d(data["x"]), np.atleast_1d(data["y"])])
    out = []
    start = 0
    for k in range(1, len(level) + 1):
        if k == len(level) or vix[k] == 0:
            out.append((float(level[start]), xy[start:k]))
            start = k
    return out


def read_manifest(run_dir) -> dict:
    path = os.path.join(run_dir, "manifest.json")
    if not os.path.isfile(path):
        raise FileNotFoundError(f"{path} is missing; expected the JSON "
                                "manifest written alongside the CSVs")
    with open(path) as fh:
        return json.load(fh)
