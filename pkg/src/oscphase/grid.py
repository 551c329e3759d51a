"""Annulus-adapted tensor grid and discretized fields.

The computational domain is the annulus r_in <= r <= r_out around a
center point, parametrized by (alpha, beta) in [0, 2pi) x [-1, 1] with
the affine radial map r(beta) = r_in + (beta + 1) (r_out - r_in) / 2.
alpha is periodic; beta includes both endpoints.

Node storage is alpha-major: flat index k = i_alpha * n_beta + i_beta.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import GridError, InterpolationError

__all__ = ["AnnulusGrid", "ScalarField", "ComplexField", "build_grid"]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class AnnulusGrid:
    """Tensor grid on the annulus with precomputed geometry."""

    n_alpha: int
    n_beta: int
    r_in: float
    r_out: float
    center: tuple[float, float]
    alpha: np.ndarray          # (n_alpha,), uniform on [0, 2pi)
    beta: np.ndarray           # (n_beta,), uniform on [-1, 1] inclusive
    r: np.ndarray              # (n_beta,), r(beta)
    d_alpha: float
    d_beta: float
    dr_dbeta: float            # (r_out - r_in) / 2
    weights: np.ndarray        # (N,) quadrature weights (trapezoid in beta)
    jac_det: np.ndarray        # (N,) |d(x,y)/d(alpha,beta)| = r * dr_dbeta

    @property
    def n_nodes(self) -> int:
        return self.n_alpha * self.n_beta

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_alpha, self.n_beta)

    def flat_index(self, i_alpha, i_beta):
        return np.asarray(i_alpha) * self.n_beta + np.asarray(i_beta)

    def node_ab(self) -> tuple[np.ndarray, np.ndarray]:
        """(alpha, beta) coordinates of all nodes, flat alpha-major order."""
        A, B = np.meshgrid(self.alpha, self.beta, indexing="ij")
        return A.ravel(), B.ravel()

    def node_r(self) -> np.ndarray:
        return np.tile(self.r, self.n_alpha)

    def to_xy(self, alpha, beta) -> np.ndarray:
        """Map (alpha, beta) to Cartesian points, shape (..., 2)."""
        alpha = np.asarray(alpha, dtype=float)
        beta = np.asarray(beta, dtype=float)
        r = self.r_in + (beta + 1.0) * self.dr_dbeta
        out = np.empty(np.broadcast(alpha, beta).shape + (2,))
        out[..., 0] = self.center[0] + r * np.cos(alpha)
        out[..., 1] = self.center[1] + r * np.sin(alpha)
        return out

    def to_ab(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Map Cartesian points (..., 2) to (alpha in [0, 2pi), beta)."""
        points = np.asarray(points, dtype=float)
        dx = points[..., 0] - self.center[0]
        dy = points[..., 1] - self.center[1]
        alpha = np.mod(np.arctan2(dy, dx), TWO_PI)
        r = np.hypot(dx, dy)
        beta = (r - self.r_in) / self.dr_dbeta - 1.0
        return alpha, beta

    def node_xy(self) -> np.ndarray:
        """Cartesian coordinates of all nodes, shape (N, 2)."""
        a, b = self.node_ab()
        return self.to_xy(a, b)

    def contains(self, points, margin: float = 0.0) -> np.ndarray:
        """Boolean mask of points inside the annulus (beta in [-1, 1])."""
        _, beta = self.to_ab(points)
        return (beta >= -1.0 - margin) & (beta <= 1.0 + margin)

    # -- interpolation ----------------------------------------------------

    def _locate(self, points, clamp: bool):
        alpha, beta = self.to_ab(points)
        if not clamp:
            bad = (beta < -1.0 - 1e-12) | (beta > 1.0 + 1e-12)
            if np.any(bad):
                raise InterpolationError(
                    f"{int(np.sum(bad))} evaluation point(s) outside the annulus")
        beta = np.clip(beta, -1.0, 1.0)
        fa = alpha / self.d_alpha
        ia = np.floor(fa).astype(int) % self.n_alpha
        ta = fa - np.floor(fa)
        fb = (beta + 1.0) / self.d_beta
        ib = np.minimum(np.floor(fb).astype(int), self.n_beta - 2)
        ib = np.maximum(ib, 0)
        tb = fb - ib
        return ia, ta, ib, tb

    def interpolate(self, values: np.ndarray, points, clamp: bool = False) -> np.ndarray:
        """Bilinear interpolation in (alpha, beta), periodic in alpha."""
        ia, ta, ib, tb = self._locate(points, clamp)
        v = np.asarray(values).reshape(self.n_alpha, self.n_beta)
        ia1 = (ia + 1) % self.n_alpha
        v00 = v[ia, ib]
        v01 = v[ia, ib + 1]
        v10 = v[ia1, ib]
        v11 = v[ia1, ib + 1]
        return ((1 - ta) * ((1 - tb) * v00 + tb * v01)
                + ta * ((1 - tb) * v10 + tb * v11))

    def interpolate_cyclic(self, values: np.ndarray, points, clamp: bool = False) -> np.ndarray:
        """Interpolate an angle-valued field via its complex embedding.

        Returns angles in (-pi, pi]; safe across the 0/2pi cut.
        """
        z = self.interpolate(np.exp(1j * np.asarray(values)), points, clamp=clamp)
        return np.angle(z)


@dataclass
class ScalarField:
    """Real-valued grid function (flat alpha-major node values)."""

    grid: AnnulusGrid
    values: np.ndarray
    name: str = ""
    units: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if self.values.size != self.grid.n_nodes:
            raise GridError(
                f"field {self.name!r}: {self.values.size} values on a "
                f"{self.grid.n_nodes}-node grid")

    def as_2d(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def at(self, points, clamp: bool = False) -> np.ndarray:
        return self.grid.interpolate(self.values, points, clamp=clamp)

    def integral(self) -> float:
        return float(np.nansum(self.grid.weights * self.values))


@dataclass
class ComplexField:
    """Complex-valued grid function (flat alpha-major node values)."""

    grid: AnnulusGrid
    values: np.ndarray
    name: str = ""
    units: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).ravel()
        if self.values.size != self.grid.n_nodes:
            raise GridError(
                f"field {self.name!r}: {self.values.size} values on a "
                f"{self.grid.n_nodes}-node grid")

    def as_2d(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    def at(self, points, clamp: bool = False) -> np.ndarray:
        return self.grid.interpolate(self.values, points, clamp=clamp)


def build_grid(r_in: float, r_out: float, n_alpha: int, n_beta: int,
               center: tuple[float, float] = (0.0, 0.0)) -> AnnulusGrid:
    """Construct the annulus grid with quadrature weights and Jacobians.

    r_in must be positive: the mapping excludes the phaseless center.
    """
    if r_in <= 0:
        raise GridError(f"inner radius must be > 0 (phaseless center excluded), got {r_in}")
    if r_out <= r_in:
        raise GridError(f"need r_in < r_out, got {r_in} >= {r_out}")
    if n_alpha < 8 or n_beta < 4:
        raise GridError(f"grid too coarse: n_alpha={n_alpha} (>=8), n_beta={n_beta} (>=4)")

    alpha = np.arange(n_alpha) * (TWO_PI / n_alpha)
    beta = np.linspace(-1.0, 1.0, n_beta)
    dr_dbeta = 0.5 * (r_out - r_in)
    r = r_in + (beta + 1.0) * dr_dbeta
    d_alpha = TWO_PI / n_alpha
    d_beta = beta[1] - beta[0]

    jac_col = r * dr_dbeta                      # per beta-node |det J|
    trap = np.ones(n_beta)
    trap[0] = trap[-1] = 0.5                    # trapezoid in beta
    w_col = jac_col * trap * d_alpha * d_beta
    weights = np.tile(w_col, n_alpha)
    jac_det = np.tile(jac_col, n_alpha)

    return AnnulusGrid(
        n_alpha=n_alpha, n_beta=n_beta, r_in=float(r_in), r_out=float(r_out),
        center=(float(center[0]), float(center[1])),
        alpha=alpha, beta=beta, r=r,
        d_alpha=d_alpha, d_beta=d_beta, dr_dbeta=dr_dbeta,
        weights=weights, jac_det=jac_det,
    )
