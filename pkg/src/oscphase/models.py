"""Planar stochastic oscillator models.

A model is the pair (drift f, noise matrix g) of the Langevin dynamics
``dx = f(x) dt + g(x) dW_t`` together with the diffusion tensor
``D = g g^T / 2`` that the grid assembly consumes directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ParameterDomainError

__all__ = [
    "OscillatorModel",
    "StuartLandauParams",
    "LinearFocusParams",
    "TestFunction",
    "make_stuart_landau",
    "make_linear_focus",
    "make_deterministic_stuart_landau",
    "eval_generator_symbolic",
    "model_to_config",
    "model_from_config",
]


@dataclass(frozen=True)
class OscillatorModel:
    """Two-dimensional diffusion with drift f and noise matrix g.

    ``drift`` maps states of shape (..., 2) to (..., 2); ``diffusion``
    maps (..., 2) to (..., 2, m); ``diffusion_tensor`` maps (..., 2) to
    the symmetric PSD matrix D(x) = g g^T / 2 of shape (..., 2, 2).
    Instances are immutable and safe to evaluate concurrently.
    """

    name: str
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    diffusion_tensor: Callable[[np.ndarray], np.ndarray]
    noise_dim: int
    params: dict = field(default_factory=dict)
    dim: int = 2


@dataclass(frozen=True)
class StuartLandauParams:
    """Hopf normal-form parameters: stability a, frequency b, noise sigma."""

    a: float
    b: float
    sigma: float

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterDomainError(f"stability parameter a must be > 0, got {self.a}")
        if self.sigma < 0:
            raise ParameterDomainError(f"noise strength sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class LinearFocusParams:
    """Stable linear focus: 2x2 drift matrix A with complex spectrum, isotropic noise."""

    A: np.ndarray
    sigma: float

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.shape != (2, 2):
            raise ParameterDomainError(f"A must be 2x2, got shape {A.shape}")
        object.__setattr__(self, "A", A)
        if self.sigma < 0:
            raise ParameterDomainError(f"noise strength sigma must be >= 0, got {self.sigma}")
        eigvals = np.linalg.eigvals(A)
        if np.max(np.abs(eigvals.imag)) < 1e-12:
            raise ParameterDomainError("A must have a complex-conjugate eigenvalue pair")
        if np.max(eigvals.real) >= 0:
            raise ParameterDomainError("A must be stable (eigenvalues with negative real part)")


def _constant_isotropic_noise(sigma: float):
    def diffusion(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape[:-1] + (2, 2))
        g[..., 0, 0] = sigma
        g[..., 1, 1] = sigma
        return g

    def diffusion_tensor(x):
        x = np.asarray(x, dtype=float)
        D = np.zeros(x.shape[:-1] + (2, 2))
        D[..., 0, 0] = 0.5 * sigma**2
        D[..., 1, 1] = 0.5 * sigma**2
        return D

    return diffusion, diffusion_tensor


def make_stuart_landau(params: StuartLandauParams) -> OscillatorModel:
    """Noisy Stuart-Landau oscillator in real coordinates.

    f(x, y) = (a x - b y - (x^2+y^2) x,  b x + a y - (x^2+y^2) y),
    g = sigma * I, so D = (sigma^2 / 2) * I.
    """
    a, b, sigma = params.a, params.b, params.sigma

    def drift(x):
        x = np.asarray(x, dtype=float)
        u, v = x[..., 0], x[..., 1]
        r2 = u * u + v * v
        out = np.empty_like(x)
        out[..., 0] = a * u - b * v - r2 * u
        out[..., 1] = b * u + a * v - r2 * v
        return out

    diffusion, diffusion_tensor = _constant_isotropic_noise(sigma)
    return OscillatorModel(
        name="stuart_landau",
        drift=drift,
        diffusion=diffusion,
        diffusion_tensor=diffusion_tensor,
        noise_dim=2,
        params={"a": a, "b": b, "sigma": sigma},
    )


def make_deterministic_stuart_landau(a: float, b: float) -> OscillatorModel:
    """Stuart-Landau with sigma = 0 (deterministic limit-cycle baseline)."""
    return make_stuart_landau(StuartLandauParams(a=a, b=b, sigma=0.0))


def make_linear_focus(params: LinearFocusParams) -> OscillatorModel:
    """Stable linear focus dx = A x dt + sigma dW (analytic oracle model)."""
    A = params.A
    sigma = params.sigma

    def drift(x):
        x = np.asarray(x, dtype=float)
        return x @ A.T

    diffusion, diffusion_tensor = _constant_isotropic_noise(sigma)
    return OscillatorModel(
        name="linear_focus",
        drift=drift,
        diffusion=diffusion,
        diffusion_tensor=diffusion_tensor,
        noise_dim=2,
        params={"A": A.copy(), "sigma": sigma},
    )


@dataclass(frozen=True)
class TestFunction:
    """Twice-differentiable test function given by value, gradient, Hessian."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]


def eval_generator_symbolic(model: OscillatorModel, u: TestFunction, x) -> float:
    """Generator of the diffusion applied to a test function at a point.

    Returns grad(u) . f(x) + sum_ij D_ij(x) d2u/dxi dxj.
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(u.gradient(x), dtype=float)
    hess = np.asarray(u.hessian(x), dtype=float)
    f = model.drift(x)
    D = model.diffusion_tensor(x)
    return float(grad @ f + np.sum(D * hess))


def model_to_config(model: OscillatorModel) -> dict:
    """Serialize model selection and parameters to the JSON config object."""
    if model.name == "stuart_landau":
        p = model.params
        return {"model": "stuart_landau",
                "params": {"a": p["a"], "b": p["b"], "sigma": p["sigma"]}}
    if model.name == "linear_focus":
        p = model.params
        return {"model": "linear_focus",
                "params": {"A": [float(v) for v in np.asarray(p["A"]).ravel()],
                           "sigma": p["sigma"]}}
    raise ParameterDomainError(f"model {model.name!r} has no config serialization")


def model_from_config(cfg: dict) -> OscillatorModel:
    """Inverse of :func:`model_to_config`; A is a row-major 4-array."""
    kind = cfg.get("model")
    params = cfg.get("params", {})
    if kind == "stuart_landau":
        return make_stuart_landau(StuartLandauParams(
            a=float(params["a"]), b=float(params["b"]), sigma=float(params["sigma"])))
    if kind == "linear_focus":
        A = np.asarray(params["A"], dtype=float).reshape(2, 2)
        return make_linear_focus(LinearFocusParams(A=A, sigma=float(params["sigma"])))
    raise ParameterDomainError(f"unknown model kind {kind!r}")
