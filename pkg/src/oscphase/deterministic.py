"""Deterministic baseline: limit cycle, adjoint phase-response curve, and
slow phase drift under a weak periodic perturbation (Malkin averaging)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NonOscillatoryError, ParameterDomainError
from .models import OscillatorModel

__all__ = [
    "LimitCycle",
    "AdjointSolution",
    "find_limit_cycle",
    "model_jacobian",
    "adjoint_prc",
    "malkin_average",
]


@dataclass
class LimitCycle:
    """Converged periodic orbit sampled at n+1 uniform times (endpoints repeat)."""

    period: float
    times: np.ndarray              # (n+1,)
    states: np.ndarray             # (n+1, 2)
    residual: float                # ||U(0) - U(T)|| after convergence
    _dense: object = None          # dense ODE solution over [0, T]

    def at(self, t) -> np.ndarray:
        """Cycle state at arbitrary times (periodic extension)."""
        tt = np.mod(np.asarray(t, dtype=float), self.period)
        return np.asarray(self._dense(tt)).T


@dataclass
class AdjointSolution:
    """T-periodic adjoint (phase response curve) on the cycle time grid."""

    times: np.ndarray              # (n+1,)
    Z: np.ndarray                  # (n+1, 2)
    target_rate: float             # the enforced value of Z . F
    normalization_residual: float  # max relative deviation of Z . F from target
    periodicity_residual: float    # ||Z(0) - Z(T)||


def find_limit_cycle(model: OscillatorModel, guess, tol: float = 1e-10,
                     n_samples: int = 512, max_windings: int = 60,
                     rtol: float = 1e-12, atol: float = 1e-12) -> LimitCycle:
    """Locate an attracting limit cycle by Poincare-section shooting.

    Integrates the sigma = 0 drift through repeated crossings of the
    section through the (converging) base point until successive crossing
    points agree within tol; detects spirals into a fixed point.
    """
    x0 = np.asarray(guess, dtype=float)
    f0 = model.drift(x0)
    scale = max(1.0, float(np.linalg.norm(x0)))
    if np.linalg.norm(f0) < 1e-12 * scale:
        raise NonOscillatoryError("guess is a fixed point of the drift")

    def rhs(t, x):
        return model.drift(x)

    point = x0.copy()
    period = None
    prev_point = None
    for _ in range(max_windings):
        normal = model.drift(point)
        normal = normal / np.linalg.norm(normal)

        def event(t, x, p=point, nv=normal):
            return float(nv @ (x - p))
        event.direction = 1.0
        event.terminal = False

        # crude horizon: several characteristic times per winding
        sol = solve_ivp(rhs, (0.0, 200.0), point, events=event,
                        rtol=rtol, atol=atol, dense_output=True, max_step=0.1)
        t_ev = sol.t_events[0]
        t_ev = t_ev[t_ev > 1e-6]
        if t_ev.size == 0:
            end = sol.y[:, -1]
            if np.linalg.norm(model.drift(end)) < 1e-6 * scale:
                raise NonOscillatoryError("trajectory spirals into a fixed point")
            raise NonOscillatoryError("no section return found (no limit cycle near guess)")
        t_ret = float(t_ev[0])
        new_point = sol.sol(t_ret)
        if np.linalg.norm(model.drift(new_point)) < 1e-8 * scale or \
                np.linalg.norm(new_point) < 1e-8 * scale:
            raise NonOscillatoryError("trajectory spirals into a fixed point")
        gap = np.linalg.norm(new_point - point)
        prev_point, point, period = point, new_point, t_ret
        if gap < tol:
            break
    else:
        raise NonOscillatoryError(
            f"shooting did not converge within {max_windings} iterations")
    if prev_point is not None and np.linalg.norm(model.drift(point)) < 1e-6 * scale:
        raise NonOscillatoryError("trajectory spirals into a fixed point")

    sol = solve_ivp(rhs, (0.0, period), point, rtol=rtol, atol=atol,
                    dense_output=True, max_step=period / 50)
    times = np.linspace(0.0, period, n_samples + 1)
    states = sol.sol(times).T
    residual = float(np.linalg.norm(states[0] - states[-1]))
    return LimitCycle(period=period, times=times, states=states,
                      residual=residual, _dense=sol.sol)


def model_jacobian(model: OscillatorModel,
                   fd_step: float = 1e-6) -> Callable[[np.ndarray], np.ndarray]:
    """Drift Jacobian: analytic for the built-in models, else central FD."""
    if model.name.startswith("stuart_landau"):
        a, b = model.params["a"], model.params["b"]

        def jac(x):
            u, v = x[0], x[1]
            return np.array([
                [a - 3 * u * u - v * v, -b - 2 * u * v],
                [b - 2 * u * v, a - u * u - 3 * v * v]])
        return jac
    if model.name.startswith("linear_focus"):
        A = np.asarray(model.params["A"], dtype=float)
        return lambda x: A

    def jac_fd(x):
        x = np.asarray(x, dtype=float)
        h = fd_step * max(1.0, float(np.linalg.norm(x)))
        J = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (model.drift(x + e) - model.drift(x - e)) / (2 * h)
        return J
    return jac_fd


def adjoint_prc(cycle: LimitCycle, model: OscillatorModel,
                jacobian: Optional[Callable] = None,
                normalization: str = "uniform",
                tol: float = 1e-9, max_periods: int = 50,
                rtol: float = 1e-11, atol: float = 1e-12) -> AdjointSolution:
    """Phase response curve from the adjoint variational system.

    Integrates dZ/dt = -J(U(t))^T Z backward in time until T-periodic
    (the backward monodromy contracts onto the PRC for a hyperbolic
    cycle), then rescales so Z . F equals the phase rate: 2 pi / T for
    ``normalization="uniform"``, the model's natural frequency parameter
    for ``normalization="natural"``.
    """
    if jacobian is None:
        jacobian = model_jacobian(model)
    T = cycle.period

    def rhs(t, z):
        return -jacobian(cycle.at(t)).T @ z

    z = np.array([0.0, 1.0])
    gap = np.inf
    for _ in range(max_periods):
        sol = solve_ivp(rhs, (T, 0.0), z, rtol=rtol, atol=atol, max_step=T / 50)
        z_new = sol.y[:, -1]
        z_new = z_new / np.linalg.norm(z_new)
        gap = float(np.linalg.norm(z_new - z / np.linalg.norm(z)))
        z = z_new
        if gap < tol:
            break
    else:
        raise NonOscillatoryError(
            f"adjoint iteration did not converge (gap {gap:.2e}); cycle may "
            "not be hyperbolic")

    sol = solve_ivp(rhs, (T, 0.0), z, rtol=rtol, atol=atol,
                    dense_output=True, max_step=T / 50)
    Z = sol.sol(cycle.times).T
    F = model.drift(cycle.states)
    pairing = np.sum(Z * F, axis=1)

    if normalization == "uniform":
        target = 2.0 * np.pi / T
    elif normalization == "natural":
        if "b" not in model.params:
            raise ParameterDomainError(
                "natural-frequency normalization needs a 'b' parameter")
        target = float(model.params["b"])
    else:
        raise ParameterDomainError(f"unknown normalization {normalization!r}")

    scale = target / np.mean(pairing)
    Z = Z * scale
    pairing = pairing * scale
    return AdjointSolution(
        times=cycle.times, Z=Z, target_rate=target,
        normalization_residual=float(np.max(np.abs(pairing - target)) / abs(target)),
        periodicity_residual=float(np.linalg.norm(Z[0] - Z[-1])))


def malkin_average(cycle: LimitCycle, adjoint: AdjointSolution,
                   G: Callable[[np.ndarray, float], np.ndarray]) -> float:
    """Slow phase drift (1/T) integral of Z(t) . G(U(t), t) over one period."""
    vals = np.array([adjoint.Z[k] @ np.asarray(G(cycle.states[k], cycle.times[k]))
                     for k in range(len(cycle.times))])
    # uniform periodic grid: trapezoid = mean over one period
    return float(np.mean(vals[:-1]))
