"""Seeded Euler-Maruyama integration and first-return-time measurement.

Every trajectory draws from its own counter-based Philox stream keyed by
(seed, trajectory index), so ensembles are bit-reproducible regardless of
chunking or ensemble size.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DivergenceError, ParameterDomainError, ReturnTimeoutError
from .grid import ScalarField
from .models import OscillatorModel

__all__ = [
    "SimConfig",
    "UniformAnnulus",
    "TrajectoryEnsemble",
    "euler_maruyama",
    "PhaseSection",
    "RaySection",
    "ReturnTimes",
    "first_return_times",
]

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class UniformAnnulus:
    """Initial-condition rule: uniform on the disk annulus r_lo <= r <= r_hi."""

    r_lo: float
    r_hi: float
    center: tuple[float, float] = (0.0, 0.0)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.uniform(size=n)
        r = np.sqrt(self.r_lo**2 + u * (self.r_hi**2 - self.r_lo**2))
        th = rng.uniform(0.0, TWO_PI, size=n)
        out = np.empty((n, 2))
        out[:, 0] = self.center[0] + r * np.cos(th)
        out[:, 1] = self.center[1] + r * np.sin(th)
        return out


@dataclass(frozen=True)
class SimConfig:
    """Euler-Maruyama run parameters."""

    dt: float
    n_steps: int
    n_samples: int = 1
    seed: int = 0
    initial: Union[Sequence[float], UniformAnnulus] = (1.0, 0.0)
    store_stride: int = 1
    blowup_radius: float = 1e3

    def __post_init__(self):
        if not self.dt > 0:
            raise ParameterDomainError(f"dt must be > 0, got {self.dt}")
        if self.n_steps < 1 or self.n_samples < 1:
            raise ParameterDomainError("n_steps and n_samples must be >= 1")
        if self.n_steps % self.store_stride != 0:
            raise ParameterDomainError("store_stride must divide n_steps")


@dataclass
class TrajectoryEnsemble:
    """Sample paths on a shared uniform time grid (possibly strided)."""

    times: np.ndarray                  # (n_stored,)
    states: np.ndarray                 # (n_samples, n_stored, 2)
    seed: int
    stream_ids: np.ndarray             # (n_samples,) per-trajectory stream keys
    dt_sim: float                      # integrator step (times spacing may be a multiple)

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    @property
    def dt_store(self) -> float:
        return float(self.times[1] - self.times[0])


def _traj_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(int(seed) << 64) | int(index)))


def euler_maruyama(model: OscillatorModel, cfg: SimConfig,
                   time_block: int = 2048) -> TrajectoryEnsemble:
    """Integrate x_{k+1} = x_k + f(x_k) dt + g(x_k) sqrt(dt) xi_k.

    Trajectories are advanced in chunks but each consumes only its own
    RNG stream, so output is independent of chunking and of n_samples.
    """
    n = cfg.n_samples
    m = model.noise_dim
    sqdt = np.sqrt(cfg.dt)
    n_stored = cfg.n_steps // cfg.store_stride + 1
    states = np.empty((n, n_stored, 2))
    stream_ids = np.arange(n, dtype=np.uint64)

    rngs = [_traj_rng(cfg.seed, i) for i in range(n)]
    if isinstance(cfg.initial, UniformAnnulus):
        x = np.vstack([cfg.initial.sample(rngs[i], 1) for i in range(n)])
    else:
        x = np.tile(np.asarray(cfg.initial, dtype=float).reshape(1, 2), (n, 1))
    states[:, 0, :] = x

    chunk = 512
    for c0 in range(0, n, chunk):
        c1 = min(c0 + chunk, n)
        xc = x[c0:c1].copy()
        k = 0
        while k < cfg.n_steps:
            nb = min(time_block, cfg.n_steps - k)
            noise = np.stack([rngs[i].standard_normal((nb, m))
                              for i in range(c0, c1)])     # (nc, nb, m)
            for s in range(nb):
                f = model.drift(xc)
                g = model.diffusion(xc)                     # (nc, 2, m)
                xc = xc + f * cfg.dt + np.einsum("ijk,ik->ij", g, noise[:, s, :]) * sqdt
                step = k + s + 1
                if step % cfg.store_stride == 0:
                    states[c0:c1, step // cfg.store_stride, :] = xc
            if np.any(np.abs(xc) > cfg.blowup_radius):
                raise DivergenceError(
                    f"trajectory left the blow-up radius {cfg.blowup_radius} "
                    f"by step {k + nb}")
            k += nb

    times = np.arange(n_stored) * (cfg.dt * cfg.store_stride)
    return TrajectoryEnsemble(times=times, states=states, seed=cfg.seed,
                              stream_ids=stream_ids, dt_sim=cfg.dt)


# -- sections and first-return times ---------------------------------------

@dataclass(frozen=True)
class PhaseSection:
    """Level set of a cyclic phase field; calls return the wrapped offset."""

    field: ScalarField
    level: float

    def __call__(self, points) -> np.ndarray:
        grid = self.field.grid
        vals = grid.interpolate_cyclic(self.field.values, points, clamp=True)
        return np.angle(np.exp(1j * (vals - self.level)))


@dataclass(frozen=True)
class RaySection:
    """Radial ray theta = angle (the naive, non-MRT section)."""

    angle: float
    center: tuple[float, float] = (0.0, 0.0)

    def __call__(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        th = np.arctan2(points[..., 1] - self.center[1],
                        points[..., 0] - self.center[0])
        return np.angle(np.exp(1j * (th - self.angle)))


@dataclass
class ReturnTimes:
    """Per-start sample mean and standard error of the first return time."""

    means: np.ndarray
    stderrs: np.ndarray
    n_returns: np.ndarray
    samples: list = field(default_factory=list, repr=False)


def first_return_times(model: OscillatorModel, cfg: SimConfig,
                       section: Callable[[np.ndarray], np.ndarray],
                       starts: Sequence,
                       center: tuple[float, float] = (0.0, 0.0),
                       guard_angle: float = np.pi,
                       keep_samples: bool = False) -> ReturnTimes:
    """Monte Carlo mean first-return times to a section.

    For each start, cfg.n_samples trajectories run until, after winding by
    more than ``guard_angle`` around the center, they re-cross the zero
    level of the section function. Crossing times use linear interpolation
    of the sign change. cfg.n_steps is the timeout horizon.
    """
    starts = np.asarray(starts, dtype=float).reshape(-1, 2)
    means = np.empty(len(starts))
    stderrs = np.empty(len(starts))
    counts = np.empty(len(starts), dtype=int)
    all_samples = []

    for s_ix, x0 in enumerate(starts):
        rng = _traj_rng(cfg.seed, s_ix)
        n = cfg.n_samples
        x = np.tile(x0, (n, 1))
        fprev = section(x)
        theta_prev = np.arctan2(x[:, 1] - center[1], x[:, 0] - center[0])
        acc = np.zeros(n)
        t_return = np.full(n, np.nan)
        active = np.arange(n)
        sqdt = np.sqrt(cfg.dt)
        m = model.noise_dim

        for k in range(cfg.n_steps):
            na = active.size
            if na == 0:
                break
            xi = rng.standard_normal((na, m))
            f = model.drift(x)
            g = model.diffusion(x)
            x1 = x + f * cfg.dt + np.einsum("ijk,ik->ij", g, xi) * sqdt
            theta = np.arctan2(x1[:, 1] - center[1], x1[:, 0] - center[0])
            acc = acc + np.angle(np.exp(1j * (theta - theta_prev)))
            theta_prev = theta
            f1 = section(x1)
            crossed = ((acc > guard_angle)
                       & (np.sign(f1) != np.sign(fprev))
                       & (np.abs(f1 - fprev) < np.pi))
            if np.any(crossed):
                frac = fprev[crossed] / (fprev[crossed] - f1[crossed])
                t_return[active[crossed]] = (k + frac) * cfg.dt
                keep = ~crossed
                active, x, fprev, theta_prev, acc = (
                    active[keep], x1[keep], f1[keep], theta_prev[keep], acc[keep])
            else:
                x, fprev = x1, f1

        if active.size:
            raise ReturnTimeoutError(
                f"{active.size} of {n} trajectories from start {x0} did not "
                f"return within {cfg.n_steps} steps")
        means[s_ix] = t_return.mean()
        stderrs[s_ix] = t_return.std(ddof=1) / np.sqrt(n)
        counts[s_ix] = n
        if keep_samples:
            all_samples.append(t_return)

    return ReturnTimes(means=means, stderrs=stderrs, n_returns=counts,
                       samples=all_samples)
