"""End-to-end grid pipeline: operators, stationary state, both phases.

Bundles the sequence every consumer repeats: assemble the operators,
solve for the stationary density and current, get the mean period from
the flux formula, then solve the mean-return-time and spectral phase
problems on the same operator.
"""
from __future__ import annotations

from dataclasses import dataclass

from .grid import AnnulusGrid, ScalarField
from .models import OscillatorModel
from .mrt import MrtSolution, solve_mrt
from .operators import (CurrentField, MeanPeriod, SparseOperator,
                        assemble_backward, assemble_forward, mean_period,
                        probability_current, stationary_density,
                        truncation_estimate)
from .spectral import SpectralSolution, solve_spectral

__all__ = ["PhaseSolution", "solve_phase"]


@dataclass
class PhaseSolution:
    """Everything the grid backend knows about one model + grid."""

    model: OscillatorModel
    grid: AnnulusGrid
    backward: SparseOperator
    forward: SparseOperator
    P0: ScalarField
    current: CurrentField
    period: MeanPeriod
    mrt: MrtSolution
    spectral: SpectralSolution
    truncation: float

    @property
    def Tbar(self) -> float:
        return self.period.Tbar


def solve_phase(model: OscillatorModel, grid: AnnulusGrid,
                negative_tol: float = 1e-10,
                max_flux_spread: float = 0.05,
                k: int = 8) -> PhaseSolution:
    """Run the full grid pipeline for one model on one grid."""
    backward = assemble_backward(model, grid)
    forward = assemble_forward(model, grid)
    P0 = stationary_density(forward, negative_tol=negative_tol)
    current = probability_current(model, grid, P0)
    period = mean_period(current, max_spread=max_flux_spread)
    mrt = solve_mrt(backward, grid, period.Tbar)
    spectral = solve_spectral(model, grid, backward, Tbar=period.Tbar)
    trunc = truncation_estimate(model, grid, backward)
    return PhaseSolution(model=model, grid=grid, backward=backward,
                         forward=forward, P0=P0, current=current,
                         period=period, mrt=mrt, spectral=spectral,
                         truncation=trunc)
