"""Macroscopic transport properties assembled from converged cell solutions.

All integrals are midpoint sums over pore cells (one value per cell, weight
equal to the cell volume), consistently with the collocation discretization.
Permeability is the Gram matrix of masked velocity gradients, so it is
symmetric by construction; diffusivity is generally not symmetric once flow
is present.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import IndicatorField, porosity
from .spectral import SpectralSymbols, fft, grad, ifft


@dataclass
class EffectiveTensors:
    """Effective permeability and diffusivity with their provenance."""

    permeability: np.ndarray
    diffusivity: np.ndarray
    porosity: float
    u_bar: np.ndarray  # row i: pore-averaged velocity of the i-th unit flow
    meta: dict = field(default_factory=dict)


def pore_average(f: np.ndarray, indicator: IndicatorField):
    """Mean of a field over pore cells (components averaged independently)."""
    pore = 1.0 - indicator.as_float()
    count = pore.sum()
    if count == 0:
        raise ValueError("pore average undefined: no pore cells")
    if f.shape == indicator.grid.dims:
        return float((f * pore).sum() / count)
    return (f * pore).reshape(f.shape[0], -1).sum(axis=1) / count


def permeability(
    u_solutions: Sequence[np.ndarray],
    indicator: IndicatorField,
    symbols: SpectralSymbols,
) -> np.ndarray:
    """Permeability: pore integrals of contracted unit-flow velocity gradients.

    ``u_solutions[i]`` must be the converged flow for a unit mean pressure
    gradient along axis i (unit viscosity, or the scaling recorded by the
    caller).  Gradients use the provided symbols; entry (i, j) contracts
    gradient i against gradient j over both component and derivative axes,
    restricted to pore cells.  Computed as a Gram matrix, hence exactly
    symmetric and positive semidefinite up to round-off.
    """
    grid = indicator.grid
    d = grid.dim
    if len(u_solutions) != d:
        raise ValueError(f"need {d} unit-flow solutions, got {len(u_solutions)}")
    pore = (1.0 - indicator.as_float()).ravel()
    masked_grads = []
    for u in u_solutions:
        if u.shape != (d, *grid.dims):
            raise ValueError("velocity solution shape does not match the grid")
        rows = [ifft(grad(fft(u[c], grid), symbols), grid).reshape(d, -1) for c in range(d)]
        masked_grads.append(np.concatenate(rows, axis=0) * pore)
    gram = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            gram[i, j] = float(np.sum(masked_grads[i] * masked_grads[j]))
    return gram * grid.cell_volume


def diffusivity(
    u_solutions: Sequence[np.ndarray],
    chi_solutions: Sequence[tuple[np.ndarray, np.ndarray]],
    indicator: IndicatorField,
    pe: float,
) -> np.ndarray:
    """Diffusivity from unit flows and unit-gradient concentration solutions.

    ``chi_solutions[j]`` is the (chi, grad_chi) pair solved with a unit mean
    composition gradient along axis j under the physical velocity field;
    ``u_solutions[i]`` are the unit-pressure-gradient flows.  Entry (i, j)
    sums three pore integrals: the mean-gradient identity part, the
    Peclet-weighted i-th component of the velocity-fluctuation integral
    against chi, and the i-th component of the mean concentration gradient.
    """
    grid = indicator.grid
    d = grid.dim
    if len(u_solutions) != d or len(chi_solutions) != d:
        raise ValueError(f"need {d} flow and {d} concentration solutions")
    pore = 1.0 - indicator.as_float()
    phi_p = porosity(indicator)
    if phi_p == 0.0:
        raise ValueError("diffusivity undefined: no pore cells")
    cell = grid.cell_volume

    tensor = phi_p * np.eye(d)
    u_bars = [pore_average(u, indicator) for u in u_solutions]
    for i in range(d):
        fluct_i = u_bars[i][i] - u_solutions[i][i]  # i-th component of (u_bar - u)
        for j in range(d):
            chi_j, grad_chi_j = chi_solutions[j]
            tensor[i, j] += pe * cell * float((pore * fluct_i * chi_j).sum())
            tensor[i, j] += cell * float((pore * grad_chi_j[i]).sum())
    return tensor
