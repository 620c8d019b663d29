"""Shared geometry builders and solve shortcuts for the test suite."""

from __future__ import annotations

import numpy as np

import poreflow as pf


def disk(n: int, radius: float = 0.25) -> pf.IndicatorField:
    return pf.make_model_geometry(pf.UnitCellGrid((n, n)), radius=radius)


def stripe(n: int, lo: float = 0.375, hi: float = 0.625) -> pf.IndicatorField:
    """Solid slab normal to the first axis, invariant along the second."""
    grid = pf.UnitCellGrid((n, n))
    y1 = grid.axis_centers(0)
    values = ((y1 >= lo) & (y1 < hi)).astype(int)[:, None] * np.ones(n, dtype=int)
    return pf.IndicatorField(grid, values)


def blobs(n: int) -> pf.IndicatorField:
    """Asymmetric multi-obstacle geometry (no reflection or rotation symmetry)."""
    grid = pf.UnitCellGrid((n, n))
    y1, y2 = grid.meshgrid()
    solid = np.zeros((n, n), dtype=bool)
    for cx, cy, r in [(0.32, 0.3, 0.16), (0.72, 0.62, 0.21), (0.25, 0.78, 0.11)]:
        solid |= (y1 - cx) ** 2 + (y2 - cy) ** 2 <= r * r
    return pf.IndicatorField(grid, solid.astype(int))


def stiff_penalties() -> pf.PenaltyParams:
    """Large fixed penalties: fast linear convergence, error well below the
    residual tolerances.  Used where accuracy against the oracle matters."""
    return pf.PenaltyParams(alpha=1000.0, beta=1000.0, b=1000.0, adaptive=False)


def unit_flows(indicator, eps=1e-6, penalties=None, **cfg_kwargs):
    """Converged unit-pressure-gradient solves along each axis."""
    penalties = penalties or stiff_penalties()
    states, reports = [], []
    for axis in range(indicator.grid.dim):
        g = [0.0] * indicator.grid.dim
        g[axis] = 1.0
        cfg = pf.StokesConfig.with_tolerance(
            eps, pressure_gradient=tuple(g), **cfg_kwargs
        )
        state, report = pf.solve_stokes(indicator, cfg, penalties)
        assert report.converged, f"unit flow {axis} failed to converge"
        states.append(state)
        reports.append(report)
    return states, reports


def unit_concentrations(indicator, u, eps=1e-6, **cfg_kwargs):
    """Converged unit-composition-gradient transport solves along each axis."""
    states, reports = [], []
    for axis in range(indicator.grid.dim):
        g = [0.0] * indicator.grid.dim
        g[axis] = 1.0
        cfg = pf.TransportConfig(
            composition_gradient=tuple(g), eps=eps, max_iter=50_000, **cfg_kwargs
        )
        state, report = pf.solve_transport(indicator, u, cfg)
        assert report.converged, f"unit transport {axis} failed: {report.reason}"
        states.append(state)
        reports.append(report)
    return states, reports


def rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm((a - b).ravel()) / np.linalg.norm(b.ravel()))
