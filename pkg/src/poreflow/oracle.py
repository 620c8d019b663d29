"""Dense direct solves of the discrete cell problems, for tiny grids only.

These oracles solve the *same discretization* as the iterative solvers --
their operators are built by applying the spectral derivative routines to
basis vectors, so dense and spectral applications agree to round-off.
That isolates iteration error from discretization error, which is exactly
what verifying the solvers requires.  Test infrastructure only; guarded to
small grids and never used in production solves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .grid import IndicatorField, UnitCellGrid
from .spectral import SpectralSymbols, apply_laplacian, fft, grad, ifft, make_symbols
from .stokes import StokesConfig
from .transport import TransportConfig, build_coefficients

ORACLE_MAX_POINTS = 4096


class OracleError(RuntimeError):
    """A dense solve failed or its solution does not satisfy its equations."""


@dataclass(frozen=True)
class DenseOperatorSet:
    """Dense matrices equivalent to the spectral derivative operators."""

    grid: UnitCellGrid
    mode: str
    gradient: tuple[np.ndarray, ...]  # one n x n matrix per axis
    laplacian: np.ndarray             # n x n, applies -L(k) (negative semidefinite)


def _check_size(grid: UnitCellGrid) -> None:
    if grid.n_pts > ORACLE_MAX_POINTS:
        raise ValueError(
            f"oracle guard: {grid.n_pts} points exceeds {ORACLE_MAX_POINTS}"
        )


def dense_operators(grid: UnitCellGrid, mode: str) -> DenseOperatorSet:
    """Materialize the symbol operators by applying them to every basis field."""
    _check_size(grid)
    n = grid.n_pts
    symbols = make_symbols(grid, mode)
    basis = np.eye(n).reshape(n, *grid.dims)
    basis_hat = fft(basis, grid)  # batched over the leading axis

    grads = []
    for axis in range(grid.dim):
        g_hat = 1j * symbols.kappa_bc(axis) * basis_hat
        grads.append(ifft(g_hat, grid).reshape(n, n).T)
    lap = ifft(apply_laplacian(basis_hat, symbols), grid).reshape(n, n).T
    return DenseOperatorSet(grid, mode, tuple(grads), lap)


def _relative_residual(lhs: np.ndarray, rhs: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(rhs)), 1e-30)
    return float(np.linalg.norm(lhs - rhs)) / scale


def oracle_stokes(
    indicator: IndicatorField,
    cfg: StokesConfig | None = None,
    check_tol: float = 1e-10,
) -> np.ndarray:
    """Direct solve of the constrained flow system; returns the velocity.

    Solves the stationarity system the splitting iteration converges to:
    viscous momentum balance driven by the mean pressure gradient, subject
    to the symbol-divergence constraint and zero velocity on solid cells.
    The multipliers (pressure-like field, solid reaction forces) are
    eliminated by restricting to the constraint null space: reaction forces
    on interior solid cells are screened by the surrounding solid and leave
    the saddle system numerically rank-deficient, whereas the reduced system
    is symmetric positive definite and determines the velocity uniquely and
    stably.  The solution is verified by substitution (constraints plus the
    momentum balance projected onto the constraint null space); a failure
    is reported, not patched.
    """
    cfg = cfg or StokesConfig()
    grid = indicator.grid
    _check_size(grid)
    d, n = grid.dim, grid.n_pts
    ops = dense_operators(grid, cfg.symbol_mode)

    solid_idx = np.flatnonzero(indicator.values.ravel())
    n_s = solid_idx.size
    g_p = np.asarray(cfg.pressure_gradient, dtype=float)
    if n_s == n:
        return np.zeros((d, *grid.dims))

    # Constraints: divergence-free plus zero velocity on solid cells.
    constraints = np.zeros((n + d * n_s, d * n))
    for c in range(d):
        constraints[:n, c * n:(c + 1) * n] = ops.gradient[c]
        constraints[n + c * n_s + np.arange(n_s), c * n + solid_idx] = 1.0
    _, sv, v_rows = np.linalg.svd(constraints)
    rank = int((sv > 1e-10 * sv[0]).sum())
    nullbasis = v_rows[rank:].T
    if nullbasis.shape[1] == 0:
        return np.zeros((d, *grid.dims))

    stiffness = -cfg.nu * ops.laplacian  # positive semidefinite viscous block
    viscous = np.zeros((d * n, d * n))
    for c in range(d):
        viscous[c * n:(c + 1) * n, c * n:(c + 1) * n] = stiffness
    forcing = np.repeat(g_p, n)

    reduced = nullbasis.T @ viscous @ nullbasis
    try:
        coords = scipy.linalg.solve(
            reduced, nullbasis.T @ forcing, assume_a="pos"
        )
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise OracleError(f"reduced flow system is singular: {exc}") from exc
    u_flat = nullbasis @ coords

    scale = max(float(np.linalg.norm(forcing)), 1e-30)
    feasibility = float(np.linalg.norm(constraints @ u_flat))
    stationarity = float(
        np.linalg.norm(nullbasis.T @ (viscous @ u_flat - forcing))
    )
    if not np.isfinite(u_flat).all() or max(feasibility, stationarity) > check_tol * scale:
        raise OracleError(
            "flow solution failed verification "
            f"(feasibility {feasibility:.3e}, stationarity {stationarity:.3e})"
        )
    return u_flat.reshape(d, *grid.dims)


def oracle_transport(
    indicator: IndicatorField,
    u: np.ndarray,
    cfg: TransportConfig | None = None,
    check_tol: float = 1e-8,
) -> np.ndarray:
    """Direct solve of the discrete transport problem; returns chi.

    Assembles the comparison-medium form of the extended advection-diffusion
    equation with the dense symbol operators (so the filtered Laplacian and
    gradient match the iterative solver exactly).  The mean of chi is pinned
    to zero through a bordered row, with one scalar unknown absorbing the
    zero-mode component of the equation that the spectral update never
    enforces.  The solution is verified by substitution.
    """
    cfg = cfg or TransportConfig()
    grid = indicator.grid
    _check_size(grid)
    d, n = grid.dim, grid.n_pts
    ops = dense_operators(grid, cfg.symbol_mode)
    coeffs = build_coefficients(indicator, u, cfg)
    g_chi = np.asarray(cfg.composition_gradient, dtype=float)

    diff_contrast = coeffs.diffusivity.ravel() - cfg.a0
    operator = -cfg.a0 * ops.laplacian
    rhs = coeffs.forcing.ravel().copy()
    for c in range(d):
        adv_contrast = coeffs.advection[c].ravel() - coeffs.b0_vec[c]
        operator += coeffs.b0_vec[c] * ops.gradient[c]
        operator -= ops.gradient[c] @ (diff_contrast[:, None] * ops.gradient[c])
        operator += adv_contrast[:, None] * ops.gradient[c]
        rhs += ops.gradient[c] @ (diff_contrast * g_chi[c])
        rhs -= adv_contrast * g_chi[c]

    bordered = np.zeros((n + 1, n + 1))
    bordered[:n, :n] = operator
    bordered[:n, n] = -1.0  # zero-mode compatibility defect
    bordered[n, :n] = 1.0 / n
    full_rhs = np.concatenate([rhs, [0.0]])
    try:
        solution = np.linalg.solve(bordered, full_rhs)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"transport system is singular: {exc}") from exc

    chi, defect = solution[:n], solution[n]
    residual = _relative_residual(operator @ chi - defect, rhs)
    if not np.isfinite(solution).all() or residual > check_tol:
        raise OracleError(
            f"transport system not solved to tolerance (relative residual {residual:.3e})"
        )
    return chi.reshape(grid.dims)
