"""Discrete Fourier transforms and derivative symbols for periodic fields.

Transform normalization is fixed here, once, for the whole package: the
forward transform is unnormalized and the inverse carries the ``1/n_pts``
factor (numpy's convention).  Hence the zero-frequency coefficient of a
forward transform equals ``n_pts * mean(field)``, Parseval reads
``sum(f**2) == sum(|fhat|**2) / n_pts``, and ``ifft(fft(f)) == f`` to
round-off.

Two symbol modes are provided:

* ``"exact"``: first-derivative symbol ``kappa_j = k_j = 2*pi*m_j`` and
  Laplacian symbol ``L = sum_j k_j**2``.
* ``"central"``: the modified wavenumbers of second-order central
  differences, ``kappa_j = sin(h_j*k_j)/h_j`` and
  ``L = sum_j 4*sin(h_j*k_j/2)**2 / h_j**2``.  These act as a
  high-frequency filter that suppresses ringing at coefficient jumps.

In both modes the first-derivative symbol at the Nyquist frequency of an
even axis is set to exactly zero, which keeps derivatives of real fields
real.  The Laplacian symbol keeps its Nyquist contribution, so ``L > 0``
for every nonzero mode.  Derivative operators apply ``1j * kappa``; the
symbols themselves are stored real.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as sp_fft

from .grid import UnitCellGrid

EXACT = "exact"
CENTRAL = "central"
SYMBOL_MODES = (EXACT, CENTRAL)


def fft_workers() -> int:
    """Worker count for the FFT backend, capped by POREFLOW_THREADS."""
    cap = os.environ.get("POREFLOW_THREADS", "").strip()
    if cap:
        return max(1, int(cap))
    return max(1, os.cpu_count() or 1)


@dataclass(frozen=True)
class SpectralSymbols:
    """Per-mode first-derivative and Laplacian symbols on one grid.

    ``kappa`` holds one 1D real array per axis (standard FFT frequency
    ordering); ``lap`` is the full nonnegative Laplacian symbol and
    ``kappa_sq`` the full ``sum_j kappa_j**2``, which differs from ``lap``
    in central mode and at Nyquist frequencies.
    """

    grid: UnitCellGrid
    mode: str
    kappa: tuple[np.ndarray, ...]
    lap: np.ndarray
    kappa_sq: np.ndarray

    def kappa_bc(self, axis: int) -> np.ndarray:
        """kappa along one axis, shaped to broadcast over the full grid."""
        shape = [1] * self.grid.dim
        shape[axis] = self.grid.dims[axis]
        return self.kappa[axis].reshape(shape)


def make_symbols(grid: UnitCellGrid, mode: str = EXACT) -> SpectralSymbols:
    if mode not in SYMBOL_MODES:
        raise ValueError(f"unknown symbol mode {mode!r}, expected one of {SYMBOL_MODES}")
    kappas = []
    lap_terms = []
    for axis, (n, h) in enumerate(zip(grid.dims, grid.spacing)):
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n)  # 2*pi * integer frequency
        if mode == EXACT:
            kappa = k.copy()
            lap_1d = k**2
        else:
            kappa = np.sin(h * k) / h
            lap_1d = 4.0 * np.sin(0.5 * h * k) ** 2 / h**2
        if n % 2 == 0:
            kappa[n // 2] = 0.0  # Nyquist first derivative maps real to real
        shape = [1] * grid.dim
        shape[axis] = n
        kappas.append(kappa)
        lap_terms.append(lap_1d.reshape(shape))
    lap = np.zeros(grid.dims)
    kappa_sq = np.zeros(grid.dims)
    for axis, (kappa, lap_1d) in enumerate(zip(kappas, lap_terms)):
        shape = [1] * grid.dim
        shape[axis] = grid.dims[axis]
        lap += lap_1d
        kappa_sq += kappa.reshape(shape) ** 2
    return SpectralSymbols(grid, mode, tuple(kappas), lap, kappa_sq)


def fft(field: np.ndarray, grid: UnitCellGrid) -> np.ndarray:
    """Forward transform over the grid axes (component axes lead, if any)."""
    axes = tuple(range(field.ndim - grid.dim, field.ndim))
    return sp_fft.fftn(field, axes=axes, workers=fft_workers())


def ifft(coeffs: np.ndarray, grid: UnitCellGrid) -> np.ndarray:
    """Inverse transform, truncated to its real part.

    Spectral data produced from real fields carries an imaginary residue at
    round-off level only (checked by the test suite), so the truncation is
    lossless in practice.
    """
    axes = tuple(range(coeffs.ndim - grid.dim, coeffs.ndim))
    return sp_fft.ifftn(coeffs, axes=axes, workers=fft_workers()).real


def grad(chi_hat: np.ndarray, symbols: SpectralSymbols) -> np.ndarray:
    """Spectral gradient of a scalar: component j is ``1j*kappa_j*chi_hat``."""
    d = symbols.grid.dim
    out = np.empty((d, *chi_hat.shape), dtype=complex)
    for axis in range(d):
        np.multiply(1j * symbols.kappa_bc(axis), chi_hat, out=out[axis])
    return out


def div(v_hat: np.ndarray, symbols: SpectralSymbols) -> np.ndarray:
    """Spectral divergence of a vector: ``sum_j 1j*kappa_j*v_hat[j]``."""
    d = symbols.grid.dim
    out = 1j * symbols.kappa_bc(0) * v_hat[0]
    for axis in range(1, d):
        out += 1j * symbols.kappa_bc(axis) * v_hat[axis]
    return out


def apply_laplacian(chi_hat: np.ndarray, symbols: SpectralSymbols) -> np.ndarray:
    """Spectral Laplacian: ``-L(k) * chi_hat``."""
    return -symbols.lap * chi_hat


def gradient_field(field: np.ndarray, grid: UnitCellGrid, symbols: SpectralSymbols) -> np.ndarray:
    """Real-space gradient of a real scalar field via the symbol route."""
    return ifft(grad(fft(field, grid), symbols), grid)
