"""Reference numpy implementations of the per-iteration hot kernels.

Every function here has a compiled twin in ``_fused`` (2D only).  The
signatures are identical; the dispatcher in ``poreflow.backends`` picks one
implementation per solve.  These versions are dimension-agnostic and are
the fallback whenever the extension is unavailable or the grid is not 2D.

Array layout: scalars are shaped like the grid, vectors carry a leading
component axis.  ``kappas`` is one 1D symbol array per axis; ``lap`` and
``kappa_sq`` are full-grid arrays (see poreflow.spectral).
"""

from __future__ import annotations

import numpy as np

NAME = "pure"


def _kappa_bc(kappas, axis, ndim):
    shape = [1] * ndim
    shape[axis] = kappas[axis].size
    return kappas[axis].reshape(shape)


def stokes_velocity_update(
    q_hat, a_hat, ut_hat, kappas, lap, kappa_sq, nu, beta, b, g_p, num_threads=1
):
    """Mode-by-mode solve of the velocity stationarity system.

    With ``A = nu*L + b`` the per-mode matrix is ``M = A*I + beta*kap*kap^T``
    and the right-hand side ``r = g_p_hat - 1j*kap*q_hat - a_hat + b*ut_hat``
    (the mean force enters only the zero mode).  The rank-one structure gives
    the closed-form inverse
    ``M^{-1} r = (r - beta*kap*(kap.r)/(A + beta*|kap|^2)) / A``.
    """
    d = len(kappas)
    ndim = q_hat.ndim
    r = np.empty_like(a_hat)
    for c in range(d):
        np.multiply(-1j * _kappa_bc(kappas, c, ndim), q_hat, out=r[c])
        r[c] -= a_hat[c]
        r[c] += b * ut_hat[c]
    zero = (slice(None),) + (0,) * ndim
    r[zero] += q_hat.size * np.asarray(g_p)

    big_a = nu * lap + b
    kap_dot_r = np.zeros_like(q_hat)
    for c in range(d):
        kap_dot_r += _kappa_bc(kappas, c, ndim) * r[c]
    correction = (beta / (big_a + beta * kappa_sq)) * kap_dot_r
    u_hat = np.empty_like(r)
    for c in range(d):
        np.subtract(r[c], _kappa_bc(kappas, c, ndim) * correction, out=u_hat[c])
        u_hat[c] /= big_a
    return u_hat


def aux_velocity_update(u, a, lam, solid, alpha, b, num_threads=1):
    """Pointwise auxiliary-velocity solve: ``(a + b*u - solid*lam)/(b + alpha*solid)``."""
    return (a + b * u - solid * lam) / (b + alpha * solid)


def multiplier_update(a, lam, u, u_tilde, solid, alpha, b, num_threads=1):
    """Pointwise multiplier ascent for the coupling and solid constraints."""
    a_new = a + b * (u - u_tilde)
    lam_new = lam + alpha * (solid * u_tilde)
    return a_new, lam_new


def transport_polarization(grad_chi, diffusivity, advection, forcing,
                           a0, b0_vec, g_chi, num_threads=1):
    """Pointwise polarization terms of the comparison-medium split.

    Returns the flux ``w = (A - a0) * (grad_chi + g_chi)`` (divergence is
    taken spectrally by the caller) and the scalar part
    ``s = forcing - (B - b0) . (grad_chi + g_chi)``.
    """
    d = grad_chi.shape[0]
    w = np.empty_like(grad_chi)
    s = forcing.copy()
    contrast = diffusivity - a0
    for c in range(d):
        total_grad = grad_chi[c] + g_chi[c]
        np.multiply(contrast, total_grad, out=w[c])
        s -= (advection[c] - b0_vec[c]) * total_grad
    return w, s


def transport_mode_update(w_hat, s_hat, kappas, lap, a0, b0_vec, num_threads=1):
    """Per-mode concentration update of the comparison-medium iteration.

    Assembles ``F_hat = div_hat(w_hat) + s_hat``, divides by the uniform-medium
    symbol ``1j*(b0.kappa) + a0*L`` (zero mode pinned to zero: zero-mean gauge)
    and returns the new concentration coefficients with their gradient.
    """
    d = w_hat.shape[0]
    ndim = s_hat.ndim
    f_hat = s_hat.copy()
    for c in range(d):
        f_hat += 1j * _kappa_bc(kappas, c, ndim) * w_hat[c]

    b0_dot_kap = np.zeros(s_hat.shape)
    for c in range(d):
        b0_dot_kap = b0_dot_kap + b0_vec[c] * _kappa_bc(kappas, c, ndim)
    denom = 1j * b0_dot_kap + a0 * lap
    zero = (0,) * ndim
    denom[zero] = 1.0  # placeholder; the zero mode is pinned below
    chi_hat = f_hat / denom
    chi_hat[zero] = 0.0

    grad_hat = np.empty((d, *s_hat.shape), dtype=complex)
    for c in range(d):
        np.multiply(1j * _kappa_bc(kappas, c, ndim), chi_hat, out=grad_hat[c])
    return chi_hat, grad_hat
