# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Fused 2D kernels for the solver inner loops.

Same contracts as ``poreflow.backends.pure``; each function fuses the
pointwise/per-mode arithmetic of one solver step into a single pass so the
iteration spends its time in FFTs instead of temporaries.  Loops over rows
run in OpenMP threads; every output element is written by exactly one
thread, so results are bit-identical for any thread count.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel import prange

NAME = "fused"


def stokes_velocity_update(q_hat, a_hat, ut_hat, kappas, lap, kappa_sq,
                           double nu, double beta, double b, g_p,
                           int num_threads=1):
    q_hat = np.ascontiguousarray(q_hat, dtype=np.complex128)
    a_hat = np.ascontiguousarray(a_hat, dtype=np.complex128)
    ut_hat = np.ascontiguousarray(ut_hat, dtype=np.complex128)
    kappa1 = np.ascontiguousarray(kappas[0], dtype=np.float64)
    kappa2 = np.ascontiguousarray(kappas[1], dtype=np.float64)
    lap = np.ascontiguousarray(lap, dtype=np.float64)
    kappa_sq = np.ascontiguousarray(kappa_sq, dtype=np.float64)
    u_hat = np.empty_like(a_hat)
    _stokes_velocity_update(q_hat, a_hat, ut_hat, kappa1, kappa2, lap,
                            kappa_sq, nu, beta, b,
                            float(g_p[0]), float(g_p[1]), u_hat, num_threads)
    return u_hat


cdef void _stokes_velocity_update(
        double complex[:, ::1] q_hat,
        double complex[:, :, ::1] a_hat,
        double complex[:, :, ::1] ut_hat,
        double[::1] kappa1, double[::1] kappa2,
        double[:, ::1] lap, double[:, ::1] kappa_sq,
        double nu, double beta, double b,
        double gp1, double gp2,
        double complex[:, :, ::1] u_hat,
        int num_threads) noexcept nogil:
    cdef Py_ssize_t i, j, n1 = q_hat.shape[0], n2 = q_hat.shape[1]
    cdef double complex r1, r2, kap_dot_r, corr
    cdef double k1, k2, big_a
    cdef double npts = <double>(n1 * n2)
    for i in prange(n1, num_threads=num_threads, schedule="static"):
        k1 = kappa1[i]
        for j in range(n2):
            k2 = kappa2[j]
            r1 = -1j * k1 * q_hat[i, j] - a_hat[0, i, j] + b * ut_hat[0, i, j]
            r2 = -1j * k2 * q_hat[i, j] - a_hat[1, i, j] + b * ut_hat[1, i, j]
            if i == 0 and j == 0:
                r1 = r1 + npts * gp1
                r2 = r2 + npts * gp2
            big_a = nu * lap[i, j] + b
            kap_dot_r = k1 * r1 + k2 * r2
            corr = (beta / (big_a + beta * kappa_sq[i, j])) * kap_dot_r
            u_hat[0, i, j] = (r1 - k1 * corr) / big_a
            u_hat[1, i, j] = (r2 - k2 * corr) / big_a


def aux_velocity_update(u, a, lam, solid, double alpha, double b,
                        int num_threads=1):
    u = np.ascontiguousarray(u, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    solid = np.ascontiguousarray(solid, dtype=np.float64)
    out = np.empty_like(u)
    _aux_velocity_update(u, a, lam, solid, alpha, b, out, num_threads)
    return out


cdef void _aux_velocity_update(
        double[:, :, ::1] u, double[:, :, ::1] a, double[:, :, ::1] lam,
        double[:, ::1] solid, double alpha, double b,
        double[:, :, ::1] out, int num_threads) noexcept nogil:
    cdef Py_ssize_t i, j, n1 = solid.shape[0], n2 = solid.shape[1]
    cdef double h, denom
    for i in prange(n1, num_threads=num_threads, schedule="static"):
        for j in range(n2):
            h = solid[i, j]
            denom = b + alpha * h
            out[0, i, j] = (a[0, i, j] + b * u[0, i, j] - h * lam[0, i, j]) / denom
            out[1, i, j] = (a[1, i, j] + b * u[1, i, j] - h * lam[1, i, j]) / denom


def multiplier_update(a, lam, u, u_tilde, solid, double alpha, double b,
                      int num_threads=1):
    a = np.ascontiguousarray(a, dtype=np.float64)
    lam = np.ascontiguousarray(lam, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    u_tilde = np.ascontiguousarray(u_tilde, dtype=np.float64)
    solid = np.ascontiguousarray(solid, dtype=np.float64)
    a_new = np.empty_like(a)
    lam_new = np.empty_like(lam)
    _multiplier_update(a, lam, u, u_tilde, solid, alpha, b, a_new, lam_new,
                       num_threads)
    return a_new, lam_new


cdef void _multiplier_update(
        double[:, :, ::1] a, double[:, :, ::1] lam,
        double[:, :, ::1] u, double[:, :, ::1] u_tilde,
        double[:, ::1] solid, double alpha, double b,
        double[:, :, ::1] a_new, double[:, :, ::1] lam_new,
        int num_threads) noexcept nogil:
    cdef Py_ssize_t c, i, j, n1 = solid.shape[0], n2 = solid.shape[1]
    cdef double h
    for i in prange(n1, num_threads=num_threads, schedule="static"):
        for j in range(n2):
            h = solid[i, j]
            for c in range(2):
                a_new[c, i, j] = a[c, i, j] + b * (u[c, i, j] - u_tilde[c, i, j])
                lam_new[c, i, j] = lam[c, i, j] + alpha * h * u_tilde[c, i, j]


def transport_polarization(grad_chi, diffusivity, advection, forcing,
                           double a0, b0_vec, g_chi, int num_threads=1):
    grad_chi = np.ascontiguousarray(grad_chi, dtype=np.float64)
    diffusivity = np.ascontiguousarray(diffusivity, dtype=np.float64)
    advection = np.ascontiguousarray(advection, dtype=np.float64)
    forcing = np.ascontiguousarray(forcing, dtype=np.float64)
    w = np.empty_like(grad_chi)
    s = np.empty_like(forcing)
    _transport_polarization(grad_chi, diffusivity, advection, forcing, a0,
                            float(b0_vec[0]), float(b0_vec[1]),
                            float(g_chi[0]), float(g_chi[1]), w, s,
                            num_threads)
    return w, s


cdef void _transport_polarization(
        double[:, :, ::1] grad_chi, double[:, ::1] diffusivity,
        double[:, :, ::1] advection, double[:, ::1] forcing,
        double a0, double b01, double b02, double g1, double g2,
        double[:, :, ::1] w, double[:, ::1] s,
        int num_threads) noexcept nogil:
    cdef Py_ssize_t i, j, n1 = forcing.shape[0], n2 = forcing.shape[1]
    cdef double contrast, t1, t2
    for i in prange(n1, num_threads=num_threads, schedule="static"):
        for j in range(n2):
            contrast = diffusivity[i, j] - a0
            t1 = grad_chi[0, i, j] + g1
            t2 = grad_chi[1, i, j] + g2
            w[0, i, j] = contrast * t1
            w[1, i, j] = contrast * t2
            s[i, j] = (forcing[i, j]
                       - (advection[0, i, j] - b01) * t1
                       - (advection[1, i, j] - b02) * t2)


def transport_mode_update(w_hat, s_hat, kappas, lap, double a0, b0_vec,
                          int num_threads=1):
    w_hat = np.ascontiguousarray(w_hat, dtype=np.complex128)
    s_hat = np.ascontiguousarray(s_hat, dtype=np.complex128)
    kappa1 = np.ascontiguousarray(kappas[0], dtype=np.float64)
    kappa2 = np.ascontiguousarray(kappas[1], dtype=np.float64)
    lap = np.ascontiguousarray(lap, dtype=np.float64)
    chi_hat = np.empty_like(s_hat)
    grad_hat = np.empty_like(w_hat)
    _transport_mode_update(w_hat, s_hat, kappa1, kappa2, lap, a0,
                           float(b0_vec[0]), float(b0_vec[1]),
                           chi_hat, grad_hat, num_threads)
    return chi_hat, grad_hat


cdef void _transport_mode_update(
        double complex[:, :, ::1] w_hat, double complex[:, ::1] s_hat,
        double[::1] kappa1, double[::1] kappa2, double[:, ::1] lap,
        double a0, double b01, double b02,
        double complex[:, ::1] chi_hat, double complex[:, :, ::1] grad_hat,
        int num_threads) noexcept nogil:
    cdef Py_ssize_t i, j, n1 = s_hat.shape[0], n2 = s_hat.shape[1]
    cdef double complex f_hat, denom, chi
    cdef double k1, k2
    for i in prange(n1, num_threads=num_threads, schedule="static"):
        k1 = kappa1[i]
        for j in range(n2):
            k2 = kappa2[j]
            f_hat = (s_hat[i, j]
                     + 1j * k1 * w_hat[0, i, j]
                     + 1j * k2 * w_hat[1, i, j])
            if i == 0 and j == 0:
                chi = 0.0
            else:
                denom = 1j * (b01 * k1 + b02 * k2) + a0 * lap[i, j]
                chi = f_hat / denom
            chi_hat[i, j] = chi
            grad_hat[0, i, j] = 1j * k1 * chi
            grad_hat[1, i, j] = 1j * k2 * chi
