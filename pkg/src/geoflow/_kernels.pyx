# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: channel Jacobian, batched tridiagonal solves, rigid RK4.

Mirrors geoflow._kernels_py exactly; see that module for the math notes.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"


def arakawa_channel(double[:, ::1] psi, double[:, ::1] omega, double dx, double dy):
    cdef Py_ssize_t ny1 = psi.shape[0]
    cdef Py_ssize_t nx = psi.shape[1]
    cdef cnp.ndarray[double, ndim=2] out_arr = np.zeros((ny1, nx))
    cdef double[:, ::1] acc = out_arr
    cdef Py_ssize_t j, i, ip
    cdef double f00, f10, f01, f11, g00, g10, g01, g11
    cdef double ta1, ta2, tb1, tb2, mlo, mhi

    for j in range(ny1 - 1):
        for i in range(nx):
            ip = i + 1
            if ip == nx:
                ip = 0
            f00 = psi[j, i]; f10 = psi[j, ip]
            f01 = psi[j + 1, i]; f11 = psi[j + 1, ip]
            g00 = omega[j, i]; g10 = omega[j, ip]
            g01 = omega[j + 1, i]; g11 = omega[j + 1, ip]

            ta1 = (f10 - f00) * (g11 - g00) - (f11 - f00) * (g10 - g00)
            ta2 = (f11 - f00) * (g01 - g00) - (f01 - f00) * (g11 - g00)
            tb1 = (f10 - f00) * (g01 - g00) - (f01 - f00) * (g10 - g00)
            tb2 = (f11 - f10) * (g01 - g10) - (f01 - f10) * (g11 - g10)

            acc[j, i] += ta1 + ta2 + tb1
            acc[j, ip] += ta1 + tb1 + tb2
            acc[j + 1, ip] += ta1 + ta2 + tb2
            acc[j + 1, i] += ta2 + tb1 + tb2

    mlo = 6.0 * dx * dy          # wall rows
    mhi = 12.0 * dx * dy         # interior rows
    for i in range(nx):
        acc[0, i] /= mlo
        acc[ny1 - 1, i] /= mlo
    for j in range(1, ny1 - 1):
        for i in range(nx):
            acc[j, i] /= mhi
    return out_arr


def thomas_factor(double[:, ::1] lower, double[:, ::1] diag, double[:, ::1] upper):
    cdef Py_ssize_t nsys = diag.shape[0]
    cdef Py_ssize_t n = diag.shape[1]
    cdef cnp.ndarray[double, ndim=2] w_arr = np.zeros((nsys, n))
    cdef cnp.ndarray[double, ndim=2] d_arr = np.asarray(diag).copy()
    cdef double[:, ::1] w = w_arr
    cdef double[:, ::1] d = d_arr
    cdef Py_ssize_t s, j
    for s in range(nsys):
        for j in range(1, n):
            w[s, j] = lower[s, j] / d[s, j - 1]
            d[s, j] = diag[s, j] - w[s, j] * upper[s, j - 1]
    return w_arr, d_arr, np.asarray(upper).copy()


def thomas_solve(factors, double[:, ::1] rhs):
    w_arr, d_arr, u_arr = factors
    cdef double[:, ::1] w = w_arr
    cdef double[:, ::1] d = d_arr
    cdef double[:, ::1] u = u_arr
    cdef Py_ssize_t nsys = d.shape[0]
    cdef Py_ssize_t n = d.shape[1]
    cdef cnp.ndarray[double, ndim=2] x_arr = np.asarray(rhs).copy()
    cdef double[:, ::1] x = x_arr
    cdef Py_ssize_t s, j
    for s in range(nsys):
        for j in range(1, n):
            x[s, j] -= w[s, j] * x[s, j - 1]
        x[s, n - 1] /= d[s, n - 1]
        for j in range(n - 2, -1, -1):
            x[s, j] = (x[s, j] - u[s, j] * x[s, j + 1]) / d[s, j]
    return x_arr


cdef inline void _rhs(double* pi, double k, double p_k, double lam1,
                      double lam2, double i3big, double* out) noexcept nogil:
    cdef double w = ((1.0 - k) * pi[2] - p_k) / i3big
    out[0] = -pi[1] * pi[2] / lam2 + pi[1] * w
    out[1] = pi[0] * pi[2] / lam1 - pi[0] * w
    out[2] = (1.0 / lam2 - 1.0 / lam1) * pi[0] * pi[1]


def rigid_rk4_controlled(pi0, double k, double p_k, double lam1, double lam2,
                         double i3big, double dt, long nsteps, long stride):
    if stride < 1:
        stride = 1
    steps = list(range(0, nsteps + 1, stride))
    if steps[len(steps) - 1] != nsteps:
        steps.append(nsteps)
    cdef cnp.ndarray[double, ndim=2] out_arr = np.empty((len(steps), 3))
    cdef cnp.ndarray[double, ndim=1] ts_arr = np.empty(len(steps))
    cdef double[:, ::1] out = out_arr
    cdef double[::1] ts = ts_arr
    cdef cnp.ndarray[long, ndim=1] steps_arr = np.asarray(steps, dtype=np.int64)
    cdef long[::1] sv = steps_arr
    cdef double pi[3]
    cdef double tmp[3]
    cdef double k1[3]
    cdef double k2[3]
    cdef double k3[3]
    cdef double k4[3]
    cdef long step, si = 0, nsamp = len(steps)
    cdef int c
    p = np.asarray(pi0, dtype=float)
    pi[0] = p[0]; pi[1] = p[1]; pi[2] = p[2]

    for step in range(nsteps + 1):
        if si < nsamp and step == sv[si]:
            out[si, 0] = pi[0]; out[si, 1] = pi[1]; out[si, 2] = pi[2]
            ts[si] = step * dt
            si += 1
            if si == nsamp:
                break
        _rhs(pi, k, p_k, lam1, lam2, i3big, k1)
        for c in range(3):
            tmp[c] = pi[c] + 0.5 * dt * k1[c]
        _rhs(tmp, k, p_k, lam1, lam2, i3big, k2)
        for c in range(3):
            tmp[c] = pi[c] + 0.5 * dt * k2[c]
        _rhs(tmp, k, p_k, lam1, lam2, i3big, k3)
        for c in range(3):
            tmp[c] = pi[c] + dt * k3[c]
        _rhs(tmp, k, p_k, lam1, lam2, i3big, k4)
        for c in range(3):
            pi[c] = pi[c] + (dt / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c])
    return out_arr, ts_arr


def rigid_rk4_free(pi0, double q, double lam1, double lam2, double i3big,
                   double dt, long nsteps, long stride):
    return rigid_rk4_controlled(pi0, 0.0, q, lam1, lam2, i3big, dt, nsteps, stride)
