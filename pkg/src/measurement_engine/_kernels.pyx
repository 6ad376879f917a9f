# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory kernel; same arithmetic as ``_fallback.propagate``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, log, sqrt, copysign, M_PI

cnp.import_array()


def propagate(double x0, double y0, double z0, uniforms, normals,
              double dt_over_tau, bint keep_path=False):
    cdef const double[:, ::1] u = np.ascontiguousarray(uniforms, dtype=np.float64)
    cdef const double[:, ::1] nrm = np.ascontiguousarray(normals, dtype=np.float64)
    cdef Py_ssize_t n_traj = u.shape[0]
    cdef Py_ssize_t n_steps = u.shape[1]
    cdef double dt = dt_over_tau
    cdef double sigma = sqrt(1.0 / dt)
    cdef double log_norm = -0.5 * log(2.0 * M_PI / dt)
    cdef double ln2 = log(2.0)

    readouts_arr = np.empty((n_traj, n_steps))
    x_arr = np.empty(n_traj)
    y_arr = np.empty(n_traj)
    z_arr = np.empty(n_traj)
    logl_arr = np.empty(n_traj)
    cdef double[:, ::1] readouts = readouts_arr
    cdef double[::1] xo = x_arr
    cdef double[::1] yo = y_arr
    cdef double[::1] zo = z_arr
    cdef double[::1] lo = logl_arr

    path_arr = None
    cdef double[:, :, ::1] path
    if keep_path:
        path_arr = np.empty((n_traj, n_steps + 1, 3))
        path = path_arr

    cdef Py_ssize_t i, k
    cdef double x, y, z, logl, r, g, ag, e, a, c, s, d, scale, branch
    for i in range(n_traj):
        x = x0
        y = y0
        z = z0
        logl = 0.0
        if keep_path:
            path[i, 0, 0] = x
            path[i, 0, 1] = y
            path[i, 0, 2] = z
        for k in range(n_steps):
            branch = 1.0 if u[i, k] < 0.5 * (1.0 + x) else -1.0
            r = branch + sigma * nrm[i, k]
            readouts[i, k] = r
            g = dt * r
            ag = fabs(g)
            e = exp(-ag)
            a = e * e
            c = 1.0 + a
            s = copysign(1.0 - a, g)
            d = c + x * s
            scale = 2.0 * e / d
            x = (x * c + s) / d
            y = y * scale
            z = z * scale
            logl += log_norm - 0.5 * dt * (r * r + 1.0) + ag - ln2 + log(d)
            if keep_path:
                path[i, k + 1, 0] = x
                path[i, k + 1, 1] = y
                path[i, k + 1, 2] = z
        xo[i] = x
        yo[i] = y
        zo[i] = z
        lo[i] = logl

    return readouts_arr, x_arr, y_arr, z_arr, logl_arr, path_arr
