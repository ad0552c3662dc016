# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled image-source kernel; mirrors roomcurve._pykernels exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, pow, floor, fabs, M_PI

cnp.import_array()

DEF HALF_TAPS = 8


cdef inline double _tap(double t) nogil:
    cdef double sinc
    if t == 0.0:
        sinc = 1.0
    else:
        sinc = sin(M_PI * t) / (M_PI * t)
    return sinc * 0.5 * (1.0 + cos(M_PI * t / HALF_TAPS))


def image_source_rir(double[::1] src, double[::1] mic, double[::1] dims,
                     double[::1] beta, int max_order, double fs, double c,
                     int pre_delay=0):
    """Image-source impulse response of a rectangular room."""
    cdef int nmax = max_order // 2 + 1
    cdef int side = 2 * nmax + 1
    cdef Py_ssize_t cap = 8 * side * side * side
    cdef double[::1] taus = np.empty(cap)
    cdef double[::1] amps = np.empty(cap)
    cdef Py_ssize_t count = 0, i
    cdef int qx, qy, qz, nx, ny, nz, ox, oy, oz
    cdef double amp, dx, dy, dz, d, tau, max_tau = 0.0

    for qx in range(2):
        for qy in range(2):
            for qz in range(2):
                for nx in range(-nmax, nmax + 1):
                    ox = abs(nx - qx) + abs(nx)
                    if ox > max_order:
                        continue
                    for ny in range(-nmax, nmax + 1):
                        oy = abs(ny - qy) + abs(ny)
                        if ox + oy > max_order:
                            continue
                        for nz in range(-nmax, nmax + 1):
                            oz = abs(nz - qz) + abs(nz)
                            if ox + oy + oz > max_order:
                                continue
                            amp = (pow(beta[0], abs(nx - qx)) * pow(beta[1], abs(nx))
                                   * pow(beta[2], abs(ny - qy)) * pow(beta[3], abs(ny))
                                   * pow(beta[4], abs(nz - qz)) * pow(beta[5], abs(nz)))
                            if amp == 0.0:
                                continue
                            dx = (1 - 2 * qx) * src[0] + 2 * nx * dims[0] - mic[0]
                            dy = (1 - 2 * qy) * src[1] + 2 * ny * dims[1] - mic[1]
                            dz = (1 - 2 * qz) * src[2] + 2 * nz * dims[2] - mic[2]
                            d = sqrt(dx * dx + dy * dy + dz * dz)
                            tau = d / c * fs + pre_delay
                            taus[count] = tau
                            amps[count] = amp / d
                            if tau > max_tau:
                                max_tau = tau
                            count += 1

    cdef Py_ssize_t length = <Py_ssize_t>floor(max_tau) + HALF_TAPS + 1
    out_arr = np.zeros(length)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t n, n0
    for i in range(count):
        tau = taus[i]
        n0 = <Py_ssize_t>floor(tau)
        for n in range(n0 - HALF_TAPS + 1, n0 + HALF_TAPS + 1):
            if n < 0:
                continue
            out[n] += amps[i] * _tap(n - tau)
    return out_arr
