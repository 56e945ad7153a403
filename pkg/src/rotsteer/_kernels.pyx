# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops. Mirrors ``_kernels_py`` in semantics."""

from libc.math cimport cos, sin, floor, fabs, M_PI


def accumulate_fractional_delays(double[:, ::1] out, const double[::1] delays,
                                 const double[:, ::1] gains, int half_width):
    """Add Hann-windowed sinc impulses ``gains[i]`` at ``delays[i]`` into ``out``."""
    cdef Py_ssize_t n_img = delays.shape[0]
    cdef Py_ssize_t n_out = out.shape[0]
    cdef Py_ssize_t n_ch = out.shape[1]
    cdef Py_ssize_t i, n, c, base, lo, hi
    cdef double tau, x, h, hw = half_width
    cdef double s_pi, w_c, w_s, w_c1, w_s1, tmp
    cdef double step_c = cos(M_PI / hw), step_s = sin(M_PI / hw)
    if gains.shape[0] != n_img or gains.shape[1] != n_ch:
        raise ValueError("gains must have shape (len(delays), out.shape[1])")
    with nogil:
        for i in range(n_img):
            tau = delays[i]
            base = <Py_ssize_t>floor(tau)
            lo = base - half_width + 1
            hi = base + half_width
            if lo < 0:
                lo = 0
            if hi > n_out - 1:
                hi = n_out - 1
            if lo > hi:
                continue
            x = lo - tau
            # sin(pi x) flips sign per unit step; the window phase rotates by pi/hw
            s_pi = sin(M_PI * x)
            w_c = cos(M_PI * x / hw)
            w_s = sin(M_PI * x / hw)
            for n in range(lo, hi + 1):
                if fabs(x) >= hw:
                    h = 0.0
                elif fabs(x) < 1e-12:
                    h = 1.0
                elif fabs(x) < 1.0:
                    # near the peak the flipped sine loses relative accuracy
                    h = sin(M_PI * x) / (M_PI * x) * 0.5 * (1.0 + w_c)
                else:
                    h = s_pi / (M_PI * x) * 0.5 * (1.0 + w_c)
                if h != 0.0:
                    for c in range(n_ch):
                        out[n, c] += h * gains[i, c]
                x += 1.0
                s_pi = -s_pi
                tmp = w_c * step_c - w_s * step_s
                w_s = w_s * step_c + w_c * step_s
                w_c = tmp
