# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twin of _kernels_py.py.

Every expression and reduction mirrors the numpy lane exactly; the test
suite asserts bitwise equality between the two.  Edit both files together.
"""

from libc.math cimport sqrt, fabs, isfinite, frexp, floor
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int8_t

import numpy as np

BACKEND_NAME = "c"

SCHEME_EM = 0
SCHEME_RK4_DRIFT = 1

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef double TWO_NEG53 = 2.0 ** -53
cdef double TAU = 6.283185307179586
cdef double LN2 = 0.6931471805599453
cdef double SQRT_HALF = 0.7071067811865476
cdef double TWO_OVER_PI = 0.6366197723675814
cdef double PIO2_HI = 1.5707963267948966
cdef double PIO2_LO = 6.123233995736766e-17


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t derive_key_c(uint64_t seed, uint64_t stream, uint64_t sub) noexcept nogil:
    cdef uint64_t h = mix64(seed + GAMMA)
    h = mix64(h ^ stream)
    h = mix64(h ^ sub)
    return h


# log/cos mirror rng._log_unit/_cos_turn: libm/numpy transcendentals differ
# by an occasional ulp, which would break the cross-lane bitwise contract.

cdef inline double log_unit_c(double u) noexcept nogil:
    cdef int e
    cdef double m = frexp(u, &e)
    cdef double t, t2, p
    if m < SQRT_HALF:
        m = 2.0 * m
        e = e - 1
    t = (m - 1.0) / (m + 1.0)
    t2 = t * t
    p = t2 * (2.0 / 3.0 + t2 * (2.0 / 5.0 + t2 * (2.0 / 7.0 + t2 * (
        2.0 / 9.0 + t2 * (2.0 / 11.0 + t2 * (2.0 / 13.0 + t2 * (
            2.0 / 15.0 + t2 * (2.0 / 17.0 + t2 * (2.0 / 19.0)))))))))
    return e * LN2 + (2.0 * t + t * p)


cdef inline double cos_poly_c(double r2) noexcept nogil:
    return 1.0 - r2 * (1.0 / 2.0 - r2 * (1.0 / 24.0 - r2 * (1.0 / 720.0 - r2 * (
        1.0 / 40320.0 - r2 * (1.0 / 3628800.0 - r2 * (1.0 / 479001600.0 - r2 * (
            1.0 / 87178291200.0 - r2 * (1.0 / 20922789888000.0))))))))


cdef inline double sin_poly_c(double r, double r2) noexcept nogil:
    return r * (1.0 - r2 * (1.0 / 6.0 - r2 * (1.0 / 120.0 - r2 * (1.0 / 5040.0 - r2 * (
        1.0 / 362880.0 - r2 * (1.0 / 39916800.0 - r2 * (1.0 / 6227020800.0 - r2 * (
            1.0 / 1307674368000.0))))))))


cdef inline double cos_turn_c(double w) noexcept nogil:
    cdef double k = floor(w * TWO_OVER_PI + 0.5)
    cdef double r = (w - k * PIO2_HI) - k * PIO2_LO
    cdef double r2 = r * r
    cdef int q = (<int> k) & 3
    if q == 0:
        return cos_poly_c(r2)
    if q == 1:
        return -sin_poly_c(r, r2)
    if q == 2:
        return -cos_poly_c(r2)
    return sin_poly_c(r, r2)


cdef inline double normal_at(uint64_t key, uint64_t k) noexcept nogil:
    cdef uint64_t a = mix64(key + (2 * k + 1) * GAMMA)
    cdef uint64_t b = mix64(key + (2 * k + 2) * GAMMA)
    cdef double u1 = (<double> ((a >> 11) + 1)) * TWO_NEG53
    cdef double u2 = (<double> (b >> 11)) * TWO_NEG53
    return sqrt(-2.0 * log_unit_c(u1)) * cos_turn_c(TAU * u2)


cdef double tree_sum_c(double* buf, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t m, i
    if n == 0:
        return 0.0
    while n > 1:
        m = n // 2
        for i in range(m):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
        if n & 1:
            buf[m] = buf[n - 1]
            n = m + 1
        else:
            n = m
    return buf[0]


def tree_sum(values):
    v = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] mv = v
    cdef Py_ssize_t n = mv.shape[0]
    cdef double* buf = <double*> malloc(n * sizeof(double)) if n else NULL
    cdef Py_ssize_t i
    cdef double out
    if n == 0:
        return 0.0
    for i in range(n):
        buf[i] = mv[i]
    out = tree_sum_c(buf, n)
    free(buf)
    return out


def particle_sim(double[::1] x, double mu, double alpha, double theta,
                 double sigma, double dt, seed, stream_id,
                 long step0, long n_steps, long stride, double guard,
                 double noise_sign, double[::1] out_m, double[::1] out_mu):
    cdef Py_ssize_t n = x.shape[0]
    cdef uint64_t useed = <uint64_t> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t ustream = <uint64_t> (int(stream_id) & 0xFFFFFFFFFFFFFFFF)
    cdef double sq = sqrt(dt)
    cdef double sig_sq = sigma * sq
    cdef double c_mu = (alpha - theta) * dt
    cdef double c_dr = (theta * dt) / n
    cdef double c_ns = (theta * sig_sq) / n
    cdef uint64_t* keys = <uint64_t*> malloc(n * sizeof(uint64_t))
    cdef double* xi = <double*> malloc(n * sizeof(double))
    cdef double* scratch = <double*> malloc(n * sizeof(double))
    cdef Py_ssize_t i
    cdef long s, rec = 0
    cdef int status = 0
    cdef double cube, rest, s_drift, s_noise, amax
    try:
        with nogil:
            for i in range(n):
                keys[i] = derive_key_c(useed, ustream, <uint64_t> i)
            for s in range(n_steps):
                for i in range(n):
                    xi[i] = noise_sign * normal_at(keys[i], <uint64_t> (step0 + s))
                for i in range(n):
                    scratch[i] = x[i] - x[i] * x[i] * x[i]
                s_drift = tree_sum_c(scratch, n)
                for i in range(n):
                    scratch[i] = xi[i]
                s_noise = tree_sum_c(scratch, n)
                for i in range(n):
                    cube = x[i] * x[i] * x[i]
                    rest = x[i] - cube
                    x[i] = x[i] + (rest - mu) * dt + sig_sq * xi[i]
                mu = mu - c_mu * mu - c_dr * s_drift - c_ns * s_noise
                if (s + 1) % stride == 0:
                    amax = 0.0
                    for i in range(n):
                        if not isfinite(x[i]):
                            amax = guard + 1.0
                            break
                        if fabs(x[i]) > amax:
                            amax = fabs(x[i])
                    if amax > guard or not isfinite(mu):
                        status = 1
                        break
                    for i in range(n):
                        scratch[i] = x[i]
                    out_m[rec] = tree_sum_c(scratch, n) / n
                    out_mu[rec] = mu
                    rec += 1
            if status == 0:
                amax = 0.0
                for i in range(n):
                    if not isfinite(x[i]):
                        amax = guard + 1.0
                        break
                    if fabs(x[i]) > amax:
                        amax = fabs(x[i])
                if amax > guard:
                    status = 1
    finally:
        free(keys)
        free(xi)
        free(scratch)
    return mu, status, rec


def ensemble_frozen_mu(double[::1] x, double[::1] mu_path, double sigma,
                       double dt, seed, stream_id, substream0,
                       long step0, long n_steps, int antithetic, int scheme,
                       double[::1] out_mean):
    cdef Py_ssize_t n = x.shape[0]
    cdef uint64_t useed = <uint64_t> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t ustream = <uint64_t> (int(stream_id) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t usub0 = <uint64_t> (int(substream0) & 0xFFFFFFFFFFFFFFFF)
    cdef double sq = sqrt(dt)
    cdef double sig_sq = sigma * sq
    cdef double hdt = 0.5 * dt
    cdef double dt6 = dt / 6.0
    cdef uint64_t* keys = <uint64_t*> malloc(n * sizeof(uint64_t))
    cdef double* sgn = <double*> malloc(n * sizeof(double))
    cdef double* xi = <double*> malloc(n * sizeof(double))
    cdef double* scratch = <double*> malloc(n * sizeof(double))
    cdef Py_ssize_t i
    cdef long s
    cdef int status = 0, bad
    cdef double m0, m1, mh, k1, k2, k3, k4, x2, x3, x4, cube
    try:
        with nogil:
            for i in range(n):
                if antithetic:
                    keys[i] = derive_key_c(useed, ustream, usub0 + (<uint64_t> i >> 1))
                    sgn[i] = 1.0 - 2.0 * (i & 1)
                else:
                    keys[i] = derive_key_c(useed, ustream, usub0 + <uint64_t> i)
                    sgn[i] = 1.0
            for s in range(n_steps):
                if antithetic:
                    for i in range(n):
                        xi[i] = sgn[i] * normal_at(keys[i], <uint64_t> (step0 + s))
                else:
                    for i in range(n):
                        xi[i] = normal_at(keys[i], <uint64_t> (step0 + s))
                if scheme == 0:
                    m0 = mu_path[step0 + s]
                    for i in range(n):
                        cube = x[i] * x[i] * x[i]
                        x[i] = x[i] + ((x[i] - cube) - m0) * dt + sig_sq * xi[i]
                else:
                    m0 = mu_path[step0 + s]
                    m1 = mu_path[step0 + s + 1]
                    mh = 0.5 * (m0 + m1)
                    for i in range(n):
                        k1 = (x[i] - x[i] * x[i] * x[i]) - m0
                        x2 = x[i] + hdt * k1
                        k2 = (x2 - x2 * x2 * x2) - mh
                        x3 = x[i] + hdt * k2
                        k3 = (x3 - x3 * x3 * x3) - mh
                        x4 = x[i] + dt * k3
                        k4 = (x4 - x4 * x4 * x4) - m1
                        x[i] = x[i] + dt6 * (((k1 + 2.0 * k2) + 2.0 * k3) + k4) + sig_sq * xi[i]
                for i in range(n):
                    scratch[i] = x[i]
                out_mean[s + 1] = tree_sum_c(scratch, n) / n
                if (s & 255) == 255:
                    bad = 0
                    for i in range(n):
                        if not isfinite(x[i]):
                            bad = 1
                            break
                    if bad:
                        status = 1
                        break
            if status == 0:
                for i in range(n):
                    if not isfinite(x[i]):
                        status = 1
                        break
    finally:
        free(keys)
        free(sgn)
        free(xi)
        free(scratch)
    return status


def chaos_pair(double[::1] x, double[::1] y, double mu, double[::1] mu_ref,
               double alpha, double theta, double sigma, double dt,
               seed, stream_id, long step0, long n_steps, double[::1] out_sup):
    cdef Py_ssize_t n = x.shape[0]
    cdef uint64_t useed = <uint64_t> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t ustream = <uint64_t> (int(stream_id) & 0xFFFFFFFFFFFFFFFF)
    cdef double sq = sqrt(dt)
    cdef double sig_sq = sigma * sq
    cdef double c_mu = (alpha - theta) * dt
    cdef double c_dr = (theta * dt) / n
    cdef double c_ns = (theta * sig_sq) / n
    cdef uint64_t* keys = <uint64_t*> malloc(n * sizeof(uint64_t))
    cdef double* xi = <double*> malloc(n * sizeof(double))
    cdef double* scratch = <double*> malloc(n * sizeof(double))
    cdef Py_ssize_t i
    cdef long s
    cdef int status = 0, bad
    cdef double cube, rest, s_drift, s_noise, ycube, d
    try:
        with nogil:
            for i in range(n):
                keys[i] = derive_key_c(useed, ustream, <uint64_t> i)
            for s in range(n_steps):
                for i in range(n):
                    xi[i] = normal_at(keys[i], <uint64_t> (step0 + s))
                for i in range(n):
                    scratch[i] = x[i] - x[i] * x[i] * x[i]
                s_drift = tree_sum_c(scratch, n)
                for i in range(n):
                    scratch[i] = xi[i]
                s_noise = tree_sum_c(scratch, n)
                for i in range(n):
                    cube = x[i] * x[i] * x[i]
                    rest = x[i] - cube
                    x[i] = x[i] + (rest - mu) * dt + sig_sq * xi[i]
                mu = mu - c_mu * mu - c_dr * s_drift - c_ns * s_noise
                for i in range(n):
                    ycube = y[i] * y[i] * y[i]
                    y[i] = y[i] + ((y[i] - ycube) - mu_ref[step0 + s]) * dt + sig_sq * xi[i]
                for i in range(n):
                    d = fabs(x[i] - y[i])
                    if d > out_sup[i]:
                        out_sup[i] = d
                if (s & 255) == 255:
                    bad = 0
                    for i in range(n):
                        if not (isfinite(x[i]) and isfinite(y[i])):
                            bad = 1
                            break
                    if bad:
                        status = 1
                        break
            if status == 0:
                for i in range(n):
                    if not (isfinite(x[i]) and isfinite(y[i])):
                        status = 1
                        break
    finally:
        free(keys)
        free(xi)
        free(scratch)
    return mu, status


cdef inline void macro_field_c(double x, double mu, double alpha, double theta,
                               double sgn, double* fx, double* fm) noexcept nogil:
    cdef double cube = x * x * x
    fx[0] = sgn * ((x - cube) - mu)
    fm[0] = sgn * (theta * (cube - x) - (alpha - theta) * mu)


cdef inline void macro_step_c(double x, double mu, double alpha, double theta,
                              double dt, double sgn, double hdt, double dt6,
                              double* xn, double* mn, double* f0x, double* f0m) noexcept nogil:
    cdef double k1x, k1m, k2x, k2m, k3x, k3m, k4x, k4m
    macro_field_c(x, mu, alpha, theta, sgn, &k1x, &k1m)
    macro_field_c(x + hdt * k1x, mu + hdt * k1m, alpha, theta, sgn, &k2x, &k2m)
    macro_field_c(x + hdt * k2x, mu + hdt * k2m, alpha, theta, sgn, &k3x, &k3m)
    macro_field_c(x + dt * k3x, mu + dt * k3m, alpha, theta, sgn, &k4x, &k4m)
    xn[0] = x + dt6 * (((k1x + 2.0 * k2x) + 2.0 * k3x) + k4x)
    mn[0] = mu + dt6 * (((k1m + 2.0 * k2m) + 2.0 * k3m) + k4m)
    f0x[0] = k1x
    f0m[0] = k1m


def macro_rk4(double x, double mu, double alpha, double theta, double dt,
              long n_steps, double sgn, long stride,
              double[::1] out_x, double[::1] out_mu):
    cdef double hdt = 0.5 * dt
    cdef double dt6 = dt / 6.0
    cdef long s, rec = 0
    cdef int status = 0
    cdef double xn, mn, f0x, f0m
    with nogil:
        for s in range(n_steps):
            macro_step_c(x, mu, alpha, theta, dt, sgn, hdt, dt6, &xn, &mn, &f0x, &f0m)
            x = xn
            mu = mn
            if (s + 1) % stride == 0:
                out_x[rec] = x
                out_mu[rec] = mu
                rec += 1
            if fabs(x) > 1e6 or fabs(mu) > 1e6:
                status = 1
                break
    return x, mu, status, rec


cdef inline double hermite_c(double u, double p0, double d0, double p1,
                             double d1, double dt) noexcept nogil:
    cdef double u2 = u * u
    cdef double u3 = u2 * u
    return ((2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * (dt * d0)
            + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * (dt * d1))


cdef inline double hermite_d_c(double u, double p0, double d0, double p1,
                               double d1, double dt) noexcept nogil:
    cdef double u2 = u * u
    return ((6.0 * u2 - 6.0 * u) * p0 + (3.0 * u2 - 4.0 * u + 1.0) * (dt * d0)
            + (-6.0 * u2 + 6.0 * u) * p1 + (3.0 * u2 - 2.0 * u) * (dt * d1))


def macro_rk4_events(double x, double mu, double alpha, double theta,
                     double dt, long n_steps, double sgn, double t0,
                     double[::1] out_tc, double[::1] out_xc, int8_t[::1] out_dir):
    cdef double hdt = 0.5 * dt
    cdef double dt6 = dt / 6.0
    cdef Py_ssize_t max_c = out_tc.shape[0]
    cdef Py_ssize_t nc = 0
    cdef long s
    cdef int status = 0, it
    cdef double xmin = x, xmax = x
    cdef double xn, mn, f0x, f0m, f1x, f1m, u, h, hd
    with nogil:
        for s in range(n_steps):
            macro_step_c(x, mu, alpha, theta, dt, sgn, hdt, dt6, &xn, &mn, &f0x, &f0m)
            if (mu < 0.0 and mn >= 0.0) or (mu > 0.0 and mn <= 0.0):
                if nc < max_c:
                    macro_field_c(xn, mn, alpha, theta, sgn, &f1x, &f1m)
                    u = mu / (mu - mn)
                    for it in range(8):
                        h = hermite_c(u, mu, f0m, mn, f1m, dt)
                        hd = hermite_d_c(u, mu, f0m, mn, f1m, dt)
                        if hd != 0.0:
                            u = u - h / hd
                        if u < 0.0:
                            u = 0.0
                        elif u > 1.0:
                            u = 1.0
                    out_tc[nc] = t0 + (s + u) * dt
                    out_xc[nc] = hermite_c(u, x, f0x, xn, f1x, dt)
                    out_dir[nc] = 1 if mn >= mu else -1
                    nc += 1
            x = xn
            mu = mn
            if x < xmin:
                xmin = x
            if x > xmax:
                xmax = x
            if fabs(x) > 1e6 or fabs(mu) > 1e6:
                status = 1
                break
    return x, mu, nc, xmin, xmax, status
