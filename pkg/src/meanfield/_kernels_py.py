"""Pure numpy/Python implementations of the hot kernels.

This module is the executable specification of the arithmetic: the C
extension (`_kernels.pyx`) mirrors every expression, operation order and
reduction tree so the two lanes produce bitwise-identical results.  Keep
the formulas in sync when editing either file.

Conventions shared by both lanes:
  * normals: SplitMix64 counter RNG + Box-Muller (see rng.py); particle i
    of replica `stream_id` uses substream i and draw index = global step.
  * sums over particles use the pairwise tree reduction `tree_sum`, so
    results do not depend on how work is split across threads.
  * precomputed step coefficients (sig_sq, c_mu, ...) are defined once
    here and identically in C; do not re-associate them.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import (derive_key, derive_keys, normals_at_step, cos_turn,
                  log_unit, _mix, _M64, _GAMMA, _TWO_NEG53, _TAU)

BACKEND_NAME = "python"


def _quiet(fn):
    # diverging trajectories overflow before the guard sees them; the C
    # lane is silent there, so this lane must be too
    def wrapped(*args, **kw):
        with np.errstate(over="ignore", invalid="ignore"):
            return fn(*args, **kw)
    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


def tree_sum(values: np.ndarray) -> float:
    """Pairwise tree sum with a fixed association (thread-count invariant)."""
    v = np.array(values, dtype=np.float64, copy=True)
    n = v.size
    if n == 0:
        return 0.0
    while n > 1:
        m = n // 2
        v[:m] = v[0:2 * m:2] + v[1:2 * m:2]
        if n & 1:
            v[m] = v[n - 1]
            n = m + 1
        else:
            n = m
    return float(v[0])


def _scalar_normal(key: int, k: int) -> float:
    a = _mix((key + ((2 * k + 1) * _GAMMA & _M64)) & _M64)
    b = _mix((key + ((2 * k + 2) * _GAMMA & _M64)) & _M64)
    u1 = ((a >> 11) + 1) * _TWO_NEG53
    u2 = (b >> 11) * _TWO_NEG53
    return math.sqrt(-2.0 * log_unit(u1)) * cos_turn(_TAU * u2)


# --- N-particle dissipative system (Euler-Maruyama) ------------------------

@_quiet
def particle_sim(x, mu, alpha, theta, sigma, dt, seed, stream_id,
                 step0, n_steps, stride, guard, noise_sign, out_m, out_mu):
    """Advance the particle system n_steps; record tree-mean(x) and mu
    every `stride` steps into out_m/out_mu.  Returns (mu, status) with
    status 1 if the divergence guard tripped.  x is updated in place."""
    n = x.shape[0]
    keys = derive_keys(seed, stream_id, np.arange(n, dtype=np.uint64))
    sq = math.sqrt(dt)
    sig_sq = sigma * sq
    c_mu = (alpha - theta) * dt
    c_dr = (theta * dt) / n
    c_ns = (theta * sig_sq) / n
    rec = 0
    for s in range(n_steps):
        xi = noise_sign * normals_at_step(keys, step0 + s)
        cube = x * x * x
        rest = x - cube
        s_drift = tree_sum(rest)
        s_noise = tree_sum(xi)
        x[:] = x + (rest - mu) * dt + sig_sq * xi
        mu = mu - c_mu * mu - c_dr * s_drift - c_ns * s_noise
        if (s + 1) % stride == 0:
            if not (np.all(np.isfinite(x)) and np.max(np.abs(x)) <= guard
                    and math.isfinite(mu)):
                return mu, 1, rec
            out_m[rec] = tree_sum(x) / n
            out_mu[rec] = mu
            rec += 1
    if not (np.all(np.isfinite(x)) and np.max(np.abs(x)) <= guard):
        return mu, 1, rec
    return mu, 0, rec


def particle_step_noise(x, mu, alpha, theta, sigma, dt, xi):
    """One explicit step with caller-supplied noise; returns (x', mu').

    Same arithmetic as one particle_sim step (used by tests and by the
    single-step public op)."""
    n = x.shape[0]
    sq = math.sqrt(dt)
    sig_sq = sigma * sq
    c_mu = (alpha - theta) * dt
    c_dr = (theta * dt) / n
    c_ns = (theta * sig_sq) / n
    cube = x * x * x
    rest = x - cube
    s_drift = tree_sum(rest)
    s_noise = tree_sum(xi)
    x_new = x + (rest - mu) * dt + sig_sq * xi
    mu_new = mu - c_mu * mu - c_dr * s_drift - c_ns * s_noise
    return x_new, mu_new


# --- ensembles of independent copies under a frozen field ------------------

SCHEME_EM = 0
SCHEME_RK4_DRIFT = 1


@_quiet
def ensemble_frozen_mu(x, mu_path, sigma, dt, seed, stream_id, substream0,
                       step0, n_steps, antithetic, scheme, out_mean):
    """Advance n independent copies of dx = (x - x^3 - mu(t)) dt + sigma dB.

    mu_path is indexed by absolute step (needs n_steps+1 entries for the
    RK4-drift scheme).  out_mean[s] receives tree-mean(x) after local step
    s (1-based; out_mean[0] is left untouched).  With antithetic=1, sample
    j shares the draws of substream (j>>1) with sign (-1)^j.
    Returns status (1 = diverged)."""
    n = x.shape[0]
    if antithetic:
        subs = substream0 + (np.arange(n, dtype=np.uint64) >> np.uint64(1))
        signs = 1.0 - 2.0 * (np.arange(n) & 1)
    else:
        subs = substream0 + np.arange(n, dtype=np.uint64)
        signs = None
    keys = derive_keys(seed, stream_id, subs)
    sq = math.sqrt(dt)
    sig_sq = sigma * sq
    hdt = 0.5 * dt
    dt6 = dt / 6.0
    for s in range(n_steps):
        xi = normals_at_step(keys, step0 + s)
        if signs is not None:
            xi = signs * xi
        if scheme == SCHEME_EM:
            m0 = mu_path[step0 + s]
            cube = x * x * x
            x[:] = x + ((x - cube) - m0) * dt + sig_sq * xi
        else:
            m0 = mu_path[step0 + s]
            m1 = mu_path[step0 + s + 1]
            mh = 0.5 * (m0 + m1)
            k1 = (x - x * x * x) - m0
            x2 = x + hdt * k1
            k2 = (x2 - x2 * x2 * x2) - mh
            x3 = x + hdt * k2
            k3 = (x3 - x3 * x3 * x3) - mh
            x4 = x + dt * k3
            k4 = (x4 - x4 * x4 * x4) - m1
            x[:] = x + dt6 * (((k1 + 2.0 * k2) + 2.0 * k3) + k4) + sig_sq * xi
        out_mean[s + 1] = tree_sum(x) / n
        if (s & 255) == 255 and not np.all(np.isfinite(x)):
            return 1
    if not np.all(np.isfinite(x)):
        return 1
    return 0


@_quiet
def chaos_pair(x, y, mu, mu_ref, alpha, theta, sigma, dt, seed, stream_id,
               step0, n_steps, out_sup):
    """Couple the N-particle system (x, mu) with N independent limit copies
    (y) driven by the frozen reference field mu_ref, sharing the Brownian
    increments per (particle, step).  Tracks sup_t |x_i - y_i| in out_sup.
    Returns (mu, status)."""
    n = x.shape[0]
    keys = derive_keys(seed, stream_id, np.arange(n, dtype=np.uint64))
    sq = math.sqrt(dt)
    sig_sq = sigma * sq
    c_mu = (alpha - theta) * dt
    c_dr = (theta * dt) / n
    c_ns = (theta * sig_sq) / n
    for s in range(n_steps):
        xi = normals_at_step(keys, step0 + s)
        cube = x * x * x
        rest = x - cube
        s_drift = tree_sum(rest)
        s_noise = tree_sum(xi)
        x[:] = x + (rest - mu) * dt + sig_sq * xi
        mu = mu - c_mu * mu - c_dr * s_drift - c_ns * s_noise
        ycube = y * y * y
        y[:] = y + ((y - ycube) - mu_ref[step0 + s]) * dt + sig_sq * xi
        np.maximum(out_sup, np.abs(x - y), out=out_sup)
        if (s & 255) == 255 and not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            return mu, 1
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        return mu, 1
    return mu, 0


# --- planar macroscopic ODE (classical RK4, fixed step) ---------------------

def _macro_field(x, mu, alpha, theta, sgn):
    cube = x * x * x
    fx = sgn * ((x - cube) - mu)
    fm = sgn * (theta * (cube - x) - (alpha - theta) * mu)
    return fx, fm


def _macro_step(x, mu, alpha, theta, dt, sgn, hdt, dt6):
    k1x, k1m = _macro_field(x, mu, alpha, theta, sgn)
    k2x, k2m = _macro_field(x + hdt * k1x, mu + hdt * k1m, alpha, theta, sgn)
    k3x, k3m = _macro_field(x + hdt * k2x, mu + hdt * k2m, alpha, theta, sgn)
    k4x, k4m = _macro_field(x + dt * k3x, mu + dt * k3m, alpha, theta, sgn)
    xn = x + dt6 * (((k1x + 2.0 * k2x) + 2.0 * k3x) + k4x)
    mn = mu + dt6 * (((k1m + 2.0 * k2m) + 2.0 * k3m) + k4m)
    return xn, mn, k1x, k1m


def macro_rk4(x, mu, alpha, theta, dt, n_steps, sgn, stride, out_x, out_mu):
    """Fixed-step RK4 for the planar flow; records every `stride` steps.
    Returns (x, mu, status, n_recorded)."""
    hdt = 0.5 * dt
    dt6 = dt / 6.0
    rec = 0
    for s in range(n_steps):
        x, mu, _, _ = _macro_step(x, mu, alpha, theta, dt, sgn, hdt, dt6)
        if (s + 1) % stride == 0:
            out_x[rec] = x
            out_mu[rec] = mu
            rec += 1
        if abs(x) > 1e6 or abs(mu) > 1e6:
            return x, mu, 1, rec
    return x, mu, 0, rec


def _hermite(u, p0, d0, p1, d1, dt):
    u2 = u * u
    u3 = u2 * u
    return ((2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * (dt * d0)
            + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * (dt * d1))


def _hermite_d(u, p0, d0, p1, d1, dt):
    u2 = u * u
    return ((6.0 * u2 - 6.0 * u) * p0 + (3.0 * u2 - 4.0 * u + 1.0) * (dt * d0)
            + (-6.0 * u2 + 6.0 * u) * p1 + (3.0 * u2 - 2.0 * u) * (dt * d1))


def macro_rk4_events(x, mu, alpha, theta, dt, n_steps, sgn, t0,
                     out_tc, out_xc, out_dir):
    """RK4 run that captures mu=0 section crossings (both directions) with
    cubic Hermite sub-step interpolation, and tracks the x-extremes.

    Returns (x, mu, n_cross, xmin, xmax, status).  Capture stops silently
    once the output arrays are full (callers size them generously)."""
    hdt = 0.5 * dt
    dt6 = dt / 6.0
    max_c = out_tc.shape[0]
    nc = 0
    xmin = x
    xmax = x
    for s in range(n_steps):
        xn, mn, f0x, f0m = _macro_step(x, mu, alpha, theta, dt, sgn, hdt, dt6)
        if (mu < 0.0 and mn >= 0.0) or (mu > 0.0 and mn <= 0.0):
            if nc < max_c:
                f1x, f1m = _macro_field(xn, mn, alpha, theta, sgn)
                u = mu / (mu - mn)
                for _ in range(8):
                    h = _hermite(u, mu, f0m, mn, f1m, dt)
                    hd = _hermite_d(u, mu, f0m, mn, f1m, dt)
                    if hd != 0.0:
                        u = u - h / hd
                    if u < 0.0:
                        u = 0.0
                    elif u > 1.0:
                        u = 1.0
                out_tc[nc] = t0 + (s + u) * dt
                out_xc[nc] = _hermite(u, x, f0x, xn, f1x, dt)
                out_dir[nc] = 1 if mn >= mu else -1
                nc += 1
        x, mu = xn, mn
        if x < xmin:
            xmin = x
        if x > xmax:
            xmax = x
        if abs(x) > 1e6 or abs(mu) > 1e6:
            return x, mu, nc, xmin, xmax, 1
    return x, mu, nc, xmin, xmax, 0
