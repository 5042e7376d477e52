"""Small-noise Gaussian closure: 3-d moment flow, fluctuation process,
equilibria and their spectra, and the noise-excitability threshold.

Closing the moment hierarchy at second order gives the ODE system

    dm/dt  = -m^3 + m - nu - 3 sigma^2 m V
    dnu/dt = -alpha nu - theta dm/dt
    dV/dt  = 1 + 2 (1 - 3 m^2) V - 6 sigma^2 V^2

coupled to the centered Gauss-Markov fluctuation dz = (1 - 3m^2
- 3 sigma^2 V) z dt + dB whose variance is exactly V(t).  The approximate
path is y = m + sigma z.  Raising sigma destabilizes the polarized
equilibria s1/s2 through a complex pair crossing the imaginary axis; the
crossing point sigma_c and the closed-form slope of Re(lambda) in sigma^2
are computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import ModelParams, validate
from .errors import DivergedRunError, InconclusiveError, NumericalError, ValidationError
from .rng import RngStream, derive_keys, gaussian_block, normals_at_step

S1_SIGMA_MAX = 1.0 / math.sqrt(3.0)


@dataclass(frozen=True)
class GaussState:
    """(mean, field, variance-factor) point; V >= 0 is preserved by the
    flow (at V=0 the V-derivative is 1)."""

    m: float
    nu: float
    V: float

    def __post_init__(self):
        if self.V < 0:
            raise ValidationError(f"V must be >= 0, got {self.V}")


@dataclass
class GaussPath:
    """Recorded closure path plus one fluctuation sample: columns
    (t, m, nu, V, z, y) with y = m + sigma z."""

    times: np.ndarray
    m: np.ndarray
    nu: np.ndarray
    V: np.ndarray
    z: np.ndarray
    y: np.ndarray
    params: ModelParams
    stride: int = 1


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues of the closure Jacobian at one point.

    residual is the largest relative defect of the characteristic
    polynomial over the three eigenvalues (< 1e-10 by construction).
    """

    label: str
    point: GaussState
    eigenvalues: tuple
    max_real_part: float
    stable: bool
    residual: float

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "point": [self.point.m, self.point.nu, self.point.V],
            "eigenvalues": [[ev.real, ev.imag] for ev in self.eigenvalues],
            "max_real_part": self.max_real_part,
            "stable": self.stable,
            "residual": self.residual,
        }


def gauss_vector_field(s: GaussState, alpha: float, theta: float,
                       sigma: float) -> tuple:
    """(dm/dt, dnu/dt, dV/dt); dnu/dt composes the freshly computed dm/dt."""
    m, nu, V = s.m, s.nu, s.V
    s2 = sigma * sigma
    dm = -m ** 3 + m - nu - 3 * s2 * m * V
    dnu = -alpha * nu - theta * dm
    dV = 1 + 2 * (1 - 3 * m ** 2) * V - 6 * s2 * V ** 2
    return dm, dnu, dV


def equilibrium_point(label: str, sigma: float) -> GaussState:
    """Closed-form equilibrium of the closure flow.

    Cancellation-free forms are used so s1/s2 remain well-defined in the
    sigma -> 0 limit (V -> 1/4).  s3..s5 genuinely diverge there.
    """
    s2 = sigma * sigma
    if label in ("s1", "s2", "s3", "s4"):
        rad = 1.0 - 3.0 * s2
        if rad < -1e-12:
            raise ValidationError(
                f"{label} exists only for sigma^2 <= 1/3, got sigma={sigma}")
        r = math.sqrt(max(rad, 0.0))
        if label in ("s1", "s2"):
            m = math.sqrt((1.0 + r) / 2.0)
            V = 1.0 / (2.0 * (1.0 + r))
            return GaussState(m if label == "s1" else -m, 0.0, V)
        if sigma == 0:
            raise ValidationError(f"{label} requires sigma > 0")
        m = sigma * math.sqrt(3.0 / (2.0 * (1.0 + r)))
        V = (1.0 + r) / (6.0 * s2)
        return GaussState(-m if label == "s3" else m, 0.0, V)
    if label == "s5":
        if sigma <= 0:
            raise ValidationError("s5 requires sigma > 0")
        return GaussState(0.0, 0.0, (1.0 + math.sqrt(1.0 + 6.0 * s2)) / (6.0 * s2))
    raise ValidationError(f"unknown equilibrium label {label!r}")


def gauss_equilibria(alpha: float, theta: float, sigma: float) -> list:
    """All closure equilibria at this sigma: s1..s4 when sigma^2 <= 1/3,
    s5 always (sigma > 0).  Each point is verified against the field."""
    if sigma <= 0:
        raise ValidationError("gauss_equilibria requires sigma > 0")
    labels = ["s1", "s2", "s3", "s4"] if sigma * sigma <= 1.0 / 3.0 else []
    labels.append("s5")
    out = []
    for lab in labels:
        pt = equilibrium_point(lab, sigma)
        dm, dnu, dV = gauss_vector_field(pt, alpha, theta, sigma)
        scale = max(1.0, 1.0 + 2.0 * pt.V + 6.0 * sigma ** 2 * pt.V ** 2)
        if max(abs(dm), abs(dnu), abs(dV)) > 1e-12 * scale:
            raise NumericalError(f"equilibrium {lab} fails the field check")
        out.append((lab, pt))
    return out


def _jacobian_matrix(pt: GaussState, alpha: float, theta: float,
                     sigma: float) -> np.ndarray:
    m, V = pt.m, pt.V
    s2 = sigma * sigma
    a11 = 1.0 - 3.0 * m * m - 3.0 * s2 * V
    a12 = -1.0
    a13 = -3.0 * s2 * m
    return np.array([
        [a11, a12, a13],
        [-theta * a11, -alpha + theta, -theta * a13],
        [-12.0 * m * V, 0.0, 2.0 * (1.0 - 3.0 * m * m) - 12.0 * s2 * V],
    ])


def _cubic_roots(c2: float, c1: float, c0: float) -> tuple:
    """Roots of lambda^3 + c2 lambda^2 + c1 lambda + c0 (analytic, then one
    Newton polish per root)."""
    p = c1 - c2 * c2 / 3.0
    q = 2.0 * c2 ** 3 / 27.0 - c2 * c1 / 3.0 + c0
    shift = c2 / 3.0
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        r = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 + r) ** (1.0 / 3.0), -q / 2.0 + r)
        v = math.copysign(abs(-q / 2.0 - r) ** (1.0 / 3.0), -q / 2.0 - r)
        t1 = u + v
        re = -t1 / 2.0
        im = (math.sqrt(3.0) / 2.0) * (u - v)
        roots = [complex(t1, 0.0), complex(re, im), complex(re, -im)]
    else:
        mag = 2.0 * math.sqrt(max(-p / 3.0, 0.0))
        if mag == 0.0:
            roots = [complex(0.0)] * 3
        else:
            arg = 3.0 * q / (p * mag)
            arg = min(1.0, max(-1.0, arg))
            phi = math.acos(arg)
            roots = [complex(mag * math.cos((phi - 2.0 * math.pi * k) / 3.0))
                     for k in range(3)]
    out = []
    for t in roots:
        lam = t - shift
        for _ in range(2):  # Newton polish on the original cubic
            f = ((lam + c2) * lam + c1) * lam + c0
            fp = (3.0 * lam + 2.0 * c2) * lam + c1
            if fp != 0:
                lam = lam - f / fp
        out.append(lam)
    return tuple(out)


def gauss_jacobian(point: GaussState, alpha: float, theta: float,
                   sigma: float, *, label: str = "custom",
                   cross_check: bool = False) -> SpectrumReport:
    """Spectrum of the closure Jacobian at `point`.

    Eigenvalues come from the analytic characteristic cubic; with
    cross_check=True they are verified against a companion-matrix solve
    (guards branch mistakes near the imaginary axis).
    """
    J = _jacobian_matrix(point, alpha, theta, sigma)
    tr = J[0, 0] + J[1, 1] + J[2, 2]
    m12 = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    m13 = J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
    m23 = J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1]
    det = (J[2, 0] * (J[0, 1] * J[1, 2] - J[0, 2] * J[1, 1])
           - J[2, 1] * (J[0, 0] * J[1, 2] - J[0, 2] * J[1, 0])
           + J[2, 2] * (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]))
    c2, c1, c0 = -tr, m12 + m13 + m23, -det
    eigs = _cubic_roots(c2, c1, c0)
    res = 0.0
    for lam in eigs:
        val = abs(((lam + c2) * lam + c1) * lam + c0)
        scale = max(1.0, abs(lam) ** 3 + abs(c2) * abs(lam) ** 2
                    + abs(c1) * abs(lam) + abs(c0))
        res = max(res, val / scale)
    if res > 1e-10:
        raise NumericalError(f"eigenvalue residual {res:.2e} exceeds 1e-10")
    if cross_check:
        ref = np.linalg.eigvals(J)
        for lam in eigs:
            if np.min(np.abs(ref - lam)) > 1e-8 * max(1.0, abs(lam)):
                raise NumericalError(
                    "analytic eigenvalues disagree with companion solve")
    maxre = max(ev.real for ev in eigs)
    return SpectrumReport(label=label, point=point, eigenvalues=eigs,
                          max_real_part=maxre, stable=maxre < 0.0,
                          residual=res)


def spectrum_at(label: str, alpha: float, theta: float, sigma: float,
                **kw) -> SpectrumReport:
    """gauss_jacobian evaluated at the named closed-form equilibrium."""
    return gauss_jacobian(equilibrium_point(label, sigma), alpha, theta,
                          sigma, label=label, **kw)


def eigenvalue_branch(alpha: float, theta: float,
                      sigmas: np.ndarray, label: str = "s1") -> np.ndarray:
    """Eigenvalues along a sigma sweep, paired by nearest-neighbor
    continuation so each column is a continuous branch lambda(sigma)."""
    out = np.empty((len(sigmas), 3), dtype=complex)
    prev = None
    for i, sg in enumerate(sigmas):
        eigs = list(spectrum_at(label, alpha, theta, float(sg)).eigenvalues)
        if prev is None:
            eigs.sort(key=lambda ev: (ev.imag, ev.real))
            out[i] = eigs
        else:
            take = []
            pool = eigs[:]
            for p in prev:
                j = int(np.argmin([abs(ev - p) for ev in pool]))
                take.append(pool.pop(j))
            out[i] = take
        prev = out[i]
    return out


def excitability_slope(alpha: float) -> float:
    """d Re(lambda) / d(sigma^2) at sigma=0, theta=alpha+2, for the complex
    pair at s1: 3(10 - alpha) / (2(8 + alpha))."""
    if alpha <= 0:
        raise ValidationError("alpha must be > 0")
    return 3.0 * (10.0 - alpha) / (2.0 * (8.0 + alpha))


def find_sigma_c(alpha: float, theta: float, *,
                 bracket: tuple = (1e-4, S1_SIGMA_MAX - 1e-4),
                 xtol: float = 1e-12):
    """Noise level where s1 (equivalently s2) loses linear stability:
    root of the maximal real part of the spectrum over the bracket.

    Returns None when the real part does not change sign on the bracket
    (the "not excitable" outcome, expected for theta far below alpha+2).
    """
    lo, hi = bracket
    if not (0 < lo < hi < S1_SIGMA_MAX):
        raise ValidationError("bracket must sit inside (0, 1/sqrt(3))")

    def f(sg: float) -> float:
        return spectrum_at("s1", alpha, theta, sg).max_real_part

    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        return None
    return float(brentq(f, lo, hi, xtol=xtol))


def s5_stability_threshold(alpha: float, theta: float) -> float:
    """Closed-form sigma above which s5 is linearly stable:
    sqrt((2/3)(alpha-theta)(alpha-theta-1)); requires the radicand > 0
    (theta > alpha + 2 guarantees it)."""
    rad = (2.0 / 3.0) * (alpha - theta) * (alpha - theta - 1.0)
    if rad <= 0:
        raise ValidationError(
            f"radicand (2/3)(alpha-theta)(alpha-theta-1) = {rad:g} <= 0")
    return math.sqrt(rad)


def s5_threshold_scan(alpha: float, theta: float, *,
                      span: float = 2.0, xtol: float = 1e-10) -> float:
    """Companion check: locate the sign change of max Re(lambda) at s5 by
    an eigenvalue scan around the closed-form value."""
    thr = s5_stability_threshold(alpha, theta)

    def f(sg: float) -> float:
        return spectrum_at("s5", alpha, theta, sg).max_real_part

    lo, hi = thr / span, thr * span
    if (f(lo) > 0) == (f(hi) > 0):
        raise InconclusiveError("no stability change near the s5 threshold")
    return float(brentq(f, lo, hi, xtol=xtol))


def simulate_gauss_path(init: tuple, params: ModelParams, rng: RngStream,
                        *, stride: int = 1) -> GaussPath:
    """Co-integrate the closure ODEs (RK4) with one fluctuation sample
    (Euler-Maruyama on the same grid, same dt), starting from
    (m, nu) = init, V(0) = z(0) = 0.

    The path records (t, m, nu, V, z, y) every `stride` steps.
    """
    params = validate(params)
    m, nu = float(init[0]), float(init[1])
    V, z = 0.0, 0.0
    sg = params.sigma
    s2 = sg * sg
    dt = params.dt
    hdt, dt6 = 0.5 * dt, dt / 6.0
    sq = math.sqrt(dt)
    n_steps = params.n_steps()
    n_rec = n_steps // stride
    times = np.empty(n_rec + 1)
    out = np.empty((n_rec + 1, 5))
    times[0] = 0.0
    out[0] = (m, nu, V, z, m + sg * z)

    alpha, theta = params.alpha, params.theta

    def f(mm, vv, VV):
        dm = -mm ** 3 + mm - vv - 3 * s2 * mm * VV
        return dm, -alpha * vv - theta * dm, 1 + 2 * (1 - 3 * mm ** 2) * VV - 6 * s2 * VV ** 2

    block = 4096
    xi_buf = gaussian_block(rng, 0, min(block, n_steps))
    buf_base = 0
    rec = 0
    for s in range(n_rec * stride):
        if s - buf_base >= xi_buf.size:
            buf_base = s
            xi_buf = gaussian_block(rng, s, min(block, n_steps - s))
        xi = xi_buf[s - buf_base]
        c = 1 - 3 * m ** 2 - 3 * s2 * V
        k1 = f(m, nu, V)
        k2 = f(m + hdt * k1[0], nu + hdt * k1[1], V + hdt * k1[2])
        k3 = f(m + hdt * k2[0], nu + hdt * k2[1], V + hdt * k2[2])
        k4 = f(m + dt * k3[0], nu + dt * k3[1], V + dt * k3[2])
        m += dt6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        nu += dt6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        V += dt6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        z = z + c * z * dt + sq * xi
        if (s + 1) % stride == 0:
            rec += 1
            times[rec] = (s + 1) * dt
            out[rec] = (m, nu, V, z, m + sg * z)
        if not (math.isfinite(m) and math.isfinite(V) and math.isfinite(z)):
            raise DivergedRunError("gauss path diverged; reduce dt")
    return GaussPath(times=times, m=out[:, 0], nu=out[:, 1], V=out[:, 2],
                     z=out[:, 3], y=out[:, 4], params=params, stride=stride)


def fluctuation_ensemble(path: GaussPath, rng: RngStream,
                         n_replicas: int) -> np.ndarray:
    """Evolve n_replicas independent fluctuation samples along the recorded
    (m, V) path (stride must be 1).  Returns z with shape
    (len(times), n_replicas); replica r uses substream r of rng's stream."""
    if path.stride != 1:
        raise ValidationError("fluctuation_ensemble needs a stride-1 path")
    sg = path.params.sigma
    s2 = sg * sg
    dt = path.params.dt
    sq = math.sqrt(dt)
    n_steps = len(path.times) - 1
    keys = derive_keys(rng.seed, rng.stream_id,
                       np.arange(n_replicas, dtype=np.uint64))
    z = np.zeros(n_replicas)
    out = np.empty((n_steps + 1, n_replicas))
    out[0] = z
    for s in range(n_steps):
        c = 1 - 3 * path.m[s] ** 2 - 3 * s2 * path.V[s]
        xi = normals_at_step(keys, s)
        z = z + c * z * dt + sq * xi
        out[s + 1] = z
    return out


def moment_residual(path: GaussPath, params: ModelParams) -> tuple:
    """Defects of the first two moment equations along a recorded path.

    Gaussian moment identities close the hierarchy: E[y^3] = m^3 +
    3 sigma^2 m V and E[y^4] = m^4 + 6 sigma^2 m^2 V + 3 sigma^4 V^2.  The
    discrete time derivative is the forward difference, so both defects
    shrink linearly with dt.  Returns (k=1 defect, k=2 defect), each the
    max over the path.
    """
    if path.stride != 1:
        raise ValidationError("moment_residual needs a stride-1 path")
    sg = params.sigma
    s2 = sg * sg
    dt = params.dt
    m, nu, V = path.m, path.nu, path.V
    M1 = m
    M2 = m ** 2 + s2 * V
    M3 = m ** 3 + 3 * s2 * m * V
    M4 = m ** 4 + 6 * s2 * m ** 2 * V + 3 * s2 ** 2 * V ** 2
    d1 = (M1[1:] - M1[:-1]) / dt - (-M3[:-1] + M1[:-1] - nu[:-1])
    d2 = (M2[1:] - M2[:-1]) / dt - (
        -2 * M4[:-1] + 2 * M2[:-1] + s2 - 2 * nu[:-1] * M1[:-1])
    return float(np.max(np.abs(d1))), float(np.max(np.abs(d2)))
