"""Noiseless macroscopic flow: equilibria, limit cycles, and phase structure.

The planar ODE

    dx/dt  = -x^3 + x - mu
    dmu/dt = -(alpha - theta) mu + theta (x^3 - x)

always has the three equilibria (0,0) (a saddle) and (+-1, 0).  Depending
on theta it sits in one of three phases: only fixed points attract, fixed
points coexist with a large stable cycle (bounded by two small unstable
cycles), or the cycle is the single attractor.  The two phase boundaries
are a global (homoclinic) threshold theta1, located here by bisection on
a cycle-detection indicator, and the local threshold alpha + 2 where the
trace of the linearization at (+-1, 0) changes sign.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import ModelParams, Trajectory
from .errors import InconclusiveError, NumericalError, ValidationError

EQUILIBRIA = ((0.0, 0.0), (1.0, 0.0), (-1.0, 0.0))
DEFAULT_DT = 1e-3
CYCLE_TOL = 1e-6
EQUILIBRIUM_TOL = 1e-8
TRANSIENT = 100.0
MAX_DETECT_TIME = 1e4
# below this orbit size a Cauchy section sequence is a focus spiraling in,
# not a cycle (genuine Hopf cycles this small need |theta-(alpha+2)| ~ 1e-8)
MIN_CYCLE_AMPLITUDE = 1e-4


@dataclass(frozen=True)
class MacroState:
    x: float
    mu: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.mu)):
            raise ValidationError("MacroState components must be finite")


@dataclass(frozen=True)
class CycleRecord:
    """A detected periodic orbit.

    section_point is the (x, 0) fixed point of the mu=0 Poincare return
    map; amplitude is max(x) - min(x) over one period; `surrounds` lists
    the equilibria enclosed by the orbit; stable=False marks orbits found
    by time-reversed integration.
    """

    period: float
    section_point: MacroState
    amplitude: float
    stable: bool
    surrounds: tuple
    closure_defect: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValidationError("period must be > 0")
        if not self.amplitude > 0:
            raise ValidationError("amplitude must be > 0")

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "section_point": [self.section_point.x, self.section_point.mu],
            "amplitude": self.amplitude,
            "stable": self.stable,
            "surrounds": [list(e) for e in self.surrounds],
            "closure_defect": self.closure_defect,
        }


class PhaseKind(enum.Enum):
    FIXED_POINTS = "FixedPoints"
    COEXISTENCE = "Coexistence"
    PERIODIC_ORBIT = "PeriodicOrbit"


@dataclass(frozen=True)
class Phase:
    kind: PhaseKind
    alpha: float
    theta: float
    theta1: float
    hopf: float
    cycles: tuple = ()
    grid_verified: bool = True
    mismatches: tuple = ()

    def __post_init__(self):
        if not (0.0 < self.theta1 < self.hopf):
            raise ValidationError(
                f"thresholds must satisfy 0 < theta1 < alpha+2, got "
                f"theta1={self.theta1}, hopf={self.hopf}")


def vector_field(s: MacroState, alpha: float, theta: float) -> tuple:
    """Right-hand side of the planar flow at s."""
    x, mu = s.x, s.mu
    return (-x ** 3 + x - mu, -(alpha - theta) * mu + theta * (x ** 3 - x))


def jacobian2(s: MacroState, alpha: float, theta: float):
    """Linearization at s: the 2x2 matrix, its eigenvalues (quadratic
    formula) and a stability tag in {saddle, stable, unstable, center-like}."""
    x = s.x
    J = np.array([[-3 * x ** 2 + 1, -1.0],
                  [theta * (3 * x ** 2 - 1), -(alpha - theta)]])
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = tr * tr - 4 * det
    if disc >= 0:
        r = math.sqrt(disc)
        eigs = (complex((tr + r) / 2), complex((tr - r) / 2))
    else:
        r = math.sqrt(-disc)
        eigs = (complex(tr / 2, r / 2), complex(tr / 2, -r / 2))
    if det < 0:
        tag = "saddle"
    elif tr < 0:
        tag = "stable"
    elif tr > 0:
        tag = "unstable"
    else:
        tag = "center-like"
    return J, eigs, tag


def lyapunov_W(s: MacroState, alpha: float, theta: float) -> tuple:
    """Trapping function W = x^2/2 + (theta x + mu)^2 / (2 alpha theta) and
    its total derivative along the flow."""
    if theta <= 0:
        raise ValidationError("lyapunov_W requires theta > 0")
    x, mu = s.x, s.mu
    w = 0.5 * x ** 2 + (theta * x + mu) ** 2 / (2 * alpha * theta)
    dw = -x ** 4 + (1 + theta) * x ** 2 - (theta * x + mu) ** 2 / theta
    return w, dw


def integrate(init: MacroState, alpha: float, theta: float, t_end: float,
              dt: float = DEFAULT_DT, *, stride: int = 1) -> Trajectory:
    """Classical fixed-step RK4 trajectory of the planar flow."""
    if dt <= 0:
        raise ValidationError("dt must be > 0")
    n_steps = int(round(t_end / dt))
    n_rec = n_steps // stride
    out_x = np.empty(n_rec)
    out_mu = np.empty(n_rec)
    x, mu, status, rec = kernels.macro_rk4(
        init.x, init.mu, alpha, theta, dt, n_rec * stride, 1.0, stride,
        out_x, out_mu)
    if status:
        raise NumericalError(
            "macro trajectory left the trapping region; integrator failure")
    times = np.concatenate([[0.0], (np.arange(rec) + 1) * (stride * dt)])
    records = np.column_stack([
        np.concatenate([[init.x], out_x[:rec]]),
        np.concatenate([[init.mu], out_mu[:rec]]),
    ])
    meta = ModelParams(alpha=alpha, theta=theta, sigma=0.0, dt=dt,
                       t_end=max(t_end, dt))
    return Trajectory(times=times, records=records, columns=("x", "mu"),
                      meta=meta)


def _near_equilibrium(x: float, mu: float, tol: float):
    for ex, emu in EQUILIBRIA:
        if math.hypot(x - ex, mu - emu) < tol:
            return (ex, emu)
    return None


def _characterize(x0: float, alpha: float, theta: float, dt: float, sgn: float,
                  period_guess: float, cycle_tol: float):
    """One confirmation lap from the on-section point (x0, 0): returns
    (period, amplitude, surrounds, closure_defect) or None if the lap does
    not close."""
    max_steps = int(round(max(4.0 * period_guess, 10.0) / dt))
    tc = np.empty(64)
    xc = np.empty(64)
    dr = np.empty(64, dtype=np.int8)
    x, mu, nc, xmin, xmax, status = kernels.macro_rk4_events(
        x0, 0.0, alpha, theta, dt, max_steps, sgn, 0.0, tc, xc, dr)
    if status:
        raise NumericalError("characterization lap diverged")
    ups = [(tc[i], xc[i]) for i in range(nc) if dr[i] == 1]
    downs = [xc[i] for i in range(nc) if dr[i] == -1]
    if not ups:
        return None
    t_ret, x_ret = ups[0]
    defect = abs(x_ret - x0)
    if defect > cycle_tol:
        return None
    crossings = sorted([x0, downs[0]]) if downs else [x0, x0]
    surrounds = tuple(e for e in ((-1.0, 0.0), (0.0, 0.0), (1.0, 0.0))
                      if crossings[0] < e[0] < crossings[1])
    return t_ret, xmax - xmin, surrounds, defect


def detect_limit_cycle(init: MacroState, alpha: float, theta: float, *,
                       dt: float = DEFAULT_DT, transient: float = TRANSIENT,
                       max_time: float = MAX_DETECT_TIME,
                       cycle_tol: float = CYCLE_TOL,
                       equilibrium_tol: float = EQUILIBRIUM_TOL,
                       backward: bool = False):
    """Poincare-section cycle detection from one initial condition.

    Integrates past a transient, then watches successive up-crossings of
    the section {mu = 0}.  Returns a CycleRecord once the return points
    are Cauchy (last four gaps and their net drift below cycle_tol), None
    once the state is within equilibrium_tol of an equilibrium, and raises
    InconclusiveError if the horizon runs out undecided.  backward=True
    integrates the time-reversed field (how unstable cycles are found:
    time reversal makes them attracting).
    """
    sgn = -1.0 if backward else 1.0
    x, mu = init.x, init.mu
    if _near_equilibrium(x, mu, equilibrium_tol):
        return None
    n_tr = int(round(transient / dt))
    out = np.empty(0)
    x, mu, status, _ = kernels.macro_rk4(x, mu, alpha, theta, dt, n_tr, sgn,
                                         n_tr + 1, out, out)
    if status:
        raise NumericalError("transient integration diverged")

    chunk_t = 25.0
    n_chunk = int(round(chunk_t / dt))
    tc = np.empty(256)
    xc = np.empty(256)
    dr = np.empty(256, dtype=np.int8)
    ups_t: list = []
    ups_x: list = []
    t_now = transient
    while t_now < max_time:
        x, mu, nc, _, _, status = kernels.macro_rk4_events(
            x, mu, alpha, theta, dt, n_chunk, sgn, t_now, tc, xc, dr)
        if status:
            raise NumericalError("cycle detection integration diverged")
        t_now += chunk_t
        for i in range(nc):
            if dr[i] == 1:
                ups_t.append(tc[i])
                ups_x.append(xc[i])
        if _near_equilibrium(x, mu, equilibrium_tol):
            return None
        if len(ups_x) >= 5:
            gaps = np.abs(np.diff(ups_x[-5:]))
            drift = abs(ups_x[-1] - ups_x[-5])
            if np.all(gaps < cycle_tol) and drift < cycle_tol:
                period_guess = float(np.mean(np.diff(ups_t[-5:])))
                got = _characterize(ups_x[-1], alpha, theta, dt, sgn,
                                    period_guess, 10 * cycle_tol)
                if got is None:
                    continue
                period, amplitude, surrounds, defect = got
                if amplitude < MIN_CYCLE_AMPLITUDE:
                    return None  # focus on the section, not an orbit
                return CycleRecord(
                    period=period,
                    section_point=MacroState(ups_x[-1], 0.0),
                    amplitude=amplitude, stable=not backward,
                    surrounds=surrounds, closure_defect=defect)
    raise InconclusiveError(
        f"no verdict within t={max_time:g} (alpha={alpha}, theta={theta}, "
        f"init=({init.x}, {init.mu}), backward={backward})")


def find_theta1(alpha: float, tol: float = 1e-3, *, dt: float = DEFAULT_DT,
                init: MacroState | None = None,
                max_time: float = MAX_DETECT_TIME) -> float:
    """Homoclinic threshold theta1(alpha) by bisection on the indicator
    "a cycle attracts the far-outside initial point".

    The indicator is monotone in theta (rotated-field structure), which is
    checked at the bracket ends; a violation raises a diagnostic error.
    """
    if tol <= 0:
        raise ValidationError("tol must be > 0")
    start = init if init is not None else MacroState(3.0, 0.0)
    hopf = alpha + 2.0

    def has_cycle(theta: float) -> bool:
        rec = detect_limit_cycle(start, alpha, theta, dt=dt,
                                 max_time=max_time)
        return rec is not None

    lo = 1e-3 * hopf
    hi = hopf - 1e-3
    if has_cycle(lo):
        raise NumericalError(
            f"cycle detected at theta={lo}; indicator not monotone across "
            "the bracket (integrator tolerance too loose?)")
    if not has_cycle(hi):
        raise NumericalError(
            f"no cycle detected at theta={hi}; indicator not monotone "
            "across the bracket (integrator tolerance too loose?)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if has_cycle(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def classify_phase(alpha: float, theta: float, *, dt: float = DEFAULT_DT,
                   theta1_tol: float = 1e-3, grid_n: int = 5,
                   grid_extent: float = 2.0, verify: bool = True) -> Phase:
    """Phase of (alpha, theta) from the measured theta1 and the local
    threshold alpha+2, with an empirical attractor check over a grid of
    initial conditions.

    Any disagreement between the claimed attractor set and the grid
    verdicts is reported in `mismatches` (grid_verified=False).
    """
    if alpha <= 0:
        raise ValidationError("alpha must be > 0")
    theta1 = find_theta1(alpha, theta1_tol, dt=dt)
    hopf = alpha + 2.0
    if theta >= hopf:
        kind = PhaseKind.PERIODIC_ORBIT
    elif theta > theta1:
        kind = PhaseKind.COEXISTENCE
    else:
        kind = PhaseKind.FIXED_POINTS

    cycles: list = []
    mismatches: list = []
    if verify:
        pts = np.linspace(-grid_extent, grid_extent, grid_n)
        saw_cycle = False
        saw_noninvariant_eq = False
        for xi in pts:
            for mi in pts:
                s = MacroState(float(xi), float(mi))
                invariant = _near_equilibrium(s.x, s.mu, 1e-12) is not None
                rec = detect_limit_cycle(s, alpha, theta, dt=dt)
                if rec is not None:
                    saw_cycle = True
                    if not any(abs(c.period - rec.period) < 1e-3
                               for c in cycles):
                        cycles.append(rec)
                elif not invariant:
                    saw_noninvariant_eq = True
        if kind is PhaseKind.FIXED_POINTS and saw_cycle:
            mismatches.append("cycle detected although theta < theta1")
        if kind is not PhaseKind.FIXED_POINTS and not saw_cycle:
            mismatches.append("no cycle detected although theta > theta1")
        if kind is PhaseKind.PERIODIC_ORBIT and saw_noninvariant_eq:
            mismatches.append(
                "a non-invariant initial point converged to an equilibrium "
                "although theta >= alpha+2")
        if kind is PhaseKind.FIXED_POINTS and not saw_noninvariant_eq:
            mismatches.append("no equilibrium convergence in the fixed-point "
                              "phase")
    return Phase(kind=kind, alpha=alpha, theta=theta, theta1=theta1,
                 hopf=hopf, cycles=tuple(cycles),
                 grid_verified=not mismatches, mismatches=tuple(mismatches))
