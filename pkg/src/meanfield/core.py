"""Shared domain types: run parameters and recorded trajectories.

ModelParams is the single source of truth for a run; every simulation op
takes one. All values are 64-bit floats and immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters plus numerical controls for one run.

    alpha       dissipation rate of the interaction field (> 0)
    theta       interaction strength (>= 0)
    sigma       noise intensity (>= 0)
    n_particles particle count, only meaningful for particle runs (>= 1)
    dt          integrator step (> 0)
    t_end       time horizon (>= dt)
    seed        64-bit RNG seed
    """

    alpha: float
    theta: float
    sigma: float
    n_particles: int = 1
    dt: float = 1e-3
    t_end: float = 1.0
    seed: int = 0

    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_(self, **kw) -> "ModelParams":
        return validate(replace(self, **kw))


def validate(params: ModelParams) -> ModelParams:
    """Return params unchanged if every invariant holds.

    Raises ValidationError naming the first violated field.
    """
    for name in ("alpha", "theta", "sigma", "dt", "t_end"):
        v = getattr(params, name)
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValidationError(f"{name} must be a real number")
        if math.isnan(v) or math.isinf(v):
            raise ValidationError(f"{name} must be finite, got {v}")
    if params.alpha <= 0:
        raise ValidationError(f"alpha must be > 0, got {params.alpha}")
    if params.theta < 0:
        raise ValidationError(f"theta must be >= 0, got {params.theta}")
    if params.sigma < 0:
        raise ValidationError(f"sigma must be >= 0, got {params.sigma}")
    if not isinstance(params.n_particles, (int, np.integer)) or isinstance(
        params.n_particles, bool
    ):
        raise ValidationError("n_particles must be an integer")
    if params.n_particles < 1:
        raise ValidationError(f"n_particles must be >= 1, got {params.n_particles}")
    if params.dt <= 0:
        raise ValidationError(f"dt must be > 0, got {params.dt}")
    if params.t_end < params.dt:
        raise ValidationError(
            f"t_end must be >= dt, got t_end={params.t_end} dt={params.dt}"
        )
    if not isinstance(params.seed, (int, np.integer)) or isinstance(params.seed, bool):
        raise ValidationError("seed must be an integer")
    return params


@dataclass(frozen=True)
class Trajectory:
    """Recorded run: times (strictly increasing, starting at 0), one row of
    `records` per time, and the ModelParams that produced it."""

    times: np.ndarray
    records: np.ndarray
    columns: tuple
    meta: ModelParams

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        r = np.asarray(self.records, dtype=np.float64)
        if r.ndim == 1:
            r = r[:, None]
        if t.ndim != 1 or len(t) == 0:
            raise ValidationError("times must be a non-empty 1-d array")
        if t[0] != 0.0:
            raise ValidationError("times must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("times must be strictly increasing")
        if r.shape[0] != t.shape[0]:
            raise ValidationError("records and times must have equal length")
        if r.shape[1] != len(self.columns):
            raise ValidationError("records width must match columns")
        t.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "records", r)

    def column(self, name: str) -> np.ndarray:
        return self.records[:, self.columns.index(name)]

    def __len__(self) -> int:
        return len(self.times)
