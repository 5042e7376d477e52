import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meanfield.core import ModelParams, Trajectory, validate
from meanfield.errors import ValidationError


def params(**kw):
    base = dict(alpha=1.0, theta=2.0, sigma=0.1, dt=1e-3, t_end=1.0, seed=0)
    base.update(kw)
    return ModelParams(**base)


def test_validate_accepts_good_params():
    p = params()
    assert validate(p) is p


@pytest.mark.parametrize("kw,field", [
    (dict(alpha=0.0), "alpha"),
    (dict(alpha=-1.0), "alpha"),
    (dict(theta=-0.5), "theta"),
    (dict(sigma=-0.1), "sigma"),
    (dict(dt=0.0), "dt"),
    (dict(dt=float("nan")), "dt"),
    (dict(t_end=1e-6), "t_end"),
    (dict(alpha=float("inf")), "alpha"),
    (dict(n_particles=0), "n_particles"),
])
def test_validate_names_first_violated_field(kw, field):
    with pytest.raises(ValidationError, match=field):
        validate(params(**kw))


def test_validate_alpha_zero_message():
    with pytest.raises(ValidationError, match="alpha must be > 0"):
        validate(params(alpha=0.0))


@given(alpha=st.floats(1e-6, 1e3), theta=st.floats(0, 1e3),
       sigma=st.floats(0, 1e2), dt=st.floats(1e-9, 1e-1))
def test_validate_roundtrips_valid_params(alpha, theta, sigma, dt):
    p = ModelParams(alpha=alpha, theta=theta, sigma=sigma, dt=dt,
                    t_end=10 * dt, seed=1)
    assert validate(p) is p


def test_trajectory_invariants():
    t = np.array([0.0, 0.1, 0.2])
    r = np.zeros((3, 2))
    traj = Trajectory(times=t, records=r, columns=("a", "b"), meta=params())
    assert len(traj) == 3
    assert traj.column("a").shape == (3,)
    with pytest.raises(ValidationError, match="strictly increasing"):
        Trajectory(times=np.array([0.0, 0.1, 0.1]), records=r,
                   columns=("a", "b"), meta=params())
    with pytest.raises(ValidationError, match="start at 0"):
        Trajectory(times=np.array([0.1, 0.2, 0.3]), records=r,
                   columns=("a", "b"), meta=params())
    with pytest.raises(ValidationError, match="equal length"):
        Trajectory(times=t, records=r[:2], columns=("a", "b"), meta=params())


def test_trajectory_is_immutable():
    traj = Trajectory(times=np.array([0.0, 1.0]), records=np.zeros((2, 1)),
                      columns=("x",), meta=params())
    with pytest.raises(ValueError):
        traj.times[0] = 5.0
