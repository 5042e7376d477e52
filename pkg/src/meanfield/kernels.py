"""Backend selection for the hot kernels.

At import time the compiled extension is preferred; the numpy lane is the
fallback.  MEANFIELD_BACKEND=python forces the fallback (used by the
benchmark and the cross-lane equality tests).  Both lanes are bitwise
interchangeable.
"""

from __future__ import annotations

import os

from . import _kernels_py

_FORCED = os.environ.get("MEANFIELD_BACKEND", "").strip().lower()

if _FORCED in ("python", "py"):
    _impl = _kernels_py
elif _FORCED in ("c", "compiled", "ext"):
    from . import _kernels as _impl  # noqa: F401  (raises if unavailable)
else:
    try:
        from . import _kernels as _impl  # type: ignore
    except ImportError:
        _impl = _kernels_py


def active_backend() -> str:
    """'c' when the compiled extension is in use, else 'python'."""
    return _impl.BACKEND_NAME


def get_backend(name: str):
    """Fetch a specific lane ('c' or 'python'); raises if unavailable."""
    if name in ("python", "py"):
        return _kernels_py
    if name in ("c", "compiled", "ext"):
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


SCHEME_EM = _kernels_py.SCHEME_EM
SCHEME_RK4_DRIFT = _kernels_py.SCHEME_RK4_DRIFT

tree_sum = _impl.tree_sum
particle_sim = _impl.particle_sim
ensemble_frozen_mu = _impl.ensemble_frozen_mu
chaos_pair = _impl.chaos_pair
macro_rk4 = _impl.macro_rk4
macro_rk4_events = _impl.macro_rk4_events

# shared-code helpers that intentionally have a single implementation
particle_step_noise = _kernels_py.particle_step_noise
