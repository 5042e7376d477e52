import math

import numpy as np
import pytest
from scipy.integrate import quad

from meanfield.core import ModelParams
from meanfield.errors import CflError, ValidationError
from meanfield import fokker_planck as fp

# self-generated regression constant (adaptive Simpson at rel tol 1e-12,
# cross-checked against scipy.integrate.quad)
Z_STAR_SIGMA1 = 4.16574806894677


def params(**kw):
    base = dict(alpha=1.0, theta=0.5, sigma=0.5, dt=2.5e-4, t_end=1.0, seed=0)
    base.update(kw)
    return ModelParams(**base)


def gaussian_bump(width=0.5, center=0.0, n_cells=400, hi=4.0):
    qs, _ = fp.stationary_density(0.5, -hi, hi, n_cells)
    x = qs.midpoints()
    q = np.exp(-(x - center) ** 2 / (2 * width ** 2))
    q /= q.sum() * qs.dx
    return fp.GridDensity(lo=-hi, hi=hi, q=q)


def test_stationary_density_normalizer_regression():
    _, z = fp.stationary_density(1.0, z_rel_tol=1e-12)
    assert abs(z - Z_STAR_SIGMA1) < 1e-9
    oracle, err = quad(lambda x: math.exp(-0.5 * x ** 4 + x ** 2),
                       -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13)
    assert abs(z - oracle) < 1e-9


def test_stationary_density_small_sigma_in_log_space():
    # exp(0.5/sigma^2) overflows a double well before sigma = 0.02
    gd, z = fp.stationary_density(0.02, n_cells=4000)
    assert np.all(np.isfinite(gd.q))
    assert abs(gd.mass - 1.0) < 1e-6
    assert math.isinf(z)  # the normalizer overflows; the density must not


def test_stationary_pairing_is_exactly_zero():
    qs, _ = fp.stationary_density(0.5)
    sol = fp.FpSolver(fp.FpState(density=qs, mu=0.0), params())
    assert sol.pair_interaction() == 0.0


def test_domain_must_cover_core():
    with pytest.raises(ValidationError):
        fp.stationary_density(0.5, -2.0, 2.0, 100)


def test_truncation_warning_on_small_domain():
    with pytest.warns(UserWarning, match="truncates"):
        fp.stationary_density(5.0, -4.0, 4.0, 200)


def test_stationary_residual_second_order():
    r400 = fp.stationary_residual(1.0, n_cells=400)
    r800 = fp.stationary_residual(1.0, n_cells=800)
    assert r400 < 2e-4
    assert 3.4 < r400 / r800 < 4.6


def test_stationary_residual_negative_control():
    qs, _ = fp.stationary_density(1.0)
    clean = np.max(np.abs(fp.apply_fp_operator(qs.q, 0.0, 1.0)))
    off = np.max(np.abs(fp.apply_fp_operator(qs.q, 0.1, 1.0)))
    assert off > 50 * clean


def test_stationary_state_is_fixed_by_evolution():
    qs, _ = fp.stationary_density(0.5)
    st, _ = fp.evolve(fp.FpState(density=qs, mu=0.0), params(), t_end=1.0)
    assert fp.l1_distance(st.density, qs) < 5e-4
    assert abs(st.mu) < 1e-14


def test_symmetric_evolution_keeps_mu_zero_and_converges():
    st0 = fp.FpState(density=gaussian_bump(), mu=0.0)
    st, traj = fp.evolve(st0, params(), t_end=5.0)
    assert np.max(np.abs(traj.column("mu"))) < 1e-12
    qs, _ = fp.stationary_density(0.5)
    d5 = fp.l1_distance(st.density, qs)
    assert d5 < 0.02
    assert np.all(st.density.q >= 0.0)


def test_mass_conserved_tightly():
    st0 = fp.FpState(density=gaussian_bump(width=0.4), mu=0.0)
    _, traj = fp.evolve(st0, params(), t_end=2.0)
    masses = traj.column("mass")
    assert np.max(np.abs(masses - 1.0)) < 1e-10 * max(1.0, traj.times[-1])


def test_parity_equivariance_is_exact():
    rng = np.random.default_rng(5)
    q0 = rng.random(400) + 0.1
    q0 /= q0.sum() * (8.0 / 400)
    p = params()
    s1 = fp.FpSolver(fp.FpState(density=fp.GridDensity(-4, 4, q0), mu=0.3), p)
    s2 = fp.FpSolver(fp.FpState(density=fp.GridDensity(-4, 4, q0[::-1].copy()),
                                mu=-0.3), p)
    for _ in range(200):
        s1.step()
        s2.step()
    assert np.array_equal(s1.q, s2.q[::-1])
    assert s1.mu == -s2.mu


def test_moment_consistency_with_hierarchy():
    # d(m1)/dt tracks -m3 + m1 - mu within O(dt + dx^2)
    p = params(t_end=2.0)
    sol = fp.FpSolver(fp.FpState(density=gaussian_bump(width=0.3, center=0.4),
                                 mu=0.1), p)
    m1s, m3s, mus = [], [], []
    m1, _, m3 = sol.moments()
    m1s.append(m1)
    m3s.append(m3)
    mus.append(sol.mu)
    for _ in range(p.n_steps()):
        sol.step()
        m1, _, m3 = sol.moments()
        m1s.append(m1)
        m3s.append(m3)
        mus.append(sol.mu)
    m1s, m3s, mus = map(np.array, (m1s, m3s, mus))
    lhs = np.diff(m1s) / p.dt
    rhs = -m3s[:-1] + m1s[:-1] - mus[:-1]
    dx = 8.0 / 400
    assert np.max(np.abs(lhs - rhs)) < 2.0 * (p.dt + dx * dx)


def test_cfl_violation_raises():
    p = params(dt=5e-3)
    sol = fp.FpSolver(fp.FpState(density=gaussian_bump(), mu=0.0), p)
    with pytest.raises(CflError):
        sol.step()


def test_grid_density_validation():
    with pytest.raises(ValidationError):
        fp.GridDensity(lo=-4, hi=4, q=np.array([0.1, -0.2, 0.1, 0.1]))
    with pytest.raises(ValidationError):
        fp.GridDensity(lo=1.0, hi=4.0, q=np.ones(8))
    gd = fp.GridDensity(lo=-4, hi=4, q=np.full(400, 1.0 / 8.0))
    assert abs(gd.mass - 1.0) < 1e-12


def test_solver_requires_even_symmetric_grid():
    odd = fp.GridDensity(-4, 4, np.ones(11) / 8.0)
    with pytest.raises(ValidationError, match="even"):
        fp.FpSolver(fp.FpState(density=odd, mu=0.0), params())
    skew = fp.GridDensity(-3, 4, np.ones(14) / 7.0)
    with pytest.raises(ValidationError, match="symmetric"):
        fp.FpSolver(fp.FpState(density=skew, mu=0.0), params())
