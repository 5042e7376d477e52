import math

import numpy as np
import pytest

from meanfield.core import ModelParams
from meanfield.errors import ValidationError
from meanfield.gaussian import (GaussState, eigenvalue_branch,
                                equilibrium_point, excitability_slope,
                                find_sigma_c, fluctuation_ensemble,
                                gauss_equilibria, gauss_jacobian,
                                gauss_vector_field, moment_residual,
                                s5_stability_threshold, s5_threshold_scan,
                                simulate_gauss_path, spectrum_at)
from meanfield.macro import MacroState, detect_limit_cycle, integrate, vector_field
from meanfield.rng import RngStream


def test_field_documented_nonequilibrium_at_sigma_zero():
    # (1, 0, 3/2) is NOT a rest point of the sigma=0 flow; (1, 0, 1/4) is
    dm, dnu, dV = gauss_vector_field(GaussState(1.0, 0.0, 1.5), 1.0, 1.0, 0.0)
    assert dm == 0.0 and dV == -5.0
    dm, dnu, dV = gauss_vector_field(GaussState(1.0, 0.0, 0.25), 1.0, 1.0, 0.0)
    assert dm == 0.0 and dnu == 0.0 and dV == 0.0


def test_field_direct_substitution():
    out = gauss_vector_field(GaussState(2.0, 0.0, 0.0), 1.0, 1.0, 0.0)
    assert out == (-6.0, 6.0, 1.0)


def test_s5_annihilates_field():
    for sg in (0.3, 1.0, 3.0):
        s5 = equilibrium_point("s5", sg)
        out = gauss_vector_field(s5, 1.3, 2.2, sg)
        assert max(abs(v) for v in out) < 1e-12 * max(1.0, s5.V)


def test_equilibria_small_sigma_limits():
    # the closed forms give s1 -> (1, 0, 1/4) as sigma -> 0 (the V-equation
    # at m=1, sigma=0 fixes V = 1/4)
    s1 = equilibrium_point("s1", 0.0)
    assert (s1.m, s1.nu, s1.V) == (1.0, 0.0, 0.25)
    s1b = equilibrium_point("s1", 1e-8)
    assert abs(s1b.V - 0.25) < 1e-12 and abs(s1b.m - 1.0) < 1e-12


def test_equilibria_at_boundary_sigma():
    sg = 1.0 / math.sqrt(3.0)
    s1 = equilibrium_point("s1", sg)
    s4 = equilibrium_point("s4", sg)
    assert abs(s1.m - 1 / math.sqrt(2)) < 1e-9
    assert abs(s1.V - 0.5) < 1e-9
    assert abs(s4.m - s1.m) < 1e-9 and abs(s4.V - s1.V) < 1e-9


def test_s5_closed_form_at_sigma_one():
    s5 = equilibrium_point("s5", 1.0)
    assert abs(s5.V - (1 + math.sqrt(7.0)) / 6.0) < 1e-15


def test_gauss_equilibria_census():
    eqs = dict(gauss_equilibria(1.0, 2.0, 0.3))
    assert set(eqs) == {"s1", "s2", "s3", "s4", "s5"}
    assert eqs["s1"].m > 0 > eqs["s2"].m
    only5 = dict(gauss_equilibria(1.0, 2.0, 0.9))
    assert set(only5) == {"s5"}
    with pytest.raises(ValidationError):
        gauss_equilibria(1.0, 2.0, 0.0)


def test_spectrum_matches_closed_form_at_hopf():
    for alpha in (1.0, 2.0):
        rep = spectrum_at("s1", alpha, alpha + 2.0, 0.0)
        w = math.sqrt(2.0 * alpha)
        eigs = sorted(rep.eigenvalues, key=lambda z: (round(z.real, 6), z.imag))
        assert abs(eigs[0] - (-4.0)) < 1e-9
        assert abs(eigs[1] - complex(0.0, -w)) < 1e-9
        assert abs(eigs[2] - complex(0.0, w)) < 1e-9
        assert rep.residual < 1e-10


def test_spectrum_stable_below_hopf():
    rep = spectrum_at("s1", 1.0, 2.5, 0.0)
    assert rep.stable and rep.max_real_part < 0


def test_characteristic_polynomial_closed_form():
    # at theta = alpha + 2 the characteristic cubic has the closed form
    # -l^3 - 2(1+s)l^2 + [2 - a + 12 sg^2 - (a+2)s]l - 4as(1+s), s=sqrt(1-3sg^2)
    alpha, sg = 1.7, 0.3
    s = math.sqrt(1 - 3 * sg * sg)
    from meanfield.gaussian import _jacobian_matrix
    J = _jacobian_matrix(equilibrium_point("s1", sg), alpha, alpha + 2, sg)
    got = np.poly(J)
    want = [1.0, 2 * (1 + s), -(2 - alpha + 12 * sg * sg - (alpha + 2) * s),
            4 * alpha * s * (1 + s)]
    assert np.allclose(got, want, rtol=1e-12)


def test_jacobian_matches_finite_differences():
    from meanfield.gaussian import _jacobian_matrix
    pt = GaussState(0.7, -0.2, 0.9)
    alpha, theta, sg = 1.2, 2.7, 0.4
    J = _jacobian_matrix(pt, alpha, theta, sg)
    h = 1e-6
    for j, basis in enumerate(np.eye(3)):
        up = GaussState(*(np.array([pt.m, pt.nu, pt.V]) + h * basis))
        dn = GaussState(*(np.array([pt.m, pt.nu, pt.V]) - h * basis))
        fd = (np.array(gauss_vector_field(up, alpha, theta, sg))
              - np.array(gauss_vector_field(dn, alpha, theta, sg))) / (2 * h)
        assert np.allclose(J[:, j], fd, atol=1e-6)


def test_companion_cross_check_accepts():
    pt = GaussState(0.3, 0.1, 1.4)
    rep = gauss_jacobian(pt, 1.0, 2.0, 0.25, cross_check=True)
    assert rep.residual < 1e-10


def test_symmetric_equilibria_share_spectra():
    for (a, b) in (("s1", "s2"), ("s3", "s4")):
        ra = spectrum_at(a, 1.1, 2.9, 0.3)
        rb = spectrum_at(b, 1.1, 2.9, 0.3)
        ea = sorted(ra.eigenvalues, key=lambda z: (z.real, z.imag))
        eb = sorted(rb.eigenvalues, key=lambda z: (z.real, z.imag))
        assert all(abs(x - y) < 1e-12 for x, y in zip(ea, eb))


def test_excitability_slope_values():
    assert abs(excitability_slope(2.0) - 1.2) < 1e-15
    assert excitability_slope(10.0) == 0.0
    assert abs(excitability_slope(1.0) - 1.5) < 1e-15
    assert excitability_slope(11.0) < 0.0


def test_excitability_slope_matches_eigenvalue_tracking():
    for alpha in (1.0, 2.0, 5.0):
        sg = np.sqrt([1e-4, 2e-4])
        br = eigenvalue_branch(alpha, alpha + 2.0, sg)
        pair = br[:, np.argmax(np.abs(br[0].imag))]
        fd = (pair[1].real - pair[0].real) / 1e-4
        exact = excitability_slope(alpha)
        assert abs(fd - exact) / abs(exact) < 0.02


def test_sigma_c_found_near_hopf_and_absent_far_below():
    sc = find_sigma_c(1.0, 2.99)
    assert sc is not None and 0.0 < sc < 1 / math.sqrt(3.0)
    assert find_sigma_c(1.0, 0.5) is None


def test_sigma_c_symmetric_under_s2():
    from scipy.optimize import brentq
    sc1 = find_sigma_c(1.0, 2.99)

    def f(sg):
        return spectrum_at("s2", 1.0, 2.99, sg).max_real_part

    sc2 = brentq(f, 1e-4, 1 / math.sqrt(3) - 1e-4, xtol=1e-12)
    assert abs(sc1 - sc2) < 1e-9


def test_s5_threshold_formula_and_scan():
    assert abs(s5_stability_threshold(1.0, 4.0) - math.sqrt(8.0)) < 1e-14
    assert abs(s5_stability_threshold(1.0, 3.5) - math.sqrt(35.0 / 6.0)) < 1e-14
    with pytest.raises(ValidationError):
        s5_stability_threshold(1.0, 0.5)
    got = s5_threshold_scan(1.0, 4.0)
    assert abs(got - math.sqrt(8.0)) / math.sqrt(8.0) < 0.01


def test_gauss_path_tracks_deterministic_cycle():
    p = ModelParams(alpha=1.0, theta=3.5, sigma=0.1, dt=1e-3, t_end=80.0,
                    seed=0)
    path = simulate_gauss_path((1.0, 0.0), p, RngStream(0), stride=10)
    assert np.min(path.V) >= 0.0
    assert 0.1 < np.max(path.V) < 5.0  # order one for all times
    rec = detect_limit_cycle(MacroState(3.0, 0.0), 1.0, 3.5)
    lap = integrate(rec.section_point, 1.0, 3.5, rec.period, 1e-3, stride=2)
    cyc = np.column_stack([lap.column("x"), lap.column("mu")])
    tail = np.column_stack([path.m, path.nu])[len(path.m) // 2:]
    dists = np.sqrt(((tail[:, None, :] - cyc[None, :, :]) ** 2).sum(-1)).min(1)
    assert np.max(dists) < 0.15


def test_large_sigma_dichotomy():
    p = ModelParams(alpha=1.0, theta=4.0, sigma=3.0, dt=1e-3, t_end=80.0,
                    seed=0)
    assert p.sigma > s5_stability_threshold(1.0, 4.0)
    quiet = simulate_gauss_path((0.05, 0.0), p, RngStream(0), stride=10)
    s5 = equilibrium_point("s5", 3.0)
    assert abs(quiet.m[-1]) < 1e-3
    assert abs(quiet.V[-1] - s5.V) < 1e-6
    loud = simulate_gauss_path((2.0, 0.0), p, RngStream(0), stride=10)
    late = loud.m[len(loud.m) // 2:]
    assert 0.5 * (late.max() - late.min()) > 0.5


def test_sigma_zero_field_consistent_with_macro():
    rng = np.random.default_rng(2)
    for _ in range(50):
        m, nu = rng.uniform(-3, 3, 2)
        a, th = rng.uniform(0.2, 4), rng.uniform(0.0, 5)
        dm, dnu, _ = gauss_vector_field(GaussState(m, nu, rng.uniform(0, 2)),
                                        a, th, 0.0)
        fx, fm = vector_field(MacroState(m, nu), a, th)
        assert dm == fx
        # dnu composes -a*nu - th*dm; macro uses the expanded form: equal
        # up to a couple of ulps
        assert abs(dnu - fm) <= 4e-15 * max(1.0, abs(fm))


def test_variance_law_over_replicas():
    p = ModelParams(alpha=1.0, theta=2.0, sigma=0.3, dt=1e-3, t_end=5.0,
                    seed=11)
    path = simulate_gauss_path((0.8, 0.0), p, RngStream(11))
    z = fluctuation_ensemble(path, RngStream(11, stream_id=500), 1500)
    checkpoints = np.linspace(100, len(path.times) - 1, 10).astype(int)
    for idx in checkpoints:
        var = np.var(z[idx])
        v = path.V[idx]
        se = v * math.sqrt(2.0 / (z.shape[1] - 1))
        assert abs(var - v) < 3 * se


def test_moment_residual_zero_at_equilibrium():
    sg = 1.0
    s5 = equilibrium_point("s5", sg)
    p = ModelParams(alpha=1.0, theta=2.0, sigma=sg, dt=1e-3, t_end=1.0, seed=0)
    n = p.n_steps()
    from meanfield.gaussian import GaussPath
    const = GaussPath(times=np.arange(n + 1) * p.dt,
                      m=np.full(n + 1, s5.m), nu=np.full(n + 1, s5.nu),
                      V=np.full(n + 1, s5.V), z=np.zeros(n + 1),
                      y=np.full(n + 1, s5.m), params=p)
    d1, d2 = moment_residual(const, p)
    assert d1 < 1e-10 and d2 < 1e-10


def test_moment_residual_scales_linearly_with_dt():
    defects = []
    for dt in (1e-3, 5e-4):
        p = ModelParams(alpha=1.0, theta=2.0, sigma=0.2, dt=dt, t_end=5.0,
                        seed=3)
        path = simulate_gauss_path((0.8, 0.0), p, RngStream(3))
        d1, d2 = moment_residual(path, p)
        assert d1 < 10 * dt and d2 < 10 * dt
        defects.append((d1, d2))
    for k in range(2):
        ratio = defects[1][k] / defects[0][k]
        assert 0.4 < ratio < 0.6


def test_moment_residual_detects_corrupted_variance():
    p = ModelParams(alpha=1.0, theta=2.0, sigma=0.2, dt=1e-3, t_end=5.0,
                    seed=3)
    path = simulate_gauss_path((0.8, 0.0), p, RngStream(3))
    _, d2 = moment_residual(path, p)
    path.V = path.V * 1.1
    _, d2_bad = moment_residual(path, p)
    assert d2_bad > 10 * d2 and d2_bad > 5e-3


def test_path_initial_conditions():
    p = ModelParams(alpha=1.0, theta=2.0, sigma=0.2, dt=1e-3, t_end=1.0,
                    seed=0)
    path = simulate_gauss_path((0.3, -0.1), p, RngStream(0))
    assert path.m[0] == 0.3 and path.nu[0] == -0.1
    assert path.V[0] == 0.0 and path.z[0] == 0.0
