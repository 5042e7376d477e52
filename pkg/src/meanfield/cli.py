"""Command-line entry point: every experiment behind one reproducible
surface.

Each subcommand writes its outputs plus a manifest.json (full effective
config, seed, artifact version, output list) into --out; re-running the
same subcommand with --config manifest.json reproduces the outputs
byte-for-byte.  Exit codes: 0 success, 1 invalid invocation or
parameters, 2 experiment inconclusive, 3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .core import ModelParams, validate
from .errors import InconclusiveError, NumericalError, ValidationError
from .io import dump_value, read_config, write_csv, write_json, write_manifest
from .kernels import active_backend
from .rng import RngStream
from . import fokker_planck as fp
from . import gaussian, macro, mckean, particles


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; keep 2 for experiments
        self.print_usage(sys.stderr)
        raise ValidationError(message)


# per-subcommand defaults beyond ModelParams
_DEFAULTS = {
    "particles": dict(alpha=1.0, theta=2.9, sigma=0.05, n_particles=1000,
                      dt=1e-3, t_end=200.0, seed=0, init="half-split",
                      stride=10, record_particles=False),
    "macro-ode": dict(alpha=1.0, theta=3.5, sigma=0.0, dt=1e-3, t_end=100.0,
                      seed=0, x0=3.0, mu0=0.0, stride=10),
    "phase": dict(alpha=1.0, theta=3.5, sigma=0.0, dt=1e-3, t_end=1.0,
                  seed=0, theta1_tol=1e-3, grid_n=5),
    "gauss": dict(alpha=1.0, theta=3.5, sigma=0.1, dt=1e-3, t_end=100.0,
                  seed=0, m0=1.0, nu0=0.0, stride=10),
    "spectrum": dict(alpha=1.0, theta=2.99, sigma=0.05, dt=1e-3, t_end=1.0,
                     seed=0),
    "sigma-c": dict(alpha=1.0, theta=2.99, sigma=0.0, dt=1e-3, t_end=1.0,
                    seed=0),
    "fokker-planck": dict(alpha=1.0, theta=0.5, sigma=0.5, dt=2.5e-4,
                          t_end=50.0, seed=0, n_cells=400, domain=4.0,
                          dump_times=[0.0, 50.0], record_every=0.5),
    "chaos-rate": dict(alpha=1.0, theta=1.0, sigma=0.3, dt=1e-3, t_end=1.0,
                       seed=0, n_grid=[10, 30, 100, 300, 1000],
                       n_replicas=24, ref_samples=100000),
    "gauss-error": dict(alpha=1.0, theta=1.0, sigma=0.0, dt=1e-3, t_end=1.0,
                        seed=0, sigma_grid=[0.01, 0.02, 0.05, 0.1],
                        n_samples=2000, ref_samples=20000, x0=0.5, mu0=0.0),
    "reproduce-figures": dict(alpha=1.0, theta=2.9, sigma=0.0, dt=1e-3,
                              t_end=200.0, seed=0, n_particles=1000,
                              sigma_small=0.05, sigma_large=0.8,
                              theta_cycle=3.5, sigma_cycle=0.1,
                              theta_big=4.0, sigma_big=3.0),
}

_PARAM_KEYS = ("alpha", "theta", "sigma", "n_particles", "dt", "t_end", "seed")


def _params_from(cfg: dict) -> ModelParams:
    kw = {k: cfg[k] for k in _PARAM_KEYS if k in cfg}
    if "n_particles" in kw:
        kw["n_particles"] = int(kw["n_particles"])
    if "seed" in kw:
        kw["seed"] = int(kw["seed"])
    return validate(ModelParams(**kw))


def _init_positions(kind, n: int):
    if kind == "half-split":
        return np.concatenate([np.ones(n // 2), -np.ones(n - n // 2)])
    if kind == "zero":
        return np.zeros(n)
    try:
        return np.full(n, float(kind))
    except (TypeError, ValueError):
        raise ValidationError(f"unknown init {kind!r}; use half-split, zero "
                              "or a number")


def _traj_rows(traj):
    for i in range(len(traj)):
        yield (traj.times[i], *traj.records[i])


def run_particles(cfg: dict, outdir: str) -> list:
    params = _params_from(cfg)
    x0 = _init_positions(cfg["init"], params.n_particles)
    init = particles.ParticleState(x=x0, mu=float(cfg.get("mu0", 0.0)))
    traj = particles.simulate_particles(init, params,
                                        stride=int(cfg["stride"]),
                                        record_particles=bool(cfg["record_particles"]))
    outputs = [write_csv(os.path.join(outdir, "particles.csv"),
                         ("t", "m_N", "mu"), _traj_rows(traj))]
    if cfg["record_particles"]:
        cols = ("t",) + tuple(f"x_{i}" for i in range(params.n_particles))
        rows = ((traj.times[i], *traj.particles[i]) for i in range(len(traj)))
        outputs.append(write_csv(os.path.join(outdir, "particles_full.csv"),
                                 cols, rows))
    return outputs


def run_macro_ode(cfg: dict, outdir: str) -> list:
    params = _params_from(cfg)
    traj = macro.integrate(macro.MacroState(float(cfg["x0"]), float(cfg["mu0"])),
                           params.alpha, params.theta, params.t_end,
                           params.dt, stride=int(cfg["stride"]))
    return [write_csv(os.path.join(outdir, "macro.csv"), ("t", "x", "mu"),
                      _traj_rows(traj))]


def run_phase(cfg: dict, outdir: str) -> list:
    params = _params_from(cfg)
    ph = macro.classify_phase(params.alpha, params.theta, dt=params.dt,
                              theta1_tol=float(cfg["theta1_tol"]),
                              grid_n=int(cfg["grid_n"]))
    out = write_json(os.path.join(outdir, "phase.json"), {
        "alpha": ph.alpha, "theta": ph.theta, "theta1": ph.theta1,
        "hopf": ph.hopf, "phase": ph.kind.value,
        "cycles": [c.to_dict() for c in ph.cycles],
        "grid_verified": ph.grid_verified,
        "mismatches": list(ph.mismatches),
    })
    if not ph.grid_verified:
        raise InconclusiveError(
            "phase verification mismatches: " + "; ".join(ph.mismatches))
    return [out]


def run_gauss(cfg: dict, outdir: str) -> list:
    params = _params_from(cfg)
    path = gaussian.simulate_gauss_path(
        (float(cfg["m0"]), float(cfg["nu0"])), params,
        RngStream(params.seed), stride=int(cfg["stride"]))
    rows = zip(path.times, path.m, path.nu, path.V, path.z, path.y)
    return [write_csv(os.path.join(outdir, "gauss.csv"),
                      ("t", "m", "nu", "V", "z", "y"), rows)]


def run_spectrum(cfg: dict, outdir: str) -> list:
    params = _params_from(cfg)
    if params.sigma > 0:
        eqs = gaussian.gauss_equilibria(params.alpha, params.theta, params.sigma)
    else:
        eqs = [(lab, gaussian.equilibrium_point(lab, 0.0))
               for lab in ("s1", "s2")]
    reports = [gaussian.gauss_jacobian(pt, params.alpha, params.theta,
                                       params.sigma, label=lab).to_dict()
               for lab, pt in eqs]
    return [write_json(os.path.join(outdir, "spectrum.json"), reports)]


def run_sigma_c(cfg: dict, outdir: str) -> list:
    params = _params_from(cfg)
    sc = gaussian.find_sigma_c(params.alpha, params.theta)
    return [write_json(os.path.join(outdir, "sigma_c.json"), {
        "alpha": params.alpha, "theta": params.theta,
        "excitable": sc is not None, "sigma_c": sc,
    })]


def run_fokker_planck(cfg: dict, outdir: str) -> list:
    params = _params_from(cfg)
    hi = float(cfg["domain"])
    n_cells = int(cfg["n_cells"])
    qstar, _ = fp.stationary_density(params.sigma, -hi, hi, n_cells)
    x = qstar.midpoints()
    width = 0.5
    q0 = np.exp(-x ** 2 / (2 * width ** 2))
    q0 /= np.sum(q0) * qstar.dx
    state = fp.FpState(density=fp.GridDensity(lo=-hi, hi=hi, q=q0),
                       mu=float(cfg.get("mu0", 0.0)))
    dump_times = [float(t) for t in np.atleast_1d(cfg["dump_times"])]
    solver = fp.FpSolver(state, params)
    outputs = []
    summaries = []

    def record(tag):
        st = solver.state()
        m1, m2, _ = solver.moments()
        summaries.append({
            "t": solver.t, "mass": st.density.mass, "mu": solver.mu,
            "m1": m1, "m2": m2,
            "L1_dist_to_qstar": fp.l1_distance(st.density, qstar),
        })
        if tag is not None:
            outputs.append(write_csv(
                os.path.join(outdir, f"density_{tag}.csv"), ("x", "q"),
                zip(x, st.density.q)))

    n_steps = int(round(params.t_end / params.dt))
    stride = max(1, int(round(float(cfg["record_every"]) / params.dt)))
    dump_steps = {int(round(t / params.dt)): t for t in dump_times}
    record(f"t{dump_steps[0]:g}" if 0 in dump_steps else None)
    for s in range(n_steps):
        solver.step()
        step = s + 1
        tag = f"t{dump_steps[step]:g}" if step in dump_steps else None
        if tag or step % stride == 0 or step == n_steps:
            record(tag)
    outputs.append(write_json(os.path.join(outdir, "fp_summary.json"),
                              summaries))
    return outputs


def run_chaos_rate(cfg: dict, outdir: str, threads: int = 1) -> list:
    params = _params_from(cfg)
    fit = mckean.chaos_rate_experiment(
        params, [int(n) for n in cfg["n_grid"]],
        n_replicas=int(cfg["n_replicas"]),
        ref_samples=int(cfg["ref_samples"]), threads=threads)
    return [
        write_json(os.path.join(outdir, "chaos_rate.json"), fit.to_dict()),
        write_csv(os.path.join(outdir, "chaos_rate.csv"),
                  ("N", "error", "stderr"),
                  zip(fit.abscissae, fit.ordinates, fit.stderr)),
    ]


def run_gauss_error(cfg: dict, outdir: str, threads: int = 1) -> list:
    params = _params_from(cfg)
    fit = mckean.gaussian_error_experiment(
        params, [float(s) for s in cfg["sigma_grid"]],
        n_samples=int(cfg["n_samples"]),
        init=(float(cfg["x0"]), float(cfg["mu0"])),
        ref_samples=int(cfg["ref_samples"]), threads=threads)
    return [
        write_json(os.path.join(outdir, "gauss_error.json"), fit.to_dict()),
        write_csv(os.path.join(outdir, "gauss_error.csv"),
                  ("sigma", "error", "stderr"),
                  zip(fit.abscissae, fit.ordinates, fit.stderr)),
    ]


def run_reproduce_figures(cfg: dict, outdir: str) -> list:
    params = _params_from(cfg)
    outputs = []
    # figure 1: quiescent vs excited particle runs
    x0 = _init_positions("half-split", params.n_particles)
    for tag, sg in (("small", float(cfg["sigma_small"])),
                    ("large", float(cfg["sigma_large"]))):
        traj = particles.simulate_particles(
            particles.ParticleState(x=x0.copy(), mu=0.0),
            params.with_(sigma=sg), stride=10)
        outputs.append(write_csv(os.path.join(outdir, f"fig1_{tag}.csv"),
                                 ("t", "m_N", "mu"), _traj_rows(traj)))
    # figure 2: closure path hugging the deterministic cycle
    th_c = float(cfg["theta_cycle"])
    p2 = params.with_(theta=th_c, sigma=float(cfg["sigma_cycle"]), t_end=100.0)
    path = gaussian.simulate_gauss_path((1.0, 0.0), p2, RngStream(p2.seed),
                                        stride=10)
    outputs.append(write_csv(os.path.join(outdir, "fig2_path.csv"),
                             ("t", "m", "nu", "V", "z", "y"),
                             zip(path.times, path.m, path.nu, path.V,
                                 path.z, path.y)))
    rec = macro.detect_limit_cycle(macro.MacroState(3.0, 0.0), params.alpha,
                                   th_c, dt=params.dt)
    lap = macro.integrate(rec.section_point, params.alpha, th_c,
                          rec.period, params.dt, stride=5)
    outputs.append(write_csv(os.path.join(outdir, "fig2_cycle.csv"),
                             ("t", "x", "mu"), _traj_rows(lap)))
    # figure 3: convergence to the mixed state vs persistent oscillation
    p3 = params.with_(theta=float(cfg["theta_big"]),
                      sigma=float(cfg["sigma_big"]), t_end=100.0)
    for tag, m0 in (("converge", 0.05), ("oscillate", 2.0)):
        path = gaussian.simulate_gauss_path((m0, 0.0), p3, RngStream(p3.seed),
                                            stride=10)
        outputs.append(write_csv(os.path.join(outdir, f"fig3_{tag}.csv"),
                                 ("t", "m", "nu", "V", "z", "y"),
                                 zip(path.times, path.m, path.nu, path.V,
                                     path.z, path.y)))
    return outputs


_RUNNERS = {
    "particles": run_particles,
    "macro-ode": run_macro_ode,
    "phase": run_phase,
    "gauss": run_gauss,
    "spectrum": run_spectrum,
    "sigma-c": run_sigma_c,
    "fokker-planck": run_fokker_planck,
    "chaos-rate": run_chaos_rate,
    "gauss-error": run_gauss_error,
    "reproduce-figures": run_reproduce_figures,
}

_THREADED = {"chaos-rate", "gauss-error"}


def build_parser() -> _Parser:
    parser = _Parser(prog="meanfield",
                     description="dissipative mean-field model toolkit")
    parser.add_argument("--version", action="version",
                        version=f"meanfield {__version__} "
                                f"(backend: {active_backend()})")
    subs = parser.add_subparsers(dest="subcommand", required=True)
    for name, defaults in _DEFAULTS.items():
        sp = subs.add_parser(name)
        sp.add_argument("--config", default=None,
                        help="flat key=value file or a manifest.json")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (or MEANFIELD_THREADS)")
        for key, val in defaults.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(val, bool):
                sp.add_argument(flag, dest=key, action="store_true",
                                default=None)
            elif isinstance(val, list):
                sp.add_argument(flag, dest=key, default=None,
                                help=f"comma separated (default "
                                     f"{dump_value(val)})")
            else:
                sp.add_argument(flag, dest=key, type=type(val), default=None)
    return parser


def _effective_config(args) -> dict:
    cfg = dict(_DEFAULTS[args.subcommand])
    if args.config:
        file_cfg = read_config(args.config)
        file_cfg.pop("subcommand", None)
        for k, v in file_cfg.items():
            if k not in cfg:
                raise ValidationError(
                    f"unknown config key {k!r} for {args.subcommand}")
            cfg[k] = v
    for key in _DEFAULTS[args.subcommand]:
        v = getattr(args, key, None)
        if v is not None:
            if isinstance(cfg[key], list) and isinstance(v, str):
                from .io import parse_value
                parsed = parse_value(v)
                v = parsed if isinstance(parsed, list) else [parsed]
            cfg[key] = v
    cfg["subcommand"] = args.subcommand
    return cfg


def run(argv) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = _effective_config(args)
    outdir = args.out or f"out-{args.subcommand}"
    os.makedirs(outdir, exist_ok=True)
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("MEANFIELD_THREADS", "1"))
    sub = cfg.pop("subcommand")
    runner = _RUNNERS[sub]
    if sub in _THREADED:
        outputs = runner(cfg, outdir, threads=threads)
    else:
        outputs = runner(cfg, outdir)
    cfg["subcommand"] = sub
    write_manifest(outdir, cfg, outputs, __version__)
    print(f"{sub}: wrote {len(outputs)} output(s) + manifest to {outdir}/")
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
