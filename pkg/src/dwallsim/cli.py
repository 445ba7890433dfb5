"""Command-line dispatch.

Subcommands: simulate, modulate, spectrum, verify-energy, stability,
coercivity, dissipation, kappa.  Exit codes: 0 success, 1 validation/usage
failure, 2 runtime failure (blow-up, no convergence) with partial outputs
flushed.  DWALLSIM_THREADS caps the data-parallel width (all kernels here are
sequential, so it is validated and passed to numba as an upper bound only).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import io as dio
from .energy import energy_balance_residual, energy_total
from .errors import BlowupError, DwallsimError, NanDetectedError, ParseError, ValidationError
from .grid import Grid1D, SpinField
from .harness import (
    CoercivityConfig,
    DissipationConfig,
    InteractionSpec,
    TwoWallConfig,
    build_two_wall_initial,
    coercivity_experiment,
    dissipation_experiment,
    kappa,
    q_interaction,
    run_two_wall_experiment,
)
from .integrator import run
from .model import Gauge, ModelParams, WallSign
from .modulation import decompose_static, decompose_trajectory, initial_gauge_guess
from .spectral import assemble_L, calibrated_lambda0, eigenpairs
from .walls import gauge_apply, wall_profile
from .harness import perturbation_field

COMMANDS = ("simulate", "modulate", "spectrum", "verify-energy", "stability", "coercivity", "dissipation", "kappa")


def _say(args, msg: str):
    if not args.quiet:
        print(msg)


def _outdir(cfg: dio.RunConfig, args) -> str:
    out = args.out if args.out else cfg.output_dir
    os.makedirs(out, exist_ok=True)
    return out


def _write_report(report: dict, outdir: str, name: str):
    path = os.path.join(outdir, f"{name}.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, indent=2, default=float)
        f.write("\n")
    return path


def _initial_state(cfg: dio.RunConfig, seed: int) -> SpinField:
    name = cfg.experiment_name or "single_wall"
    exp = cfg.experiment
    params, grid = cfg.params, cfg.grid
    if name == "snapshot":
        return dio.read_snapshot(exp["path"])
    if name == "single_wall":
        sigma = WallSign(exp.get("sigma1", 1), exp.get("sigma2", 1))
        m = wall_profile(sigma, params, grid)
        g = Gauge(exp.get("y0", 0.0), exp.get("phi0", 0.0))
        if g.y != 0.0 or g.phi != 0.0:
            m = gauge_apply(g, m)
        delta = exp.get("delta", 0.0)
        if delta > 0.0:
            pert = perturbation_field(grid, params, (g,), delta, seed, signs=(sigma,))
            base = m.values
            tang = pert - (pert * base).sum(axis=1)[:, None] * base
            m = SpinField.projected(grid, base + tang)
        return m
    if name == "two_wall":
        L = exp.get("L", 15.0)
        return build_two_wall_initial(grid, params, Gauge(L, 0.0), Gauge(-L, 0.0),
                                      exp.get("delta", 0.0), seed)
    raise ValidationError("experiment.name", f"{name!r} does not define an initial state")


def _require_sim(cfg: dio.RunConfig):
    if cfg.sim is None:
        raise ValidationError("sim", "this subcommand needs a [sim] section")


def _traj_series(traj) -> dict:
    return {
        "t": traj.times,
        "energy": traj.series["energy"],
        "dissipation": traj.series["dissipation"],
        "forcing": traj.series["forcing"],
        "hcal1": traj.series["hcal1"],
    }


def cmd_simulate(cfg: dio.RunConfig, args) -> int:
    _require_sim(cfg)
    out = _outdir(cfg, args)
    m0 = _initial_state(cfg, args.seed if args.seed is not None else cfg.experiment.get("seed", 0))
    dio.write_snapshot(m0, os.path.join(out, "initial.snap"))
    try:
        traj = run(m0, cfg.params, cfg.sim)
    except BlowupError as exc:
        if exc.trajectory is not None:
            dio.write_series("series", _traj_series(exc.trajectory), out)
        _say(args, f"BLOWUP: {exc}")
        return 2
    dio.write_series("series", _traj_series(traj), out)
    dio.write_snapshot(traj.snapshots[-1], os.path.join(out, "final.snap"))
    _say(args, f"simulate: {len(traj.times)} snapshots -> {out}")
    return 0


def cmd_modulate(cfg: dio.RunConfig, args) -> int:
    out = _outdir(cfg, args)
    seed = args.seed if args.seed is not None else cfg.experiment.get("seed", 0)
    if cfg.sim is None:
        m = _initial_state(cfg, seed)
        gp0, gm0 = initial_gauge_guess(m)
        st = decompose_static(m, gp0, gm0, cfg.params)
        report = {
            "converged": st.converged,
            "iterations": st.iterations,
            "y_plus": st.g_plus.y,
            "phi_plus": st.g_plus.phi,
            "y_minus": st.g_minus.y,
            "phi_minus": st.g_minus.phi,
            "eps_h1": st.eps_h1,
            "eps_h2": st.eps_h2,
            "ortho_residual_max": float(np.abs(st.ortho_residual).max()),
        }
        _write_report(report, out, "modulation")
        _say(args, f"modulate: converged={st.converged} -> {out}")
        return 0 if st.converged else 2
    m0 = _initial_state(cfg, seed)
    try:
        traj = run(m0, cfg.params, cfg.sim)
    except BlowupError as exc:
        if exc.trajectory is not None:
            dio.write_series("series", _traj_series(exc.trajectory), out)
        _say(args, f"BLOWUP: {exc}")
        return 2
    series = decompose_trajectory(traj, cfg.params)
    dio.write_series(
        "modulation",
        {
            "t": series.times,
            "y_plus": series.y_plus,
            "phi_plus": series.phi_plus,
            "y_minus": series.y_minus,
            "phi_minus": series.phi_minus,
            "eps_h1": series.eps_h1,
            "eps_h2": series.eps_h2,
            "residual": series.residual_max,
        },
        out,
    )
    if not series.converged:
        _say(args, f"NO_CONVERGENCE at snapshot {series.failed_index} (partial series written)")
        return 2
    _say(args, f"modulate: {len(series.times)} states -> {out}")
    return 0


def cmd_spectrum(cfg: dio.RunConfig, args) -> int:
    out = _outdir(cfg, args)
    k = cfg.experiment.get("k", 6)
    op = assemble_L(cfg.params, cfg.grid)
    pairs = eigenpairs(op, k)
    dio.write_series(
        "eigenvalues",
        {"index": np.arange(len(pairs), dtype=float), "value": np.array([v for v, _ in pairs])},
        out,
    )
    report = {
        "Gamma_sq": cfg.params.Gamma**2,
        "lambda": [v for v, _ in pairs],
        "lambda0_calibrated": calibrated_lambda0(op),
    }
    _write_report(report, out, "spectrum")
    _say(args, f"spectrum: lambda_1 = {pairs[0][0]:.3e} -> {out}")
    return 0


def cmd_verify_energy(cfg: dio.RunConfig, args) -> int:
    _require_sim(cfg)
    out = _outdir(cfg, args)
    m0 = _initial_state(cfg, args.seed if args.seed is not None else cfg.experiment.get("seed", 0))
    try:
        traj = run(m0, cfg.params, cfg.sim)
    except BlowupError as exc:
        if exc.trajectory is not None:
            dio.write_series("series", _traj_series(exc.trajectory), out)
        _say(args, f"BLOWUP: {exc}")
        return 2
    times, resid, max_abs = energy_balance_residual(traj, cfg.params)
    dio.write_series("balance", {"t": times, "residual": resid}, out)
    _write_report({"max_residual": max_abs, "energy_initial": float(traj.series["energy"][0]),
                   "energy_final": float(traj.series["energy"][-1])}, out, "balance")
    _say(args, f"verify-energy: max |dE/dt + aD - ahF| = {max_abs:.3e} -> {out}")
    return 0


def cmd_stability(cfg: dio.RunConfig, args) -> int:
    _require_sim(cfg)
    out = _outdir(cfg, args)
    exp = cfg.experiment
    seed = args.seed if args.seed is not None else exp.get("seed", 1)
    twcfg = TwoWallConfig(
        gamma=cfg.params.gamma,
        alpha=cfg.params.alpha,
        h=cfg.params.applied_field,
        L=exp.get("L", 25.0),
        delta=exp.get("delta", 1e-2),
        seed=seed,
        t_end=cfg.sim.t_end,
        n=cfg.grid.n,
        extent=cfg.grid.x_max,
        cfl=cfg.sim.cfl,
        scheme=cfg.sim.scheme,
        boundary=cfg.sim.boundary,
        snapshots=exp.get("snapshots", 300),
        R=exp.get("R"),
        lam=exp.get("lam"),
        cauchy_tol=exp.get("cauchy_tol", 1e-4),
    )
    report = run_two_wall_experiment(twcfg)
    dio.write_series(
        "stability",
        {
            "t": report.times,
            "eps_h1": report.eps_h1,
            "eps_h2": report.eps_h2,
            "kappa": report.kappa_series,
            "y_plus": report.gauge_series["y_plus"],
            "phi_plus": report.gauge_series["phi_plus"],
            "y_minus": report.gauge_series["y_minus"],
            "phi_minus": report.gauge_series["phi_minus"],
            "energy": report.energy_series,
        },
        out,
    )
    _write_report(
        {
            "lambda_fit": report.lambda_fit,
            "fit_amplitude": report.fit_amplitude,
            "fit_kappa_coeff": report.fit_kappa_coeff,
            "fit_residual": report.fit_residual,
            "gauge_tail_sup": report.gauge_tail_sup,
            "gauge_limit_plus": [report.gauge_limits["plus"].y, report.gauge_limits["plus"].phi],
            "gauge_limit_minus": [report.gauge_limits["minus"].y, report.gauge_limits["minus"].phi],
            "conv_m_constant": report.conv_m_constant,
            "conv_g_constant": report.conv_g_constant,
            "flags": report.flags,
        },
        out,
        "stability",
    )
    ok = report.flags["no_blowup"] and report.flags["decomposition_converged"]
    _say(args, f"stability: lambda_fit = {report.lambda_fit:.3e}, flags = {report.flags} -> {out}")
    return 0 if ok else 2


def cmd_coercivity(cfg: dio.RunConfig, args) -> int:
    out = _outdir(cfg, args)
    exp = cfg.experiment
    amps = np.logspace(
        math.log10(exp.get("amp_min", 1e-4)), math.log10(exp.get("amp_max", 1e-1)), exp.get("n_amps", 10)
    )
    ccfg = CoercivityConfig(
        gamma=cfg.params.gamma,
        alpha=cfg.params.alpha,
        L=exp.get("L", 20.0),
        n=cfg.grid.n,
        extent=cfg.grid.x_max,
        amplitudes=tuple(amps),
        seed=args.seed if args.seed is not None else exp.get("seed", 2),
        refine=exp.get("refine", True),
    )
    rep = coercivity_experiment(ccfg)
    dio.write_series(
        "coercivity",
        {"t": rep.amplitudes, "eps_h1_sq": rep.eps_h1_sq, "energy_excess": rep.energy_excess},
        out,
    )
    _write_report(
        {
            "slope": rep.slope,
            "intercept": rep.intercept,
            "ratio_lo": rep.ratio_lo,
            "ratio_hi": rep.ratio_hi,
            "slope_refined": rep.slope_refined,
            "slope_rel_change": rep.slope_rel_change,
            "tail_rate": rep.tail_rate,
        },
        out,
        "coercivity",
    )
    _say(args, f"coercivity: slope = {rep.slope:.4f} (refined change {rep.slope_rel_change}) -> {out}")
    return 0


def cmd_dissipation(cfg: dio.RunConfig, args) -> int:
    out = _outdir(cfg, args)
    exp = cfg.experiment
    dcfg = DissipationConfig(
        gamma=cfg.params.gamma,
        alpha=cfg.params.alpha,
        h=cfg.params.applied_field,
        L=exp.get("L", 15.0),
        delta=exp.get("delta", 5e-3),
        seed=args.seed if args.seed is not None else exp.get("seed", 3),
        t_end=cfg.sim.t_end if cfg.sim else 4.0,
        n=cfg.grid.n,
        extent=cfg.grid.x_max,
        snapshots=exp.get("snapshots", 80),
        R=exp.get("R"),
    )
    rep = dissipation_experiment(dcfg)
    dio.write_series(
        "dissipation",
        {"t": rep.times, "dEdt": rep.dEdt, "eps_h2_sq": rep.eps_h2_sq, "envelope": rep.envelope},
        out,
    )
    _write_report(
        {
            "c_fit": rep.c_fit,
            "largest_violation": rep.largest_violation,
            "monotone": rep.monotone,
            "monotone_margin": rep.monotone_margin,
        },
        out,
        "dissipation",
    )
    _say(args, f"dissipation: c_fit = {rep.c_fit:.4f}, monotone = {rep.monotone} -> {out}")
    return 0


def cmd_kappa(cfg: dio.RunConfig, args) -> int:
    out = _outdir(cfg, args)
    exp = cfg.experiment
    lam = exp.get("lam")
    if lam is None:
        raise ValidationError("experiment.lam", "kappa needs the decay rate lam")
    spec = InteractionSpec(Gamma=cfg.params.Gamma, lam=lam, h=cfg.params.applied_field)
    t = np.linspace(0.0, exp.get("t_max", 50.0), exp.get("n_t", 201))
    kap = np.asarray(kappa(t, spec, cfg.params))
    ystar = np.array([-cfg.params.alpha / cfg.params.Gamma * cfg.params.applied_field.integral(0.0, tk) for tk in t])
    dio.write_series(
        "kappa",
        {"t": t, "kappa": kap, "q_two_ystar": q_interaction(2.0 * ystar, cfg.params.Gamma)},
        out,
    )
    _say(args, f"kappa: kappa({t[-1]:g}) = {kap[-1]:.6e} -> {out}")
    return 0


_DISPATCH = {
    "simulate": cmd_simulate,
    "modulate": cmd_modulate,
    "spectrum": cmd_spectrum,
    "verify-energy": cmd_verify_energy,
    "stability": cmd_stability,
    "coercivity": cmd_coercivity,
    "dissipation": cmd_dissipation,
    "kappa": cmd_kappa,
}


def _thread_cap():
    raw = os.environ.get("DWALLSIM_THREADS")
    if raw is None:
        return
    try:
        width = int(raw)
    except ValueError:
        raise ValidationError("DWALLSIM_THREADS", f"not an integer: {raw!r}") from None
    if width < 1:
        raise ValidationError("DWALLSIM_THREADS", "must be >= 1")
    try:
        import numba

        numba.set_num_threads(min(width, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dwallsim", description="1D LLG domain-wall simulator and diagnostics")
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    if not argv or argv[0] in ("-h", "--help"):
        parser.print_help()
        return 0 if argv else 1
    if argv[0] not in COMMANDS:
        parser.print_usage(sys.stderr)
        print(f"unknown subcommand: {argv[0]!r}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        _thread_cap()
        cfg = dio.parse_config(args.config)
        return _DISPATCH[args.command](cfg, args)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    except (BlowupError, NanDetectedError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    except DwallsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():  # console-script hook
    raise SystemExit(main())
