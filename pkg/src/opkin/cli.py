"""Command-line entry point.

Subcommands::

    opk analytic      print the closed-form summary for one parameter set
    opk kinetic-run   homogeneous mean-opinion density solver trace
    opk particle-run  stochastic agent ensemble trace
    opk macro-run     spatial mean-opinion diffusion trace
    opk experiment    one of the named cross-scale studies

Every run subcommand writes a trace/table CSV plus ``summary.json`` into the
output directory (``out_dir`` key, overridden by the ``OPK_OUT_DIR``
environment variable).  Configuration comes from an optional ``key=value``
file (``--config``) merged with command-line flags; flags win.  Unknown keys
are hard errors.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (CFL
breakdown, rejection cap, or a run that leaves the solvable regime).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

import numpy as np

from .analytic import SupercriticalError, analytic_summary, critical_kappa, equilibrium_sigma2
from .experiments import (
    ExperimentKind,
    ExperimentSpec,
    run_experiment,
)
from .kinetic import (
    KineticOperator,
    NumericalError,
    init_bimodal,
    init_gaussian,
    init_truncated_gaussian,
    make_grid,
    run_to_time,
)
from .macro import (
    MacroGrid,
    MacroState,
    consensus_time,
    density_gauss_bump,
    density_step,
    density_two_cluster,
    density_uniform,
    phi_single_mode,
    run_macro,
)
from .params import ModelParams, ParamError, RateMode
from .particles import (
    RejectionCapError,
    SchemeKind,
    SimScheme,
    ensemble_gaussian,
    ensemble_spatial,
    estimate_fields,
    run_particles,
)
from .runio import (
    coerce_config,
    read_config,
    resolve_out_dir,
    write_csv,
    write_summary,
    write_table,
)

__all__ = ["main"]

_MODEL_SCHEMA: dict[str, type] = {
    "gamma": float,
    "kappa": float,
    "zeta": float,
    "mode": str,
    "epsilon": float,
}

_SCHEMAS: dict[str, dict[str, type]] = {
    "analytic": dict(_MODEL_SCHEMA),
    "kinetic-run": {
        **_MODEL_SCHEMA,
        "m": int, "half_width": float, "init": str, "sigma0": float,
        "mu0": float, "separation": float, "width": float, "weight": float,
        "cut": float, "t_end": float, "trace_dt": float, "method": str,
        "out_dir": str,
    },
    "particle-run": {
        **_MODEL_SCHEMA,
        "scheme": str, "n": int, "replicas": int, "seed": int,
        "sigma0": float, "truncate": float, "dt": float,
        "accept_target": float, "kernel_method": str, "t_end": float,
        "trace_dt": float, "spatial": bool, "amp": float, "bins": int,
        "out_dir": str,
    },
    "macro-run": {
        **_MODEL_SCHEMA,
        "j": int, "rho_init": str, "rho0": float, "rho_lo": float,
        "rho_hi": float, "amp": float, "k_mode": int, "offset": float,
        "t_end": float, "trace_dt": float, "stop_fraction": float,
        "tol_fraction": float, "out_dir": str,
    },
    "experiment": {
        **_MODEL_SCHEMA,
        "sweep": tuple, "replicas": int, "seed": int, "n_agents": int,
        "m_cells": int, "j_cells": int, "bins": int, "t_end": float,
        "t_max": float, "equil_window": float, "equil_rtol": float,
        "tol_fraction": float, "truncate": float, "accept_target": float,
        "sde_dt": float, "kernel_method": str, "t_prime_end": float,
        "checkpoints": int, "amp": float, "out_dir": str,
    },
}

_DEFAULTS: dict[str, dict] = {
    "analytic": {},
    "kinetic-run": {
        "m": 512, "init": "gaussian", "sigma0": 1.0, "mu0": 0.0,
        "separation": 1.0, "width": 0.6, "weight": 0.5, "cut": 3.0,
        "t_end": 50.0, "method": "direct",
    },
    "particle-run": {
        "scheme": "meanfield-sde", "n": 10_000, "replicas": 4, "seed": 0,
        "sigma0": 1.0, "accept_target": 0.2, "kernel_method": "auto",
        "t_end": 50.0, "spatial": False, "amp": 0.5, "bins": 32,
    },
    "macro-run": {
        "j": 256, "rho_init": "uniform", "rho0": 1.0, "rho_lo": 0.5,
        "rho_hi": 2.0, "amp": 1.0, "k_mode": 1, "offset": 0.0,
        "t_end": 1.0, "tol_fraction": 0.01,
    },
    "experiment": {},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opk",
        description="Kinetic opinion-formation model: solvers, particle "
                    "schemes, analytics, and cross-scale experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in _SCHEMAS.items():
        p = sub.add_parser(name, help=f"{name} subcommand")
        if name == "experiment":
            p.add_argument("kind", help="experiment kind: " + ", ".join(
                k.value for k in ExperimentKind))
        p.add_argument("--config", default=None,
                       help="key=value config file ('#' comments allowed)")
        for key in schema:
            p.add_argument("--" + key.replace("_", "-"), dest=key,
                           default=None, metavar="V")
    return parser


def _merge_config(args: argparse.Namespace, name: str) -> dict:
    schema = _SCHEMAS[name]
    raw: dict[str, str] = {}
    if args.config is not None:
        raw.update(read_config(args.config))
    for key in schema:
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    merged = dict(_DEFAULTS[name])
    merged.update(coerce_config(raw, schema))
    return merged


def _model_params(cfg: dict) -> ModelParams:
    base = ModelParams()
    kwargs = {}
    for key in ("gamma", "kappa", "zeta", "epsilon"):
        if key in cfg:
            kwargs[key] = cfg[key]
    if "mode" in cfg:
        kwargs["rate_mode"] = RateMode.parse(cfg["mode"])
    return replace(base, **kwargs)


def _resolved(cfg: dict, p: ModelParams) -> dict:
    out = dict(cfg)
    out.update(gamma=p.gamma, kappa=p.kappa, zeta=p.zeta,
               mode=p.rate_mode.value, epsilon=p.epsilon)
    out.pop("out_dir", None)
    return out


# ---- subcommand bodies ----------------------------------------------------------
def _cmd_analytic(cfg: dict) -> int:
    p = _model_params(cfg)
    summary = analytic_summary(p)
    print(json.dumps(summary.to_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_kinetic_run(cfg: dict) -> int:
    p = _model_params(cfg)
    grid = make_grid(p, m=cfg["m"], sigma0=cfg["sigma0"],
                     half_width=cfg.get("half_width"))
    kind = cfg["init"]
    if kind == "gaussian":
        state = init_gaussian(grid, cfg["sigma0"], mu=cfg["mu0"])
    elif kind == "truncated-gaussian":
        state = init_truncated_gaussian(grid, cfg["sigma0"], mu=cfg["mu0"],
                                        cut=cfg["cut"])
    elif kind == "bimodal":
        state = init_bimodal(grid, separation=cfg["separation"],
                             width=cfg["width"], weight=cfg["weight"],
                             center=cfg["mu0"])
    else:
        raise ParamError(f"unknown init {kind!r} (gaussian, truncated-gaussian, bimodal)")
    op = KineticOperator(grid, p, method=cfg["method"])
    rows = run_to_time(state, op, cfg["t_end"], trace_dt=cfg.get("trace_dt"))
    out = resolve_out_dir(cfg.get("out_dir"))
    resolved = _resolved(cfg, p)
    write_csv(out / "kinetic_trace.csv", "kinetic-trace", rows, resolved)
    last = rows[-1]
    write_summary(out / "summary.json", {
        "command": "kinetic-run",
        "config": resolved,
        "analytic": analytic_summary(p).to_dict(),
        "result": {
            "t_final": last.t, "mass": last.mass, "mean": last.mean,
            "variance": last.variance, "residual": last.residual,
            "saturated": state.saturated, "clip_events": state.clip_events,
        },
    })
    if state.saturated:
        print("error: density reached the domain boundary before t_end "
              "(supercritical spread); trace truncated", file=sys.stderr)
        return 3
    return 0


def _cmd_particle_run(cfg: dict) -> int:
    p = _model_params(cfg)
    scheme = SimScheme(kind=SchemeKind.parse(cfg["scheme"]),
                       dt=cfg.get("dt"), accept_target=cfg["accept_target"],
                       kernel_method=cfg["kernel_method"])
    out = resolve_out_dir(cfg.get("out_dir"))
    resolved = _resolved(cfg, p)
    if cfg["spatial"]:
        amp = cfg["amp"]
        sigma_loc = equilibrium_sigma2(p.zeta, p.kappa, p.rate_mode)
        ens = ensemble_spatial(cfg["n"],
                               lambda a: amp * np.sin(2.0 * math.pi * a),
                               local_sigma2=sigma_loc, seed=cfg["seed"],
                               replicas=cfg["replicas"])
        trace_dt = cfg.get("trace_dt") or cfg["t_end"] / 10.0
        bins = cfg["bins"]
        names = (["t", "mean", "variance"]
                 + [f"rho_{b:02d}" for b in range(bins)]
                 + [f"phi_{b:02d}" for b in range(bins)])
        records = []
        t_marks = np.arange(0.0, cfg["t_end"] + 0.5 * trace_dt, trace_dt)
        for t_k in t_marks:
            if t_k > 0:
                run_particles(ens, p, scheme, float(t_k), trace_dt=math.inf)
            est = estimate_fields(ens.phi[0], ens.alpha[0], bins=bins)
            phi_flat = ens.phi.ravel()
            records.append((ens.t, float(phi_flat.mean()),
                            float(phi_flat.var(ddof=1)))
                           + tuple(est.rho_hat) + tuple(est.phi_hat))
        write_table(out / "particle_trace.csv", "particle-trace", names,
                    records, resolved)
        final = {"t_final": ens.t, "mean": records[-1][1],
                 "variance": records[-1][2]}
    else:
        ens = ensemble_gaussian(cfg["n"], cfg["sigma0"], seed=cfg["seed"],
                                replicas=cfg["replicas"],
                                truncate=cfg.get("truncate"))
        rows = run_particles(ens, p, scheme, cfg["t_end"],
                             trace_dt=cfg.get("trace_dt"))
        records = [(r.t, r.mean, r.variance) for r in rows]
        write_table(out / "particle_trace.csv", "particle-trace",
                    ["t", "mean", "variance"], records, resolved)
        final = {"t_final": rows[-1].t, "mean": rows[-1].mean,
                 "variance": rows[-1].variance,
                 "rep_vars": [float(v) for v in rows[-1].rep_vars]}
    write_summary(out / "summary.json", {
        "command": "particle-run",
        "config": resolved,
        "analytic": analytic_summary(p).to_dict(),
        "result": {**final,
                   "rejection_cap_warnings": ens.rejection_cap_warnings},
    })
    return 0


def _cmd_macro_run(cfg: dict) -> int:
    p = _model_params(cfg)
    c = analytic_summary(p).c_diff
    mode = p.rate_mode
    grid = MacroGrid(cfg["j"])
    kind = cfg["rho_init"]
    if kind == "uniform":
        rho = density_uniform(grid, cfg["rho0"])
    elif kind == "step":
        rho = density_step(grid, cfg["rho_lo"], cfg["rho_hi"])
    elif kind == "gauss-bump":
        rho = density_gauss_bump(grid)
    elif kind == "two-cluster":
        rho = density_two_cluster(grid)
    else:
        raise ParamError(f"unknown rho_init {kind!r} "
                         "(uniform, step, gauss-bump, two-cluster)")
    state = MacroState(grid, rho, phi_single_mode(
        grid, amp=cfg["amp"], k=cfg["k_mode"], offset=cfg["offset"]))
    rows = run_macro(state, c, mode, cfg["t_end"],
                     trace_dt=cfg.get("trace_dt"),
                     stop_fraction=cfg.get("stop_fraction"))
    out = resolve_out_dir(cfg.get("out_dir"))
    resolved = _resolved(cfg, p)
    resolved["c_diff"] = c
    write_csv(out / "macro_trace.csv", "macro-trace", rows, resolved)
    entropies = [r.entropy for r in rows]
    write_summary(out / "summary.json", {
        "command": "macro-run",
        "config": resolved,
        "analytic": analytic_summary(p).to_dict(),
        "result": {
            "t_final": rows[-1].t,
            "conserved_initial": rows[0].conserved,
            "conserved_final": rows[-1].conserved,
            "entropy_monotone": bool(all(b <= a + 1e-12 * abs(a)
                                         for a, b in zip(entropies, entropies[1:]))),
            "amplitude_final": rows[-1].amplitude,
            "consensus_time": consensus_time(rows, cfg["tol_fraction"]),
        },
    })
    return 0


def _analytic_overlay(kind: ExperimentKind, spec: ExperimentSpec) -> dict:
    """Closed-form curve data the figure layer overlays without recomputing."""
    p = spec.params
    overlay: dict = {"zeta": p.zeta, "gamma": p.gamma}
    if kind is ExperimentKind.VARIANCE_VS_KAPPA:
        kc_s = critical_kappa(p.zeta, RateMode.SYMMETRIC)
        grid = [0.01 * k * kc_s for k in range(1, 96)]
        overlay.update(
            kappa_grid=grid,
            sigma2_symmetric=[equilibrium_sigma2(p.zeta, k, RateMode.SYMMETRIC)
                              for k in grid],
            sigma2_nonsymmetric=[equilibrium_sigma2(p.zeta, k, RateMode.NONSYMMETRIC)
                                 for k in grid],
            kappa_crit_symmetric=kc_s,
            kappa_crit_nonsymmetric=critical_kappa(p.zeta, RateMode.NONSYMMETRIC),
        )
    elif kind is ExperimentKind.PHASE_SCAN:
        overlay.update(
            kappa_crit_symmetric=critical_kappa(p.zeta, RateMode.SYMMETRIC),
            kappa_crit_nonsymmetric=critical_kappa(p.zeta, RateMode.NONSYMMETRIC),
        )
    elif kind is ExperimentKind.CROSSOVER:
        summ = analytic_summary(p)
        c_s = analytic_summary(replace(p, rate_mode=RateMode.SYMMETRIC)).c_diff
        c_a = analytic_summary(replace(p, rate_mode=RateMode.NONSYMMETRIC)).c_diff
        k2 = (2.0 * math.pi) ** 2
        ln_tol = abs(math.log(spec.tol_fraction))
        rho_grid = [0.25 + 0.05 * i for i in range(0, 81)]
        overlay.update(
            rho_star=summ.rho_star, c_symmetric=c_s, c_nonsymmetric=c_a,
            rho_grid=rho_grid,
            t_consensus_symmetric=[ln_tol / (c_s * r * k2) for r in rho_grid],
            t_consensus_nonsymmetric=[ln_tol / (c_a * k2)] * len(rho_grid),
        )
    elif kind is ExperimentKind.KINETIC_VS_MACRO:
        overlay.update(
            c_symmetric=analytic_summary(replace(p, rate_mode=RateMode.SYMMETRIC)).c_diff,
            c_nonsymmetric=analytic_summary(replace(p, rate_mode=RateMode.NONSYMMETRIC)).c_diff,
        )
    return overlay


def _cmd_experiment(cfg: dict, kind_text: str) -> int:
    kind = ExperimentKind.parse(kind_text)
    p = _model_params(cfg)
    spec_kwargs = {}
    for key in ("sweep", "replicas", "seed", "n_agents", "m_cells", "j_cells",
                "bins", "t_end", "t_max", "equil_window", "equil_rtol",
                "tol_fraction", "truncate", "accept_target", "sde_dt",
                "kernel_method", "t_prime_end", "checkpoints", "amp"):
        if key in cfg:
            spec_kwargs[key] = cfg[key]
    spec = ExperimentSpec(kind=kind, params=p, **spec_kwargs)
    result = run_experiment(spec)
    out = resolve_out_dir(cfg.get("out_dir"))
    resolved = _resolved(cfg, p)
    resolved["experiment"] = kind.value
    name = kind.value.replace("-", "_")
    write_csv(out / f"{name}.csv", kind.value, result.rows, resolved)
    write_summary(out / "summary.json", {
        "command": f"experiment {kind.value}",
        "config": resolved,
        "analytic": _analytic_overlay(kind, spec),
        "result": result.summary,
    })
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    name = args.command
    try:
        cfg = _merge_config(args, name)
        if name == "analytic":
            return _cmd_analytic(cfg)
        if name == "kinetic-run":
            return _cmd_kinetic_run(cfg)
        if name == "particle-run":
            return _cmd_particle_run(cfg)
        if name == "macro-run":
            return _cmd_macro_run(cfg)
        return _cmd_experiment(cfg, args.kind)
    except (ParamError, SupercriticalError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, RejectionCapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
