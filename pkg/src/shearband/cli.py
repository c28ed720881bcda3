"""Command-line harness: solver subcommands, sweeps and named presets.

All numeric output is CSV or JSON with 17-significant-digit formatting;
identical configurations produce byte-identical files.  Exit codes: 0 on
success, 1 on configuration errors, 2 when a solver failed to converge.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import limits, simplified, slider
from .config import RunConfig, load_config
from .constitutive import ModelParams
from .dynamics import evol_state_to_csv, ledger_to_csv, run_evolution
from .errors import ConfigError, NonConvergence, ShearbandError
from .grid import FLOAT_FMT, Grid1D
from .simplified import detect_regime, profile_to_csv, report_to_jsonl, run_sm, trajectory_to_csv
from .slider import (
    SliderState,
    bifurcation_scan,
    find_v1,
    find_v2,
    phase_to_csv,
    scan_to_csv,
    slider_fixed_point,
    slider_integrate,
)
from .steady import solve_steady, steady_to_csv, support_half_width

SWEEP_KAPPAS = (0.01, 0.04, 0.16, 0.64)
SWEEP_V_INF = (0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0)
SMALL_KAPPAS = (0.03, 0.01, 0.003, 0.001, 0.0003, 0.0001)
SMALL_KAPPA_V_INF = (0.4, 0.8, 1.2)


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def _tag(x: float) -> str:
    return f"{x:g}".replace("-", "m").replace(".", "p")


def _outdir(config: RunConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _grid(config: RunConfig) -> Grid1D:
    return Grid1D(H=config.model.H, N=config.numerics.n)


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_steady(config: RunConfig) -> int:
    out = _outdir(config)
    v_inf = float(config.experiment.get("v_inf", 0.1))
    state = solve_steady(
        config.model,
        v_inf,
        grid=_grid(config),
        tol=config.numerics.tol,
        max_iter=config.numerics.max_iter,
        damping=config.numerics.damping,
    )
    steady_to_csv(state, out / "steady.csv")
    return 0


def _sweep_cell(model: ModelParams, kappa: float, v_inf: float, config: RunConfig):
    params = model.replace(kappa=kappa)
    state = solve_steady(
        params,
        v_inf,
        grid=_grid(config),
        tol=config.numerics.tol,
        max_iter=config.numerics.max_iter,
        damping=config.numerics.damping,
    )
    return state


def cmd_sweep_steady(config: RunConfig, jobs: int = 1) -> int:
    out = _outdir(config)
    kappas = [float(k) for k in config.experiment.get("kappa_values", SWEEP_KAPPAS)]
    v_list = [float(v) for v in config.experiment.get("v_inf_values", SWEEP_V_INF)]
    rescale = bool(config.experiment.get("rescale", False))

    cells = [(k, v) for k in kappas for v in v_list]
    results = {}

    def run(cell):
        k, v = cell
        try:
            return cell, _sweep_cell(config.model, k, v, config)
        except ShearbandError as exc:
            return cell, exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for cell, res in pool.map(run, cells):
                results[cell] = res
    else:
        for cell in cells:
            results[cell] = run(cell)[1]

    failures = 0
    with open(out / "summary.csv", "w") as fh:
        fh.write("kappa,v_inf,sigma,h_star,theta_min,pi_max\n")
        for cell in cells:  # deterministic (kappa, v_inf) order
            k, v = cell
            res = results[cell]
            if isinstance(res, ShearbandError):
                failures += 1
                fh.write(f"{_fmt(k)},{_fmt(v)},nan,nan,nan,nan\n")
                continue
            h_star = support_half_width(res.pi, res.grid)
            fh.write(
                ",".join(
                    [
                        _fmt(k),
                        _fmt(v),
                        _fmt(res.sigma),
                        _fmt(h_star),
                        _fmt(float(res.theta.values.min())),
                        _fmt(float(np.abs(res.pi.values).max())),
                    ]
                )
                + "\n"
            )
            name = f"steady_kappa{_tag(k)}_v{_tag(v)}.csv"
            steady_to_csv(res, out / name)
            if rescale and v != 0.0:
                rn = f"pi_rescaled_kappa{_tag(k)}_v{_tag(v)}.csv"
                with open(out / rn, "w") as rfh:
                    rfh.write("x,pi_over_v_inf\n")
                    for x, p in zip(res.grid.x, res.pi.values):
                        rfh.write(f"{_fmt(x)},{_fmt(p / v)}\n")
    return 2 if failures else 0


def cmd_limit(config: RunConfig) -> int:
    out = _outdir(config)
    eff = limits.EffectiveFriction(config.model.friction, config.model.aging)
    pi_star = eff.pi_star()
    pi_circ = eff.pi_circ()
    limits.limit_table_csv(
        out / "limit_table.csv",
        pi_max=float(config.experiment.get("pi_max", 5.0)),
        n=int(config.experiment.get("samples", 501)),
        friction=config.model.friction,
        aging=config.model.aging,
    )
    with open(out / "limit_summary.json", "w") as fh:
        json.dump({"pi_star": pi_star, "pi_circ": pi_circ}, fh, indent=2)
        fh.write("\n")
    return 0


def cmd_evolve(config: RunConfig) -> int:
    out = _outdir(config)
    exp = config.experiment
    v_inf = float(exp.get("v_inf", 0.1))
    T = float(exp.get("T", 10.0))
    tau = float(exp.get("tau", config.numerics.tau))
    probes = [float(t) for t in exp.get("probes", [T])]
    result = run_evolution(
        config.model, v_inf, T, tau, grid=_grid(config), probe_times=probes
    )
    for state in result.probes:
        evol_state_to_csv(state, out / f"evolve_t{_tag(state.t)}.csv")
    ledger_to_csv(result.ledger, out / "ledger.csv")
    return 0


def cmd_sm(config: RunConfig) -> int:
    out = _outdir(config)
    exp = config.experiment
    v_inf = float(exp.get("v_inf", 0.1))
    T = float(exp.get("T", 100.0))
    tau = float(exp.get("tau", config.numerics.tau))
    probes = [float(t) for t in exp.get("probes", [T])]
    window = float(exp.get("window", min(0.2 * T, 100.0)))
    grid = _grid(config)
    traj = run_sm(
        config.model, v_inf, T, tau=tau, grid=grid, probe_times=probes
    )
    steady = solve_steady(config.model, v_inf, grid=grid)
    report = detect_regime(traj, window, steady=steady)
    trajectory_to_csv(traj, out / "sm_trajectory.csv")
    for state in traj.probes:
        profile_to_csv(state, out / f"sm_profile_t{_tag(state.t)}.csv")
    report_to_jsonl(
        report, out / "sm_regime.jsonl", kappa=config.model.kappa, v_inf=v_inf, T=T
    )
    return 0


def cmd_slider(config: RunConfig) -> int:
    out = _outdir(config)
    exp = config.experiment
    v_inf = float(exp.get("v_inf", 0.12))
    h = float(exp.get("h", 0.3))
    T = float(exp.get("T", 200.0))
    dt = float(exp.get("dt", 1e-3))
    fp = slider_fixed_point(v_inf, h, config.model)
    sigma0 = float(exp.get("sigma0", fp.sigma + 1e-3))
    theta0 = float(exp.get("theta0", fp.theta_bar))
    traj = slider_integrate(
        SliderState(sigma0, theta0), v_inf, h, config.model, T=T, dt=dt
    )
    phase_to_csv(traj, out / "slider_phase.csv")
    return 0


def cmd_slider_bifurcate(config: RunConfig) -> int:
    out = _outdir(config)
    exp = config.experiment
    h = float(exp.get("h", 0.3))
    T_cycle = float(exp.get("T_cycle", 5000.0))
    v1 = find_v1(h, config.model)
    v2 = find_v2(h, config.model, v1=v1, T=T_cycle)
    v_grid = exp.get("v_values")
    if v_grid is None:
        v_grid = np.linspace(0.9 * v1, 1.1 * v2, int(exp.get("scan_points", 7)))
    rows = bifurcation_scan(v_grid, h, config.model, T=T_cycle)
    scan_to_csv(rows, out / "bifurcation.csv")
    with open(out / "slider_summary.json", "w") as fh:
        json.dump({"h": h, "v1": v1, "v2": v2}, fh, indent=2)
        fh.write("\n")
    return 0


# ----------------------------------------------------------------------
# figure presets
# ----------------------------------------------------------------------


def _repro_fig4(config: RunConfig) -> int:
    config.experiment.setdefault("kappa_values", list(SWEEP_KAPPAS))
    config.experiment.setdefault("v_inf_values", list(SWEEP_V_INF))
    return cmd_sweep_steady(config)


def _repro_fig5(config: RunConfig) -> int:
    config.experiment.setdefault("kappa_values", list(SWEEP_KAPPAS))
    config.experiment.setdefault("v_inf_values", list(SWEEP_V_INF))
    config.experiment["rescale"] = True
    return cmd_sweep_steady(config)


def _repro_fig6(config: RunConfig) -> int:
    out = _outdir(config)
    rc = 0
    eff = limits.EffectiveFriction(config.model.friction, config.model.aging)
    with open(out / "plateau_summary.csv", "w") as fh:
        fh.write("kappa,v_inf,h_star,h_limit,sup_diff_core\n")
        for v in SMALL_KAPPA_V_INF:
            plateau = limits.plateau_solution(
                v, config.model.H, config.model.friction, config.model.aging
            )
            for k in SMALL_KAPPAS:
                try:
                    state = _sweep_cell(config.model, k, v, config)
                except ShearbandError:
                    rc = 2
                    fh.write(f"{_fmt(k)},{_fmt(v)},nan,{_fmt(plateau.h)},nan\n")
                    continue
                steady_to_csv(state, out / f"steady_kappa{_tag(k)}_v{_tag(v)}.csv")
                h_star = support_half_width(state.pi, state.grid)
                core = np.abs(state.grid.x) < 0.9 * plateau.h
                _, pi_lim = plateau.evaluate(state.grid.x)
                sup_diff = float(np.max(np.abs(state.pi.values[core] - pi_lim[core]))) if core.any() else np.nan
                fh.write(
                    f"{_fmt(k)},{_fmt(v)},{_fmt(h_star)},{_fmt(plateau.h)},{_fmt(sup_diff)}\n"
                )
    return rc


def _repro_fig7(config: RunConfig) -> int:
    base_out = Path(config.output_dir)
    for kappa, v_inf, T in ((0.16, 0.6, 200.0), (0.004, 0.2, 600.0)):
        sub = RunConfig(
            model=config.model.replace(kappa=kappa),
            numerics=config.numerics,
            experiment={"v_inf": v_inf, "T": T, "probes": [T]},
            output_dir=str(base_out / f"kappa{_tag(kappa)}_v{_tag(v_inf)}"),
        )
        rc = cmd_sm(sub)
        if rc:
            return rc
    return 0


def _repro_fig8(config: RunConfig) -> int:
    sub = RunConfig(
        model=config.model.replace(kappa=0.04),
        numerics=config.numerics,
        experiment={"v_inf": 0.15, "T": 1000.0, "probes": [900.0, 950.0, 1000.0], "window": 200.0},
        output_dir=config.output_dir,
    )
    return cmd_sm(sub)


def _repro_fig9(config: RunConfig) -> int:
    out = _outdir(config)
    model = config.model
    h, v_inf = 0.3, 0.175
    fp = slider_fixed_point(v_inf, h, model)
    near = slider_integrate(
        SliderState(fp.sigma + 1e-7, fp.theta_bar + 1e-7), v_inf, h, model, T=2000.0
    )
    far = slider_integrate(SliderState(3.0, 8.0), v_inf, h, model, T=5000.0)
    phase_to_csv(near, out / "slider_near.csv")
    phase_to_csv(far, out / "slider_far.csv")
    v1 = find_v1(h, model)
    v2 = find_v2(h, model, v1=v1)
    with open(out / "slider_summary.json", "w") as fh:
        json.dump(
            {
                "h": h,
                "v_inf": v_inf,
                "fixed_point": {"sigma": fp.sigma, "theta_bar": fp.theta_bar},
                "v1": v1,
                "v2": v2,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    return 0


_PRESETS = {
    "fig4": _repro_fig4,
    "fig5": _repro_fig5,
    "fig6": _repro_fig6,
    "fig7": _repro_fig7,
    "fig8": _repro_fig8,
    "fig9": _repro_fig9,
}


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="TOML configuration file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--n", type=int, help="interior node count (odd)")
    p.add_argument("--kappa", type=float, help="aging diffusion coefficient")
    p.add_argument("--eta", type=float, help="rate-gradient coefficient")
    p.add_argument("--rho", type=float, help="mass density")
    p.add_argument("--tau", type=float, help="time step")
    p.add_argument("--v-inf", dest="v_inf", type=float, help="boundary velocity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shearband",
        description="Rate-and-state elastoplastic shear band simulations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in (
        "steady",
        "sweep-steady",
        "limit",
        "evolve-full",
        "evolve-sm",
        "slider",
        "slider-bifurcate",
    ):
        p = sub.add_parser(name)
        _add_common(p)
        if name == "sweep-steady":
            p.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
        if name in ("evolve-full", "evolve-sm", "slider"):
            p.add_argument("--t-end", dest="t_end", type=float, help="time horizon")
        if name in ("slider", "slider-bifurcate"):
            p.add_argument("--h", type=float, help="plastic band width")

    p = sub.add_parser("repro", help="run a named experiment preset")
    p.add_argument("preset", choices=sorted(_PRESETS))
    _add_common(p)
    return parser


def _overrides_from_args(args) -> dict:
    ov = {}
    for key in ("kappa", "eta", "rho", "v_inf"):
        val = getattr(args, key, None)
        if val is not None:
            if key == "v_inf":
                ov["experiment.v_inf"] = val
            else:
                ov[f"model.{key}"] = val
    if getattr(args, "n", None) is not None:
        ov["numerics.n"] = args.n
    if getattr(args, "tau", None) is not None:
        ov["numerics.tau"] = args.tau
        ov["experiment.tau"] = args.tau
    if getattr(args, "out", None) is not None:
        ov["output.dir"] = args.out
    if getattr(args, "t_end", None) is not None:
        ov["experiment.T"] = args.t_end
    if getattr(args, "h", None) is not None:
        ov["experiment.h"] = args.h
    return ov


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, _overrides_from_args(args))
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "steady":
            return cmd_steady(config)
        if args.command == "sweep-steady":
            return cmd_sweep_steady(config, jobs=args.jobs)
        if args.command == "limit":
            return cmd_limit(config)
        if args.command == "evolve-full":
            return cmd_evolve(config)
        if args.command == "evolve-sm":
            return cmd_sm(config)
        if args.command == "slider":
            return cmd_slider(config)
        if args.command == "slider-bifurcate":
            return cmd_slider_bifurcate(config)
        if args.command == "repro":
            return _PRESETS[args.preset](config)
    except NonConvergence as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
