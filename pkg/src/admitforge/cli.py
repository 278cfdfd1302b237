"""Command-line pipeline: identify, characterize, map, simulate, select.

Each subcommand reads the layered configuration, writes deterministic CSV
data plus rendered figures into the output directory, and prints a short
summary.  Exit codes: 0 success, 1 usage or configuration error, 2
computation error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, ToolkitConfig, load_config
from .design import select, superimpose
from .impedance import AdmittanceParams, ImpedanceParams, admittance_tf, impedance_tf
from .kinematics import CartesianTF, cartesian_tf
from .loop_analysis import VERDICT_ERROR, stability_map
from .robot_ident import (
    FRFDataset,
    extract_frf,
    fit_rational,
    parse_sweep_filename,
    read_sweep_csv,
)
from .sim_oracle import classify, pulse_force, read_force_profile, resample_profile, simulate_loop
from .tf_core import format_tf, phase_margin, write_tf
from .transparency import cost_map
from . import plots

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="admitforge",
        description="Admittance-controller design toolkit for force-coupled robot tasks",
    )
    parser.add_argument("--version", action="version", version=f"admitforge {__version__}")
    parser.add_argument("--config", metavar="PATH", default=None,
                        help="user config file layered over the packaged defaults")
    parser.add_argument("--out", metavar="DIR", default="out",
                        help="output directory for CSV data and figures (default: out)")
    parser.add_argument("--threads", type=int, default=0, metavar="N",
                        help="worker threads for map commands, 0 = serial default")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("identify", help="fit joint transfer functions from sweep CSVs")
    p.add_argument("sweep_dir", help="directory of jointJ_fF.csv sweep records")
    p.add_argument("--num-order", type=int, default=None)
    p.add_argument("--den-order", type=int, default=None)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("characterize", help="assemble the Cartesian axis response")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("map", help="compute stability / transparency / allowable maps")
    p.add_argument("kind", choices=("stability", "transparency", "allowable"))
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("simulate", help="time-domain oracle run for one parameter set")
    p.add_argument("--m", type=float, required=True, help="virtual mass [kg]")
    p.add_argument("--b", type=float, required=True, help="virtual damping [Ns/m]")
    p.add_argument("--corner", metavar="M_EQ,B_EQ", default=None,
                   help="load corner; default: upper mass and damping bounds")
    p.add_argument("--profile", metavar="CSV", default=None,
                   help="force profile t,f; default: configured pulse")
    p.add_argument("--duration", type=float, default=None, help="override duration [s]")
    p.add_argument("--dt", type=float, default=None, help="override time step [s]")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="pick controller parameters from the allowable region")
    p.add_argument("--policy", choices=("min-cost", "min-cost-with-margin"),
                   default="min-cost")
    p.add_argument("--delta-b", type=float, default=0.0,
                   help="damping margin for min-cost-with-margin [Ns/m]")
    p.add_argument("--delta-m", type=float, default=0.0,
                   help="mass margin for min-cost-with-margin [kg]")
    p.set_defaults(func=cmd_select)
    return parser


def _characterized(cfg: ToolkitConfig) -> CartesianTF:
    row, col = cfg.axis()
    return cartesian_tf(cfg.dh_table(), cfg.theta_nom(), cfg.joint_tfs(), row, col)


def cmd_identify(args, cfg: ToolkitConfig, out: Path) -> int:
    sweep_dir = Path(args.sweep_dir)
    if not sweep_dir.is_dir():
        raise ConfigError(f"sweep directory not found: {sweep_dir}")
    by_joint: dict[int, list[tuple[float, Path]]] = {}
    for entry in sorted(sweep_dir.iterdir()):
        parsed = parse_sweep_filename(entry.name)
        if parsed is not None:
            joint, f_hz = parsed
            by_joint.setdefault(joint, []).append((f_hz, entry))
    if not by_joint:
        raise RuntimeError(f"no sweep files in {sweep_dir}")
    cfg_nb, cfg_na = cfg.identify_orders()
    nb = cfg_nb if args.num_order is None else args.num_order
    na = cfg_na if args.den_order is None else args.den_order
    for joint in sorted(by_joint):
        records = sorted(by_joint[joint])
        freqs, gains, phases = [], [], []
        for f_hz, path in records:
            ref, act = read_sweep_csv(path)
            gain, phase = extract_frf(ref, act, f_hz)
            freqs.append(f_hz)
            gains.append(gain)
            phases.append(phase)
        dataset = FRFDataset(joint_index=joint, freq_hz=freqs, gain=gains, phase_rad=phases)
        fit = fit_rational(dataset, nb, na)
        dataset.to_csv(out / f"joint{joint}_frf.csv")
        write_tf(
            out / f"joint{joint}.tf",
            fit.tf,
            header=(
                f"joint {joint} fit, orders ({nb},{na}), "
                f"relative cost {fit.relative_cost:.6e}, {fit.iterations} iterations"
            ),
        )
        with open(out / f"joint{joint}_residuals.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write("freq_hz,residual_re,residual_im,residual_abs\n")
            for f_hz, r in zip(dataset.freq_hz, fit.residuals):
                fh.write(f"{f_hz:.12g},{r.real:.12g},{r.imag:.12g},{abs(r):.12g}\n")
        plots.save_frf_figure(dataset, out / f"joint{joint}_frf.png", fit=fit.tf)
        print(
            f"joint {joint}: {len(dataset)} points, orders ({nb},{na}), "
            f"relative cost {fit.relative_cost:.3e}"
        )
        print(f"  {format_tf(fit.tf)}")
    return 0


def cmd_characterize(args, cfg: ToolkitConfig, out: Path) -> int:
    ctf = _characterized(cfg)
    write_tf(out / "axis_tf.txt", ctf.tf, header=f"axis {ctf.row}/{ctf.col} velocity response")
    with open(out / "weights.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("joint,weight\n")
        for i, k in enumerate(ctf.weights, start=1):
            fh.write(f"{i},{k:.12g}\n")
    print(f"axis {ctf.row}/{ctf.col} weights: "
          + " ".join(f"k{i}={k:.4f}" for i, k in enumerate(ctf.weights, start=1)))
    print(f"weight sum: {ctf.weights.sum():.6f}")
    try:
        margin = phase_margin(ctf.tf)
        print(f"phase margin: {margin:.2f} deg")
    except ValueError:
        margin = None
        print("phase margin: no gain crossover in scan range")
    plots.save_bode_figure(ctf.tf, out / "axis_bode.png", margin_deg=margin)

    expected = _expected_weights(cfg)
    if expected is not None:
        tol = cfg.parser.getfloat("robot", "expected_tol", fallback=0.02)
        errors = np.abs(ctf.weights - expected)
        if np.any(errors > tol):
            report = out / "dh_discrepancy.txt"
            with open(report, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("DH convention discrepancy report\n")
                fh.write(f"tolerance: {tol}\n")
                fh.write("joint,expected,synthesized,abs_error\n")
                for i in range(7):
                    fh.write(
                        f"{i + 1},{expected[i]:.6g},{ctf.weights[i]:.6g},{errors[i]:.3g}\n"
                    )
                fh.write(
                    "\nLikely causes: different DH convention (classical vs modified),\n"
                    "missing tool-plate offset on the last link, or a different nominal\n"
                    "posture than the joint transfer functions were identified at.\n"
                )
            print(f"WARNING: synthesized weights deviate from expected by up to "
                  f"{errors.max():.3g} (tol {tol}); see {report}", file=sys.stderr)
    return 0


def _expected_weights(cfg: ToolkitConfig):
    raw = cfg.parser.get("robot", "expected_weights", fallback="").strip()
    if not raw:
        return None
    values = np.array([float(tok) for tok in raw.split()])
    if values.size != 7:
        raise ConfigError("[robot] expected_weights must hold 7 numbers")
    return values


def cmd_map(args, cfg: ToolkitConfig, out: Path) -> int:
    ctf = _characterized(cfg)
    G = ctf.tf
    H = cfg.filter_tf()
    grid = cfg.grid()
    workers = args.threads
    want_stability = args.kind in ("stability", "allowable")
    want_cost = args.kind in ("transparency", "allowable")
    smap = cmap = None
    if want_stability:
        smap = stability_map(G, H, grid, cfg.corners(), workers=workers)
        smap.to_csv(out / "stability_map.csv")
        plots.save_stability_figure(smap, out / "stability_map.png")
        n_err = int(np.sum(smap.verdicts == VERDICT_ERROR))
        if n_err:
            print(f"stability map: {n_err} corner evaluations failed", file=sys.stderr)
        frac = smap.robust.mean()
        print(f"stability map: {smap.robust.sum()} robust cells "
              f"({100 * frac:.1f}% of {grid.shape[0]}x{grid.shape[1]})")
    if want_cost:
        cmap = cost_map(G, H, grid, cfg.transparency_spec(), workers=workers)
        cmap.to_csv(out / "cost_map.csv")
        plots.save_cost_figure(cmap, out / "cost_map.png")
        n_bad = int(np.sum(~np.isfinite(cmap.cost)))
        if n_bad:
            print(f"cost map: {n_bad} cells failed", file=sys.stderr)
        print(f"cost map: range [{np.nanmin(cmap.cost):.3f}, {np.nanmax(cmap.cost):.3f}]")
    if args.kind == "allowable":
        region = superimpose(smap, cmap)
        region.to_csv(out / "allowable_region.csv")
        plots.save_allowable_figure(region, out / "allowable_region.png")
        print(f"allowable region: {int(region.allowed.sum())} cells")
    return 0


def _parse_corner(cfg: ToolkitConfig, text: str | None) -> ImpedanceParams:
    bounds = cfg.bounds()
    if text is None:
        m_eq, b_eq = bounds.mass[1], bounds.damping[1]
    else:
        try:
            m_eq, b_eq = (float(tok) for tok in text.split(","))
        except ValueError as exc:
            raise _UsageError(f"--corner expects M_EQ,B_EQ, got {text!r}") from exc
    return ImpedanceParams(mass=m_eq, damping=b_eq, stiffness=cfg.k_pinned())


def cmd_simulate(args, cfg: ToolkitConfig, out: Path) -> int:
    ctf = _characterized(cfg)
    Y = admittance_tf(AdmittanceParams(mass=args.m, damping=args.b))
    H = cfg.filter_tf()
    corner = _parse_corner(cfg, args.corner)
    Zeq = impedance_tf(corner)
    duration = cfg.oracle_duration() if args.duration is None else args.duration
    dt = cfg.oracle_dt() if args.dt is None else args.dt
    if args.profile is not None:
        profile = read_force_profile(args.profile)
        force = lambda t: resample_profile(profile, t)
    else:
        amplitude, width = cfg.oracle_pulse()
        force = lambda t: pulse_force(t, amplitude, width)
    result = simulate_loop(ctf.tf, Y, H, Zeq, force=force, duration=duration, dt=dt)
    verdict = classify(result)
    result.to_csv(out / "sim_result.csv")
    plots.save_sim_figure(result, out / "sim_result.png", verdict=verdict)
    print(
        f"simulate m={args.m:g} b={args.b:g} corner=({corner.mass:g},{corner.damping:g},"
        f"{corner.stiffness:g}): verdict {verdict}"
    )
    return 0


def cmd_select(args, cfg: ToolkitConfig, out: Path) -> int:
    ctf = _characterized(cfg)
    G = ctf.tf
    H = cfg.filter_tf()
    grid = cfg.grid()
    smap = stability_map(G, H, grid, cfg.corners(), workers=args.threads)
    cmap = cost_map(G, H, grid, cfg.transparency_spec(), workers=args.threads)
    region = superimpose(smap, cmap)
    region.to_csv(out / "allowable_region.csv")
    plots.save_allowable_figure(region, out / "allowable_region.png")
    params = select(region, policy=args.policy, delta_b=args.delta_b, delta_m=args.delta_m)
    i = int(np.argmin(np.abs(grid.m_values - params.mass)))
    j = int(np.argmin(np.abs(grid.b_values - params.damping)))
    with open(out / "preset.cfg", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# controller preset selected from the allowable region\n")
        fh.write(f"# policy: {args.policy}\n")
        fh.write("[controller]\n")
        fh.write(f"m = {params.mass:.12g}\n")
        fh.write(f"b = {params.damping:.12g}\n")
    print(
        f"selected m={params.mass:.6g} kg, b={params.damping:.6g} Ns/m "
        f"(cost {region.cost[i, j]:.4f}, policy {args.policy})"
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        cfg = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return args.func(args, cfg, out)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # computation failures map to exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
