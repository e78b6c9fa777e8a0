"""Command line entry point: ``amtransport <command> --config cfg.json --out dir``.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 physical precondition violated.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import ConfigError, PhysicsError, SolverError
from .lattice import RESIDUAL_LIMIT

log = logging.getLogger("amtransport")

WAVEFORM_NOTE = ("waveform: V(t) = v_min - ln[(1/M) sum_{{k=1..M}} cos^2(delta_k t/2)]/beta "
                 "over the M distinct nonzero |delta_j|, envelope={envelope}")


def _load(args) -> ex.RunConfig:
    if args.config is None:
        return ex.RunConfig()
    return ex.RunConfig.load(args.config)


def cmd_params(cfg, out: Path):
    rows, fit = ex.params_table(cfg)
    ex.write_csv(out / "params.csv", ["V", "omega", "U", "J"], rows)
    print(f"J_max={fit.j_max:.6g} E_r  beta={fit.beta:.6g}/E_r  "
          f"residual={fit.residual:.3g} on [{fit.v_min}, {fit.v_max}]")
    if fit.residual > RESIDUAL_LIMIT:
        print(f"warning: exponential law misses quadrature J by {fit.residual:.0%} "
              f"(limit {RESIDUAL_LIMIT:.0%})", file=sys.stderr)
    for r in rows:
        print("V={:<8.4g} omega={:<10.6g} U={:<10.6g} J={:.6g}".format(*r))


def _print_waveform(cfg):
    if cfg.data["modulation"]["kind"] == "polychromatic":
        print(WAVEFORM_NOTE.format(envelope=cfg.data["modulation"]["envelope"]))


def cmd_evolve(cfg, out: Path):
    _print_waveform(cfg)
    exp = ex.Experiment(cfg)
    full, eff = exp.evolve()
    ref = exp.normalization()
    full.to_csv(out / "evolve.csv", ref)
    print(f"full trace: {len(full.times)} samples to t={full.times[-1]:.6g}, "
          f"final current {full.current[-1]:.6g}" + (f" ({full.current[-1] / ref:.4f} of ideal)"
                                                     if ref else ""))
    if eff is not None:
        eff.to_csv(out / "evolve_effective.csv", ref)
        print(f"effective trace final current {eff.current[-1]:.6g}")


def cmd_steady(cfg, out: Path):
    _print_waveform(cfg)
    exp = ex.Experiment(cfg)
    report = exp.gain_report()
    ex.write_csv(out / "steady.csv",
                 ["i_stationary", "i_modulated", "i_ideal", "i_effective", "gain",
                  "percent_recovered", "heff_percent_error"],
                 [[report.i_stationary, report.i_modulated, report.i_ideal, report.i_effective,
                   report.gain, report.percent_recovered, report.heff_percent_error]])
    print(f"I_stationary={report.i_stationary:.6g} I_modulated={report.i_modulated:.6g} "
          f"I_ideal={report.i_ideal:.6g} gain={report.gain:.4g} "
          f"recovered={report.percent_recovered:.2%}")


def cmd_table1(cfg, out: Path):
    _print_waveform(cfg)
    reports = ex.table1(cfg)
    ex.write_csv(out / "table1.csv",
                 ["delta", "current_gain", "percent_recovered", "percent_error_heff",
                  "i_stationary", "i_modulated", "i_ideal", "i_effective", "error"],
                 [[" ".join(f"{d:g}" for d in r.delta), r.gain, 100 * r.percent_recovered,
                   100 * r.heff_percent_error, r.i_stationary, r.i_modulated, r.i_ideal,
                   r.i_effective, r.error or ""] for r in reports])
    for r in reports:
        if r.error:
            print(f"{list(r.delta)}: FAILED {r.error}")
        else:
            print(f"{list(r.delta)}: gain={r.gain:.3g} recovered={r.percent_recovered:.1%} "
                  f"H_eff error={r.heff_percent_error:.2%}")
    if any(r.error for r in reports):
        return 3
    return 0


def cmd_sweep_vmax(cfg, out: Path):
    _print_waveform(cfg)
    rows = ex.sweep_vmax(cfg)
    ex.write_csv(out / "sweep_vmax.csv", ["vmax", "current_normalized"],
                 [(v, n) for v, _, n in rows])
    for v, _, n in rows:
        print(f"vmax={v:<6g} {n:.4f}")


def cmd_sweep_alpha(cfg, out: Path):
    res = ex.sweep_alpha(cfg)
    ex.write_csv(out / "sweep_alpha.csv", ["alpha", "steady_current", "marker"],
                 zip(res["alpha"], res["current"], res["marker"]))
    print(f"<U>={res['mean_u']:.6g}  delta2 at alpha={res['alpha_offset']:.6g}, "
          f"delta2-<U> at alpha={res['alpha_resonant']:.6g}, "
          f"stationary current {res['i_stationary']:.6g}")
    for a, c, m in zip(res["alpha"], res["current"], res["marker"]):
        print(f"alpha={a:<10.5g} gain={c / res['i_stationary']:<10.4g} {m}")


COMMANDS = {
    "params": cmd_params,
    "evolve": cmd_evolve,
    "steady": cmd_steady,
    "table1": cmd_table1,
    "sweep-vmax": cmd_sweep_vmax,
    "sweep-alpha": cmd_sweep_alpha,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amtransport", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None,
                       help="JSON run configuration (defaults if omitted)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    np.set_printoptions(precision=6)
    try:
        cfg = _load(args)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out) or 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except PhysicsError as exc:
        print(f"physics precondition violated: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
