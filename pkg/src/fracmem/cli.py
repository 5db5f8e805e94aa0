"""Command-line interface.

    fracmem simulate     trajectories, closed form next to the quadrature reference
    fracmem amplitude    pulse amplitude needed to reach the target and its loss
    fracmem energy-scan  loss and amplitude of end-aligned pulses versus width
    fracmem optimize     optimal double (or single) pulse control
    fracmem sweep        regime phase diagram and boundary fits
    fracmem figure NAME  run a bundled figure preset (1a, 1b, 2, 3, 3cd, 4, 5)
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .analytics import (
    Pulse,
    PulseTrain,
    oracle_trajectory,
    required_amplitude,
    single_pulse_q,
    single_pulse_q_end_aligned,
    train_x,
    two_pulse_x,
)
from .config import PRESETS, RunConfig, load_preset, parse_value
from .device import voltage
from .errors import ConfigError, FracmemError
from .io import fmt, open_out, sibling, write_csv, write_report
from .optimizer import optimize_double, optimize_single
from .sweep import axis_values, fit_boundary_ii_iii, locate_boundary_i_ii, run_sweep

log = logging.getLogger("fracmem")

# (flag, config field) pairs accepted by every subcommand
OVERRIDES = [
    ("--alpha", "alpha"),
    ("--beta", "beta"),
    ("--A", "A"),
    ("--B", "B"),
    ("--kappa", "kappa"),
    ("--x0", "x0"),
    ("--x1", "x1"),
    ("--t1", "t1"),
    ("--min-width", "min_width"),
    ("--i1-upper", "i1_upper"),
    ("--restarts", "restarts"),
    ("--tol", "tol"),
    ("--max-iters", "max_iters"),
    ("--pulses", "pulses"),
    ("--amplitude-mode", "amplitude_mode"),
    ("--t-st", "t_st"),
    ("--t-e", "t_e"),
    ("--oracle-step", "oracle_step"),
    ("--widths", "widths"),
    ("--mode", "mode"),
    ("--trajectories", "trajectories"),
    ("--alpha-range", "alpha_range"),
    ("--beta-range", "beta_range"),
    ("--seed", "seed"),
    ("--jobs", "jobs"),
    ("--out", "out"),
]


def _label(alpha, beta):
    return f"a{fmt(alpha)}_b{fmt(beta)}"


def _combos(cfg: RunConfig):
    return [(a, b) for b in cfg.beta for a in cfg.alpha]


def _output_for(cfg: RunConfig, alpha, beta, many: bool):
    if not many:
        return cfg.out
    if cfg.out is None:
        raise ConfigError("out: several (alpha, beta) pairs need an output path", field="out")
    return sibling(cfg.out, _label(alpha, beta))


# -- simulate --------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig):
    task = cfg.task()
    combos = _combos(cfg)
    for alpha, beta in combos:
        p = cfg.device(alpha, beta)
        pulses = cfg.pulse_list()
        if cfg.amplitude_mode == "required":
            if len(pulses) != 1:
                raise ConfigError("pulses: amplitude_mode = required needs exactly one pulse", field="pulses")
            amp = required_amplitude(p, task, pulses[0].t_start, pulses[0].t_end)
            pulses = [Pulse(pulses[0].t_start, pulses[0].t_end, amp)]
        train = PulseTrain(tuple(pulses), cfg.t1)
        oracle = oracle_trajectory(p, train, cfg.x0, cfg.oracle_step)
        grid = oracle.grid
        closed = train_x(p, train, cfg.x0, grid)
        err = np.abs(closed - oracle.x)
        if err.max() > cfg.agreement_tol:
            raise FracmemError(
                f"closed form and quadrature differ by {err.max():.3g} at alpha={alpha}, beta={beta}"
            )
        if np.any(closed < 0.0):
            raise FracmemError("trajectory leaves the admissible region x >= 0")
        current = train.current(grid)
        volts = voltage(p, closed, current)
        rows = zip(grid, current, closed, oracle.x, volts, err, np.full_like(grid, cfg.agreement_tol))
        write_csv(
            _output_for(cfg, alpha, beta, len(combos) > 1),
            ["t", "I", "x_closed", "x_oracle", "V_M", "abs_err", "tolerance"],
            rows,
        )


# -- amplitude -----------------------------------------------------------------------


def cmd_amplitude(cfg: RunConfig):
    task = cfg.task()
    sections = []
    for alpha, beta in _combos(cfg):
        p = cfg.device(alpha, beta)
        amp = required_amplitude(p, task, cfg.t_st, cfg.t_e)
        q = single_pulse_q(p, Pulse(cfg.t_st, cfg.t_e, amp), cfg.x0)
        sections.append(
            (
                _label(alpha, beta),
                [
                    ("alpha", alpha),
                    ("beta", beta),
                    ("t_st", cfg.t_st),
                    ("t_e", cfg.t_e),
                    ("I1", amp),
                    ("Q", q),
                ],
            )
        )
    write_report(cfg.out, sections)


# -- energy scan -----------------------------------------------------------------------


def cmd_energy_scan(cfg: RunConfig):
    task = cfg.task()
    widths = axis_values(*cfg.widths)
    rows = []
    for alpha, beta in _combos(cfg):
        p = cfg.device(alpha, beta)
        for width in widths:
            t_st = max(cfg.t1 - float(width), 0.0)
            rows.append(
                (
                    alpha,
                    beta,
                    float(width),
                    single_pulse_q_end_aligned(p, task, t_st),
                    required_amplitude(p, task, t_st, cfg.t1),
                )
            )
    write_csv(cfg.out, ["alpha", "beta", "T", "Q", "I1"], rows)


# -- optimize ------------------------------------------------------------------------


def _optimize_one(args):
    cfg, alpha, beta, index = args
    p = cfg.device(alpha, beta)
    task = cfg.task()
    opt = cfg.optimizer()
    out = {}
    if cfg.mode in ("double", "both"):
        out["double"] = optimize_double(p, task, opt, seed=cfg.seed + index)
    if cfg.mode in ("single", "both"):
        out["single"] = optimize_single(p, task, opt)
    out["q_single_wide"] = single_pulse_q_end_aligned(p, task, 0.0)
    out["q_single_narrow"] = single_pulse_q_end_aligned(p, task, cfg.t1 - cfg.min_width)
    return out


def _optimize_all(cfg: RunConfig):
    work = [(cfg, a, b, k) for k, (a, b) in enumerate(_combos(cfg))]
    if cfg.jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_optimize_one, work))
    return [_optimize_one(item) for item in work]


def _trajectory_rows(cfg: RunConfig, alpha, beta, res):
    p = cfg.device(alpha, beta)
    grid = np.union1d(np.linspace(0.0, cfg.t1, cfg.trajectory_points), [res.t_s])
    x = two_pulse_x(p, res.i1, res.i2, res.t_s, cfg.t1, cfg.x0, grid)
    current = np.where(grid < res.t_s, res.i1, res.i2)
    marker = (grid == res.t_s).astype(int)
    return zip(grid, current, x, marker)


def cmd_optimize(cfg: RunConfig):
    results = _optimize_all(cfg)
    combos = _combos(cfg)
    if len(combos) == 1 and not cfg.trajectories:
        (alpha, beta), out = combos[0], results[0]
        sections = []
        for kind in ("double", "single"):
            if kind in out:
                r = out[kind]
                sections.append(
                    (
                        kind,
                        [
                            ("alpha", alpha),
                            ("beta", beta),
                            ("regime", str(r.regime)),
                            ("q", r.q),
                            ("i1", r.i1),
                            ("i2", r.i2),
                            ("t_s", r.t_s),
                            ("active_constraints", " ".join(sorted(r.active_constraints)) or "none"),
                            ("converged", r.converged),
                        ],
                    )
                )
        sections.append(("reference", [("q_single_wide", out["q_single_wide"]), ("q_single_narrow", out["q_single_narrow"])]))
        write_report(cfg.out, sections)
        _report_nonconvergence(results)
        return

    header = [
        "alpha", "beta", "kind", "regime", "q", "i1", "i2", "t_s", "converged",
        "active", "q_single_wide", "q_single_narrow",
    ]
    rows = []
    for (alpha, beta), out in zip(combos, results):
        for kind in ("double", "single"):
            if kind in out:
                r = out[kind]
                rows.append(
                    (
                        alpha, beta, kind, str(r.regime), r.q, r.i1, r.i2, r.t_s, r.converged,
                        "+".join(sorted(r.active_constraints)) or "none",
                        out["q_single_wide"], out["q_single_narrow"],
                    )
                )
    write_csv(cfg.out, header, rows)
    if cfg.trajectories:
        if cfg.out is None:
            raise ConfigError("out: trajectories need an output path", field="out")
        for (alpha, beta), out in zip(combos, results):
            res = out.get("double") or out.get("single")
            write_csv(
                sibling(cfg.out, "traj_" + _label(alpha, beta)),
                ["t", "I", "x", "switch"],
                _trajectory_rows(cfg, alpha, beta, res),
            )
    _report_nonconvergence(results)


def _report_nonconvergence(results):
    bad = [r for out in results for r in out.values() if hasattr(r, "converged") and not r.converged]
    if bad:
        raise FracmemError(f"{len(bad)} optimisation(s) did not converge; rerun with larger max_iters")


# -- sweep -----------------------------------------------------------------------


def cmd_sweep(cfg: RunConfig):
    diagram = run_sweep(cfg.sweep_spec(), jobs=cfg.jobs)
    rows = [(c.alpha, c.beta, c.regime, c.q, c.i1, c.i2, c.t_s, c.converged) for c in diagram.cells]
    write_csv(cfg.out, ["alpha", "beta", "regime", "q", "i1", "i2", "t_s", "converged"], rows)

    sections = []
    try:
        slope, intercept, residual = fit_boundary_ii_iii(diagram)
        sections.append(("boundary_II_III", [("slope", slope), ("intercept", intercept), ("residual", residual)]))
    except FracmemError as exc:
        sections.append(("boundary_II_III", [("error", str(exc))]))
    try:
        pts = locate_boundary_i_ii(diagram)
        dev = max(abs(a - b / 2.0) for b, a in pts)
        sections.append(("boundary_I_II", [("line", "beta = 2 alpha"), ("rows", len(pts)), ("max_abs_deviation", dev)]))
    except FracmemError as exc:
        sections.append(("boundary_I_II", [("error", str(exc))]))
    counts = {}
    for c in diagram.cells:
        counts[c.regime] = counts.get(c.regime, 0) + 1
    sections.append(("cells", [("total", len(diagram.cells))] + sorted(counts.items())))
    summary = sibling(cfg.out, "summary", ".txt") if cfg.out else None
    if summary is None:
        sys.stdout.flush()
        _write_summary_stream(sections)
    else:
        write_report(summary, sections)


def _write_summary_stream(sections):
    for name, items in sections:
        sys.stderr.write(f"[{name}]\n")
        for key, value in items:
            sys.stderr.write(f"{key} = {fmt(value)}\n")


COMMAND_FUNCS = {
    "simulate": cmd_simulate,
    "amplitude": cmd_amplitude,
    "energy-scan": cmd_energy_scan,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
}

COMMAND_HELP = {
    line.split()[1]: line.split(None, 2)[2]
    for line in __doc__.splitlines()
    if line.strip().startswith("fracmem ") and line.split()[1] in COMMAND_FUNCS
}


# -- argument handling -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration file")
    for flag, name in OVERRIDES:
        common.add_argument(flag, dest=name, metavar="VALUE", help=f"override '{name}'")

    parser = argparse.ArgumentParser(prog="fracmem", description="Pulse switching of fractional-order memristors.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in COMMAND_FUNCS:
        sub.add_parser(name, parents=[common], help=COMMAND_HELP[name])
    fig = sub.add_parser("figure", parents=[common], help="run a bundled figure preset")
    fig.add_argument("name", choices=PRESETS)
    return parser


def resolve_config(args) -> RunConfig:
    if args.subcommand == "figure":
        cfg = load_preset(args.name)
        if args.config:
            raise ConfigError("config: 'figure' takes its configuration from the preset", field="config")
    elif args.config:
        cfg = RunConfig.from_file(args.config)
    else:
        cfg = RunConfig()
    changes = {}
    for _, name in OVERRIDES:
        raw = getattr(args, name, None)
        if raw is not None:
            changes[name] = parse_value(name, raw)
    if args.subcommand != "figure":
        changes["command"] = args.subcommand
    return cfg.replace(**changes)


def _error_line(exc: Exception) -> str:
    kind = getattr(exc, "kind", "error")
    parts = [f"error: kind={kind}"]
    if isinstance(exc, ConfigError):
        if exc.field:
            parts.append(f"field={exc.field}")
        if exc.line:
            parts.append(f"line={exc.line}")
    parts.append(f"message={str(exc)!r}")
    return " ".join(parts)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if cfg.command is None:
            raise ConfigError("command: preset does not name a command", field="command")
        COMMAND_FUNCS[cfg.command](cfg)
    except ConfigError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 2
    except FracmemError as exc:
        print(_error_line(exc), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
