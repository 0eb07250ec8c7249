"""Command line entry point: run, sweep, check, snapshot-dump."""

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .checks import run_checks
from .config import Config, parse_config
from .csolver import load_checkpoint, params_to_dict, run, save_checkpoint
from .diagnostics import DiagnosticsMonitor, write_sweep_csv
from .eos import conservative_energy
from .errors import ConfigurationError, ConvergenceError, DomainError, NumericalError
from .fields import export_csv, read_snapshot, write_snapshot
from .isolver import limit_energy, run_limit
from .sweep import result_from_entries, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4
LIMIT_COLUMNS = ("t", "l2_v", "l2_H", "hs4", "E_kinetic_magnetic", "divv", "divH", "minS", "maxS")


class Snapshots:
    """Writes snap_NNNNN.bin every ``every`` steps."""

    def __init__(self, directory, every, meta):
        self.directory = Path(directory)
        self.every = every
        self.meta = meta
        self.steps = 0

    def __call__(self, state, report):
        if report is None:
            return
        self.steps += 1
        if self.every and self.steps % self.every == 0:
            self.write(state)

    def write(self, state):
        arrays = {name: getattr(state, name) for name in state.FIELDS}
        meta = dict(self.meta, t=state.t, step=self.steps)
        write_snapshot(self.directory / f"snap_{self.steps:05d}.bin", state.grid, arrays, meta)


class LimitMonitor:
    def __init__(self, params, stride, csv_path):
        self.params = params
        self.stride = stride
        self.csv_path = csv_path
        self.steps = 0
        self.rows = []
        with open(csv_path, "w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(LIMIT_COLUMNS)

    def __call__(self, state, report):
        if report is not None:
            self.steps += 1
        if self.steps % self.stride == 0 and (report is not None or not self.rows):
            self.record(state)

    def close(self, state):
        if not self.rows or self.rows[-1][0] != state.t:
            self.record(state)

    def record(self, state):
        g = state.grid
        S_min, S_max = g.extrema(state.S)
        row = (
            state.t,
            g.l2(state.v),
            g.l2(state.H),
            sum(g.sobolev_norm(getattr(state, name), 4) for name in state.FIELDS),
            limit_energy(state, self.params),
            float(np.max(np.abs(g.div(state.v)))),
            float(np.max(np.abs(g.div(state.H)))),
            S_min,
            S_max,
        )
        self.rows.append(row)
        with open(self.csv_path, "a", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerow(["%.17g" % v for v in row])


def _run_dir(config):
    path = Path(config.out_dir) / config.run_name
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_run(config: Config, resume=None, out=sys.stdout):
    directory = _run_dir(config)
    (directory / "config.echo").write_text(config.echo())
    wall = config.wall_budget or None
    checkpoint = directory / "checkpoint.bin"
    if config.model == "limit":
        params = config.limit_params()
        initial = config.limit_state()
        monitor = LimitMonitor(params, config.observer_stride, directory / "diagnostics.csv")
        snaps = Snapshots(directory, config.snapshot_every, {"model": "limit"})
        traj = run_limit(initial, params, config.T, observers=[monitor, snaps], cfl=config.cfl,
                         wall_budget=wall, checkpoint_path=str(checkpoint),
                         checkpoint_every=config.checkpoint_every or None)
        snaps.write(traj.final)
        E0, E1 = limit_energy(initial, params), limit_energy(traj.final, params)
        _write_summary(directory, traj, [("energy_initial", E0), ("energy_final", E1)], out)
        return EXIT_OK

    params = config.phys_params()
    monitor = DiagnosticsMonitor(params, config.observer_stride, directory / "diagnostics.csv")
    if resume:
        initial, meta, extra = load_checkpoint(resume)
        prefix = "obs0."
        monitor.load_state_dict(initial.grid, {k[len(prefix):]: v for k, v in extra.items()
                                               if k.startswith(prefix)}, meta["observer0"])
        E0 = meta["E0"]
    else:
        initial = config.initial_state()
        E0 = conservative_energy(initial, params, initial.grid)
    snaps = Snapshots(directory, config.snapshot_every, {"model": "compressible",
                                                         "params": params_to_dict(params)})
    snaps.steps = monitor.steps
    traj = run(initial, params, config.T, observers=[monitor, snaps], cfl=config.cfl,
               wall_budget=wall, checkpoint_path=str(checkpoint),
               checkpoint_every=config.checkpoint_every or None, meta={"E0": E0})
    if not traj.completed:
        _write_summary(directory, traj, [("checkpoint", str(checkpoint))], out)
        print(f"wall-clock budget exhausted at t={traj.final.t:.6g}; checkpoint {checkpoint}", file=out)
        return EXIT_NUMERIC
    snaps.write(traj.final)
    E1 = conservative_energy(traj.final, params, traj.final.grid)
    _write_summary(
        directory,
        traj,
        [
            ("energy_initial", E0),
            ("energy_final", E1),
            ("energy_drift", (E1 - E0) / E0),
            ("max_divH", monitor.max_divH),
            ("sup_hs4", monitor.sup_hs4),
            ("q_timeavg", monitor.q_timeavg),
            ("u_hs5_sq_integral", monitor.u_hs5_integral),
        ],
        out,
    )
    return EXIT_OK


def _write_summary(directory, traj, extra, out):
    final = traj.final
    g = final.grid
    lines = [f"t_final = {final.t:.17g}", f"steps = {traj.steps}", f"completed = {traj.completed}"]
    for name in final.FIELDS:
        lines.append(f"l2_{name} = {g.l2(getattr(final, name)):.17g}")
    for key, value in extra:
        lines.append(f"{key} = {value:.17g}" if isinstance(value, float) else f"{key} = {value}")
    text = "\n".join(lines) + "\n"
    (directory / "summary.txt").write_text(text)
    out.write(text)


def cmd_sweep(config: Config, epsilons, out=sys.stdout):
    directory = _run_dir(config)
    (directory / "config.echo").write_text(config.echo())
    workers = max(1, int(os.environ.get("MHD_THREADS", "1")))
    entries = []
    kind = "well_prepared" if config.ic_kind == "well_prepared" else "general"
    for eps in epsilons:
        config.phys_params(eps)
    try:
        limit = config.phys_params().replace(mu=config.mu, lam=config.lam)
        result = run_sweep(config.base_state(), limit, epsilons, T=config.T,
                           kind=kind, samples=config.sweep_samples, cfl=config.cfl,
                           workers=workers, on_entry=entries.append, schedule=config.phys_params)
    except Exception:
        if entries:
            write_sweep_csv(directory / "sweep.csv", result_from_entries(entries))
        raise
    write_sweep_csv(directory / "sweep.csv", result)
    summary = {"orders": result.orders, "uniform_bound_ratio": result.uniform_bound_ratio}
    (directory / "sweep_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    out.write((directory / "sweep.csv").read_text())
    for key, value in result.orders.items():
        out.write(f"order_{key} = {value:.6g}\n")
    out.write(f"uniform_bound_ratio = {result.uniform_bound_ratio:.6g}\n")
    return EXIT_OK


def cmd_check(quick=False, out=sys.stdout):
    results = run_checks(quick)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        out.write(f"{r.name:<{width}}  {status}  {r.seconds:6.2f}s  {r.detail}\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def cmd_snapshot_dump(path, field=None, out=sys.stdout):
    grid, arrays, meta = read_snapshot(path)
    if grid.dim != 2:
        raise ConfigurationError("snapshot-dump exports two-dimensional snapshots only")
    if field is not None:
        if field not in arrays:
            raise ConfigurationError(f"no field {field!r}; available: {', '.join(arrays)}")
        export_csv(out, grid, arrays[field])
        return EXIT_OK
    stem = Path(path).with_suffix("")
    for name, values in arrays.items():
        target = Path(f"{stem}_{name}.csv")
        with open(target, "w", newline="") as fh:
            export_csv(fh, grid, values)
        out.write(f"{target}\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="lowmach", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="one compressible or limit run")
    p.add_argument("config")
    p.add_argument("--resume", help="continue from a checkpoint file")
    p = sub.add_parser("sweep", help="Mach-number sweep against the limit run")
    p.add_argument("config")
    p.add_argument("--epsilons", default="0.25,0.125,0.0625")
    p = sub.add_parser("check", help="self-check suite")
    p.add_argument("--quick", action="store_true")
    p = sub.add_parser("snapshot-dump", help="convert a binary snapshot to CSV")
    p.add_argument("file")
    p.add_argument("--field")
    return parser


def _parse_epsilons(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigurationError(f"bad --epsilons list {text!r}") from None
    if not values or any(not 0 < v <= 1 for v in values):
        raise ConfigurationError("epsilons must lie in (0, 1]")
    if len(set(values)) != len(values):
        raise ConfigurationError("epsilons must be distinct")
    return values


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(parse_config(args.config), resume=args.resume)
        if args.command == "sweep":
            return cmd_sweep(parse_config(args.config), _parse_epsilons(args.epsilons))
        if args.command == "check":
            return cmd_check(args.quick)
        return cmd_snapshot_dump(args.file, args.field)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ConvergenceError, DomainError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        snapshot = getattr(exc, "snapshot", None)
        if snapshot is not None and args.command == "run":
            config = parse_config(args.config)
            path = _run_dir(config) / "failure.bin"
            save_checkpoint(path, snapshot)
            print(f"state before the failing step written to {path}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # output piped into e.g. head; silence the flush at interpreter exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

