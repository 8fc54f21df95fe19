"""Command line entry point: ``simulate``, ``sweep`` and ``replay``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or data error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from . import logs
from .errors import ConfigurationError, DataError
from .evaluation import GROUP_SYMBOLS, GROUPS, STAT_NAMES, ErrorStats, aggregate, run_sweep, seeds_csv, \
    state_errors, sweep_csv, sweep_markdown
from .geometry import StaticTransform
from .pipeline import run_estimator
from .simulator import ScenarioConfig, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

CONFIG_FILE = "config.cfg"
SUMMARY_JSON = "summary.json"
SUMMARY_MD = "summary.md"
SWEEP_CSV = "sweep.csv"
SWEEP_MD = "sweep.md"
SEEDS_CSV = "seeds.csv"

log = logging.getLogger("viodrift")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _accepted_flags(measurements, records) -> list[bool]:
    verdict = {(r.t_meas, r.t_delivered): r.accepted for r in records}
    out = []
    for m in measurements:
        delivered = m.delivery_time if m.delivery_time is not None else m.timestamp
        out.append(verdict.get((m.timestamp, delivered), False))
    return out


def summary_json(stats: dict[str, ErrorStats]) -> str:
    body = {source: s.as_dict() for source, s in stats.items()}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"


def summary_markdown(stats: dict[str, ErrorStats]) -> str:
    sources = list(stats)
    head = ["state"] + [f"{src} {s}" for src in sources for s in STAT_NAMES]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for g in GROUPS:
        row = [GROUP_SYMBOLS[g]]
        for src in sources:
            gs = getattr(stats[src], g)
            row += [f"{getattr(gs, s):.4f}" for s in STAT_NAMES]
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _write_summary(out: Path, stats: dict[str, ErrorStats]) -> None:
    logs.write_text(out / SUMMARY_JSON, summary_json(stats))
    logs.write_text(out / SUMMARY_MD, summary_markdown(stats))


# -- commands --------------------------------------------------------------------


def cmd_simulate(config: ScenarioConfig, out: Path) -> dict[str, ErrorStats]:
    out.mkdir(parents=True, exist_ok=True)
    run = run_scenario(config)
    accepted = _accepted_flags(run.measurements, run.estimate.records)
    effective = dataclasses.replace(config, init=run.init_pose)

    logs.write_text(out / logs.RUN_FILE, logs.run_log_text(run.t, run.gt, run.vio, run.fused, run.drift))
    logs.write_text(out / logs.FUSED_FILE, logs.fused_log_text(run.t, run.fused, run.drift))
    logs.write_text(out / logs.MEASUREMENT_FILE, logs.measurement_log_text(run.measurements, accepted))
    logs.write_text(out / logs.VIO_FILE, logs.raw_vio_text(run.raw_vio))
    logs.write_text(out / logs.IMU_FILE, logs.imu_text(run.imu))
    logs.write_text(out / CONFIG_FILE, cfg.dump_scenario(effective))

    stats = {"fused": aggregate(state_errors(run.fused, run.gt)),
             "vio": aggregate(state_errors(run.vio, run.gt))}
    _write_summary(out, stats)
    log.info("simulated %d ticks, %d/%d landmark fixes accepted",
             len(run.t), sum(accepted), len(accepted))
    return stats


def cmd_sweep(config: ScenarioConfig, grid, out: Path, parallel: int = 1):
    out.mkdir(parents=True, exist_ok=True)
    log.info("sweep: %d cells x %d trials = %d runs", len(grid.cells()), grid.trials, grid.total_runs)
    cells = run_sweep(grid, config, parallel=parallel)
    logs.write_text(out / SWEEP_CSV, sweep_csv(cells))
    logs.write_text(out / SWEEP_MD, sweep_markdown(cells))
    logs.write_text(out / SEEDS_CSV, seeds_csv(cells))
    return cells


def cmd_replay(log_dir: Path, config: ScenarioConfig, out: Path) -> dict[str, ErrorStats] | None:
    vio = logs.read_raw_vio(log_dir / logs.VIO_FILE)
    imu = logs.read_imu(log_dir / logs.IMU_FILE)
    measurements = logs.read_measurements(log_dir / logs.MEASUREMENT_FILE)
    if np.any(np.diff(vio.t) <= 0) or np.any(np.diff(imu.t) < 0):
        raise DataError("odometry and IMU timestamps must be increasing")

    # without a known start pose the odometry frame is taken as the world frame
    T = config.init.transform() if config.init.is_set else StaticTransform((0.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0))
    est = run_estimator(vio, imu, measurements, config.estimator_params(), T)

    out.mkdir(parents=True, exist_ok=True)
    accepted = _accepted_flags(measurements, est.records)
    logs.write_text(out / logs.FUSED_FILE, logs.fused_log_text(est.t, est.fused, est.drift))
    logs.write_text(out / logs.MEASUREMENT_FILE, logs.measurement_log_text(measurements, accepted))

    run_path = log_dir / logs.RUN_FILE
    if not run_path.exists():
        return None
    table = logs.read_table(run_path, ("t",))
    if not table.has(logs.GT_COLUMNS):
        return None
    if len(table.data) != len(est.t) or not np.array_equal(table.column("t"), est.t):
        raise DataError(f"{run_path}: ground-truth ticks do not match the odometry ticks")
    gt = table.columns(logs.GT_COLUMNS)
    stats = {"fused": aggregate(state_errors(est.fused, gt)),
             "vio": aggregate(state_errors(est.vio, gt))}
    _write_summary(out, stats)
    return stats


# -- argument handling -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="viodrift", description="VIO drift estimation: simulation, sweeps and log replay.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run one scenario and write its logs and summary")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep over detector delay and noise")
    p.add_argument("--config", type=Path)
    p.add_argument("--grid", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--parallel", type=int, default=1)

    p = sub.add_parser("replay", help="re-run the estimator over recorded streams")
    p.add_argument("--log", type=Path, required=True, help="directory with vio.csv, imu.csv, measurements.csv")
    p.add_argument("--config", type=Path, help=f"estimator config (default: LOG/{CONFIG_FILE} if present)")
    p.add_argument("--out", type=Path, required=True)
    return parser


def _load_config(path: Path | None, seed: int | None) -> ScenarioConfig:
    if path is not None and not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    config = cfg.load_scenario(path)
    if seed is not None:
        config = dataclasses.replace(config, seed=seed)
    return config


def run(args: argparse.Namespace) -> int:
    if args.command == "simulate":
        stats = cmd_simulate(_load_config(args.config, args.seed), args.out)
        print(summary_markdown(stats), end="")
    elif args.command == "sweep":
        if args.parallel < 1:
            raise ConfigurationError("--parallel must be >= 1", key="parallel")
        config = _load_config(args.config, args.seed)
        if args.grid is not None and not args.grid.is_file():
            raise ConfigurationError(f"grid file not found: {args.grid}")
        grid = cfg.load_grid(args.grid)
        if args.trials is not None:
            grid = cfg.grid_from_dict({"trials": str(args.trials)}, grid)
        cells = cmd_sweep(config, grid, args.out, args.parallel)
        print(sweep_markdown(cells), end="")
    elif args.command == "replay":
        path = args.config
        if path is None and (args.log / CONFIG_FILE).is_file():
            path = args.log / CONFIG_FILE
        stats = cmd_replay(args.log, _load_config(path, None), args.out)
        if stats is not None:
            print(summary_markdown(stats), end="")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
