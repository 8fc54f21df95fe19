"""Error metrics and the delay x noise Monte-Carlo sweep."""

from __future__ import annotations

import dataclasses
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidInputError
from .geometry import wrap_angle
from .simulator import ScenarioConfig, run_scenario

GROUPS = ("position", "orientation", "velocity", "angular_velocity")
GROUP_SYMBOLS = {"position": "p [m]", "orientation": "Θ [rad]", "velocity": "v [m/s]",
                 "angular_velocity": "ω [rad/s]"}
STAT_NAMES = ("rmse", "mean", "std", "max")


def state_errors(est, gt) -> np.ndarray:
    """Per-tick error norms, shape (N, 4), one column per state group.

    Orientation error is the norm of the wrapped roll/pitch/yaw differences.
    """
    est = np.asarray(est, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if est.shape != gt.shape:
        raise InvalidInputError(f"series shapes differ: {est.shape} vs {gt.shape}")
    if est.ndim != 2 or est.shape[1] != 12:
        raise InvalidInputError(f"expected (N, 12) state series, got {est.shape}")
    diff = est - gt
    diff[:, 3:6] = wrap_angle(diff[:, 3:6])
    return np.column_stack([np.linalg.norm(diff[:, i:i + 3], axis=1) for i in (0, 3, 6, 9)])


@dataclass(frozen=True)
class GroupStats:
    rmse: float
    mean: float
    std: float
    max: float


@dataclass(frozen=True)
class ErrorStats:
    position: GroupStats
    orientation: GroupStats
    velocity: GroupStats
    angular_velocity: GroupStats

    def as_dict(self) -> dict[str, dict[str, float]]:
        return {g: dataclasses.asdict(getattr(self, g)) for g in GROUPS}


def _group_stats(e: np.ndarray) -> GroupStats:
    e = np.asarray(e, dtype=float)
    if e.size == 0:
        raise InvalidInputError("empty error series")
    return GroupStats(
        rmse=float(np.sqrt(np.mean(e * e))),
        mean=float(np.mean(e)),
        std=float(np.std(e)),
        max=float(np.max(e)),
    )


def aggregate(errors) -> ErrorStats:
    """RMSE, mean, population std and max of each column of ``state_errors`` output."""
    errors = np.asarray(errors, dtype=float)
    if errors.ndim != 2 or errors.shape[0] == 0:
        raise InvalidInputError("empty error series")
    return ErrorStats(*(_group_stats(errors[:, i]) for i in range(4)))


# -- sweep ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepGrid:
    delays: tuple[float, ...] = (0.0, 0.015, 0.030, 0.060)
    position_noises: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0)
    yaw_noises: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0)
    trials: int = 10
    mode: str = "paired"  # or "product"

    def __post_init__(self):
        if not (self.delays and self.position_noises and self.yaw_noises):
            raise ConfigurationError("sweep grid lists must be non-empty")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.mode not in ("paired", "product"):
            raise ConfigurationError(f"grid mode must be 'paired' or 'product', got {self.mode!r}")
        if self.mode == "paired" and len(self.position_noises) != len(self.yaw_noises):
            raise ConfigurationError("paired grid needs as many yaw noises as position noises")

    def noise_pairs(self) -> list[tuple[float, float]]:
        if self.mode == "paired":
            return list(zip(self.position_noises, self.yaw_noises))
        return list(itertools.product(self.position_noises, self.yaw_noises))

    def cells(self) -> list[tuple[float, float, float]]:
        """``(delay, sigma_p, sigma_yaw)`` for every cell, delay-major."""
        return [(d, sp, sy) for d in self.delays for sp, sy in self.noise_pairs()]

    @property
    def total_runs(self) -> int:
        return len(self.cells()) * self.trials


def trial_seed(master: int, cell: int, trial: int) -> tuple[int, int, int]:
    """Seed entropy for one trial; independent of execution order."""
    return (int(master), int(cell), int(trial))


@dataclass(frozen=True)
class TrialResult:
    cell: int
    trial: int
    seed: tuple[int, int, int]
    fused: ErrorStats
    vio: ErrorStats


@dataclass
class CellResult:
    delay: float
    sigma_p: float
    sigma_yaw: float
    trials: list[TrialResult] = field(default_factory=list)

    def mean_stat(self, source: str, group: str, stat: str = "rmse") -> float:
        vals = [getattr(getattr(getattr(t, source), group), stat) for t in self.trials]
        return math.fsum(vals) / len(vals)


def _run_trial(job) -> TrialResult:
    config, cell, trial, seed = job
    log = run_scenario(config, rng_seed=seed)
    return TrialResult(
        cell=cell,
        trial=trial,
        seed=seed,
        fused=aggregate(state_errors(log.fused, log.gt)),
        vio=aggregate(state_errors(log.vio, log.gt)),
    )


def run_sweep(grid: SweepGrid, base: ScenarioConfig, parallel: int = 1) -> list[CellResult]:
    jobs = []
    cells = []
    for ci, (delay, sp, sy) in enumerate(grid.cells()):
        detector = dataclasses.replace(base.detector, delay=delay, sigma_p=sp, sigma_yaw=sy)
        config = dataclasses.replace(base, detector=detector)
        cells.append(CellResult(delay, sp, sy))
        for ti in range(grid.trials):
            jobs.append((config, ci, ti, trial_seed(base.seed, ci, ti)))

    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_run_trial, jobs, chunksize=1))
    else:
        results = [_run_trial(j) for j in jobs]
    for r in results:
        cells[r.cell].trials.append(r)
    return cells


# -- reports -------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def sweep_csv(cells: list[CellResult]) -> str:
    header = ["delay", "sigma_p", "sigma_yaw", "source", "group", *STAT_NAMES, "trials"]
    lines = [",".join(header)]
    for c in cells:
        for source in ("fused", "vio"):
            for g in GROUPS:
                row = [_fmt(c.delay), _fmt(c.sigma_p), _fmt(c.sigma_yaw), source, g]
                row += [_fmt(c.mean_stat(source, g, s)) for s in STAT_NAMES]
                row.append(str(len(c.trials)))
                lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def seeds_csv(cells: list[CellResult]) -> str:
    lines = ["cell,trial,delay,sigma_p,sigma_yaw,seed"]
    for ci, c in enumerate(cells):
        for t in c.trials:
            lines.append(f"{ci},{t.trial},{_fmt(c.delay)},{_fmt(c.sigma_p)},{_fmt(c.sigma_yaw)},"
                         + "-".join(str(s) for s in t.seed))
    return "\n".join(lines) + "\n"


def sweep_markdown(cells: list[CellResult]) -> str:
    """Table with rows delay x state group and our-approach / VIO column blocks."""
    noises = []
    for c in cells:
        if (c.sigma_p, c.sigma_yaw) not in noises:
            noises.append((c.sigma_p, c.sigma_yaw))
    delays = []
    for c in cells:
        if c.delay not in delays:
            delays.append(c.delay)
    by_key = {(c.delay, c.sigma_p, c.sigma_yaw): c for c in cells}

    def noise_label(sp, sy):
        return f"{sp:g} / {sy:g}"

    head = ["τ_d [ms]", "state"]
    head += [f"ours {noise_label(*n)}" for n in noises] + [f"VIO {noise_label(*n)}" for n in noises]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for d in delays:
        for g in GROUPS:
            row = [f"{d * 1000:g}", GROUP_SYMBOLS[g]]
            for source in ("fused", "vio"):
                for n in noises:
                    c = by_key.get((d, *n))
                    row.append("" if c is None else f"{c.mean_stat(source, g):.3f}")
            lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
