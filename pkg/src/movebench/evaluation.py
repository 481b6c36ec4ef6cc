"""Grid evaluation of policies over object start positions, and the canned comparison suites."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .datagen import CIRCLE_RADIUS, Paradigm, Sampling, build_dataset, default_schedule
from .motion import ABLATION_SCHEDULES, AugmentationSchedule, MotionParams
from .policy import (
    ChunkController,
    ExpertController,
    PolicyCheckpoint,
    RandomController,
    TrainConfig,
    run_episodes,
    train,
    train_bc_baseline,
)
from .world import Level, WorldConfig, config_with_object, object_position_feasible, reset

log = logging.getLogger(__name__)


@dataclass
class EvalReport:
    resolution: int
    episodes_per_cell: int
    level: int
    seed: int
    half_extent: float
    attempts: np.ndarray  # (resolution, resolution), indexed [iy, ix]
    successes: np.ndarray
    scores: np.ndarray
    policy: str = ""
    dataset: str = ""

    @property
    def centers(self) -> np.ndarray:
        return grid_centers(self.resolution, self.half_extent)

    @property
    def success_rate(self) -> float:
        return float(self.successes.sum() / self.attempts.sum())

    @property
    def normalized_score(self) -> float:
        return normalized_score(self)

    def region_success(self, inside: bool, radius: float = CIRCLE_RADIUS) -> float:
        mask = circle_mask(self.resolution, self.half_extent, radius)
        if not inside:
            mask = ~mask
        att = self.attempts[mask].sum()
        return float(self.successes[mask].sum() / att) if att else float("nan")

    def summary(self) -> dict:
        return {
            "resolution": self.resolution,
            "episodes_per_cell": self.episodes_per_cell,
            "level": self.level,
            "seed": self.seed,
            "half_extent": self.half_extent,
            "attempts": int(self.attempts.sum()),
            "successes": int(self.successes.sum()),
            "total_score": int(self.scores.sum()),
            "success_rate": self.success_rate,
            "normalized_score": self.normalized_score,
            "in_circle_success": self.region_success(True),
            "out_circle_success": self.region_success(False),
            "policy": self.policy,
            "dataset": self.dataset,
        }


def grid_centers(resolution: int, half_extent: float = 0.3) -> np.ndarray:
    width = 2.0 * half_extent / resolution
    return -half_extent + width * (np.arange(resolution) + 0.5)


def circle_mask(resolution: int, half_extent: float = 0.3, radius: float = CIRCLE_RADIUS) -> np.ndarray:
    c = grid_centers(resolution, half_extent)
    xx, yy = np.meshgrid(c, c)
    return np.hypot(xx, yy) < radius


def normalized_score(report: EvalReport) -> float:
    attempts = int(np.sum(report.attempts))
    if attempts <= 0:
        raise ValueError("normalized score needs at least one attempt")
    return float(np.sum(report.scores)) / (3.0 * attempts)


def _episode_seed(seed: int, iy: int, ix: int, e: int) -> tuple[int, int]:
    ss = np.random.SeedSequence([seed, iy, ix, e])
    a, b = ss.generate_state(2, np.uint64)
    return int(a), int(b)


def _make_controller(policy, cfg: WorldConfig, params: MotionParams):
    if isinstance(policy, PolicyCheckpoint):
        return ChunkController(policy), policy.horizons.observation
    if policy == "expert":
        return ExpertController(params=params, cfg=cfg), 2
    if policy == "random":
        return RandomController(), 2
    return policy, 2


def _run_cells(policy, cells, level, seed, cfg, params, max_steps):
    controller, obs_h = _make_controller(policy, cfg, params)
    worlds, rngs = [], []
    for iy, ix, e, pos in cells:
        cseed, pseed = _episode_seed(seed, iy, ix, e)
        config = config_with_object(pos, level, np.random.default_rng(cseed), cfg)
        worlds.append(reset(config, cfg=cfg))
        rngs.append(np.random.default_rng(pseed))
    outcomes = run_episodes(controller, worlds, max_steps, rngs, params=params, cfg=cfg, obs_horizon=obs_h)
    return [(iy, ix, o.score) for (iy, ix, _, _), o in zip(cells, outcomes)]


def eval_grid(
    policy,
    resolution: int = 13,
    episodes_per_cell: int = 3,
    level: Level | int = Level.OBJECT_ONLY,
    seed: int = 0,
    cfg: WorldConfig = WorldConfig(),
    params: MotionParams = MotionParams(),
    jobs: int = 1,
    max_steps: int | None = None,
) -> EvalReport:
    """Start the object at every cell center ``episodes_per_cell`` times and score each episode.

    ``policy`` is a checkpoint, ``"expert"``, ``"random"``, or any controller object.
    Cells where no valid config exists (level 1, too close to the fixed target) are
    skipped and keep zero attempts.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if episodes_per_cell < 1:
        raise ValueError("episodes_per_cell must be >= 1")
    level = Level(level)
    max_steps = cfg.step_limit if max_steps is None else max_steps
    c = grid_centers(resolution, cfg.half_extent)
    cells = [
        (iy, ix, e, (float(c[ix]), float(c[iy])))
        for iy in range(resolution)
        for ix in range(resolution)
        for e in range(episodes_per_cell)
        if object_position_feasible((float(c[ix]), float(c[iy])), level, cfg)
    ]
    if jobs > 1:
        parts = [cells[k::jobs] for k in range(jobs)]
        with ProcessPoolExecutor(jobs) as pool:
            futs = [pool.submit(_run_cells, policy, p, level, seed, cfg, params, max_steps) for p in parts]
            results = [r for f in futs for r in f.result()]
    else:
        results = _run_cells(policy, cells, level, seed, cfg, params, max_steps)

    attempts = np.zeros((resolution, resolution), dtype=np.int64)
    successes = np.zeros_like(attempts)
    scores = np.zeros_like(attempts)
    for iy, ix, s in results:
        attempts[iy, ix] += 1
        successes[iy, ix] += s == 3
        scores[iy, ix] += s
    name = policy.digest() if isinstance(policy, PolicyCheckpoint) else str(policy if isinstance(policy, str) else type(policy).__name__)
    return EvalReport(
        resolution=resolution,
        episodes_per_cell=episodes_per_cell,
        level=int(level),
        seed=seed,
        half_extent=cfg.half_extent,
        attempts=attempts,
        successes=successes,
        scores=scores,
        policy=name,
        dataset=policy.dataset_digest if isinstance(policy, PolicyCheckpoint) else "",
    )


# --- report files -------------------------------------------------------------


def write_report(report: EvalReport, out_dir: str | os.PathLike, figures: bool = True) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    c = report.centers
    paths = {"csv": out / "cells.csv", "json": out / "summary.json", "pgm": out / "heatmap.pgm"}
    with open(paths["csv"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "attempts", "successes", "score"])
        for iy in range(report.resolution):
            for ix in range(report.resolution):
                w.writerow(
                    [f"{c[ix]:.6f}", f"{c[iy]:.6f}", report.attempts[iy, ix], report.successes[iy, ix], report.scores[iy, ix]]
                )
    paths["json"].write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    paths["pgm"].write_text(pgm_text(report))
    if figures:
        from .plotting import plot_heatmap

        paths["png"] = plot_heatmap(report, out / "heatmap.png")
    return paths


def pgm_text(report: EvalReport) -> str:
    """Plain (P2) PGM of per-cell success fraction; top row is the largest y."""
    frac = np.divide(report.successes, report.attempts, out=np.zeros(report.attempts.shape), where=report.attempts > 0)
    pix = np.rint(frac * 255).astype(int)[::-1]
    rows = "\n".join(" ".join(str(v) for v in row) for row in pix)
    return f"P2\n{report.resolution} {report.resolution}\n255\n{rows}\n"


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    tokens = Path(path).read_text().split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    vals = np.array([int(t) for t in tokens[4:]], dtype=int)
    if vals.size != w * h or vals.max(initial=0) > maxval:
        raise ValueError("PGM pixel data does not match its header")
    return vals.reshape(h, w)


# --- comparison suites ----------------------------------------------------------

EXPERIMENTS = ("sparse9", "dense", "circle", "ladder", "dims", "vmax", "triple", "efficiency")
EFFICIENCY_BUDGETS = (5_000, 10_000, 20_000)
VMAX_FACTORS = (0.5, 1.0, 2.0, 4.0)


@dataclass(frozen=True)
class Arm:
    name: str
    paradigm: Paradigm
    sampling: Sampling
    level: Level
    budget: int
    schedule: AugmentationSchedule | None = None
    params: MotionParams = MotionParams()


def experiment_arms(experiment: str, budget: int, params: MotionParams = MotionParams()) -> list[Arm]:
    S, A, M = Paradigm.STATIC, Paradigm.ADC, Paradigm.MOVE
    L1, L3 = Level.OBJECT_ONLY, Level.OBJECT_TARGET_CAMERA
    if experiment == "sparse9":
        return [Arm("static", S, Sampling.SPARSE9, L1, budget), Arm("move", M, Sampling.SPARSE9, L1, budget)]
    if experiment == "dense":
        return [Arm("static", S, Sampling.DENSE, L1, budget), Arm("move", M, Sampling.DENSE, L1, budget)]
    if experiment == "circle":
        return [Arm("static", S, Sampling.CIRCLE, L1, budget), Arm("move", M, Sampling.CIRCLE, L1, budget)]
    if experiment == "ladder":
        return [
            Arm("object", S, Sampling.DENSE, Level.OBJECT_ONLY, budget),
            Arm("+target", S, Sampling.DENSE, Level.OBJECT_TARGET, budget),
            Arm("+camera", S, Sampling.DENSE, Level.OBJECT_TARGET_CAMERA, budget),
        ]
    if experiment == "triple":
        return [Arm(p.value, p, Sampling.DENSE, L3, budget) for p in (S, A, M)]
    if experiment == "dims":
        return [Arm(name, M, Sampling.DENSE, L3, budget, schedule=s) for name, s in ABLATION_SCHEDULES.items()]
    if experiment == "vmax":
        return [
            Arm(f"vmax_x{f:g}", M, Sampling.DENSE, L3, budget, params=replace(params, v_max=params.v_max * f))
            for f in VMAX_FACTORS
        ]
    if experiment == "efficiency":
        arms = []
        for b in EFFICIENCY_BUDGETS:
            arms.append(Arm(f"move@{b}", M, Sampling.DENSE, L3, b))
            arms.append(Arm(f"static@{2 * b}", S, Sampling.DENSE, L3, 2 * b))
        return arms
    raise ValueError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")


@dataclass
class ArmResult:
    arm: Arm
    runs: list[dict] = field(default_factory=list)
    failed: str = ""

    def _values(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.runs], dtype=float)

    def mean(self, key: str = "success_rate") -> float:
        return float(np.mean(self._values(key))) if self.runs else float("nan")

    def std(self, key: str = "success_rate") -> float:
        return float(np.std(self._values(key))) if self.runs else float("nan")


@dataclass
class ComparisonReport:
    experiment: str
    budget: int
    seeds: list[int]
    arms: list[ArmResult]
    reports: dict[tuple[str, int], EvalReport] = field(default_factory=dict)

    def arm(self, name: str) -> ArmResult:
        for a in self.arms:
            if a.arm.name == name:
                return a
        raise KeyError(name)

    def to_dict(self) -> dict:
        keys = ("success_rate", "normalized_score", "in_circle_success", "out_circle_success", "total_timesteps")
        return {
            "experiment": self.experiment,
            "budget": self.budget,
            "seeds": self.seeds,
            "arms": [
                {
                    "name": a.arm.name,
                    "paradigm": a.arm.paradigm.value,
                    "sampling": a.arm.sampling.value,
                    "level": int(a.arm.level),
                    "budget": a.arm.budget,
                    "v_max": a.arm.params.v_max,
                    "schedule": (a.arm.schedule or default_schedule(a.arm.paradigm, a.arm.level)).as_dict(),
                    "failed": a.failed,
                    "runs": a.runs,
                    "mean": {k: a.mean(k) for k in keys},
                    "std": {k: a.std(k) for k in keys},
                }
                for a in self.arms
            ],
        }


def run_arm(
    arm: Arm,
    seed: int,
    train_config: TrainConfig = TrainConfig(),
    policy_kind: str = "diffusion",
    resolution: int = 13,
    episodes_per_cell: int = 3,
    cfg: WorldConfig = WorldConfig(),
    jobs: int = 1,
) -> tuple[dict, EvalReport]:
    t0 = time.time()
    ds = build_dataset(
        arm.paradigm, arm.sampling, arm.budget, arm.level, seed, params=arm.params, cfg=cfg, schedule=arm.schedule, jobs=jobs
    )
    tc = replace(train_config, seed=seed)
    ckpt = train(ds, tc) if policy_kind == "diffusion" else train_bc_baseline(ds, tc)
    report = eval_grid(ckpt, resolution, episodes_per_cell, arm.level, seed, cfg=cfg, jobs=jobs)
    run = report.summary()
    run.update(
        total_timesteps=ds.total_timesteps,
        trajectories=len(ds),
        generation_success_rate=ds.generation_success_rate,
        seconds=round(time.time() - t0, 1),
    )
    log.info("%s seed %d: success %.3f (%d trajectories)", arm.name, seed, run["success_rate"], len(ds))
    return run, report


def run_comparison(
    experiment: str,
    budget: int = 20_000,
    seeds: Sequence[int] = (1, 2, 3),
    train_config: TrainConfig = TrainConfig(),
    policy_kind: str = "diffusion",
    resolution: int = 13,
    episodes_per_cell: int = 3,
    cfg: WorldConfig = WorldConfig(),
    params: MotionParams = MotionParams(),
    jobs: int = 1,
) -> ComparisonReport:
    if not seeds:
        raise ValueError("at least one seed is required")
    arms = experiment_arms(experiment, budget, params)
    results = [ArmResult(a) for a in arms]
    report = ComparisonReport(experiment, budget, list(seeds), results)
    for seed in seeds:
        for res in results:
            if res.failed:
                continue
            try:
                run, ev = run_arm(res.arm, seed, train_config, policy_kind, resolution, episodes_per_cell, cfg, jobs)
            except Exception as exc:  # one arm failing must not sink the others
                log.error("arm %s failed: %s", res.arm.name, exc)
                res.failed = f"{type(exc).__name__}: {exc}"
                continue
            res.runs.append(run)
            report.reports[(res.arm.name, seed)] = ev
    return report


def budget_spread(report: ComparisonReport) -> float:
    """Largest relative gap in consumed timesteps between arms that share a nominal budget."""
    groups: dict[int, list[float]] = {}
    for a in report.arms:
        for r in a.runs:
            groups.setdefault(a.arm.budget, []).append(r["total_timesteps"])
    spread = 0.0
    for vals in groups.values():
        spread = max(spread, (max(vals) - min(vals)) / max(vals))
    return spread


def write_comparison(report: ComparisonReport, out_dir: str | os.PathLike, figures: bool = True) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"json": out / "comparison.json", "csv": out / "comparison.csv"}
    paths["json"].write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    with open(paths["csv"], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arm", "seed", "success_rate", "normalized_score", "in_circle", "out_circle", "total_timesteps"])
        for a in report.arms:
            for seed, r in zip(report.seeds, a.runs):
                w.writerow(
                    [
                        a.arm.name,
                        r["seed"],
                        f"{r['success_rate']:.6f}",
                        f"{r['normalized_score']:.6f}",
                        f"{r['in_circle_success']:.6f}",
                        f"{r['out_circle_success']:.6f}",
                        r["total_timesteps"],
                    ]
                )
    for (name, seed), ev in report.reports.items():
        write_report(ev, out / "cells" / f"{_slug(name)}_seed{seed}", figures=False)
    if figures:
        from .plotting import plot_comparison, plot_heatmap

        paths["png"] = plot_comparison(report, out / "comparison.png")
        for (name, seed), ev in report.reports.items():
            plot_heatmap(ev, out / "cells" / f"{_slug(name)}_seed{seed}" / "heatmap.png")
    return paths


def _slug(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "._-" else "_" for ch in name)
