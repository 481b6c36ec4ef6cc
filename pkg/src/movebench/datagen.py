"""Budget-matched demonstration datasets and their on-disk container."""

from __future__ import annotations

import enum
import json
import logging
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from .expert import GenerationError, Trajectory, collect_or_retry, run_expert_episode
from .motion import (
    AugmentationSchedule,
    MotionParams,
    MotionSet,
    MotionState,
    Phase,
    advance_rotation,
    advance_translation,
    sample_camera_state,
    sample_motion_state,
)
from .world import (
    ACT_DIM,
    OBS_DIM,
    Level,
    SpatialConfig,
    WorldConfig,
    WorldState,
    config_with_object,
    object_position_feasible,
    randomize_config,
    reset,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
ADC_RESET_PERIOD = 40
CIRCLE_RADIUS = 0.18
CIRCLE_POINTS = 24
ALIGN_RESAMPLES = 200
ALIGN_TOLERANCE = 0.01
MAX_RETRIES = 5


class Paradigm(str, enum.Enum):
    STATIC = "static"
    ADC = "adc"
    MOVE = "move"


class Sampling(str, enum.Enum):
    SPARSE9 = "sparse9"
    DENSE = "dense"
    CIRCLE = "circle"


class FormatError(ValueError):
    """Malformed or corrupted dataset file."""


class VersionError(FormatError):
    pass


@dataclass
class Dataset:
    trajectories: list[Trajectory]
    paradigm: Paradigm
    sampling: Sampling
    budget: int
    seed: int
    level: Level = Level.OBJECT_ONLY
    attempts: int = 0
    failures: int = 0
    world_digest: str = ""

    @property
    def total_timesteps(self) -> int:
        return sum(t.length for t in self.trajectories)

    @property
    def generation_success_rate(self) -> float:
        return 1.0 - self.failures / self.attempts if self.attempts else 1.0

    def __len__(self) -> int:
        return len(self.trajectories)


# --- sampling strategies ----------------------------------------------------


def sparse9_points(cfg: WorldConfig = WorldConfig()) -> list[tuple[float, float]]:
    # grid at two thirds of the half extent: {-0.2, 0, 0.2}^2 for the default workspace
    g = round(cfg.half_extent * 2.0 / 3.0, 12)
    return [(x, y) for y in (g, 0.0, -g) for x in (-g, 0.0, g)]


def circle_points(
    center: tuple[float, float] = (0.0, 0.0), radius: float = CIRCLE_RADIUS, n: int = CIRCLE_POINTS
) -> list[tuple[float, float]]:
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if n < 1:
        raise ValueError("n must be >= 1")
    return [
        (center[0] + radius * math.cos(2.0 * math.pi * k / n), center[1] + radius * math.sin(2.0 * math.pi * k / n))
        for k in range(n)
    ]


def strategy_points(sampling: Sampling, level: Level | int, cfg: WorldConfig = WorldConfig()) -> list[tuple[float, float]]:
    """Fixed object starts of a sampling strategy that admit a valid config at ``level``.

    At level 1 this drops the sparse grid point lying on the fixed target.
    """
    if sampling == Sampling.SPARSE9:
        pts = sparse9_points(cfg)
    elif sampling == Sampling.CIRCLE:
        pts = circle_points()
    else:
        return []
    return [p for p in pts if object_position_feasible(p, level, cfg)]


def _strategy_point(sampling: Sampling, index: int, level: Level, cfg: WorldConfig) -> tuple[float, float] | None:
    pts = strategy_points(sampling, level, cfg)
    return pts[index % len(pts)] if pts else None


def _random_strategy_point(sampling: Sampling, level: Level, rng: np.random.Generator, cfg: WorldConfig) -> tuple[float, float]:
    pts = strategy_points(sampling, level, cfg)
    if pts:
        return pts[int(rng.integers(len(pts)))]
    h = cfg.half_extent
    x, y = rng.uniform(-h, h, size=2)
    return (float(x), float(y))


# --- motion samplers --------------------------------------------------------


def free_motion_sampler(params: MotionParams):
    def sample(config: SpatialConfig, rng: np.random.Generator) -> MotionSet:
        return MotionSet(
            sample_motion_state(config.object_pos, config.object_heading, params, rng),
            sample_motion_state(config.target_pos, 0.0, params, rng),
            sample_camera_state(config.camera_angle, params, rng),
        )

    return sample


def aligned_motion_sampler(
    schedule: AugmentationSchedule,
    params: MotionParams,
    cfg: WorldConfig,
    region_radius: float | None = None,
):
    """Moving-object draws whose expert grasp happens at the config's object position.

    The object is run backwards in time from the grasp point, so that moving forward it
    arrives there when the expert reaches it; the arrival time is refined by simulating
    the pick phase. With ``region_radius`` the whole path must stay inside that disk.
    """

    def sample(config: SpatialConfig, rng: np.random.Generator) -> MotionSet:
        goal = config.object_pos
        for _ in range(ALIGN_RESAMPLES):
            draw = sample_motion_state(goal, config.object_heading, params, rng)
            target = sample_motion_state(config.target_pos, 0.0, params, rng)
            camera = sample_camera_state(config.camera_angle, params, rng)
            tau = math.dist(cfg.gripper_home, goal) / cfg.gripper_speed
            for _ in range(6):
                start = _rewind(draw, tau, schedule, params, cfg)
                if start is None:
                    break
                if region_radius is not None and math.hypot(*start.pos) > region_radius + 1e-9:
                    break
                motions = MotionSet(start, target, camera)
                ep = run_expert_episode(reset(config, motions, cfg), schedule, params, cfg, until_grasp=True)
                if not ep.final.grasped:
                    break
                # object position right before the grasp snapped it to the gripper
                held_at = _object_before_grasp(start, ep.length, schedule, params, cfg)
                if math.dist(held_at, goal) <= ALIGN_TOLERANCE:
                    return motions
                tau = (ep.length - 1) * cfg.dt
        raise GenerationError(f"could not align a moving object to grasp point {goal}")

    return sample


def _rewind(state: MotionState, tau: float, schedule, params, cfg) -> MotionState | None:
    back = MotionState(
        state.pos, (-state.direction[0], -state.direction[1]), state.speed_frac, state.heading, state.omega_frac, -state.spin
    )
    if schedule.pick_object_translation:
        back = advance_translation(back, params, cfg.bounds, tau)
    if schedule.pick_object_rotation:
        back = advance_rotation(back, params, tau)
    return MotionState(
        back.pos, (-back.direction[0], -back.direction[1]), back.speed_frac, back.heading, back.omega_frac, -back.spin
    )


def _object_before_grasp(start: MotionState, n_steps: int, schedule, params, cfg) -> tuple[float, float]:
    # the object moves during steps 0..n-2; it is grasped inside step n-1 before moving
    if not schedule.pick_object_translation or n_steps <= 1:
        return start.pos
    s = start
    for _ in range(n_steps - 1):
        s = advance_translation(s, params, cfg.bounds, cfg.dt)
    return s.pos


def adc_disturbance(sampling: Sampling, config: SpatialConfig, cfg: WorldConfig, period: int = ADC_RESET_PERIOD):
    """Factory for a hook that teleports the object every ``period`` steps until it is grasped."""

    def factory(rng: np.random.Generator):
        def disturb(world: WorldState) -> WorldState:
            n = world.step_count
            if n == 0 or n % period or world.phase != Phase.PICK or world.grasped:
                return world
            for _ in range(cfg.max_config_tries):
                pos = _random_strategy_point(sampling, config.level, rng, cfg)
                if math.dist(pos, world.target.pos) >= cfg.min_separation:
                    break
            heading = float(math.pi - rng.uniform(0.0, 2.0 * math.pi))
            obj = MotionState(pos, world.object.direction, world.object.speed_frac, heading, world.object.omega_frac, world.object.spin)
            return WorldState(
                world.gripper,
                MotionSet(obj, world.target, world.camera),
                world.grasped,
                world.phase,
                world.step_count,
                world.hold_steps,
                world.events,
            )

        return disturb

    return factory


# --- dataset construction ---------------------------------------------------


def trajectory_seed(seed: int, index: int) -> int:
    """64-bit per-trajectory seed split off the dataset seed by index."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class _Job:
    paradigm: Paradigm
    sampling: Sampling
    level: Level
    seed: int
    schedule: AugmentationSchedule
    params: MotionParams
    cfg: WorldConfig
    adc_period: int


def default_schedule(paradigm: Paradigm, level: Level) -> AugmentationSchedule:
    return AugmentationSchedule.for_level(level) if paradigm == Paradigm.MOVE else AugmentationSchedule.static()


def _collect(job: _Job, index: int) -> tuple[Trajectory | None, int, int]:
    """One trajectory slot: returns (trajectory or None, rollouts, failed rollouts)."""
    tseed = trajectory_seed(job.seed, index)
    rng = np.random.default_rng(tseed)
    cfg = job.cfg
    point = _strategy_point(job.sampling, index, job.level, cfg)
    try:
        if point is None:
            config = randomize_config(job.level, rng, cfg)
        else:
            config = config_with_object(point, job.level, rng, cfg)
        sampler = None
        disturb = None
        if job.paradigm == Paradigm.MOVE:
            if job.sampling == Sampling.DENSE:
                sampler = free_motion_sampler(job.params)
            else:
                radius = CIRCLE_RADIUS if job.sampling == Sampling.CIRCLE else None
                sampler = aligned_motion_sampler(job.schedule, job.params, cfg, radius)
        elif job.paradigm == Paradigm.ADC:
            disturb = adc_disturbance(job.sampling, config, cfg, job.adc_period)
        traj = collect_or_retry(
            config,
            job.schedule,
            MAX_RETRIES,
            rng,
            motion_sampler=sampler,
            params=job.params,
            cfg=cfg,
            disturb_factory=disturb,
            paradigm=job.paradigm.value,
            seed=tseed,
        )
    except GenerationError as exc:
        log.info("trajectory slot %d dropped: %s", index, exc)
        return None, MAX_RETRIES, MAX_RETRIES
    return traj, traj.retries, traj.retries - 1


def build_dataset(
    paradigm: Paradigm | str,
    sampling: Sampling | str,
    budget: int,
    level: Level | int = Level.OBJECT_ONLY,
    seed: int = 0,
    params: MotionParams = MotionParams(),
    cfg: WorldConfig = WorldConfig(),
    schedule: AugmentationSchedule | None = None,
    adc_period: int = ADC_RESET_PERIOD,
    jobs: int = 1,
) -> Dataset:
    paradigm, sampling, level = Paradigm(paradigm), Sampling(sampling), Level(level)
    if budget < 1000:
        raise ValueError(f"budget must be >= 1000 timesteps, got {budget}")
    if schedule is None:
        schedule = default_schedule(paradigm, level)
    job = _Job(paradigm, sampling, level, seed, schedule, params, cfg, adc_period)
    max_slots = max(100, budget // 5)

    trajectories: list[Trajectory] = []
    total = attempts = failures = 0
    block = max(16, 4 * jobs)
    pool = ProcessPoolExecutor(jobs) if jobs > 1 else None
    try:
        index = 0
        done = False
        while not done:
            if index >= max_slots:
                raise GenerationError(
                    f"budget {budget} unreachable: {total} steps after {index} slots "
                    f"({attempts} rollouts, {failures} failed)",
                    attempts=attempts,
                    failures=failures,
                )
            indices = range(index, min(index + block, max_slots))
            fn = partial(_collect, job)
            results = pool.map(fn, indices) if pool is not None else map(fn, indices)
            for traj, n_roll, n_fail in results:
                index += 1
                attempts += n_roll
                failures += n_fail
                if traj is None:
                    continue
                if total + traj.length >= budget:
                    overshoot = total + traj.length - budget
                    if overshoot < traj.length / 2:
                        trajectories.append(traj)
                        total += traj.length
                    done = True
                    break
                trajectories.append(traj)
                total += traj.length
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)

    return Dataset(
        trajectories=trajectories,
        paradigm=paradigm,
        sampling=sampling,
        budget=budget,
        seed=seed,
        level=level,
        attempts=attempts,
        failures=failures,
        world_digest=cfg.digest(),
    )


# --- serialization ----------------------------------------------------------

_HEADER_KEYS = {
    "format_version",
    "paradigm",
    "sampling",
    "budget",
    "total_timesteps",
    "seed",
    "world_config_digest",
    "level",
    "generation",
}


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _record(traj: Trajectory) -> str:
    obs = ",".join(map(_fmt, traj.observations.ravel()))
    act = ",".join(map(_fmt, traj.actions.ravel()))
    meta = json.dumps(
        {
            "config": traj.config.to_dict(),
            "schedule": traj.schedule.as_dict(),
            "length": traj.length,
            "seed": traj.seed,
            "paradigm": traj.paradigm,
            "retries": traj.retries,
        },
        sort_keys=True,
    )
    return f'{meta[:-1]}, "observations": [{obs}], "actions": [{act}]}}'


def dumps_dataset(dataset: Dataset) -> bytes:
    header = {
        "format_version": FORMAT_VERSION,
        "paradigm": dataset.paradigm.value,
        "sampling": dataset.sampling.value,
        "budget": dataset.budget,
        "total_timesteps": dataset.total_timesteps,
        "seed": dataset.seed,
        "world_config_digest": dataset.world_digest,
        "level": int(dataset.level),
        "generation": {"attempts": dataset.attempts, "failures": dataset.failures},
    }
    lines = [json.dumps(header, sort_keys=True)] + [_record(t) for t in dataset.trajectories]
    body = ("\n".join(lines) + "\n").encode("ascii")
    return body + f"{zlib.crc32(body)}\n".encode("ascii")


def write_dataset(dataset: Dataset, path: str | os.PathLike) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps_dataset(dataset))
    tmp.replace(path)


def loads_dataset(blob: bytes) -> Dataset:
    if not blob.endswith(b"\n"):
        raise FormatError("file does not end with a newline (truncated?)")
    cut = blob.rstrip(b"\n").rfind(b"\n")
    if cut < 0:
        raise FormatError("missing checksum line")
    body, crc_line = blob[: cut + 1], blob[cut + 1 :].strip()
    try:
        crc = int(crc_line)
    except ValueError:
        raise FormatError(f"checksum line is not an integer: {crc_line[:40]!r}") from None
    if zlib.crc32(body) != crc:
        raise FormatError(f"checksum mismatch: file says {crc}, content hashes to {zlib.crc32(body)}")

    lines = body.decode("ascii").splitlines()
    try:
        header = json.loads(lines[0])
    except (json.JSONDecodeError, IndexError) as exc:
        raise FormatError(f"header: malformed JSON ({exc})") from None
    if not isinstance(header, dict):
        raise FormatError("header: not an object")
    if header.get("format_version") != FORMAT_VERSION:
        raise VersionError(f"header: unsupported format_version {header.get('format_version')!r}")
    unknown = set(header) - _HEADER_KEYS
    missing = _HEADER_KEYS - set(header)
    if unknown:
        raise VersionError(f"header: unknown field(s) {sorted(unknown)} for format_version {FORMAT_VERSION}")
    if missing:
        raise FormatError(f"header: missing field(s) {sorted(missing)}")

    trajectories = []
    for i, line in enumerate(lines[1:], start=1):
        try:
            rec = json.loads(line)
            n = int(rec["length"])
            obs = np.asarray(rec["observations"], dtype=np.float32).reshape(n, OBS_DIM)
            act = np.asarray(rec["actions"], dtype=np.float32).reshape(n, ACT_DIM)
            trajectories.append(
                Trajectory(
                    config=SpatialConfig.from_dict(rec["config"]),
                    schedule=AugmentationSchedule(**rec["schedule"]),
                    observations=obs,
                    actions=act,
                    seed=int(rec["seed"]),
                    paradigm=str(rec["paradigm"]),
                    retries=int(rec["retries"]),
                )
            )
        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
            raise FormatError(f"trajectory record {i}: {exc}") from None

    ds = Dataset(
        trajectories=trajectories,
        paradigm=Paradigm(header["paradigm"]),
        sampling=Sampling(header["sampling"]),
        budget=int(header["budget"]),
        seed=int(header["seed"]),
        level=Level(int(header["level"])),
        attempts=int(header["generation"]["attempts"]),
        failures=int(header["generation"]["failures"]),
        world_digest=str(header["world_config_digest"]),
    )
    if ds.total_timesteps != header["total_timesteps"]:
        raise FormatError(
            f"header: total_timesteps {header['total_timesteps']} disagrees with records ({ds.total_timesteps})"
        )
    return ds


def read_dataset(path: str | os.PathLike) -> Dataset:
    return loads_dataset(Path(path).read_bytes())
