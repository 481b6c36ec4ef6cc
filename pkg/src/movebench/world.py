"""Planar pick-and-place world: gripper, handled object, target, and an orbiting camera."""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .motion import (
    AugmentationSchedule,
    Bounds,
    CameraMotionState,
    MotionParams,
    MotionSet,
    MotionState,
    Phase,
    apply_schedule,
)

OBS_DIM = 9
ACT_DIM = 3


class WorldError(RuntimeError):
    pass


class ConfigError(WorldError):
    pass


class EpisodeError(WorldError):
    pass


class Level(enum.IntEnum):
    OBJECT_ONLY = 1
    OBJECT_TARGET = 2
    OBJECT_TARGET_CAMERA = 3


class Event(enum.IntEnum):
    APPROACHED = 0
    GRASPED = 1
    PLACED = 2


@dataclass(frozen=True)
class WorldConfig:
    half_extent: float = 0.3
    dt: float = 0.04
    step_limit: int = 600
    gripper_speed: float = 0.25
    grasp_radius: float = 0.03
    place_tolerance: float = 0.03
    place_hold_steps: int = 5
    handle_offset: float = 0.02
    min_separation: float = 0.08
    gripper_home: tuple[float, float] = (0.0, -0.28)
    fixed_target: tuple[float, float] = (0.20, 0.20)
    fixed_camera: float = math.pi / 2
    max_config_tries: int = 1000

    @property
    def bounds(self) -> Bounds:
        h = self.half_extent
        return Bounds(-h, h, -h, h)

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class SpatialConfig:
    object_pos: tuple[float, float]
    object_heading: float
    target_pos: tuple[float, float]
    camera_angle: float
    level: Level

    def to_dict(self) -> dict:
        return {
            "object_pos": list(self.object_pos),
            "object_heading": self.object_heading,
            "target_pos": list(self.target_pos),
            "camera_angle": self.camera_angle,
            "level": int(self.level),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpatialConfig":
        return cls(
            object_pos=(float(d["object_pos"][0]), float(d["object_pos"][1])),
            object_heading=float(d["object_heading"]),
            target_pos=(float(d["target_pos"][0]), float(d["target_pos"][1])),
            camera_angle=float(d["camera_angle"]),
            level=Level(int(d["level"])),
        )


class Action(NamedTuple):
    vx: float
    vy: float
    grasp: float


@dataclass(frozen=True)
class WorldState:
    gripper: tuple[float, float]
    motions: MotionSet
    grasped: bool = False
    phase: Phase = Phase.PICK
    step_count: int = 0
    hold_steps: int = 0
    events: tuple[tuple[Event, int], ...] = field(default_factory=tuple)

    @property
    def object(self) -> MotionState:
        return self.motions.object

    @property
    def target(self) -> MotionState:
        return self.motions.target

    @property
    def camera(self) -> CameraMotionState:
        return self.motions.camera

    def has(self, event: Event) -> bool:
        return any(e == event for e, _ in self.events)


# --- configuration ----------------------------------------------------------


def _uniform_point(cfg: WorldConfig, rng: np.random.Generator) -> tuple[float, float]:
    h = cfg.half_extent
    x, y = rng.uniform(-h, h, size=2)
    return (float(x), float(y))


def _uniform_heading(rng: np.random.Generator) -> float:
    # (-pi, pi]
    return float(math.pi - rng.uniform(0.0, 2.0 * math.pi))


def randomize_config(level: Level | int, rng: np.random.Generator, cfg: WorldConfig = WorldConfig()) -> SpatialConfig:
    level = Level(level)
    for _ in range(cfg.max_config_tries):
        obj = _uniform_point(cfg, rng)
        heading = _uniform_heading(rng)
        target = _uniform_point(cfg, rng) if level >= Level.OBJECT_TARGET else cfg.fixed_target
        camera = float(rng.uniform(0.0, math.pi)) if level >= Level.OBJECT_TARGET_CAMERA else cfg.fixed_camera
        if math.dist(obj, target) >= cfg.min_separation:
            return SpatialConfig(obj, heading, target, camera, level)
    raise ConfigError(f"no valid configuration after {cfg.max_config_tries} tries")


def object_position_feasible(object_pos: tuple[float, float], level: Level | int, cfg: WorldConfig = WorldConfig()) -> bool:
    """Whether some config at ``level`` can start the object at ``object_pos``."""
    if Level(level) >= Level.OBJECT_TARGET:
        return True
    return math.dist(object_pos, cfg.fixed_target) >= cfg.min_separation


def config_with_object(
    object_pos: tuple[float, float],
    level: Level | int,
    rng: np.random.Generator,
    cfg: WorldConfig = WorldConfig(),
    heading: float | None = None,
) -> SpatialConfig:
    """Config with the object pinned at ``object_pos`` and the remaining factors drawn per level.

    With the target fixed (level 1) positions too close to it admit no valid config.
    """
    level = Level(level)
    if not object_position_feasible(object_pos, level, cfg):
        raise ConfigError(f"object at {object_pos} is within {cfg.min_separation} m of the fixed target")
    if heading is None:
        heading = _uniform_heading(rng)
    for _ in range(cfg.max_config_tries):
        target = _uniform_point(cfg, rng) if level >= Level.OBJECT_TARGET else cfg.fixed_target
        camera = float(rng.uniform(0.0, math.pi)) if level >= Level.OBJECT_TARGET_CAMERA else cfg.fixed_camera
        if math.dist(object_pos, target) >= cfg.min_separation:
            return SpatialConfig(object_pos, heading, target, camera, level)
    raise ConfigError(f"no valid configuration after {cfg.max_config_tries} tries")


def static_motions(config: SpatialConfig) -> MotionSet:
    return MotionSet(
        MotionState(pos=config.object_pos, heading=config.object_heading),
        MotionState(pos=config.target_pos),
        CameraMotionState(angle=config.camera_angle),
    )


def reset(config: SpatialConfig, motions: MotionSet | None = None, cfg: WorldConfig = WorldConfig()) -> WorldState:
    """Fresh world at ``config``; ``motions`` carries the per-trajectory speeds and directions."""
    if motions is None:
        motions = static_motions(config)
    return WorldState(gripper=cfg.gripper_home, motions=motions)


# --- geometry ---------------------------------------------------------------


def grasp_point(obj: MotionState, cfg: WorldConfig = WorldConfig()) -> tuple[float, float]:
    x, y = obj.pos
    return (x + cfg.handle_offset * math.cos(obj.heading), y + cfg.handle_offset * math.sin(obj.heading))


def rotate(v: tuple[float, float], angle: float) -> tuple[float, float]:
    c, s = math.cos(angle), math.sin(angle)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def _clamp(v: float, lo: float, hi: float) -> float:
    return lo if v < lo else hi if v > hi else v


# --- dynamics ---------------------------------------------------------------


def step(
    world: WorldState,
    action: Action | tuple[float, float, float],
    schedule: AugmentationSchedule,
    params: MotionParams = MotionParams(),
    cfg: WorldConfig = WorldConfig(),
) -> tuple[WorldState, tuple[Event, ...]]:
    if world.phase == Phase.DONE:
        raise EpisodeError("episode already finished")
    vx = _clamp(float(action[0]), -1.0, 1.0)
    vy = _clamp(float(action[1]), -1.0, 1.0)
    grip_cmd = _clamp(float(action[2]), 0.0, 1.0)
    closing = grip_cmd >= 0.5

    obj, target, camera = world.motions
    h = cfg.half_extent
    n = world.step_count
    events: list[Event] = []
    logged = {e for e, _ in world.events}

    # camera-frame command to world frame
    wx, wy = rotate((vx, vy), camera.angle)
    k = cfg.gripper_speed * cfg.dt
    gripper = (_clamp(world.gripper[0] + k * wx, -h, h), _clamp(world.gripper[1] + k * wy, -h, h))

    grasped = world.grasped
    phase = world.phase
    near = math.dist(gripper, grasp_point(obj, cfg)) <= cfg.grasp_radius
    if near and Event.APPROACHED not in logged:
        events.append(Event.APPROACHED)
        logged.add(Event.APPROACHED)
    if grasped and not closing:
        grasped = False
    elif not grasped and closing and near:
        grasped = True
        if phase == Phase.PICK:
            phase = Phase.PLACE
        if Event.GRASPED not in logged:
            events.append(Event.GRASPED)
            logged.add(Event.GRASPED)
    if grasped:
        obj = MotionState(gripper, obj.direction, obj.speed_frac, obj.heading, obj.omega_frac, obj.spin)

    obj, target, camera = apply_schedule(schedule, phase, MotionSet(obj, target, camera), params, cfg.bounds, cfg.dt)

    hold = 0
    if phase == Phase.PLACE and not grasped and not closing:
        if math.dist(obj.pos, target.pos) <= cfg.place_tolerance:
            hold = world.hold_steps + 1
    if hold >= cfg.place_hold_steps:
        phase = Phase.DONE
        events.append(Event.PLACED)

    new = WorldState(
        gripper=gripper,
        motions=MotionSet(obj, target, camera),
        grasped=grasped,
        phase=phase,
        step_count=n + 1,
        hold_steps=hold,
        events=world.events + tuple((e, n) for e in events),
    )
    return new, tuple(events)


def observe(world: WorldState, cfg: WorldConfig = WorldConfig()) -> np.ndarray:
    phi = world.camera.angle
    c, s = math.cos(phi), math.sin(phi)

    def to_cam(p):
        return (c * p[0] + s * p[1], -s * p[0] + c * p[1])

    g = to_cam(world.gripper)
    gp = to_cam(grasp_point(world.object, cfg))
    t = to_cam(world.target.pos)
    rel = world.object.heading - phi
    return np.array(
        [g[0], g[1], gp[0], gp[1], math.sin(rel), math.cos(rel), t[0], t[1], 1.0 if world.grasped else 0.0]
    )


def score_episode(events) -> int:
    """0-3 rubric: nothing, approached, grasped, placed.

    Accepts a WorldState, a log of ``(event, step)`` pairs, or bare events.
    """
    if isinstance(events, WorldState):
        events = events.events
    kinds = {e[0] if isinstance(e, tuple) else e for e in events}
    if Event.PLACED in kinds:
        return 3
    if Event.GRASPED in kinds:
        return 2
    if Event.APPROACHED in kinds:
        return 1
    return 0
