"""Scripted pursuit demonstrator and the retry loop used to harvest successful demonstrations."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .motion import AugmentationSchedule, MotionParams, MotionSet, Phase
from .world import (
    ACT_DIM,
    OBS_DIM,
    Action,
    EpisodeError,
    SpatialConfig,
    WorldConfig,
    WorldState,
    grasp_point,
    observe,
    reset,
    rotate,
    score_episode,
    step,
)

log = logging.getLogger(__name__)

# Velocity lead (s) for the aim point. Demonstrations use pure pursuit: a lead makes
# the recorded command depend on object velocity, which observations do not carry.
LEAD_TIME = 0.0


class GenerationError(RuntimeError):
    def __init__(self, msg: str, attempts: int = 0, failures: int = 0):
        super().__init__(msg)
        self.attempts = attempts
        self.failures = failures


def _grasp_point_velocity(world: WorldState, schedule: AugmentationSchedule, params: MotionParams, cfg: WorldConfig):
    obj = world.object
    vx = vy = 0.0
    if world.phase == Phase.PICK:
        if schedule.pick_object_translation:
            vx, vy = obj.velocity(params)
        if schedule.pick_object_rotation:
            w = obj.angular_velocity(params) * cfg.handle_offset
            vx -= w * math.sin(obj.heading)
            vy += w * math.cos(obj.heading)
    return vx, vy


def expert_action(
    world: WorldState,
    schedule: AugmentationSchedule = AugmentationSchedule(),
    params: MotionParams = MotionParams(),
    cfg: WorldConfig = WorldConfig(),
    lead_time: float = LEAD_TIME,
) -> Action:
    """Camera-frame command steering toward a velocity-led aim point.

    The expert reads object and target velocities from the motion states, which the
    policy never observes.
    """
    if world.phase == Phase.DONE:
        raise EpisodeError("expert queried on a finished episode")
    gx, gy = world.gripper
    holding = world.grasped
    if world.phase == Phase.PICK or not holding and not _object_at_target(world, cfg):
        px, py = grasp_point(world.object, cfg)
        vx, vy = _grasp_point_velocity(world, schedule, params, cfg)
        aim = (px + lead_time * vx, py + lead_time * vy)
        grip = 1.0 if math.dist((gx, gy), (px, py)) <= cfg.grasp_radius else 0.0
    else:
        tx, ty = world.target.pos
        vx, vy = world.target.velocity(params) if schedule.place_target_translation else (0.0, 0.0)
        aim = (tx + lead_time * vx, ty + lead_time * vy)
        grip = 0.0 if math.dist(world.object.pos, (tx, ty)) <= cfg.place_tolerance else 1.0

    reach = cfg.gripper_speed * cfg.dt
    ex, ey = (aim[0] - gx) / reach, (aim[1] - gy) / reach
    norm = math.hypot(ex, ey)
    if norm > 1.0:
        ex, ey = ex / norm, ey / norm
    cx, cy = rotate((ex, ey), -world.camera.angle)
    return Action(cx, cy, grip)


def _object_at_target(world: WorldState, cfg: WorldConfig) -> bool:
    return math.dist(world.object.pos, world.target.pos) <= cfg.place_tolerance


# a disturbance hook may rewrite the world between steps (used for teleport resets)
Disturbance = Callable[[WorldState], WorldState]


@dataclass
class ExpertEpisode:
    observations: np.ndarray
    actions: np.ndarray
    final: WorldState
    states: list[WorldState] = field(default_factory=list)

    @property
    def score(self) -> int:
        return score_episode(self.final)

    @property
    def length(self) -> int:
        return len(self.actions)


def run_expert_episode(
    world: WorldState,
    schedule: AugmentationSchedule,
    params: MotionParams = MotionParams(),
    cfg: WorldConfig = WorldConfig(),
    lead_time: float = LEAD_TIME,
    disturb: Disturbance | None = None,
    record_states: bool = False,
    until_grasp: bool = False,
) -> ExpertEpisode:
    obs = np.empty((cfg.step_limit, OBS_DIM))
    act = np.empty((cfg.step_limit, ACT_DIM))
    states = [world] if record_states else []
    n = 0
    while n < cfg.step_limit and world.phase != Phase.DONE:
        if disturb is not None:
            world = disturb(world)
        obs[n] = observe(world, cfg)
        a = expert_action(world, schedule, params, cfg, lead_time)
        act[n] = a
        world, _ = step(world, a, schedule, params, cfg)
        n += 1
        if record_states:
            states.append(world)
        if until_grasp and world.grasped:
            break
    return ExpertEpisode(obs[:n].copy(), act[:n].copy(), world, states)


@dataclass
class Trajectory:
    config: SpatialConfig
    schedule: AugmentationSchedule
    observations: np.ndarray  # (length, 9) float32
    actions: np.ndarray  # (length, 3) float32
    seed: int
    paradigm: str
    retries: int = 1

    @property
    def length(self) -> int:
        return int(self.actions.shape[0])


MotionSampler = Callable[[SpatialConfig, np.random.Generator], MotionSet]


def collect_or_retry(
    config: SpatialConfig,
    schedule: AugmentationSchedule,
    max_retries: int,
    rng: np.random.Generator,
    motion_sampler: MotionSampler | None = None,
    params: MotionParams = MotionParams(),
    cfg: WorldConfig = WorldConfig(),
    disturb_factory: Callable[[np.random.Generator], Disturbance] | None = None,
    paradigm: str = "static",
    seed: int = 0,
) -> Trajectory:
    """Roll out the expert with fresh motion draws until one episode scores 3."""
    if max_retries < 1:
        raise ValueError("max_retries must be >= 1")
    for attempt in range(1, max_retries + 1):
        motions = motion_sampler(config, rng) if motion_sampler is not None else None
        world = reset(config, motions, cfg)
        disturb = disturb_factory(rng) if disturb_factory is not None else None
        ep = run_expert_episode(world, schedule, params, cfg, disturb=disturb)
        if ep.score == 3:
            return Trajectory(
                config=config,
                schedule=schedule,
                observations=ep.observations.astype(np.float32),
                actions=ep.actions.astype(np.float32),
                seed=seed,
                paradigm=paradigm,
                retries=attempt,
            )
        log.debug("expert attempt %d failed with score %d", attempt, ep.score)
    raise GenerationError(f"expert failed {max_retries} times", attempts=max_retries, failures=max_retries)
