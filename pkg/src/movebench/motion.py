"""Kinematic motion laws used to perturb a scene while a demonstration is recorded.

Entities move with constant speed along a fixed direction, bouncing specularly off
the workspace walls; objects spin about the vertical axis at constant rate; the
camera sweeps an arc in [0, pi] and bounces at both ends. Speeds are expressed as
fractions of a per-dimension maximum and drawn once per trajectory from a Beta law.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


class MotionError(ValueError):
    """Invalid motion parameter or state."""


class Phase(enum.IntEnum):
    PICK = 0
    PLACE = 1
    DONE = 2


class Bounds(NamedTuple):
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def contains(self, x: float, y: float, tol: float = 1e-12) -> bool:
        return (
            self.xmin - tol <= x <= self.xmax + tol
            and self.ymin - tol <= y <= self.ymax + tol
        )


@dataclass(frozen=True)
class MotionParams:
    v_max: float = 0.05
    omega_max: float = 0.5
    u_max: float = 0.2
    alpha_p: float = 2.0
    beta_p: float = 5.0
    alpha_theta: float = 2.0
    beta_theta: float = 5.0
    alpha_c: float = 2.0
    beta_c: float = 5.0

    def __post_init__(self):
        for name in ("v_max", "omega_max", "u_max"):
            if not getattr(self, name) >= 0.0:
                raise MotionError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("alpha_p", "beta_p", "alpha_theta", "beta_theta", "alpha_c", "beta_c"):
            if not getattr(self, name) > 0.0:
                raise MotionError(f"{name} must be > 0, got {getattr(self, name)}")


@dataclass(frozen=True)
class MotionState:
    """Planar pose of one entity plus its (fixed) translation and spin rates."""

    pos: tuple[float, float]
    direction: tuple[float, float] = (1.0, 0.0)
    speed_frac: float = 0.0
    heading: float = 0.0
    omega_frac: float = 0.0
    spin: int = 1

    def __post_init__(self):
        dx, dy = self.direction
        if abs(math.hypot(dx, dy) - 1.0) > 1e-9:
            raise MotionError(f"direction must be a unit vector, got {self.direction}")
        if not 0.0 <= self.speed_frac <= 1.0:
            raise MotionError(f"speed_frac must lie in [0, 1], got {self.speed_frac}")
        if not 0.0 <= self.omega_frac <= 1.0:
            raise MotionError(f"omega_frac must lie in [0, 1], got {self.omega_frac}")
        if self.spin not in (-1, 1):
            raise MotionError(f"spin must be -1 or +1, got {self.spin}")

    def velocity(self, params: MotionParams) -> tuple[float, float]:
        v = self.speed_frac * params.v_max
        return (v * self.direction[0], v * self.direction[1])

    def angular_velocity(self, params: MotionParams) -> float:
        return self.spin * self.omega_frac * params.omega_max


@dataclass(frozen=True)
class CameraMotionState:
    angle: float = math.pi / 2
    speed_frac: float = 0.0
    direction: int = 1

    def __post_init__(self):
        if not 0.0 <= self.angle <= math.pi:
            raise MotionError(f"camera angle must lie in [0, pi], got {self.angle}")
        if not 0.0 <= self.speed_frac <= 1.0:
            raise MotionError(f"speed_frac must lie in [0, 1], got {self.speed_frac}")
        if self.direction not in (-1, 1):
            raise MotionError(f"camera direction must be -1 or +1, got {self.direction}")


@dataclass(frozen=True)
class AugmentationSchedule:
    """Which motions run in which task phase. All-false is the static paradigm."""

    pick_object_translation: bool = False
    pick_object_rotation: bool = False
    pick_camera: bool = False
    place_target_translation: bool = False
    place_camera: bool = False

    @classmethod
    def static(cls) -> "AugmentationSchedule":
        return cls()

    @classmethod
    def full(cls) -> "AugmentationSchedule":
        return cls(True, True, True, True, True)

    @classmethod
    def for_level(cls, level: int) -> "AugmentationSchedule":
        """Full schedule restricted to the factors that the randomization level varies."""
        return cls(
            pick_object_translation=True,
            pick_object_rotation=True,
            pick_camera=level >= 3,
            place_target_translation=level >= 2,
            place_camera=level >= 3,
        )

    @property
    def is_static(self) -> bool:
        return not any(self.as_dict().values())

    def as_dict(self) -> dict[str, bool]:
        return {
            "pick_object_translation": self.pick_object_translation,
            "pick_object_rotation": self.pick_object_rotation,
            "pick_camera": self.pick_camera,
            "place_target_translation": self.place_target_translation,
            "place_camera": self.place_camera,
        }

    def object_moving(self, phase: Phase) -> bool:
        return phase == Phase.PICK and (self.pick_object_translation or self.pick_object_rotation)

    def target_moving(self, phase: Phase) -> bool:
        return phase == Phase.PLACE and self.place_target_translation

    def camera_moving(self, phase: Phase) -> bool:
        return (phase == Phase.PICK and self.pick_camera) or (
            phase == Phase.PLACE and self.place_camera
        )


class MotionSet(NamedTuple):
    object: MotionState
    target: MotionState
    camera: CameraMotionState


# --- sampling ---------------------------------------------------------------


def sample_speed_fraction(alpha: float, beta: float, rng: np.random.Generator) -> float:
    if not (alpha > 0.0 and beta > 0.0):
        raise MotionError(f"Beta shapes must be positive, got alpha={alpha}, beta={beta}")
    return float(rng.beta(alpha, beta))


def sample_direction(rng: np.random.Generator) -> tuple[float, float]:
    angle = rng.uniform(0.0, TWO_PI)
    return (math.cos(angle), math.sin(angle))


def sample_spin(rng: np.random.Generator) -> int:
    return 1 if rng.random() < 0.5 else -1


def sample_motion_state(
    pos: tuple[float, float], heading: float, params: MotionParams, rng: np.random.Generator
) -> MotionState:
    return MotionState(
        pos=pos,
        direction=sample_direction(rng),
        speed_frac=sample_speed_fraction(params.alpha_p, params.beta_p, rng),
        heading=heading,
        omega_frac=sample_speed_fraction(params.alpha_theta, params.beta_theta, rng),
        spin=sample_spin(rng),
    )


def sample_camera_state(angle: float, params: MotionParams, rng: np.random.Generator) -> CameraMotionState:
    return CameraMotionState(
        angle=angle,
        speed_frac=sample_speed_fraction(params.alpha_c, params.beta_c, rng),
        direction=sample_spin(rng),
    )


# --- motion laws ------------------------------------------------------------


def _fold(x: float, lo: float, hi: float) -> tuple[float, bool]:
    """Reflect ``x`` into [lo, hi]; second value is True when the net number of bounces is odd."""
    if lo <= x <= hi:
        return x, False
    width = hi - lo
    if width <= 0.0:
        return lo, False
    period = 2.0 * width
    r = math.fmod(x - lo, period)
    if r < 0.0:
        r += period
    if r <= width:
        return lo + r, False
    return hi - (r - width), True


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(theta, TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


def advance_translation(state: MotionState, params: MotionParams, bounds: Bounds, dt: float) -> MotionState:
    x, y = state.pos
    if not bounds.contains(x, y):
        raise MotionError(f"position {state.pos} lies outside {bounds}")
    step = state.speed_frac * params.v_max * dt
    if step == 0.0:
        return state
    dx, dy = state.direction
    nx, flip_x = _fold(x + step * dx, bounds.xmin, bounds.xmax)
    ny, flip_y = _fold(y + step * dy, bounds.ymin, bounds.ymax)
    if flip_x:
        dx = -dx
    if flip_y:
        dy = -dy
    return replace(state, pos=(nx, ny), direction=(dx, dy))


def advance_rotation(state: MotionState, params: MotionParams, dt: float) -> MotionState:
    step = state.spin * state.omega_frac * params.omega_max * dt
    if step == 0.0:
        return state
    return replace(state, heading=wrap_angle(state.heading + step))


def advance_camera(state: CameraMotionState, params: MotionParams, dt: float) -> CameraMotionState:
    step = state.direction * state.speed_frac * params.u_max * dt
    if step == 0.0:
        return state
    angle, flipped = _fold(state.angle + step, 0.0, math.pi)
    return CameraMotionState(angle, state.speed_frac, -state.direction if flipped else state.direction)


def apply_schedule(
    schedule: AugmentationSchedule,
    phase: Phase,
    motions: MotionSet,
    params: MotionParams,
    bounds: Bounds,
    dt: float,
) -> MotionSet:
    obj, target, camera = motions
    if phase == Phase.PICK:
        if schedule.pick_object_translation:
            obj = advance_translation(obj, params, bounds, dt)
        if schedule.pick_object_rotation:
            obj = advance_rotation(obj, params, dt)
        if schedule.pick_camera:
            camera = advance_camera(camera, params, dt)
    elif phase == Phase.PLACE:
        if schedule.place_target_translation:
            target = advance_translation(target, params, bounds, dt)
        if schedule.place_camera:
            camera = advance_camera(camera, params, dt)
    return MotionSet(obj, target, camera)


# Cumulative dimension sets for the ablation: object translation, then target
# translation, then camera, then object rotation.
ABLATION_SCHEDULES: dict[str, AugmentationSchedule] = {
    "V_m": AugmentationSchedule(pick_object_translation=True),
    "+V_o": AugmentationSchedule(pick_object_translation=True, place_target_translation=True),
    "+V_c": AugmentationSchedule(
        pick_object_translation=True, place_target_translation=True, pick_camera=True, place_camera=True
    ),
    "+w_theta": AugmentationSchedule.full(),
}

