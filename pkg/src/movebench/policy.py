"""Action-chunk diffusion policy (DDIM sampling) and a direct-regression baseline."""

from __future__ import annotations

import hashlib
import logging
import math
import os
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from . import nn
from .datagen import Dataset
from .expert import expert_action
from .motion import AugmentationSchedule, MotionParams, Phase
from .world import ACT_DIM, OBS_DIM, WorldConfig, WorldState, observe, score_episode, step

log = logging.getLogger(__name__)

TIME_EMBED_DIM = 32
ACTION_LOW = np.array([-1.0, -1.0, 0.0])
ACTION_HIGH = np.array([1.0, 1.0, 1.0])


class PolicyError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


# --- noise schedule and DDIM ------------------------------------------------


@dataclass(frozen=True)
class NoiseSchedule:
    T: int
    alpha_bar: np.ndarray  # length T + 1, alpha_bar[0] == 1

    def __post_init__(self):
        ab = self.alpha_bar
        if ab.shape != (self.T + 1,):
            raise PolicyError(f"alpha_bar must have T+1={self.T + 1} entries, got {ab.shape}")
        if ab[0] != 1.0 or np.any(np.diff(ab) >= 0.0) or ab[-1] <= 0.0:
            raise PolicyError("alpha_bar must start at 1 and decrease strictly while staying positive")


def make_noise_schedule(T: int = 100, s: float = 0.008) -> NoiseSchedule:
    """Cosine cumulative-retention schedule."""
    if T < 1:
        raise PolicyError(f"T must be >= 1, got {T}")
    t = np.arange(T + 1, dtype=np.float64)
    f = np.cos((t / T + s) / (1.0 + s) * math.pi / 2.0) ** 2
    ab = np.clip(f / math.cos(s * math.pi / (2.0 * (1.0 + s))) ** 2, 1e-5, 1.0)
    ab[0] = 1.0
    return NoiseSchedule(T, ab)


def forward_noise(x0: np.ndarray, t, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    t_arr = np.asarray(t)
    if np.any(t_arr < 1) or np.any(t_arr > schedule.T):
        raise PolicyError(f"timestep out of range [1, {schedule.T}]: {t}")
    ab = schedule.alpha_bar[t_arr]
    if ab.ndim:
        ab = ab.reshape(ab.shape + (1,) * (np.ndim(x0) - ab.ndim))
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def ddim_step(x_t: np.ndarray, t: int, t_prev: int, eps_pred: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """Deterministic DDIM update from step ``t`` to ``t_prev`` (``t_prev < t``)."""
    if not t_prev < t:
        raise PolicyError(f"t_prev ({t_prev}) must be smaller than t ({t})")
    ab_t = schedule.alpha_bar[t]
    ab_prev = schedule.alpha_bar[t_prev]
    if ab_prev == ab_t:
        return x_t
    x0_pred = (x_t - math.sqrt(1.0 - ab_t) * eps_pred) / math.sqrt(ab_t)
    return math.sqrt(ab_prev) * x0_pred + math.sqrt(1.0 - ab_prev) * eps_pred


def epsilon_from_sample(x_t: np.ndarray, x0: np.ndarray, alpha_bar_t: float) -> np.ndarray:
    """Noise implied by a clean-sample estimate under the forward process."""
    return (x_t - math.sqrt(alpha_bar_t) * x0) / math.sqrt(1.0 - alpha_bar_t)


def ddim_timesteps(T: int, n_steps: int) -> list[tuple[int, int]]:
    """Evenly strided (t, t_prev) pairs from T down to 0."""
    if not 1 <= n_steps <= T:
        raise PolicyError(f"inference steps must lie in [1, {T}], got {n_steps}")
    ts = np.linspace(T, 0, n_steps + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(ts[:-1], ts[1:])]


def ddim_sample(
    denoise: Callable[[np.ndarray, int], np.ndarray],
    x_T: np.ndarray,
    schedule: NoiseSchedule,
    n_steps: int,
    clip: float | None = None,
) -> np.ndarray:
    """Run the strided DDIM chain from pure noise.

    With ``clip`` the implied clean sample is clamped to [-clip, clip] at every step and
    the noise estimate re-derived from it before the update. Near t = T, where
    alpha_bar is tiny, this keeps small noise-prediction errors from being amplified.
    """
    x = x_T
    for t, t_prev in ddim_timesteps(schedule.T, n_steps):
        eps = denoise(x, t)
        if clip is not None:
            ab = schedule.alpha_bar[t]
            x0 = np.clip((x - math.sqrt(1.0 - ab) * eps) / math.sqrt(ab), -clip, clip)
            eps = (x - math.sqrt(ab) * x0) / math.sqrt(1.0 - ab)
        x = ddim_step(x, t, t_prev, eps, schedule)
    return x


def time_embedding(t, dim: int = TIME_EMBED_DIM) -> np.ndarray:
    half = dim // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / half)
    arg = np.asarray(t, dtype=np.float64)[..., None] * freqs
    return np.concatenate([np.sin(arg), np.cos(arg)], axis=-1)


# --- normalization ----------------------------------------------------------


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension min-max map onto [-1, 1]; constant dimensions map to 0."""

    low: np.ndarray
    high: np.ndarray

    @classmethod
    def fit(cls, data: np.ndarray) -> "Normalizer":
        data = np.asarray(data, dtype=np.float64)
        return cls(data.min(axis=0), data.max(axis=0))

    @property
    def _center_scale(self):
        span = self.high - self.low
        flat = span < 1e-12
        scale = np.where(flat, 1.0, span / 2.0)
        center = np.where(flat, self.low, (self.high + self.low) / 2.0)
        return center, scale

    def normalize(self, x):
        c, s = self._center_scale
        return (np.asarray(x, dtype=np.float64) - c) / s

    def denormalize(self, y):
        c, s = self._center_scale
        return np.asarray(y, dtype=np.float64) * s + c

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Normalizer":
        return cls(np.array(d["low"], dtype=np.float64), np.array(d["high"], dtype=np.float64))


# --- checkpoints -------------------------------------------------------------


@dataclass(frozen=True)
class Horizons:
    prediction: int = 4
    action: int = 3
    observation: int = 2

    def __post_init__(self):
        if not (1 <= self.action <= self.prediction and self.observation >= 1):
            raise PolicyError(f"invalid horizons {self}")


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 30_000
    batch_size: int = 128
    lr: float = 1e-3
    hidden: tuple[int, ...] = (256, 256)
    diffusion_steps: int = 100
    inference_steps: int = 10
    schedule_offset: float = 0.008
    ema_decay: float = 0.999
    prediction: str = "sample"  # network target: "sample" (clean chunk) or "epsilon" (noise)
    lr_schedule: str = "cosine"  # or "constant"; cosine is a linear warm-up then decay to zero
    warmup_steps: int = 500
    horizons: Horizons = Horizons()
    seed: int = 0

    def __post_init__(self):
        if self.prediction not in ("epsilon", "sample"):
            raise PolicyError(f"unknown prediction target {self.prediction!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise PolicyError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.steps < 1 or self.batch_size < 1 or not self.lr > 0.0:
            raise PolicyError("steps, batch_size and lr must be positive")
        if not 0.0 <= self.ema_decay < 1.0:
            raise PolicyError(f"ema_decay must lie in [0, 1), got {self.ema_decay}")

    def lr_at(self, it: int) -> float:
        if self.lr_schedule == "constant":
            return self.lr
        if it < self.warmup_steps:
            return self.lr * (it + 1) / self.warmup_steps
        span = max(self.steps - self.warmup_steps, 1)
        return 0.5 * self.lr * (1.0 + math.cos(math.pi * (it - self.warmup_steps) / span))


@dataclass
class PolicyCheckpoint:
    kind: str  # "diffusion" or "bc"
    params: nn.ParameterStore
    schedule: NoiseSchedule | None
    obs_norm: Normalizer
    act_norm: Normalizer
    horizons: Horizons = Horizons()
    inference_steps: int = 10
    clip_sample: float | None = 1.0
    prediction: str = "epsilon"
    train_config: dict = field(default_factory=dict)
    dataset_digest: str = ""
    final_loss: float = float("nan")

    @property
    def chunk_dim(self) -> int:
        return self.horizons.prediction * ACT_DIM

    @property
    def cond_dim(self) -> int:
        return self.horizons.observation * OBS_DIM

    def digest(self) -> str:
        h = hashlib.sha256()
        for a in self.params.arrays:
            h.update(np.ascontiguousarray(a, dtype="<f4").tobytes())
        h.update(repr((self.kind, self.obs_norm.to_dict(), self.act_norm.to_dict())).encode())
        return h.hexdigest()[:16]

    def equals(self, other: "PolicyCheckpoint") -> bool:
        return (
            self.kind == other.kind
            and self.params.equals(other.params)
            and np.array_equal(self.obs_norm.low, other.obs_norm.low)
            and np.array_equal(self.obs_norm.high, other.obs_norm.high)
            and np.array_equal(self.act_norm.low, other.act_norm.low)
            and np.array_equal(self.act_norm.high, other.act_norm.high)
            and self.horizons == other.horizons
            and self.inference_steps == other.inference_steps
            and self.clip_sample == other.clip_sample
            and self.prediction == other.prediction
            and (
                (self.schedule is None and other.schedule is None)
                or (
                    self.schedule is not None
                    and other.schedule is not None
                    and np.array_equal(self.schedule.alpha_bar, other.schedule.alpha_bar)
                )
            )
        )


def save_checkpoint(ckpt: PolicyCheckpoint, path: str | os.PathLike) -> None:
    meta = {
        "format_version": 1,
        "kind": ckpt.kind,
        "horizons": asdict(ckpt.horizons),
        "inference_steps": ckpt.inference_steps,
        "clip_sample": ckpt.clip_sample,
        "prediction": ckpt.prediction,
        "obs_norm": ckpt.obs_norm.to_dict(),
        "act_norm": ckpt.act_norm.to_dict(),
        "noise_schedule": None
        if ckpt.schedule is None
        else {"T": ckpt.schedule.T, "alpha_bar": ckpt.schedule.alpha_bar.tolist()},
        "train_config": ckpt.train_config,
        "dataset_digest": ckpt.dataset_digest,
        "final_loss": ckpt.final_loss,
    }
    nn.write_checkpoint(path, ckpt.params, meta)


def load_checkpoint(path: str | os.PathLike) -> PolicyCheckpoint:
    params, meta = nn.read_checkpoint(path)
    if meta.get("format_version") != 1:
        raise nn.CheckpointFormatError(f"{path}: unsupported format_version {meta.get('format_version')!r}")
    sched = meta["noise_schedule"]
    return PolicyCheckpoint(
        kind=meta["kind"],
        params=params,
        schedule=None if sched is None else NoiseSchedule(int(sched["T"]), np.array(sched["alpha_bar"], dtype=np.float64)),
        obs_norm=Normalizer.from_dict(meta["obs_norm"]),
        act_norm=Normalizer.from_dict(meta["act_norm"]),
        horizons=Horizons(**meta["horizons"]),
        inference_steps=int(meta["inference_steps"]),
        clip_sample=meta["clip_sample"],
        prediction=meta["prediction"],
        train_config=meta["train_config"],
        dataset_digest=meta["dataset_digest"],
        final_loss=float(meta["final_loss"]),
    )


# --- training ---------------------------------------------------------------


def training_arrays(dataset: Dataset | Sequence, horizons: Horizons = Horizons()) -> tuple[np.ndarray, np.ndarray]:
    """(observation histories, action chunks) for every timestep, padded at episode edges.

    Histories repeat the first observation; chunks repeat the last action.
    """
    trajs = dataset.trajectories if isinstance(dataset, Dataset) else dataset
    hists, chunks = [], []
    for tr in trajs:
        obs = np.asarray(tr.observations, dtype=np.float64)
        act = np.asarray(tr.actions, dtype=np.float64)
        n = len(act)
        idx = np.arange(n)
        h_idx = np.clip(idx[:, None] + np.arange(-horizons.observation + 1, 1)[None, :], 0, n - 1)
        c_idx = np.clip(idx[:, None] + np.arange(horizons.prediction)[None, :], 0, n - 1)
        hists.append(obs[h_idx].reshape(n, -1))
        chunks.append(act[c_idx].reshape(n, -1))
    if not hists:
        raise TrainingError("dataset is empty")
    return np.concatenate(hists), np.concatenate(chunks)


def _fit_normalizers(hists: np.ndarray, chunks: np.ndarray, horizons: Horizons) -> tuple[Normalizer, Normalizer]:
    obs_norm = Normalizer.fit(hists.reshape(-1, OBS_DIM))
    act_norm = Normalizer.fit(chunks.reshape(-1, ACT_DIM))
    return obs_norm, act_norm


def _normalize_blocks(norm: Normalizer, data: np.ndarray, width: int) -> np.ndarray:
    n = data.shape[0]
    return norm.normalize(data.reshape(-1, width)).reshape(n, -1)


def dataset_digest(dataset: Dataset) -> str:
    h = hashlib.sha256()
    for tr in dataset.trajectories:
        h.update(np.ascontiguousarray(tr.observations, dtype="<f4").tobytes())
        h.update(np.ascontiguousarray(tr.actions, dtype="<f4").tobytes())
    return h.hexdigest()[:16]


def _prepare(dataset, config: TrainConfig):
    hists, chunks = training_arrays(dataset, config.horizons)
    obs_norm, act_norm = _fit_normalizers(hists, chunks, config.horizons)
    cond = _normalize_blocks(obs_norm, hists, OBS_DIM).astype(np.float32)
    x0 = _normalize_blocks(act_norm, chunks, ACT_DIM).astype(np.float32)
    return cond, x0, obs_norm, act_norm


def _config_dict(config: TrainConfig) -> dict:
    d = asdict(config)
    d["hidden"] = list(config.hidden)
    return d


def _ema_update(ema, arrays, decay, it):
    # warm-up keeps early averages from being dominated by the random init
    d = min(decay, (1.0 + it) / (10.0 + it))
    for e, a in zip(ema, arrays):
        e *= d
        e += (1.0 - d) * a


def train(dataset: Dataset, config: TrainConfig = TrainConfig(), log_every: int = 0) -> PolicyCheckpoint:
    """Fit the noise-prediction network on (observation history, action chunk) pairs."""
    cond, x0, obs_norm, act_norm = _prepare(dataset, config)
    schedule = make_noise_schedule(config.diffusion_steps, config.schedule_offset)
    rng = np.random.default_rng(config.seed)
    chunk_dim, cond_dim = x0.shape[1], cond.shape[1]
    params = nn.init_mlp([chunk_dim + cond_dim + TIME_EMBED_DIM, *config.hidden, chunk_dim], rng)
    opt = nn.Adam(params, lr=config.lr)

    temb = time_embedding(np.arange(schedule.T + 1)).astype(np.float32)
    sqrt_ab = np.sqrt(schedule.alpha_bar).astype(np.float32)
    sqrt_1mab = np.sqrt(1.0 - schedule.alpha_bar).astype(np.float32)
    n = len(x0)
    bsz = config.batch_size
    inp = np.empty((bsz, chunk_dim + cond_dim + TIME_EMBED_DIM), dtype=np.float32)
    ema = [a.copy() for a in params.arrays] if config.ema_decay > 0.0 else None
    loss = float("nan")
    running = 0.0
    for it in range(config.steps):
        idx = rng.integers(0, n, size=bsz)
        t = rng.integers(1, schedule.T + 1, size=bsz)
        eps = rng.standard_normal((bsz, chunk_dim), dtype=np.float32)
        inp[:, :chunk_dim] = sqrt_ab[t, None] * x0[idx] + sqrt_1mab[t, None] * eps
        inp[:, chunk_dim : chunk_dim + cond_dim] = cond[idx]
        inp[:, chunk_dim + cond_dim :] = temb[t]
        opt.lr = config.lr_at(it)
        pred, cache = nn.mlp_forward(params, inp)
        loss, dpred = nn.mse_loss(pred, eps if config.prediction == "epsilon" else x0[idx])
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {it}")
        opt.step(nn.mlp_backward(params, cache, dpred))
        if ema is not None:
            _ema_update(ema, params.arrays, config.ema_decay, it)
        running = loss if it == 0 else 0.99 * running + 0.01 * loss
        if log_every and (it + 1) % log_every == 0:
            log.info("step %d loss %.5f (ema %.5f)", it + 1, loss, running)

    if ema is not None:
        params.assign(ema)
    return PolicyCheckpoint(
        kind="diffusion",
        params=params,
        schedule=schedule,
        prediction=config.prediction,
        obs_norm=obs_norm,
        act_norm=act_norm,
        horizons=config.horizons,
        inference_steps=config.inference_steps,
        train_config=_config_dict(config),
        dataset_digest=dataset_digest(dataset) if isinstance(dataset, Dataset) else "",
        final_loss=running,
    )


def train_bc_baseline(dataset: Dataset, config: TrainConfig = TrainConfig(), log_every: int = 0) -> PolicyCheckpoint:
    """Direct regression from observation history to the action chunk."""
    cond, x0, obs_norm, act_norm = _prepare(dataset, config)
    rng = np.random.default_rng(config.seed)
    params = nn.init_mlp([cond.shape[1], *config.hidden, x0.shape[1]], rng)
    opt = nn.Adam(params, lr=config.lr)
    n = len(x0)
    loss = float("nan")
    for it in range(config.steps):
        idx = rng.integers(0, n, size=config.batch_size)
        opt.lr = config.lr_at(it)
        pred, cache = nn.mlp_forward(params, cond[idx])
        loss, dpred = nn.mse_loss(pred, x0[idx])
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {it}")
        opt.step(nn.mlp_backward(params, cache, dpred))
        if log_every and (it + 1) % log_every == 0:
            log.info("step %d loss %.6f", it + 1, loss)
    return PolicyCheckpoint(
        kind="bc",
        params=params,
        schedule=None,
        obs_norm=obs_norm,
        act_norm=act_norm,
        horizons=config.horizons,
        inference_steps=0,
        train_config=_config_dict(config),
        dataset_digest=dataset_digest(dataset) if isinstance(dataset, Dataset) else "",
        final_loss=loss,
    )


# --- inference --------------------------------------------------------------


Denoiser = Callable[[np.ndarray, int], np.ndarray]


def network_denoiser(ckpt: PolicyCheckpoint, cond: np.ndarray) -> Denoiser:
    """Noise estimate conditioned on normalized, flattened observation histories ``cond``.

    A clean-chunk network is converted to the equivalent noise estimate at step ``t``.
    """
    cond = np.asarray(cond, dtype=np.float32)
    ab = ckpt.schedule.alpha_bar

    def denoise(x: np.ndarray, t: int) -> np.ndarray:
        temb = np.broadcast_to(time_embedding(t).astype(np.float32), (len(x), TIME_EMBED_DIM))
        inp = np.concatenate([x.astype(np.float32), cond, temb], axis=1)
        out = nn.mlp_predict(ckpt.params, inp).astype(np.float64)
        if ckpt.prediction == "sample":
            return epsilon_from_sample(x, out, ab[t])
        return out

    return denoise


def sample_action_chunk(
    ckpt: PolicyCheckpoint,
    obs_history: np.ndarray,
    rng: np.random.Generator | Sequence[np.random.Generator],
    denoiser: Denoiser | None = None,
) -> np.ndarray:
    """Action chunk(s) of shape (prediction, 3), or (B, prediction, 3) for batched histories.

    A sequence of generators gives each batch row its own noise stream.
    """
    hist = np.asarray(obs_history, dtype=np.float64)
    single = hist.ndim == 2
    if single:
        hist = hist[None]
    H = ckpt.horizons
    if hist.shape[1:] != (H.observation, OBS_DIM):
        raise nn.ShapeError(f"observation history must be ({H.observation}, {OBS_DIM}), got {hist.shape[1:]}")
    B = hist.shape[0]
    cond = ckpt.obs_norm.normalize(hist.reshape(-1, OBS_DIM)).reshape(B, -1)
    if ckpt.kind == "diffusion":
        rngs = [rng] if isinstance(rng, np.random.Generator) else list(rng)
        if len(rngs) == 1 and B > 1:
            x = rngs[0].standard_normal((B, ckpt.chunk_dim))
        else:
            if len(rngs) != B:
                raise nn.ShapeError(f"{len(rngs)} generators for a batch of {B}")
            x = np.stack([r.standard_normal(ckpt.chunk_dim) for r in rngs])
        den = denoiser if denoiser is not None else network_denoiser(ckpt, cond)
        x0 = ddim_sample(den, x, ckpt.schedule, ckpt.inference_steps, clip=ckpt.clip_sample)
    elif ckpt.kind == "bc":
        x0 = nn.mlp_predict(ckpt.params, cond.astype(np.float32)).astype(np.float64)
    else:
        raise PolicyError(f"unknown policy kind {ckpt.kind!r}")
    acts = ckpt.act_norm.denormalize(x0.reshape(-1, ACT_DIM)).reshape(B, H.prediction, ACT_DIM)
    acts = np.clip(acts, ACTION_LOW, ACTION_HIGH)
    return acts[0] if single else acts


# --- closed-loop execution ----------------------------------------------------


class Controller(Protocol):
    """Produces the next block of actions for several episodes at once."""

    def plan(
        self, worlds: Sequence[WorldState], histories: np.ndarray, rngs: Sequence[np.random.Generator]
    ) -> np.ndarray: ...


class ChunkController:
    """Receding-horizon execution: predict a chunk, keep its first ``horizons.action`` steps."""

    def __init__(self, ckpt: PolicyCheckpoint):
        self.ckpt = ckpt

    def plan(self, worlds, histories, rngs):
        chunks = sample_action_chunk(self.ckpt, histories, list(rngs))
        return chunks[:, : self.ckpt.horizons.action]


class ExpertController:
    def __init__(self, schedule=AugmentationSchedule(), params=MotionParams(), cfg=WorldConfig()):
        self.schedule, self.params, self.cfg = schedule, params, cfg

    def plan(self, worlds, histories, rngs):
        return np.array([[expert_action(w, self.schedule, self.params, self.cfg)] for w in worlds])


class RandomController:
    def plan(self, worlds, histories, rngs):
        return np.array([[[r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(0, 1)]] for r in rngs])


@dataclass
class Outcome:
    score: int
    events: tuple
    steps: int
    final: WorldState


def run_episodes(
    controller: Controller,
    worlds: Sequence[WorldState],
    max_steps: int,
    rngs: Sequence[np.random.Generator],
    schedule: AugmentationSchedule = AugmentationSchedule(),
    params: MotionParams = MotionParams(),
    cfg: WorldConfig = WorldConfig(),
    obs_horizon: int = 2,
) -> list[Outcome]:
    """Run all episodes in lockstep so the controller sees one batch per replanning round."""
    worlds = list(worlds)
    n = len(worlds)
    hist = [deque([observe(w, cfg)] * obs_horizon, maxlen=obs_horizon) for w in worlds]
    queues: list[list] = [[] for _ in range(n)]
    active = [i for i in range(n) if worlds[i].phase != Phase.DONE and max_steps > 0]
    while active:
        need = [i for i in active if not queues[i]]
        if need:
            block = controller.plan(
                [worlds[i] for i in need], np.array([np.stack(hist[i]) for i in need]), [rngs[i] for i in need]
            )
            for i, acts in zip(need, block):
                queues[i] = list(acts)
        still = []
        for i in active:
            worlds[i], _ = step(worlds[i], queues[i].pop(0), schedule, params, cfg)
            hist[i].append(observe(worlds[i], cfg))
            if worlds[i].phase != Phase.DONE and worlds[i].step_count < max_steps:
                still.append(i)
        active = still
    return [Outcome(score_episode(w), w.events, w.step_count, w) for w in worlds]


def rollout(
    ckpt: PolicyCheckpoint,
    world: WorldState,
    max_steps: int,
    seed: int = 0,
    cfg: WorldConfig = WorldConfig(),
) -> Outcome:
    return run_episodes(
        ChunkController(ckpt), [world], max_steps, [np.random.default_rng(seed)], cfg=cfg,
        obs_horizon=ckpt.horizons.observation,
    )[0]
