import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from movebench.datagen import build_dataset
from movebench.expert import run_expert_episode
from movebench.motion import AugmentationSchedule
from movebench.nn import CheckpointFormatError, ShapeError
from movebench.policy import (
    ExpertController,
    ChunkController,
    Horizons,
    Normalizer,
    PolicyError,
    RandomController,
    TrainConfig,
    TrainingError,
    ddim_sample,
    ddim_step,
    ddim_timesteps,
    epsilon_from_sample,
    forward_noise,
    load_checkpoint,
    make_noise_schedule,
    rollout,
    run_episodes,
    sample_action_chunk,
    save_checkpoint,
    time_embedding,
    train,
    train_bc_baseline,
    training_arrays,
)
from movebench.world import Level, SpatialConfig, randomize_config, reset

SCHED = make_noise_schedule(100)


def test_schedule_shape_and_monotone():
    ab = SCHED.alpha_bar
    assert ab.shape == (101,) and ab[0] == 1.0
    assert np.all(np.diff(ab) < 0) and ab[-1] > 0
    with pytest.raises(PolicyError):
        make_noise_schedule(0)


def test_cosine_schedule_oracle():
    s, T = 0.008, 100
    f = lambda t: math.cos((t / T + s) / (1 + s) * math.pi / 2) ** 2
    for t in (1, 10, 50, 90):
        assert SCHED.alpha_bar[t] == pytest.approx(f(t) / f(0), rel=1e-12)


def test_ddim_step_identity_when_alpha_bar_equal():
    # real schedules are strictly decreasing, so use a bare stand-in with a flat segment
    flat = SimpleNamespace(alpha_bar=np.array([1.0, 0.4, 0.4, 0.3]))
    x = np.array([0.3, -1.2])
    assert np.array_equal(ddim_step(x, 2, 1, np.array([9.0, 9.0]), flat), x)


def test_ddim_step_oracle():
    x, eps = np.array([0.7]), np.array([0.2])
    ab_t, ab_p = SCHED.alpha_bar[50], SCHED.alpha_bar[40]
    x0 = (x - math.sqrt(1 - ab_t) * eps) / math.sqrt(ab_t)
    expected = math.sqrt(ab_p) * x0 + math.sqrt(1 - ab_p) * eps
    assert ddim_step(x, 50, 40, eps, SCHED) == pytest.approx(expected, abs=1e-15)
    with pytest.raises(PolicyError):
        ddim_step(x, 40, 50, eps, SCHED)


def test_ddim_timesteps_strided():
    steps = ddim_timesteps(100, 10)
    assert steps[0] == (100, 90) and steps[-1] == (10, 0) and len(steps) == 10
    with pytest.raises(PolicyError):
        ddim_timesteps(100, 0)


def _oracle(x0):
    def denoise(x, t):
        ab = SCHED.alpha_bar[t]
        return (x - math.sqrt(ab) * x0) / math.sqrt(1 - ab)

    return denoise


@given(st.integers(0, 2**32 - 1))
def test_oracle_chain_recovers_x0(seed):
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-1, 1, size=(3, 12))
    xT = forward_noise(x0, 100, rng.standard_normal(x0.shape), SCHED)
    assert np.max(np.abs(ddim_sample(_oracle(x0), xT, SCHED, 10) - x0)) < 1e-6
    assert np.max(np.abs(ddim_sample(_oracle(x0), xT, SCHED, 10, clip=1.0) - x0)) < 1e-6


def test_forward_noise_variance_monte_carlo():
    rng = np.random.default_rng(0)
    x0 = np.full(200_000, 0.6)
    for t in (5, 50, 95):
        xt = forward_noise(x0, t, rng.standard_normal(x0.shape), SCHED)
        ab = SCHED.alpha_bar[t]
        assert xt.var() == pytest.approx(1 - ab, rel=0.05)
        assert xt.mean() == pytest.approx(math.sqrt(ab) * 0.6, abs=0.01)
    with pytest.raises(PolicyError):
        forward_noise(x0, 0, x0, SCHED)


def test_time_embedding():
    e = time_embedding(np.arange(5))
    assert e.shape == (5, 32)
    assert np.allclose(e[:, :16] ** 2 + e[:, 16:] ** 2, 1.0)


@given(st.lists(st.lists(st.floats(-100, 100), min_size=3, max_size=3), min_size=1, max_size=40))
def test_normalizer_range_and_inverse(rows):
    data = np.array(rows)
    n = Normalizer.fit(data)
    z = n.normalize(data)
    assert np.all(z >= -1 - 1e-9) and np.all(z <= 1 + 1e-9)
    assert np.allclose(n.denormalize(z), data, atol=1e-9 * (1 + np.abs(data).max()))


def test_normalizer_constant_dims_map_to_zero():
    n = Normalizer.fit(np.array([[1.0, 2.0], [1.0, 4.0]]))
    assert np.allclose(n.normalize(np.array([[1.0, 3.0]])), [[0.0, 0.0]])


def test_horizons_validation():
    with pytest.raises(PolicyError):
        Horizons(prediction=2, action=3)


@pytest.fixture(scope="module")
def tiny_dataset():
    return build_dataset("static", "dense", 1200, 1, seed=0)


def test_training_arrays_padding(tiny_dataset):
    hists, chunks = training_arrays(tiny_dataset)
    assert hists.shape[1] == 18 and chunks.shape[1] == 12
    tr = tiny_dataset.trajectories[0]
    assert np.allclose(hists[0, :9], tr.observations[0]) and np.allclose(hists[0, 9:], tr.observations[0])
    n = tr.length
    assert np.allclose(chunks[n - 1].reshape(4, 3), np.repeat(tr.actions[-1:], 4, axis=0))
    with pytest.raises(TrainingError):
        training_arrays([])


def _single_config_dataset(config):
    ds = build_dataset("static", "dense", 1000, 1, seed=0)
    ep = run_expert_episode(reset(config), AugmentationSchedule.static())
    tr = ds.trajectories[0]
    tr.config = config
    tr.observations = ep.observations.astype(np.float32)
    tr.actions = ep.actions.astype(np.float32)
    ds.trajectories = [tr] * 20
    return ds


def test_single_sample_overfit():
    ds = _single_config_dataset(randomize_config(1, np.random.default_rng(3)))
    tr = ds.trajectories[0]
    tr.observations = tr.observations[:1]
    tr.actions = tr.actions[:1]
    ds.trajectories = [tr]
    ck = train(ds, TrainConfig(steps=5000, lr=1e-3, batch_size=32, hidden=(64, 64), seed=0))
    assert ck.final_loss < 0.05


def test_overfit_checkpoint_replays_config():
    config = SpatialConfig((0.1, -0.05), 0.4, (0.2, 0.2), math.pi / 2, Level.OBJECT_ONLY)
    ds = _single_config_dataset(config)
    ck = train(ds, TrainConfig(steps=5000, lr=1e-3, ema_decay=0.99, seed=0))
    out = rollout(ck, reset(config), 600, seed=0)
    assert out.score == 3


def test_bc_single_sample_overfit():
    ds = _single_config_dataset(randomize_config(1, np.random.default_rng(3)))
    tr = ds.trajectories[0]
    tr.observations = tr.observations[:1]
    tr.actions = tr.actions[:1]
    ds.trajectories = [tr]
    ck = train_bc_baseline(ds, TrainConfig(steps=2000, lr=1e-3, batch_size=16, hidden=(64, 64), seed=0))
    assert ck.final_loss < 1e-4


def test_bc_same_seed_same_checkpoint(tiny_dataset):
    a = train_bc_baseline(tiny_dataset, TrainConfig(steps=50, seed=4))
    b = train_bc_baseline(tiny_dataset, TrainConfig(steps=50, seed=4))
    c = train_bc_baseline(tiny_dataset, TrainConfig(steps=50, seed=5))
    assert a.equals(b) and not a.equals(c)


def test_bc_dense_static_has_nonzero_grid_success():
    from movebench.evaluation import eval_grid

    ds = build_dataset("static", "dense", 6000, 1, seed=1)
    ck = train_bc_baseline(ds, TrainConfig(steps=3000, seed=1))
    assert eval_grid(ck, 5, 1, 1, seed=0).success_rate > 0.0


def test_bc_baseline_and_checkpoint_roundtrip(tmp_path, tiny_dataset):
    ck = train_bc_baseline(tiny_dataset, TrainConfig(steps=200, lr=1e-3, seed=1))
    assert ck.kind == "bc" and ck.params.shapes[0] == (18, 256)
    path = tmp_path / "bc.json"
    save_checkpoint(ck, path)
    back = load_checkpoint(path)
    assert back.equals(ck)
    h = np.zeros((2, 9))
    assert np.array_equal(sample_action_chunk(ck, h, np.random.default_rng(0)), sample_action_chunk(back, h, np.random.default_rng(0)))


def test_diffusion_checkpoint_roundtrip(tmp_path, tiny_dataset):
    ck = train(tiny_dataset, TrainConfig(steps=100, lr=1e-3, seed=2))
    assert ck.params.shapes[0] == (62, 256) and ck.params.shapes[-1] == (12,)
    path = tmp_path / "dp.json"
    save_checkpoint(ck, path)
    back = load_checkpoint(path)
    assert back.equals(ck) and back.digest() == ck.digest()
    hist = np.random.default_rng(0).uniform(-0.3, 0.3, size=(5, 2, 9))
    a = sample_action_chunk(ck, hist, [np.random.default_rng(i) for i in range(5)])
    b = sample_action_chunk(back, hist, [np.random.default_rng(i) for i in range(5)])
    assert np.array_equal(a, b) and a.shape == (5, 4, 3)
    assert np.all(a[..., :2] >= -1) and np.all(a[..., :2] <= 1)
    assert np.all(a[..., 2] >= 0) and np.all(a[..., 2] <= 1)
    path.with_name("dp.json.bin").write_bytes(b"\x00\x01")
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(path)


def test_sample_chunk_with_oracle_denoiser(tiny_dataset):
    ck = train(tiny_dataset, TrainConfig(steps=10, seed=0))
    x0 = np.random.default_rng(1).uniform(-1, 1, size=(1, 12))
    out = sample_action_chunk(ck, np.zeros((2, 9)), np.random.default_rng(0), denoiser=_oracle(x0))
    expected = np.clip(ck.act_norm.denormalize(x0.reshape(-1, 3)), [-1, -1, 0], [1, 1, 1])
    assert np.allclose(out, expected, atol=1e-5)


def test_sample_chunk_shape_errors(tiny_dataset):
    ck = train_bc_baseline(tiny_dataset, TrainConfig(steps=5, seed=0))
    with pytest.raises(ShapeError):
        sample_action_chunk(ck, np.zeros((3, 9)), np.random.default_rng(0))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_training_aborts(tiny_dataset):
    with pytest.raises((TrainingError, FloatingPointError)):
        train(tiny_dataset, TrainConfig(steps=50, lr=1e30, seed=0))


def test_controllers_in_lockstep():
    rng = np.random.default_rng(0)
    worlds = [reset(randomize_config(2, rng)) for _ in range(6)]
    rngs = [np.random.default_rng(i) for i in range(6)]
    outs = run_episodes(ExpertController(), worlds, 600, rngs)
    assert all(o.score == 3 for o in outs)
    outs = run_episodes(RandomController(), worlds, 50, rngs)
    assert all(o.steps == 50 for o in outs)


def test_rollout_executes_three_of_four_and_is_deterministic(tiny_dataset):
    ck = train(tiny_dataset, TrainConfig(steps=30, seed=0))
    calls = []

    class Counting(ChunkController):
        def plan(self, worlds, histories, rngs):
            chunk = super().plan(worlds, histories, rngs)
            calls.append(chunk.shape[1])
            return chunk

    world = reset(randomize_config(1, np.random.default_rng(5)))
    out = run_episodes(Counting(ck), [world], 30, [np.random.default_rng(0)])[0]
    assert out.steps == 30 and calls == [3] * 10
    a, b = rollout(ck, world, 40, seed=9), rollout(ck, world, 40, seed=9)
    assert a.events == b.events and a.final == b.final
    assert rollout(ck, world, 0).score == 0


@given(st.integers(1, 100), st.integers(0, 2**32 - 1))
def test_epsilon_from_sample_inverts_forward_noise(t, seed):
    rng = np.random.default_rng(seed)
    x0, eps = rng.uniform(-1, 1, 12), rng.standard_normal(12)
    xt = forward_noise(x0, t, eps, SCHED)
    assert np.allclose(epsilon_from_sample(xt, x0, SCHED.alpha_bar[t]), eps, atol=1e-6)


def test_lr_schedule():
    c = TrainConfig(steps=1500, lr=1e-3, warmup_steps=500)
    assert c.lr_at(0) == pytest.approx(2e-6)
    assert c.lr_at(499) == pytest.approx(1e-3)
    assert c.lr_at(500) == pytest.approx(1e-3)
    assert c.lr_at(1000) == pytest.approx(5e-4)
    assert c.lr_at(1499) < 1e-7
    assert TrainConfig(lr_schedule="constant").lr_at(12345) == TrainConfig().lr
    with pytest.raises(PolicyError):
        TrainConfig(lr_schedule="step")
    with pytest.raises(PolicyError):
        TrainConfig(prediction="velocity")
    with pytest.raises(PolicyError):
        TrainConfig(ema_decay=1.0)


def test_epsilon_target_checkpoint_samples(tiny_dataset):
    ck = train(tiny_dataset, TrainConfig(steps=50, prediction="epsilon", seed=0))
    assert ck.prediction == "epsilon"
    out = sample_action_chunk(ck, np.zeros((2, 9)), np.random.default_rng(0))
    assert out.shape == (4, 3) and np.all(np.isfinite(out))
