"""Diffusion policy: schedule, model, training loop, checkpoints, runtime."""

import numpy as np
import pytest

from cyclemanip.core.episode_io import load_dataset
from cyclemanip.core.stats import normalize
from cyclemanip.core.types import Instruction, ValidationError
from cyclemanip.env.dataset import generate_dataset
from cyclemanip.env.tasks import TaskSpec
from cyclemanip.policy import (
    CheckpointBundle,
    PolicyConfig,
    PolicyModel,
    act,
    act_raw,
    add_noise,
    assemble_sample,
    batch_loss,
    ddim_denoise,
    ddim_step_indices,
    load_checkpoint,
    make_schedule,
    prepare_demo,
    rollout,
    sample_draws,
    save_checkpoint,
    train,
)
from cyclemanip.policy.model import PreparedInput
from cyclemanip.rng import derive_rng


def tiny_samples(cfg, n=4, seed=0):
    """Random normalized-looking training samples plus tied draws."""
    rng = derive_rng(seed, "tiny")
    samples = []
    draws = []
    for i in range(n):
        length = int(rng.integers(3, 30))
        s = type("S", (), {})()
        inp = PreparedInput(
            task_idx=int(rng.integers(0, 3)),
            cycle_idx=int(rng.integers(0, 8)),
            high=rng.normal(size=(cfg.sampler.k_high, 10)),
            diffs=rng.normal(size=(length, 4)) * 0.1,
            recent=rng.uniform(-1, 1, size=4 * cfg.sampler.local_window),
        )
        chunk = rng.uniform(-1, 1, size=cfg.chunk_dim)
        samples.append(
            type(
                "TS",
                (),
                {
                    "inp": inp,
                    "chunk": chunk,
                    "y": int(rng.integers(0, 10)),
                    "content_digest": bytes([i]) * 8,
                },
            )()
        )
        draws.append(
            (int(rng.integers(0, 100)), rng.standard_normal(cfg.chunk_dim))
        )
    return samples, draws


@pytest.fixture(scope="module")
def shake_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds")
    spec = TaskSpec(task_id="shake")
    manifest = generate_dataset(
        spec, episodes=6, cycle_range=(1, 2), seed=31, out_dir=out
    )
    man, demos = load_dataset(manifest)
    return spec, man, demos, manifest


@pytest.fixture(scope="module")
def trained_bundle(shake_dataset):
    spec, man, demos, _ = shake_dataset
    cfg = PolicyConfig(epochs=2, batch=64)
    model, meta, curve = train(demos, man["stats"], cfg, seed=5)
    return (
        CheckpointBundle(cfg=cfg, stats=man["stats"], model=model, meta=meta),
        curve,
    )


class TestConfig:
    def test_defaults_valid(self):
        cfg = PolicyConfig()
        assert cfg.chunk_dim == 32
        assert cfg.epochs == 300 and cfg.batch == 128

    def test_invariants(self):
        with pytest.raises(ValidationError):
            PolicyConfig(exec_horizon=9)
        with pytest.raises(ValidationError):
            PolicyConfig(exec_horizon=0)
        with pytest.raises(ValidationError):
            PolicyConfig(ddim_steps=7)

    def test_dict_round_trip(self):
        cfg = PolicyConfig(epochs=12, beta_loss=0.0)
        assert PolicyConfig.from_dict(cfg.to_dict()) == cfg


class TestSchedule:
    def test_monotonicity(self):
        s = make_schedule(PolicyConfig())
        assert len(s.betas) == 100
        assert np.all(np.diff(s.betas) > 0)
        assert np.all(np.diff(s.alpha_bars) < 0)
        assert np.isclose(s.betas[0], 1e-4) and np.isclose(s.betas[-1], 0.02)

    def test_add_noise_limits(self):
        s = make_schedule(PolicyConfig())
        x0 = np.ones((1, 32))
        eps = np.full((1, 32), 0.5)
        near = add_noise(x0, np.array([0]), eps, s)
        # at k=0 almost all signal remains
        assert np.allclose(near, x0, atol=0.02)
        far = add_noise(x0, np.array([99]), eps, s)
        signal = float(np.sqrt(s.alpha_bars[99]))
        assert np.allclose(far, signal * x0 + np.sqrt(1 - signal**2) * eps)

    def test_ddim_step_indices(self):
        assert ddim_step_indices(100, 10) == [99, 89, 79, 69, 59, 49, 39, 29, 19, 9]
        assert ddim_step_indices(100, 100)[:3] == [99, 98, 97]
        with pytest.raises(ValidationError):
            ddim_step_indices(100, 7)

    def test_ddim_identity_denoiser_recovers_x0(self):
        # if the model predicts the exact noise, one pass recovers x0
        s = make_schedule(PolicyConfig())
        rng = np.random.default_rng(0)
        x0 = rng.uniform(-1, 1, size=(1, 32))
        eps = rng.standard_normal((1, 32))
        k = 99
        xk = add_noise(x0, np.array([k]), eps, s)
        out = ddim_denoise(xk, [k], s, lambda x, ks: eps)
        assert np.allclose(out, x0, atol=1e-10)


class TestModel:
    def test_encode_shapes(self):
        cfg = PolicyConfig()
        model = PolicyModel(cfg, seed=1)
        samples, _ = tiny_samples(cfg, n=3)
        cond, f_lh = model.encode_batch([s.inp for s in samples])
        assert cond.shape == (3, cfg.d_lan + cfg.d_fuse)
        assert f_lh.shape == (3, cfg.d_fuse)
        logits = model.progress_logits(f_lh)
        assert logits.shape == (3, 10)

    def test_predict_noise_shape(self):
        cfg = PolicyConfig()
        model = PolicyModel(cfg, seed=1)
        samples, draws = tiny_samples(cfg, n=3)
        cond, _ = model.encode_batch([s.inp for s in samples])
        eps_hat = model.predict_noise(
            np.zeros((3, cfg.chunk_dim)),
            np.array([d[0] for d in draws]),
            cond,
        )
        assert eps_hat.shape == (3, cfg.chunk_dim)

    def test_init_deterministic_by_seed(self):
        cfg = PolicyConfig()
        a = PolicyModel(cfg, seed=3).store.to_blob()
        b = PolicyModel(cfg, seed=3).store.to_blob()
        c = PolicyModel(cfg, seed=4).store.to_blob()
        assert a == b
        assert a != c


class TestTrainingPieces:
    def test_anchor_chunk_back_padding(self, shake_dataset):
        spec, man, demos, _ = shake_dataset
        cfg = PolicyConfig()
        p = prepare_demo(demos[0], man["stats"])
        last = p.episode_len - 1
        s = assemble_sample(p, last, cfg, False)
        chunk = s.chunk.reshape(cfg.horizon, 4)
        # at the final frame every chunk row repeats the final action
        for row in chunk:
            assert np.array_equal(row, p.actions_norm[last])

    def test_draws_tied_to_content(self, shake_dataset):
        spec, man, demos, _ = shake_dataset
        cfg = PolicyConfig()
        p = prepare_demo(demos[0], man["stats"])
        s1 = assemble_sample(p, 5, cfg, False)
        s2 = assemble_sample(p, 5, cfg, False)
        k1, e1 = sample_draws(s1, epoch=3, seed=9, n_steps=100, chunk_dim=32)
        k2, e2 = sample_draws(s2, epoch=3, seed=9, n_steps=100, chunk_dim=32)
        assert k1 == k2 and np.array_equal(e1, e2)
        k3, e3 = sample_draws(s1, epoch=4, seed=9, n_steps=100, chunk_dim=32)
        assert (k3, e3[0]) != (k1, e1[0])

    def test_beta_zero_loss_is_pure_mse(self):
        cfg = PolicyConfig()
        model = PolicyModel(cfg, seed=2)
        samples, draws = tiny_samples(cfg, n=4)
        sched = make_schedule(cfg)
        loss0, mse0, _ = batch_loss(model, samples, draws, sched, 1.0, 0.0)
        assert loss0.data[0, 0] == mse0

    def test_loss_invariant_to_batch_order(self):
        cfg = PolicyConfig()
        model = PolicyModel(cfg, seed=2)
        samples, draws = tiny_samples(cfg, n=5)
        sched = make_schedule(cfg)
        l1, _, _ = batch_loss(model, samples, draws, sched, 1.0, 0.1)
        order = [3, 1, 4, 0, 2]
        l2, _, _ = batch_loss(
            model,
            [samples[i] for i in order],
            [draws[i] for i in order],
            sched,
            1.0,
            0.1,
        )
        assert np.isclose(l1.data[0, 0], l2.data[0, 0], rtol=0, atol=1e-12)

    def test_train_writes_curve_and_holdout(self, trained_bundle):
        bundle, curve = trained_bundle
        assert curve[0]["step"] == 0
        assert {"step", "lr", "loss", "mse", "ce"} == set(curve[0])
        lrs = [row["lr"] for row in curve]
        assert lrs == sorted(lrs, reverse=True)  # cosine decays
        assert bundle.meta["holdout_anchors"] > 0
        assert bundle.meta["holdout_progress_accuracy"] is not None

    def test_train_deterministic(self, shake_dataset):
        spec, man, demos, _ = shake_dataset
        cfg = PolicyConfig(epochs=1, batch=64)
        m1, _, c1 = train(demos, man["stats"], cfg, seed=7)
        m2, _, c2 = train(demos, man["stats"], cfg, seed=7)
        assert m1.store.to_blob() == m2.store.to_blob()
        assert c1 == c2


class TestCheckpoint:
    def test_round_trip_and_idempotence(self, trained_bundle, tmp_path):
        bundle, _ = trained_bundle
        p1 = tmp_path / "a.ckpt"
        p2 = tmp_path / "b.ckpt"
        save_checkpoint(p1, bundle)
        again = load_checkpoint(p1)
        save_checkpoint(p2, again)
        assert p1.read_bytes() == p2.read_bytes()
        assert again.cfg == bundle.cfg
        assert again.meta == bundle.meta
        assert again.model.store.to_blob() == bundle.model.store.to_blob()

    def test_rejects_corrupt_files(self, trained_bundle, tmp_path):
        from cyclemanip.core.episode_io import ParseError

        bundle, _ = trained_bundle
        p = tmp_path / "a.ckpt"
        save_checkpoint(p, bundle)
        raw = bytearray(p.read_bytes())
        raw[:4] = b"XXXX"
        bad = tmp_path / "bad.ckpt"
        bad.write_bytes(bytes(raw))
        with pytest.raises(ParseError):
            load_checkpoint(bad)
        short = tmp_path / "short.ckpt"
        short.write_bytes(p.read_bytes()[:40])
        with pytest.raises(ParseError):
            load_checkpoint(short)


class TestRuntime:
    def test_act_deterministic_and_chunk_shape(self, shake_dataset, trained_bundle):
        spec, man, demos, _ = shake_dataset
        bundle, _ = trained_bundle
        hist = demos[0].frames[:20]
        ins = demos[0].instruction
        c1 = act(hist, ins, bundle, seed=11)
        c2 = act(hist, ins, bundle, seed=11)
        assert np.array_equal(c1.actions, c2.actions)
        assert c1.actions.shape == (bundle.cfg.horizon, 4)
        c3 = act(hist, ins, bundle, seed=12)
        assert not np.array_equal(c1.actions, c3.actions)

    def test_act_normalization_round_trip(self, shake_dataset, trained_bundle):
        spec, man, demos, _ = shake_dataset
        bundle, _ = trained_bundle
        hist = demos[1].frames[:15]
        ins = demos[1].instruction
        raw = act_raw(hist, ins, bundle, seed=4)
        chunk = act(hist, ins, bundle, seed=4)
        stats = bundle.stats
        renorm = normalize(
            chunk.actions, stats.action_min, stats.action_max
        ).reshape(1, -1)
        assert np.max(np.abs(renorm - raw)) < 1e-12

    def test_rollout_caps_at_t_max(self, shake_dataset, trained_bundle):
        spec, man, demos, _ = shake_dataset
        bundle, _ = trained_bundle
        ins = Instruction(task_id="shake", target_cycles=1)
        traj = rollout(spec, ins, bundle, seed=3, t_max=50)
        assert len(traj) == 50  # barely-trained policy won't dwell home
        assert [f.t for f in traj] == list(range(50))

    def test_rollout_deterministic(self, shake_dataset, trained_bundle):
        spec, man, demos, _ = shake_dataset
        bundle, _ = trained_bundle
        ins = Instruction(task_id="shake", target_cycles=1)
        t1 = rollout(spec, ins, bundle, seed=3, t_max=40)
        t2 = rollout(spec, ins, bundle, seed=3, t_max=40)
        assert all(
            np.array_equal(a.proprio.as_array(), b.proprio.as_array())
            for a, b in zip(t1, t2)
        )

    def test_no_history_mode_recorded_and_used(self, shake_dataset):
        spec, man, demos, _ = shake_dataset
        cfg = PolicyConfig(epochs=1, batch=64)
        model, meta, _ = train(
            demos, man["stats"], cfg, seed=5, no_history=True
        )
        assert meta["no_history"] is True
        bundle = CheckpointBundle(
            cfg=cfg, stats=man["stats"], model=model, meta=meta
        )
        hist = demos[0].frames[:30]
        raw = act_raw(hist, demos[0].instruction, bundle, seed=1)
        assert raw.shape == (1, cfg.chunk_dim)
