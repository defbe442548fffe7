"""WGAN training schedule for the SDE generator.

Each generator step is preceded by ``critic_steps`` critic updates (ascend
mean(real) - mean(fake), then clip every critic weight into [-clip, clip]).
All randomness comes from one PCG64 stream whose state is checkpointed, so a
resumed run reproduces an uninterrupted one step for step.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .. import diffcore as dc
from ..errors import ConfigError, TrainingError
from ..losses import BoneIndex, loss_bone, loss_critic, loss_generator_total, loss_observation_batch, \
    loss_reconstruction
from ..motion_data import SkeletonSpec
from ..networks import CriticParams, GeneratorParams, critic_forward, rollout_batch
from .checkpoint import Checkpoint
from .config import TrainConfig, WindowSet

log = logging.getLogger(__name__)

METRIC_FIELDS = ("step", "rec", "obs", "bone", "adv", "critic", "total", "critic_max_abs")


def init_checkpoint(config: TrainConfig, data: WindowSet, skeleton: SkeletonSpec) -> Checkpoint:
    """Fresh parameters and optimiser state; scales are taken from the training windows."""
    C = data.channels
    if C != 3 * skeleton.joint_count:
        raise ConfigError(f"data has {C} channels, skeleton has {skeleton.joint_count} joints")
    if data.observed.shape[1] != config.K or data.target.shape[1] != config.T:
        raise ConfigError(f"windows are {data.observed.shape[1]}+{data.target.shape[1]} frames, "
                          f"config asks for K={config.K}, T={config.T}")
    init_rng = np.random.default_rng([config.seed, 0])
    gen = GeneratorParams.init(C, init_rng, config.noise_dim, config.input_dim, config.hidden,
                               data.increment_rms(), config.initial_diffusion)
    critic = CriticParams.init((config.T + 1) * C, C, init_rng, config.critic_width,
                               data.displacement_rms(), clip=config.clip)
    hyper = dict(lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
    train_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([config.seed, 1])))
    return Checkpoint(config, skeleton, gen, critic,
                      dc.AdamState.for_params(gen.arrays, **hyper),
                      dc.AdamState.for_params(critic.arrays, **hyper),
                      train_rng.bit_generator.state, step=0)


@dataclass
class _Batch:
    obs_deltas: np.ndarray  # (B, K-1, C)
    last: np.ndarray        # (B, C)
    target: np.ndarray      # (B, T*C)
    future_deltas: np.ndarray  # (B, T, C)


def _batch(data: WindowSet, idx: np.ndarray) -> _Batch:
    obs = data.observed[idx]
    tgt = data.target[idx]
    last = obs[:, -1]
    fut = np.diff(np.concatenate([last[:, None], tgt], axis=1), axis=1)
    return _Batch(np.diff(obs, axis=1), last, tgt.reshape(len(idx), -1), fut)


def _check_finite(step: int, **values) -> None:
    for name, v in values.items():
        if not math.isfinite(v):
            raise TrainingError(f"non-finite {name} loss at step {step}", step=step, component=name)


def train(config: TrainConfig, data: WindowSet, skeleton: SkeletonSpec, resume: Checkpoint | None = None,
          checkpoint_dir: str | Path | None = None,
          on_step: Callable[[dict], None] | None = None,
          on_critic_step: Callable[[int, int, CriticParams], None] | None = None
          ) -> tuple[Checkpoint, list[dict]]:
    """Train up to ``config.total_steps`` generator steps; returns the final checkpoint and
    one metrics dict per generator step run here.

    ``on_critic_step(step, j, critic)`` is called after every post-clip critic update.
    """
    if len(data) < 1:
        raise ConfigError("training needs at least one window")
    ckpt = resume if resume is not None else init_checkpoint(config, data, skeleton)
    if resume is not None:
        ckpt.config = config
    gen, critic = ckpt.generator, ckpt.critic
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = ckpt.rng_state
    K, T, B, C = config.K, config.T, config.batch_size, data.channels
    w = config.weights
    n = len(data)
    bones = BoneIndex(skeleton, T)
    run_critic = w.adv > 0 and config.critic_steps > 0
    g_params = gen.tensors(trainable=True)
    c_params = critic.tensors(trainable=True)
    c_const = critic.tensors(trainable=False)
    metrics: list[dict] = []

    while ckpt.step < config.total_steps:
        step = ckpt.step + 1
        ckpt.gen_adam.lr = ckpt.critic_adam.lr = config.learning_rate(step)
        critic_val = 0.0
        critic_max = max(float(np.max(np.abs(a))) for a in critic.arrays.values())
        if run_critic:
            critic_max = 0.0
            cs = config.critic_steps
            idx = rng.integers(n, size=cs * B)
            noise = rng.standard_normal((cs * B, K - 1 + T, gen.noise_dim))
            cb = _batch(data, idx)
            with dc.no_grad():
                fake = rollout_batch(gen, cb.obs_deltas, cb.last, noise, T, gen.increment_scale)
            fake_flat = np.concatenate([p.value for p in fake.poses], axis=1)
            real_win = np.concatenate([cb.last, cb.target], axis=1)
            fake_win = np.concatenate([cb.last, fake_flat], axis=1)
            for j in range(cs):
                sl = slice(j * B, (j + 1) * B)
                with dc.Graph() as g:
                    loss = loss_critic(critic_forward(real_win[sl], critic, c_params),
                                       critic_forward(fake_win[sl], critic, c_params))
                    g.backward(dc.multiply(loss, -1.0))
                critic_val = loss.item()
                _check_finite(step, critic=critic_val)
                dc.adam_step(critic.arrays, {k: c_params[k].grad for k in critic.arrays}, ckpt.critic_adam)
                dc.clip_weights(critic.arrays, config.clip)
                critic_max = max(critic_max, max(float(np.max(np.abs(a))) for a in critic.arrays.values()))
                if on_critic_step is not None:
                    on_critic_step(step, j, critic)

        idx = rng.integers(n, size=B)
        noise = rng.standard_normal((B, K - 1 + T, gen.noise_dim))
        w_obs = rng.standard_normal((B, K - 1, C))
        b = _batch(data, idx)
        with dc.Graph() as g:
            out = rollout_batch(g_params, b.obs_deltas, b.last, noise, T, gen.increment_scale,
                                forced=b.future_deltas if config.teacher_forcing else None)
            flat = dc.concat(out.poses)
            parts = {
                "rec": loss_reconstruction(flat, b.target),
                "obs": loss_observation_batch(b.obs_deltas, out.obs_drift, out.obs_diffusion, w_obs),
                "bone": loss_bone(flat, b.target, skeleton, bones),
                "adv": dc.mean(critic_forward(dc.concat([dc.constant(b.last), flat]), critic, c_const))
                if w.adv > 0 else dc.constant(0.0),
            }
            total = loss_generator_total(parts, w, step=step)
            _check_finite(step, total=total.item())
            g.backward(total)
        grads = {k: g_params[k].grad for k in gen.arrays if g_params[k].grad is not None}
        try:
            dc.adam_step(gen.arrays, grads, ckpt.gen_adam)
        except TrainingError as exc:
            raise TrainingError(f"step {step}: {exc}", step=step, component=exc.component) from None
        for t in g_params.values():
            t.grad = None

        ckpt.step = step
        ckpt.rng_state = rng.bit_generator.state
        rec = {"step": step, **{k: v.item() for k, v in parts.items()},
               "critic": critic_val, "total": total.item(),
               "critic_max_abs": critic_max}
        metrics.append(rec)
        if on_step is not None:
            on_step(rec)
        if step % 100 == 0:
            log.info("step %d rec=%.4g obs=%.4g bone=%.4g adv=%.4g critic=%.4g",
                     step, rec["rec"], rec["obs"], rec["bone"], rec["adv"], rec["critic"])
        if checkpoint_dir is not None and config.checkpoint_every and step % config.checkpoint_every == 0:
            Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
            ckpt.save(Path(checkpoint_dir) / f"step_{step:07d}.json")
    return ckpt, metrics
