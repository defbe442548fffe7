"""Training losses: reconstruction, observation (SDE residual), bone length, Wasserstein.

Every loss accepts either plain arrays / pose sequences (returns a float) or
diffcore tensors (returns a scalar Tensor recorded on the active graph).
Batched inputs carry a leading batch axis; per-sample losses are averaged
over it in index order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diffcore as dc
from .diffcore import Tensor
from .errors import ConfigError, ContractError, ShapeError, TrainingError
from .motion_data import PoseSequence, SkeletonSpec
from .particle_op import ParticleChannels, SdeStepOutputs, langevin_residual

# keeps sqrt differentiable for coincident joints; shifts lengths by < 1e-6 mm
_BONE_EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    rec: float = 1.0
    obs: float = 0.1
    bone: float = 0.1
    adv: float = 0.01

    def __post_init__(self):
        for name in ("rec", "obs", "bone", "adv"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"loss weight {name} must be finite and >= 0, got {v}")


def _any_tensor(*xs) -> bool:
    return any(isinstance(x, Tensor) for x in xs)


def _finish(t: Tensor, as_tensor: bool):
    return t if as_tensor else t.item()


def _flat(x):
    if isinstance(x, PoseSequence):
        return x.coords.reshape(1, -1)
    if isinstance(x, Tensor):
        return x
    a = np.asarray(x, dtype=np.float64)
    return a.reshape(1, -1) if a.ndim != 2 else a


def loss_reconstruction(pred, target):
    """Sum of squared coordinate errors over all frames and joints, batch-averaged.

    Poses are (T, N, 3) sequences or flattened (B, T*3N) blocks.
    """
    tensor_mode = _any_tensor(pred, target)
    p, q = _flat(pred), _flat(target)
    if tuple(p.shape) != tuple(np.shape(q.value if isinstance(q, Tensor) else q)):
        raise ShapeError(f"reconstruction: prediction {tuple(p.shape)} and target "
                         f"{np.shape(q.value if isinstance(q, Tensor) else q)} differ")
    batch = p.shape[0]
    return _finish(dc.multiply(dc.sum(dc.square(dc.subtract(p, q))), 1.0 / batch), tensor_mode)


def observation_residuals(deltas: np.ndarray, drift: list, diffusion: list, noise: np.ndarray) -> list:
    """Per-step graph residuals ``delta - f - g*w`` for (B, S, C) inputs."""
    S = deltas.shape[1]
    if len(drift) != S or len(diffusion) != S or noise.shape != deltas.shape:
        raise ContractError(f"observation loss: {S} observed steps but {len(drift)} drift / "
                            f"{len(diffusion)} diffusion rows and noise {noise.shape}")
    return [dc.subtract(dc.subtract(deltas[:, k], drift[k]), dc.multiply(diffusion[k], noise[:, k]))
            for k in range(S)]


def loss_observation_batch(deltas: np.ndarray, drift: list, diffusion: list, noise: np.ndarray) -> Tensor:
    """Graph form: batch mean of the summed squared Langevin residuals."""
    res = observation_residuals(deltas, drift, diffusion, noise)
    total = dc.sum(dc.concat([dc.square(r) for r in res]))
    return dc.multiply(total, 1.0 / deltas.shape[0])


def loss_observation(channels: ParticleChannels, sde: SdeStepOutputs, noise: np.ndarray | None = None) -> float:
    """Sum over channels and steps t = 2..K of the squared Langevin residual."""
    K = channels.frame_count
    if sde.start_step != 2 or sde.step_count != K - 1:
        raise ContractError(f"observation loss needs SDE outputs for steps 2..{K}, got "
                            f"{sde.start_step}..{sde.start_step + sde.step_count - 1}")
    w = sde.noise if noise is None else np.asarray(noise, dtype=np.float64)
    if w is None:
        raise ContractError("observation loss needs noise draws")
    total = 0.0
    for t in range(2, K + 1):
        r = langevin_residual(channels, t, sde, w)
        total += float(np.dot(r, r))
    return total


class BoneIndex:
    """Gather indices and group-sum matrix for in-graph bone lengths over T frames."""

    def __init__(self, skeleton: SkeletonSpec, frames: int):
        C = 3 * skeleton.joint_count
        nb = skeleton.bone_count
        par, chi = [], []
        for f in range(frames):
            for p, c in skeleton.bones:
                par.extend(f * C + 3 * p + a for a in range(3))
                chi.extend(f * C + 3 * c + a for a in range(3))
        self.parents = np.array(par, dtype=np.int64)
        self.children = np.array(chi, dtype=np.int64)
        self.group = np.kron(np.eye(frames * nb), np.ones((1, 3)))
        self.frames = frames
        self.bones = nb

    def lengths(self, flat):
        """(B, T*C) poses -> (B, T*bones) lengths."""
        d = dc.subtract(dc.take(flat, self.children), dc.take(flat, self.parents))
        return dc.sqrt(dc.add(dc.matvec(self.group, dc.square(d)), _BONE_EPS))


def loss_bone(pred, target, skeleton: SkeletonSpec, index: BoneIndex | None = None):
    """Mean over frames and bones of |predicted length - true length|, batch-averaged."""
    tensor_mode = _any_tensor(pred, target)
    if skeleton.bone_count == 0:
        return _finish(dc.constant(0.0), tensor_mode)
    p, q = _flat(pred), _flat(target)
    C = 3 * skeleton.joint_count
    if p.shape[-1] % C:
        raise ShapeError(f"bone loss: pose width {p.shape[-1]} is not a multiple of {C}")
    frames = p.shape[-1] // C
    index = index or BoneIndex(skeleton, frames)
    true_len = index.lengths(q.value if isinstance(q, Tensor) else q).value
    diff = dc.absolute(dc.subtract(index.lengths(p), true_len))
    norm = 1.0 / (index.bones * frames * p.shape[0])
    return _finish(dc.multiply(dc.sum(diff), norm), tensor_mode)


def loss_critic(real_scores, fake_scores):
    """``mean(real) - mean(fake)``; the critic ascends this (minimises its negation)."""
    tensor_mode = _any_tensor(real_scores, fake_scores)
    r = real_scores if isinstance(real_scores, Tensor) else np.asarray(real_scores, dtype=np.float64)
    f = fake_scores if isinstance(fake_scores, Tensor) else np.asarray(fake_scores, dtype=np.float64)
    if np.size(r.value if isinstance(r, Tensor) else r) == 0 or \
            np.size(f.value if isinstance(f, Tensor) else f) == 0:
        raise ContractError("critic loss needs non-empty real and fake batches")
    return _finish(dc.subtract(dc.mean(r), dc.mean(f)), tensor_mode)


PART_NAMES = ("rec", "obs", "bone", "adv")


def loss_generator_total(parts: dict, weights: LossWeights, step: int | None = None):
    """``rec*L_rec + obs*L_obs + bone*L_bone - adv*mean(fake scores)``.

    ``parts`` maps rec/obs/bone/adv to values; ``adv`` is the mean critic score of
    generated windows.
    """
    tensor_mode = _any_tensor(*parts.values())
    for name in PART_NAMES:
        if name not in parts:
            raise ContractError(f"missing loss part {name!r}")
        v = parts[name]
        val = v.value if isinstance(v, Tensor) else v
        if not np.all(np.isfinite(val)):
            raise TrainingError(f"non-finite loss component {name!r}", step=step, component=name)
    total = dc.add(dc.add(dc.multiply(parts["rec"], weights.rec), dc.multiply(parts["obs"], weights.obs)),
                   dc.subtract(dc.multiply(parts["bone"], weights.bone), dc.multiply(parts["adv"], weights.adv)))
    return _finish(total, tensor_mode)
