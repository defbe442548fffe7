"""Pose <-> scalar-particle conversions and the discretised Langevin residual.

Each joint coordinate becomes one scalar channel; channel ``3*i + a`` holds
axis ``a`` of joint ``i``. Arrays are stored frame-major: ``(frames, channels)``.
The time step is one frame, so drift and diffusion are per-frame quantities.
Step indices follow the 1-based frame convention: step ``t`` is the
transition from frame ``t-1`` to frame ``t``, for ``t = 2 .. F``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffcore import DIFFUSION_FLOOR
from .errors import ContractError, ShapeError
from .motion_data import PoseSequence, SkeletonSpec


@dataclass(frozen=True)
class ParticleChannels:
    values: np.ndarray  # (F, C)
    frame_rate: float = 25.0

    @property
    def channel_count(self) -> int:
        return self.values.shape[1]

    @property
    def frame_count(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Increments:
    deltas: np.ndarray  # (steps, C)
    start_step: int = 2  # frame index (1-based) reached by the first delta

    @property
    def channel_count(self) -> int:
        return self.deltas.shape[1]

    @property
    def step_count(self) -> int:
        return self.deltas.shape[0]


@dataclass(frozen=True)
class SdeStepOutputs:
    """Drift, diagonal diffusion and noise for consecutive steps.

    All arrays are (steps, C); row ``k`` belongs to step ``start_step + k``.
    ``noise`` may be None when the draws are not kept.
    """

    drift: np.ndarray
    diffusion: np.ndarray
    noise: np.ndarray | None = None
    start_step: int = 2

    def __post_init__(self):
        if self.drift.shape != self.diffusion.shape:
            raise ShapeError(f"drift {self.drift.shape} and diffusion {self.diffusion.shape} differ")
        if self.noise is not None and self.noise.shape != self.drift.shape:
            raise ShapeError(f"noise {self.noise.shape} does not match drift {self.drift.shape}")
        if np.any(self.diffusion < DIFFUSION_FLOOR):
            raise ContractError(f"diffusion below the floor {DIFFUSION_FLOOR}")

    @property
    def step_count(self) -> int:
        return self.drift.shape[0]

    def row(self, t: int) -> int:
        k = t - self.start_step
        if not 0 <= k < self.step_count:
            raise ContractError(f"step {t} outside the SDE outputs "
                                f"(steps {self.start_step}..{self.start_step + self.step_count - 1})")
        return k


def project(seq: PoseSequence) -> ParticleChannels:
    F, N, _ = seq.coords.shape
    return ParticleChannels(seq.coords.reshape(F, 3 * N).copy(), seq.frame_rate)


def unproject(channels: ParticleChannels, name: str = "") -> PoseSequence:
    F, C = channels.values.shape
    if C % 3:
        raise ShapeError(f"channel count {C} is not a multiple of 3")
    return PoseSequence(channels.values.reshape(F, C // 3, 3), channels.frame_rate, name)


def increments(channels: ParticleChannels) -> Increments:
    if channels.frame_count < 2:
        raise ContractError("increments need at least 2 frames")
    return Increments(np.diff(channels.values, axis=0), start_step=2)


def integrate(last_pose: np.ndarray, deltas: Increments | np.ndarray, skeleton: SkeletonSpec | None = None,
              frame_rate: float = 25.0) -> PoseSequence:
    """Accumulate increments onto the last observed pose; frame k is frame k-1 plus delta k."""
    last = np.asarray(last_pose, dtype=np.float64).reshape(-1)
    d = deltas.deltas if isinstance(deltas, Increments) else np.asarray(deltas, dtype=np.float64)
    if d.ndim != 2 or d.shape[1] != last.size:
        raise ShapeError(f"increments {d.shape} do not match a pose with {last.size} channels")
    if skeleton is not None and d.shape[1] != 3 * skeleton.joint_count:
        raise ShapeError(f"increments have {d.shape[1]} channels, skeleton needs {3 * skeleton.joint_count}")
    # sequential accumulation, not np.cumsum, so the result matches frame-by-frame stepping
    out = np.empty_like(d)
    cur = last
    for k in range(d.shape[0]):
        cur = cur + d[k]
        out[k] = cur
    return PoseSequence(out.reshape(d.shape[0], -1, 3), frame_rate)


def langevin_residual(channels: ParticleChannels, t: int, sde: SdeStepOutputs,
                      noise: np.ndarray | None = None) -> np.ndarray:
    """``S_t - S_{t-1} - f_t - g_t * w_t`` for every channel (diagonal diffusion)."""
    if not 2 <= t <= channels.frame_count:
        raise ContractError(f"step {t} outside 2..{channels.frame_count}")
    k = sde.row(t)
    w = noise if noise is not None else sde.noise
    if w is None:
        raise ContractError("no noise draws supplied")
    w = w[k] if np.ndim(w) == 2 else np.asarray(w)
    if sde.drift.shape[1] != channels.channel_count or w.shape != (channels.channel_count,):
        raise ShapeError(f"SDE outputs with {sde.drift.shape[1]} channels do not match "
                         f"{channels.channel_count} channels")
    s = channels.values
    return s[t - 1] - s[t - 2] - sde.drift[k] - sde.diffusion[k] * w
