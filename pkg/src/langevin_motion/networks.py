"""Recurrent SDE generator and the feed-forward critic.

The generator runs one GRU over all particle channels jointly. Step ``t``
(``t = 2 .. K+T``) consumes the previous increment ``delta_{t-1}`` plus a
projected noise draw ``w_t`` and emits the drift ``f_t`` and diffusion ``g_t``
for the transition into frame ``t``; on future steps it also emits the
increment ``delta_t``, which is fed back at the next step. ``delta_1`` is taken
as zero, so a window of K observed frames consumes exactly ``K-1+T`` draws.

Increments are divided by a data-derived ``increment_scale`` on the way in and
the heads are multiplied by it on the way out, so network activations stay O(1)
whatever the motion amplitude in millimetres.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import diffcore as dc
from .diffcore import DIFFUSION_FLOOR, Tensor
from .errors import ConfigError, ContractError, ShapeError
from .motion_data import PoseSequence
from .particle_op import Increments, SdeStepOutputs, increments, integrate, project

U64_MASK = (1 << 64) - 1


class NoiseStream:
    """Seeded standard-normal stream that counts how many vectors it has handed out."""

    def __init__(self, seed: int, dim: int):
        self.seed = int(seed) & U64_MASK
        self.dim = dim
        self.rng = np.random.Generator(np.random.PCG64(self.seed))
        self.position = 0

    def draw(self, n: int) -> np.ndarray:
        out = self.rng.standard_normal((n, self.dim))
        self.position += n
        return out


def sample_seed(base_seed: int, index: int) -> int:
    return (int(base_seed) ^ int(index)) & U64_MASK


def _uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


GENERATOR_KEYS = ("in_w", "in_b", "noise_w", "gru_wi", "gru_bi", "gru_wh", "gru_bh",
                  "inc_w", "inc_b", "drift_w", "drift_b", "diff_w", "diff_b")
CRITIC_KEYS = ("l1_w", "l1_b", "l2_w", "l2_b", "l3_w", "l3_b", "out_w", "out_b")


@dataclass
class GeneratorParams:
    channels: int
    noise_dim: int = 16
    input_dim: int = 64
    hidden: int = 256
    increment_scale: float = 1.0
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def init(cls, channels: int, rng: np.random.Generator, noise_dim: int = 16, input_dim: int = 64,
             hidden: int = 256, increment_scale: float = 1.0,
             initial_diffusion: float = 0.1) -> "GeneratorParams":
        C, W, D, H = channels, noise_dim, input_dim, hidden
        if min(C, W, D, H) < 1:
            raise ConfigError("generator dimensions must be positive")
        a = {
            "in_w": _uniform(rng, (D, C), C),
            "in_b": _uniform(rng, (D,), C),
            "noise_w": _uniform(rng, (D, W), W),
            "gru_wi": _uniform(rng, (3 * H, D), H),
            "gru_bi": _uniform(rng, (3 * H,), H),
            "gru_wh": _uniform(rng, (3 * H, H), H),
            "gru_bh": _uniform(rng, (3 * H,), H),
            "inc_w": _uniform(rng, (C, H), H),
            "inc_b": np.zeros(C),
            "drift_w": _uniform(rng, (C, H), H),
            "drift_b": np.zeros(C),
            "diff_w": _uniform(rng, (C, H), H) * 0.1,
            # softplus^-1 of the requested starting diffusion (in units of increment_scale)
            "diff_b": np.full(C, np.log(np.expm1(initial_diffusion))),
        }
        return cls(C, W, D, H, float(increment_scale), a)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        C, W, D, H = self.channels, self.noise_dim, self.input_dim, self.hidden
        return {"in_w": (D, C), "in_b": (D,), "noise_w": (D, W), "gru_wi": (3 * H, D),
                "gru_bi": (3 * H,), "gru_wh": (3 * H, H), "gru_bh": (3 * H,),
                "inc_w": (C, H), "inc_b": (C,), "drift_w": (C, H), "drift_b": (C,),
                "diff_w": (C, H), "diff_b": (C,)}

    def validate(self) -> None:
        for k, shape in self.shapes().items():
            if k not in self.arrays or self.arrays[k].shape != shape:
                got = self.arrays[k].shape if k in self.arrays else None
                raise ShapeError(f"generator parameter {k}: expected {shape}, got {got}")

    def tensors(self, trainable: bool = False) -> dict[str, Tensor]:
        return {k: Tensor(self.arrays[k], trainable=trainable, name=f"gen.{k}") for k in GENERATOR_KEYS}

    def copy(self) -> "GeneratorParams":
        return GeneratorParams(self.channels, self.noise_dim, self.input_dim, self.hidden,
                               self.increment_scale, {k: v.copy() for k, v in self.arrays.items()})


@dataclass
class CriticParams:
    input_dim: int  # (T+1) * channels
    channels: int
    width: int = 256
    input_scale: float = 1.0
    arrays: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def init(cls, input_dim: int, channels: int, rng: np.random.Generator, width: int = 256,
             input_scale: float = 1.0, clip: float | None = None) -> "CriticParams":
        if channels < 1 or input_dim % channels or input_dim // channels < 2:
            raise ConfigError(f"critic input {input_dim} is not (T+1) * {channels} with T >= 1")
        D, W = input_dim, width
        a = {
            "l1_w": _uniform(rng, (W, D), D), "l1_b": _uniform(rng, (W,), D),
            "l2_w": _uniform(rng, (W, W), W), "l2_b": _uniform(rng, (W,), W),
            "l3_w": _uniform(rng, (W, W), W), "l3_b": _uniform(rng, (W,), W),
            "out_w": _uniform(rng, (1, W), W), "out_b": _uniform(rng, (1,), W),
        }
        if clip is not None:
            dc.clip_weights(a, clip)
        return cls(D, channels, W, float(input_scale), a)

    def shapes(self) -> dict[str, tuple[int, ...]]:
        D, W = self.input_dim, self.width
        return {"l1_w": (W, D), "l1_b": (W,), "l2_w": (W, W), "l2_b": (W,),
                "l3_w": (W, W), "l3_b": (W,), "out_w": (1, W), "out_b": (1,)}

    def validate(self) -> None:
        for k, shape in self.shapes().items():
            if k not in self.arrays or self.arrays[k].shape != shape:
                got = self.arrays[k].shape if k in self.arrays else None
                raise ShapeError(f"critic parameter {k}: expected {shape}, got {got}")

    def tensors(self, trainable: bool = False) -> dict[str, Tensor]:
        return {k: Tensor(self.arrays[k], trainable=trainable, name=f"critic.{k}") for k in CRITIC_KEYS}

    def copy(self) -> "CriticParams":
        return CriticParams(self.input_dim, self.channels, self.width, self.input_scale,
                            {k: v.copy() for k, v in self.arrays.items()})


def _tensors(params, trainable=False):
    return params if isinstance(params, dict) else params.tensors(trainable)


# ---------------------------------------------------------------------------
# GRU

def gru_cell(x, h, p) -> Tensor:
    """One GRU step (gate order reset, update, candidate).

    ``p`` needs ``gru_wi`` (3H, D), ``gru_bi``, ``gru_wh`` (3H, H), ``gru_bh``.
    """
    p = _tensors(p)
    H = p["gru_wh"].shape[1]
    x = dc._as_tensor(x)
    h = dc._as_tensor(h)
    if h.shape[-1] != H or x.shape[-1] != p["gru_wi"].shape[1]:
        raise ShapeError(f"gru_cell: input {x.shape} / hidden {h.shape} do not fit "
                         f"weights {p['gru_wi'].shape}, {p['gru_wh'].shape}")
    gi = dc.matvec(p["gru_wi"], x) + p["gru_bi"]
    gh = dc.matvec(p["gru_wh"], h) + p["gru_bh"]
    r = dc.sigmoid(dc.slice_last(gi, 0, H) + dc.slice_last(gh, 0, H))
    z = dc.sigmoid(dc.slice_last(gi, H, 2 * H) + dc.slice_last(gh, H, 2 * H))
    n = dc.tanh(dc.slice_last(gi, 2 * H, 3 * H) + r * dc.slice_last(gh, 2 * H, 3 * H))
    return n + z * (h - n)


# ---------------------------------------------------------------------------
# generator

@dataclass
class RolloutTensors:
    """Per-step graph outputs of a batched rollout; every entry is (B, C)."""

    obs_drift: list[Tensor]
    obs_diffusion: list[Tensor]
    deltas: list[Tensor]
    drift: list[Tensor]
    diffusion: list[Tensor]
    poses: list[Tensor]
    hidden: list[np.ndarray]


def rollout_batch(params, obs_deltas: np.ndarray, last_pose: np.ndarray, noise: np.ndarray, T: int,
                  increment_scale: float, forced: np.ndarray | None = None,
                  keep_hidden: bool = False) -> RolloutTensors:
    """Batched generator unroll.

    obs_deltas: (B, K-1, C) observed increments. last_pose: (B, C) last observed frame.
    noise: (B, K-1+T, d_w). forced: optional (B, T, C) increments fed back instead of
    the generated ones (teacher forcing / path rescoring).
    """
    p = _tensors(params)
    B, steps_obs, C = obs_deltas.shape
    if steps_obs < 1:
        raise ContractError("generator needs at least 2 observed frames")
    if T < 1:
        raise ContractError(f"prediction length must be >= 1, got {T}")
    if noise.shape[:2] != (B, steps_obs + T):
        raise ShapeError(f"noise {noise.shape} does not cover {steps_obs + T} steps for batch {B}")
    H = p["gru_wh"].shape[1]
    s = float(increment_scale)
    inv = 1.0 / s
    h = dc.constant(np.zeros((B, H)))
    obs_f, obs_g, deltas, drift, diff, poses, hidden = [], [], [], [], [], [], []

    def step(prev_delta, w):
        x = dc.matvec(p["in_w"], prev_delta * inv) + p["in_b"] + dc.matvec(p["noise_w"], w)
        return gru_cell(x, h, p)

    def heads(hh):
        f = dc.multiply(dc.matvec(p["drift_w"], hh) + p["drift_b"], s)
        g = dc.softplus(dc.matvec(p["diff_w"], hh) + p["diff_b"], scale=s, floor=DIFFUSION_FLOOR)
        return f, g

    prev = dc.constant(np.zeros((B, C)))
    for k in range(steps_obs):
        h = step(prev, noise[:, k])
        if keep_hidden:
            hidden.append(h.value)
        f, g = heads(h)
        obs_f.append(f)
        obs_g.append(g)
        prev = dc.constant(obs_deltas[:, k])
    pose = dc.constant(last_pose)
    for j in range(T):
        h = step(prev, noise[:, steps_obs + j])
        if keep_hidden:
            hidden.append(h.value)
        f, g = heads(h)
        d = dc.multiply(dc.matvec(p["inc_w"], h) + p["inc_b"], s)
        pose = pose + d
        deltas.append(d)
        drift.append(f)
        diff.append(g)
        poses.append(pose)
        prev = d if forced is None else dc.constant(forced[:, j])
    return RolloutTensors(obs_f, obs_g, deltas, drift, diff, poses, hidden)


@dataclass
class Rollout:
    prediction: PoseSequence
    increments: Increments
    sde: SdeStepOutputs           # future steps K+1 .. K+T
    observed_sde: SdeStepOutputs  # observed steps 2 .. K
    seed: int
    noise_draws: int


def _stack(ts: list[Tensor], b: int = 0) -> np.ndarray:
    return np.stack([t.value[b] for t in ts])


def generator_rollout(observed: PoseSequence, seed: int, params: GeneratorParams, T: int,
                      forced: np.ndarray | None = None, stream: NoiseStream | None = None) -> Rollout:
    """Predict ``T`` future frames from an observed window with one seeded noise stream."""
    K = observed.frame_count
    if K < 2:
        raise ContractError(f"generator needs K >= 2 observed frames, got {K}")
    if 3 * observed.joint_count != params.channels:
        raise ShapeError(f"observed pose has {3 * observed.joint_count} channels, "
                         f"generator expects {params.channels}")
    stream = stream or NoiseStream(seed, params.noise_dim)
    noise = stream.draw(K - 1 + T)
    ch = project(observed)
    obs = increments(ch).deltas
    with dc.no_grad():
        out = rollout_batch(params, obs[None], ch.values[-1][None], noise[None], T,
                            params.increment_scale,
                            forced=None if forced is None else np.asarray(forced)[None])
    deltas = _stack(out.deltas)
    pred = integrate(ch.values[-1], deltas, frame_rate=observed.frame_rate)
    return Rollout(
        prediction=PoseSequence(pred.coords, observed.frame_rate, observed.name),
        increments=Increments(deltas, start_step=K + 1),
        sde=SdeStepOutputs(_stack(out.drift), _stack(out.diffusion), start_step=K + 1),
        observed_sde=SdeStepOutputs(_stack(out.obs_drift), _stack(out.obs_diffusion), start_step=2),
        seed=stream.seed,
        noise_draws=K - 1 + T,
    )


# ---------------------------------------------------------------------------
# critic

def critic_forward(window, params: CriticParams, tensors: dict[str, Tensor] | None = None) -> Tensor:
    """Scores for flattened windows (..., (T+1)*C) -> (...).

    Windows are made relative to their first (anchor) pose and divided by
    ``input_scale`` before the first layer.
    """
    p = tensors if tensors is not None else params.tensors()
    window = dc._as_tensor(window)
    if window.shape[-1] != params.input_dim:
        raise ContractError(f"critic expects windows of {params.input_dim} values, got {window.shape[-1]}")
    C = params.channels
    anchor = dc.slice_last(window, 0, C)
    x = dc.multiply(window - dc.concat([anchor] * (params.input_dim // C)), 1.0 / params.input_scale)
    x = dc.leaky_relu(dc.matvec(p["l1_w"], x) + p["l1_b"])
    x = dc.leaky_relu(dc.matvec(p["l2_w"], x) + p["l2_b"])
    x = dc.leaky_relu(dc.matvec(p["l3_w"], x) + p["l3_b"])
    return dc.sum(dc.matvec(p["out_w"], x) + p["out_b"], axis=-1)


def critic_score(window, params: CriticParams) -> float | np.ndarray:
    """Critic value for one flattened window (float) or a batch of them (array)."""
    w = np.asarray(window, dtype=np.float64)
    with dc.no_grad():
        out = critic_forward(w, params)
    return float(out.value) if w.ndim == 1 else out.value


def flatten_window(last_pose: np.ndarray, future: np.ndarray) -> np.ndarray:
    """Concatenate the last observed pose with T future poses into one flat vector."""
    last = np.asarray(last_pose, dtype=np.float64).reshape(-1)
    fut = np.asarray(future, dtype=np.float64).reshape(-1, last.size)
    return np.concatenate([last, fut.reshape(-1)])
