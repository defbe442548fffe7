"""Training configuration and the windowed training/test set."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..losses import LossWeights
from ..motion_data import PoseSequence, SampleWindow, SkeletonSpec, split_windows


@dataclass(frozen=True)
class TrainConfig:
    K: int = 25
    T: int = 25
    hidden: int = 256
    input_dim: int = 64
    noise_dim: int = 16
    critic_width: int = 256
    lr: float = 1e-3
    # cosine-anneal the learning rate to this value over total_steps; None keeps it constant
    lr_final: float | None = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int = 16
    critic_steps: int = 5
    clip: float = 0.01
    weights: LossWeights = field(default_factory=LossWeights)
    total_steps: int = 1000
    seed: int = 0
    stride: int = 1
    initial_diffusion: float = 0.1
    teacher_forcing: bool = False
    # reserved: full C x C diffusion coupling is not implemented
    full_diffusion: bool = False
    checkpoint_every: int = 0
    train_paths: tuple[str, ...] = ()
    skeleton_path: str | None = None

    def __post_init__(self):
        if isinstance(self.weights, dict):
            object.__setattr__(self, "weights", LossWeights(**self.weights))
        object.__setattr__(self, "train_paths", tuple(self.train_paths))
        for name in ("K", "T", "hidden", "input_dim", "noise_dim", "critic_width", "batch_size", "stride"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.K < 2:
            raise ConfigError(f"K must be at least 2, got {self.K}")
        for name in ("critic_steps", "total_steps", "checkpoint_every", "seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        if not (math.isfinite(self.clip) and self.clip > 0):
            raise ConfigError(f"clip bound must be positive, got {self.clip}")
        if not (self.lr > 0 and 0 <= self.beta1 < 1 and 0 <= self.beta2 < 1 and self.eps > 0):
            raise ConfigError("invalid Adam hyperparameters")
        if self.lr_final is not None and not 0 < self.lr_final <= self.lr:
            raise ConfigError(f"lr_final must lie in (0, lr], got {self.lr_final}")
        if not self.initial_diffusion > 0:
            raise ConfigError("initial_diffusion must be positive")
        if self.full_diffusion:
            raise ConfigError("full diffusion matrices are reserved and not implemented")

    def learning_rate(self, step: int) -> float:
        """Learning rate used for generator step ``step`` (1-based)."""
        if self.lr_final is None or self.total_steps <= 1:
            return self.lr
        frac = min(max(step - 1, 0) / (self.total_steps - 1), 1.0)
        return self.lr_final + 0.5 * (self.lr - self.lr_final) * (1.0 + math.cos(math.pi * frac))

    def to_json(self) -> dict:
        d = asdict(self)
        d["train_paths"] = list(self.train_paths)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "TrainConfig":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def override(self, **changes) -> "TrainConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


@dataclass
class WindowSet:
    """Stacked sample windows as channel arrays: observed (n, K, C), target (n, T, C)."""

    observed: np.ndarray
    target: np.ndarray
    sources: list[str]
    starts: list[int]
    frame_rate: float = 25.0

    def __len__(self) -> int:
        return self.observed.shape[0]

    @property
    def channels(self) -> int:
        return self.observed.shape[2]

    @classmethod
    def from_windows(cls, windows: list[SampleWindow]) -> "WindowSet":
        if not windows:
            raise ConfigError("no sample windows")
        obs = np.stack([w.observed.coords.reshape(w.observed.frame_count, -1) for w in windows])
        tgt = np.stack([w.target.coords.reshape(w.target.frame_count, -1) for w in windows])
        return cls(obs, tgt, [w.source for w in windows], [w.start for w in windows],
                   windows[0].observed.frame_rate)

    @classmethod
    def from_sequences(cls, seqs: list[PoseSequence], K: int, T: int, stride: int = 1) -> "WindowSet":
        windows = [w for s in seqs for w in split_windows(s, K, T, stride)]
        return cls.from_windows(windows)

    def window(self, i: int) -> SampleWindow:
        K, T = self.observed.shape[1], self.target.shape[1]
        return SampleWindow(PoseSequence(self.observed[i].reshape(K, -1, 3), self.frame_rate, self.sources[i]),
                            PoseSequence(self.target[i].reshape(T, -1, 3), self.frame_rate, self.sources[i]),
                            self.sources[i], self.starts[i])

    def increment_rms(self) -> float:
        d = np.diff(self.observed, axis=1)
        v = float(np.sqrt(np.mean(d * d))) if d.size else 0.0
        return v if v > 0 else 1.0

    def displacement_rms(self) -> float:
        d = self.target - self.observed[:, -1:, :]
        v = float(np.sqrt(np.mean(d * d)))
        return v if v > 0 else 1.0


def resolve_path(base: Path | None, p: str) -> Path:
    path = Path(p)
    return path if path.is_absolute() or base is None else base / path
