"""Versioned JSON checkpoints.

Parameter arrays are written flat (row-major) with their shapes, in a fixed
key order; floats use Python's shortest round-trip repr, so load(save(c))
reproduces every value bit-exactly and save/load/save is byte-identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..diffcore import AdamState
from ..errors import ParseError
from ..motion_data import SkeletonSpec
from ..networks import CRITIC_KEYS, GENERATOR_KEYS, CriticParams, GeneratorParams
from .config import TrainConfig

FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config: TrainConfig
    skeleton: SkeletonSpec
    generator: GeneratorParams
    critic: CriticParams
    gen_adam: AdamState
    critic_adam: AdamState
    rng_state: dict
    step: int = 0
    version: int = FORMAT_VERSION

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "step": self.step,
            "config": self.config.to_json(),
            "skeleton": self.skeleton.to_json(),
            "generator": {
                "channels": self.generator.channels,
                "noise_dim": self.generator.noise_dim,
                "input_dim": self.generator.input_dim,
                "hidden": self.generator.hidden,
                "increment_scale": self.generator.increment_scale,
                "arrays": _arrays_json(self.generator.arrays, GENERATOR_KEYS),
            },
            "critic": {
                "input_dim": self.critic.input_dim,
                "channels": self.critic.channels,
                "width": self.critic.width,
                "input_scale": self.critic.input_scale,
                "arrays": _arrays_json(self.critic.arrays, CRITIC_KEYS),
            },
            "gen_adam": _adam_json(self.gen_adam, GENERATOR_KEYS),
            "critic_adam": _adam_json(self.critic_adam, CRITIC_KEYS),
            "rng_state": self.rng_state,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":")) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def from_json(cls, obj: dict) -> "Checkpoint":
        if obj.get("version") != FORMAT_VERSION:
            raise ParseError(f"unsupported checkpoint version {obj.get('version')!r}")
        try:
            g, c = obj["generator"], obj["critic"]
            gen = GeneratorParams(g["channels"], g["noise_dim"], g["input_dim"], g["hidden"],
                                  g["increment_scale"], _arrays_from(g["arrays"]))
            crit = CriticParams(c["input_dim"], c["channels"], c["width"], c["input_scale"],
                                _arrays_from(c["arrays"]))
            gen.validate()
            crit.validate()
            return cls(
                config=TrainConfig.from_json(obj["config"]),
                skeleton=SkeletonSpec.from_json(obj["skeleton"]),
                generator=gen,
                critic=crit,
                gen_adam=_adam_from(obj["gen_adam"]),
                critic_adam=_adam_from(obj["critic_adam"]),
                rng_state=obj["rng_state"],
                step=int(obj["step"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed checkpoint: {exc}") from None

    @classmethod
    def load(cls, path) -> "Checkpoint":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"checkpoint is not valid JSON: {exc}", line=exc.lineno) from None
        return cls.from_json(obj)


def _arrays_json(arrays: dict[str, np.ndarray], keys) -> dict:
    return {k: {"shape": list(arrays[k].shape), "data": arrays[k].reshape(-1).tolist()} for k in keys}


def _arrays_from(obj: dict) -> dict[str, np.ndarray]:
    return {k: np.array(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in obj.items()}


def _adam_json(state: AdamState, keys) -> dict:
    return {"lr": state.lr, "beta1": state.beta1, "beta2": state.beta2, "eps": state.eps,
            "step": state.step, "m": _arrays_json(state.m, keys), "v": _arrays_json(state.v, keys)}


def _adam_from(obj: dict) -> AdamState:
    return AdamState(lr=obj["lr"], beta1=obj["beta1"], beta2=obj["beta2"], eps=obj["eps"],
                     step=obj["step"], m=_arrays_from(obj["m"]), v=_arrays_from(obj["v"]))
