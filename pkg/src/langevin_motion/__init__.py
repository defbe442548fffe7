"""Stochastic 3D human motion prediction with learned Langevin dynamics.

Poses are treated as independent particles per coordinate channel. A GRU
generator emits drift and diagonal diffusion for each step, a clipped critic
supplies an adversarial signal, and candidate futures are ranked by a discrete
path action or by the critic.
"""
from .errors import ConfigError, ContractError, MotionError, ParseError, ShapeError, TrainingError
from .losses import LossWeights
from .motion_data import PoseSequence, SkeletonSpec, load_pose_csv, save_pose_csv, synth_generate
from .networks import CriticParams, GeneratorParams, generator_rollout
from .pathint import path_action, sample_paths, select_optimal

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ContractError", "MotionError", "ParseError", "ShapeError", "TrainingError",
    "LossWeights", "PoseSequence", "SkeletonSpec", "load_pose_csv", "save_pose_csv", "synth_generate",
    "CriticParams", "GeneratorParams", "generator_rollout", "path_action", "sample_paths", "select_optimal",
]
