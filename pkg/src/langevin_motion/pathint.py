"""Path-action scoring, multi-sample futures and optimal-path selection.

The action of a path is the negative log-likelihood of its increments under
the learned Gaussian transitions, dropping the path-independent constant
``0.5*ln(2*pi)`` per step and channel:

    A = sum_t sum_i (delta - f)^2 / (2 g^2) + ln g

Candidate futures are ranked by this action (or by the critic); the
Onsager-Machlup divergence correction is not included.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diffcore import DIFFUSION_FLOOR
from .errors import ContractError
from .motion_data import PoseSequence
from .networks import (CriticParams, GeneratorParams, critic_score, flatten_window,
                       generator_rollout, sample_seed)
from .particle_op import Increments, SdeStepOutputs

CRITERIA = ("min-action", "max-critic")


@dataclass
class CandidatePath:
    prediction: PoseSequence
    increments: Increments
    sde: SdeStepOutputs
    seed: int
    action: float | None = None
    critic_score: float | None = None


def action_terms(deltas: np.ndarray, drift: np.ndarray, diffusion: np.ndarray) -> np.ndarray:
    deltas, drift, diffusion = (np.asarray(a, dtype=np.float64) for a in (deltas, drift, diffusion))
    if not deltas.shape == drift.shape == diffusion.shape:
        raise ContractError(f"action: shapes {deltas.shape}, {drift.shape}, {diffusion.shape} differ")
    if np.any(diffusion < DIFFUSION_FLOOR):
        raise ContractError(f"action: diffusion below the floor {DIFFUSION_FLOOR}")
    r = deltas - drift
    return r * r / (2.0 * diffusion * diffusion) + np.log(diffusion)


def path_action(candidate: CandidatePath | None = None, *, deltas=None, drift=None, diffusion=None) -> float:
    """Discrete path action of a candidate (or of explicit delta/drift/diffusion arrays)."""
    if candidate is not None:
        deltas, drift, diffusion = candidate.increments.deltas, candidate.sde.drift, candidate.sde.diffusion
    return float(np.sum(action_terms(deltas, drift, diffusion)))


def sample_paths(params: GeneratorParams, observed: PoseSequence, n_samples: int, base_seed: int,
                 T: int, critic: CriticParams | None = None) -> list[CandidatePath]:
    """``n_samples`` rollouts with seeds ``base_seed ^ i``, each scored by its action
    (and by the critic when one is given). Results are in sample-index order."""
    if n_samples < 1:
        raise ContractError(f"n_samples must be >= 1, got {n_samples}")
    last = observed.coords[-1].reshape(-1)
    paths = []
    for i in range(n_samples):
        ro = generator_rollout(observed, sample_seed(base_seed, i), params, T)
        cand = CandidatePath(ro.prediction, ro.increments, ro.sde, ro.seed)
        cand.action = path_action(cand)
        if critic is not None:
            cand.critic_score = critic_score(flatten_window(last, ro.prediction.coords), critic)
        paths.append(cand)
    return paths


def _score_of(item, criterion: str) -> float:
    if isinstance(item, CandidatePath):
        value = item.action if criterion == "min-action" else item.critic_score
        if value is None:
            raise ContractError(f"candidate seeded {item.seed} has no score for {criterion}")
        return value
    return float(item)


def select_optimal(paths, criterion: str = "min-action") -> int:
    """Index of the lowest action (or highest critic score); ties go to the lowest index.

    ``paths`` may hold CandidatePath objects or bare scores.
    """
    if criterion not in CRITERIA:
        raise ContractError(f"unknown criterion {criterion!r}; expected one of {', '.join(CRITERIA)}")
    if len(paths) == 0:
        raise ContractError("select_optimal needs at least one path")
    sign = 1.0 if criterion == "min-action" else -1.0
    best, best_val = 0, sign * _score_of(paths[0], criterion)
    for i in range(1, len(paths)):
        v = sign * _score_of(paths[i], criterion)
        if v < best_val:
            best, best_val = i, v
    return best


def score_path(params: GeneratorParams, observed: PoseSequence, future: PoseSequence, seed: int,
               critic: CriticParams | None = None) -> CandidatePath:
    """Score a given future under the model: the decoder is fed the path's own increments
    so drift and diffusion are evaluated along it."""
    last = observed.coords[-1].reshape(-1)
    fut = future.coords.reshape(future.frame_count, -1)
    deltas = np.diff(np.vstack([last, fut]), axis=0)
    ro = generator_rollout(observed, seed, params, future.frame_count, forced=deltas)
    K = observed.frame_count
    cand = CandidatePath(future, Increments(deltas, start_step=K + 1), ro.sde, ro.seed)
    cand.action = path_action(cand)
    if critic is not None:
        cand.critic_score = critic_score(flatten_window(last, fut), critic)
    return cand
