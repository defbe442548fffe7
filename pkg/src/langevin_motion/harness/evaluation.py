"""MPJPE evaluation at fixed horizons, baselines and report I/O."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ContractError
from ..motion_data import PoseSequence
from ..networks import generator_rollout
from ..pathint import sample_paths, select_optimal
from .checkpoint import Checkpoint
from .config import WindowSet

HORIZONS_MS = (80, 160, 320, 400, 1000)
MODES = ("single", "best-of-n")


def horizon_frames(ms: float, frame_rate: float = 25.0) -> int:
    return int(round(ms * frame_rate / 1000.0))


def _coords(x) -> np.ndarray:
    a = x.coords if isinstance(x, PoseSequence) else np.asarray(x, dtype=np.float64)
    return a


def mpjpe(pred, target, offsets) -> np.ndarray:
    """Mean per-joint position error (mm) at 1-based future frame offsets.

    ``pred``/``target`` are (T, N, 3) sequences or (S, T, N, 3) stacks of samples;
    errors are averaged over joints, then over samples.
    """
    p, q = _coords(pred), _coords(target)
    if p.shape != q.shape:
        raise ContractError(f"mpjpe: prediction {p.shape} and target {q.shape} differ")
    if p.ndim == 3:
        p, q = p[None], q[None]
    T = p.shape[1]
    out = []
    for k in offsets:
        if not 1 <= k <= T:
            raise ContractError(f"mpjpe: offset {k} outside 1..{T}")
        d = np.sqrt(np.sum((p[:, k - 1] - q[:, k - 1]) ** 2, axis=-1))
        out.append(float(np.mean(d)))
    return np.array(out)


def zero_velocity(observed: PoseSequence, T: int) -> PoseSequence:
    """Repeat the last observed pose."""
    return PoseSequence(np.repeat(observed.coords[-1:], T, axis=0), observed.frame_rate, observed.name)


def constant_velocity(observed: PoseSequence, T: int) -> PoseSequence:
    """Extrapolate the last observed per-frame displacement."""
    last = observed.coords[-1]
    v = last - observed.coords[-2] if observed.frame_count > 1 else np.zeros_like(last)
    k = np.arange(1, T + 1, dtype=np.float64)[:, None, None]
    return PoseSequence(last[None] + k * v[None], observed.frame_rate, observed.name)


@dataclass
class EvalReport:
    mode: str
    horizons_ms: list[int]
    frames: list[int]
    mpjpe_mm: list[float]
    per_source: dict[str, list[float]] = field(default_factory=dict)
    sample_count: int = 0
    selected: list[int] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("horizon_ms", "frames", "mpjpe_mm"))
        for ms, f, e in zip(self.horizons_ms, self.frames, self.mpjpe_mm):
            w.writerow((ms, f, repr(float(e))))
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.to_csv())


def _horizons(T: int, frame_rate: float, horizons_ms) -> tuple[list[int], list[int]]:
    if horizons_ms is None:
        # defaults are trimmed to the prediction length
        ms = [h for h in HORIZONS_MS if 1 <= horizon_frames(h, frame_rate) <= T]
    else:
        ms = list(horizons_ms)
    frames = [horizon_frames(h, frame_rate) for h in ms]
    return ms, frames


def _report(mode: str, preds: np.ndarray, data: WindowSet, horizons_ms, selected=()) -> EvalReport:
    T = data.target.shape[1]
    ms, frames = _horizons(T, data.frame_rate, horizons_ms)
    n = len(data)
    tgt = data.target.reshape(n, T, -1, 3)
    report = EvalReport(mode, ms, frames, mpjpe(preds, tgt, frames).tolist(), sample_count=n,
                        selected=list(selected))
    for src in sorted(set(data.sources)):
        mask = np.array([s == src for s in data.sources])
        report.per_source[src] = mpjpe(preds[mask], tgt[mask], frames).tolist()
    return report


def evaluate(checkpoint: Checkpoint, data: WindowSet, mode: str = "single", seed: int = 0,
             n_samples: int = 8, criterion: str = "min-action", horizons_ms=None) -> EvalReport:
    """Single rollout per window with ``seed``, or best-of-n selection by ``criterion``."""
    if mode not in MODES:
        raise ContractError(f"unknown evaluation mode {mode!r}; expected one of {', '.join(MODES)}")
    if len(data) == 0:
        raise ContractError("evaluation needs at least one test window")
    T = data.target.shape[1]
    preds, selected = [], []
    for i in range(len(data)):
        obs = data.window(i).observed
        if mode == "single":
            preds.append(generator_rollout(obs, seed, checkpoint.generator, T).prediction.coords)
        else:
            paths = sample_paths(checkpoint.generator, obs, n_samples, seed, T,
                                 critic=checkpoint.critic if criterion == "max-critic" else None)
            k = select_optimal(paths, criterion)
            selected.append(k)
            preds.append(paths[k].prediction.coords)
    label = mode if mode == "single" else f"best-of-{n_samples} ({criterion})"
    return _report(label, np.stack(preds), data, horizons_ms, selected)


def evaluate_baseline(predictor, data: WindowSet, horizons_ms=None) -> EvalReport:
    """Evaluate a deterministic baseline ``predictor(observed, T) -> PoseSequence``."""
    T = data.target.shape[1]
    preds = np.stack([predictor(data.window(i).observed, T).coords for i in range(len(data))])
    return _report(getattr(predictor, "__name__", "baseline"), preds, data, horizons_ms)
