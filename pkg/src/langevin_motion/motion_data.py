"""Skeletons, pose sequences, CSV/JSON I/O, preprocessing and synthetic motion."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, ParseError

log = logging.getLogger(__name__)

CSV_HEADER = ("frame", "joint", "x", "y", "z")
SYNTH_KINDS = ("harmonic", "lissajous", "linear-drift", "rigid-pendulum")
RIGID_KINDS = ("rigid-pendulum",)


@dataclass(frozen=True)
class SkeletonSpec:
    joint_names: tuple[str, ...]
    bones: tuple[tuple[int, int], ...]
    # Optional subset of source joint indices kept by ``select_joints``; this is
    # where duplicate joints of a capture format get dropped.
    joint_subset: tuple[int, ...] | None = None

    def __post_init__(self):
        n = len(self.joint_names)
        if n == 0:
            raise ConfigError("skeleton needs at least one joint")
        seen = set()
        for parent, child in self.bones:
            if not (0 <= parent < n and 0 <= child < n):
                raise ConfigError(f"bone ({parent}, {child}) references a joint outside [0, {n})")
            if parent == child:
                raise ConfigError(f"bone ({parent}, {child}) connects a joint to itself")
            if (parent, child) in seen:
                raise ConfigError(f"duplicate bone ({parent}, {child})")
            seen.add((parent, child))

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    @property
    def bone_count(self) -> int:
        return len(self.bones)

    @classmethod
    def chain(cls, n_joints: int = 5) -> "SkeletonSpec":
        """Default desk skeleton: ``n_joints`` joints linked in a single chain."""
        return cls(tuple(f"j{i}" for i in range(n_joints)),
                   tuple((i, i + 1) for i in range(n_joints - 1)))

    def to_json(self) -> dict:
        out = {"joints": list(self.joint_names), "bones": [list(b) for b in self.bones]}
        if self.joint_subset is not None:
            out["subset"] = list(self.joint_subset)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SkeletonSpec":
        try:
            joints = tuple(str(j) for j in obj["joints"])
            bones = tuple((int(p), int(c)) for p, c in obj["bones"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed skeleton description: {exc}") from None
        subset = obj.get("subset")
        return cls(joints, bones, tuple(int(i) for i in subset) if subset is not None else None)


def load_skeleton(path) -> SkeletonSpec:
    with open(path) as fh:
        return SkeletonSpec.from_json(json.load(fh))


def save_skeleton(skeleton: SkeletonSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(skeleton.to_json(), fh, indent=2)


@dataclass(frozen=True)
class PoseSequence:
    """``coords`` has shape (frames, joints, 3), millimetres."""

    coords: np.ndarray
    frame_rate: float = 25.0
    name: str = ""

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if c.ndim != 3 or c.shape[2] != 3:
            raise ContractError(f"pose coordinates must have shape (F, N, 3), got {c.shape}")
        if c.shape[0] < 1:
            raise ContractError("pose sequence needs at least one frame")
        if not np.all(np.isfinite(c)):
            raise ContractError("pose sequence contains non-finite coordinates")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def frame_count(self) -> int:
        return self.coords.shape[0]

    @property
    def joint_count(self) -> int:
        return self.coords.shape[1]

    def frames(self, start: int, stop: int) -> "PoseSequence":
        return PoseSequence(self.coords[start:stop], self.frame_rate, self.name)


@dataclass(frozen=True)
class SampleWindow:
    observed: PoseSequence
    target: PoseSequence
    source: str
    start: int


def select_joints(seq: PoseSequence, skeleton: SkeletonSpec) -> PoseSequence:
    """Keep only ``skeleton.joint_subset`` joints (identity when no subset is set)."""
    if skeleton.joint_subset is None:
        return seq
    return PoseSequence(seq.coords[:, list(skeleton.joint_subset)], seq.frame_rate, seq.name)


# ---------------------------------------------------------------------------
# CSV

def save_pose_csv(seq: PoseSequence, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for f in range(seq.frame_count):
            for j in range(seq.joint_count):
                x, y, z = seq.coords[f, j]
                w.writerow((f, j, repr(float(x)), repr(float(y)), repr(float(z))))


def load_pose_csv(path, frame_rate: float = 25.0) -> PoseSequence:
    path = Path(path)
    rows: dict[tuple[int, int], tuple[float, float, float]] = {}
    line_of: dict[tuple[int, int], int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"expected header {','.join(CSV_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise ParseError(f"expected 5 fields, got {len(row)}", line=lineno)
            try:
                frame, joint = int(row[0]), int(row[1])
            except ValueError:
                raise ParseError(f"frame/joint must be integers: {row[0]!r}, {row[1]!r}", line=lineno) from None
            if frame < 0 or joint < 0:
                raise ParseError("frame/joint must be non-negative", line=lineno)
            try:
                xyz = (float(row[2]), float(row[3]), float(row[4]))
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {row[2:]}", line=lineno) from None
            if not all(math.isfinite(v) for v in xyz):
                raise ParseError("non-finite coordinate", line=lineno)
            key = (frame, joint)
            if key in rows:
                raise ParseError(f"duplicate entry for frame {frame}, joint {joint} "
                                 f"(first seen on line {line_of[key]})", line=lineno)
            rows[key] = xyz
            line_of[key] = lineno
    if not rows:
        raise ParseError("no pose rows", line=2)
    frames = sorted({f for f, _ in rows})
    joints = sorted({j for _, j in rows})
    if frames != list(range(len(frames))):
        gap = next(i for i, f in enumerate(frames) if f != i)
        raise ParseError(f"frames are not contiguous from 0: frame {gap} missing")
    n_joints = joints[-1] + 1
    coords = np.empty((len(frames), n_joints, 3))
    for f in frames:
        for j in range(n_joints):
            xyz = rows.get((f, j))
            if xyz is None:
                raise ParseError(f"missing entry for frame {f}, joint {j}")
            coords[f, j] = xyz
    return PoseSequence(coords, frame_rate, path.stem)


# ---------------------------------------------------------------------------
# preprocessing

def downsample(seq: PoseSequence, factor: int) -> PoseSequence:
    if factor < 1:
        raise ContractError(f"downsample factor must be >= 1, got {factor}")
    return PoseSequence(seq.coords[::factor], seq.frame_rate / factor, seq.name)


def split_windows(seq: PoseSequence, K: int = 25, T: int = 25, stride: int = 1) -> list[SampleWindow]:
    if K < 1 or T < 1 or stride < 1:
        raise ContractError(f"window lengths and stride must be positive (K={K}, T={T}, stride={stride})")
    F = seq.frame_count
    if F < K + T:
        log.warning("sequence %r has %d frames, fewer than K+T=%d; no windows", seq.name, F, K + T)
        return []
    out = []
    for start in range(0, F - K - T + 1, stride):
        out.append(SampleWindow(seq.frames(start, start + K),
                                seq.frames(start + K, start + K + T), seq.name, start))
    return out


def split_train_test(seq: PoseSequence, train_fraction: float = 0.8) -> tuple[PoseSequence, PoseSequence]:
    """Split a sequence in time: the first ``train_fraction`` of frames trains."""
    cut = int(round(seq.frame_count * train_fraction))
    if not 0 < cut < seq.frame_count:
        raise ContractError(f"split leaves an empty part ({seq.frame_count} frames, fraction {train_fraction})")
    return (PoseSequence(seq.coords[:cut], seq.frame_rate, seq.name),
            PoseSequence(seq.coords[cut:], seq.frame_rate, seq.name))


def bone_lengths(frame: np.ndarray, skeleton: SkeletonSpec) -> np.ndarray:
    """Euclidean bone lengths of one (N, 3) frame, or of every frame of an (F, N, 3) block."""
    frame = np.asarray(frame, dtype=np.float64)
    parents = [p for p, _ in skeleton.bones]
    children = [c for _, c in skeleton.bones]
    diff = frame[..., children, :] - frame[..., parents, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


# ---------------------------------------------------------------------------
# synthetic motion

def _rest_layout(skeleton: SkeletonSpec, rng: np.random.Generator):
    """Random bone lengths/directions and a topological bone order from the roots."""
    n = skeleton.joint_count
    children = {c for _, c in skeleton.bones}
    parent_of = {}
    for p, c in skeleton.bones:
        if c in parent_of:
            raise ConfigError(f"joint {c} has more than one parent; synthetic kinds need a forest")
        parent_of[c] = p
    order = []
    placed = {j for j in range(n) if j not in children}
    pending = list(skeleton.bones)
    while pending:
        progress = [b for b in pending if b[0] in placed]
        if not progress:
            raise ConfigError("skeleton bones contain a cycle")
        for b in progress:
            order.append(b)
            placed.add(b[1])
            pending.remove(b)
    lengths = rng.uniform(80.0, 200.0, size=len(order))
    dirs = rng.normal(size=(len(order), 3))
    dirs[:, 2] -= 2.0  # hang mostly downward
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return order, lengths, dirs


def _place(order, offsets: np.ndarray, n: int, frames: int) -> np.ndarray:
    """Chain bone offsets (frames, bones, 3) from the roots into joint positions."""
    pos = np.zeros((frames, n, 3))
    for k, (p, c) in enumerate(order):
        pos[:, c] = pos[:, p] + offsets[:, k]
    return pos


def synth_generate(kind: str, skeleton: SkeletonSpec, frames: int, seed: int,
                   frame_rate: float = 25.0, amplitude: float = 40.0,
                   velocity: float = 2.0) -> PoseSequence:
    """Deterministic synthetic motion.

    * ``harmonic``: each joint coordinate oscillates sinusoidally around a rest pose
      built from fixed bone offsets (frequencies 0.3-1.2 Hz).
    * ``lissajous``: joints trace Lissajous figures with small integer frequency ratios.
    * ``linear-drift``: every coordinate moves at its own constant velocity
      (magnitude in [velocity/4, velocity] mm/frame, random sign).
    * ``rigid-pendulum``: every bone swings like a pendulum with constant length.
    """
    if kind not in SYNTH_KINDS:
        raise ConfigError(f"unknown synthetic kind {kind!r}; expected one of {', '.join(SYNTH_KINDS)}")
    if frames < 2:
        raise ContractError(f"synthetic sequences need at least 2 frames, got {frames}")
    rng = np.random.default_rng(seed)
    n = skeleton.joint_count
    order, lengths, dirs = _rest_layout(skeleton, rng)
    rest = _place(order, (lengths[:, None] * dirs)[None], n, 1)[0]
    t = np.arange(frames, dtype=np.float64)[:, None, None]

    if kind == "harmonic":
        hz = rng.uniform(0.3, 1.2, size=(1, n, 3))
        phase = rng.uniform(0, 2 * np.pi, size=(1, n, 3))
        amp = amplitude * rng.uniform(0.5, 1.0, size=(1, n, 3))
        coords = rest[None] + amp * np.sin(2 * np.pi * hz * t / frame_rate + phase)
    elif kind == "lissajous":
        base_hz = rng.uniform(0.3, 0.6)
        ratios = rng.integers(1, 4, size=(1, n, 3))
        phase = rng.uniform(0, 2 * np.pi, size=(1, n, 3))
        coords = rest[None] + amplitude * np.sin(2 * np.pi * base_hz * ratios * t / frame_rate + phase)
    elif kind == "linear-drift":
        mag = rng.uniform(velocity / 4, velocity, size=(1, n, 3))
        sign = rng.choice([-1.0, 1.0], size=(1, n, 3))
        coords = rest[None] + mag * sign * t
    else:  # rigid-pendulum
        nb = len(order)
        hz = rng.uniform(0.3, 0.9, size=nb)
        phase = rng.uniform(0, 2 * np.pi, size=nb)
        swing = np.deg2rad(rng.uniform(15.0, 40.0, size=nb))
        axes = np.cross(dirs, rng.normal(size=(nb, 3)))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        theta = swing[None] * np.sin(2 * np.pi * hz[None] * t[:, :, 0] / frame_rate + phase[None])
        # Rodrigues rotation of each rest direction about its own axis (axis is orthogonal)
        cos, sin = np.cos(theta)[..., None], np.sin(theta)[..., None]
        rotated = dirs[None] * cos + np.cross(axes, dirs)[None] * sin
        coords = _place(order, lengths[None, :, None] * rotated, n, frames)
    return PoseSequence(coords, frame_rate, f"{kind}-{seed}")
