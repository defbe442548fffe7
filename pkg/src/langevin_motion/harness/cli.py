"""Command-line interface.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from ..errors import MotionError
from ..motion_data import (SYNTH_KINDS, PoseSequence, SkeletonSpec, downsample, load_pose_csv, load_skeleton,
                           save_pose_csv, save_skeleton, select_joints, synth_generate)
from ..networks import generator_rollout
from ..pathint import CRITERIA, sample_paths, score_path
from .checkpoint import Checkpoint
from .config import TrainConfig, WindowSet
from .evaluation import MODES, evaluate
from .svg import write_trajectory_svg
from .training import METRIC_FIELDS, train

log = logging.getLogger("langevin_motion")


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _common(p: argparse.ArgumentParser, out_required: bool = True) -> None:
    p.add_argument("--seed", type=_u64, default=None, help="random seed (u64)")
    p.add_argument("--config", help="JSON file mirroring TrainConfig; flags override it")
    p.add_argument("--out", required=out_required, help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="langevin-motion",
                                     description="Stochastic motion prediction with learned Langevin dynamics.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic pose sequence CSV")
    _common(p)
    p.add_argument("--kind", required=True, choices=SYNTH_KINDS)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--joints", type=int, default=5, help="chain skeleton size when --skeleton is absent")
    p.add_argument("--skeleton", help="skeleton JSON")
    p.add_argument("--skeleton-out", help="also write the skeleton JSON here")
    p.add_argument("--frame-rate", type=float, default=25.0)
    p.add_argument("--amplitude", type=float, default=40.0)
    p.add_argument("--velocity", type=float, default=2.0)

    p = sub.add_parser("train", help="train a generator/critic pair")
    _common(p)
    p.add_argument("--data", action="append", default=[], help="training pose CSV (repeatable)")
    p.add_argument("--skeleton", help="skeleton JSON (default: chain over the data's joints)")
    p.add_argument("--steps", type=int, dest="total_steps")
    p.add_argument("--K", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--critic-steps", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--clip", type=float)
    p.add_argument("--stride", type=int)
    p.add_argument("--downsample", type=int, default=1, help="keep every n-th frame of the data")
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--checkpoint-dir", help="directory for periodic checkpoints")
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--metrics", help="write per-step losses as CSV")

    p = sub.add_parser("predict", help="predict one future from an observed sequence")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="observed pose CSV (last K frames are used)")
    p.add_argument("--T", type=int, help="prediction length (default: training T)")
    p.add_argument("--plot", help="write a per-channel trajectory SVG")

    p = sub.add_parser("sample", help="draw several stochastic futures and score them")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--T", type=int)
    p.add_argument("--scores", help="score table path (default: <out stem>_scores.csv)")

    p = sub.add_parser("score-path", help="score a given future under the model")
    _common(p, out_required=False)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True, help="observed pose CSV")
    p.add_argument("--future", required=True, help="candidate future pose CSV")

    p = sub.add_parser("eval", help="MPJPE report over test windows")
    _common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", action="append", required=True, help="test pose CSV (repeatable)")
    p.add_argument("--mode", choices=MODES, default="single")
    p.add_argument("--n", type=int, default=8, help="samples per window for best-of-n")
    p.add_argument("--criterion", choices=CRITERIA, default="min-action")
    p.add_argument("--stride", type=int, default=1)
    return parser


def _observed(path: str, ckpt: Checkpoint) -> PoseSequence:
    seq = select_joints(load_pose_csv(path), ckpt.skeleton)
    K = ckpt.config.K
    if seq.frame_count < 2:
        raise MotionError(f"{path}: need at least 2 observed frames")
    return seq.frames(max(0, seq.frame_count - K), seq.frame_count)


def _seed(args, default: int = 0) -> int:
    return default if args.seed is None else args.seed


def cmd_synth(args) -> None:
    skeleton = load_skeleton(args.skeleton) if args.skeleton else SkeletonSpec.chain(args.joints)
    seq = synth_generate(args.kind, skeleton, args.frames, _seed(args), args.frame_rate,
                         args.amplitude, args.velocity)
    save_pose_csv(seq, args.out)
    if args.skeleton_out:
        save_skeleton(skeleton, args.skeleton_out)


def cmd_train(args) -> None:
    config = TrainConfig.load(args.config) if args.config else TrainConfig()
    config = config.override(total_steps=args.total_steps, K=args.K, T=args.T, hidden=args.hidden,
                             batch_size=args.batch_size, critic_steps=args.critic_steps, lr=args.lr,
                             clip=args.clip, stride=args.stride, seed=args.seed,
                             checkpoint_every=args.checkpoint_every,
                             train_paths=tuple(args.data) if args.data else None,
                             skeleton_path=args.skeleton)
    if not config.train_paths:
        raise MotionError("no training data: pass --data or set train_paths in --config")
    seqs = [downsample(load_pose_csv(p), args.downsample) for p in config.train_paths]
    if config.skeleton_path:
        skeleton = load_skeleton(config.skeleton_path)
    else:
        skeleton = SkeletonSpec.chain(seqs[0].joint_count)
    seqs = [select_joints(s, skeleton) for s in seqs]
    data = WindowSet.from_sequences(seqs, config.K, config.T, config.stride)
    resume = Checkpoint.load(args.resume) if args.resume else None
    ckpt, metrics = train(config, data, skeleton, resume=resume, checkpoint_dir=args.checkpoint_dir)
    ckpt.save(args.out)
    if args.metrics:
        with open(args.metrics, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=METRIC_FIELDS, lineterminator="\n")
            w.writeheader()
            w.writerows(metrics)


def cmd_predict(args) -> None:
    ckpt = Checkpoint.load(args.checkpoint)
    obs = _observed(args.input, ckpt)
    T = args.T or ckpt.config.T
    ro = generator_rollout(obs, _seed(args), ckpt.generator, T)
    save_pose_csv(ro.prediction, args.out)
    if args.plot:
        write_trajectory_svg(obs.coords.reshape(obs.frame_count, -1),
                             ro.prediction.coords.reshape(T, -1), args.plot)


def cmd_sample(args) -> None:
    ckpt = Checkpoint.load(args.checkpoint)
    obs = _observed(args.input, ckpt)
    T = args.T or ckpt.config.T
    paths = sample_paths(ckpt.generator, obs, args.n, _seed(args), T, critic=ckpt.critic)
    out = Path(args.out)
    stem, suffix = out.with_suffix(""), out.suffix or ".csv"
    for i, cand in enumerate(paths):
        save_pose_csv(cand.prediction, f"{stem}_s{i}{suffix}")
    scores = Path(args.scores) if args.scores else Path(f"{stem}_scores.csv")
    with open(scores, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("sample_index", "seed", "action", "critic_score"))
        for i, cand in enumerate(paths):
            w.writerow((i, cand.seed, repr(cand.action), repr(cand.critic_score)))


def cmd_score_path(args) -> None:
    ckpt = Checkpoint.load(args.checkpoint)
    obs = _observed(args.input, ckpt)
    future = select_joints(load_pose_csv(args.future), ckpt.skeleton)
    cand = score_path(ckpt.generator, obs, future, _seed(args), critic=ckpt.critic)
    text = f"seed,action,critic_score\n{cand.seed},{cand.action!r},{cand.critic_score!r}\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_eval(args) -> None:
    ckpt = Checkpoint.load(args.checkpoint)
    seqs = [select_joints(load_pose_csv(p), ckpt.skeleton) for p in args.data]
    data = WindowSet.from_sequences(seqs, ckpt.config.K, ckpt.config.T, args.stride)
    report = evaluate(ckpt, data, mode=args.mode, seed=_seed(args), n_samples=args.n, criterion=args.criterion)
    report.save(args.out)


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "predict": cmd_predict, "sample": cmd_sample,
            "score-path": cmd_score_path, "eval": cmd_eval}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (MotionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
