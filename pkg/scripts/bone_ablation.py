"""Compare bone-length drift of forecasts trained with and without the bone loss."""
import argparse

import numpy as np

from langevin_motion.harness import TrainConfig, WindowSet, train
from langevin_motion.motion_data import SkeletonSpec, bone_lengths, split_train_test, synth_generate
from langevin_motion.networks import generator_rollout


def relative_deviation(ckpt, test, sk, rest):
    dev = [np.abs(bone_lengths(generator_rollout(test.window(i).observed, 0, ckpt.generator, 25).prediction.coords,
                               sk) - rest) / rest for i in range(len(test))]
    return np.mean(dev, axis=(0, 2))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=3000)
    ap.add_argument("--steps", type=int, default=600)
    ap.add_argument("--hidden", type=int, default=64)
    ap.add_argument("--weights", type=float, nargs="+", default=[0.0, 0.1, 1.0])
    args = ap.parse_args()

    sk = SkeletonSpec.chain(5)
    seq = synth_generate("rigid-pendulum", sk, args.frames, seed=21)
    rest = bone_lengths(seq.coords[0], sk)
    train_seq, test_seq = split_train_test(seq, 0.8)
    train_set = WindowSet.from_sequences([train_seq], 25, 25)
    test_set = WindowSet.from_sequences([test_seq], 25, 25, stride=5)
    frames = [2, 4, 8, 10, 25]
    print(f"{'bone weight':>12}" + "".join(f"{f:>9}" for f in frames) + f"{'mean':>9}")
    for w in args.weights:
        ckpt, _ = train(TrainConfig(hidden=args.hidden, total_steps=args.steps, weights=dict(bone=w)), train_set, sk)
        dev = relative_deviation(ckpt, test_set, sk, rest)
        print(f"{w:>12g}" + "".join(f"{100 * dev[f - 1]:>8.2f}%" for f in frames) + f"{100 * dev.mean():>8.2f}%")


if __name__ == "__main__":
    main()
