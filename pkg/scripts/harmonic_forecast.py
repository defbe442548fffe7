"""Train on a synthetic harmonic sequence and compare MPJPE with the two baselines.

    python3 scripts/harmonic_forecast.py --frames 5000 --steps 1500 --hidden 128
"""
import argparse
import time

from langevin_motion.harness import TrainConfig, WindowSet, evaluate, evaluate_baseline, train
from langevin_motion.harness.evaluation import constant_velocity, zero_velocity
from langevin_motion.motion_data import SkeletonSpec, split_train_test, synth_generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=5000)
    ap.add_argument("--steps", type=int, default=1500)
    ap.add_argument("--hidden", type=int, default=128)
    ap.add_argument("--joints", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--best-of", type=int, default=0, help="also report best-of-n by minimum action")
    args = ap.parse_args()

    sk = SkeletonSpec.chain(args.joints)
    train_seq, test_seq = split_train_test(synth_generate("harmonic", sk, args.frames, seed=7), 0.8)
    train_set = WindowSet.from_sequences([train_seq], 25, 25)
    test_set = WindowSet.from_sequences([test_seq], 25, 25, stride=5)

    t0 = time.time()
    ckpt, metrics = train(TrainConfig(hidden=args.hidden, total_steps=args.steps, seed=args.seed), train_set, sk)
    print(f"trained {args.steps} steps in {time.time() - t0:.0f}s, final losses {metrics[-1]}")

    reports = {"model": evaluate(ckpt, test_set),
               "zero-velocity": evaluate_baseline(zero_velocity, test_set),
               "constant-velocity": evaluate_baseline(constant_velocity, test_set)}
    if args.best_of:
        reports[f"best-of-{args.best_of}"] = evaluate(ckpt, test_set, mode="best-of-n", n_samples=args.best_of)
    horizons = reports["model"].horizons_ms
    print(f"{'':>20}" + "".join(f"{h:>9}ms" for h in horizons))
    for name, rep in reports.items():
        print(f"{name:>20}" + "".join(f"{v:>11.2f}" for v in rep.mpjpe_mm))


if __name__ == "__main__":
    main()
