"""Long adversarial run that checks critic weight clipping and loss finiteness at every step."""
import argparse
import math
import time

import numpy as np

from langevin_motion.harness import TrainConfig, WindowSet, train
from langevin_motion.motion_data import SkeletonSpec, synth_generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=20000)
    ap.add_argument("--hidden", type=int, default=32)
    ap.add_argument("--report-every", type=int, default=2000)
    args = ap.parse_args()

    sk = SkeletonSpec.chain(5)
    data = WindowSet.from_sequences([synth_generate("lissajous", sk, 600, seed=5)], 10, 10)
    cfg = TrainConfig(K=10, T=10, hidden=args.hidden, input_dim=16, noise_dim=4, critic_width=64, batch_size=8,
                      total_steps=args.steps)
    worst = [0.0]

    def on_critic(step, j, critic):
        worst[0] = max(worst[0], max(float(np.max(np.abs(a))) for a in critic.arrays.values()))
        if worst[0] > cfg.clip:
            raise AssertionError(f"critic weight {worst[0]} above clip at step {step}")

    t0 = time.time()

    def on_step(m):
        step = m["step"]
        if not all(math.isfinite(v) for v in m.values()):
            raise AssertionError(f"non-finite metrics at step {step}: {m}")
        if step % args.report_every == 0:
            print(f"step {step:>6}  {time.time() - t0:6.0f}s  max|w_critic| {worst[0]:.4g}  "
                  + "  ".join(f"{k} {m[k]:.4g}" for k in ("rec", "obs", "bone", "adv", "critic")), flush=True)

    train(cfg, data, sk, on_step=on_step, on_critic_step=on_critic)
    print(f"done: {args.steps} generator steps, clip bound {cfg.clip} held throughout")


if __name__ == "__main__":
    main()
