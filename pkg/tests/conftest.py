import numpy as np
import pytest

from langevin_motion.harness.config import TrainConfig, WindowSet
from langevin_motion.harness.training import train
from langevin_motion.motion_data import SkeletonSpec, synth_generate

TINY = dict(K=5, T=5, hidden=8, input_dim=6, noise_dim=3, critic_width=8, batch_size=4)


@pytest.fixture(scope="session")
def tiny():
    """Small skeleton, sequence, window set and a briefly trained checkpoint."""
    sk = SkeletonSpec.chain(3)
    seq = synth_generate("harmonic", sk, 80, seed=3)
    data = WindowSet.from_sequences([seq], TINY["K"], TINY["T"])
    cfg = TrainConfig(**TINY, total_steps=15, seed=4)
    ckpt, metrics = train(cfg, data, sk)
    return dict(skeleton=sk, seq=seq, data=data, config=cfg, ckpt=ckpt, metrics=metrics)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
