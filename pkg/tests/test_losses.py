import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langevin_motion import diffcore as dc
from langevin_motion.diffcore import DIFFUSION_FLOOR
from langevin_motion.errors import ConfigError, ContractError, ShapeError, TrainingError
from langevin_motion.losses import (LossWeights, loss_bone, loss_critic, loss_generator_total,
                                    loss_observation, loss_observation_batch, loss_reconstruction)
from langevin_motion.motion_data import PoseSequence, SkeletonSpec, bone_lengths
from langevin_motion.particle_op import ParticleChannels, SdeStepOutputs, increments, project

import gradcheck


def _seq(a):
    return PoseSequence(np.asarray(a, dtype=float))


# --- reconstruction ------------------------------------------------------------------

def test_reconstruction_examples():
    rng = np.random.default_rng(0)
    p = _seq(rng.normal(size=(4, 2, 3)))
    assert loss_reconstruction(p, p) == 0.0
    q = p.coords.copy()
    q[2, 1, 0] += 2.0
    assert loss_reconstruction(_seq(q), p) == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(ShapeError):
        loss_reconstruction(p, _seq(np.zeros((3, 2, 3))))


def test_reconstruction_matches_flat_sum():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.normal(scale=50, size=(2, 6, 3, 3))
        assert abs(loss_reconstruction(_seq(a), _seq(b)) - float(np.sum((a - b).ravel() ** 2))) <= 1e-10 * np.sum(
            (a - b) ** 2)


# --- observation ---------------------------------------------------------------------

def test_observation_examples():
    rng = np.random.default_rng(2)
    vals = rng.normal(scale=20, size=(6, 3))
    ch = ParticleChannels(vals)
    d = increments(ch).deltas
    floor = np.full_like(d, DIFFUSION_FLOOR)
    assert loss_observation(ch, SdeStepOutputs(d, floor, np.zeros_like(d))) <= 1e-10
    static = ParticleChannels(np.full((6, 3), 5.0))
    assert loss_observation(static, SdeStepOutputs(np.zeros_like(d), floor, np.zeros_like(d))) == 0.0


def test_observation_matches_residual_sum():
    rng = np.random.default_rng(3)
    for _ in range(20):
        K, C = rng.integers(2, 9), rng.integers(1, 7)
        vals = rng.normal(scale=10, size=(K, C))
        f, w = rng.normal(size=(2, K - 1, C))
        g = rng.uniform(0.01, 2, size=(K - 1, C))
        got = loss_observation(ParticleChannels(vals), SdeStepOutputs(f, g, w))
        expected = sum((vals[t, i] - vals[t - 1, i] - f[t - 1, i] - g[t - 1, i] * w[t - 1, i]) ** 2
                       for t in range(1, K) for i in range(C))
        assert abs(got - expected) <= 1e-10 * max(1.0, expected)


def test_observation_requires_full_step_range():
    ch = ParticleChannels(np.zeros((5, 2)))
    sde = SdeStepOutputs(np.zeros((3, 2)), np.ones((3, 2)), np.zeros((3, 2)))
    with pytest.raises(ContractError):
        loss_observation(ch, sde)


def test_observation_deterministic_limit_is_drift_regression():
    rng = np.random.default_rng(4)
    vals = rng.normal(size=(7, 4))
    f = rng.normal(size=(6, 4))
    d = np.diff(vals, axis=0)
    got = loss_observation(ParticleChannels(vals), SdeStepOutputs(f, np.full((6, 4), DIFFUSION_FLOOR),
                                                                  np.zeros((6, 4))))
    assert got == pytest.approx(float(np.sum((d - f) ** 2)), rel=1e-12)


def test_observation_expectation_adds_diffusion_energy():
    # Monte Carlo over fresh noise: E[L] = sum (d - f)^2 + sum g^2
    rng = np.random.default_rng(5)
    d = rng.normal(size=(1, 4, 3))
    f = [dc.constant(rng.normal(size=(1, 3))) for _ in range(4)]
    g = [dc.constant(rng.uniform(0.2, 1.0, size=(1, 3))) for _ in range(4)]
    n = 20000
    noise = rng.standard_normal((n, 4, 3))
    dd = np.repeat(d, n, axis=0)
    est = loss_observation_batch(dd, f, g, noise).item()
    exact = sum(float(np.sum((d[0, k] - f[k].value[0]) ** 2) + np.sum(g[k].value ** 2)) for k in range(4))
    assert est == pytest.approx(exact, rel=0.03)


# --- bone ---------------------------------------------------------------------------

ONE_BONE = SkeletonSpec(("a", "b"), ((0, 1),))


def test_bone_examples():
    rng = np.random.default_rng(6)
    p = _seq(rng.normal(size=(3, 2, 3)))
    assert loss_bone(p, p, ONE_BONE) == pytest.approx(0.0, abs=1e-9)
    pred = _seq([[[0, 0, 0], [7, 0, 0]]])
    true = _seq([[[0, 0, 0], [0, 5, 0]]])
    assert loss_bone(pred, true, ONE_BONE) == pytest.approx(2.0, abs=1e-12)


def test_bone_homogeneity_with_zero_length_target():
    # true bones of zero length keep the target fixed while the prediction scales
    rng = np.random.default_rng(7)
    pred = rng.normal(size=(5, 2, 3))
    target = _seq(np.zeros((5, 2, 3)))
    a = loss_bone(_seq(pred), target, ONE_BONE)
    b = loss_bone(_seq(2 * pred), target, ONE_BONE)
    # the sqrt epsilon gives zero-length bones a length of 1e-6
    assert b == pytest.approx(2 * a, abs=3e-6)


def test_bone_matches_direct_formula():
    rng = np.random.default_rng(8)
    sk = SkeletonSpec.chain(4)
    for _ in range(10):
        p, q = rng.normal(scale=100, size=(2, 6, 4, 3))
        expected = float(np.mean(np.abs(bone_lengths(p, sk) - bone_lengths(q, sk))))
        assert loss_bone(_seq(p), _seq(q), sk) == pytest.approx(expected, rel=1e-10)


def test_rigid_prediction_has_zero_bone_loss():
    sk = SkeletonSpec.chain(5)
    from langevin_motion.motion_data import synth_generate
    seq = synth_generate("rigid-pendulum", sk, 30, seed=1)
    assert loss_bone(seq.frames(10, 20), seq.frames(0, 10), sk) < 1e-9


# --- critic and total ------------------------------------------------------------------

def test_critic_loss_examples():
    assert loss_critic([0.3, -1.0], [0.3, -1.0]) == 0.0
    assert loss_critic([1.0], [0.0]) == 1.0
    rng = np.random.default_rng(9)
    r, f = rng.normal(size=7), rng.normal(size=5)
    assert loss_critic(r, f) == np.mean(r) - np.mean(f)
    with pytest.raises(ContractError):
        loss_critic([], [1.0])


def test_total_examples():
    w = LossWeights()
    zero = dict(rec=0.0, obs=0.0, bone=0.0, adv=0.0)
    assert loss_generator_total(zero, w) == 0.0
    parts = dict(rec=3.5, obs=2.0, bone=1.0, adv=0.7)
    assert loss_generator_total(parts, LossWeights(1, 0, 0, 0)) == 3.5
    rng = np.random.default_rng(10)
    for _ in range(20):
        vals = rng.normal(size=4)
        lam = rng.uniform(0, 2, size=4)
        parts = dict(zip(("rec", "obs", "bone", "adv"), vals))
        got = loss_generator_total(parts, LossWeights(*lam))
        assert got == pytest.approx(lam[0] * vals[0] + lam[1] * vals[1] + lam[2] * vals[2] - lam[3] * vals[3],
                                    abs=1e-14)


def test_total_names_non_finite_part():
    with pytest.raises(TrainingError, match="'bone'") as exc:
        loss_generator_total(dict(rec=1.0, obs=1.0, bone=np.nan, adv=0.0), LossWeights(), step=12)
    assert exc.value.component == "bone" and exc.value.step == 12


@pytest.mark.parametrize("bad", [dict(rec=-1.0), dict(adv=np.inf)])
def test_weights_validation(bad):
    with pytest.raises(ConfigError):
        LossWeights(**bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_losses_are_non_negative(seed):
    rng = np.random.default_rng(seed)
    p, q = rng.normal(scale=10, size=(2, 3, 2, 3))
    assert loss_reconstruction(_seq(p), _seq(q)) >= 0
    assert loss_bone(_seq(p), _seq(q), ONE_BONE) >= 0
    vals = rng.normal(size=(4, 6))
    sde = SdeStepOutputs(rng.normal(size=(3, 6)), rng.uniform(0.1, 1, size=(3, 6)), rng.normal(size=(3, 6)))
    assert loss_observation(ParticleChannels(vals), sde) >= 0


# --- gradients -------------------------------------------------------------------------

def test_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    sk = SkeletonSpec.chain(3)
    B, T, C = 2, 3, 9
    pred = rng.normal(size=(B, T * C))
    target = rng.normal(size=(B, T * C))
    deltas = rng.normal(size=(B, 3, C))
    f = rng.normal(size=(3, B, C))
    g = rng.uniform(0.2, 1.0, size=(3, B, C))
    w = rng.normal(size=(B, 3, C))

    def total(tp, tf, tg):
        parts = dict(rec=loss_reconstruction(tp, target),
                     obs=loss_observation_batch(deltas, [tf[k] for k in range(3)], [tg[k] for k in range(3)], w),
                     bone=loss_bone(tp, target, sk),
                     adv=loss_critic(dc.sum(tp, axis=-1), np.zeros(B)))
        return loss_generator_total(parts, LossWeights(1.0, 0.5, 2.0, 0.3))

    tp = dc.parameter(pred, "pred")
    tf = [dc.parameter(f[k], f"f{k}") for k in range(3)]
    tg = [dc.parameter(g[k], f"g{k}") for k in range(3)]
    with dc.Graph() as gr:
        grads = gr.backward(total(tp, tf, tg))
    fn = lambda: total(dc.constant(pred), [dc.constant(x) for x in f], [dc.constant(x) for x in g]).item()  # noqa
    assert gradcheck.check(fn, pred, grads["pred"]) < 1e-4
    for k in range(3):
        # f and g rows are views into the stacked arrays, so perturbing them is seen by fn
        assert gradcheck.check(fn, f[k], grads[f"f{k}"]) < 1e-4
        assert gradcheck.check(fn, g[k], grads[f"g{k}"]) < 1e-4
