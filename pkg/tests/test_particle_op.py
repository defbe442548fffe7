import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from langevin_motion.diffcore import DIFFUSION_FLOOR
from langevin_motion.errors import ContractError, ShapeError
from langevin_motion.motion_data import PoseSequence, SkeletonSpec
from langevin_motion.particle_op import (Increments, ParticleChannels, SdeStepOutputs, increments, integrate,
                                         langevin_residual, project, unproject)

coords = hnp.arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 4), st.just(3)),
                    elements=st.floats(-1e4, 1e4, allow_nan=False))


def test_project_reindexes_channels():
    seq = PoseSequence(np.array([[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]]))
    assert np.array_equal(project(seq).values[0], [1, 2, 3, 4, 5, 6])


@settings(max_examples=60, deadline=None)
@given(coords)
def test_project_unproject_bit_exact(c):
    seq = PoseSequence(c)
    ch = project(seq)
    assert unproject(ch).coords.tobytes() == seq.coords.tobytes()
    F, N, _ = c.shape
    rng = np.random.default_rng(0)
    for _ in range(5):
        f, i, a = rng.integers(F), rng.integers(N), rng.integers(3)
        assert ch.values[f, 3 * i + a] == c[f, i, a]


def test_increments_examples():
    ch = ParticleChannels(np.array([[1.0], [1.5], [1.5], [1.0]]))
    assert np.array_equal(increments(ch).deltas[:, 0], [0.5, 0.0, -0.5])
    const = ParticleChannels(np.full((5, 3), 7.0))
    assert np.all(increments(const).deltas == 0)
    with pytest.raises(ContractError):
        increments(ParticleChannels(np.zeros((1, 3))))


def test_integrate_examples():
    out = integrate(np.array([1.0, 0.0, 0.0]), np.array([[0.5, 0.0, 0.0]]))
    assert out.coords[0, 0, 0] == 1.5
    last = np.arange(6.0)
    frozen = integrate(last, np.zeros((4, 6)))
    assert np.all(frozen.coords == last.reshape(2, 3))
    with pytest.raises(ShapeError):
        integrate(last, np.zeros((4, 5)))
    with pytest.raises(ShapeError):
        integrate(last, np.zeros((4, 6)), skeleton=SkeletonSpec.chain(3))


def test_prefix_sum_round_trip():
    rng = np.random.default_rng(1)
    vals = rng.normal(scale=100, size=(30, 9))
    d = increments(ParticleChannels(vals)).deltas
    rebuilt = vals[0] + np.cumsum(d, axis=0)
    assert np.max(np.abs(rebuilt - vals[1:])) <= 1e-12 * np.max(np.abs(vals)) * 30


def test_integrate_recovers_future_frames():
    rng = np.random.default_rng(2)
    seq = PoseSequence(rng.normal(scale=500, size=(50, 5, 3)))
    K = 25
    d = increments(project(seq)).deltas[K - 1:]
    out = integrate(seq.coords[K - 1], d, SkeletonSpec.chain(5))
    assert np.max(np.abs(out.coords - seq.coords[K:])) <= 1e-9


# --- residual ------------------------------------------------------------------------

def _sde(drift, diffusion, noise=None, start=2):
    return SdeStepOutputs(np.asarray(drift, float), np.asarray(diffusion, float),
                          None if noise is None else np.asarray(noise, float), start)


def test_residual_cancels_with_exact_drift():
    vals = np.array([[0.0, 1.0], [0.5, 3.0], [2.0, 2.0]])
    ch = ParticleChannels(vals)
    sde = _sde(np.diff(vals, axis=0), np.full((2, 2), DIFFUSION_FLOOR), np.zeros((2, 2)))
    for t in (2, 3):
        assert np.all(np.abs(langevin_residual(ch, t, sde)) <= 1e-12)
    const = ParticleChannels(np.full((3, 2), 4.0))
    assert np.all(langevin_residual(const, 3, _sde(np.zeros((2, 2)), np.full((2, 2), DIFFUSION_FLOOR),
                                                   np.zeros((2, 2)))) == 0)


def test_residual_matches_four_term_recomputation():
    rng = np.random.default_rng(3)
    for _ in range(50):
        F, C = rng.integers(2, 8), rng.integers(1, 7)
        vals = rng.normal(size=(F, C)) * 50
        f = rng.normal(size=(F - 1, C))
        g = rng.uniform(1e-6, 3, size=(F - 1, C))
        w = rng.normal(size=(F - 1, C))
        ch, sde = ParticleChannels(vals), _sde(f, g, w)
        t = int(rng.integers(2, F + 1))
        expected = np.array([vals[t - 1, i] - vals[t - 2, i] - f[t - 2, i] - g[t - 2, i] * w[t - 2, i]
                             for i in range(C)])
        assert np.max(np.abs(langevin_residual(ch, t, sde) - expected)) <= 1e-12


def test_residual_is_linear_in_drift():
    rng = np.random.default_rng(4)
    vals = rng.normal(size=(5, 3))
    f, g, w = rng.normal(size=(4, 3)), rng.uniform(0.1, 1, size=(4, 3)), rng.normal(size=(4, 3))
    delta = rng.normal(size=(4, 3))
    ch = ParticleChannels(vals)
    r0 = langevin_residual(ch, 4, _sde(f, g, w))
    r1 = langevin_residual(ch, 4, _sde(f + delta, g, w))
    assert np.allclose(r1, r0 - delta[2], atol=1e-12)


def test_residual_misaligned_step_raises():
    ch = ParticleChannels(np.zeros((5, 2)))
    sde = _sde(np.zeros((2, 2)), np.ones((2, 2)), np.zeros((2, 2)), start=4)
    with pytest.raises(ContractError):
        langevin_residual(ch, 3, sde)
    with pytest.raises(ContractError):
        langevin_residual(ch, 1, sde)


def test_sde_outputs_enforce_floor_and_shapes():
    with pytest.raises(ContractError):
        _sde(np.zeros((1, 2)), np.full((1, 2), 1e-7))
    with pytest.raises(ShapeError):
        _sde(np.zeros((1, 2)), np.ones((2, 2)))
    assert Increments(np.zeros((3, 6))).step_count == 3
