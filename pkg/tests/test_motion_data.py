import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langevin_motion.errors import ConfigError, ContractError, ParseError
from langevin_motion.motion_data import (SYNTH_KINDS, PoseSequence, SkeletonSpec, bone_lengths, downsample,
                                         load_pose_csv, load_skeleton, save_pose_csv, save_skeleton,
                                         select_joints, split_train_test, split_windows, synth_generate)


def _random_seq(rng, frames=12, joints=3):
    return PoseSequence(rng.normal(scale=300.0, size=(frames, joints, 3)), 25.0, "r")


# --- skeleton ------------------------------------------------------------------

@pytest.mark.parametrize("bones", [((0, 3),), ((1, 1),), ((0, 1), (0, 1)), ((-1, 0),)])
def test_skeleton_rejects_bad_bones(bones):
    with pytest.raises(ConfigError):
        SkeletonSpec(("a", "b", "c"), bones)


def test_skeleton_json_round_trip(tmp_path):
    sk = SkeletonSpec(("hip", "knee", "ankle"), ((0, 1), (1, 2)), joint_subset=(0, 2, 5))
    save_skeleton(sk, tmp_path / "s.json")
    assert load_skeleton(tmp_path / "s.json") == sk
    assert SkeletonSpec.chain(5).bone_count == 4


def test_select_joints_uses_subset():
    rng = np.random.default_rng(0)
    seq = _random_seq(rng, joints=6)
    sk = SkeletonSpec(("a", "b"), ((0, 1),), joint_subset=(4, 1))
    out = select_joints(seq, sk)
    assert np.array_equal(out.coords, seq.coords[:, [4, 1]])


# --- pose sequence and CSV ---------------------------------------------------------

def test_pose_sequence_rejects_non_finite_and_bad_shape():
    with pytest.raises(ContractError):
        PoseSequence(np.full((2, 1, 3), np.nan))
    with pytest.raises(ContractError):
        PoseSequence(np.zeros((2, 3)))
    with pytest.raises(ContractError):
        PoseSequence(np.zeros((0, 1, 3)))


def test_csv_two_frames_one_joint(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("frame,joint,x,y,z\n0,0,1,2,3\n1,0,4,5,6\n")
    seq = load_pose_csv(p)
    assert (seq.frame_count, seq.joint_count) == (2, 1)
    assert np.array_equal(seq.coords[1, 0], [4, 5, 6])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6), st.integers(1, 4))
def test_csv_round_trip_is_bit_exact(tmp_path_factory, seed, frames, joints):
    rng = np.random.default_rng(seed)
    seq = PoseSequence(rng.normal(scale=1e3, size=(frames, joints, 3)) * 10.0 ** rng.integers(-8, 8))
    p = tmp_path_factory.mktemp("csv") / "x.csv"
    save_pose_csv(seq, p)
    back = load_pose_csv(p)
    assert back.coords.tobytes() == seq.coords.tobytes()
    # load then save is also an identity on the file text
    text = p.read_text()
    save_pose_csv(back, p)
    assert p.read_text() == text


def _write_rows(path, rows):
    path.write_text("frame,joint,x,y,z\n" + "".join(",".join(map(str, r)) + "\n" for r in rows))


def test_csv_missing_pair_names_frame_and_joint(tmp_path):
    rows = [(f, j, 0.0, 0.0, 0.0) for f in range(8) for j in range(4) if (f, j) != (7, 3)]
    _write_rows(tmp_path / "m.csv", rows)
    with pytest.raises(ParseError, match="frame 7, joint 3"):
        load_pose_csv(tmp_path / "m.csv")


@pytest.mark.parametrize("rows,line", [
    ([(0, 0, 1, 2, 3), (0, 0, 1, 2, 3)], 3),           # duplicate pair
    ([(0, 0, 1, 2, 3), (1, 0, 1, "abc", 3)], 3),       # non-numeric field
    ([(0, 0, 1, 2, 3), (1, 0, 1, 2)], 3),              # short row
    ([(0, "x", 1, 2, 3)], 2),                          # non-integer joint
])
def test_csv_errors_carry_line_numbers(tmp_path, rows, line):
    _write_rows(tmp_path / "bad.csv", rows)
    with pytest.raises(ParseError, match=f"line {line}"):
        load_pose_csv(tmp_path / "bad.csv")


def test_csv_non_contiguous_frames(tmp_path):
    _write_rows(tmp_path / "g.csv", [(0, 0, 1, 2, 3), (2, 0, 1, 2, 3)])
    with pytest.raises(ParseError, match="frame 1"):
        load_pose_csv(tmp_path / "g.csv")


def test_csv_bad_header(tmp_path):
    (tmp_path / "h.csv").write_text("f,j,x,y,z\n")
    with pytest.raises(ParseError, match="line 1"):
        load_pose_csv(tmp_path / "h.csv")


# --- downsampling ------------------------------------------------------------------

def test_downsample_examples():
    rng = np.random.default_rng(1)
    seq = _random_seq(rng, frames=100)
    half = downsample(seq, 2)
    assert half.frame_count == 50 and half.frame_rate == 12.5
    assert downsample(seq, 1).coords.tobytes() == seq.coords.tobytes()
    for k in rng.integers(0, 50, size=10):
        assert np.array_equal(half.coords[k], seq.coords[2 * k])
    with pytest.raises(ContractError):
        downsample(seq, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 60))
def test_downsample_composes(a, b, frames):
    seq = PoseSequence(np.arange(frames * 3, dtype=float).reshape(frames, 1, 3))
    assert np.array_equal(downsample(seq, a * b).coords, downsample(downsample(seq, a), b).coords)


# --- windows -------------------------------------------------------------------------

def test_window_counts_and_short_sequence_warning(caplog):
    rng = np.random.default_rng(2)
    assert len(split_windows(_random_seq(rng, 50), 25, 25, 1)) == 1
    assert len(split_windows(_random_seq(rng, 52), 25, 25, 1)) == 3
    with caplog.at_level(logging.WARNING):
        assert split_windows(_random_seq(rng, 49), 25, 25, 1) == []
    assert "fewer than" in caplog.text


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 40), st.integers(1, 6), st.integers(1, 6), st.integers(1, 4))
def test_windows_match_direct_slicing(frames, K, T, stride):
    coords = np.arange(frames * 3, dtype=float).reshape(frames, 1, 3)
    wins = split_windows(PoseSequence(coords), K, T, stride)
    expected = (frames - K - T) // stride + 1 if frames >= K + T else 0
    assert len(wins) == expected
    for i, w in enumerate(wins):
        s = i * stride
        assert w.start == s
        assert np.array_equal(w.observed.coords, coords[s:s + K])
        assert np.array_equal(w.target.coords, coords[s + K:s + K + T])


def test_train_test_split():
    rng = np.random.default_rng(3)
    tr, te = split_train_test(_random_seq(rng, 100))
    assert (tr.frame_count, te.frame_count) == (80, 20)


# --- bones -------------------------------------------------------------------------

def test_bone_length_examples():
    sk = SkeletonSpec(("a", "b"), ((0, 1),))
    assert bone_lengths(np.array([[0, 0, 0], [3, 4, 0]], dtype=float), sk)[0] == 5.0
    assert bone_lengths(np.zeros((2, 3)), sk)[0] == 0.0


def test_bone_lengths_match_direct_distance():
    rng = np.random.default_rng(4)
    sk = SkeletonSpec(tuple("abcdef"), ((0, 1), (1, 2), (0, 3), (3, 4), (4, 5)))
    frame = rng.normal(scale=200, size=(6, 3))
    got = bone_lengths(frame, sk)
    for k, (p, c) in enumerate(sk.bones):
        d = frame[c] - frame[p]
        assert abs(got[k] - np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2)) <= 1e-12


# --- synthetic data ------------------------------------------------------------------

@pytest.mark.parametrize("kind", SYNTH_KINDS)
def test_synth_is_deterministic(kind):
    sk = SkeletonSpec.chain(5)
    a = synth_generate(kind, sk, 60, seed=9)
    b = synth_generate(kind, sk, 60, seed=9)
    assert a.coords.tobytes() == b.coords.tobytes()
    assert a.coords.shape == (60, 5, 3)


def test_synth_static_limit():
    seq = synth_generate("harmonic", SkeletonSpec.chain(5), 30, seed=1, amplitude=0.0)
    assert np.all(seq.coords == seq.coords[0])


def test_rigid_pendulum_preserves_bone_lengths():
    sk = SkeletonSpec.chain(5)
    seq = synth_generate("rigid-pendulum", sk, 200, seed=5)
    lengths = bone_lengths(seq.coords, sk)
    assert np.max(np.abs(lengths - lengths[0])) < 1e-9


def test_linear_drift_has_constant_velocity():
    seq = synth_generate("linear-drift", SkeletonSpec.chain(5), 40, seed=2)
    d = np.diff(seq.coords, axis=0)
    assert np.allclose(d, d[0], atol=1e-9, rtol=0)
    assert np.all(np.abs(d[0]) > 0)


def test_synth_unknown_kind():
    with pytest.raises(ConfigError):
        synth_generate("spiral", SkeletonSpec.chain(3), 10, 0)
