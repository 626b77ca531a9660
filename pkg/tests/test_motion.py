import numpy as np
import pytest

from gomkit import (
    MotionDataError,
    MovementDataset,
    PostureSequence,
    load_motion_csv,
    save_motion_csv,
)


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def _csv_for(topo, frames, fps="90"):
    lines = [f"# fps={fps}", ",".join(topo.channel_names)]
    lines += [",".join(str(v) for v in row) for row in frames]
    return "\n".join(lines) + "\n"


def test_load_well_formed(tmp_path, pair_topology):
    frames = np.arange(5 * 6, dtype=float).reshape(5, 6) / 10.0
    path = _write(tmp_path, "m.csv", _csv_for(pair_topology, frames))
    seq = load_motion_csv(path, pair_topology)
    assert seq.n_frames == 5
    assert seq.n_channels == 6
    assert seq.frame_rate_hz == 90.0
    np.testing.assert_array_equal(seq.frames, frames)


def test_column_permutation(tmp_path, pair_topology):
    names = list(pair_topology.channel_names)
    shuffled = names[::-1]
    rows = ["1,2,3,4,5,6", "6,5,4,3,2,1", "1,1,1,1,1,1"]
    path = _write(tmp_path, "m.csv", ",".join(shuffled) + "\n" + "\n".join(rows) + "\n")
    seq = load_motion_csv(path, pair_topology)
    assert seq.frames[0, 0] == 6.0  # A.x was the last column in the file


def test_missing_channel(tmp_path, pair_topology):
    path = _write(tmp_path, "m.csv", "A.x,A.y\n1,2\n3,4\n5,6\n")
    with pytest.raises(MotionDataError, match="missing channel"):
        load_motion_csv(path, pair_topology)


def test_unknown_channel(tmp_path, pair_topology):
    header = ",".join(pair_topology.channel_names) + ",EXTRA.w"
    path = _write(tmp_path, "m.csv", header + "\n" + "1,2,3,4,5,6,7\n" * 3)
    with pytest.raises(MotionDataError, match="unknown channel"):
        load_motion_csv(path, pair_topology)


def test_nan_reports_row_and_channel(tmp_path, pair_topology):
    frames = np.ones((8, 6))
    rows = [",".join(str(v) for v in row) for row in frames]
    rows[7] = "1,1,nan,1,1,1"
    path = _write(
        tmp_path, "m.csv", ",".join(pair_topology.channel_names) + "\n" + "\n".join(rows)
    )
    with pytest.raises(MotionDataError, match=r"NaN at row 7, channel A\.z"):
        load_motion_csv(path, pair_topology)


def test_non_numeric_cell(tmp_path, pair_topology):
    path = _write(
        tmp_path,
        "m.csv",
        ",".join(pair_topology.channel_names) + "\n1,2,3,4,5,6\n1,x,3,4,5,6\n1,2,3,4,5,6\n",
    )
    with pytest.raises(MotionDataError, match="non-numeric"):
        load_motion_csv(path, pair_topology)


def test_too_short(tmp_path, pair_topology):
    path = _write(
        tmp_path, "m.csv", ",".join(pair_topology.channel_names) + "\n1,2,3,4,5,6\n"
    )
    with pytest.raises(MotionDataError, match="3 frames"):
        load_motion_csv(path, pair_topology)


def test_discontinuity_warns_not_errors(tmp_path, pair_topology):
    frames = np.zeros((4, 6))
    frames[2, 0] = 200.0
    path = _write(tmp_path, "m.csv", _csv_for(pair_topology, frames))
    with pytest.warns(UserWarning, match="discontinuity"):
        seq = load_motion_csv(path, pair_topology)
    assert seq.n_frames == 4


def test_save_load_roundtrip_bit_exact(tmp_path, pair_topology):
    rng = np.random.default_rng(3)
    frames = rng.normal(0, 20, size=(12, 6))
    seq = PostureSequence(
        frames=frames,
        channel_names=pair_topology.channel_names,
        frame_rate_hz=90.0,
        class_label="walk",
        subject_id="s1",
    )
    path = tmp_path / "m.csv"
    save_motion_csv(seq, path)
    again = load_motion_csv(path, pair_topology)
    np.testing.assert_array_equal(again.frames, frames)
    assert again.class_label == "walk"
    assert again.subject_id == "s1"


def test_sequence_validation():
    with pytest.raises(MotionDataError):
        PostureSequence(frames=np.ones((2, 3)), channel_names=("a", "b", "c"))
    with pytest.raises(MotionDataError):
        PostureSequence(frames=np.full((4, 3), np.inf), channel_names=("a", "b", "c"))
    with pytest.raises(MotionDataError):
        PostureSequence(frames=np.ones((4, 2)), channel_names=("a", "b", "c"))


def test_dataset_requires_shared_channels(pair_topology):
    good = PostureSequence(
        frames=np.ones((4, 6)), channel_names=pair_topology.channel_names
    )
    bad = PostureSequence(frames=np.ones((4, 2)), channel_names=("z.x", "z.y"))
    with pytest.raises(MotionDataError):
        MovementDataset(sequences=[good, bad], topology=pair_topology)


def test_frames_are_immutable(pair_topology):
    seq = PostureSequence(frames=np.ones((4, 6)), channel_names=pair_topology.channel_names)
    with pytest.raises(ValueError):
        seq.frames[0, 0] = 2.0
