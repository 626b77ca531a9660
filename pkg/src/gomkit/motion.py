"""Posture sequences and the canonical motion CSV format.

A movement is a T x N matrix of Euler joint angles in degrees, one row
per frame, columns in the topology's channel order. The CSV format is
one optional block of ``# key=value`` comment lines (``fps``, ``class``,
``subject``) followed by a header row of channel names and one row per
frame. Angles are stored raw and unwrapped; discontinuities larger than
180 degrees between consecutive frames trigger a warning, not an error.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .topology import SkeletonTopology


class MotionDataError(ValueError):
    """Raised for malformed or inconsistent motion data."""


@dataclass(frozen=True)
class PostureSequence:
    """A single recorded (or generated) movement.

    Attributes
    ----------
    frames : np.ndarray
        (T, N) float array of Euler joint angles in degrees.
    frame_rate_hz : float
    class_label : str
    subject_id : str
    channel_names : tuple[str, ...]
    """

    frames: np.ndarray
    channel_names: tuple[str, ...]
    frame_rate_hz: float = 90.0
    class_label: str = ""
    subject_id: str = ""

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=float)
        if frames.ndim != 2:
            raise MotionDataError("frames must be a 2-D (frames x channels) array")
        if frames.shape[0] < 3:
            raise MotionDataError(
                f"at least 3 frames required (two lags plus a target), got {frames.shape[0]}"
            )
        if frames.shape[1] != len(self.channel_names):
            raise MotionDataError(
                f"frame width {frames.shape[1]} does not match "
                f"{len(self.channel_names)} channel names"
            )
        if not np.all(np.isfinite(frames)):
            t, c = np.argwhere(~np.isfinite(frames))[0]
            raise MotionDataError(
                f"non-finite angle at frame {t}, channel {self.channel_names[c]}"
            )
        if self.frame_rate_hz <= 0:
            raise MotionDataError("frame_rate_hz must be positive")
        frames = frames.copy()
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n_channels(self) -> int:
        return self.frames.shape[1]

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.frames[:, self.channel_names.index(name)]
        except ValueError:
            raise MotionDataError(f"unknown channel {name!r}") from None

    def with_frames(self, frames: np.ndarray) -> "PostureSequence":
        return PostureSequence(
            frames=frames,
            channel_names=self.channel_names,
            frame_rate_hz=self.frame_rate_hz,
            class_label=self.class_label,
            subject_id=self.subject_id,
        )


@dataclass
class MovementDataset:
    """A collection of posture sequences over one shared topology."""

    sequences: list[PostureSequence]
    topology: SkeletonTopology

    def __post_init__(self):
        expected = self.topology.channel_names
        for seq in self.sequences:
            if seq.channel_names != expected:
                raise MotionDataError(
                    "all sequences must share the topology channel order"
                )

    @property
    def class_labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for seq in self.sequences:
            seen.setdefault(seq.class_label)
        return tuple(seen)

    def of_class(self, class_label: str) -> list[PostureSequence]:
        out = [s for s in self.sequences if s.class_label == class_label]
        if not out:
            raise MotionDataError(f"unknown class {class_label!r}")
        return out


def _check_continuity(frames: np.ndarray, channel_names, path) -> None:
    jumps = np.abs(np.diff(frames, axis=0))
    if jumps.size and jumps.max() > 180.0:
        t, c = np.unravel_index(np.argmax(jumps), jumps.shape)
        warnings.warn(
            f"{path}: discontinuity of {jumps[t, c]:.1f} deg on "
            f"{channel_names[c]} between frames {t} and {t + 1}",
            stacklevel=3,
        )


def read_raw_csv(path) -> tuple[list[str], np.ndarray, dict[str, str]]:
    """Parse a motion CSV without a topology: header, values, comments.

    Values are validated to be numeric and NaN-free; no channel-order
    normalization happens here.
    """
    meta = {"fps": "90", "class": "", "subject": ""}
    rows: list[list[str]] = []
    header: list[str] | None = None
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
                continue
            if not line.strip():
                continue
            parsed = next(csv.reader([line]))
            if header is None:
                header = [h.strip() for h in parsed]
            else:
                rows.append(parsed)
    if header is None:
        raise MotionDataError(f"{path}: empty file")
    values = np.empty((len(rows), len(header)), dtype=float)
    for t, row in enumerate(rows):
        if len(row) != len(header):
            raise MotionDataError(
                f"{path}: row {t} has {len(row)} cells, expected {len(header)}"
            )
        for c, cell in enumerate(row):
            try:
                values[t, c] = float(cell)
            except ValueError:
                raise MotionDataError(
                    f"{path}: non-numeric value {cell!r} at row {t}, channel {header[c]}"
                ) from None
    if np.isnan(values).any():
        t, c = np.argwhere(np.isnan(values))[0]
        raise MotionDataError(f"{path}: NaN at row {t}, channel {header[c]}")
    return header, values, meta


def load_motion_csv(path, topology: SkeletonTopology) -> PostureSequence:
    """Load a motion CSV and permute its columns to topology order.

    Raises :class:`MotionDataError` on missing or unknown channels,
    non-numeric cells, NaN values, or fewer than 3 frames.
    """
    header, values, meta = read_raw_csv(path)
    expected = topology.channel_names
    missing = [c for c in expected if c not in header]
    if missing:
        raise MotionDataError(f"{path}: missing channel {missing[0]!r}")
    unknown = [c for c in header if c not in expected]
    if unknown:
        raise MotionDataError(f"{path}: unknown channel {unknown[0]!r}")
    if values.shape[0] < 3:
        raise MotionDataError(
            f"{path}: at least 3 frames required, got {values.shape[0]}"
        )

    order = [header.index(c) for c in expected]
    frames = values[:, order]
    _check_continuity(frames, expected, path)
    try:
        fps = float(meta["fps"])
    except ValueError:
        raise MotionDataError(f"{path}: bad fps comment {meta['fps']!r}") from None
    return PostureSequence(
        frames=frames,
        channel_names=expected,
        frame_rate_hz=fps,
        class_label=meta["class"],
        subject_id=meta["subject"],
    )


def save_motion_csv(seq: PostureSequence, path) -> None:
    """Write a sequence in the canonical CSV format (round-trip exact)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# fps={seq.frame_rate_hz:g}\n")
        if seq.class_label:
            fh.write(f"# class={seq.class_label}\n")
        if seq.subject_id:
            fh.write(f"# subject={seq.subject_id}\n")
        fh.write(",".join(seq.channel_names) + "\n")
        for row in seq.frames:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_motion_dir(path, topology: SkeletonTopology) -> MovementDataset:
    """Load every ``*.csv`` in a directory as one dataset (sorted by name)."""
    from pathlib import Path

    files = sorted(Path(path).glob("*.csv"))
    if not files:
        raise MotionDataError(f"no CSV files in {path}")
    sequences = [load_motion_csv(f, topology) for f in files]
    return MovementDataset(sequences=sequences, topology=topology)
