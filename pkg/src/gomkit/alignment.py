"""Dynamic time warping: distances, reference selection, alignment.

Classic three-neighbour recurrence with unit step weights and no band
constraint; the local cost is the full-posture Euclidean distance over
all channels. Reference movements are the class medoid under the DTW
distance, with ties broken by lowest sample index so reruns are
deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.spatial.distance import cdist

from .motion import MotionDataError, MovementDataset, PostureSequence


@njit(cache=True)
def _accumulate(cost):
    ta, tb = cost.shape
    acc = np.empty((ta, tb))
    acc[0, 0] = cost[0, 0]
    for j in range(1, tb):
        acc[0, j] = acc[0, j - 1] + cost[0, j]
    for i in range(1, ta):
        acc[i, 0] = acc[i - 1, 0] + cost[i, 0]
        for j in range(1, tb):
            best = acc[i - 1, j - 1]
            if acc[i - 1, j] < best:
                best = acc[i - 1, j]
            if acc[i, j - 1] < best:
                best = acc[i, j - 1]
            acc[i, j] = cost[i, j] + best
    return acc


def _check_channels(a: PostureSequence, b: PostureSequence) -> None:
    if a.channel_names != b.channel_names:
        raise MotionDataError("channel mismatch between sequences")


def _cost_matrix(a: PostureSequence, b: PostureSequence) -> np.ndarray:
    return cdist(a.frames, b.frames, metric="euclidean")


def dtw_distance(a: PostureSequence, b: PostureSequence) -> float:
    """Accumulated DTW cost between two sequences (symmetric, >= 0)."""
    _check_channels(a, b)
    acc = _accumulate(_cost_matrix(a, b))
    return float(acc[-1, -1])


def dtw_path(a: PostureSequence, b: PostureSequence) -> list[tuple[int, int]]:
    """Optimal warping path as (index in a, index in b) pairs.

    Ties between predecessors prefer the diagonal step, so identical
    sequences map to the identity path.
    """
    _check_channels(a, b)
    acc = _accumulate(_cost_matrix(a, b))
    i, j = acc.shape[0] - 1, acc.shape[1] - 1
    path = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, up, left = acc[i - 1, j - 1], acc[i - 1, j], acc[i, j - 1]
            if diag <= up and diag <= left:
                i, j = i - 1, j - 1
            elif up <= left:
                i -= 1
            else:
                j -= 1
        path.append((i, j))
    path.reverse()
    return path


def pairwise_dtw_matrix(sequences: list[PostureSequence]) -> np.ndarray:
    """Symmetric matrix of DTW distances between all sequence pairs."""
    m = len(sequences)
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            dist[i, j] = dist[j, i] = dtw_distance(sequences[i], sequences[j])
    return dist


def select_reference(dataset: MovementDataset, class_label: str) -> PostureSequence:
    """Medoid of a class: the sample closest to all its peers.

    Tie-break: lowest sample index within the class.
    """
    samples = dataset.of_class(class_label)
    if len(samples) == 1:
        return samples[0]
    sums = pairwise_dtw_matrix(samples).sum(axis=1)
    return samples[int(np.argmin(sums))]


def align_to_template(
    seq: PostureSequence, template: PostureSequence
) -> PostureSequence:
    """Warp ``seq`` onto the template's time base.

    Output has the template's length; template frames matched to several
    source frames receive their arithmetic mean.
    """
    _check_channels(seq, template)
    path = dtw_path(seq, template)
    out = np.zeros_like(template.frames)
    counts = np.zeros(template.n_frames)
    for i, j in path:
        out[j] += seq.frames[i]
        counts[j] += 1
    out /= counts[:, None]
    return PostureSequence(
        frames=out,
        channel_names=template.channel_names,
        frame_rate_hz=template.frame_rate_hz,
        class_label=seq.class_label,
        subject_id=seq.subject_id,
    )
