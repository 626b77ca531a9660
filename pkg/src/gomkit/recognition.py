"""Left-to-right Gaussian HMM classifier for sensor-subset evaluation.

One model per movement class, trained with Baum-Welch on the selected
channel subset. States start at the first state with probability one and
may only self-loop or advance one state; banned transitions stay exactly
zero through every update. Emissions are diagonal Gaussians with a
variance floor. Evaluation is stratified k-fold (leave-one-out when a
class is too small) with per-channel z-scoring fitted on the training
fold, scored by macro-averaged F1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.metrics import f1_score, precision_recall_fscore_support
from sklearn.model_selection import StratifiedKFold

from .motion import MotionDataError, MovementDataset, PostureSequence

VAR_FLOOR = 1e-6
EM_TOL = 1e-4
EM_MAX_ITERS = 200


@dataclass(frozen=True)
class HmmModel:
    """Left-to-right Gaussian-emission HMM for one movement class."""

    class_label: str
    channels: tuple[str, ...]
    startprob: np.ndarray  # (S,), state 0 with probability 1
    transmat: np.ndarray  # (S, S), zero outside self/forward-one
    means: np.ndarray  # (S, C)
    variances: np.ndarray  # (S, C), floored
    train_loglik: tuple[float, ...] = ()

    @property
    def n_states(self) -> int:
        return len(self.startprob)


def _band_mask(s: int) -> np.ndarray:
    mask = np.zeros((s, s), dtype=bool)
    idx = np.arange(s)
    mask[idx, idx] = True
    mask[idx[:-1], idx[:-1] + 1] = True
    return mask


def _emission_logprob(obs: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """(T, S) log density of each frame under each state's Gaussian."""
    diff = obs[:, None, :] - means[None, :, :]
    return -0.5 * np.sum(
        np.log(2.0 * np.pi * variances)[None, :, :] + diff**2 / variances[None, :, :],
        axis=2,
    )


def _scaled_forward(
    logb: np.ndarray, startprob: np.ndarray, transmat: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Normalized forward pass; returns alpha-hat, scales, b, log-likelihood."""
    t_steps, _ = logb.shape
    shift = logb.max(axis=1)
    b = np.exp(logb - shift[:, None])
    alpha = np.zeros_like(b)
    scales = np.zeros(t_steps)
    a = startprob * b[0]
    for t in range(t_steps):
        if t > 0:
            a = (alpha[t - 1] @ transmat) * b[t]
        c = a.sum()
        if c <= 0 or not np.isfinite(c):
            return alpha, scales, b, -np.inf
        alpha[t] = a / c
        scales[t] = c
    loglik = float(np.sum(np.log(scales)) + np.sum(shift))
    return alpha, scales, b, loglik


def _scaled_backward(b: np.ndarray, transmat: np.ndarray, scales: np.ndarray) -> np.ndarray:
    t_steps, _ = b.shape
    beta = np.zeros_like(b)
    beta[-1] = 1.0
    for t in range(t_steps - 2, -1, -1):
        beta[t] = (transmat @ (b[t + 1] * beta[t + 1])) / scales[t + 1]
    return beta


def _baum_welch(
    observations: list[np.ndarray], n_states: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, list[float]]:
    """EM on a list of (T, C) observation matrices; left-to-right band."""
    for obs in observations:
        if len(obs) < n_states:
            raise MotionDataError(
                f"sequence of length {len(obs)} cannot cover {n_states} states"
            )
    n_channels = observations[0].shape[1]

    # Uniform temporal segmentation initialization (deterministic).
    means = np.zeros((n_states, n_channels))
    variances = np.zeros((n_states, n_channels))
    for j in range(n_states):
        chunks = []
        for obs in observations:
            bounds = np.linspace(0, len(obs), n_states + 1).astype(int)
            lo, hi = bounds[j], max(bounds[j + 1], bounds[j] + 1)
            chunks.append(obs[lo:hi])
        pooled = np.vstack(chunks)
        means[j] = pooled.mean(axis=0)
        variances[j] = pooled.var(axis=0)
    if np.all(variances <= VAR_FLOOR):
        warnings.warn("degenerate (constant) training frames; variance floored", stacklevel=3)
    variances = np.maximum(variances, VAR_FLOOR)

    mask = _band_mask(n_states)
    startprob = np.zeros(n_states)
    startprob[0] = 1.0
    mean_len = float(np.mean([len(o) for o in observations]))
    stay = float(np.clip(1.0 - n_states / mean_len, 0.5, 0.99))
    transmat = np.zeros((n_states, n_states))
    for i in range(n_states - 1):
        transmat[i, i], transmat[i, i + 1] = stay, 1.0 - stay
    transmat[-1, -1] = 1.0

    history: list[float] = []
    for _ in range(EM_MAX_ITERS):
        trans_num = np.zeros((n_states, n_states))
        gamma_sum = np.zeros(n_states)
        mean_num = np.zeros_like(means)
        var_num = np.zeros_like(variances)
        total_loglik = 0.0
        for obs in observations:
            logb = _emission_logprob(obs, means, variances)
            alpha, scales, b, loglik = _scaled_forward(logb, startprob, transmat)
            if not np.isfinite(loglik):
                raise MotionDataError("zero-probability sequence in EM")
            beta = _scaled_backward(b, transmat, scales)
            total_loglik += loglik

            gamma = alpha * beta
            gamma /= gamma.sum(axis=1, keepdims=True)
            for t in range(len(obs) - 1):
                trans_num += (
                    transmat
                    * np.outer(alpha[t], b[t + 1] * beta[t + 1])
                    / scales[t + 1]
                )
            gamma_sum += gamma.sum(axis=0)
            mean_num += gamma.T @ obs
            var_num += gamma.T @ (obs**2)

        history.append(total_loglik)
        new_trans = np.where(mask, trans_num, 0.0)
        row_sums = new_trans.sum(axis=1, keepdims=True)
        keep = row_sums[:, 0] > 0
        new_trans[keep] /= row_sums[keep]
        new_trans[~keep] = transmat[~keep]
        transmat = new_trans

        denom = np.maximum(gamma_sum, 1e-300)[:, None]
        means = mean_num / denom
        variances = np.maximum(var_num / denom - means**2, VAR_FLOOR)

        if len(history) > 1 and history[-1] - history[-2] < EM_TOL:
            break

    return startprob, transmat, means, variances, history


def _select_columns(channel_names, channels) -> list[int]:
    name_index = {c: i for i, c in enumerate(channel_names)}
    try:
        return [name_index[c] for c in channels]
    except KeyError as exc:
        raise MotionDataError(f"channel {exc} missing from sequence") from None


def forward_loglik(model: HmmModel, obs: np.ndarray) -> float:
    """Log-likelihood of an observation matrix under the model."""
    logb = _emission_logprob(obs, model.means, model.variances)
    _, _, _, loglik = _scaled_forward(logb, model.startprob, model.transmat)
    return loglik


def train_hmm(
    dataset: MovementDataset,
    class_label: str,
    channels,
    n_states: int,
    seed: int = 0,
) -> HmmModel:
    """Baum-Welch on the channel-restricted sequences of one class.

    Initialization is a deterministic uniform temporal segmentation
    (the seed only tags the model). Training log-likelihood is
    non-decreasing; iteration stops at tolerance 1e-4 or 200 rounds.
    """
    channels = tuple(channels)
    sequences = dataset.of_class(class_label)
    cols = _select_columns(dataset.topology.channel_names, channels)
    observations = [seq.frames[:, cols] for seq in sequences]
    startprob, transmat, means, variances, history = _baum_welch(observations, n_states)
    return HmmModel(
        class_label=class_label,
        channels=channels,
        startprob=startprob,
        transmat=transmat,
        means=means,
        variances=variances,
        train_loglik=tuple(history),
    )


def classify(seq: PostureSequence, models: list[HmmModel], channels) -> str:
    """Max-likelihood label; ties go to the lowest model index."""
    if not models:
        raise ValueError("no candidate models")
    cols = _select_columns(seq.channel_names, tuple(channels))
    obs = seq.frames[:, cols]
    scores = [forward_loglik(m, obs) for m in models]
    return models[int(np.argmax(scores))].class_label


@dataclass(frozen=True)
class RecognitionReport:
    f1_macro: float
    labels: tuple[str, ...]
    precision: np.ndarray
    recall: np.ndarray
    f1_per_class: np.ndarray
    n_test: int


def evaluate_f1(
    dataset: MovementDataset,
    channels,
    n_states: int,
    folds: int = 5,
    seed: int = 0,
) -> RecognitionReport:
    """Cross-validated macro-F1 of the HMM classifier on a channel subset.

    Stratified k-fold when every class has at least ``folds`` samples,
    leave-one-out otherwise. Features are z-scored per channel with
    training-fold statistics.
    """
    channels = tuple(channels)
    labels = dataset.class_labels
    if len(labels) < 2:
        raise MotionDataError("recognition needs at least two classes")
    y = np.array([labels.index(s.class_label) for s in dataset.sequences])
    counts = np.bincount(y, minlength=len(labels))
    if counts.min() >= folds:
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=seed)
        splits = list(splitter.split(np.zeros(len(y)), y))
    else:
        splits = [
            (np.setdiff1d(np.arange(len(y)), [i]), np.array([i]))
            for i in range(len(y))
        ]

    cols = _select_columns(dataset.topology.channel_names, channels)
    y_true: list[int] = []
    y_pred: list[int] = []
    for train_idx, test_idx in splits:
        train_obs = [dataset.sequences[i].frames[:, cols] for i in train_idx]
        pooled = np.vstack(train_obs)
        mu = pooled.mean(axis=0)
        sd = np.maximum(pooled.std(axis=0), 1e-8)

        models: list[HmmModel] = []
        for label in labels:
            members = [
                (dataset.sequences[i].frames[:, cols] - mu) / sd
                for i in train_idx
                if dataset.sequences[i].class_label == label
            ]
            if not members:
                continue
            startprob, transmat, means, variances, history = _baum_welch(
                members, n_states
            )
            models.append(
                HmmModel(
                    class_label=label,
                    channels=channels,
                    startprob=startprob,
                    transmat=transmat,
                    means=means,
                    variances=variances,
                    train_loglik=tuple(history),
                )
            )
        for i in test_idx:
            obs = (dataset.sequences[i].frames[:, cols] - mu) / sd
            scores = [forward_loglik(m, obs) for m in models]
            pred_label = models[int(np.argmax(scores))].class_label
            y_true.append(y[i])
            y_pred.append(labels.index(pred_label))

    present = sorted(set(y_true) | set(y_pred))
    precision, recall, f1, _ = precision_recall_fscore_support(
        y_true, y_pred, labels=present, zero_division=0
    )
    return RecognitionReport(
        f1_macro=float(f1_score(y_true, y_pred, average="macro", zero_division=0)),
        labels=tuple(labels[i] for i in present),
        precision=precision,
        recall=recall,
        f1_per_class=f1,
        n_test=len(y_true),
    )
