"""Closed-loop movement synthesis and forecast-quality metrics.

Generation rolls the equation system forward one frame per step from two
seed frames, feeding predictions back as lags (no ground truth is
re-injected). Quality is summarized by MAE, RMSE, and the bounded Theil
inequality coefficient U1 = RMSE / (RMS(truth) + RMS(generated)), which
is 0 exactly for a perfect forecast and at most 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .equations import (
    CoefficientTrajectory,
    GomSystem,
    eval_system_matrix,
    trajectory_tensor,
)
from .kalman import TrainedEquation
from .motion import PostureSequence

DIVERGENCE_LIMIT = 1e4


class GenerationDiverged(RuntimeError):
    """Raised when a rollout leaves the plausible angle range."""


@dataclass(frozen=True)
class ForecastMetrics:
    mae: float
    rmse: float
    u1: float
    per_channel_mae: np.ndarray
    per_channel_rmse: np.ndarray
    per_channel_u1: np.ndarray


@dataclass(frozen=True)
class GenerationResult:
    generated: PostureSequence
    metrics: ForecastMetrics


def _coefficient_tensor(
    system: GomSystem, trained: list[TrainedEquation]
) -> np.ndarray:
    trajectories: dict[str, CoefficientTrajectory] = {
        t.equation.target: t.trajectory for t in trained
    }
    return trajectory_tensor(system, trajectories)


def generate(
    trained: list[TrainedEquation] | np.ndarray,
    seed_frames: np.ndarray,
    length: int,
    system: GomSystem,
    frame_rate_hz: float = 90.0,
    class_label: str = "generated",
) -> PostureSequence:
    """Roll the system forward to ``length`` frames from two seed frames.

    ``trained`` is either the fitted equations or a ready (T, N, 2, N)
    coefficient tensor. Coefficient schedules shorter than the rollout
    hold their final values. Any angle beyond ``DIVERGENCE_LIMIT``
    degrees aborts with a diagnostic.
    """
    seed_frames = np.asarray(seed_frames, dtype=float)
    n = system.n_channels
    if seed_frames.shape != (2, n):
        raise ValueError(f"seed frames must have shape (2, {n})")
    if length < 3:
        raise ValueError("length must be at least 3")
    tensor = (
        np.asarray(trained, dtype=float)
        if isinstance(trained, np.ndarray)
        else _coefficient_tensor(system, trained)
    )
    if tensor.ndim != 4 or tensor.shape[1:] != (n, 2, n):
        raise ValueError(f"coefficient tensor must be (T, {n}, 2, {n})")

    frames = np.zeros((length, n))
    frames[:2] = seed_frames
    last = tensor.shape[0] - 1
    for t in range(2, length):
        a_t = tensor[min(t - 2, last)]
        x_t = np.stack([frames[t - 1], frames[t - 2]])
        frames[t] = eval_system_matrix(a_t, x_t)
        if np.any(np.abs(frames[t]) > DIVERGENCE_LIMIT):
            c = int(np.argmax(np.abs(frames[t])))
            raise GenerationDiverged(
                f"rollout diverged at frame {t}: |{system.topology.channel_names[c]}|"
                f" = {abs(frames[t, c]):.3g} deg"
            )
    return PostureSequence(
        frames=frames,
        channel_names=system.topology.channel_names,
        frame_rate_hz=frame_rate_hz,
        class_label=class_label,
    )


def generate_from_bundle(
    bundle,
    seed_frames: np.ndarray,
    length: int,
    class_label: str = "generated",
) -> PostureSequence:
    """Roll out a coefficient-exchange bundle without a topology object."""
    seed_frames = np.asarray(seed_frames, dtype=float)
    names = bundle.channel_names
    n = len(names)
    if seed_frames.shape != (2, n):
        raise ValueError(f"seed frames must have shape (2, {n})")
    if length < 3:
        raise ValueError("length must be at least 3")
    tensor = bundle.tensor()
    frames = np.zeros((length, n))
    frames[:2] = seed_frames
    last = tensor.shape[0] - 1
    for t in range(2, length):
        a_t = tensor[min(t - 2, last)]
        frames[t] = eval_system_matrix(a_t, np.stack([frames[t - 1], frames[t - 2]]))
        if np.any(np.abs(frames[t]) > DIVERGENCE_LIMIT):
            c = int(np.argmax(np.abs(frames[t])))
            raise GenerationDiverged(
                f"rollout diverged at frame {t}: |{names[c]}| = "
                f"{abs(frames[t, c]):.3g} deg"
            )
    return PostureSequence(
        frames=frames,
        channel_names=names,
        frame_rate_hz=bundle.frame_rate_hz,
        class_label=class_label,
    )


def _rms(x: np.ndarray, axis=None) -> np.ndarray:
    return np.sqrt(np.mean(np.square(x), axis=axis))


def metrics(generated: PostureSequence, truth: PostureSequence) -> ForecastMetrics:
    """MAE, RMSE, and Theil U1 between a generated movement and its truth.

    Averages run over frames and channels; U1 of two identically zero
    sequences is defined as 0.
    """
    if generated.frames.shape != truth.frames.shape:
        raise ValueError("sequences must share their shape")
    diff = generated.frames - truth.frames
    per_mae = np.mean(np.abs(diff), axis=0)
    per_rmse = _rms(diff, axis=0)
    denom = _rms(truth.frames, axis=0) + _rms(generated.frames, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_u1 = np.where(denom > 0, per_rmse / np.where(denom > 0, denom, 1.0), 0.0)
    total_denom = _rms(truth.frames) + _rms(generated.frames)
    u1 = float(_rms(diff) / total_denom) if total_denom > 0 else 0.0
    return ForecastMetrics(
        mae=float(np.mean(np.abs(diff))),
        rmse=float(_rms(diff)),
        u1=u1,
        per_channel_mae=per_mae,
        per_channel_rmse=per_rmse,
        per_channel_u1=per_u1,
    )


def reconstruct(
    trained: list[TrainedEquation],
    truth: PostureSequence,
    system: GomSystem,
) -> GenerationResult:
    """Regenerate a training movement from its own fitted trajectories."""
    generated = generate(
        trained,
        truth.frames[:2],
        truth.n_frames,
        system,
        frame_rate_hz=truth.frame_rate_hz,
        class_label=truth.class_label,
    )
    return GenerationResult(generated=generated, metrics=metrics(generated, truth))
