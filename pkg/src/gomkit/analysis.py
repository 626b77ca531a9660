"""Coefficient significance, sensor selection, and tolerance intervals.

Significance uses the Gaussian posterior delivered by the smoother: per
timestep, z = mean / posterior std and a two-sided normal p-value. A
coefficient counts as significant when p < 0.05 in more than half of its
timesteps. Channel counts of significant slots drive sensor (joint)
selection; tolerance bands are the per-timestep mean +/- k std over
aligned repetitions, with the population divisor R.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .kalman import TrainedEquation
from .topology import SkeletonTopology

P_LEVEL = 0.05
MAJORITY = 0.5


@dataclass(frozen=True)
class EquationSignificance:
    """Per-timestep p-values and summary flags for one equation."""

    target: str
    coefficient_names: tuple[str, ...]
    channels: tuple[str, ...]  # channel each slot refers to
    assumptions: tuple[str, ...]  # H1/H2/H3/H4.x per slot
    p_values: np.ndarray  # (T, d)
    sig_fraction: np.ndarray  # (d,) share of timesteps with p < level
    significant: np.ndarray  # (d,) bool

    @property
    def n_coefficients(self) -> int:
        return len(self.coefficient_names)


@dataclass(frozen=True)
class SignificanceReport:
    entries: tuple[EquationSignificance, ...]
    level: float = P_LEVEL


@dataclass(frozen=True)
class SensorRanking:
    counts: dict[str, int]
    ranked_channels: tuple[str, ...]
    selected_channels: tuple[str, ...]
    selected_sensors: tuple[str, ...]
    top_k_channels: int


@dataclass(frozen=True)
class ToleranceBand:
    """Per-coefficient, per-timestep mean +/- k-sigma envelope."""

    target: str
    coefficient_names: tuple[str, ...]
    k_sigma: float
    mean: np.ndarray  # (T, d)
    std: np.ndarray  # (T, d)
    lower: np.ndarray
    upper: np.ndarray


def _model_fields(model):
    """Target/names/channels/tags/coefficients/variances of a fitted model.

    Accepts either a :class:`TrainedEquation` or a stored
    ``EquationCoefficients`` record from an exchange bundle.
    """
    if isinstance(model, TrainedEquation):
        eq = model.equation
        traj = model.trajectory
        return (
            eq.target,
            eq.coefficient_names,
            (eq.target, eq.target) + eq.regressors,
            ("H1", "H1") + tuple(eq.assumption_of[r] for r in eq.regressors),
            traj.coefficients(),
            traj.var,
        )
    target = model.target
    names = (f"{target}@lag1", f"{target}@lag2") + tuple(model.regressors)
    traj = model.trajectory()
    return (
        target,
        names,
        (target, target) + tuple(model.regressors),
        ("H1", "H1") + tuple(model.assumptions),
        traj.coefficients(),
        traj.var,
    )


def coefficient_ttest(
    trained, level: float = P_LEVEL, majority: float = MAJORITY
) -> EquationSignificance:
    """Two-sided significance of every coefficient at every timestep.

    Null hypothesis: the coefficient is zero. Zero posterior variance
    with a nonzero mean yields p = 0 and a degenerate-variance warning.
    """
    target, names, channels, assumptions, coeffs, var = _model_fields(trained)
    degenerate = (var == 0) & (coeffs != 0)
    if degenerate.any():
        warnings.warn(
            f"{target}: zero posterior variance with nonzero mean; p set to 0",
            stacklevel=2,
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(coeffs) / np.sqrt(var)
    z[(var == 0) & (coeffs == 0)] = 0.0
    z[degenerate] = np.inf
    p = erfc(z / np.sqrt(2.0))
    frac = np.mean(p < level, axis=0)
    return EquationSignificance(
        target=target,
        coefficient_names=names,
        channels=channels,
        assumptions=assumptions,
        p_values=p,
        sig_fraction=frac,
        significant=frac > majority,
    )


def significance_report(trained: list, level: float = P_LEVEL) -> SignificanceReport:
    return SignificanceReport(
        entries=tuple(coefficient_ttest(t, level=level) for t in trained),
        level=level,
    )


def count_significant_slots(reports: SignificanceReport | list) -> dict[str, int]:
    """Number of significant (equation, coefficient) slots per channel."""
    entries = reports.entries if isinstance(reports, SignificanceReport) else [
        e for r in reports for e in r.entries
    ]
    counts: dict[str, int] = {}
    for entry in entries:
        for channel, sig in zip(entry.channels, entry.significant):
            if sig:
                counts[channel] = counts.get(channel, 0) + 1
    return counts


def rank_and_select(
    reports: SignificanceReport | list,
    topology: SkeletonTopology,
    top_k_channels: int = 12,
) -> SensorRanking:
    """Rank channels by significance count and expand to whole sensors.

    The top ``top_k_channels`` channels with nonzero counts are kept,
    ties at the cutoff count are all included, and a joint is selected
    when at least one of its three channels made the cut.
    """
    entries = reports.entries if isinstance(reports, SignificanceReport) else [
        e for r in reports for e in r.entries
    ]
    if not entries:
        raise ValueError("empty significance reports")
    counts = count_significant_slots(
        SignificanceReport(entries=tuple(entries))
    )
    eligible = [c for c in topology.channel_names if counts.get(c, 0) > 0]
    if not eligible:
        raise ValueError("no significant channels to select from")
    ranked = sorted(eligible, key=lambda c: (-counts[c], topology.channel_index(c)))
    k = min(top_k_channels, len(ranked))
    cutoff = counts[ranked[k - 1]]
    selected = tuple(c for c in ranked if counts[c] >= cutoff)
    sensors = []
    for c in selected:
        joint = topology.joint_of(c)
        if joint not in sensors:
            sensors.append(joint)
    return SensorRanking(
        counts=counts,
        ranked_channels=tuple(ranked),
        selected_channels=selected,
        selected_sensors=tuple(sensors),
        top_k_channels=top_k_channels,
    )


def sensor_channels(topology: SkeletonTopology, sensors) -> tuple[str, ...]:
    """All channels of the given joints, in topology order."""
    wanted = set(sensors)
    return tuple(c for c in topology.channel_names if topology.joint_of(c) in wanted)


def tolerance_intervals(models: list, k_sigma: float = 2.0) -> ToleranceBand:
    """Mean +/- k-sigma coefficient bands over R aligned repetitions.

    The standard deviation uses the population divisor R; a single
    repetition therefore collapses the band onto its mean.
    """
    if not models:
        raise ValueError("at least one repetition required")
    fields = [_model_fields(m) for m in models]
    target, names = fields[0][0], fields[0][1]
    lengths = {f[4].shape[0] for f in fields}
    if len(lengths) != 1:
        raise ValueError("repetitions must share their trajectory length")
    for f in fields:
        if f[0] != target or f[1] != names:
            raise ValueError("repetitions must come from the same equation")
    stack = np.stack([f[4] for f in fields])  # (R, T, d)
    mean = stack.mean(axis=0)
    std = np.sqrt(np.mean((stack - mean) ** 2, axis=0))
    # identical repetitions must give exactly zero-width bands
    identical = np.all(stack == stack[0], axis=0)
    mean[identical] = stack[0][identical]
    std[identical] = 0.0
    return ToleranceBand(
        target=target,
        coefficient_names=names,
        k_sigma=float(k_sigma),
        mean=mean,
        std=std,
        lower=mean - k_sigma * std,
        upper=mean + k_sigma * std,
    )
