"""Synthetic movement generator with known ground-truth dynamics.

Desk-scale stand-in for recorded movement corpora: every channel follows
the second-order recursion of its equation with fixed ground-truth
coefficients plus Gaussian noise, and cross-channel couplings are only
allowed where the equation system has support. The generating
coefficients are returned alongside the data so estimators can be tested
against a known answer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .equations import GomSystem, build_system
from .motion import MovementDataset, PostureSequence
from .topology import SkeletonTopology

#: Dynamics whose companion spectral radius exceeds 1 by more than this
#: are rejected; marginally stable recursions (pure sinusoids, constants)
#: sit exactly on the unit circle and are allowed.
STABILITY_TOL = 1e-9


class UnstableSpecError(ValueError):
    """Raised when a synthetic spec defines divergent dynamics."""


@dataclass(frozen=True)
class ChannelDynamics:
    """Ground-truth AR(2) law of one channel: x_t = a1*x1 - a2*x2 + noise."""

    alpha1: float = 0.0
    alpha2: float = 0.0
    init: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class Coupling:
    """Lag-1 cross-channel term: ``beta * src_{t-1}`` added to ``dst_t``."""

    src: str
    dst: str
    beta: float


@dataclass(frozen=True)
class ClassSpec:
    label: str
    reps: int
    length: int
    noise_sigma: float
    channels: dict[str, ChannelDynamics]
    couplings: tuple[Coupling, ...] = ()

    def __post_init__(self):
        if self.reps < 1 or self.length < 3:
            raise ValueError("reps must be >= 1 and length >= 3")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        object.__setattr__(self, "couplings", tuple(self.couplings))


@dataclass(frozen=True)
class SynthSpec:
    classes: tuple[ClassSpec, ...]
    frame_rate_hz: float = 90.0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not self.classes:
            raise ValueError("spec must define at least one class")


@dataclass(frozen=True)
class GroundTruth:
    """Generating coefficients of one class, in topology channel order."""

    channel_names: tuple[str, ...]
    alpha: np.ndarray  # (N, 2), unsigned convention
    beta: np.ndarray  # (N, N), beta[dst, src]

    def coupled_channels(self) -> tuple[str, ...]:
        used = np.any(self.beta != 0.0, axis=0)
        return tuple(c for c, u in zip(self.channel_names, used) if u)


def _class_matrices(
    spec: ClassSpec, topology: SkeletonTopology, system: GomSystem
) -> GroundTruth:
    names = topology.channel_names
    n = len(names)
    alpha = np.zeros((n, 2))
    beta = np.zeros((n, n))
    for channel, dyn in spec.channels.items():
        i = topology.channel_index(channel)
        alpha[i] = (dyn.alpha1, dyn.alpha2)
    for cp in spec.couplings:
        eq = system.equation_for(cp.dst)
        if cp.src not in eq.regressors:
            raise ValueError(
                f"coupling {cp.src} -> {cp.dst} is outside the equation support"
            )
        beta[topology.channel_index(cp.dst), topology.channel_index(cp.src)] = cp.beta
    return GroundTruth(channel_names=names, alpha=alpha, beta=beta)


def spectral_radius(truth: GroundTruth) -> float:
    """Spectral radius of the companion form of the full system."""
    n = len(truth.channel_names)
    a1 = truth.beta.copy()
    a1[np.arange(n), np.arange(n)] += truth.alpha[:, 0]
    a2 = np.diag(-truth.alpha[:, 1])
    companion = np.block([[a1, a2], [np.eye(n), np.zeros((n, n))]])
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def synth_generate(
    spec: SynthSpec, topology: SkeletonTopology, seed: int
) -> tuple[MovementDataset, dict[str, GroundTruth]]:
    """Generate a dataset from ground-truth dynamics, deterministically.

    Returns the dataset and, per class, the generating coefficients.
    Raises :class:`UnstableSpecError` for strictly unstable dynamics.
    """
    system = build_system(topology)
    truths: dict[str, GroundTruth] = {}
    for cls in spec.classes:
        truth = _class_matrices(cls, topology, system)
        rho = spectral_radius(truth)
        if rho > 1.0 + STABILITY_TOL:
            raise UnstableSpecError(
                f"class {cls.label!r}: companion spectral radius {rho:.6f} >= 1"
            )
        truths[cls.label] = truth

    rng = np.random.default_rng(seed)
    names = topology.channel_names
    n = len(names)
    sequences = []
    for cls in spec.classes:
        truth = truths[cls.label]
        init = np.zeros((2, n))
        for channel, dyn in cls.channels.items():
            i = topology.channel_index(channel)
            init[0, i], init[1, i] = dyn.init
        for rep in range(cls.reps):
            frames = np.zeros((cls.length, n))
            frames[0:2] = init
            noise = (
                rng.normal(0.0, cls.noise_sigma, size=(cls.length - 2, n))
                if cls.noise_sigma > 0
                else np.zeros((cls.length - 2, n))
            )
            for t in range(2, cls.length):
                frames[t] = (
                    truth.alpha[:, 0] * frames[t - 1]
                    - truth.alpha[:, 1] * frames[t - 2]
                    + truth.beta @ frames[t - 1]
                    + noise[t - 2]
                )
            sequences.append(
                PostureSequence(
                    frames=frames,
                    channel_names=names,
                    frame_rate_hz=spec.frame_rate_hz,
                    class_label=cls.label,
                    subject_id=f"synth-{rep}",
                )
            )
    return MovementDataset(sequences=sequences, topology=topology), truths


# -- JSON spec --------------------------------------------------------------


def spec_from_dict(doc: dict) -> SynthSpec:
    """Parse the synthetic-spec JSON document (see README for the schema)."""
    classes = []
    for cdoc in doc["classes"]:
        default = cdoc.get("default", {})
        channels = {}
        for name, ch in cdoc.get("channels", {}).items():
            merged = {**default, **ch}
            channels[name] = ChannelDynamics(
                alpha1=float(merged.get("alpha1", 0.0)),
                alpha2=float(merged.get("alpha2", 0.0)),
                init=tuple(merged.get("init", (0.0, 0.0))),
            )
        couplings = tuple(
            Coupling(src=c["src"], dst=c["dst"], beta=float(c["beta"]))
            for c in cdoc.get("couplings", ())
        )
        classes.append(
            ClassSpec(
                label=cdoc["label"],
                reps=int(cdoc.get("reps", 1)),
                length=int(cdoc.get("length", 100)),
                noise_sigma=float(cdoc.get("noise_sigma", 0.0)),
                channels=channels,
                couplings=couplings,
            )
        )
    return SynthSpec(classes=tuple(classes), frame_rate_hz=float(doc.get("frame_rate_hz", 90.0)))


def load_spec(path) -> SynthSpec:
    with open(path) as fh:
        return spec_from_dict(json.load(fh))
