"""Shared fixtures: toy skeletons and oscillator dataset builders."""

import numpy as np
import pytest

from gomkit import ChannelDynamics, ClassSpec, Coupling, SkeletonTopology, SynthSpec

FRAME_RATE = 90.0


@pytest.fixture(scope="session")
def pair_topology():
    """Two-joint chain: one spine root, one spine child."""
    return SkeletonTopology(
        joints=("A", "B"),
        parent={"A": None, "B": "A"},
        limb_of={"A": "spine", "B": "spine"},
    )


@pytest.fixture(scope="session")
def hex_topology():
    """Six joints: spine root + child, mirrored two-segment legs."""
    return SkeletonTopology(
        joints=("R", "S", "L1", "L2", "R1", "R2"),
        parent={"R": None, "S": "R", "L1": "R", "L2": "L1", "R1": "R", "R2": "R1"},
        limb_of={
            "R": "spine",
            "S": "spine",
            "L1": "left-leg",
            "L2": "left-leg",
            "R1": "right-leg",
            "R2": "right-leg",
        },
    )


def damped_oscillator(freq_hz, rho, amplitude, phase, frame_rate=FRAME_RATE):
    """ChannelDynamics of x_t = rho^t * A * sin(w t dt + phase)."""
    w = 2.0 * np.pi * freq_hz / frame_rate
    return ChannelDynamics(
        alpha1=2.0 * rho * np.cos(w),
        alpha2=rho * rho,
        init=(amplitude * np.sin(phase), rho * amplitude * np.sin(w + phase)),
    )


def oscillator_class(
    topology,
    label,
    reps,
    length,
    noise_sigma,
    seed,
    freq_range=(0.8, 2.2),
    rho_range=(0.996, 0.999),
    amp_range=(15.0, 25.0),
    couplings=(),
    overrides=None,
):
    """A class spec where every channel is a distinct damped oscillator."""
    rng = np.random.default_rng(seed)
    channels = {}
    for name in topology.channel_names:
        channels[name] = damped_oscillator(
            freq_hz=rng.uniform(*freq_range),
            rho=rng.uniform(*rho_range),
            amplitude=rng.uniform(*amp_range),
            phase=rng.uniform(0, 2 * np.pi),
        )
    if overrides:
        channels.update(overrides)
    return ClassSpec(
        label=label,
        reps=reps,
        length=length,
        noise_sigma=noise_sigma,
        channels=channels,
        couplings=tuple(Coupling(*c) if isinstance(c, tuple) else c for c in couplings),
    )


def single_class_spec(cls):
    return SynthSpec(classes=(cls,), frame_rate_hz=FRAME_RATE)
