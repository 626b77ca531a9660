import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gomkit import (
    GenerationDiverged,
    KfConfig,
    PostureSequence,
    build_system,
    fit_reference,
    generate,
    metrics,
    reconstruct,
    synth_generate,
)

from conftest import FRAME_RATE, oscillator_class, single_class_spec

NAMES = ("J.x", "J.y", "J.z")


def _seq(frames):
    return PostureSequence(frames=np.asarray(frames, dtype=float), channel_names=NAMES)


def _identity_tensor(n, steps=1):
    a = np.zeros((steps, n, 2, n))
    a[:, np.arange(n), 0, np.arange(n)] = 1.0
    return a


def test_identity_system_holds_seed(pair_topology):
    system = build_system(pair_topology)
    n = system.n_channels
    seed = np.tile(np.arange(n, dtype=float), (2, 1))
    out = generate(_identity_tensor(n), seed, length=20, system=system)
    np.testing.assert_allclose(out.frames, np.tile(seed[0], (20, 1)))


def test_sinusoid_rollout_closed_form(pair_topology):
    system = build_system(pair_topology)
    n = system.n_channels
    w = 2 * np.pi * 1.0 / FRAME_RATE
    a = np.zeros((1, n, 2, n))
    a[:, np.arange(n), 0, np.arange(n)] = 2 * np.cos(w)
    a[:, np.arange(n), 1, np.arange(n)] = 1.0
    t = np.arange(102)
    truth = np.sin(w * t)
    seed = np.tile(truth[:2][:, None], (1, n))
    out = generate(a, seed, length=102, system=system)
    np.testing.assert_allclose(out.frames[:, 0], truth, atol=1e-6)


def test_divergence_guard(pair_topology):
    system = build_system(pair_topology)
    n = system.n_channels
    a = np.zeros((1, n, 2, n))
    a[:, np.arange(n), 0, np.arange(n)] = 3.0  # violently unstable
    seed = np.ones((2, n))
    with pytest.raises(GenerationDiverged, match="diverged"):
        generate(a, seed, length=200, system=system)


def test_rollout_determinism(pair_topology):
    system = build_system(pair_topology)
    n = system.n_channels
    rng = np.random.default_rng(0)
    a = rng.normal(scale=0.1, size=(5, n, 2, n)) * system.support_mask()
    seed = rng.normal(size=(2, n))
    out1 = generate(a, seed, length=30, system=system)
    out2 = generate(a, seed, length=30, system=system)
    np.testing.assert_array_equal(out1.frames, out2.frames)


def test_short_schedule_holds_last_coefficients(pair_topology):
    system = build_system(pair_topology)
    n = system.n_channels
    out = generate(_identity_tensor(n, steps=3), np.ones((2, n)), length=40, system=system)
    np.testing.assert_allclose(out.frames, 1.0)


def test_metrics_perfect_forecast():
    rng = np.random.default_rng(1)
    x = _seq(rng.normal(size=(30, 3)))
    m = metrics(x, x)
    assert (m.mae, m.rmse, m.u1) == (0.0, 0.0, 0.0)


def test_metrics_maximal_disagreement():
    a = _seq(np.full((10, 3), 4.0))
    b = _seq(np.full((10, 3), -4.0))
    m = metrics(a, b)
    assert m.u1 == pytest.approx(1.0)


def test_metrics_hand_arithmetic():
    truth = _seq(np.zeros((3, 3)))
    gen = _seq(np.ones((3, 3)))
    m = metrics(gen, truth)
    assert m.mae == pytest.approx(1.0)
    assert m.rmse == pytest.approx(1.0)


def test_metrics_zero_zero_defined():
    z = _seq(np.zeros((5, 3)))
    assert metrics(z, z).u1 == 0.0


def test_metrics_shape_mismatch():
    with pytest.raises(ValueError):
        metrics(_seq(np.zeros((5, 3))), _seq(np.zeros((6, 3))))


def test_rmse_at_least_mae():
    rng = np.random.default_rng(2)
    for _ in range(50):
        a = _seq(rng.normal(size=(8, 3)))
        b = _seq(rng.normal(size=(8, 3)))
        m = metrics(a, b)
        assert m.rmse >= m.mae - 1e-15


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_u1_bounds_property(seed):
    rng = np.random.default_rng(seed)
    a = _seq(rng.normal(scale=rng.uniform(0.1, 50), size=(6, 3)))
    b = _seq(rng.normal(scale=rng.uniform(0.1, 50), size=(6, 3)))
    m = metrics(a, b)
    assert 0.0 <= m.u1 <= 1.0 + 1e-12
    assert m.rmse >= m.mae - 1e-12


def test_metrics_channel_permutation_invariant():
    rng = np.random.default_rng(3)
    fa, fb = rng.normal(size=(7, 3)), rng.normal(size=(7, 3))
    perm = [2, 0, 1]
    m1 = metrics(_seq(fa), _seq(fb))
    m2 = metrics(_seq(fa[:, perm]), _seq(fb[:, perm]))
    assert m1.mae == pytest.approx(m2.mae)
    assert m1.rmse == pytest.approx(m2.rmse)
    assert m1.u1 == pytest.approx(m2.u1)


def test_self_reconstruction_on_synthetic_movement(hex_topology):
    cls = oscillator_class(
        hex_topology,
        "c0",
        reps=1,
        length=200,
        noise_sigma=0.01,
        seed=3,
        couplings=(("S.x", "R.x", 0.02), ("L1.y", "L2.y", 0.02)),
    )
    dataset, _ = synth_generate(single_class_spec(cls), hex_topology, seed=3)
    system = build_system(hex_topology)
    trained = fit_reference(
        system, dataset, "c0", KfConfig(seed=0, max_iters=150, restarts=1), workers=4
    )
    truth = dataset.sequences[0]
    result = reconstruct(trained, truth, system)
    rms = np.sqrt(np.mean(truth.frames**2, axis=0))
    assert np.all(result.metrics.per_channel_mae < 0.05 * rms)
    assert result.metrics.u1 < 0.1
