import numpy as np
import pytest

from gomkit import (
    KfConfig,
    MovementDataset,
    PostureSequence,
    build_system,
    fit_reference,
    kf_filter,
    mle_fit,
)
from gomkit.equations import GomEquation
from gomkit.kalman import design_matrix

from conftest import FRAME_RATE, oscillator_class, single_class_spec

NAMES = ("J.x", "J.y", "J.z")


def alpha_only_equation(target="J.x"):
    return GomEquation(
        target=target,
        target_index=NAMES.index(target),
        regressors=(),
        regressor_indices=(),
        assumption_of={},
    )


def one_regressor_equation():
    return GomEquation(
        target="J.x",
        target_index=0,
        regressors=("J.y",),
        regressor_indices=(1,),
        assumption_of={"J.y": "H2"},
    )


def _seq(frames):
    return PostureSequence(frames=np.asarray(frames, dtype=float), channel_names=NAMES)


def sinusoid_seq(freq=1.0, amp=10.0, phase=0.3, n=300):
    w = 2 * np.pi * freq / FRAME_RATE
    t = np.arange(n)
    frames = np.zeros((n, 3))
    frames[:, 0] = amp * np.sin(w * t + phase)
    return _seq(frames), 2 * np.cos(w)


def reference_filter(y, h, q, r, m0, v0):
    """Independently coded filter: explicit scalar-observation formulas."""
    d = len(m0)
    m = np.array(m0, dtype=float)
    p = np.eye(d) * v0
    loglik = 0.0
    means = []
    for t in range(len(y)):
        if t > 0:
            p = p + np.eye(d) * q
        s = h[t] @ p @ h[t] + r
        v = y[t] - h[t] @ m
        loglik += -0.5 * (np.log(2 * np.pi * s) + v * v / s)
        k = (p @ h[t]) / s
        m = m + k * v
        p = p - np.outer(k, h[t] @ p)
        means.append(m.copy())
    return loglik, np.array(means)


def test_loglik_matches_reference_filter():
    rng = np.random.default_rng(0)
    n = 80
    frames = np.zeros((n, 3))
    frames[:, 0] = rng.normal(size=n)
    frames[:, 1] = rng.normal(size=n)
    seq = _seq(frames)
    eq = one_regressor_equation()
    config = KfConfig()
    theta = (1e-3, 0.5)

    result = kf_filter(eq, seq, theta, config)
    y, h = design_matrix(eq, seq)
    ref_ll, ref_means = reference_filter(
        y, h, *theta, m0=config.prior_mean(3), v0=config.init_coeff_var
    )
    assert abs(result.loglik - ref_ll) < 1e-9
    np.testing.assert_allclose(result.filtered_mean, ref_means, atol=1e-9)


def test_zero_data_keeps_prior_and_closed_form_loglik():
    seq = _seq(np.zeros((52, 3)))
    eq = alpha_only_equation()
    config = KfConfig()
    r = 0.7
    result = kf_filter(eq, seq, (1e-4, r), config)
    steps = 50
    expected = steps * (-0.5 * np.log(2 * np.pi * r))
    assert result.loglik == pytest.approx(expected, rel=1e-12)
    np.testing.assert_allclose(result.filtered_mean, np.tile([1.0, 0.0], (steps, 1)))


def test_filtered_coefficients_reach_ols_in_small_q_limit():
    rng = np.random.default_rng(1)
    n = 200
    frames = rng.normal(0, 2, size=(n, 3))
    # target driven by its own lags and one sibling axis
    for t in range(2, n):
        frames[t, 0] = (
            0.6 * frames[t - 1, 0]
            - 0.2 * frames[t - 2, 0]
            + 0.3 * frames[t - 1, 1]
            + rng.normal(0, 0.01)
        )
    seq = _seq(frames)
    eq = one_regressor_equation()
    result = kf_filter(eq, seq, (1e-12, 0.01**2), KfConfig())
    y, h = design_matrix(eq, seq)
    ols = np.linalg.lstsq(h, y, rcond=None)[0]
    assert np.abs(result.filtered_mean[-1] - ols).max() < 1e-3
    assert np.abs(result.filtered_mean[-1] - [0.6, 0.2, 0.3]).max() < 0.02


def test_posterior_variance_positive_and_decreasing_on_constant_regressors():
    frames = np.ones((40, 3))
    seq = _seq(frames)
    eq = one_regressor_equation()
    result = kf_filter(eq, seq, (1e-12, 0.5), KfConfig())
    assert (result.filtered_var > 0).all()
    diffs = np.diff(result.filtered_var, axis=0)
    assert (diffs <= 1e-12).all()


def test_theta_validation():
    seq = _seq(np.zeros((10, 3)))
    eq = alpha_only_equation()
    with pytest.raises(ValueError):
        kf_filter(eq, seq, (-1.0, 1.0), KfConfig())
    with pytest.raises(ValueError):
        kf_filter(eq, seq, (1e-4, 0.0), KfConfig())


def test_singular_innovation_variance_raises():
    from gomkit import FilterError

    frames = np.zeros((10, 3))
    frames[:, 0] = 1e200  # finite but overflows h P h^T
    seq = _seq(frames)
    with pytest.raises(FilterError, match="singular innovation variance"):
        kf_filter(alpha_only_equation(), seq, (1e-4, 1.0), KfConfig())


def test_mle_recovers_sinusoid_ar2():
    seq, true_alpha1 = sinusoid_seq()
    fit = mle_fit(alpha_only_equation(), seq, KfConfig(seed=0))
    mean_alpha = fit.trajectory.alpha.mean(axis=0)
    assert abs(mean_alpha[0] - true_alpha1) < 1e-2
    assert abs(mean_alpha[1] - 1.0) < 1e-2


def test_mle_refit_reproduces_loglik():
    seq, _ = sinusoid_seq(n=120)
    eq = alpha_only_equation()
    fit = mle_fit(eq, seq, KfConfig(seed=3, max_iters=120))
    again = kf_filter(eq, seq, fit.theta, KfConfig())
    assert again.loglik == pytest.approx(fit.loglik, abs=1e-9)


def test_mle_loglik_history_nondecreasing():
    seq, _ = sinusoid_seq(n=150)
    fit = mle_fit(alpha_only_equation(), seq, KfConfig(seed=1, max_iters=150))
    hist = fit.loglik_history
    assert len(hist) >= 1
    assert all(b >= a for a, b in zip(hist, hist[1:]))


def test_smoothed_beta_tracks_slow_ramp():
    rng = np.random.default_rng(5)
    n = 400
    w = 2 * np.pi * 0.8 / FRAME_RATE
    driver = 5.0 * np.sin(w * np.arange(n))
    ramp = np.linspace(0.0, 0.3, n)
    frames = np.zeros((n, 3))
    frames[:, 1] = driver
    for t in range(2, n):
        frames[t, 0] = (
            0.5 * frames[t - 1, 0] + ramp[t] * frames[t - 1, 1] + rng.normal(0, 0.01)
        )
    fit = mle_fit(one_regressor_equation(), _seq(frames), KfConfig(seed=2))
    beta = fit.trajectory.beta[:, 0]
    err = np.abs(beta - ramp[2:]).mean()
    assert err < 0.05


def test_one_step_predictions_reconstruct_training_data():
    seq, _ = sinusoid_seq(amp=12.0, n=250)
    eq = alpha_only_equation()
    fit = mle_fit(eq, seq, KfConfig(seed=4))
    y, h = design_matrix(eq, seq)
    coeffs = fit.trajectory.coefficients()
    preds = np.sum(coeffs * h, axis=1)
    rms = np.sqrt(np.mean(seq.frames[:, 0] ** 2))
    assert np.mean(np.abs(preds - y)) < 0.05 * rms


def test_fit_reference_system(hex_topology):
    spec = single_class_spec(
        oscillator_class(hex_topology, "c0", reps=3, length=60, noise_sigma=0.05, seed=0)
    )
    from gomkit import synth_generate

    dataset, _ = synth_generate(spec, hex_topology, seed=0)
    system = build_system(hex_topology)
    config = KfConfig(seed=0, max_iters=60, restarts=0)
    trained = fit_reference(system, dataset, "c0", config)
    assert len(trained) == 18
    assert [t.equation.target for t in trained] == list(hex_topology.channel_names)

    # sample order must not change the selected reference or the fits
    shuffled = MovementDataset(
        sequences=list(reversed(dataset.sequences)), topology=hex_topology
    )
    trained2 = fit_reference(system, shuffled, "c0", config)
    for a, b in zip(trained, trained2):
        np.testing.assert_array_equal(a.trajectory.alpha, b.trajectory.alpha)
        assert a.loglik == b.loglik


def test_fit_reference_parallel_matches_serial(hex_topology):
    from gomkit import synth_generate

    spec = single_class_spec(
        oscillator_class(hex_topology, "c0", reps=1, length=50, noise_sigma=0.05, seed=1)
    )
    dataset, _ = synth_generate(spec, hex_topology, seed=1)
    system = build_system(hex_topology)
    config = KfConfig(seed=5, max_iters=40, restarts=0)
    serial = fit_reference(system, dataset, "c0", config, workers=1)
    parallel = fit_reference(system, dataset, "c0", config, workers=2)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.trajectory.alpha, b.trajectory.alpha)
        np.testing.assert_array_equal(a.trajectory.beta, b.trajectory.beta)
        assert a.loglik == b.loglik
