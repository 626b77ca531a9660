"""One-shot coefficient estimation with a Kalman filter inside an MLE loop.

Each equation is fitted on a single reference movement. The coefficient
vector (alpha, beta) is treated as the latent state of a linear-Gaussian
state-space model with random-walk dynamics (process variance ``q`` per
coefficient) and the regressor row as the observation matrix; the filter
yields the exact Gaussian predictive log-likelihood, which an outer
derivative-free optimizer maximizes over theta = (q, r). A
Rauch-Tung-Striebel pass smooths the reported trajectories.

The observation row carries the second lag negated, so stored
coefficients follow the unsigned convention of
:func:`gomkit.equations.eval_equation`.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .alignment import select_reference
from .equations import CoefficientTrajectory, GomEquation, GomSystem
from .motion import MovementDataset, PostureSequence

_LOG_BOUND = 60.0  # clip on log-parameters inside the objective
_PENALTY = 1e30


class FilterError(RuntimeError):
    """Raised when the Kalman recursion cannot proceed."""


@dataclass(frozen=True)
class KfConfig:
    """Tuning and optimizer settings for the one-shot trainer.

    ``process_noise_q`` and ``obs_noise_r`` are starting values for the
    optimized theta. The coefficient prior is N(mean, init_coeff_var * I)
    with mean zero except a persistence prior of 1 on the first lag.
    """

    process_noise_q: float = 1e-4
    obs_noise_r: float = 1.0
    init_coeff_var: float = 10.0
    init_coeff_mean: np.ndarray | None = None
    per_coeff_q: bool = False
    max_iters: int = 300
    tolerance: float = 1e-7
    restarts: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.process_noise_q <= 0 or self.obs_noise_r <= 0:
            raise ValueError("noise variances must be positive")
        if self.init_coeff_var <= 0:
            raise ValueError("init_coeff_var must be positive")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    def prior_mean(self, dim: int) -> np.ndarray:
        if self.init_coeff_mean is not None:
            m = np.asarray(self.init_coeff_mean, dtype=float)
            if m.shape != (dim,):
                raise ValueError(f"init_coeff_mean must have length {dim}")
            return m.copy()
        m = np.zeros(dim)
        m[0] = 1.0
        return m


@dataclass(frozen=True)
class KfResult:
    """Filter/smoother output for one equation at one theta."""

    loglik: float
    filtered_mean: np.ndarray  # (T, d)
    filtered_var: np.ndarray  # (T, d) diagonal of the filtered covariance
    smoothed_mean: np.ndarray  # (T, d)
    smoothed_var: np.ndarray  # (T, d)
    innovations: np.ndarray  # (T,) one-step prediction residuals
    innovation_var: np.ndarray  # (T,)

    def trajectory(self, eq: GomEquation, smoothed: bool = True) -> CoefficientTrajectory:
        mean = self.smoothed_mean if smoothed else self.filtered_mean
        var = self.smoothed_var if smoothed else self.filtered_var
        return CoefficientTrajectory(
            target=eq.target,
            alpha=mean[:, :2],
            beta=mean[:, 2:],
            var=np.maximum(var, 0.0),
        )


@dataclass(frozen=True)
class TrainedEquation:
    """A fitted equation: smoothed trajectory plus fit diagnostics."""

    equation: GomEquation
    trajectory: CoefficientTrajectory
    theta: tuple[float, float]
    loglik: float
    innovations: np.ndarray
    loglik_history: tuple[float, ...] = ()

    def __post_init__(self):
        if not np.isfinite(self.loglik):
            raise ValueError("loglik must be finite")
        if len(self.innovations) != self.trajectory.n_steps:
            raise ValueError("innovations length must match the trajectory")


def design_matrix(eq: GomEquation, seq: PostureSequence) -> tuple[np.ndarray, np.ndarray]:
    """Observations y and regressor rows H for one equation.

    Row t predicts frame t + 2:
    ``h_t = [x_{t+1}, -x_t, regressors at t+1]`` in sequence indices.
    """
    frames = seq.frames
    i = eq.target_index
    y = frames[2:, i]
    h = np.empty((len(y), eq.n_coefficients))
    h[:, 0] = frames[1:-1, i]
    h[:, 1] = -frames[:-2, i]
    if eq.n_regressors:
        h[:, 2:] = frames[1:-1][:, np.asarray(eq.regressor_indices)]
    return y, h


def _expand_q(theta_q, dim: int) -> np.ndarray:
    q = np.asarray(theta_q, dtype=float).reshape(-1)
    if q.shape == (1,):
        return np.full(dim, q[0])
    if q.shape != (dim,):
        raise ValueError(f"q must be scalar or length {dim}")
    return q


@njit(cache=True)
def _filter_core(y, h, q, r, m0, v0):
    t_steps, d = h.shape
    m = m0.copy()
    p = np.eye(d) * v0
    eye = np.eye(d)

    m_pred = np.empty((t_steps, d))
    p_pred = np.empty((t_steps, d, d))
    m_filt = np.empty((t_steps, d))
    p_filt = np.empty((t_steps, d, d))
    innovations = np.empty(t_steps)
    innovation_var = np.empty(t_steps)
    loglik = 0.0

    for t in range(t_steps):
        if t > 0:
            for i in range(d):
                p[i, i] += q[i]
        m_pred[t] = m
        p_pred[t] = p

        ht = h[t]
        ph = p @ ht
        s = ht @ ph + r
        if not np.isfinite(s) or s <= 0.0:
            return -np.inf, m_pred, p_pred, m_filt, p_filt, innovations, innovation_var, t
        v = y[t] - ht @ m
        k = ph / s
        m = m + k * v
        ikh = eye - np.outer(k, ht)
        p = ikh @ p @ ikh.T + np.outer(k, k) * r
        p = 0.5 * (p + p.T)

        m_filt[t] = m
        p_filt[t] = p
        innovations[t] = v
        innovation_var[t] = s
        loglik += -0.5 * (np.log(2.0 * np.pi * s) + v * v / s)

    return loglik, m_pred, p_pred, m_filt, p_filt, innovations, innovation_var, -1


@njit(cache=True)
def _rts_core(m_pred, p_pred, m_filt, p_filt):
    t_steps, d = m_filt.shape
    m_smooth = m_filt.copy()
    p_smooth = p_filt.copy()
    for t in range(t_steps - 2, -1, -1):
        gain = np.linalg.solve(p_pred[t + 1], p_filt[t]).T
        m_smooth[t] = m_filt[t] + gain @ (m_smooth[t + 1] - m_pred[t + 1])
        p_smooth[t] = p_filt[t] + gain @ (p_smooth[t + 1] - p_pred[t + 1]) @ gain.T
    return m_smooth, p_smooth


def kf_filter(
    eq: GomEquation,
    seq: PostureSequence,
    theta: tuple,
    config: KfConfig = KfConfig(),
) -> KfResult:
    """Run the coefficient filter and RTS smoother at a fixed theta.

    ``theta`` is ``(q, r)`` with scalar q (or a length-d vector when the
    per-coefficient flag is in use).
    """
    q_raw, r = theta
    d = eq.n_coefficients
    q = _expand_q(q_raw, d)
    if np.any(q <= 0) or r <= 0:
        raise ValueError("theta components must be positive")
    y, h = design_matrix(eq, seq)

    loglik, m_pred, p_pred, m_filt, p_filt, innovations, innovation_var, bad = (
        _filter_core(y, h, q, float(r), config.prior_mean(d), config.init_coeff_var)
    )
    if bad >= 0:
        raise FilterError(f"singular innovation variance at step {bad}")
    m_smooth, p_smooth = _rts_core(m_pred, p_pred, m_filt, p_filt)

    return KfResult(
        loglik=float(loglik),
        filtered_mean=m_filt,
        filtered_var=np.einsum("tii->ti", p_filt).copy(),
        smoothed_mean=m_smooth,
        smoothed_var=np.maximum(np.einsum("tii->ti", p_smooth), 0.0),
        innovations=innovations,
        innovation_var=innovation_var,
    )


def _start_points(config: KfConfig, n_q: int) -> list[np.ndarray]:
    base = np.concatenate(
        [np.full(n_q, np.log(config.process_noise_q)), [np.log(config.obs_noise_r)]]
    )
    starts = [base]
    rng = np.random.default_rng(config.seed)
    scales = [-4.0, 4.0, -8.0]
    for k in range(config.restarts):
        shift = scales[k % len(scales)]
        starts.append(base + shift + rng.normal(0.0, 1.0, size=base.shape))
    return starts


def mle_fit(eq: GomEquation, seq: PostureSequence, config: KfConfig = KfConfig()) -> TrainedEquation:
    """Maximize the filter log-likelihood over theta = (q, r).

    Nelder-Mead in log-parameter space with deterministic restarts; the
    best-so-far log-likelihood sequence is recorded and non-decreasing.
    """
    n_q = eq.n_coefficients if config.per_coeff_q else 1
    history: list[float] = []

    def objective(log_params: np.ndarray) -> float:
        log_params = np.clip(log_params, -_LOG_BOUND, _LOG_BOUND)
        q = np.exp(log_params[:n_q])
        r = float(np.exp(log_params[-1]))
        try:
            result = kf_filter(eq, seq, (q if n_q > 1 else float(q[0]), r), config)
        except FilterError:
            return _PENALTY
        if not np.isfinite(result.loglik):
            return _PENALTY
        if not history or result.loglik > history[-1]:
            history.append(result.loglik)
        return -result.loglik

    best_x, best_f = None, np.inf
    for x0 in _start_points(config, n_q):
        res = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": config.max_iters,
                "xatol": config.tolerance,
                "fatol": config.tolerance,
                "adaptive": n_q > 1,
            },
        )
        if res.fun < best_f:
            best_f, best_x = res.fun, res.x
    if best_x is None or best_f >= _PENALTY:
        raise FilterError(f"no finite log-likelihood found for {eq.target!r}")

    best_x = np.clip(best_x, -_LOG_BOUND, _LOG_BOUND)
    q = np.exp(best_x[:n_q])
    r = float(np.exp(best_x[-1]))
    theta = (q if n_q > 1 else float(q[0]), r)
    result = kf_filter(eq, seq, theta, config)
    return TrainedEquation(
        equation=eq,
        trajectory=result.trajectory(eq),
        theta=theta,
        loglik=result.loglik,
        innovations=result.innovations,
        loglik_history=tuple(history),
    )


def _equation_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _fit_one(args) -> TrainedEquation:
    eq, seq, config = args
    return mle_fit(eq, seq, config)


def fit_reference(
    system: GomSystem,
    dataset: MovementDataset,
    class_label: str,
    config: KfConfig = KfConfig(),
    workers: int | None = None,
) -> list[TrainedEquation]:
    """Fit every equation of the system on the class's DTW medoid.

    Equation fits are independent; ``workers`` > 1 fans them out over
    processes (default from ``GOMKIT_WORKERS``). Results are returned in
    topology order and do not depend on scheduling.
    """
    if workers is None:
        workers = int(os.environ.get("GOMKIT_WORKERS", "1"))
    reference = select_reference(dataset, class_label)
    jobs = [
        (eq, reference, replace(config, seed=_equation_seed(config.seed, i)))
        for i, eq in enumerate(system.equations)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_fit_one, jobs))
    return [_fit_one(job) for job in jobs]
