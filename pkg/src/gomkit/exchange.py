"""Versioned coefficient-exchange file shared across trainers.

A JSON container holding, per equation, the regressor list with
assumption tags and the T x (2 + n) coefficient matrix, optionally with
posterior variances and fit diagnostics. Any coefficient producer (the
Kalman trainer here, external deep trainers elsewhere) writes this
format; generation, analysis, and tolerance tooling consume it. The
``version`` field is mandatory and checked on import.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .equations import CoefficientTrajectory, build_equation
from .kalman import TrainedEquation
from .topology import SkeletonTopology

FORMAT_NAME = "gom-coefficients"
FORMAT_VERSION = 1


class ExchangeFormatError(ValueError):
    """Raised for unreadable or version-mismatched exchange files."""


@dataclass(frozen=True)
class EquationCoefficients:
    """One equation's stored coefficients, as read from an exchange file."""

    target: str
    regressors: tuple[str, ...]
    assumptions: tuple[str, ...]
    alpha: np.ndarray  # (T, 2)
    beta: np.ndarray  # (T, n)
    var: np.ndarray | None  # (T, 2 + n) or None
    theta: tuple[float, float] | None = None
    loglik: float | None = None

    def trajectory(self) -> CoefficientTrajectory:
        var = self.var
        if var is None:
            var = np.zeros((self.alpha.shape[0], 2 + self.beta.shape[1]))
        return CoefficientTrajectory(
            target=self.target, alpha=self.alpha, beta=self.beta, var=var
        )


@dataclass(frozen=True)
class CoefficientBundle:
    channel_names: tuple[str, ...]
    equations: tuple[EquationCoefficients, ...]
    frame_rate_hz: float = 90.0
    class_label: str = ""

    def by_target(self) -> dict[str, EquationCoefficients]:
        return {eq.target: eq for eq in self.equations}

    @property
    def n_steps(self) -> int:
        return self.equations[0].alpha.shape[0]

    def tensor(self) -> np.ndarray:
        """(T, N, 2, N) coefficient tensor in channel order."""
        index = {c: i for i, c in enumerate(self.channel_names)}
        steps = {eq.alpha.shape[0] for eq in self.equations}
        if len(steps) != 1:
            raise ExchangeFormatError("equations disagree on trajectory length")
        t = steps.pop()
        n = len(self.channel_names)
        if {eq.target for eq in self.equations} != set(self.channel_names):
            raise ExchangeFormatError("bundle must cover every channel exactly once")
        tensor = np.zeros((t, n, 2, n))
        for eq in self.equations:
            i = index[eq.target]
            tensor[:, i, 0, i] = eq.alpha[:, 0]
            tensor[:, i, 1, i] = eq.alpha[:, 1]
            for j, reg in enumerate(eq.regressors):
                tensor[:, i, 0, index[reg]] = eq.beta[:, j]
        return tensor


def bundle_from_trained(
    trained: list[TrainedEquation],
    channel_names,
    frame_rate_hz: float = 90.0,
    class_label: str = "",
) -> CoefficientBundle:
    equations = []
    for t in trained:
        eq = t.equation
        equations.append(
            EquationCoefficients(
                target=eq.target,
                regressors=eq.regressors,
                assumptions=tuple(eq.assumption_of[r] for r in eq.regressors),
                alpha=t.trajectory.alpha,
                beta=t.trajectory.beta,
                var=t.trajectory.var,
                theta=(float(np.mean(t.theta[0])), float(t.theta[1])),
                loglik=t.loglik,
            )
        )
    return CoefficientBundle(
        channel_names=tuple(channel_names),
        equations=tuple(equations),
        frame_rate_hz=frame_rate_hz,
        class_label=class_label,
    )


def _rounded(arr: np.ndarray) -> list:
    return np.asarray(arr, dtype=float).tolist()


def save_bundle(bundle: CoefficientBundle, path) -> None:
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "channel_names": list(bundle.channel_names),
        "frame_rate_hz": bundle.frame_rate_hz,
        "class_label": bundle.class_label,
        "equations": [
            {
                "target": eq.target,
                "regressors": [
                    {"channel": c, "assumption": a}
                    for c, a in zip(eq.regressors, eq.assumptions)
                ],
                "alpha": _rounded(eq.alpha),
                "beta": _rounded(eq.beta),
                "var": None if eq.var is None else _rounded(eq.var),
                "theta": None if eq.theta is None else list(eq.theta),
                "loglik": eq.loglik,
            }
            for eq in bundle.equations
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_bundle(path) -> CoefficientBundle:
    """Read and validate an exchange file; checks format and version."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ExchangeFormatError(f"{path}: not valid JSON ({exc})") from None
    if doc.get("format") != FORMAT_NAME:
        raise ExchangeFormatError(f"{path}: not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ExchangeFormatError(
            f"{path}: unsupported version {doc.get('version')!r}, "
            f"expected {FORMAT_VERSION}"
        )
    channel_names = tuple(doc["channel_names"])
    equations = []
    for edoc in doc["equations"]:
        regs = tuple(r["channel"] for r in edoc["regressors"])
        tags = tuple(r["assumption"] for r in edoc["regressors"])
        alpha = np.asarray(edoc["alpha"], dtype=float)
        steps = alpha.shape[0]
        beta = np.asarray(edoc["beta"], dtype=float).reshape(steps, len(regs))
        var = edoc.get("var")
        equations.append(
            EquationCoefficients(
                target=edoc["target"],
                regressors=regs,
                assumptions=tags,
                alpha=alpha,
                beta=beta,
                var=None if var is None else np.asarray(var, dtype=float),
                theta=None if edoc.get("theta") is None else tuple(edoc["theta"]),
                loglik=edoc.get("loglik"),
            )
        )
    for eq in equations:
        unknown = [c for c in (eq.target,) + eq.regressors if c not in channel_names]
        if unknown:
            raise ExchangeFormatError(f"{path}: unknown channel {unknown[0]!r}")
    return CoefficientBundle(
        channel_names=channel_names,
        equations=tuple(equations),
        frame_rate_hz=float(doc.get("frame_rate_hz", 90.0)),
        class_label=doc.get("class_label", ""),
    )


def validate_against_topology(bundle: CoefficientBundle, topology: SkeletonTopology) -> None:
    """Check that the bundle matches the topology's equation structure."""
    if bundle.channel_names != topology.channel_names:
        raise ExchangeFormatError("bundle channel order does not match the topology")
    for eq in bundle.equations:
        built = build_equation(topology, eq.target)
        if eq.regressors != built.regressors:
            raise ExchangeFormatError(
                f"{eq.target}: regressors {list(eq.regressors)} do not match "
                f"the topology's equation {list(built.regressors)}"
            )
        expected_tags = tuple(built.assumption_of[r] for r in built.regressors)
        if eq.assumptions != expected_tags:
            raise ExchangeFormatError(f"{eq.target}: assumption tags do not match")


def one_step_predictions(bundle: CoefficientBundle, frames: np.ndarray) -> np.ndarray:
    """Teacher-forced predictions of frames 3..T from true lag frames.

    Returns a (T - 2, N) matrix; row t predicts frame t + 2. The
    coefficient schedule is held at its last row if shorter than needed.
    """
    from .equations import eval_system_matrix

    frames = np.asarray(frames, dtype=float)
    tensor = bundle.tensor()
    last = tensor.shape[0] - 1
    out = np.empty((frames.shape[0] - 2, frames.shape[1]))
    for t in range(2, frames.shape[0]):
        a_t = tensor[min(t - 2, last)]
        out[t - 2] = eval_system_matrix(a_t, np.stack([frames[t - 1], frames[t - 2]]))
    return out
