"""Per-channel second-order equation system over the skeleton.

Every joint-angle channel gets one autoregressive equation: two lags of
the channel itself (the transitioning terms, coefficients ``alpha``),
plus lag-1 regressors drawn from four structural assumption families:

* ``H2``   -- the two sibling axes of the same joint;
* ``H3``   -- the same axis of the mirrored joint on the opposed limb;
* ``H4.1`` -- the same axis of serially linked joints (parent/children);
* ``H4.2`` -- the same axis of configured non-serial partner joints.

The second lag enters predictions with a minus sign; coefficients are
stored unsigned so that reported values read like the written equations:

    x_t = alpha1 * x_{t-1} - alpha2 * x_{t-2} + sum_i beta_i * r_i,{t-1}

The whole system can be evaluated in one shot from an (N, 2, N)
coefficient tensor ``A`` against the lag matrix ``X = [P_{t-1}; P_{t-2}]``:
entry ``A[i, 0, k]`` multiplies ``P_{k,t-1}``, entry ``A[i, 1, k]``
multiplies ``-P_{k,t-2}``, and equation ``i`` sums all of its entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import AXES, SkeletonTopology, TopologyError

#: Assumption tags carried by every regressor.
H2, H3, H4_SERIAL, H4_NONSERIAL = "H2", "H3", "H4.1", "H4.2"


@dataclass(frozen=True)
class AssumptionSet:
    """The regressor channels of one equation, grouped by assumption."""

    target: str
    h1_lags: tuple[int, int]
    h2_intra_joint: tuple[str, ...]
    h3_inter_limb: tuple[str, ...]
    h4_serial: tuple[str, ...]
    h4_nonserial: tuple[str, ...]

    def __post_init__(self):
        groups = (
            self.h2_intra_joint,
            self.h3_inter_limb,
            self.h4_serial,
            self.h4_nonserial,
        )
        flat = [c for g in groups for c in g]
        if len(set(flat)) != len(flat):
            raise ValueError(f"assumption sets of {self.target} overlap")
        if self.target in flat:
            raise ValueError(f"{self.target} cannot be its own lag-1 regressor")


@dataclass(frozen=True)
class GomEquation:
    """One channel's equation: target, ordered regressors, assumption tags."""

    target: str
    target_index: int
    regressors: tuple[str, ...]
    regressor_indices: tuple[int, ...]
    assumption_of: dict[str, str]

    @property
    def n_regressors(self) -> int:
        return len(self.regressors)

    @property
    def n_coefficients(self) -> int:
        return 2 + len(self.regressors)

    @property
    def coefficient_names(self) -> tuple[str, ...]:
        return (f"{self.target}@lag1", f"{self.target}@lag2") + self.regressors


@dataclass(frozen=True)
class GomSystem:
    """One equation per channel, in topology channel order."""

    topology: SkeletonTopology
    equations: tuple[GomEquation, ...]

    def __post_init__(self):
        if len(self.equations) != self.topology.n_channels:
            raise ValueError("system must hold exactly one equation per channel")

    @property
    def n_channels(self) -> int:
        return self.topology.n_channels

    def equation_for(self, channel: str) -> GomEquation:
        return self.equations[self.topology.channel_index(channel)]

    def support_mask(self) -> np.ndarray:
        """(N, 2, N) boolean mask of admissible coefficient-tensor entries."""
        n = self.n_channels
        mask = np.zeros((n, 2, n), dtype=bool)
        for eq in self.equations:
            i = eq.target_index
            mask[i, 0, i] = True
            mask[i, 1, i] = True
            for k in eq.regressor_indices:
                mask[i, 0, k] = True
        return mask


@dataclass(frozen=True)
class CoefficientTrajectory:
    """Time-varying coefficients of one equation with posterior variances.

    ``alpha`` is (T, 2), ``beta`` (T, n) and ``var`` (T, 2 + n); row ``t``
    parametrizes the prediction of frame ``t + 2`` of the training
    movement (two warm-up frames supply the lags).
    """

    target: str
    alpha: np.ndarray
    beta: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        beta = np.asarray(self.beta, dtype=float)
        if beta.size == 0:
            beta = np.zeros((alpha.shape[0], 0))
        beta = np.atleast_2d(beta)
        var = np.atleast_2d(np.asarray(self.var, dtype=float))
        if alpha.shape[1] != 2:
            raise ValueError("alpha must have two columns")
        if not (alpha.shape[0] == beta.shape[0] == var.shape[0]):
            raise ValueError("alpha/beta/var must share their length")
        if var.shape[1] != 2 + beta.shape[1]:
            raise ValueError("var must cover both alpha and beta slots")
        for name, arr in (("alpha", alpha), ("beta", beta), ("var", var)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in {name}")
        if (var < 0).any():
            raise ValueError("variances must be non-negative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "var", var)

    @property
    def n_steps(self) -> int:
        return self.alpha.shape[0]

    def coefficients(self) -> np.ndarray:
        """(T, 2 + n) matrix of alpha columns followed by beta columns."""
        return np.hstack([self.alpha, self.beta])


def build_assumptions(topology: SkeletonTopology, channel: str) -> AssumptionSet:
    """Derive the assumption sets of one channel from the topology."""
    joint = topology.joint_of(channel)
    axis = channel.rpartition(".")[2]

    h2 = tuple(f"{joint}.{a}" for a in AXES if a != axis)

    mirror = topology.mirror_of(joint)
    h3 = (f"{mirror}.{axis}",) if mirror is not None else ()

    serial_joints = []
    if topology.parent[joint] is not None:
        serial_joints.append(topology.parent[joint])
    serial_joints.extend(topology.children(joint))
    h4s = tuple(f"{j}.{axis}" for j in serial_joints)

    taken = set(h2) | set(h3) | set(h4s) | {channel}
    h4n = tuple(
        f"{j}.{axis}"
        for j in topology.nonserial[joint]
        if f"{j}.{axis}" not in taken
    )
    return AssumptionSet(
        target=channel,
        h1_lags=(1, 2),
        h2_intra_joint=h2,
        h3_inter_limb=h3,
        h4_serial=h4s,
        h4_nonserial=h4n,
    )


def build_equation(topology: SkeletonTopology, channel: str) -> GomEquation:
    """Build one channel's equation; regressors follow topology order."""
    if channel not in topology.channel_names:
        raise TopologyError(f"unknown channel {channel!r}")
    sets = build_assumptions(topology, channel)
    tag_of = {}
    for tag, group in (
        (H2, sets.h2_intra_joint),
        (H3, sets.h3_inter_limb),
        (H4_SERIAL, sets.h4_serial),
        (H4_NONSERIAL, sets.h4_nonserial),
    ):
        for c in group:
            tag_of[c] = tag
    ordered = tuple(c for c in topology.channel_names if c in tag_of)
    return GomEquation(
        target=channel,
        target_index=topology.channel_index(channel),
        regressors=ordered,
        regressor_indices=tuple(topology.channel_index(c) for c in ordered),
        assumption_of={c: tag_of[c] for c in ordered},
    )


def build_system(topology: SkeletonTopology) -> GomSystem:
    """One equation per channel of the topology."""
    equations = tuple(build_equation(topology, c) for c in topology.channel_names)
    return GomSystem(topology=topology, equations=equations)


def eval_equation(
    eq: GomEquation,
    alpha: np.ndarray,
    beta: np.ndarray,
    prev1: np.ndarray,
    prev2: np.ndarray,
) -> float:
    """Predict the target angle from the two previous posture frames.

    ``prev1``/``prev2`` are full posture frames (length N, topology
    order) at t-1 and t-2.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if alpha.shape != (2,):
        raise ValueError("alpha must hold exactly the two lag coefficients")
    if beta.shape[0] != eq.n_regressors:
        raise ValueError(
            f"expected {eq.n_regressors} regressor coefficients, got {beta.shape[0]}"
        )
    i = eq.target_index
    pred = alpha[0] * prev1[i] - alpha[1] * prev2[i]
    if beta.size:
        pred += float(beta @ prev1[np.asarray(eq.regressor_indices)])
    return float(pred)


def eval_system_matrix(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Evaluate all N equations at once from the coefficient tensor.

    Parameters
    ----------
    A : np.ndarray
        (N, 2, N) coefficient tensor; zero outside each equation's
        regressor support.
    X : np.ndarray
        (2, N) lag matrix, row 0 = P_{t-1}, row 1 = P_{t-2}.

    Returns
    -------
    np.ndarray
        Length-N predicted posture.
    """
    A = np.asarray(A, dtype=float)
    X = np.asarray(X, dtype=float)
    n = X.shape[-1] if X.ndim == 2 else -1
    if X.ndim != 2 or X.shape[0] != 2:
        raise ValueError("X must be a (2, N) lag matrix")
    if A.shape != (n, 2, n):
        raise ValueError(f"A must have shape ({n}, 2, {n}), got {A.shape}")
    signed = X * np.array([[1.0], [-1.0]])
    return np.einsum("iwk,wk->i", A, signed)


def trajectory_tensor(
    system: GomSystem, trajectories: dict[str, CoefficientTrajectory]
) -> np.ndarray:
    """Stack per-equation trajectories into a (T, N, 2, N) tensor."""
    n = system.n_channels
    lengths = {traj.n_steps for traj in trajectories.values()}
    if len(lengths) != 1:
        raise ValueError("all trajectories must share their length")
    steps = lengths.pop()
    A = np.zeros((steps, n, 2, n))
    for eq in system.equations:
        traj = trajectories.get(eq.target)
        if traj is None:
            raise ValueError(f"missing trajectory for channel {eq.target!r}")
        if traj.beta.shape[1] != eq.n_regressors:
            raise ValueError(f"trajectory of {eq.target!r} does not match its equation")
        i = eq.target_index
        A[:, i, 0, i] = traj.alpha[:, 0]
        A[:, i, 1, i] = traj.alpha[:, 1]
        idx = np.asarray(eq.regressor_indices, dtype=int)
        if idx.size:
            A[:, i, 0, idx] = traj.beta
    return A
