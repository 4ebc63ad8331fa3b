"""Loss functions, gradients, and regret accounting shared by learners and environments.

The incentive protocol: the platform offers a discount p for switching items,
the user accepts iff p >= c where c is their private cost.  The true loss of
an offer is the overpayment on acceptance or the forfeited value on rejection;
the convex surrogate replaces the rejection penalty with a linear ramp of
slope u/delta so that subgradients exist everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np


class LossKind(Enum):
    TRUE_INCENTIVE = "true_incentive"
    CONVEX_SURROGATE = "convex_surrogate"


@dataclass(frozen=True)
class LossSpec:
    """Loss family plus its parameters.

    u is the platform's utility gain from an accepted switch (currency units),
    delta sets the rejection slope u/delta of the convex surrogate.
    """

    kind: LossKind = LossKind.CONVEX_SURROGATE
    u: float = 40.0
    delta: float = 20.0

    def __post_init__(self):
        if not (self.u >= 0.0):
            raise ValueError(f"u must be >= 0, got {self.u}")
        if not (self.delta > 0.0):
            raise ValueError(f"delta must be > 0, got {self.delta}")

    @property
    def gradient_bound(self) -> float:
        """Largest subgradient magnitude of the surrogate: max(1, u/delta)."""
        return max(1.0, self.u / self.delta)

    def loss(self, p: float, c: float) -> float:
        if self.kind is LossKind.TRUE_INCENTIVE:
            return true_loss(p, c, self.u)
        return surrogate_loss(p, c, self.u, self.delta)


@dataclass(frozen=True)
class ProblemId:
    """Index of one learning problem (one ordered item pair in pair worlds)."""

    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"problem index must be nonnegative, got {self.index}")


def num_pairs(n: int) -> int:
    """Number of ordered item pairs: n^2 - n."""
    return n * n - n


def pair_to_id(i: int, j: int, n: int) -> int:
    """Bijection from ordered pair (i, j), i != j, onto [0, n^2 - n)."""
    if i == j:
        raise ValueError("pair requires i != j")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"pair ({i}, {j}) out of range for n={n}")
    return i * (n - 1) + (j if j < i else j - 1)


def id_to_pair(z: int, n: int) -> tuple[int, int]:
    """Inverse of pair_to_id."""
    if not (0 <= z < num_pairs(n)):
        raise ValueError(f"problem id {z} out of range for n={n}")
    i, rem = divmod(z, n - 1)
    j = rem if rem < i else rem + 1
    return i, j


@dataclass
class JointWeights:
    """Concatenation of the K per-problem weight vectors, shape (K, d)."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))

    @property
    def num_problems(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def per_problem(self) -> np.ndarray:
        return self.values

    def flat(self) -> np.ndarray:
        """The dK concatenated vector."""
        return self.values.reshape(-1)

    def copy(self) -> "JointWeights":
        return JointWeights(self.values.copy())

    @classmethod
    def constant(cls, value: float, num_problems: int, dim: int = 1) -> "JointWeights":
        return cls(np.full((num_problems, dim), float(value)))


def _check_finite(**vals: float) -> None:
    for name, v in vals.items():
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v}")


def true_loss(p: float, c: float, u: float) -> float:
    """Realized incentive loss of offer p against private cost c.

    Accepted offers (p >= c) lose the overpayment p - c; rejected offers lose
    the forfeited value u - c.  When u < c no beneficial switch exists and the
    loss is defined as 0.
    """
    _check_finite(p=p, c=c, u=u)
    if u < c:
        return 0.0
    if p >= c:
        return p - c
    return u - c


def surrogate_loss(p: float, c: float, u: float, delta: float) -> float:
    """Piecewise-linear convex stand-in for the true loss.

    (p - c) on acceptance, (u/delta) * (c - p) on rejection.  Convex in p with
    minimum 0 at p = c.
    """
    _check_finite(p=p, c=c, u=u, delta=delta)
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    if p >= c:
        return p - c
    return (u / delta) * (c - p)


def surrogate_gradient(p: float, c: float, u: float, delta: float) -> float:
    """Subgradient of the surrogate in p: +1 on acceptance, -u/delta on rejection.

    At the kink p = c the accept-side slope +1 is returned, consistent with the
    inclusive acceptance rule.
    """
    _check_finite(p=p, c=c, u=u, delta=delta)
    if delta <= 0:
        raise ValueError(f"delta must be > 0, got {delta}")
    if p >= c:
        return 1.0
    return -u / delta


def utility_gain(accepted: bool, p: float, u: float) -> float:
    """Platform's net benefit: u - p on an accepted offer, 0 otherwise."""
    return (u - p) if accepted else 0.0


@dataclass
class RoundRecord:
    """Everything observable about one round of the learning loop."""

    t: int
    problem: ProblemId
    prediction: float
    cost: float
    accepted: bool
    true_loss: float
    surrogate_loss: float
    utility_gain: float
    projected: bool = False
    duality_gap: float = 0.0
    projection_wall_time: float = 0.0


def cumulative_regret(
    records: Sequence[RoundRecord],
    competitor: JointWeights,
    loss: LossSpec,
    structure=None,
) -> np.ndarray:
    """Prefix sums of per-round loss differences against a fixed competitor.

    Only defined for d = 1 (unit features), where the competitor's per-problem
    weight is its prediction.  When a structure is given, competitor
    feasibility is validated first.
    """
    from . import constraints  # deferred to keep core import-light

    if competitor.dim != 1:
        raise ValueError("regret recomputation from records requires d = 1")
    if structure is not None and not constraints.is_feasible(competitor, structure, 1e-9):
        raise ValueError("competitor is not feasible in the joint structure")
    diffs = np.empty(len(records))
    for idx, rec in enumerate(records):
        p_comp = float(competitor.values[rec.problem.index, 0])
        diffs[idx] = loss.loss(rec.prediction, rec.cost) - loss.loss(p_comp, rec.cost)
    return np.cumsum(diffs)
