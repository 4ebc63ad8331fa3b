"""Convex solution sets and weighted projections onto them.

Per-problem sets are boxes; joint structures couple the problems: none
(independent), full or prefix parameter sharing, or the r-bounded hemimetric
polytope over ordered item pairs.  Projections minimize the diagonally
weighted squared distance (w - wtilde)' Q (w - wtilde) and certify their
accuracy through a duality gap.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .core import JointWeights, num_pairs

FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class BoxSet:
    """Axis-aligned box [lower, upper] in R^d."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.atleast_1d(np.asarray(self.lower, dtype=float)))
        object.__setattr__(self, "upper", np.atleast_1d(np.asarray(self.upper, dtype=float)))
        if self.lower.shape != self.upper.shape:
            raise ValueError("box lower/upper dimension mismatch")
        if np.any(self.lower > self.upper):
            raise ValueError("box is empty: lower > upper somewhere")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @classmethod
    def interval(cls, lo: float, hi: float, dim: int = 1) -> "BoxSet":
        return cls(np.full(dim, float(lo)), np.full(dim, float(hi)))

    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, w: np.ndarray, tol: float = FEASIBILITY_TOL) -> bool:
        w = np.asarray(w, dtype=float)
        return bool(np.all(w >= self.lower - tol) and np.all(w <= self.upper + tol))


def project_box(w: np.ndarray, box: BoxSet) -> np.ndarray:
    """Componentwise clamp: the unique Euclidean projection onto a box."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if w.shape[-1] != box.dim:
        raise ValueError(f"dimension mismatch: point has {w.shape[-1]}, box has {box.dim}")
    return np.clip(w, box.lower, box.upper)


@dataclass(frozen=True)
class DiagonalWeight:
    """Diagonal of the dK x dK projection weight matrix, one weight per problem
    repeated d times (sqrt of the observation count in the learning loop)."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", np.asarray(self.entries, dtype=float).reshape(-1))
        if np.any(self.entries < 0):
            raise ValueError("projection weights must be nonnegative")

    @classmethod
    def from_counts(cls, tau: np.ndarray, dim: int = 1) -> "DiagonalWeight":
        tau = np.asarray(tau, dtype=float)
        if np.any(tau < 0):
            raise ValueError("observation counts must be nonnegative")
        return cls(np.repeat(np.sqrt(tau), dim))

    @classmethod
    def identity(cls, num_problems: int, dim: int = 1) -> "DiagonalWeight":
        return cls(np.ones(num_problems * dim))

    def block_weights(self, num_problems: int, dim: int) -> np.ndarray:
        """Per-problem scalar weights; entries must be constant within blocks."""
        blocks = self.entries.reshape(num_problems, dim)
        if dim > 1 and np.any(blocks.max(axis=1) - blocks.min(axis=1) > 0):
            raise ValueError("weight entries must be constant within each problem block")
        return blocks[:, 0]


class StructureKind(Enum):
    INDEPENDENT = "independent"
    SHARED = "shared"
    SHARED_PREFIX = "shared_prefix"
    HEMIMETRIC = "hemimetric"


@dataclass(frozen=True)
class JointStructure:
    """Joint solution set over K problems with a common per-problem box."""

    kind: StructureKind
    per_problem_box: BoxSet
    num_problems: int
    dim: int = 1
    shared_prefix_len: int = 0
    n_items: int = 0
    r: float = 0.0

    def __post_init__(self):
        if self.per_problem_box.dim != self.dim:
            raise ValueError("box dimension must match weight dimension")
        if self.kind is StructureKind.SHARED_PREFIX:
            if not (1 <= self.shared_prefix_len <= self.dim):
                raise ValueError(
                    f"shared prefix length {self.shared_prefix_len} out of [1, {self.dim}]"
                )
        if self.kind is StructureKind.HEMIMETRIC:
            if self.dim != 1:
                raise ValueError("hemimetric structure requires d = 1")
            if self.r <= 0:
                raise ValueError(f"hemimetric bound r must be > 0, got {self.r}")
            if self.num_problems != num_pairs(self.n_items):
                raise ValueError(
                    f"hemimetric needs K = n^2 - n: K={self.num_problems}, n={self.n_items}"
                )

    @classmethod
    def independent(cls, box: BoxSet, num_problems: int) -> "JointStructure":
        return cls(StructureKind.INDEPENDENT, box, num_problems, box.dim)

    @classmethod
    def shared(cls, box: BoxSet, num_problems: int) -> "JointStructure":
        return cls(StructureKind.SHARED, box, num_problems, box.dim)

    @classmethod
    def shared_prefix(cls, box: BoxSet, num_problems: int, prefix_len: int) -> "JointStructure":
        return cls(StructureKind.SHARED_PREFIX, box, num_problems, box.dim, prefix_len)

    @classmethod
    def hemimetric(cls, n_items: int, r: float) -> "JointStructure":
        box = BoxSet.interval(0.0, r)
        return cls(
            StructureKind.HEMIMETRIC, box, num_pairs(n_items), 1, 0, n_items, float(r)
        )


@dataclass
class ProjectionResult:
    """Feasible point plus the accuracy certificate of the projection."""

    point: JointWeights
    duality_gap: float
    iterations: int
    wall_time: float
    exact: bool


def set_norm(structure: JointStructure) -> float:
    """Per-problem set norm: Euclidean length of the box diagonal.

    This is the quantity that scales learning-rate and accuracy schedules.
    """
    diag = structure.per_problem_box.upper - structure.per_problem_box.lower
    if not np.all(np.isfinite(diag)):
        raise ValueError("set norm undefined for unbounded boxes")
    return float(np.linalg.norm(diag))


def is_feasible(w: JointWeights, structure: JointStructure, tol: float = FEASIBILITY_TOL) -> bool:
    """Membership test for the joint structure within an absolute tolerance."""
    vals = w.per_problem
    if vals.shape != (structure.num_problems, structure.dim):
        return False
    box = structure.per_problem_box
    if np.any(vals < box.lower - tol) or np.any(vals > box.upper + tol):
        return False
    if structure.kind is StructureKind.SHARED:
        return bool(np.max(np.abs(vals - vals[0])) <= tol)
    if structure.kind is StructureKind.SHARED_PREFIX:
        prefix = vals[:, : structure.shared_prefix_len]
        return bool(np.max(np.abs(prefix - prefix[0])) <= tol)
    if structure.kind is StructureKind.HEMIMETRIC:
        from . import hemimetric

        m = hemimetric.matrix_from_weights(w, structure.n_items)
        return hemimetric.satisfies_triangles(m, tol)
    return True


def weighted_project(
    wtilde: JointWeights,
    Q: DiagonalWeight,
    structure: JointStructure,
    accuracy: float = 0.0,
    max_sweeps: int = 1000,
) -> ProjectionResult:
    """Projection onto the joint structure in the Q-weighted squared norm.

    Minimizes (w - wtilde)' Q (w - wtilde) over the structure and returns a
    feasible point whose objective is within `accuracy` of the minimum,
    certified by the reported duality gap.  accuracy 0 requests an exact
    solve (gap driven below 1e-9).

    Problems with weight 0 carry no objective and are completed feasibly:
    snapped to the consensus for shared structures, clamped for independent
    ones, and repaired values for the hemimetric polytope.
    """
    if accuracy < 0:
        raise ValueError(f"accuracy must be >= 0, got {accuracy}")
    K, d = structure.num_problems, structure.dim
    vals = wtilde.per_problem
    if vals.shape != (K, d):
        raise ValueError(f"weights shape {vals.shape} does not match structure ({K}, {d})")
    bw = Q.block_weights(K, d)
    if bw.max() <= 0.0:
        raise ValueError("projection weights are zero on all blocks")

    start = time.perf_counter()
    box = structure.per_problem_box

    if structure.kind is StructureKind.INDEPENDENT:
        point = np.clip(vals, box.lower, box.upper)
        return ProjectionResult(JointWeights(point), 0.0, 0, time.perf_counter() - start, True)

    if structure.kind in (StructureKind.SHARED, StructureKind.SHARED_PREFIX):
        prefix = d if structure.kind is StructureKind.SHARED else structure.shared_prefix_len
        consensus = np.clip(
            bw @ vals[:, :prefix] / bw.sum(), box.lower[:prefix], box.upper[:prefix]
        )
        point = np.clip(vals, box.lower, box.upper)
        point[:, :prefix] = consensus
        return ProjectionResult(JointWeights(point), 0.0, 0, time.perf_counter() - start, True)

    # hemimetric polytope: delegate to the triangle-fixing solver
    from . import hemimetric

    target = hemimetric.matrix_from_weights(wtilde, structure.n_items)
    pair_weights = hemimetric.matrix_from_pair_values(bw, structure.n_items)
    report = hemimetric.project_hemimetric(
        target,
        pair_weights,
        structure.r,
        gap_tolerance=accuracy,
        max_sweeps=max_sweeps,
    )
    point = hemimetric.weights_from_matrix(report.primal.values, structure.n_items)
    wall = time.perf_counter() - start
    return ProjectionResult(point, report.gap, report.sweeps, wall, report.gap <= 1e-9)
