"""Synthetic environments: clustered pairwise-cost worlds and the
incentivized-exploration market.

Both worlds serve one ordered item pair per round together with the user's
private cost for that switch.  Costs are the ground-truth pairwise values
(deterministic) or fresh draws from a per-pair-type truncated normal
(stochastic market).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .core import JointWeights, ProblemId, id_to_pair, num_pairs, pair_to_id
from .constraints import JointStructure
from .hemimetric import HemimetricMatrix, weights_from_matrix


class OrderingKind(Enum):
    RANDOM = "random"
    BATCH = "batch"
    SINGLE = "single"


@dataclass(frozen=True)
class OrderingPolicy:
    """How problem instances arrive: uniform per round, uniform batches of a
    fixed size, or one fixed problem every round."""

    kind: OrderingKind = OrderingKind.RANDOM
    batch_size: int = 1
    problem: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")

    @classmethod
    def random(cls) -> "OrderingPolicy":
        return cls(OrderingKind.RANDOM)

    @classmethod
    def batch(cls, batch_size: int) -> "OrderingPolicy":
        return cls(OrderingKind.BATCH, batch_size=batch_size)

    @classmethod
    def single(cls, problem: int) -> "OrderingPolicy":
        return cls(OrderingKind.SINGLE, problem=problem)


def respond(p: float, c: float) -> bool:
    """User decision: accept iff the offer covers the private cost."""
    return p >= c


@dataclass
class HemimetricWorld:
    """Two equal clusters of items; switching costs depend only on whether the
    pair crosses the cluster boundary."""

    n: int = 10
    intra: float = 1.0
    inter: float = 9.0
    r: float = 10.0

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 2, got {self.n}")
        self.clusters = np.array([0] * (self.n // 2) + [1] * (self.n // 2))
        same = self.clusters[:, None] == self.clusters[None, :]
        values = np.where(same, self.intra, self.inter)
        np.fill_diagonal(values, 0.0)
        # raises if the clustered costs do not form an r-bounded hemimetric
        self.ground_truth = HemimetricMatrix(self.n, values, self.r)

    @property
    def num_problems(self) -> int:
        return num_pairs(self.n)

    def structure(self) -> JointStructure:
        return JointStructure.hemimetric(self.n, self.r)

    def ground_truth_weights(self) -> JointWeights:
        return weights_from_matrix(self.ground_truth.values, self.n)


class PairEnvironment:
    """Serves (problem, features, cost) rounds for a pairwise-cost world.

    Deterministic given the seed; features are the unit scalar (d = 1).  Costs
    are ground-truth values unless a cost sampler is installed.
    """

    def __init__(
        self,
        world,
        ordering: OrderingPolicy,
        seed: int = 0,
        eligible_problems: Optional[np.ndarray] = None,
        cost_sampler=None,
    ):
        self.world = world
        self.ordering = ordering
        self.rng = np.random.default_rng(seed)
        self.cost_sampler = cost_sampler
        if eligible_problems is None:
            eligible_problems = np.arange(world.num_problems)
        self.eligible = np.asarray(eligible_problems, dtype=np.int64)
        if self.eligible.size == 0:
            raise ValueError("no eligible problems")
        if ordering.kind is OrderingKind.SINGLE and not (
            0 <= ordering.problem < world.num_problems
        ):
            raise ValueError(f"single-problem ordering out of range: {ordering.problem}")
        self._batch_problem = -1
        self._batch_left = 0

    def ground_truth_weights(self) -> JointWeights:
        return self.world.ground_truth_weights()

    def _next_problem(self) -> int:
        kind = self.ordering.kind
        if kind is OrderingKind.SINGLE:
            return self.ordering.problem
        if kind is OrderingKind.RANDOM:
            return int(self.eligible[self.rng.integers(self.eligible.size)])
        if self._batch_left == 0:
            self._batch_problem = int(self.eligible[self.rng.integers(self.eligible.size)])
            self._batch_left = self.ordering.batch_size
        self._batch_left -= 1
        return self._batch_problem

    def next_round(self, t: int) -> tuple[ProblemId, np.ndarray, float]:
        z = self._next_problem()
        i, j = id_to_pair(z, self.world.n)
        if self.cost_sampler is None:
            cost = float(self.world.ground_truth.values[i, j])
        else:
            cost = float(self.cost_sampler(i, j, self.rng))
        return ProblemId(z), np.ones(1), cost


class CostModel(Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


#: per (group_i, group_j) mean private cost; group 0 is frequently reviewed
DEFAULT_PAIR_MEANS = {
    (0, 1): 29.5,  # frequently -> infrequently reviewed
    (1, 1): 28.1,
    (0, 0): 25.4,
    (1, 0): 25.9,
}


@dataclass
class MarketScenario:
    """Incentive market over n items split into two review-frequency groups."""

    n_items: int = 20
    u: float = 40.0
    delta: float = 20.0
    r: float = 40.0
    cost_model: CostModel = CostModel.DETERMINISTIC
    pair_means: dict = field(default_factory=lambda: dict(DEFAULT_PAIR_MEANS))
    cost_sd: float = 8.0
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.u, self.delta, self.r) <= 0:
            raise ValueError("u, delta, and r must all be > 0")
        if self.n_items < 2 or self.n_items % 2 != 0:
            raise ValueError(f"n_items must be even and >= 2, got {self.n_items}")
        self.groups = np.array([0] * (self.n_items // 2) + [1] * (self.n_items // 2))
        values = np.zeros((self.n_items, self.n_items))
        for i in range(self.n_items):
            for j in range(self.n_items):
                if i != j:
                    values[i, j] = self.pair_means[(self.groups[i], self.groups[j])]
        self.ground_truth = HemimetricMatrix(self.n_items, values, self.r)

    @property
    def n(self) -> int:
        return self.n_items

    @property
    def num_problems(self) -> int:
        return num_pairs(self.n_items)

    def structure(self) -> JointStructure:
        return JointStructure.hemimetric(self.n_items, self.r)

    def ground_truth_weights(self) -> JointWeights:
        return weights_from_matrix(self.ground_truth.values, self.n_items)

    def explore_problems(self) -> np.ndarray:
        """Problems whose switch goes from the frequently to the infrequently
        reviewed group (the exploration offers of interest)."""
        ids = [
            pair_to_id(i, j, self.n_items)
            for i in range(self.n_items)
            for j in range(self.n_items)
            if i != j and self.groups[i] == 0 and self.groups[j] == 1
        ]
        return np.asarray(ids, dtype=np.int64)

    def _sample_cost(self, i: int, j: int, rng: np.random.Generator) -> float:
        mean = self.ground_truth.values[i, j]
        return float(np.clip(rng.normal(mean, self.cost_sd), 0.0, self.r))

    def environment(
        self,
        ordering: Optional[OrderingPolicy] = None,
        seed: Optional[int] = None,
        explore_only: bool = True,
    ) -> PairEnvironment:
        sampler = self._sample_cost if self.cost_model is CostModel.STOCHASTIC else None
        return PairEnvironment(
            self,
            ordering or OrderingPolicy.random(),
            seed=self.rng_seed if seed is None else seed,
            eligible_problems=self.explore_problems() if explore_only else None,
            cost_sampler=sampler,
        )


def calibration_targets(
    scenario: MarketScenario,
    offer: float = 35.6,
    num_draws: int = 20000,
    seed: int = 0,
) -> dict:
    """Simulated acceptance rates and mean accepted costs per pair type at a
    fixed offer.  A sanity summary for eyeballing against survey-style
    statistics, not an acceptance gate."""
    rng = np.random.default_rng(seed)
    out = {}
    for (gi, gj), mean in scenario.pair_means.items():
        if scenario.cost_model is CostModel.DETERMINISTIC:
            costs = np.full(num_draws, mean)
        else:
            costs = np.clip(rng.normal(mean, scenario.cost_sd, num_draws), 0.0, scenario.r)
        accepted = offer >= costs
        out[(gi, gj)] = {
            "acceptance_rate": float(accepted.mean()),
            "mean_accepted_cost": float(costs[accepted].mean()) if accepted.any() else float("nan"),
        }
    return out
