"""Coordinated online learning with weighted, sporadic, and approximate
projections onto joint convex structures."""

from .core import (
    JointWeights,
    LossKind,
    LossSpec,
    ProblemId,
    RoundRecord,
    cumulative_regret,
    id_to_pair,
    num_pairs,
    pair_to_id,
    surrogate_gradient,
    surrogate_loss,
    true_loss,
    utility_gain,
)
from .constraints import (
    BoxSet,
    DiagonalWeight,
    JointStructure,
    ProjectionResult,
    StructureKind,
    is_feasible,
    project_box,
    set_norm,
    weighted_project,
)
from .hemimetric import (
    HemimetricMatrix,
    SolverReport,
    TriangleDuals,
    duality_gap,
    fw_repair,
    project_hemimetric,
)
from .learners import (
    AccuracyRule,
    BoundCertificate,
    CoordinatedLearner,
    LearnerConfig,
    OnlineLearner,
    ProjectionSchedule,
    RunResult,
    ScheduleMode,
    expected_regret_bound,
    closed_form_certificate,
    iol_bound,
    ol_step,
    run,
    regret_certificate,
)
from .env import (
    CostModel,
    HemimetricWorld,
    MarketScenario,
    OrderingKind,
    OrderingPolicy,
    PairEnvironment,
    calibration_targets,
    respond,
)

__version__ = "0.1.0"

__all__ = [
    "AccuracyRule",
    "BoundCertificate",
    "BoxSet",
    "CoordinatedLearner",
    "CostModel",
    "DiagonalWeight",
    "HemimetricMatrix",
    "HemimetricWorld",
    "JointStructure",
    "JointWeights",
    "LearnerConfig",
    "LossKind",
    "LossSpec",
    "MarketScenario",
    "OnlineLearner",
    "OrderingKind",
    "OrderingPolicy",
    "PairEnvironment",
    "ProblemId",
    "ProjectionResult",
    "ProjectionSchedule",
    "RoundRecord",
    "RunResult",
    "ScheduleMode",
    "SolverReport",
    "StructureKind",
    "TriangleDuals",
    "calibration_targets",
    "expected_regret_bound",
    "closed_form_certificate",
    "cumulative_regret",
    "duality_gap",
    "fw_repair",
    "id_to_pair",
    "iol_bound",
    "is_feasible",
    "num_pairs",
    "ol_step",
    "pair_to_id",
    "project_box",
    "project_hemimetric",
    "respond",
    "run",
    "set_norm",
    "surrogate_gradient",
    "surrogate_loss",
    "regret_certificate",
    "true_loss",
    "utility_gain",
    "weighted_project",
]
