"""Surrogate-filtered genetic algorithm for peptide sequence optimization.

A genetic algorithm proposes ``k_propose`` mutated sequences per generation; a
probabilistic surrogate and an acquisition function choose which ``m_select``
of them receive the expensive objective evaluation.
"""

from .acquisition import AcquisitionSpec, expected_improvement, greedy_mean, select_for_evaluation, upper_confidence_bound
from .embed import SequenceEncoder, featurize, fit_pca
from .engine import (
    BudgetCounters,
    CampaignConfig,
    CampaignLog,
    ConfigError,
    EmbeddingConfig,
    SchedulePhase,
    budget_report,
    run_campaign,
    run_reference_ga,
)
from .evaluator import ExternalEvaluator
from .objectives import (
    ObjectiveSpec,
    beta_sheet_fraction,
    make_objective,
    molecular_weight,
    relative_hydrophobic_moment,
)
from .seqcore import EvaluationDataset, MutationParams, SelectionStrategy, mutate, parse_sequence, propose_pool, select_elites
from .surrogate import SurrogateConfig, SurrogateModel, fit_surrogate

__version__ = "0.1.0"

__all__ = [
    "AcquisitionSpec",
    "BudgetCounters",
    "CampaignConfig",
    "CampaignLog",
    "ConfigError",
    "EmbeddingConfig",
    "EvaluationDataset",
    "ExternalEvaluator",
    "MutationParams",
    "ObjectiveSpec",
    "SchedulePhase",
    "SelectionStrategy",
    "SequenceEncoder",
    "SurrogateConfig",
    "SurrogateModel",
    "beta_sheet_fraction",
    "budget_report",
    "expected_improvement",
    "featurize",
    "fit_pca",
    "fit_surrogate",
    "greedy_mean",
    "make_objective",
    "molecular_weight",
    "mutate",
    "parse_sequence",
    "propose_pool",
    "relative_hydrophobic_moment",
    "run_campaign",
    "run_reference_ga",
    "select_elites",
    "select_for_evaluation",
    "upper_confidence_bound",
]
