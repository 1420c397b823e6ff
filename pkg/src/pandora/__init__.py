"""Scoring rules for sequential search.

Pandora's Regret and its Beta(alpha, 1) family, a ratio-rule search
simulator, the baseline metrics they are compared with, Monte Carlo and
grid-scan verification tools, and a model-ranking meta-evaluation harness.
"""

from ._accel import BACKEND
from .baselines import (
    ConfusionCounts,
    accuracy,
    f1_greedy_decision,
    f1_marginals,
    fixed_order_regret,
    log_loss,
    macro_f1,
    parallel_decision_cost,
)
from .errors import ConfigError, DomainError, PandoraError, UnsupportedError
from .propriety import (
    CostPrior,
    bayes_risk,
    gradient_check,
    mc_expected_cost,
    pairwise_decomposition_check,
    propriety_scan,
)
from .ranking import Condition, ModelZooSpec, apply_condition, generate_zoo, kendall_tau, run_meta_eval
from .scoring import (
    Limit,
    b_alpha,
    beta_score,
    pairwise_gradient,
    pairwise_loss,
    pandora_regret,
    raw_expected_cost,
    rescaled_beta_score,
)
from .search import (
    TestCharacteristics,
    TreatmentPayoffs,
    aggregate_cost,
    effective_costs,
    search_order,
    simulate_search,
    treatment_payoff,
)

__all__ = [
    "BACKEND", "ConfigError", "DomainError", "PandoraError", "UnsupportedError",
    "Limit", "pairwise_loss", "b_alpha", "beta_score", "pandora_regret", "rescaled_beta_score",
    "raw_expected_cost", "pairwise_gradient",
    "search_order", "simulate_search", "aggregate_cost", "effective_costs", "treatment_payoff",
    "TestCharacteristics", "TreatmentPayoffs",
    "log_loss", "parallel_decision_cost", "fixed_order_regret", "accuracy", "macro_f1",
    "ConfusionCounts", "f1_marginals", "f1_greedy_decision",
    "CostPrior", "mc_expected_cost", "pairwise_decomposition_check", "bayes_risk", "propriety_scan",
    "gradient_check",
    "kendall_tau", "ModelZooSpec", "generate_zoo", "Condition", "apply_condition", "run_meta_eval",
]
