"""Cost-sensitive trust decisions under Gaussian signals.

The package covers the full pipeline: population models and sampling,
Bayes-optimal point thresholds under asymmetric costs, band policies
with randomization or deferral, progressive threshold schedules,
feature acquisition, selective-label feedback simulation, fairness and
calibration metrics, and deterministic figure-data emission.
"""

from __future__ import annotations

from .config import (
    FeedbackConfig,
    OutputConfig,
    PolicyConfig,
    Scenario,
    default_scenario,
    parse_config,
    parse_config_file,
    resolve_policy,
    scenario_to_mapping,
)
from .decisions import (
    CostSpec,
    DecisionRule,
    ErrorRates,
    RiskReport,
    bayes_risk,
    bayes_rule,
    bisect_threshold,
    classify,
    error_rates_analytic,
    error_rates_mc,
    expected_cost,
    log_likelihood_ratio,
    lr_threshold,
    misclassification_rate,
    mistaken_prior_rule,
    rule_at,
    threshold_x,
)
from .distributions import (
    GaussianConditional,
    GroupedPopulation,
    PopulationModel,
    Sample,
    cdf,
    density,
    posterior_trustworthy,
    sample_population,
    sharpen,
)
from .feedback import (
    ChainConfig,
    DecisionRecord,
    EstimatorState,
    Individual,
    ResponsivenessRule,
    RoundLog,
    SimulationResult,
    apply_responsiveness,
    chain_deciders,
    reestimate,
    run_simulation,
)
from .policies import (
    AcquisitionPolicy,
    AcquisitionResult,
    BandDecision,
    BandPolicy,
    OracleModel,
    ThresholdSchedule,
    acquire_features,
    band_decide,
    band_error_rates,
    make_schedule,
)
from .reporting import (
    FigureTable,
    ece,
    emit_figure_data,
    eo_gap,
    group_error_rates,
    write_outputs,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionPolicy",
    "AcquisitionResult",
    "BandDecision",
    "BandPolicy",
    "ChainConfig",
    "CostSpec",
    "DecisionRecord",
    "DecisionRule",
    "ErrorRates",
    "EstimatorState",
    "FeedbackConfig",
    "FigureTable",
    "GaussianConditional",
    "GroupedPopulation",
    "Individual",
    "OracleModel",
    "OutputConfig",
    "PolicyConfig",
    "PopulationModel",
    "ResponsivenessRule",
    "RiskReport",
    "RoundLog",
    "Sample",
    "Scenario",
    "SimulationResult",
    "ThresholdSchedule",
    "acquire_features",
    "apply_responsiveness",
    "band_decide",
    "band_error_rates",
    "bayes_risk",
    "bayes_rule",
    "bisect_threshold",
    "cdf",
    "chain_deciders",
    "classify",
    "default_scenario",
    "density",
    "ece",
    "emit_figure_data",
    "eo_gap",
    "error_rates_analytic",
    "error_rates_mc",
    "expected_cost",
    "group_error_rates",
    "log_likelihood_ratio",
    "lr_threshold",
    "make_schedule",
    "misclassification_rate",
    "mistaken_prior_rule",
    "parse_config",
    "parse_config_file",
    "posterior_trustworthy",
    "reestimate",
    "resolve_policy",
    "rule_at",
    "run_simulation",
    "sample_population",
    "scenario_to_mapping",
    "sharpen",
    "threshold_x",
    "write_outputs",
    "__version__",
]
