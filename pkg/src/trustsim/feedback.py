"""Multi-round trust dynamics over a persistent cohort.

The loop couples three mechanisms: outcomes are observed only for trusted
individuals (so the estimator learns from a truncated sample), individuals
respond to the decision by becoming more or less trustworthy, and one
decider's output can shift the feature another decider sees.

Paired-run design: every round draws the same number of random values
regardless of what was decided (behavior for everyone, then fresh feature
noise for everyone), so two runs with the same seed but different
thresholds stay on common random numbers and differ only through the
decisions themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .decisions import DecisionRule
from .distributions import (
    STREAM_CHAIN,
    STREAM_FEEDBACK,
    PopulationModel,
    Sample,
    spawn_generator,
)
from .policies import AcquisitionPolicy, BandPolicy, ThresholdSchedule

if TYPE_CHECKING:
    from .config import Scenario


@dataclass(frozen=True, slots=True)
class Individual:
    """One cohort member: latent propensity to behave trustworthily, and feature."""

    individual_id: int
    group_id: str
    latent_q: float
    x_base: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.latent_q <= 1.0):
            raise ValueError("latent_q must lie in [0, 1]")


@dataclass(frozen=True)
class ResponsivenessRule:
    """Propensity shift per decision: up when trusted, down when distrusted."""

    delta_up: float
    delta_down: float

    def __post_init__(self) -> None:
        if self.delta_up < 0.0 or self.delta_down < 0.0:
            raise ValueError("responsiveness deltas must be nonnegative")


@dataclass(frozen=True, slots=True)
class DecisionRecord:
    """One decision in one round; the outcome is recorded only when trusted."""

    individual_id: int
    decision: int
    observed_outcome: int | None

    def __post_init__(self) -> None:
        if self.decision not in (0, 1):
            raise ValueError("decision must be 0 or 1")
        if (self.observed_outcome is not None) != (self.decision == 1):
            raise ValueError("observed_outcome must be present exactly when trusted")
        if self.observed_outcome is not None and self.observed_outcome not in (0, 1):
            raise ValueError("observed_outcome must be 0 or 1")


@dataclass(frozen=True)
class RoundLog:
    round: int
    decisions: tuple[DecisionRecord, ...]
    threshold: float


@dataclass(frozen=True)
class EstimatorState:
    """Selective-labels estimate of the trustworthy-class feature location.

    n_observed counts every observed (trusted) outcome. est_mean1 averages
    the feature over positive observed outcomes and is None while no
    positive outcome has been seen, which also covers the no-update state.
    """

    est_mean1: float | None
    n_observed: int

    def __post_init__(self) -> None:
        if self.n_observed < 0:
            raise ValueError("n_observed must be nonnegative")
        if self.est_mean1 is not None and not math.isfinite(self.est_mean1):
            raise ValueError("est_mean1 must be finite when present")


@dataclass(frozen=True)
class ChainConfig:
    """Proxy coupling: decider A's output label, mapped to -1/+1 and scaled
    by carryover_weight, shifts the feature decider B observes."""

    carryover_weight: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.carryover_weight):
            raise ValueError("carryover_weight must be finite")


@dataclass(frozen=True)
class SimulationResult:
    """Round logs and final estimator, plus evaluation-only ground truth.

    false_negatives_per_round counts distrusted individuals whose pre-drawn
    behavior that round would have been trustworthy; the decider never sees
    these, they exist so policies can be scored against the counterfactual.
    """

    rounds: tuple[RoundLog, ...]
    estimator: EstimatorState
    final_cohort: tuple[Individual, ...]
    false_negatives_per_round: tuple[int, ...]
    trusted_per_round: tuple[int, ...]
    mean_q_per_round: tuple[float, ...]


def propensity_feature_params(model: PopulationModel, q):
    """Feature distribution implied by propensity q: both the mean and the
    stddev interpolate linearly between the class-0 and class-1 values."""
    mean = model.cond0.mean + q * (model.cond1.mean - model.cond0.mean)
    stddev = model.cond0.stddev + q * (model.cond1.stddev - model.cond0.stddev)
    return mean, stddev


def reestimate(accepted_outcomes: Sequence[tuple[float, int]]) -> EstimatorState:
    """Re-estimate the trustworthy-class location from observed outcomes only.

    Input pairs are (feature, outcome) for trusted individuals. The mean is
    taken over outcome-1 pairs; empty input is the no-update state.
    """
    positives = [x for x, outcome in accepted_outcomes if outcome == 1]
    est = math.fsum(positives) / len(positives) if positives else None
    return EstimatorState(est_mean1=est, n_observed=len(accepted_outcomes))


def apply_responsiveness(
    ind: Individual,
    decision: int,
    rule: ResponsivenessRule,
    model: PopulationModel | None = None,
    rng: np.random.Generator | None = None,
) -> Individual:
    """Shift an individual's propensity after a decision, clipped to [0, 1].

    When model and rng are supplied the feature is also redrawn from the
    conditional implied by the updated propensity, so the behavioral change
    is visible to the next decider; without them only the propensity moves.
    """
    if decision not in (0, 1):
        raise ValueError("decision must be 0 or 1")
    q = ind.latent_q + (rule.delta_up if decision == 1 else -rule.delta_down)
    q = min(1.0, max(0.0, q))
    x = ind.x_base
    if rng is not None:
        if model is None:
            raise ValueError("feature refresh requires the population model")
        mean, stddev = propensity_feature_params(model, q)
        x = float(mean + stddev * rng.standard_normal())
    return replace(ind, latent_q=q, x_base=x)


def chain_deciders(
    chain: ChainConfig,
    rule_a: DecisionRule,
    rule_b: DecisionRule,
    samples: Sequence[Sample],
    model: PopulationModel,
    seed: int,
) -> np.ndarray:
    """Decide every sample twice, with A's output leaking into B's input.

    Decider A classifies the sample's own feature. Decider B classifies an
    independent re-observation of the same individual (a fresh draw from
    the true-label conditional) shifted by carryover_weight * (2*decA - 1).
    At weight 0 the two deciders therefore err independently given the
    label. Returns an (n, 2) int array of (decA, decB) rows.
    """
    rng = spawn_generator(seed, STREAM_CHAIN)
    x_a = np.array([s.x for s in samples], dtype=float)
    labels = np.array([s.true_label for s in samples], dtype=np.int64)
    dec_a = (x_a > rule_a.x_star).astype(np.int64)

    means = np.where(labels == 1, model.cond1.mean, model.cond0.mean)
    stds = np.where(labels == 1, model.cond1.stddev, model.cond0.stddev)
    x_b = means + stds * rng.standard_normal(len(labels))
    shifted = x_b + chain.carryover_weight * (2 * dec_a - 1)
    dec_b = (shifted > rule_b.x_star).astype(np.int64)
    return np.column_stack((dec_a, dec_b))


def run_simulation(scenario: "Scenario") -> SimulationResult:
    """Run the selective-labels loop for scenario.feedback.rounds rounds.

    Per round: pre-draw everyone's would-be behavior (Bernoulli in their
    current propensity), decide by the active policy threshold, observe
    outcomes for trusted individuals only, fold them into the cumulative
    estimator, apply the responsiveness rule, and refresh every feature
    from the propensity-implied conditional. This is the vectorized
    equivalent of applying apply_responsiveness to each individual.
    Fully deterministic given the scenario's master seed.
    """
    from .config import resolve_policy

    fb = scenario.feedback
    if fb.rounds < 1:
        raise ValueError("feedback.rounds must be at least 1")
    model = scenario.model
    policy = resolve_policy(scenario)
    if isinstance(policy, AcquisitionPolicy):
        raise ValueError("acquisition policies are not supported in the round simulation")

    band: BandPolicy | None = None
    if isinstance(policy, ThresholdSchedule):
        if len(policy.thresholds) != fb.rounds:
            raise ValueError("schedule length must equal feedback.rounds")
        thresholds = policy.thresholds
    elif isinstance(policy, BandPolicy):
        band = policy
        if band.action == "defer" and scenario.oracle is None:
            raise ValueError("a defer band requires an oracle accuracy in the scenario")
        thresholds = (policy.upper,) * fb.rounds
    else:
        thresholds = (policy.x_star,) * fb.rounds

    rng = spawn_generator(scenario.seed, STREAM_FEEDBACK)
    n = fb.cohort_size
    q = rng.beta(fb.initial_q_alpha, fb.initial_q_beta, size=n)
    mean, stddev = propensity_feature_params(model, q)
    x = mean + stddev * rng.standard_normal(n)

    observed: list[tuple[float, int]] = []
    logs: list[RoundLog] = []
    fn_counts: list[int] = []
    trusted_counts: list[int] = []
    mean_qs: list[float] = []

    for r in range(fb.rounds):
        threshold = thresholds[r]
        behavior = rng.random(n) < q
        if band is not None:
            extra = rng.random(n)
            in_band = (x > band.lower) & (x <= band.upper)
            if band.action == "randomize":
                dec = (x > band.upper) | (in_band & (extra < band.p_trust))
            else:
                correct = extra < scenario.oracle.accuracy
                oracle_call = np.where(correct, behavior, ~behavior)
                dec = (x > band.upper) | (in_band & oracle_call)
        else:
            dec = x > threshold

        records = tuple(
            DecisionRecord(
                individual_id=i,
                decision=int(dec[i]),
                observed_outcome=int(behavior[i]) if dec[i] else None,
            )
            for i in range(n)
        )
        logs.append(RoundLog(round=r + 1, decisions=records, threshold=float(threshold)))
        observed.extend(zip(x[dec].tolist(), behavior[dec].astype(np.int64).tolist()))
        fn_counts.append(int(np.sum(behavior & ~dec)))
        trusted_counts.append(int(np.sum(dec)))

        q = np.clip(q + np.where(dec, fb.delta_up, -fb.delta_down), 0.0, 1.0)
        mean_qs.append(float(np.mean(q)))
        mean, stddev = propensity_feature_params(model, q)
        x = mean + stddev * rng.standard_normal(n)

    final_cohort = tuple(
        Individual(individual_id=i, group_id="all", latent_q=float(q[i]), x_base=float(x[i]))
        for i in range(n)
    )
    return SimulationResult(
        rounds=tuple(logs),
        estimator=reestimate(observed),
        final_cohort=final_cohort,
        false_negatives_per_round=tuple(fn_counts),
        trusted_per_round=tuple(trusted_counts),
        mean_q_per_round=tuple(mean_qs),
    )
