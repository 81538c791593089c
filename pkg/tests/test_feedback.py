"""Selective labels, responsiveness, proxy chaining, and the round loop."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from trustsim import (
    ChainConfig,
    DecisionRecord,
    EstimatorState,
    FeedbackConfig,
    GaussianConditional,
    Individual,
    PolicyConfig,
    PopulationModel,
    ResponsivenessRule,
    Scenario,
    apply_responsiveness,
    bayes_rule,
    chain_deciders,
    default_scenario,
    reestimate,
    run_simulation,
    sample_population,
)
from trustsim import CostSpec
from trustsim.distributions import spawn_generator


def make_model(mean0=-1.0, mean1=1.0, stddev=1.0, prior0=0.5) -> PopulationModel:
    return PopulationModel(
        cond0=GaussianConditional(mean=mean0, stddev=stddev),
        cond1=GaussianConditional(mean=mean1, stddev=stddev),
        prior0=prior0,
        prior1=1.0 - prior0,
    )


def scenario_with(policy: PolicyConfig, feedback: FeedbackConfig, seed: int = 0) -> Scenario:
    return dataclasses.replace(default_scenario(), policy=policy, feedback=feedback, seed=seed)


def test_reestimate_on_empty_input_is_the_no_update_state() -> None:
    state = reestimate([])
    assert state.est_mean1 is None
    assert state.n_observed == 0


def test_reestimate_counts_all_observed_but_averages_positives() -> None:
    state = reestimate([(2.0, 1), (4.0, 1), (-1.0, 0)])
    assert state.est_mean1 == pytest.approx(3.0)
    assert state.n_observed == 3


def test_reestimate_with_only_negative_outcomes_has_no_location_estimate() -> None:
    state = reestimate([(0.5, 0), (0.2, 0)])
    assert state.est_mean1 is None
    assert state.n_observed == 2


def test_estimator_state_validation() -> None:
    with pytest.raises(ValueError):
        EstimatorState(est_mean1=None, n_observed=-1)
    with pytest.raises(ValueError):
        EstimatorState(est_mean1=float("nan"), n_observed=1)


def test_decision_record_requires_outcome_exactly_when_trusted() -> None:
    DecisionRecord(individual_id=0, decision=1, observed_outcome=1)
    DecisionRecord(individual_id=0, decision=0, observed_outcome=None)
    with pytest.raises(ValueError):
        DecisionRecord(individual_id=0, decision=1, observed_outcome=None)
    with pytest.raises(ValueError):
        DecisionRecord(individual_id=0, decision=0, observed_outcome=1)


def test_apply_responsiveness_moves_and_clips_the_propensity() -> None:
    rule = ResponsivenessRule(delta_up=0.2, delta_down=0.3)
    ind = Individual(individual_id=0, group_id="all", latent_q=0.9, x_base=0.0)
    trusted = apply_responsiveness(ind, 1, rule)
    distrusted = apply_responsiveness(ind, 0, rule)
    assert trusted.latent_q == 1.0  # clipped
    assert distrusted.latent_q == pytest.approx(0.6)
    assert trusted.x_base == ind.x_base  # no refresh without a generator


def test_apply_responsiveness_feature_refresh_requires_the_model() -> None:
    rule = ResponsivenessRule(delta_up=0.1, delta_down=0.1)
    ind = Individual(individual_id=0, group_id="all", latent_q=0.5, x_base=0.0)
    rng = spawn_generator(0, 9)
    with pytest.raises(ValueError):
        apply_responsiveness(ind, 1, rule, rng=rng)
    refreshed = apply_responsiveness(ind, 1, rule, model=make_model(), rng=rng)
    assert refreshed.latent_q == pytest.approx(0.6)
    assert refreshed.x_base != ind.x_base


def test_chain_deciders_returns_one_decision_pair_per_sample() -> None:
    model = make_model()
    rule = bayes_rule(model, CostSpec(1.0, 1.0))
    samples = sample_population(model, 100, seed=3)
    out = chain_deciders(ChainConfig(carryover_weight=0.5), rule, rule, samples, model, seed=3)
    assert out.shape == (100, 2)
    assert set(np.unique(out)) <= {0, 1}
    x = np.array([s.x for s in samples])
    assert np.array_equal(out[:, 0], (x > rule.x_star).astype(int))


def test_chain_deciders_is_deterministic() -> None:
    model = make_model()
    rule = bayes_rule(model, CostSpec(1.0, 1.0))
    samples = sample_population(model, 500, seed=7)
    chain = ChainConfig(carryover_weight=0.3)
    a = chain_deciders(chain, rule, rule, samples, model, seed=7)
    b = chain_deciders(chain, rule, rule, samples, model, seed=7)
    assert np.array_equal(a, b)


def test_chain_carryover_drags_the_second_decision_toward_the_first() -> None:
    model = make_model()
    rule = bayes_rule(model, CostSpec(1.0, 1.0))
    samples = sample_population(model, 100_000, seed=5)
    labels = np.array([s.true_label for s in samples])

    coupled = chain_deciders(ChainConfig(carryover_weight=1.5), rule, rule, samples, model, seed=5)
    agree_coupled = np.mean(coupled[:, 0] == coupled[:, 1])
    free = chain_deciders(ChainConfig(carryover_weight=0.0), rule, rule, samples, model, seed=5)
    agree_free = np.mean(free[:, 0] == free[:, 1])
    assert agree_coupled > agree_free + 0.05

    # at weight 0 the second decision is label-conditionally independent
    y1 = labels == 1
    cond = np.mean(free[y1 & (free[:, 0] == 0), 1] == 0)
    marg = np.mean(free[y1, 1] == 0)
    assert abs(cond - marg) < 0.01


def test_run_simulation_is_bitwise_deterministic() -> None:
    scenario = default_scenario()
    a = run_simulation(scenario)
    b = run_simulation(scenario)
    assert a == b


def test_run_simulation_logs_every_individual_once_per_round() -> None:
    feedback = FeedbackConfig(rounds=4, cohort_size=37)
    scenario = scenario_with(PolicyConfig(kind="point_threshold"), feedback, seed=2)
    result = run_simulation(scenario)
    assert len(result.rounds) == 4
    for log in result.rounds:
        ids = [rec.individual_id for rec in log.decisions]
        assert ids == list(range(37))
        for rec in log.decisions:
            assert (rec.observed_outcome is not None) == (rec.decision == 1)


def test_run_simulation_trust_everyone_observes_everything() -> None:
    feedback = FeedbackConfig(rounds=3, cohort_size=50)
    scenario = scenario_with(
        PolicyConfig(kind="point_threshold", threshold=-40.0), feedback, seed=1
    )
    result = run_simulation(scenario)
    assert result.estimator.n_observed == 3 * 50
    assert result.trusted_per_round == (50, 50, 50)
    assert result.false_negatives_per_round == (0, 0, 0)


def test_run_simulation_trust_no_one_observes_nothing() -> None:
    feedback = FeedbackConfig(rounds=2, cohort_size=40)
    scenario = scenario_with(
        PolicyConfig(kind="point_threshold", threshold=40.0), feedback, seed=1
    )
    result = run_simulation(scenario)
    assert result.estimator.n_observed == 0
    assert result.estimator.est_mean1 is None
    assert result.trusted_per_round == (0, 0)


def test_run_simulation_threshold_choice_changes_observation_volume() -> None:
    feedback = FeedbackConfig(rounds=5, cohort_size=300)
    loose = run_simulation(
        scenario_with(PolicyConfig(kind="point_threshold", threshold=-1.0), feedback, seed=6)
    )
    strict = run_simulation(
        scenario_with(PolicyConfig(kind="point_threshold", threshold=1.0), feedback, seed=6)
    )
    assert strict.estimator.n_observed < loose.estimator.n_observed


def test_run_simulation_responsiveness_raises_q_when_everyone_is_trusted() -> None:
    feedback = FeedbackConfig(rounds=6, cohort_size=200, delta_up=0.05, delta_down=0.05)
    result = run_simulation(
        scenario_with(PolicyConfig(kind="point_threshold", threshold=-40.0), feedback, seed=4)
    )
    qs = result.mean_q_per_round
    assert all(b >= a for a, b in zip(qs, qs[1:]))
    assert qs[-1] > qs[0]


def test_run_simulation_schedule_length_must_match_rounds() -> None:
    feedback = FeedbackConfig(rounds=5)
    policy = PolicyConfig(kind="schedule", start=0.0, end=1.0, rounds=3)
    with pytest.raises(ValueError, match="schedule length"):
        run_simulation(scenario_with(policy, feedback))


def test_run_simulation_schedule_follows_its_thresholds() -> None:
    feedback = FeedbackConfig(rounds=4, cohort_size=30)
    policy = PolicyConfig(kind="schedule", start=0.0, end=1.5)
    result = run_simulation(scenario_with(policy, feedback, seed=3))
    assert [log.threshold for log in result.rounds] == [0.0, 0.5, 1.0, 1.5]


def test_run_simulation_rejects_acquisition_policies() -> None:
    policy = PolicyConfig(kind="acquisition")
    with pytest.raises(ValueError, match="acquisition"):
        run_simulation(scenario_with(policy, FeedbackConfig()))


def test_run_simulation_defer_band_needs_an_oracle() -> None:
    policy = PolicyConfig(kind="band", lower=-0.5, upper=0.5, action="defer")
    with pytest.raises(ValueError, match="oracle"):
        run_simulation(scenario_with(policy, FeedbackConfig(rounds=2, cohort_size=20)))


def test_run_simulation_band_exploration_observes_more_than_the_point_rule() -> None:
    feedback = FeedbackConfig(rounds=5, cohort_size=300)
    point = run_simulation(
        scenario_with(PolicyConfig(kind="point_threshold", threshold=0.8), feedback, seed=9)
    )
    band = run_simulation(
        scenario_with(
            PolicyConfig(kind="band", lower=-0.2, upper=0.8, action="randomize", p_trust=0.5),
            feedback,
            seed=9,
        )
    )
    assert band.estimator.n_observed > point.estimator.n_observed


def test_final_cohort_carries_updated_propensities() -> None:
    feedback = FeedbackConfig(rounds=3, cohort_size=25)
    result = run_simulation(scenario_with(PolicyConfig(), feedback, seed=10))
    assert len(result.final_cohort) == 25
    for ind in result.final_cohort:
        assert 0.0 <= ind.latent_q <= 1.0
        assert ind.group_id == "all"
