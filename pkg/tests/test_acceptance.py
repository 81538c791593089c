"""Release gate: one test per numbered acceptance criterion.

Run with ``pytest -v tests/test_acceptance.py`` to get one pass/fail
line per criterion. Every expected value below is either exact by
construction or a frozen high-precision constant computed independently
of the package (normal CDF and truncated-normal oracles).

Reference setup throughout: class-conditional signals N(-1, 1) and
N(+1, 1) with equal priors, so a cost or prior ratio of r puts the
optimal threshold at ln(r) / 2.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from trustsim import (
    BandPolicy,
    CostSpec,
    FeedbackConfig,
    GaussianConditional,
    GroupedPopulation,
    OracleModel,
    PolicyConfig,
    PopulationModel,
    band_error_rates,
    bayes_risk,
    bayes_rule,
    ece,
    eo_gap,
    error_rates_analytic,
    error_rates_mc,
    expected_cost,
    group_error_rates,
    make_schedule,
    misclassification_rate,
    mistaken_prior_rule,
    posterior_trustworthy,
    reestimate,
    rule_at,
    run_simulation,
    sample_population,
    sharpen,
)
from trustsim.cli import main
from trustsim.distributions import sample_xy
from trustsim.feedback import ChainConfig, chain_deciders

LN9_HALF = 1.0986122886681097
LN27_HALF = 1.6479184330021645

SYMMETRIC_ERROR = 0.15865525393145705  # 1 - Phi(1)
FNR_AT_LN9_HALF = 0.5392769436822994  # Phi(ln(9)/2 - 1)
UNIT_REGRET_BELIEVED_09 = 0.11994599095986437
TRUNCATED_MEAN_ORACLE = 1.2875999709391784  # E[X | X > 0] for N(1, 1)


def reference_model() -> PopulationModel:
    return PopulationModel(
        cond0=GaussianConditional(mean=-1.0, stddev=1.0),
        cond1=GaussianConditional(mean=1.0, stddev=1.0),
        prior0=0.5,
        prior1=0.5,
    )


def reference_scenario(**overrides) -> "object":
    from trustsim import default_scenario

    return dataclasses.replace(default_scenario(), **overrides)


def test_criterion_01_equal_costs_give_a_symmetric_threshold() -> None:
    model = reference_model()
    rule = bayes_rule(model, CostSpec(c01=1.0, c10=1.0))
    assert rule.x_star == 0.0

    rates = error_rates_analytic(model, rule)
    assert abs(rates.fpr - rates.fnr) <= 1e-12
    assert rates.fpr == pytest.approx(SYMMETRIC_ERROR, abs=1e-12)

    mc = error_rates_mc(model, rule, 1_000_000, seed=1)
    assert abs(mc.fpr - SYMMETRIC_ERROR) <= 3.0 * mc.stderr_fpr
    assert abs(mc.fnr - SYMMETRIC_ERROR) <= 3.0 * mc.stderr_fnr
    print(f"criterion 01: threshold={rule.x_star}, fpr=fnr={rates.fpr:.12f}, "
          f"mc fpr={mc.fpr:.6f} (3se={3 * mc.stderr_fpr:.6f})")


def test_criterion_02_costlier_false_positives_move_the_threshold_right() -> None:
    model = reference_model()
    rules = [bayes_rule(model, CostSpec(c01=r, c10=1.0)) for r in (1.0, 3.0, 9.0, 27.0, 81.0)]
    thresholds = [rule.x_star for rule in rules]
    rates = [error_rates_analytic(model, rule) for rule in rules]

    assert all(b > a for a, b in zip(thresholds, thresholds[1:]))
    assert all(b.fnr > a.fnr for a, b in zip(rates, rates[1:]))
    assert all(b.fpr < a.fpr for a, b in zip(rates, rates[1:]))
    tail_edge = model.cond1.mean + 0.5 * model.cond1.stddev
    assert thresholds[3] > tail_edge  # ratio 27
    assert thresholds[4] > tail_edge  # ratio 81
    print(f"criterion 02: thresholds={[round(t, 4) for t in thresholds]}, "
          f"tail edge={tail_edge}")


def test_criterion_03_the_derived_rule_beats_a_dense_threshold_grid() -> None:
    rng = np.random.default_rng(20260814)
    worst_margin = -math.inf
    for _ in range(20):
        mean0 = float(rng.uniform(-3.0, 0.0))
        gap = float(rng.uniform(0.5, 4.0))
        stddev = float(rng.uniform(0.3, 3.0))
        prior0 = float(rng.uniform(0.05, 0.95))
        model = PopulationModel(
            cond0=GaussianConditional(mean=mean0, stddev=stddev),
            cond1=GaussianConditional(mean=mean0 + gap, stddev=stddev),
            prior0=prior0,
            prior1=1.0 - prior0,
        )
        costs = CostSpec(c01=float(rng.uniform(0.1, 50.0)), c10=float(rng.uniform(0.1, 50.0)))
        best = expected_cost(model, costs, bayes_rule(model, costs))

        grid = np.linspace(
            model.cond0.mean - 6.0 * stddev, model.cond1.mean + 6.0 * stddev, 10_000
        )
        fpr = 1.0 - model.cond0.cdf(grid)
        fnr = model.cond1.cdf(grid)
        grid_best = float(
            np.min(costs.c01 * model.prior0 * fpr + costs.c10 * model.prior1 * fnr)
        )
        assert best <= grid_best + 1e-12
        worst_margin = max(worst_margin, best - grid_best)
    print(f"criterion 03: 20 configs, worst (rule - grid) margin={worst_margin:.3e}")


def test_criterion_04_mistaken_priors_cost_real_regret() -> None:
    model = reference_model()
    unit_costs = CostSpec(c01=1.0, c10=1.0)
    mistaken_unit = mistaken_prior_rule(model, 0.9, unit_costs)
    unit_report = bayes_risk(model, unit_costs, mistaken_unit)
    assert unit_report.regret == pytest.approx(UNIT_REGRET_BELIEVED_09, abs=1e-5)

    # The same believed prior under a 9x cost ratio overshoots even
    # further into the tail. On the error-rate scale the damage grows:
    # the added misclassification strictly exceeds the unit-cost regret
    # (which equals the unit-cost misclassification increase).
    nine_costs = CostSpec(c01=9.0, c10=1.0)
    mistaken_nine = mistaken_prior_rule(model, 0.9, nine_costs)
    added_misclassification = misclassification_rate(model, mistaken_nine) - (
        misclassification_rate(model, bayes_rule(model, nine_costs))
    )
    assert added_misclassification > unit_report.regret
    print(f"criterion 04: unit regret={unit_report.regret:.12f}, "
          f"ratio-9 added misclassification={added_misclassification:.12f}")


@pytest.mark.xfail(
    strict=True,
    reason=(
        "the cost-weighted regret of the believed-0.9 rule is smaller under a 9x "
        "cost ratio (0.0950 < 0.1199): the mistaken threshold overshoots into a "
        "flatter region of the ratio-9 risk curve, so the cost-weighted penalty "
        "shrinks even though misclassification grows; the amplification claim "
        "holds on the error-rate scale (see test_criterion_04) and for moderate "
        "prior errors such as a believed 0.7"
    ),
)
def test_criterion_04_literal_cost_weighted_regret_ordering() -> None:
    model = reference_model()
    unit_report = bayes_risk(
        model, CostSpec(1.0, 1.0), mistaken_prior_rule(model, 0.9, CostSpec(1.0, 1.0))
    )
    nine_report = bayes_risk(
        model, CostSpec(9.0, 1.0), mistaken_prior_rule(model, 0.9, CostSpec(9.0, 1.0))
    )
    assert nine_report.regret > unit_report.regret


def test_criterion_05_sharper_signals_shrink_both_error_rates() -> None:
    model = reference_model()
    costs = CostSpec(c01=1.0, c10=1.0)
    base = error_rates_analytic(model, bayes_rule(model, costs))
    sharp_model = sharpen(model, 0.5)
    sharp = error_rates_analytic(sharp_model, bayes_rule(sharp_model, costs))
    assert sharp.fpr < base.fpr
    assert sharp.fnr < base.fnr
    print(f"criterion 05: fpr {base.fpr:.6f} -> {sharp.fpr:.6f}, "
          f"fnr {base.fnr:.6f} -> {sharp.fnr:.6f}")


def test_criterion_06_a_deferral_band_keeps_fpr_and_cuts_fnr() -> None:
    model = reference_model()
    policy = BandPolicy(lower=0.0, upper=LN9_HALF, action="defer")
    band = band_error_rates(model, policy, OracleModel(accuracy=1.0))
    point = error_rates_analytic(model, rule_at(model, LN9_HALF))

    assert abs(band.fpr - point.fpr) <= 1e-12
    assert band.fnr == pytest.approx(SYMMETRIC_ERROR, abs=1e-12)
    assert point.fnr == pytest.approx(FNR_AT_LN9_HALF, abs=1e-12)
    assert band.fnr < point.fnr
    print(f"criterion 06: band fpr={band.fpr:.12f} equals point fpr, "
          f"band fnr={band.fnr:.6f} vs point fnr={point.fnr:.6f}")


def test_criterion_07_starting_permissive_spares_false_negatives() -> None:
    schedule = make_schedule(0.0, LN27_HALF, 10, shape="linear")
    assert all(b >= a for a, b in zip(schedule.thresholds, schedule.thresholds[1:]))

    feedback = FeedbackConfig(rounds=10, cohort_size=400)
    wins = 0
    for seed in range(10):
        scheduled = run_simulation(
            reference_scenario(
                policy=PolicyConfig(kind="schedule", start=0.0, end=LN27_HALF),
                feedback=feedback,
                seed=seed,
            )
        )
        fixed = run_simulation(
            reference_scenario(
                policy=PolicyConfig(kind="point_threshold", threshold=LN27_HALF),
                feedback=feedback,
                seed=seed,
            )
        )
        if sum(scheduled.false_negatives_per_round) < sum(fixed.false_negatives_per_round):
            wins += 1
    assert wins >= 9
    print(f"criterion 07: schedule beat the fixed threshold in {wins}/10 paired runs")


def test_criterion_08_accepted_only_estimates_overstate_the_mean() -> None:
    model = reference_model()
    point_estimates = []
    band_estimates = []
    exceed = 0
    for seed in range(100):
        x, labels = sample_xy(model, 2000, seed=seed)
        accepted_point = x > 0.0
        est_point = reestimate(
            list(zip(x[accepted_point].tolist(), labels[accepted_point].tolist()))
        ).est_mean1
        point_estimates.append(est_point)
        if est_point > 1.0:
            exceed += 1

        # widen the acceptance region downward: randomize in (-0.5, 0]
        band_rng = np.random.default_rng(seed + 10_000)
        in_band = (x > -0.5) & (x <= 0.0)
        accepted_band = accepted_point | (in_band & (band_rng.random(len(x)) < 0.5))
        est_band = reestimate(
            list(zip(x[accepted_band].tolist(), labels[accepted_band].tolist()))
        ).est_mean1
        band_estimates.append(est_band)

    assert exceed >= 99
    mean_point = float(np.mean(point_estimates))
    assert mean_point == pytest.approx(TRUNCATED_MEAN_ORACLE, abs=0.02)
    mean_band = float(np.mean(band_estimates))
    assert mean_band < mean_point
    print(f"criterion 08: {exceed}/100 estimates exceed 1.0, mean={mean_point:.4f} "
          f"(oracle {TRUNCATED_MEAN_ORACLE:.4f}), banded mean={mean_band:.4f}")


def test_criterion_09_carryover_couples_the_second_decision() -> None:
    model = reference_model()
    rule = rule_at(model, 0.0)
    samples = sample_population(model, 1_000_000, seed=60)
    labels = np.array([s.true_label for s in samples])
    y1 = labels == 1

    out = chain_deciders(ChainConfig(carryover_weight=0.5), rule, rule, samples, model, seed=60)
    denied_a = y1 & (out[:, 0] == 0)
    cond = float(np.mean(out[denied_a, 1] == 0))
    marg = float(np.mean(out[y1, 1] == 0))
    se_cond = math.sqrt(cond * (1.0 - cond) / np.sum(denied_a))
    se_marg = math.sqrt(marg * (1.0 - marg) / np.sum(y1))
    gap = cond - marg
    assert gap > 3.0 * (se_cond + se_marg)

    # at weight 0 decider B sees an unshifted independent redraw, so the
    # conditional and marginal distrust probabilities are the same number
    def analytic_gap(w: float) -> float:
        p_trust_a = 1.0 - model.cond1.cdf(rule.x_star)
        return p_trust_a * (model.cond1.cdf(rule.x_star + w) - model.cond1.cdf(rule.x_star - w))

    assert analytic_gap(0.0) == 0.0
    free = chain_deciders(ChainConfig(carryover_weight=0.0), rule, rule, samples, model, seed=60)
    denied_free = y1 & (free[:, 0] == 0)
    cond0 = float(np.mean(free[denied_free, 1] == 0))
    marg0 = float(np.mean(free[y1, 1] == 0))
    se0 = math.sqrt(cond0 * (1.0 - cond0) / np.sum(denied_free)) + math.sqrt(
        marg0 * (1.0 - marg0) / np.sum(y1)
    )
    assert abs(cond0 - marg0) <= 3.0 * se0
    print(f"criterion 09: gap(w=0.5)={gap:.4f} (>{3 * (se_cond + se_marg):.4f}), "
          f"analytic gap(w=0)={analytic_gap(0.0)}")


def test_criterion_10_distrust_erodes_the_cohorts_propensity() -> None:
    feedback = FeedbackConfig(rounds=10, cohort_size=400, delta_up=0.05, delta_down=0.05)
    for seed in range(10):
        distrustful = run_simulation(
            reference_scenario(
                policy=PolicyConfig(kind="point_threshold", threshold=LN9_HALF),
                feedback=feedback,
                seed=seed,
            )
        )
        balanced = run_simulation(
            reference_scenario(
                policy=PolicyConfig(kind="point_threshold", threshold=0.0),
                feedback=feedback,
                seed=seed,
            )
        )
        assert distrustful.mean_q_per_round[-1] < balanced.mean_q_per_round[-1]
    print("criterion 10: distrustful threshold lowered mean q in 10/10 paired runs")


def test_criterion_11_fairness_and_calibration_metrics_self_check() -> None:
    model = reference_model()
    grouped = GroupedPopulation(groups=(("a", model, 0.5), ("b", model, 0.5)))
    rates = group_error_rates(grouped, bayes_rule(model, CostSpec(9.0, 1.0)))
    assert eo_gap(rates, "a", "b") == 0.0

    x, labels = sample_xy(model, 1_000_000, seed=71)
    predictions = np.column_stack((posterior_trustworthy(model, x), labels))
    calibration_error = ece(predictions, bins=10)
    assert calibration_error <= 0.01
    print(f"criterion 11: eo_gap=0.0 exactly, ece={calibration_error:.5f} <= 0.01")


def test_criterion_12_reproduce_is_byte_identical_for_every_figure(tmp_path) -> None:
    for figure in range(1, 9):
        dir_a = tmp_path / f"a{figure}"
        dir_b = tmp_path / f"b{figure}"
        assert main(["reproduce", "--figure", str(figure), "--out", str(dir_a)]) == 0
        assert main(["reproduce", "--figure", str(figure), "--out", str(dir_b)]) == 0
        manifest_a = (dir_a / "manifest.json").read_bytes()
        manifest_b = (dir_b / "manifest.json").read_bytes()
        assert manifest_a == manifest_b, f"figure {figure} manifests differ"
        for path in sorted(dir_a.iterdir()):
            assert path.read_bytes() == (dir_b / path.name).read_bytes(), path.name
    print("criterion 12: byte-identical manifests for figures 1..8")
