"""Command-line interface.

Three subcommands:

* ``run``: execute a scenario config end to end and write tables,
  figures, and a summary into an output directory.
* ``reproduce``: regenerate one preset figure's data and image from the
  built-in reference scenario; identical invocations produce
  byte-identical directories.
* ``sweep``: vary the false-positive cost over a list of values and
  tabulate threshold and error rates per value.

Every failure exits nonzero with a message on stderr; nothing is
reported as success unless all requested files were written.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import Scenario, default_scenario, parse_config_file, resolve_policy, scenario_to_mapping
from .decisions import (
    CostSpec,
    DecisionRule,
    bayes_risk,
    bayes_rule,
    error_rates_analytic,
    error_rates_mc,
    rule_at,
)
from .distributions import sample_population
from .feedback import ChainConfig, chain_deciders, run_simulation
from .plotting import render_figure
from .policies import AcquisitionPolicy, BandPolicy, ThresholdSchedule, acquire_features, band_error_rates
from .reporting import emit_figure_data, write_outputs

_ACQUISITION_SUMMARY_SAMPLES = 2000


def _policy_summary(policy) -> dict:
    if isinstance(policy, DecisionRule):
        return {"kind": "point_threshold", "threshold": policy.x_star, "eta": policy.eta}
    if isinstance(policy, BandPolicy):
        return {
            "kind": "band",
            "lower": policy.lower,
            "upper": policy.upper,
            "action": policy.action,
            "p_trust": policy.p_trust,
        }
    if isinstance(policy, ThresholdSchedule):
        return {"kind": "schedule", "thresholds": list(policy.thresholds)}
    return {
        "kind": "acquisition",
        "confidence_floor": policy.confidence_floor,
        "sharpen_factor_per_step": policy.sharpen_factor_per_step,
        "max_steps": policy.max_steps,
        "step_cost": policy.step_cost,
    }


def _acquisition_summary(scenario: Scenario, policy: AcquisitionPolicy) -> dict:
    n = min(scenario.mc_samples, _ACQUISITION_SUMMARY_SAMPLES)
    samples = sample_population(scenario.model, n, scenario.seed)
    steps = []
    posteriors = []
    decisions = []
    for i, s in enumerate(samples):
        result = acquire_features(
            scenario.model, s.x, policy, s.true_label, seed=scenario.seed + i + 1
        )
        steps.append(result.steps_taken)
        posteriors.append(result.posterior1)
        decisions.append(result.decision)
    return {
        "samples": n,
        "mean_steps": float(np.mean(steps)),
        "mean_step_cost": float(np.mean(steps)) * policy.step_cost,
        "mean_posterior1": float(np.mean(posteriors)),
        "trust_rate": float(np.mean(decisions)),
    }


def _chain_summary(scenario: Scenario) -> dict:
    weight = scenario.feedback.chain_weight
    rule = bayes_rule(scenario.model, scenario.costs)
    n = min(scenario.mc_samples, 100_000)
    samples = sample_population(scenario.model, n, scenario.seed)
    decisions = chain_deciders(
        ChainConfig(carryover_weight=weight), rule, rule, samples, scenario.model, scenario.seed
    )
    dec_a = decisions[:, 0]
    dec_b = decisions[:, 1]
    marginal = float(np.mean(dec_b))
    trusted = dec_b[dec_a == 1]
    conditional = float(np.mean(trusted)) if trusted.size > 0 else 0.0
    return {
        "carryover_weight": weight,
        "samples": n,
        "marginal_trust_rate_b": marginal,
        "conditional_trust_rate_b_given_a": conditional,
        "gap": conditional - marginal,
    }


def _run_policy_outputs(scenario: Scenario, policy, items: dict, summary: dict) -> None:
    model = scenario.model
    if isinstance(policy, DecisionRule):
        rates = error_rates_analytic(model, policy)
        report = bayes_risk(model, scenario.costs, policy)
        mc = error_rates_mc(model, policy, scenario.mc_samples, scenario.seed)
        items["rates"] = rates
        summary["rates"] = asdict(rates)
        summary["rates_mc"] = asdict(mc)
        summary["risk"] = asdict(report)
    elif isinstance(policy, BandPolicy):
        rates = band_error_rates(model, policy, scenario.oracle)
        items["rates"] = rates
        summary["rates"] = asdict(rates)
    elif isinstance(policy, ThresholdSchedule):
        rates = error_rates_analytic(model, rule_at(model, policy.thresholds[-1]))
        summary["final_round_rates"] = asdict(rates)
    else:
        summary["acquisition"] = _acquisition_summary(scenario, policy)


def _run_simulation_outputs(scenario: Scenario, items: dict, summary: dict) -> None:
    result = run_simulation(scenario)
    trajectory = [
        {
            "round": log.round,
            "threshold": log.threshold,
            "trusted": result.trusted_per_round[i],
            "false_negatives": result.false_negatives_per_round[i],
            "mean_q": result.mean_q_per_round[i],
        }
        for i, log in enumerate(result.rounds)
    ]
    items["trajectory"] = trajectory
    items["rounds"] = result.rounds
    summary["estimator"] = {
        "est_mean1": result.estimator.est_mean1,
        "n_observed": result.estimator.n_observed,
    }
    summary["total_false_negatives"] = int(sum(result.false_negatives_per_round))
    summary["total_trusted"] = int(sum(result.trusted_per_round))


def _cmd_run(args) -> int:
    scenario = parse_config_file(args.config)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    out_dir = args.out if args.out is not None else scenario.output.directory
    if out_dir is None:
        raise ValueError("an output directory is required: pass --out or set output.directory")
    out_dir = Path(out_dir)

    policy = resolve_policy(scenario)
    items: dict = {}
    summary: dict = {
        "effective_seed": scenario.seed,
        "policy": _policy_summary(policy),
        "config": scenario_to_mapping(scenario),
    }
    _run_policy_outputs(scenario, policy, items, summary)
    if not isinstance(policy, AcquisitionPolicy):
        _run_simulation_outputs(scenario, items, summary)
    if scenario.feedback.chain_weight != 0.0:
        summary["chain"] = _chain_summary(scenario)

    tables = [emit_figure_data(fid, scenario) for fid in scenario.output.figures]
    for table in tables:
        items[f"figure{table.figure_id}"] = table
    summary["figures"] = list(scenario.output.figures)
    items["summary"] = summary

    out_dir.mkdir(parents=True, exist_ok=True)
    for table in tables:
        render_figure(table, out_dir / f"figure{table.figure_id}.png")
    manifest = write_outputs(items, out_dir, formats=scenario.output.formats)
    print(f"wrote {len(manifest)} files to {out_dir}")
    return 0


def _cmd_reproduce(args) -> int:
    if args.figure not in range(1, 9):
        raise ValueError(f"--figure must be in 1..8, got {args.figure}")
    scenario = default_scenario()
    table = emit_figure_data(args.figure, scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    name = f"figure{args.figure}"
    render_figure(table, out_dir / f"{name}.png")
    manifest = write_outputs({name: table}, out_dir)
    print(f"wrote {len(manifest)} files to {out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    scenario = parse_config_file(args.config)
    if args.param != "cost_ratio":
        raise ValueError(f"unsupported sweep parameter: {args.param!r} (only cost_ratio)")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ValueError(f"--values must be a comma-separated list of numbers: {exc}") from exc
    if not values:
        raise ValueError("--values must contain at least one number")

    model = scenario.model
    rows = []
    for value in values:
        costs = CostSpec(c01=value, c10=1.0)
        rule = bayes_rule(model, costs)
        rates = error_rates_analytic(model, rule)
        report = bayes_risk(model, costs, rule)
        rows.append(
            {
                "cost_ratio": value,
                "eta": rule.eta,
                "threshold": rule.x_star,
                "fpr": rates.fpr,
                "fnr": rates.fnr,
                "tpr": rates.tpr,
                "tnr": rates.tnr,
                "risk": report.risk,
            }
        )
    items = {
        "sweep": rows,
        "summary": {
            "param": "cost_ratio",
            "values": values,
            "config": scenario_to_mapping(scenario),
        },
    }
    manifest = write_outputs(items, Path(args.out))
    print(f"wrote {len(manifest)} files to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trustsim",
        description="Cost-sensitive trust decisions: thresholds, bands, and feedback loops.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config and write its outputs")
    run.add_argument("--config", required=True, help="path to a YAML scenario config")
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--out", default=None, help="output directory (overrides the config)")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("reproduce", help="regenerate one preset figure")
    rep.add_argument("--figure", type=int, required=True, help="figure number, 1 through 8")
    rep.add_argument("--out", required=True, help="output directory")
    rep.set_defaults(func=_cmd_reproduce)

    sweep = sub.add_parser("sweep", help="sweep the false-positive cost over a value list")
    sweep.add_argument("--config", required=True, help="path to a YAML scenario config")
    sweep.add_argument("--param", required=True, help="parameter to sweep (cost_ratio)")
    sweep.add_argument("--values", required=True, help="comma-separated numeric values")
    sweep.add_argument("--out", required=True, help="output directory")
    sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
