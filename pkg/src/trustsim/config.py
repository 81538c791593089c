"""Scenario configuration: YAML parsing, validation, and policy resolution.

A scenario bundles the population model, the cost matrix, one active
policy, and the simulation knobs. Configs are strict: unknown keys are
rejected by their full dotted path, syntax errors carry line and column,
and every omitted field falls back to an explicit default that
``scenario_to_mapping`` echoes back, so a parsed scenario round-trips
bit-for-bit through YAML.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import yaml

from .decisions import CostSpec, DecisionRule, bayes_rule, rule_at
from .distributions import GaussianConditional, GroupedPopulation, PopulationModel
from .policies import (
    AcquisitionPolicy,
    BandPolicy,
    OracleModel,
    ThresholdSchedule,
    make_schedule,
)

POLICY_KINDS = ("point_threshold", "band", "schedule", "acquisition")
OUTPUT_FORMATS = ("csv", "json")
ALL_FIGURES = (1, 2, 3, 4, 5, 6, 7, 8)


@dataclass(frozen=True)
class PolicyConfig:
    """Declarative policy choice; resolve_policy turns it into an object.

    Only the fields of the active kind are consulted. A point threshold
    of None means "use the Bayes-optimal threshold for the scenario's
    model and costs"; a schedule rounds of None means "match the
    feedback horizon".
    """

    kind: str = "point_threshold"
    threshold: float | None = None
    lower: float | None = None
    upper: float | None = None
    action: str = "randomize"
    p_trust: float = 0.5
    start: float | None = None
    end: float | None = None
    rounds: int | None = None
    shape: str = "linear"
    confidence_floor: float = 0.9
    sharpen_factor_per_step: float = 0.8
    max_steps: int = 5
    step_cost: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"policy.kind must be one of {POLICY_KINDS}, got {self.kind!r}")
        if self.kind == "band" and (self.lower is None or self.upper is None):
            raise ValueError("a band policy requires policy.lower and policy.upper")
        if self.kind == "schedule" and (self.start is None or self.end is None):
            raise ValueError("a schedule policy requires policy.start and policy.end")


@dataclass(frozen=True)
class FeedbackConfig:
    """Knobs for the repeated-decision simulation."""

    rounds: int = 10
    cohort_size: int = 500
    delta_up: float = 0.05
    delta_down: float = 0.05
    chain_weight: float = 0.0
    initial_q_alpha: float = 5.0
    initial_q_beta: float = 2.0

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError(f"feedback.rounds must be at least 1, got {self.rounds}")
        if self.cohort_size < 1:
            raise ValueError(f"feedback.cohort_size must be at least 1, got {self.cohort_size}")
        if self.delta_up < 0.0 or self.delta_down < 0.0:
            raise ValueError("feedback.delta_up and feedback.delta_down must be nonnegative")
        if not math.isfinite(self.chain_weight):
            raise ValueError("feedback.chain_weight must be finite")
        if self.initial_q_alpha <= 0.0 or self.initial_q_beta <= 0.0:
            raise ValueError("initial q distribution parameters must be positive")


@dataclass(frozen=True)
class OutputConfig:
    """Where and how run artifacts are written."""

    directory: str | None = None
    formats: tuple[str, ...] = OUTPUT_FORMATS
    figures: tuple[int, ...] = ALL_FIGURES

    def __post_init__(self) -> None:
        if not self.formats:
            raise ValueError("output.formats must not be empty")
        for fmt in self.formats:
            if fmt not in OUTPUT_FORMATS:
                raise ValueError(f"unknown output format: {fmt!r}")
        for fig in self.figures:
            if fig not in ALL_FIGURES:
                raise ValueError(f"output.figures entries must be in 1..8, got {fig!r}")


@dataclass(frozen=True)
class Scenario:
    """A complete, validated experiment description."""

    model: PopulationModel
    costs: CostSpec = field(default_factory=lambda: CostSpec(c01=1.0, c10=1.0))
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    groups: GroupedPopulation | None = None
    believed_prior0: float | None = None
    oracle: OracleModel | None = None
    seed: int = 0
    mc_samples: int = 100_000

    def __post_init__(self) -> None:
        if self.believed_prior0 is not None and not 0.0 < self.believed_prior0 < 1.0:
            raise ValueError(
                f"believed_prior0 must lie strictly in (0, 1), got {self.believed_prior0}"
            )
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be at least 1, got {self.mc_samples}")


def resolve_policy(
    scenario: Scenario,
) -> DecisionRule | BandPolicy | ThresholdSchedule | AcquisitionPolicy:
    """Turn the scenario's declarative policy block into a policy object."""
    cfg = scenario.policy
    if cfg.kind == "point_threshold":
        if cfg.threshold is None:
            return bayes_rule(scenario.model, scenario.costs)
        return rule_at(scenario.model, cfg.threshold)
    if cfg.kind == "band":
        return BandPolicy(
            lower=cfg.lower, upper=cfg.upper, action=cfg.action, p_trust=cfg.p_trust
        )
    if cfg.kind == "schedule":
        rounds = cfg.rounds if cfg.rounds is not None else scenario.feedback.rounds
        return make_schedule(cfg.start, cfg.end, rounds, shape=cfg.shape)
    return AcquisitionPolicy(
        confidence_floor=cfg.confidence_floor,
        sharpen_factor_per_step=cfg.sharpen_factor_per_step,
        max_steps=cfg.max_steps,
        step_cost=cfg.step_cost,
    )


# -- strict mapping helpers ------------------------------------------------


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _require_mapping(value, path: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ValueError(f"{path or 'config'} must be a mapping, got {type(value).__name__}")
    return value


def _check_keys(mapping: Mapping, allowed: Sequence[str], path: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise ValueError(f"unknown key: {_join(path, str(key))!r}")


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{path} must be a number, got {value!r}")
    return float(value)


def _as_opt_float(value, path: str) -> float | None:
    return None if value is None else _as_float(value, path)


def _as_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{path} must be an integer, got {value!r}")
    return value


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ValueError(f"{path} must be a string, got {value!r}")
    return value


def _resolve_priors(raw: Mapping, path: str) -> tuple[float, float]:
    prior0 = _as_opt_float(raw.get("prior0"), _join(path, "prior0"))
    prior1 = _as_opt_float(raw.get("prior1"), _join(path, "prior1"))
    if prior0 is None and prior1 is None:
        return 0.5, 0.5
    if prior0 is not None and prior1 is not None:
        if abs(prior0 + prior1 - 1.0) > 1e-9:
            raise ValueError(
                f"{_join(path, 'prior0')} and {_join(path, 'prior1')} must sum to 1, "
                f"got {prior0} + {prior1}"
            )
        return prior0, 1.0 - prior0
    if prior0 is not None:
        return prior0, 1.0 - prior0
    return 1.0 - prior1, prior1


def _resolve_stddevs(raw: Mapping, path: str) -> tuple[float, float]:
    shared = raw.get("stddev")
    if shared is not None:
        if raw.get("stddev0") is not None or raw.get("stddev1") is not None:
            raise ValueError(
                f"{path}: give either a shared stddev or stddev0/stddev1, not both"
            )
        value = _as_float(shared, _join(path, "stddev"))
        return value, value
    s0 = _as_opt_float(raw.get("stddev0"), _join(path, "stddev0"))
    s1 = _as_opt_float(raw.get("stddev1"), _join(path, "stddev1"))
    return (1.0 if s0 is None else s0), (1.0 if s1 is None else s1)


_MODEL_KEYS = ("mean0", "mean1", "stddev", "stddev0", "stddev1", "prior0", "prior1")


def _parse_model(raw, path: str) -> PopulationModel:
    raw = _require_mapping(raw, path)
    _check_keys(raw, _MODEL_KEYS, path)
    mean0 = _as_float(raw.get("mean0", -1.0), _join(path, "mean0"))
    mean1 = _as_float(raw.get("mean1", 1.0), _join(path, "mean1"))
    s0, s1 = _resolve_stddevs(raw, path)
    p0, p1 = _resolve_priors(raw, path)
    return PopulationModel(
        cond0=GaussianConditional(mean=mean0, stddev=s0),
        cond1=GaussianConditional(mean=mean1, stddev=s1),
        prior0=p0,
        prior1=p1,
    )


def _parse_groups(raw, path: str) -> GroupedPopulation | None:
    if raw is None:
        return None
    if not isinstance(raw, list):
        raise ValueError(f"{path} must be a list of group entries")
    entries = []
    for i, item in enumerate(raw):
        entry_path = f"{path}[{i}]"
        item = _require_mapping(item, entry_path)
        _check_keys(item, ("id", "weight") + _MODEL_KEYS, entry_path)
        gid = _as_str(item.get("id"), _join(entry_path, "id"))
        weight = _as_float(item.get("weight"), _join(entry_path, "weight"))
        model_raw = {k: v for k, v in item.items() if k in _MODEL_KEYS}
        entries.append((gid, _parse_model(model_raw, entry_path), weight))
    return GroupedPopulation(groups=tuple(entries))


_POLICY_KEYS = (
    "kind",
    "threshold",
    "lower",
    "upper",
    "action",
    "p_trust",
    "start",
    "end",
    "rounds",
    "shape",
    "confidence_floor",
    "sharpen_factor_per_step",
    "max_steps",
    "step_cost",
)


def _parse_policy(raw, path: str) -> PolicyConfig:
    if raw is None:
        return PolicyConfig()
    raw = _require_mapping(raw, path)
    _check_keys(raw, _POLICY_KEYS, path)
    defaults = PolicyConfig()
    rounds = raw.get("rounds")
    return PolicyConfig(
        kind=_as_str(raw.get("kind", defaults.kind), _join(path, "kind")),
        threshold=_as_opt_float(raw.get("threshold"), _join(path, "threshold")),
        lower=_as_opt_float(raw.get("lower"), _join(path, "lower")),
        upper=_as_opt_float(raw.get("upper"), _join(path, "upper")),
        action=_as_str(raw.get("action", defaults.action), _join(path, "action")),
        p_trust=_as_float(raw.get("p_trust", defaults.p_trust), _join(path, "p_trust")),
        start=_as_opt_float(raw.get("start"), _join(path, "start")),
        end=_as_opt_float(raw.get("end"), _join(path, "end")),
        rounds=None if rounds is None else _as_int(rounds, _join(path, "rounds")),
        shape=_as_str(raw.get("shape", defaults.shape), _join(path, "shape")),
        confidence_floor=_as_float(
            raw.get("confidence_floor", defaults.confidence_floor),
            _join(path, "confidence_floor"),
        ),
        sharpen_factor_per_step=_as_float(
            raw.get("sharpen_factor_per_step", defaults.sharpen_factor_per_step),
            _join(path, "sharpen_factor_per_step"),
        ),
        max_steps=_as_int(raw.get("max_steps", defaults.max_steps), _join(path, "max_steps")),
        step_cost=_as_float(raw.get("step_cost", defaults.step_cost), _join(path, "step_cost")),
    )


def _parse_costs(raw, path: str) -> CostSpec:
    if raw is None:
        return CostSpec(c01=1.0, c10=1.0)
    raw = _require_mapping(raw, path)
    _check_keys(raw, ("c01", "c10"), path)
    return CostSpec(
        c01=_as_float(raw.get("c01", 1.0), _join(path, "c01")),
        c10=_as_float(raw.get("c10", 1.0), _join(path, "c10")),
    )


def _parse_feedback(raw, path: str) -> FeedbackConfig:
    if raw is None:
        return FeedbackConfig()
    raw = _require_mapping(raw, path)
    defaults = FeedbackConfig()
    keys = (
        "rounds",
        "cohort_size",
        "delta_up",
        "delta_down",
        "chain_weight",
        "initial_q_alpha",
        "initial_q_beta",
    )
    _check_keys(raw, keys, path)
    return FeedbackConfig(
        rounds=_as_int(raw.get("rounds", defaults.rounds), _join(path, "rounds")),
        cohort_size=_as_int(
            raw.get("cohort_size", defaults.cohort_size), _join(path, "cohort_size")
        ),
        delta_up=_as_float(raw.get("delta_up", defaults.delta_up), _join(path, "delta_up")),
        delta_down=_as_float(
            raw.get("delta_down", defaults.delta_down), _join(path, "delta_down")
        ),
        chain_weight=_as_float(
            raw.get("chain_weight", defaults.chain_weight), _join(path, "chain_weight")
        ),
        initial_q_alpha=_as_float(
            raw.get("initial_q_alpha", defaults.initial_q_alpha), _join(path, "initial_q_alpha")
        ),
        initial_q_beta=_as_float(
            raw.get("initial_q_beta", defaults.initial_q_beta), _join(path, "initial_q_beta")
        ),
    )


def _parse_oracle(raw, path: str) -> OracleModel | None:
    if raw is None:
        return None
    raw = _require_mapping(raw, path)
    _check_keys(raw, ("accuracy",), path)
    return OracleModel(accuracy=_as_float(raw.get("accuracy", 1.0), _join(path, "accuracy")))


def _parse_output(raw, path: str) -> OutputConfig:
    if raw is None:
        return OutputConfig()
    raw = _require_mapping(raw, path)
    _check_keys(raw, ("directory", "formats", "figures"), path)
    directory = raw.get("directory")
    if directory is not None:
        directory = _as_str(directory, _join(path, "directory"))
    formats = raw.get("formats")
    if formats is None:
        formats_tuple = OUTPUT_FORMATS
    else:
        if not isinstance(formats, list):
            raise ValueError(f"{_join(path, 'formats')} must be a list")
        formats_tuple = tuple(_as_str(f, _join(path, "formats")) for f in formats)
    figures = raw.get("figures")
    if figures is None:
        figures_tuple = ALL_FIGURES
    else:
        if not isinstance(figures, list):
            raise ValueError(f"{_join(path, 'figures')} must be a list")
        figures_tuple = tuple(_as_int(f, _join(path, "figures")) for f in figures)
    return OutputConfig(directory=directory, formats=formats_tuple, figures=figures_tuple)


_TOP_KEYS = (
    "model",
    "groups",
    "costs",
    "believed_prior0",
    "policy",
    "oracle",
    "feedback",
    "seed",
    "mc_samples",
    "output",
)


def parse_config(text: str) -> Scenario:
    """Parse and validate a YAML scenario config.

    Syntax errors are reported with their line and column; unknown keys
    are rejected with their full dotted path.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ValueError(
                f"config syntax error at line {mark.line + 1}, column {mark.column + 1}: "
                f"{problem}"
            ) from exc
        raise ValueError(f"config syntax error: {problem}") from exc
    if raw is None:
        raw = {}
    raw = _require_mapping(raw, "")
    _check_keys(raw, _TOP_KEYS, "")

    seed = raw.get("seed", 0)
    mc_samples = raw.get("mc_samples", 100_000)
    return Scenario(
        model=_parse_model(raw.get("model", {}), "model"),
        groups=_parse_groups(raw.get("groups"), "groups"),
        costs=_parse_costs(raw.get("costs"), "costs"),
        believed_prior0=_as_opt_float(raw.get("believed_prior0"), "believed_prior0"),
        policy=_parse_policy(raw.get("policy"), "policy"),
        oracle=_parse_oracle(raw.get("oracle"), "oracle"),
        feedback=_parse_feedback(raw.get("feedback"), "feedback"),
        seed=_as_int(seed, "seed"),
        mc_samples=_as_int(mc_samples, "mc_samples"),
        output=_parse_output(raw.get("output"), "output"),
    )


def parse_config_file(path) -> Scenario:
    from pathlib import Path

    return parse_config(Path(path).read_text(encoding="utf-8"))


def scenario_to_mapping(scenario: Scenario) -> dict:
    """Echo a scenario as a plain mapping, defaults included.

    parse_config(yaml.safe_dump(scenario_to_mapping(s))) reproduces s
    exactly, so the mapping doubles as a reproducibility record.
    """
    model = scenario.model
    groups = None
    if scenario.groups is not None:
        groups = [
            {
                "id": gid,
                "weight": weight,
                "mean0": m.cond0.mean,
                "mean1": m.cond1.mean,
                "stddev0": m.cond0.stddev,
                "stddev1": m.cond1.stddev,
                "prior0": m.prior0,
                "prior1": m.prior1,
            }
            for gid, m, weight in scenario.groups.groups
        ]
    policy = scenario.policy
    return {
        "model": {
            "mean0": model.cond0.mean,
            "mean1": model.cond1.mean,
            "stddev0": model.cond0.stddev,
            "stddev1": model.cond1.stddev,
            "prior0": model.prior0,
            "prior1": model.prior1,
        },
        "groups": groups,
        "costs": {"c01": scenario.costs.c01, "c10": scenario.costs.c10},
        "believed_prior0": scenario.believed_prior0,
        "policy": {
            "kind": policy.kind,
            "threshold": policy.threshold,
            "lower": policy.lower,
            "upper": policy.upper,
            "action": policy.action,
            "p_trust": policy.p_trust,
            "start": policy.start,
            "end": policy.end,
            "rounds": policy.rounds,
            "shape": policy.shape,
            "confidence_floor": policy.confidence_floor,
            "sharpen_factor_per_step": policy.sharpen_factor_per_step,
            "max_steps": policy.max_steps,
            "step_cost": policy.step_cost,
        },
        "oracle": None if scenario.oracle is None else {"accuracy": scenario.oracle.accuracy},
        "feedback": {
            "rounds": scenario.feedback.rounds,
            "cohort_size": scenario.feedback.cohort_size,
            "delta_up": scenario.feedback.delta_up,
            "delta_down": scenario.feedback.delta_down,
            "chain_weight": scenario.feedback.chain_weight,
            "initial_q_alpha": scenario.feedback.initial_q_alpha,
            "initial_q_beta": scenario.feedback.initial_q_beta,
        },
        "seed": scenario.seed,
        "mc_samples": scenario.mc_samples,
        "output": {
            "directory": scenario.output.directory,
            "formats": list(scenario.output.formats),
            "figures": list(scenario.output.figures),
        },
    }


def default_scenario() -> Scenario:
    """The symmetric reference scenario used by figure presets.

    Class-conditional signals are N(-1, 1) and N(+1, 1) with equal
    priors, so the balanced threshold sits at 0 and a cost or prior
    ratio of r moves it to ln(r)/2.
    """
    return Scenario(
        model=PopulationModel(
            cond0=GaussianConditional(mean=-1.0, stddev=1.0),
            cond1=GaussianConditional(mean=1.0, stddev=1.0),
            prior0=0.5,
            prior1=0.5,
        )
    )
