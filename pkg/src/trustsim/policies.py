"""Humble alternatives to a bare point threshold.

Three mechanisms: an uncertainty band around the threshold whose cases are
either randomized or deferred to a reviewer, a monotone schedule that
tightens the threshold round by round, and feature acquisition that keeps
buying precision while the posterior stays too close to even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .decisions import ErrorRates
from .distributions import (
    STREAM_ACQUISITION,
    STREAM_BAND,
    PopulationModel,
    posterior_trustworthy,
    sharpen,
    spawn_generator,
)

BAND_ACTIONS = ("randomize", "defer")


@dataclass(frozen=True)
class BandPolicy:
    """Decision band [lower, upper]: above trusts, below distrusts.

    In-band cases are either randomized (trust with probability p_trust)
    or deferred to an external reviewer. A zero-width band collapses to
    the point rule at that threshold.
    """

    lower: float
    upper: float
    action: str
    p_trust: float = 0.5

    def __post_init__(self) -> None:
        if self.action not in BAND_ACTIONS:
            raise ValueError(f"action must be one of {BAND_ACTIONS}, got {self.action!r}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("band edges must be finite")
        if self.lower > self.upper:
            raise ValueError("band lower edge must not exceed the upper edge")
        if not (0.0 <= self.p_trust <= 1.0):
            raise ValueError("p_trust must lie in [0, 1]")


@dataclass(frozen=True)
class OracleModel:
    """Reviewer abstraction: the deferred call matches the true label with this probability."""

    accuracy: float

    def __post_init__(self) -> None:
        if not (0.5 <= self.accuracy <= 1.0):
            raise ValueError("oracle accuracy must lie in [0.5, 1]")


class BandDecision(NamedTuple):
    label: int
    by: str  # "machine" | "random" | "oracle"


def band_decide(
    policy: BandPolicy,
    x: float,
    true_label: int,
    oracle: OracleModel | None = None,
    seed: int | None = None,
) -> BandDecision:
    """Decide one case under a band policy.

    Outside the band the machine decides by threshold. Inside, randomize
    trusts with probability p_trust and defer asks the oracle, which
    returns the true label with probability equal to its accuracy.
    """
    if true_label not in (0, 1):
        raise ValueError("true_label must be 0 or 1")
    if policy.action == "defer" and oracle is None:
        raise ValueError("defer action requires an oracle")
    if policy.action == "randomize" and seed is None:
        raise ValueError("randomize action requires a seed")

    # regions follow the closed forms in band_error_rates: the band is (lower, upper]
    if x > policy.upper:
        return BandDecision(label=1, by="machine")
    if x <= policy.lower:
        return BandDecision(label=0, by="machine")

    if policy.action == "randomize":
        rng = spawn_generator(seed, STREAM_BAND)
        return BandDecision(label=int(rng.random() < policy.p_trust), by="random")

    if oracle.accuracy < 1.0:
        if seed is None:
            raise ValueError("an imperfect oracle requires a seed")
        rng = spawn_generator(seed, STREAM_BAND)
        correct = rng.random() < oracle.accuracy
    else:
        correct = True
    return BandDecision(label=true_label if correct else 1 - true_label, by="oracle")


def band_error_rates(
    model: PopulationModel, policy: BandPolicy, oracle: OracleModel | None = None
) -> ErrorRates:
    """Closed-form error rates of a band policy.

    With in-band mass m_y = P(lower < X <= upper | y):
      defer(accuracy a):  fpr = P(X > upper | 0) + (1 - a) * m_0
                          fnr = P(X < lower | 1) + (1 - a) * m_1
                          deferral_rate = p0 * m_0 + p1 * m_1
      randomize(p):       fpr = P(X > upper | 0) + p * m_0
                          fnr = P(X < lower | 1) + (1 - p) * m_1
    """
    if policy.action == "defer" and oracle is None:
        raise ValueError("defer action requires an oracle")

    upper_tail0 = 1.0 - model.cond0.cdf(policy.upper)
    lower_tail1 = model.cond1.cdf(policy.lower)
    in_band0 = model.cond0.cdf(policy.upper) - model.cond0.cdf(policy.lower)
    in_band1 = model.cond1.cdf(policy.upper) - model.cond1.cdf(policy.lower)

    if policy.action == "defer":
        miss = 1.0 - oracle.accuracy
        fpr = upper_tail0 + miss * in_band0
        fnr = lower_tail1 + miss * in_band1
        deferral = model.prior0 * in_band0 + model.prior1 * in_band1
    else:
        fpr = upper_tail0 + policy.p_trust * in_band0
        fnr = lower_tail1 + (1.0 - policy.p_trust) * in_band1
        deferral = 0.0
    return ErrorRates(fpr=fpr, fnr=fnr, tpr=1.0 - fnr, tnr=1.0 - fpr, deferral_rate=deferral)


@dataclass(frozen=True)
class ThresholdSchedule:
    """Per-round feature thresholds, tightening (nondecreasing) over time."""

    thresholds: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.thresholds) == 0:
            raise ValueError("a schedule needs at least one threshold")
        for a, b in zip(self.thresholds, self.thresholds[1:]):
            if b < a:
                raise ValueError("schedule thresholds must be nondecreasing")


# Each round closes half of the remaining distance to the end threshold.
_GEOMETRIC_GAP_FACTOR = 0.5


def make_schedule(start: float, end: float, rounds: int, shape: str = "linear") -> ThresholdSchedule:
    """Build a nondecreasing threshold schedule from start toward end.

    linear takes equal steps and reaches end exactly. geometric_gap
    shrinks the remaining gap to end by a constant factor of 0.5 each
    round, so it approaches end without reaching it. A single-round
    schedule is just [end].
    """
    if start > end:
        raise ValueError("start must not exceed end: schedules only tighten")
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if shape not in ("linear", "geometric_gap"):
        raise ValueError(f"unknown schedule shape: {shape!r}")
    if rounds == 1:
        return ThresholdSchedule(thresholds=(end,))
    if shape == "linear":
        values = np.linspace(start, end, rounds)
    else:
        gaps = (end - start) * _GEOMETRIC_GAP_FACTOR ** np.arange(rounds)
        values = end - gaps
    return ThresholdSchedule(thresholds=tuple(float(v) for v in values))


@dataclass(frozen=True)
class AcquisitionPolicy:
    """Keep acquiring sharper observations while the posterior is indecisive.

    confidence_floor is the posterior certainty that stops acquisition;
    each step multiplies both class stddevs by sharpen_factor_per_step and
    costs step_cost.
    """

    confidence_floor: float
    sharpen_factor_per_step: float
    max_steps: int
    step_cost: float = 0.0

    def __post_init__(self) -> None:
        if not (0.5 < self.confidence_floor < 1.0):
            raise ValueError("confidence_floor must lie strictly between 0.5 and 1")
        if not (0.0 < self.sharpen_factor_per_step < 1.0):
            raise ValueError("sharpen_factor_per_step must lie strictly between 0 and 1")
        if self.max_steps < 0:
            raise ValueError("max_steps must be nonnegative")
        if self.step_cost < 0.0:
            raise ValueError("step_cost must be nonnegative")


class AcquisitionResult(NamedTuple):
    posterior1: float
    steps_taken: int
    decision: int


def acquire_features(
    model: PopulationModel,
    x: float,
    policy: AcquisitionPolicy,
    true_label: int,
    seed: int,
) -> AcquisitionResult:
    """Sharpen the model and re-observe until the posterior is confident.

    While max(posterior, 1 - posterior) stays below the confidence floor
    and steps remain, the model is sharpened and x is redrawn from the
    sharpened conditional of the individual's true label (a fresh
    observation at higher precision). The final decision is posterior >= 0.5.
    """
    if true_label not in (0, 1):
        raise ValueError("true_label must be 0 or 1")
    rng = spawn_generator(seed, STREAM_ACQUISITION)
    current = model
    posterior = posterior_trustworthy(current, x)
    steps = 0
    while max(posterior, 1.0 - posterior) < policy.confidence_floor and steps < policy.max_steps:
        current = sharpen(current, policy.sharpen_factor_per_step)
        cond = current.conditional(true_label)
        x = cond.mean + cond.stddev * rng.standard_normal()
        posterior = posterior_trustworthy(current, x)
        steps += 1
    return AcquisitionResult(posterior1=posterior, steps_taken=steps, decision=int(posterior >= 0.5))
