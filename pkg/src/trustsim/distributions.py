"""Gaussian class-conditional population models with seeded sampling.

The observable is a single real feature x. Label 1 means trustworthy and
sits to the right of label 0 by convention, so larger x reads as stronger
evidence of trustworthiness.

Seeding rule: every operation that takes a seed builds its generator as
``default_rng(SeedSequence(seed, spawn_key=(stream,)))`` where ``stream``
is a small integer unique to the operation (see the ``STREAM_*`` constants
below). Two operations given the same seed therefore consume disjoint
random streams, and any single operation is bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtr

STREAM_SAMPLING = 0
STREAM_BAND = 1
STREAM_ACQUISITION = 2
STREAM_FEEDBACK = 3
STREAM_CHAIN = 4

_LOG_ROOT_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def spawn_generator(seed: int, stream: int) -> np.random.Generator:
    """Return the deterministic generator for one (seed, stream) pair."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


@dataclass(frozen=True)
class GaussianConditional:
    """One class-conditional distribution of the feature: N(mean, stddev**2)."""

    mean: float
    stddev: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.mean):
            raise ValueError("mean must be finite")
        if not (math.isfinite(self.stddev) and self.stddev > 0.0):
            raise ValueError("stddev must be strictly positive")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.stddev
        out = np.exp(-0.5 * z * z) / (self.stddev * math.sqrt(2.0 * math.pi))
        return float(out) if np.isscalar(x) else out

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.stddev
        out = -0.5 * z * z - math.log(self.stddev) - _LOG_ROOT_TWO_PI
        return float(out) if np.isscalar(x) else out

    def cdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.stddev
        out = ndtr(z)
        return float(out) if np.isscalar(x) else out


@dataclass(frozen=True)
class PopulationModel:
    """Two class conditionals plus prior class probabilities.

    cond0 describes the untrustworthy class (label 0), cond1 the
    trustworthy class (label 1). cond0.mean must not exceed cond1.mean so
    that larger x always points toward label 1.
    """

    cond0: GaussianConditional
    cond1: GaussianConditional
    prior0: float
    prior1: float

    def __post_init__(self) -> None:
        for name, p in (("prior0", self.prior0), ("prior1", self.prior1)):
            if not (0.0 < p < 1.0):
                raise ValueError(f"{name} must lie strictly inside (0, 1)")
        if self.prior0 + self.prior1 != 1.0:
            raise ValueError("prior0 + prior1 must equal 1 exactly")
        if self.cond0.mean > self.cond1.mean:
            raise ValueError("cond0.mean must not exceed cond1.mean")

    def conditional(self, label: int) -> GaussianConditional:
        _check_label(label)
        return self.cond1 if label == 1 else self.cond0


@dataclass(frozen=True)
class GroupedPopulation:
    """Mixture of per-group population models with mixing weights."""

    groups: tuple[tuple[str, PopulationModel, float], ...]

    def __post_init__(self) -> None:
        if len(self.groups) == 0:
            raise ValueError("at least one group is required")
        seen = set()
        for group_id, _, weight in self.groups:
            if group_id in seen:
                raise ValueError(f"duplicate group id: {group_id!r}")
            seen.add(group_id)
            if not (0.0 < weight <= 1.0):
                raise ValueError(f"group {group_id!r}: weight must be in (0, 1]")
        total = math.fsum(weight for _, _, weight in self.groups)
        if abs(total - 1.0) > 1e-9:
            raise ValueError("group weights must sum to 1")


@dataclass(frozen=True, slots=True)
class Sample:
    """One drawn individual: feature value, true label, and bookkeeping ids."""

    x: float
    true_label: int
    group_id: str
    individual_id: int

    def __post_init__(self) -> None:
        if self.true_label not in (0, 1):
            raise ValueError("true_label must be 0 or 1")


def _check_label(label: int) -> None:
    if label not in (0, 1):
        raise ValueError("label must be 0 or 1")


def density(model: PopulationModel, x: float, label: int) -> float:
    """Class-conditional density of the feature at x given the label."""
    return model.conditional(label).pdf(x)


def cdf(model: PopulationModel, x: float, label: int) -> float:
    """Class-conditional probability that the feature is at most x."""
    return model.conditional(label).cdf(x)


def posterior_trustworthy(model: PopulationModel, x):
    """Posterior probability of label 1 given the observed feature.

    Computed in log space so that values deep in either tail resolve to
    0 or 1 instead of underflowing to 0/0.
    """
    log_w0 = math.log(model.prior0) + model.cond0.logpdf(x)
    log_w1 = math.log(model.prior1) + model.cond1.logpdf(x)
    out = np.exp(log_w1 - np.logaddexp(log_w0, log_w1))
    return float(out) if np.isscalar(x) else out


def sharpen(model: PopulationModel, k: float) -> PopulationModel:
    """Scale both class stddevs by k in (0, 1]; means and priors unchanged."""
    if not (0.0 < k <= 1.0):
        raise ValueError("sharpen factor k must lie in (0, 1]")
    return replace(
        model,
        cond0=replace(model.cond0, stddev=model.cond0.stddev * k),
        cond1=replace(model.cond1, stddev=model.cond1.stddev * k),
    )


def sample_xy(
    model: PopulationModel, n: int, seed: int, rng: np.random.Generator | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Array-valued sampler: (features, labels) for n individuals.

    Draw order is fixed (n label uniforms, then n standard normals), so the
    i-th entry matches sample_population(model, n, seed)[i] exactly.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if rng is None:
        rng = spawn_generator(seed, STREAM_SAMPLING)
    labels = (rng.random(n) < model.prior1).astype(np.int64)
    means = np.where(labels == 1, model.cond1.mean, model.cond0.mean)
    stds = np.where(labels == 1, model.cond1.stddev, model.cond0.stddev)
    x = means + stds * rng.standard_normal(n)
    return x, labels


def sample_population(
    model: PopulationModel | GroupedPopulation, n: int, seed: int
) -> list[Sample]:
    """Draw n individuals: label from the priors, feature from its conditional.

    Ungrouped models report group_id "all". Identical (model, n, seed)
    arguments always produce identical output.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = spawn_generator(seed, STREAM_SAMPLING)
    if isinstance(model, GroupedPopulation):
        return _sample_grouped(model, n, rng)
    x, labels = sample_xy(model, n, seed, rng=rng)
    return [
        Sample(x=float(x[i]), true_label=int(labels[i]), group_id="all", individual_id=i)
        for i in range(n)
    ]


def _sample_grouped(grouped: GroupedPopulation, n: int, rng: np.random.Generator) -> list[Sample]:
    weights = np.array([w for _, _, w in grouped.groups])
    edges = np.cumsum(weights)
    edges[-1] = 1.0  # guard fsum roundoff so the last group absorbs u == 1 - eps
    group_idx = np.searchsorted(edges, rng.random(n), side="right")
    group_idx = np.minimum(group_idx, len(grouped.groups) - 1)

    prior1 = np.array([m.prior1 for _, m, _ in grouped.groups])[group_idx]
    labels = (rng.random(n) < prior1).astype(np.int64)
    mean0 = np.array([m.cond0.mean for _, m, _ in grouped.groups])[group_idx]
    mean1 = np.array([m.cond1.mean for _, m, _ in grouped.groups])[group_idx]
    std0 = np.array([m.cond0.stddev for _, m, _ in grouped.groups])[group_idx]
    std1 = np.array([m.cond1.stddev for _, m, _ in grouped.groups])[group_idx]
    means = np.where(labels == 1, mean1, mean0)
    stds = np.where(labels == 1, std1, std0)
    x = means + stds * rng.standard_normal(n)

    ids = [gid for gid, _, _ in grouped.groups]
    return [
        Sample(
            x=float(x[i]),
            true_label=int(labels[i]),
            group_id=ids[group_idx[i]],
            individual_id=i,
        )
        for i in range(n)
    ]
