"""Cost-optimal threshold rules, their error rates, and expected-cost reports.

The optimal rule trusts exactly when the likelihood ratio
p(x | trustworthy) / p(x | untrustworthy) exceeds
eta = (c01 * p0) / (c10 * p1): raising the cost of trusting the wrong
person raises eta and pushes the feature threshold right. For equal
variance Gaussian conditionals the log likelihood ratio is affine in x,
so the threshold has the closed form

    x_star = (mean0 + mean1) / 2 + stddev**2 * ln(eta) / (mean1 - mean0)

and a bisection solver on the log likelihood ratio is provided as an
independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import PopulationModel, sample_xy

_BISECT_TOL = 1e-12
_BISECT_MAX_ITER = 200

# Half-width, in pooled stddevs, of the surrogate for an infinite threshold:
# far enough out that both class tails carry no float mass.
_FAR_SIGMAS = 40.0


@dataclass(frozen=True)
class CostSpec:
    """Error costs: c01 for trusting the untrustworthy, c10 for distrusting the trustworthy."""

    c01: float
    c10: float

    def __post_init__(self) -> None:
        for name, c in (("c01", self.c01), ("c10", self.c10)):
            if not (math.isfinite(c) and c > 0.0):
                raise ValueError(f"{name} must be finite and strictly positive")


@dataclass(frozen=True)
class DecisionRule:
    """A point threshold in feature space: predict 1 iff x > x_star."""

    x_star: float
    eta: float
    kind: str = "point_threshold"

    def __post_init__(self) -> None:
        if self.kind != "point_threshold":
            raise ValueError(f"unknown rule kind: {self.kind!r}")
        if not math.isfinite(self.x_star):
            raise ValueError("x_star must be finite")
        if not (self.eta > 0.0):
            raise ValueError("eta must be strictly positive")


@dataclass(frozen=True)
class ErrorRates:
    """FPR/FNR and complements, plus deferral mass and Monte Carlo standard errors.

    tpr and tnr are complements of fnr and fpr over the decided mass;
    deferral_rate is zero for point rules and for randomized bands.
    """

    fpr: float
    fnr: float
    tpr: float
    tnr: float
    deferral_rate: float = 0.0
    stderr_fpr: float = 0.0
    stderr_fnr: float = 0.0

    def __post_init__(self) -> None:
        for name in ("fpr", "fnr", "tpr", "tnr", "deferral_rate"):
            value = getattr(self, name)
            if not (-1e-12 <= value <= 1.0 + 1e-12):
                raise ValueError(f"{name} must be a probability, got {value}")
        if self.stderr_fpr < 0.0 or self.stderr_fnr < 0.0:
            raise ValueError("standard errors must be nonnegative")


@dataclass(frozen=True)
class RiskReport:
    """Expected cost of a rule and its regret against the cost-optimal rule."""

    risk: float
    threshold_used: float
    regret: float


def lr_threshold(costs: CostSpec, prior0: float, prior1: float) -> float:
    """Likelihood-ratio cutoff eta = (c01 * p0) / (c10 * p1)."""
    if not (prior0 > 0.0 and prior1 > 0.0):
        raise ValueError("priors must be strictly positive")
    return (costs.c01 * prior0) / (costs.c10 * prior1)


def log_likelihood_ratio(model: PopulationModel, x):
    """log p(x | label 1) - log p(x | label 0), vectorized over x."""
    return model.cond1.logpdf(x) - model.cond0.logpdf(x)


def _require_monotone_lr(model: PopulationModel) -> None:
    if model.cond0.stddev != model.cond1.stddev:
        raise ValueError(
            "unequal class stddevs make the likelihood ratio non-monotone; "
            "point-threshold rules are unsupported for this model"
        )
    if model.cond0.mean == model.cond1.mean:
        raise ValueError("equal class means leave the likelihood ratio constant")


def threshold_x(model: PopulationModel, eta: float) -> float:
    """Feature threshold solving LR(x) = eta for an equal-variance model."""
    if not (eta > 0.0 and math.isfinite(eta)):
        raise ValueError("eta must be finite and strictly positive")
    _require_monotone_lr(model)
    mu0, mu1 = model.cond0.mean, model.cond1.mean
    sigma = model.cond0.stddev
    return (mu0 + mu1) / 2.0 + sigma * sigma * math.log(eta) / (mu1 - mu0)


def bisect_threshold(model: PopulationModel, eta: float) -> float:
    """Solve LR(x) = eta by bisection on the log likelihood ratio.

    Brackets over [mean0 - 12 sigma, mean1 + 12 sigma] and stops at an
    interval width of 1e-12 or after 200 iterations. Serves as an
    independent check on the closed form in threshold_x.
    """
    if not (eta > 0.0 and math.isfinite(eta)):
        raise ValueError("eta must be finite and strictly positive")
    _require_monotone_lr(model)
    target = math.log(eta)
    lo = model.cond0.mean - 12.0 * model.cond0.stddev
    hi = model.cond1.mean + 12.0 * model.cond1.stddev
    f_lo = log_likelihood_ratio(model, lo) - target
    f_hi = log_likelihood_ratio(model, hi) - target
    if f_lo > 0.0 or f_hi < 0.0:
        raise ValueError("eta is not bracketed within 12 stddevs of the class means")
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if log_likelihood_ratio(model, mid) - target <= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= _BISECT_TOL:
            break
    return 0.5 * (lo + hi)


def bayes_rule(model: PopulationModel, costs: CostSpec) -> DecisionRule:
    """The cost-optimal point rule for this model and these costs."""
    eta = lr_threshold(costs, model.prior0, model.prior1)
    return DecisionRule(x_star=threshold_x(model, eta), eta=eta)


def rule_at(model: PopulationModel, x_star: float) -> DecisionRule:
    """Point rule at an arbitrary threshold, with eta = LR(x_star)."""
    llr = float(log_likelihood_ratio(model, x_star))
    # exp underflows to 0 at very permissive thresholds; clamp to keep eta > 0
    return DecisionRule(x_star=x_star, eta=math.exp(min(max(llr, -700.0), 700.0)))


def accept_all_threshold(model: PopulationModel) -> float:
    """Surrogate for an infinitely permissive threshold (trust everyone)."""
    return model.cond0.mean - _FAR_SIGMAS * max(model.cond0.stddev, model.cond1.stddev)


def reject_all_threshold(model: PopulationModel) -> float:
    """Surrogate for an infinitely stringent threshold (trust no one)."""
    return model.cond1.mean + _FAR_SIGMAS * max(model.cond0.stddev, model.cond1.stddev)


def classify(rule: DecisionRule, x: float) -> int:
    """Predict 1 iff x is strictly above the threshold; ties go to 0."""
    return 1 if x > rule.x_star else 0


def error_rates_analytic(model: PopulationModel, rule: DecisionRule) -> ErrorRates:
    """Exact error rates of a point rule: fpr = 1 - F0(x_star), fnr = F1(x_star)."""
    fpr = 1.0 - model.cond0.cdf(rule.x_star)
    fnr = model.cond1.cdf(rule.x_star)
    return ErrorRates(fpr=fpr, fnr=fnr, tpr=1.0 - fnr, tnr=1.0 - fpr)


def error_rates_mc(model: PopulationModel, rule: DecisionRule, n: int, seed: int) -> ErrorRates:
    """Empirical error rates from n seeded draws, with binomial standard errors.

    A class with no drawn members reports a rate of 0 with stderr 0.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    x, labels = sample_xy(model, n, seed)
    predicted = x > rule.x_star

    n0 = int(np.sum(labels == 0))
    n1 = n - n0
    fpr = float(np.sum(predicted & (labels == 0))) / n0 if n0 else 0.0
    fnr = float(np.sum(~predicted & (labels == 1))) / n1 if n1 else 0.0
    stderr_fpr = math.sqrt(fpr * (1.0 - fpr) / n0) if n0 else 0.0
    stderr_fnr = math.sqrt(fnr * (1.0 - fnr) / n1) if n1 else 0.0
    return ErrorRates(
        fpr=fpr,
        fnr=fnr,
        tpr=1.0 - fnr,
        tnr=1.0 - fpr,
        stderr_fpr=stderr_fpr,
        stderr_fnr=stderr_fnr,
    )


def expected_cost(model: PopulationModel, costs: CostSpec, rule: DecisionRule) -> float:
    """Expected cost c01 * p0 * fpr + c10 * p1 * fnr of a point rule."""
    rates = error_rates_analytic(model, rule)
    return costs.c01 * model.prior0 * rates.fpr + costs.c10 * model.prior1 * rates.fnr


def misclassification_rate(model: PopulationModel, rule: DecisionRule) -> float:
    """Prior-weighted probability of any error: p0 * fpr + p1 * fnr."""
    rates = error_rates_analytic(model, rule)
    return model.prior0 * rates.fpr + model.prior1 * rates.fnr


def bayes_risk(model: PopulationModel, costs: CostSpec, rule: DecisionRule) -> RiskReport:
    """Expected cost of a rule and its regret against the cost-optimal rule.

    Regret is clamped at zero: it can only dip below by float roundoff,
    and it is exactly zero when the rule's threshold equals the optimal one.
    """
    risk = expected_cost(model, costs, rule)
    optimal = expected_cost(model, costs, bayes_rule(model, costs))
    return RiskReport(risk=risk, threshold_used=rule.x_star, regret=max(0.0, risk - optimal))


def mistaken_prior_rule(
    model: PopulationModel, believed_prior0: float, costs: CostSpec
) -> DecisionRule:
    """Rule a decider would use under a wrong belief about the class mix.

    The threshold comes from the believed priors; any risk evaluation of
    the returned rule (bayes_risk) still uses the model's true priors.
    """
    if not (0.0 < believed_prior0 < 1.0):
        raise ValueError("believed_prior0 must lie strictly inside (0, 1)")
    eta = lr_threshold(costs, believed_prior0, 1.0 - believed_prior0)
    return DecisionRule(x_star=threshold_x(model, eta), eta=eta)
