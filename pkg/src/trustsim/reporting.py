"""Fairness and calibration metrics, figure-data tables, and file output.

Output contract: CSV files are RFC-4180-style with a header row, UTF-8,
LF line endings, and floats rendered with 17 significant digits; JSON
files use sorted keys and Python's shortest round-trip float form; every
output directory gets a manifest.json mapping each file name to its
SHA-256 digest. Identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .decisions import (
    CostSpec,
    ErrorRates,
    bayes_rule,
    bayes_risk,
    error_rates_analytic,
    expected_cost,
    misclassification_rate,
    mistaken_prior_rule,
)
from .distributions import GroupedPopulation, PopulationModel, sharpen
from .feedback import RoundLog
from .policies import BandPolicy, OracleModel, band_error_rates, make_schedule

if TYPE_CHECKING:
    from .config import Scenario

GroupRates = dict[str, ErrorRates]

FIGURE_IDS = (1, 2, 3, 4, 5, 6, 7, 8)

_GRID_POINTS = 1001
_GRID_SIGMAS = 4.0


def group_error_rates(grouped: GroupedPopulation, rule) -> GroupRates:
    """Analytic error rates of one shared rule, evaluated per group."""
    return {gid: error_rates_analytic(model, rule) for gid, model, _ in grouped.groups}


def eo_gap(rates: Mapping[str, ErrorRates], group_a: str, group_b: str) -> float:
    """Equal-opportunity gap: absolute difference of the two groups' TPRs."""
    for gid in (group_a, group_b):
        if gid not in rates:
            raise ValueError(f"unknown group: {gid!r}")
    return abs(rates[group_a].tpr - rates[group_b].tpr)


def ece(predictions: Sequence[tuple[float, int]], bins: int = 10) -> float:
    """Expected calibration error with equal-width confidence bins on [0, 1].

    Each prediction is a (posterior-of-1, outcome) pair. Empty bins
    contribute nothing; a posterior of exactly 1.0 falls in the last bin.
    """
    if bins < 1:
        raise ValueError("bins must be at least 1")
    arr = np.asarray(predictions, dtype=float)
    if arr.size == 0:
        raise ValueError("predictions must be nonempty")
    conf = arr[:, 0]
    outcome = arr[:, 1]
    if np.any((conf < 0.0) | (conf > 1.0)):
        raise ValueError("posteriors must lie in [0, 1]")
    idx = np.minimum((conf * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins)
    sum_conf = np.bincount(idx, weights=conf, minlength=bins)
    sum_out = np.bincount(idx, weights=outcome, minlength=bins)
    nonempty = counts > 0
    gaps = np.abs(sum_conf[nonempty] - sum_out[nonempty]) / counts[nonempty]
    return float(np.sum(gaps * counts[nonempty]) / arr.shape[0])


@dataclass(frozen=True)
class FigureTable:
    """Columnar data behind one preset figure, plus checkable metadata.

    The metadata carries every parameter and computed rate needed to verify
    the figure's ordering claim without rerunning the engine.
    """

    figure_id: int
    columns: dict[str, tuple[float, ...]]
    metadata: dict

    def __post_init__(self) -> None:
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"figure_id must be in 1..8, got {self.figure_id}")
        if "x" not in self.columns:
            raise ValueError("a figure table requires an x column")
        lengths = {name: len(col) for name, col in self.columns.items()}
        if len(set(lengths.values())) != 1:
            raise ValueError(f"all columns must have equal length, got {lengths}")
        x = self.columns["x"]
        if any(b <= a for a, b in zip(x, x[1:])):
            raise ValueError("the x grid must be strictly increasing")


def _grid(model: PopulationModel) -> np.ndarray:
    lo = model.cond0.mean - _GRID_SIGMAS * model.cond0.stddev
    hi = model.cond1.mean + _GRID_SIGMAS * model.cond1.stddev
    return np.linspace(lo, hi, _GRID_POINTS)


def _density_columns(model: PopulationModel, x: np.ndarray) -> dict[str, tuple[float, ...]]:
    return {
        "x": tuple(float(v) for v in x),
        "density0": tuple(float(v) for v in model.cond0.pdf(x)),
        "density1": tuple(float(v) for v in model.cond1.pdf(x)),
    }


def _const(x: np.ndarray, value: float) -> tuple[float, ...]:
    return (float(value),) * len(x)


def _rates_dict(rates: ErrorRates) -> dict:
    return asdict(rates)


_COST_RATIO_FIGURES = {1: 1.0, 2: 9.0, 3: 27.0}

_CLAIMS = {
    1: "equal costs and equal priors put the threshold at the class midpoint, "
    "so the false positive and false negative rates are equal",
    2: "a higher false positive cost moves the threshold right, trading a larger "
    "false negative rate for a smaller false positive rate",
    3: "an even higher false positive cost pushes the threshold into the upper "
    "tail of both conditionals, so false negatives dominate",
    4: "overstating the prior share of untrustworthy people shifts the threshold "
    "as if false positives were costlier, adding avoidable misclassification",
    5: "narrowing both class conditionals separates the classes better and "
    "shrinks both error rates at the optimal threshold",
    6: "inside the band the call is randomized, which trades some extra false "
    "positives for fewer false negatives than the strict rule at the upper edge",
    7: "deferring band cases to an accurate reviewer keeps the strict rule's "
    "false positive rate while sharply cutting its false negative rate",
    8: "the threshold starts permissive and tightens every round, so early "
    "rounds trust broadly while later rounds converge to the strict rule",
}


def emit_figure_data(figure_id: int, scenario: "Scenario") -> FigureTable:
    """Tabulate one preset figure on a 1001-point grid over the model's span.

    The model and priors come from the scenario; each figure's cost ratio,
    believed prior, sharpening factor, band, or schedule is a fixed preset
    recorded in the emitted metadata.
    """
    if figure_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure id: {figure_id!r}")
    model = scenario.model
    x = _grid(model)
    meta: dict = {
        "figure_id": figure_id,
        "claim": _CLAIMS[figure_id],
        "prior0": model.prior0,
        "prior1": model.prior1,
    }

    if figure_id in _COST_RATIO_FIGURES:
        ratio = _COST_RATIO_FIGURES[figure_id]
        costs = CostSpec(c01=ratio, c10=1.0)
        rule = bayes_rule(model, costs)
        rates = error_rates_analytic(model, rule)
        columns = _density_columns(model, x)
        columns["threshold"] = _const(x, rule.x_star)
        meta.update(
            cost_ratio=ratio,
            c01=costs.c01,
            c10=costs.c10,
            eta=rule.eta,
            threshold=rule.x_star,
            fpr=rates.fpr,
            fnr=rates.fnr,
            risk=expected_cost(model, costs, rule),
        )
        return FigureTable(figure_id=figure_id, columns=columns, metadata=meta)

    if figure_id == 4:
        believed = scenario.believed_prior0 if scenario.believed_prior0 is not None else 0.9
        costs = CostSpec(c01=1.0, c10=1.0)
        mistaken = mistaken_prior_rule(model, believed, costs)
        optimal = bayes_rule(model, costs)
        report = bayes_risk(model, costs, mistaken)
        columns = _density_columns(model, x)
        columns["threshold"] = _const(x, mistaken.x_star)
        columns["bayes_threshold"] = _const(x, optimal.x_star)
        meta.update(
            believed_prior0=believed,
            c01=costs.c01,
            c10=costs.c10,
            threshold=mistaken.x_star,
            bayes_threshold=optimal.x_star,
            fpr=error_rates_analytic(model, mistaken).fpr,
            fnr=error_rates_analytic(model, mistaken).fnr,
            bayes_fpr=error_rates_analytic(model, optimal).fpr,
            bayes_fnr=error_rates_analytic(model, optimal).fnr,
            risk=report.risk,
            regret=report.regret,
            misclassification=misclassification_rate(model, mistaken),
            bayes_misclassification=misclassification_rate(model, optimal),
        )
        return FigureTable(figure_id=figure_id, columns=columns, metadata=meta)

    if figure_id == 5:
        factor = 0.5
        sharp = sharpen(model, factor)
        costs = CostSpec(c01=1.0, c10=1.0)
        rule = bayes_rule(model, costs)
        rule_sharp = bayes_rule(sharp, costs)
        rates = error_rates_analytic(model, rule)
        rates_sharp = error_rates_analytic(sharp, rule_sharp)
        columns = _density_columns(model, x)
        columns["density0_sharpened"] = tuple(float(v) for v in sharp.cond0.pdf(x))
        columns["density1_sharpened"] = tuple(float(v) for v in sharp.cond1.pdf(x))
        columns["threshold"] = _const(x, rule.x_star)
        columns["threshold_sharpened"] = _const(x, rule_sharp.x_star)
        meta.update(
            sharpen_factor=factor,
            c01=costs.c01,
            c10=costs.c10,
            threshold=rule.x_star,
            threshold_sharpened=rule_sharp.x_star,
            fpr=rates.fpr,
            fnr=rates.fnr,
            fpr_sharpened=rates_sharp.fpr,
            fnr_sharpened=rates_sharp.fnr,
        )
        return FigureTable(figure_id=figure_id, columns=columns, metadata=meta)

    if figure_id in (6, 7):
        ratio = 9.0 if figure_id == 6 else 27.0
        lower = bayes_rule(model, CostSpec(c01=1.0, c10=1.0)).x_star
        upper = bayes_rule(model, CostSpec(c01=ratio, c10=1.0)).x_star
        if figure_id == 6:
            policy = BandPolicy(lower=lower, upper=upper, action="randomize", p_trust=0.5)
            rates = band_error_rates(model, policy)
            oracle_accuracy = None
        else:
            policy = BandPolicy(lower=lower, upper=upper, action="defer")
            oracle_accuracy = 1.0
            rates = band_error_rates(model, policy, OracleModel(accuracy=oracle_accuracy))
        point_upper = error_rates_analytic(model, bayes_rule(model, CostSpec(c01=ratio, c10=1.0)))
        columns = _density_columns(model, x)
        columns["band_lower"] = _const(x, lower)
        columns["band_upper"] = _const(x, upper)
        meta.update(
            cost_ratio=ratio,
            band_lower=lower,
            band_upper=upper,
            action=policy.action,
            p_trust=policy.p_trust if policy.action == "randomize" else None,
            oracle_accuracy=oracle_accuracy,
            fpr=rates.fpr,
            fnr=rates.fnr,
            deferral_rate=rates.deferral_rate,
            point_fpr=point_upper.fpr,
            point_fnr=point_upper.fnr,
        )
        return FigureTable(figure_id=figure_id, columns=columns, metadata=meta)

    # figure 8: threshold schedule, abscissa is the round number
    rounds = 10
    start = bayes_rule(model, CostSpec(c01=1.0, c10=1.0)).x_star
    end = bayes_rule(model, CostSpec(c01=27.0, c10=1.0)).x_star
    schedule = make_schedule(start, end, rounds, shape="linear")
    fprs = []
    fnrs = []
    for t in schedule.thresholds:
        fprs.append(1.0 - model.cond0.cdf(t))
        fnrs.append(model.cond1.cdf(t))
    columns = {
        "x": tuple(float(r) for r in range(1, rounds + 1)),
        "threshold": schedule.thresholds,
        "fpr": tuple(fprs),
        "fnr": tuple(fnrs),
    }
    meta.update(
        schedule_shape="linear",
        schedule_start=start,
        schedule_end=end,
        rounds=rounds,
        final_fpr=fprs[-1],
        final_fnr=fnrs[-1],
    )
    return FigureTable(figure_id=8, columns=columns, metadata=meta)


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _table_rows(obj) -> tuple[list[str], list[list]] | None:
    """Header and rows for anything CSV-shaped; None for JSON-only payloads."""
    if isinstance(obj, FigureTable):
        header = list(obj.columns)
        rows = [list(values) for values in zip(*obj.columns.values())]
        return header, rows
    if isinstance(obj, ErrorRates):
        record = asdict(obj)
        return list(record), [list(record.values())]
    if isinstance(obj, Sequence) and not isinstance(obj, (str, bytes)):
        if len(obj) == 0:
            return [], []
        if isinstance(obj[0], RoundLog):
            header = ["round", "individual_id", "decision", "observed_outcome", "threshold"]
            rows = [
                [log.round, rec.individual_id, rec.decision, rec.observed_outcome, log.threshold]
                for log in obj
                for rec in log.decisions
            ]
            return header, rows
        if isinstance(obj[0], Mapping):
            header = list(obj[0])
            return header, [[row.get(key) for key in header] for row in obj]
    return None


def _jsonable(obj):
    if isinstance(obj, FigureTable):
        return {
            "figure_id": obj.figure_id,
            "columns": {name: list(col) for name, col in obj.columns.items()},
            "metadata": obj.metadata,
        }
    if isinstance(obj, ErrorRates):
        return asdict(obj)
    if isinstance(obj, Sequence) and not isinstance(obj, (str, bytes)):
        if len(obj) > 0 and isinstance(obj[0], RoundLog):
            return [
                {
                    "round": log.round,
                    "threshold": log.threshold,
                    "decisions": [asdict(rec) for rec in log.decisions],
                }
                for log in obj
            ]
        return list(obj)
    return obj


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_outputs(
    items: Mapping[str, object],
    directory: str | Path,
    formats: Sequence[str] = ("csv", "json"),
) -> dict[str, str]:
    """Write each named item as CSV and/or JSON plus a manifest.json.

    Table-shaped items (figure tables, error rates, round logs, row
    sequences) get a CSV when requested; every item gets a JSON file.
    The manifest maps every file in the directory, whatever produced it,
    to its SHA-256 digest. On any error the files written by this call
    are removed so a failed run leaves no partial output.
    """
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ValueError(f"unknown output format: {fmt!r}")
    out_dir = Path(directory)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc

    written: list[Path] = []
    try:
        for name, obj in items.items():
            table = _table_rows(obj) if "csv" in formats else None
            if table is not None:
                header, rows = table
                path = out_dir / f"{name}.csv"
                written.append(path)  # track before writing so partial files get removed
                with path.open("w", encoding="utf-8", newline="") as fh:
                    writer = csv.writer(fh, lineterminator="\n")
                    writer.writerow(header)
                    for row in rows:
                        writer.writerow([_format_cell(cell) for cell in row])
            if "json" in formats:
                path = out_dir / f"{name}.json"
                written.append(path)
                with path.open("w", encoding="utf-8") as fh:
                    json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
                    fh.write("\n")
        manifest = {
            p.name: file_digest(p)
            for p in sorted(out_dir.iterdir())
            if p.is_file() and p.name != "manifest.json"
        }
        manifest_path = out_dir / "manifest.json"
        with manifest_path.open("w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        return manifest
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise
