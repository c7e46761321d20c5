"""Group-level confusion matrices, error rates, calibration curves.

Rates with an empty denominator are ``None``, never 0.0 or NaN: in small
fixtures an outcome class can be genuinely absent and that is information,
not an error.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .domain import (
    ConfusionMatrix,
    Population,
    ThresholdPolicy,
    ValidationError,
)


@dataclass(frozen=True)
class CurveCell:
    """One (group, bin) cell of a calibration curve."""

    count: int
    positives: int

    @property
    def p_score(self) -> float:
        """Empirical positive fraction inside this cell."""
        if self.count == 0:
            raise ValidationError("p_score of an empty cell is undefined")
        return self.positives / self.count


@dataclass(frozen=True)
class CalibrationCurve:
    """Per-(group, bin) counts and positive fractions for one population.

    Cells with no records are simply absent from ``cells``.
    """

    n_bins: int
    groups: tuple[str, ...]
    cells: Mapping[tuple[str, int], CurveCell]

    def cell(self, group: str, bin_index: int) -> CurveCell | None:
        return self.cells.get((group, bin_index))

    def p_score(self, group: str, bin_index: int) -> float:
        cell = self.cell(group, bin_index)
        if cell is None:
            raise ValidationError(
                f"group {group!r} has no records in bin {bin_index}"
            )
        return cell.p_score

    def nonempty_bins(self, group: str) -> tuple[int, ...]:
        return tuple(
            b for (g, b) in sorted(self.cells) if g == group
        )


@dataclass(frozen=True)
class GroupMetrics:
    """The audit quantities for one group under one policy."""

    group: str
    confusion: ConfusionMatrix
    fpr: float | None
    fnr: float | None
    ppv: float | None
    base_rate: float


def calibration_curve(population: Population) -> CalibrationCurve:
    """Count records and positives per (group, bin)."""
    counts: dict[tuple[str, int], list[int]] = {}
    for r in population.records:
        key = (r.group, population.bins.bin_of(r.score))
        cell = counts.setdefault(key, [0, 0])
        cell[0] += 1
        cell[1] += int(r.outcome.is_positive)
    return CalibrationCurve(
        n_bins=population.bins.n_bins,
        groups=population.groups,
        cells={k: CurveCell(count=c, positives=p) for k, (c, p) in counts.items()},
    )


def confusion_for_group(
    population: Population,
    group: str,
    policy: ThresholdPolicy,
    curve: CalibrationCurve,
) -> ConfusionMatrix:
    """Classify a group's records by (decision, outcome).

    A record is decided "act" iff the p_score of its bin is >= the group's
    threshold, so the counts aggregate cleanly over curve cells.
    """
    if group not in population.groups:
        raise ValidationError(f"unknown group {group!r}")
    threshold = policy.threshold_for(group)
    tp = fp = tn = fn = 0
    for (g, _b), cell in curve.cells.items():
        if g != group:
            continue
        negatives = cell.count - cell.positives
        if cell.p_score >= threshold:
            tp += cell.positives
            fp += negatives
        else:
            fn += cell.positives
            tn += negatives
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def false_positive_rate(cm: ConfusionMatrix) -> float | None:
    """fp / (fp + tn); None when the group has no negatives."""
    denom = cm.fp + cm.tn
    return cm.fp / denom if denom else None


def false_negative_rate(cm: ConfusionMatrix) -> float | None:
    """fn / (fn + tp); None when the group has no positives."""
    denom = cm.fn + cm.tp
    return cm.fn / denom if denom else None


def positive_predictive_value(cm: ConfusionMatrix) -> float | None:
    """tp / (tp + fp); None when nothing was acted on."""
    denom = cm.tp + cm.fp
    return cm.tp / denom if denom else None


def base_rate(population: Population, group: str) -> float:
    """Positive-outcome fraction of one group."""
    records = population.group_records(group)
    return sum(r.outcome.is_positive for r in records) / len(records)


def group_metrics(
    population: Population,
    group: str,
    policy: ThresholdPolicy,
    curve: CalibrationCurve,
) -> GroupMetrics:
    cm = confusion_for_group(population, group, policy, curve)
    return GroupMetrics(
        group=group,
        confusion=cm,
        fpr=false_positive_rate(cm),
        fnr=false_negative_rate(cm),
        ppv=positive_predictive_value(cm),
        base_rate=base_rate(population, group),
    )


def calibration_gap(
    curve: CalibrationCurve, group_a: str, group_b: str
) -> float:
    """Worst-case |p_score difference| over bins nonempty in both groups.

    0.0 when the groups share no bin.
    """
    for g in (group_a, group_b):
        if g not in curve.groups:
            raise ValidationError(f"unknown group {g!r}")
    shared = set(curve.nonempty_bins(group_a)) & set(curve.nonempty_bins(group_b))
    if not shared:
        return 0.0
    return max(
        abs(curve.p_score(group_a, b) - curve.p_score(group_b, b))
        for b in shared
    )


def chance_miscalibration_bound(n: int, p: float, gap: float) -> float:
    """Chebyshev upper bound on a per-bin deviation >= gap arising by chance.

    For n records with true positive rate p, the probability that the
    observed fraction deviates from p by at least gap is at most
    p(1-p) / (n * gap^2), clamped to 1.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValidationError("p must lie in [0, 1]")
    if gap <= 0.0:
        raise ValidationError("gap must be positive")
    return min(1.0, p * (1.0 - p) / (n * gap * gap))
