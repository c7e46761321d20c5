"""FPR equalization, the calibration/base-rate impossibility check,
individual error risk, and the certainty-case fair lottery.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .domain import (
    AuditError,
    OutcomeValues,
    Population,
    Record,
    SYMMETRIC_VALUES,
    ThresholdPolicy,
    ValidationError,
)
from .decision import policy_expected_disvalue
from .metrics import (
    CalibrationCurve,
    base_rate,
    calibration_gap,
    confusion_for_group,
    false_positive_rate,
)

#: Hold the highest-FPR group fixed, lower the other groups' thresholds.
LOWER_OTHERS = "lower_others"
#: Hold the lowest-FPR group fixed, raise the other groups' thresholds.
RAISE_OTHERS = "raise_others"


@dataclass(frozen=True)
class EqualizationResult:
    thresholds: Mapping[str, float]
    fprs: Mapping[str, float]
    baseline_fprs: Mapping[str, float]
    residual_gap: float
    exact: bool
    disvalue_delta: float
    acted_baseline: Mapping[str, int]
    acted_equalized: Mapping[str, int]
    reference_group: str


@dataclass(frozen=True)
class ImpossibilityVerdict:
    """Outcome of checking the central impossibility on a two-group
    population: calibrated + unequal base rates forces the higher-base-rate
    group to have the higher FPR.

    ``ordering_holds`` is asserted only when ``applicable`` is true, i.e.
    the population is calibrated within tolerance, base rates differ, and
    the threshold splits each group's bins nontrivially.
    """

    calibrated: bool
    calibration_gap: float
    base_rates: Mapping[str, float]
    fprs: Mapping[str, float]
    higher_base_rate_group: str | None
    applicable: bool
    ordering_holds: bool


def _fpr_at(
    curve: CalibrationCurve, group: str, threshold: float
) -> float | None:
    fp = tn = 0
    for (g, _b), cell in curve.cells.items():
        if g != group:
            continue
        negatives = cell.count - cell.positives
        if cell.p_score >= threshold:
            fp += negatives
        else:
            tn += negatives
    return fp / (fp + tn) if fp + tn else None


def _acted_count(curve: CalibrationCurve, group: str, threshold: float) -> int:
    return sum(
        cell.count
        for (g, _b), cell in curve.cells.items()
        if g == group and cell.p_score >= threshold
    )


def _candidate_thresholds(
    curve: CalibrationCurve, group: str, baseline: float
) -> list[float]:
    # FPR is a step function of the threshold; only bin p_scores (plus the
    # extremes and the baseline itself) can change the acted set. 1.0 plays
    # the role of "never act" unless some bin has p_score exactly 1.
    cands = {0.0, 1.0, baseline}
    cands.update(curve.p_score(group, b) for b in curve.nonempty_bins(group))
    return sorted(cands)


def equalize_fpr(
    population: Population,
    curve: CalibrationCurve,
    baseline_policy: ThresholdPolicy,
    tolerance: float,
    direction: str = LOWER_OTHERS,
    values: OutcomeValues = SYMMETRIC_VALUES,
) -> EqualizationResult:
    """Search per-group thresholds that minimize the FPR gap.

    The reference group (highest FPR by default, lowest with
    direction=RAISE_OTHERS) keeps its baseline threshold; every other group
    moves over its finite set of achievable cut points to the threshold
    whose FPR is closest to the reference's. Exact parity is often
    unattainable with discrete bins, so the residual gap is first-class
    output. ``disvalue_delta`` is the increase in total expected disvalue
    relative to the baseline policy under ``values``.
    """
    if tolerance <= 0:
        raise ValidationError("tolerance must be positive")
    if direction not in (LOWER_OTHERS, RAISE_OTHERS):
        raise ValidationError(f"unknown direction {direction!r}")
    groups = population.groups
    if len(groups) < 2:
        raise ValidationError("equalization needs at least 2 groups")

    baseline_fprs: dict[str, float] = {}
    for g in groups:
        fpr = _fpr_at(curve, g, baseline_policy.threshold_for(g))
        if fpr is None:
            raise AuditError(
                f"group {g!r} has no negatives; its FPR is undefined and "
                "equalization is meaningless"
            )
        baseline_fprs[g] = fpr

    pick = max if direction == LOWER_OTHERS else min
    reference = pick(groups, key=lambda g: (baseline_fprs[g], g))
    target = baseline_fprs[reference]

    thresholds: dict[str, float] = {}
    fprs: dict[str, float] = {}
    for g in groups:
        t0 = baseline_policy.threshold_for(g)
        if g == reference:
            thresholds[g], fprs[g] = t0, baseline_fprs[g]
            continue
        best: tuple[float, float, float, float] | None = None
        for t in _candidate_thresholds(curve, g, t0):
            fpr = _fpr_at(curve, g, t)
            assert fpr is not None  # group has negatives, checked above
            # Prefer the smallest gap; break ties toward the baseline
            # threshold so an already-equal group is left untouched.
            key = (abs(fpr - target), abs(t - t0), t)
            if best is None or key < (best[0], best[1], best[2]):
                best = (key[0], key[1], key[2], fpr)
        assert best is not None
        thresholds[g], fprs[g] = best[2], best[3]

    residual = max(
        abs(fprs[a] - fprs[b]) for a in groups for b in groups
    )
    equalized = ThresholdPolicy.per_group(thresholds)
    base_cost = policy_expected_disvalue(
        population, baseline_policy, curve, values
    ).total.expected_disvalue
    eq_cost = policy_expected_disvalue(
        population, equalized, curve, values
    ).total.expected_disvalue
    return EqualizationResult(
        thresholds=thresholds,
        fprs=fprs,
        baseline_fprs=baseline_fprs,
        residual_gap=residual,
        exact=residual <= tolerance,
        disvalue_delta=eq_cost - base_cost,
        acted_baseline={
            g: _acted_count(curve, g, baseline_policy.threshold_for(g))
            for g in groups
        },
        acted_equalized={
            g: _acted_count(curve, g, thresholds[g]) for g in groups
        },
        reference_group=reference,
    )


def impossibility_check(
    population: Population,
    curve: CalibrationCurve,
    uniform_threshold: float,
    calib_tolerance: float = 1e-9,
) -> ImpossibilityVerdict:
    """Check the central impossibility on a two-group population.

    Multi-group populations reduce to pairwise checks at the caller.
    """
    groups = population.groups
    if len(groups) != 2:
        raise ValidationError(
            f"impossibility check is pairwise; got {len(groups)} groups"
        )
    policy = ThresholdPolicy.uniform(uniform_threshold)
    gap = calibration_gap(curve, groups[0], groups[1])
    rates = {g: base_rate(population, g) for g in groups}
    fprs: dict[str, float] = {}
    split = True
    for g in groups:
        cm = confusion_for_group(population, g, policy, curve)
        fpr = false_positive_rate(cm)
        if fpr is None:
            raise AuditError(f"group {g!r} has no negatives; FPR undefined")
        fprs[g] = fpr
        # The ordering claim needs the threshold to act on some bin and
        # refrain on some bin, with negatives observable.
        if cm.tp + cm.fp == 0 or cm.tn + cm.fn == 0 or cm.tn == 0:
            split = False

    calibrated = gap <= calib_tolerance
    a, b = groups
    higher = None
    if rates[a] != rates[b]:
        higher = a if rates[a] > rates[b] else b
    applicable = calibrated and higher is not None and split
    lower = b if higher == a else a
    ordering = applicable and fprs[higher] >= fprs[lower] if higher else False
    return ImpossibilityVerdict(
        calibrated=calibrated,
        calibration_gap=gap,
        base_rates=rates,
        fprs=fprs,
        higher_base_rate_group=higher,
        applicable=applicable,
        ordering_holds=ordering,
    )


def individual_error_risk(
    record: Record,
    population: Population,
    curve: CalibrationCurve,
    policy: ThresholdPolicy,
) -> float:
    """Probability that the decision applied to this record is wrong,
    conditional on its bin's p_score: 1 - p if acted on, p if refrained.

    Group membership enters only through the threshold applied, so under a
    uniform policy two records sharing a bin carry identical risk.
    """
    p = curve.p_score(record.group, population.bins.bin_of(record.score))
    acted = p >= policy.threshold_for(record.group)
    return 1.0 - p if acted else p


@dataclass(frozen=True)
class LotteryResult:
    per_group: Mapping[str, float]
    probability: float


def fair_lottery(
    group_counts: Mapping[str, int], exclusion_quota: int
) -> LotteryResult:
    """Equal-chance exclusion lottery for the certainty case.

    All individuals are known negatives, so fairness is an equal per-person
    exclusion probability quota/total, identical across groups.
    """
    if exclusion_quota < 0:
        raise ValidationError("quota must be nonnegative")
    total = sum(group_counts.values())
    if total <= 0:
        raise ValidationError("no individuals to run a lottery over")
    if exclusion_quota > total:
        raise ValidationError(
            f"quota {exclusion_quota} exceeds total count {total}"
        )
    p = exclusion_quota / total
    return LotteryResult(
        per_group={g: p for g in group_counts}, probability=p
    )
