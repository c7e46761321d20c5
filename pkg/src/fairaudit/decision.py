"""Expected-value decision theory over the four outcomes.

The decision-maker's credence for a record is identified with the p_score of
its bin; nothing else enters. Ties at the threshold resolve toward acting.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .domain import (
    Decision,
    OutcomeValues,
    Population,
    ThresholdPolicy,
    ValidationError,
)
from .metrics import CalibrationCurve


@dataclass(frozen=True)
class DecisionEV:
    """Expected values of the two available actions at one credence level."""

    ev_act: float
    ev_refrain: float


@dataclass(frozen=True)
class GroupAssessment:
    n: int
    acted: int
    refrained: int
    expected_value: float
    best_expected_value: float
    realized_value: float

    @property
    def expected_disvalue(self) -> float:
        """Expected value forgone relative to deciding each record optimally."""
        return self.best_expected_value - self.expected_value


@dataclass(frozen=True)
class PolicyAssessment:
    """Expected and realized value accounting for one policy, by group."""

    per_group: Mapping[str, GroupAssessment]

    @property
    def total(self) -> GroupAssessment:
        gs = list(self.per_group.values())
        return GroupAssessment(
            n=sum(g.n for g in gs),
            acted=sum(g.acted for g in gs),
            refrained=sum(g.refrained for g in gs),
            expected_value=sum(g.expected_value for g in gs),
            best_expected_value=sum(g.best_expected_value for g in gs),
            realized_value=sum(g.realized_value for g in gs),
        )


def expected_values(p: float, values: OutcomeValues) -> DecisionEV:
    """EV of acting and of refraining at credence p."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"credence {p!r} outside [0, 1]")
    return DecisionEV(
        ev_act=p * values.v_tp + (1.0 - p) * values.v_fp,
        ev_refrain=(1.0 - p) * values.v_tn + p * values.v_fn,
    )


def optimal_threshold(values: OutcomeValues) -> float:
    """The credence p* at which acting and refraining break even.

    p* = (v_tn - v_fp) / ((v_tn - v_fp) + (v_tp - v_fn)). Acting is strictly
    better in expectation iff p > p*; invariant under positive affine
    transformations of all four values.
    """
    refrain_margin = values.v_tn - values.v_fp
    act_margin = values.v_tp - values.v_fn
    return refrain_margin / (refrain_margin + act_margin)


def apply_policy(
    population: Population,
    policy: ThresholdPolicy,
    curve: CalibrationCurve,
) -> tuple[Decision, ...]:
    """Per-record decisions, parallel to ``population.records``."""
    if not policy.covers(population.groups):
        raise ValidationError("policy does not cover every group")
    decisions = []
    for r in population.records:
        p = curve.p_score(r.group, population.bins.bin_of(r.score))
        t = policy.threshold_for(r.group)
        decisions.append(Decision.ACT if p >= t else Decision.REFRAIN)
    return tuple(decisions)


def policy_expected_disvalue(
    population: Population,
    policy: ThresholdPolicy,
    curve: CalibrationCurve,
    values: OutcomeValues,
) -> PolicyAssessment:
    """Expected and realized value of a policy, per group and in total.

    The expected component sums the chosen action's EV at each record's bin
    p_score; ``best_expected_value`` sums the per-record maximum, so the
    difference is the policy's expected disvalue.
    """
    decisions = apply_policy(population, policy, curve)
    acc: dict[str, list[float]] = {
        g: [0, 0, 0.0, 0.0, 0.0] for g in population.groups
    }
    for r, d in zip(population.records, decisions):
        p = curve.p_score(r.group, population.bins.bin_of(r.score))
        ev = expected_values(p, values)
        chosen = ev.ev_act if d.is_act else ev.ev_refrain
        slot = acc[r.group]
        slot[0] += int(d.is_act)
        slot[1] += int(not d.is_act)
        slot[2] += chosen
        slot[3] += max(ev.ev_act, ev.ev_refrain)
        slot[4] += values.value_of(d, r.outcome)
    return PolicyAssessment(
        per_group={
            g: GroupAssessment(
                n=acted + refrained,
                acted=acted,
                refrained=refrained,
                expected_value=expected,
                best_expected_value=best,
                realized_value=realized,
            )
            for g, (acted, refrained, expected, best, realized) in acc.items()
        }
    )
