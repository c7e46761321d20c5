"""Core data types: records, populations, bin schemes, policies, outcome values.

Everything here is an immutable value object. Construction-time validation
lives in :func:`validate_population`; the dataclasses themselves only enforce
local invariants.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Mapping, Sequence


class AuditError(Exception):
    """Base class for every error this library raises deliberately."""


class ValidationError(AuditError):
    """A population, bin scheme, or policy violates a structural invariant."""


class OutcomeLabel(Enum):
    """True binary outcome: does the individual have the predicted property?"""

    NEGATIVE = 0
    POSITIVE = 1

    @property
    def is_positive(self) -> bool:
        return self is OutcomeLabel.POSITIVE


class Decision(Enum):
    """The binary action taken about an individual: act (detain / exclude /
    assign the grade / give the benefit) or refrain."""

    REFRAIN = 0
    ACT = 1

    @property
    def is_act(self) -> bool:
        return self is Decision.ACT


@dataclass(frozen=True)
class Record:
    """One scored individual."""

    id: str
    group: str
    score: float
    outcome: OutcomeLabel


@dataclass(frozen=True)
class BinScheme:
    """Ordered, contiguous partition of the score range into half-open
    intervals [lo, hi); the last bin is closed on top.

    ``edges`` has length ``n_bins + 1``. ``labels``, when given, has one
    label per bin.
    """

    edges: tuple[float, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.edges) < 3:
            raise ValidationError("a bin scheme needs at least 2 bins")
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValidationError("bin edges must be strictly increasing")
        if self.labels is not None and len(self.labels) != self.n_bins:
            raise ValidationError(
                f"expected {self.n_bins} bin labels, got {len(self.labels)}"
            )

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1

    @property
    def lo(self) -> float:
        return self.edges[0]

    @property
    def hi(self) -> float:
        return self.edges[-1]

    def label(self, index: int) -> str:
        if self.labels is not None:
            return self.labels[index]
        return f"[{self.edges[index]:g},{self.edges[index + 1]:g})"

    def bin_of(self, score: float) -> int:
        """Index of the unique bin containing ``score``.

        Raises ValidationError for scores outside [lo, hi]. The top edge
        belongs to the last bin.
        """
        if score < self.lo or score > self.hi:
            raise ValidationError(
                f"score {score!r} outside declared range [{self.lo}, {self.hi}]"
            )
        if score == self.hi:
            return self.n_bins - 1
        return bisect.bisect_right(self.edges, score) - 1


def bin_of(score: float, bins: BinScheme) -> int:
    """Module-level alias for :meth:`BinScheme.bin_of`."""
    return bins.bin_of(score)


@dataclass(frozen=True)
class Population:
    """A validated collection of records partitioned by group.

    ``action_benefits_subject`` records whether acting helps the subject
    (cash transfer) or harms them (detention). It never changes any
    arithmetic, only report narrative, but must be set explicitly.
    """

    records: tuple[Record, ...]
    bins: BinScheme
    action_benefits_subject: bool

    @cached_property
    def groups(self) -> tuple[str, ...]:
        return tuple(sorted({r.group for r in self.records}))

    @cached_property
    def by_group(self) -> Mapping[str, tuple[Record, ...]]:
        out: dict[str, list[Record]] = {}
        for r in self.records:
            out.setdefault(r.group, []).append(r)
        return {g: tuple(rs) for g, rs in out.items()}

    def group_records(self, group: str) -> tuple[Record, ...]:
        try:
            return self.by_group[group]
        except KeyError:
            raise ValidationError(f"unknown group {group!r}") from None


def validate_population(
    records: Sequence[Record],
    bins: BinScheme,
    action_benefits_subject: bool,
) -> Population:
    """Check all Population invariants and return the immutable Population.

    Idempotent: validating the records of a valid Population returns an
    equal Population.
    """
    if not records:
        raise ValidationError("population is empty")
    for r in records:
        if not r.group:
            raise ValidationError(f"record {r.id!r} has an empty group label")
        if r.score < bins.lo or r.score > bins.hi:
            raise ValidationError(
                f"record {r.id!r}: score {r.score!r} outside declared "
                f"range [{bins.lo}, {bins.hi}]"
            )
    groups = sorted({r.group for r in records})
    if len(groups) < 2:
        raise ValidationError(
            f"need at least 2 groups, found {len(groups)}: {groups}"
        )
    return Population(
        records=tuple(records),
        bins=bins,
        action_benefits_subject=action_benefits_subject,
    )


@dataclass(frozen=True)
class ConfusionMatrix:
    """Four-outcome counts for one group under one policy."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} count is negative")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class OutcomeValues:
    """Utilities of the four decision outcomes, in dimensionless value units.

    A well-posed interior threshold requires acting to be strictly better on
    positives (v_tp > v_fn) and refraining strictly better on negatives
    (v_tn > v_fp).
    """

    v_tp: float
    v_fp: float
    v_tn: float
    v_fn: float

    def __post_init__(self) -> None:
        if not self.v_tn > self.v_fp:
            raise ValidationError(
                f"need v_tn > v_fp, got v_tn={self.v_tn} v_fp={self.v_fp}"
            )
        if not self.v_tp > self.v_fn:
            raise ValidationError(
                f"need v_tp > v_fn, got v_tp={self.v_tp} v_fn={self.v_fn}"
            )

    def value_of(self, decision: Decision, outcome: OutcomeLabel) -> float:
        """Realized value of a (decision, outcome) pair."""
        if decision.is_act:
            return self.v_tp if outcome.is_positive else self.v_fp
        return self.v_fn if outcome.is_positive else self.v_tn


#: Symmetric default: every correct decision worth 1, every error worth 0.
SYMMETRIC_VALUES = OutcomeValues(v_tp=1.0, v_fp=0.0, v_tn=1.0, v_fn=0.0)


@dataclass(frozen=True)
class ThresholdPolicy:
    """Uniform or per-group probability threshold.

    Decisions compare the bin p_score against the group's threshold with >=
    (ties resolve toward acting).
    """

    _uniform: float | None = None
    _per_group: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        thresholds = list(self._per_group.values())
        if self._uniform is not None:
            thresholds.append(self._uniform)
        if self._uniform is None and not self._per_group:
            raise ValidationError("policy must set a uniform or per-group threshold")
        for t in thresholds:
            if not 0.0 <= t <= 1.0:
                raise ValidationError(f"threshold {t!r} outside [0, 1]")

    @classmethod
    def uniform(cls, threshold: float) -> "ThresholdPolicy":
        return cls(_uniform=threshold)

    @classmethod
    def per_group(cls, thresholds: Mapping[str, float]) -> "ThresholdPolicy":
        return cls(_per_group=dict(thresholds))

    @property
    def is_uniform(self) -> bool:
        return self._uniform is not None and not self._per_group

    def threshold_for(self, group: str) -> float:
        if group in self._per_group:
            return self._per_group[group]
        if self._uniform is not None:
            return self._uniform
        raise ValidationError(f"policy has no threshold for group {group!r}")

    def covers(self, groups: Sequence[str]) -> bool:
        if self._uniform is not None:
            return True
        return all(g in self._per_group for g in groups)

    def thresholds(self, groups: Sequence[str]) -> dict[str, float]:
        return {g: self.threshold_for(g) for g in groups}

    def replacing(self, group: str, threshold: float) -> "ThresholdPolicy":
        """New policy identical to this one except for one group."""
        new = dict(self._per_group)
        new[group] = threshold
        return ThresholdPolicy(_uniform=self._uniform, _per_group=new)
