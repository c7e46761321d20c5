"""Command-line interface: audit, scenario, equalize.

Exit codes: 0 success, 2 input or validation error, 3 scenario assertion
failure (a regression against the published figures), 4 internal error.
"""
from __future__ import annotations

import argparse
import sys
from typing import Sequence

from .decision import optimal_threshold, policy_expected_disvalue
from .domain import (
    AuditError,
    BinScheme,
    OutcomeValues,
    Population,
    SYMMETRIC_VALUES,
    ThresholdPolicy,
    ValidationError,
)
from .ingest import DatasetConfig, ingest_csv
from .metrics import CalibrationCurve, calibration_curve, calibration_gap, group_metrics
from .parity import (
    LOWER_OTHERS,
    RAISE_OTHERS,
    equalize_fpr,
    fair_lottery,
    impossibility_check,
)
from .report import (
    AuditReport,
    ScenarioSection,
    curve_cells_dict,
    render_report,
)
from .scenarios import (
    CERTAINTY_LOTTERY,
    SCENARIO_NAMES,
    build_scenario,
    check_scenario,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_SPEC_FAIL = 3
EXIT_INTERNAL = 4

DEFAULT_VALUES_NOTE = (
    "Outcome values were not supplied; using the symmetric default "
    "(TP=1, FP=0, TN=1, FN=0), which puts the optimal threshold at 0.5. "
    "Thresholds are value-laden: pass --values to change this."
)


def parse_bins(spec: str) -> BinScheme:
    """Parse a bin spec like '1-4=low,5-10=high'.

    Each segment is lo-hi with an optional =label; bins are half-open at
    each interior boundary and closed at the top of the last segment.
    """
    edges: list[float] = []
    labels: list[str] = []
    segments = [s.strip() for s in spec.split(",") if s.strip()]
    if len(segments) < 2:
        raise ValidationError(f"bin spec needs at least 2 segments: {spec!r}")
    last_hi = None
    for seg in segments:
        rng, _, label = seg.partition("=")
        lo_s, sep, hi_s = rng.partition("-")
        if not sep:
            raise ValidationError(f"bad bin segment {seg!r}; expected lo-hi")
        try:
            lo, hi = float(lo_s), float(hi_s)
        except ValueError:
            raise ValidationError(f"bad bin segment {seg!r}") from None
        if hi < lo:
            raise ValidationError(f"bin segment {seg!r} has hi < lo")
        edges.append(lo)
        labels.append(label or rng)
        last_hi = hi
    edges.append(last_hi)  # type: ignore[arg-type]
    return BinScheme(edges=tuple(edges), labels=tuple(labels))


def parse_values(spec: str) -> OutcomeValues:
    """Parse '--values TP,FP,TN,FN'."""
    parts = spec.split(",")
    if len(parts) != 4:
        raise ValidationError(f"--values expects TP,FP,TN,FN, got {spec!r}")
    try:
        tp, fp, tn, fn = (float(p) for p in parts)
    except ValueError:
        raise ValidationError(f"--values expects numbers, got {spec!r}") from None
    return OutcomeValues(v_tp=tp, v_fp=fp, v_tn=tn, v_fn=fn)


def parse_threshold(
    spec: str | None,
    population: Population,
    curve: CalibrationCurve,
    values: OutcomeValues,
    notes: list[str],
) -> ThresholdPolicy:
    """Resolve a threshold spec to a policy.

    'p=X' is a uniform probability threshold. 'score>=S' acts on the bins
    at and above S's bin; it is translated per group to the smallest
    p_score among those bins. Unspecified means the optimal threshold for
    the value profile.
    """
    if spec is None:
        p_star = optimal_threshold(values)
        notes.append(
            f"No threshold supplied; using the optimal threshold "
            f"p* = {p_star:.6g} for the value profile."
        )
        return ThresholdPolicy.uniform(p_star)
    spec = spec.strip()
    if spec.startswith("p="):
        try:
            return ThresholdPolicy.uniform(float(spec[2:]))
        except ValueError:
            raise ValidationError(f"bad threshold spec {spec!r}") from None
    if spec.startswith("score>="):
        try:
            boundary = float(spec[len("score>="):])
        except ValueError:
            raise ValidationError(f"bad threshold spec {spec!r}") from None
        first_bin = population.bins.bin_of(boundary)
        thresholds: dict[str, float] = {}
        for g in population.groups:
            acted = [
                curve.p_score(g, b)
                for b in curve.nonempty_bins(g)
                if b >= first_bin
            ]
            if not acted:
                raise ValidationError(
                    f"group {g!r} has no records at scores >= {boundary:g}"
                )
            t = min(acted)
            below = [
                curve.p_score(g, b)
                for b in curve.nonempty_bins(g)
                if b < first_bin and curve.p_score(g, b) >= t
            ]
            if below:
                notes.append(
                    f"Group {g!r}: some bins below score {boundary:g} have "
                    f"p_score >= {t:.6g}; the probability threshold acts on "
                    "them too."
                )
            thresholds[g] = t
        return ThresholdPolicy.per_group(thresholds)
    raise ValidationError(
        f"bad threshold spec {spec!r}; expected 'p=X' or 'score>=S'"
    )


def _dataset_config(args: argparse.Namespace) -> DatasetConfig:
    if args.input is None:
        raise ValidationError("--input is required")
    if args.bins is None:
        raise ValidationError("--bins is required")
    return DatasetConfig(
        path=args.input,
        bins=parse_bins(args.bins),
        action_benefits_subject=args.benefit,
        id_col=args.id_col,
        group_col=args.group_col,
        score_col=args.score_col,
        outcome_col=args.outcome_col,
    )


def _base_report(
    population: Population,
    curve: CalibrationCurve,
    policy: ThresholdPolicy,
    values: OutcomeValues,
    values_defaulted: bool,
    tolerance: float,
    notes: list[str],
) -> AuditReport:
    groups = {
        g: group_metrics(population, g, policy, curve)
        for g in population.groups
    }
    gap = max(
        calibration_gap(curve, a, b)
        for a in population.groups
        for b in population.groups
    )
    impossibility = None
    if len(population.groups) == 2:
        thresholds = policy.thresholds(population.groups)
        uniform = len(set(thresholds.values())) == 1
        if uniform:
            try:
                impossibility = impossibility_check(
                    population,
                    curve,
                    next(iter(thresholds.values())),
                    calib_tolerance=tolerance,
                )
            except AuditError as exc:
                notes.append(f"Impossibility check skipped: {exc}")
        else:
            notes.append(
                "Impossibility check skipped: it applies to uniform "
                "thresholds only."
            )
    assessment = policy_expected_disvalue(population, policy, curve, values)
    return AuditReport(
        population_benefits=population.action_benefits_subject,
        policy_kind="uniform" if policy.is_uniform else "per_group",
        thresholds=policy.thresholds(population.groups),
        values=values,
        values_defaulted=values_defaulted,
        groups=groups,
        calibration_gap=gap,
        calibration_cells=curve_cells_dict(population, curve),
        assessment=assessment,
        impossibility=impossibility,
        notes=tuple(notes),
    )


def _emit(report: AuditReport, args: argparse.Namespace) -> None:
    text = render_report(report, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_audit(args: argparse.Namespace) -> int:
    notes: list[str] = []
    values, defaulted = _resolve_values(args, notes)
    population = ingest_csv(_dataset_config(args))
    curve = calibration_curve(population)
    policy = parse_threshold(args.threshold, population, curve, values, notes)
    report = _base_report(
        population, curve, policy, values, defaulted, args.tolerance, notes
    )
    _emit(report, args)
    return EXIT_OK


def cmd_equalize(args: argparse.Namespace) -> int:
    notes: list[str] = []
    values, defaulted = _resolve_values(args, notes)
    population = ingest_csv(_dataset_config(args))
    curve = calibration_curve(population)
    policy = parse_threshold(args.threshold, population, curve, values, notes)
    direction = RAISE_OTHERS if args.raise_thresholds else LOWER_OTHERS
    equalization = equalize_fpr(
        population, curve, policy, tolerance=args.tolerance,
        direction=direction, values=values,
    )
    report = _base_report(
        population, curve, policy, values, defaulted, args.tolerance, notes
    )
    report = AuditReport(
        **{**report.__dict__, "equalization": equalization}
    )
    _emit(report, args)
    return EXIT_OK


def cmd_scenario(args: argparse.Namespace) -> int:
    population, spec = build_scenario(args.name)
    notes = list(spec.notes)
    values = SYMMETRIC_VALUES
    curve = calibration_curve(population)
    policy = ThresholdPolicy.uniform(spec.threshold)
    report = _base_report(
        population, curve, policy, values, True, spec.calib_tolerance, notes
    )
    results = check_scenario(population, spec)
    checks = [
        {
            "label": check.label,
            "expected": check.expected,
            "actual": actual,
            "tolerance": check.tol,
            "rendered": check.rendered,
            "passed": ok,
        }
        for check, actual, ok in results
    ]
    passed = all(c["passed"] for c in checks)
    extras: dict = {
        "scenario": ScenarioSection(
            name=spec.name,
            description=spec.description,
            checks=checks,
            passed=passed,
        )
    }
    try:
        extras["equalization"] = equalize_fpr(
            population, curve, policy, tolerance=1e-9,
            direction=spec.equalize_direction, values=values,
        )
    except AuditError as exc:
        notes.append(f"Equalization skipped: {exc}")
    if spec.name == CERTAINTY_LOTTERY:
        counts = {
            g: len(population.group_records(g)) for g in population.groups
        }
        extras["lottery"] = fair_lottery(
            counts, int(spec.params["exclusion_quota"])
        )
    report = AuditReport(
        **{**report.__dict__, **extras, "notes": tuple(notes)}
    )
    _emit(report, args)
    return EXIT_OK if passed else EXIT_SPEC_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairaudit",
        description="Group-fairness audits over scored binary-outcome data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--format", choices=("json", "md"), default="md")
        p.add_argument("--out", default=None, help="write the report here")

    def add_dataset(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="CSV dataset path")
        p.add_argument("--id-col", default="id")
        p.add_argument("--group-col", default="group")
        p.add_argument("--score-col", default="score")
        p.add_argument("--outcome-col", default="outcome")
        p.add_argument(
            "--bins", required=True,
            help="bin spec, e.g. '1-4=low,5-10=high'",
        )
        p.add_argument(
            "--threshold", default=None,
            help="'p=0.75' or 'score>=5'; default: optimal for --values",
        )
        p.add_argument(
            "--values", default=None,
            help="outcome values TP,FP,TN,FN; default symmetric 1,0,1,0",
        )
        p.add_argument("--tolerance", type=float, default=1e-9)
        p.add_argument(
            "--benefit", action="store_true",
            help="acting benefits the subject (default: harms)",
        )

    p_audit = sub.add_parser("audit", help="full audit of a dataset")
    add_dataset(p_audit)
    add_common(p_audit)
    p_audit.set_defaults(func=cmd_audit)

    p_eq = sub.add_parser("equalize", help="audit plus FPR equalization")
    add_dataset(p_eq)
    p_eq.add_argument(
        "--raise-thresholds", action="store_true",
        help="hold the lowest-FPR group fixed and raise the others "
             "(default lowers the others toward the highest)",
    )
    add_common(p_eq)
    p_eq.set_defaults(func=cmd_equalize)

    p_sc = sub.add_parser(
        "scenario", help="rebuild a worked example and assert its figures"
    )
    p_sc.add_argument("name", choices=SCENARIO_NAMES)
    add_common(p_sc)
    p_sc.set_defaults(func=cmd_scenario)
    return parser


def _resolve_values(
    args: argparse.Namespace, notes: list[str]
) -> tuple[OutcomeValues, bool]:
    if getattr(args, "values", None):
        return parse_values(args.values), False
    notes.append(DEFAULT_VALUES_NOTE)
    return SYMMETRIC_VALUES, True


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
