import random

import pytest
from hypothesis import given, strategies as st

from fairaudit import (
    Decision,
    OutcomeValues,
    ThresholdPolicy,
    apply_policy,
    build_scenario,
    calibration_curve,
    expected_values,
    optimal_threshold,
    policy_expected_disvalue,
)
from fairaudit.domain import ValidationError

ASYMMETRIC = OutcomeValues(v_tp=0.0, v_fp=-3.0, v_tn=0.0, v_fn=-1.0)


def random_values(rng: random.Random) -> OutcomeValues:
    v_fp = rng.uniform(-10, 10)
    v_tn = v_fp + rng.uniform(0.05, 10)
    v_fn = rng.uniform(-10, 10)
    v_tp = v_fn + rng.uniform(0.05, 10)
    return OutcomeValues(v_tp=v_tp, v_fp=v_fp, v_tn=v_tn, v_fn=v_fn)


def grid_crossover(values: OutcomeValues, step: float = 1e-3) -> float:
    """Independent oracle: first grid credence where acting weakly wins."""
    n = round(1 / step)
    for i in range(n + 1):
        p = i * step
        ev = expected_values(p, values)
        if ev.ev_act >= ev.ev_refrain:
            return p
    return 1.0


values_strategy = st.builds(
    random_values, st.integers(min_value=0, max_value=2**32).map(random.Random)
)


class TestExpectedValues:
    def test_certain_negative(self):
        ev = expected_values(0.0, ASYMMETRIC)
        assert ev.ev_act == ASYMMETRIC.v_fp
        assert ev.ev_refrain == ASYMMETRIC.v_tn

    def test_certain_positive(self):
        ev = expected_values(1.0, ASYMMETRIC)
        assert ev.ev_act == ASYMMETRIC.v_tp
        assert ev.ev_refrain == ASYMMETRIC.v_fn

    def test_indifference_exactly_at_p_star(self):
        # Oracle cross-check: the grid sweep locates the crossover at 0.75.
        assert grid_crossover(ASYMMETRIC) == pytest.approx(0.75, abs=1e-3)
        ev = expected_values(0.75, ASYMMETRIC)
        assert ev.ev_act == pytest.approx(-0.75)
        assert ev.ev_refrain == pytest.approx(-0.75)

    def test_rejects_out_of_range_credence(self):
        with pytest.raises(ValidationError):
            expected_values(1.2, ASYMMETRIC)

    @given(values_strategy, st.floats(min_value=0, max_value=1))
    def test_convex_combination_bounds(self, values, p):
        ev = expected_values(p, values)
        assert min(values.v_tp, values.v_fp) - 1e-12 <= ev.ev_act
        assert ev.ev_act <= max(values.v_tp, values.v_fp) + 1e-12
        assert min(values.v_tn, values.v_fn) - 1e-12 <= ev.ev_refrain
        assert ev.ev_refrain <= max(values.v_tn, values.v_fn) + 1e-12


class TestOptimalThreshold:
    def test_symmetric_values_midpoint(self):
        assert optimal_threshold(OutcomeValues(1, 0, 1, 0)) == 0.5

    def test_asymmetric_example_vs_grid_oracle(self):
        p_star = optimal_threshold(ASYMMETRIC)
        assert p_star == pytest.approx(0.75)
        assert abs(p_star - grid_crossover(ASYMMETRIC)) <= 1e-3

    def test_affine_invariance(self):
        v = ASYMMETRIC
        shifted = OutcomeValues(
            v_tp=2 * v.v_tp - 5,
            v_fp=2 * v.v_fp - 5,
            v_tn=2 * v.v_tn - 5,
            v_fn=2 * v.v_fn - 5,
        )
        assert optimal_threshold(shifted) == pytest.approx(
            optimal_threshold(v), abs=1e-12
        )

    @given(values_strategy, st.floats(min_value=0.1, max_value=5),
           st.floats(min_value=-20, max_value=20))
    def test_affine_invariance_property(self, values, a, b):
        mapped = OutcomeValues(
            v_tp=a * values.v_tp + b,
            v_fp=a * values.v_fp + b,
            v_tn=a * values.v_tn + b,
            v_fn=a * values.v_fn + b,
        )
        assert optimal_threshold(mapped) == pytest.approx(
            optimal_threshold(values), abs=1e-9
        )

    @given(values_strategy)
    def test_sign_agreement_with_ev_difference(self, values):
        p_star = optimal_threshold(values)
        for p in (0.0, 0.25, 0.5, 0.75, 1.0):
            ev = expected_values(p, values)
            diff = ev.ev_act - ev.ev_refrain
            if abs(diff) > 1e-9:
                assert (diff > 0) == (p > p_star)


class TestApplyPolicy:
    def test_stride_uniform_half_acts_on_high_bin(self):
        pop, _ = build_scenario("stride_height")
        curve = calibration_curve(pop)
        decisions = apply_policy(pop, ThresholdPolicy.uniform(0.5), curve)
        for record, decision in zip(pop.records, decisions):
            expected = record.score >= 160.0
            assert decision.is_act == expected

    def test_zero_threshold_acts_on_everyone(self):
        pop, _ = build_scenario("stride_height")
        curve = calibration_curve(pop)
        decisions = apply_policy(pop, ThresholdPolicy.uniform(0.0), curve)
        assert all(d.is_act for d in decisions)

    def test_differential_thresholds_split_equal_p_scores(self):
        # Equalization-style per-group thresholds: white detained at the
        # high bin while black defendants with the same p_score band are not.
        pop, _ = build_scenario("compas_synthetic")
        curve = calibration_curve(pop)
        policy = ThresholdPolicy.per_group({"white": 0.5, "black": 0.9})
        decisions = apply_policy(pop, policy, curve)
        acted = {g: 0 for g in pop.groups}
        for r, d in zip(pop.records, decisions):
            if d.is_act:
                acted[r.group] += 1
        assert acted["white"] > 0
        assert acted["black"] == 0

    def test_deterministic_and_idempotent(self):
        pop, _ = build_scenario("compas_synthetic")
        curve = calibration_curve(pop)
        policy = ThresholdPolicy.uniform(0.5)
        assert apply_policy(pop, policy, curve) == apply_policy(pop, policy, curve)


class TestPolicyExpectedDisvalue:
    def test_single_record_expected_contribution(self):
        values = OutcomeValues(v_tp=1, v_fp=-1, v_tn=1, v_fn=-1)
        ev = expected_values(0.8, values)
        assert ev.ev_act == pytest.approx(0.8 * 1 + 0.2 * -1)

    def test_never_act_on_all_negative_population_is_perfect(self):
        pop, _ = build_scenario("certainty_lottery")
        curve = calibration_curve(pop)
        values = OutcomeValues(v_tp=1, v_fp=0, v_tn=1, v_fn=0)
        assessment = policy_expected_disvalue(
            pop, ThresholdPolicy.uniform(0.5), curve, values
        )
        assert assessment.total.realized_value == len(pop.records) * values.v_tn
        assert assessment.total.expected_disvalue == 0.0

    def test_totals_are_group_sums(self):
        pop, _ = build_scenario("compas_synthetic")
        curve = calibration_curve(pop)
        a = policy_expected_disvalue(
            pop, ThresholdPolicy.uniform(0.5), curve, OutcomeValues(1, 0, 1, 0)
        )
        total = a.total
        assert total.n == sum(g.n for g in a.per_group.values())
        assert total.expected_value == pytest.approx(
            sum(g.expected_value for g in a.per_group.values())
        )

    @pytest.mark.parametrize("scenario", ["stride_height", "compas_synthetic"])
    def test_uniform_p_star_minimizes_expected_disvalue(self, scenario):
        # Exhaustive threshold sweep: no uniform threshold beats p*.
        pop, _ = build_scenario(scenario)
        curve = calibration_curve(pop)
        values = OutcomeValues(1, 0, 1, 0)
        p_star = optimal_threshold(values)
        best = policy_expected_disvalue(
            pop, ThresholdPolicy.uniform(p_star), curve, values
        ).total.expected_disvalue
        candidates = {i / 100 for i in range(101)}
        candidates.update(
            curve.p_score(g, b)
            for g in pop.groups
            for b in curve.nonempty_bins(g)
        )
        for t in sorted(candidates):
            cost = policy_expected_disvalue(
                pop, ThresholdPolicy.uniform(t), curve, values
            ).total.expected_disvalue
            assert cost >= best - 1e-9
