import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvswap.analytics import (
    NoFeasibleRoundsError,
    OBJECTIVE_WEIGHTED,
    db_to_probability,
    dephasing_factor,
    false_negative_bound,
    false_positive_bound,
    lorentzian_suppression,
    optimize_rounds,
    probability_to_db,
    spectral_width,
)
from nvswap.states import ParameterError

probabilities = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
round_counts = st.integers(min_value=1, max_value=80)


def oracle_false_negative(p_abs: float, p_qnd: float, rounds: int) -> float:
    with mpmath.workdps(60):
        p_abs_m = mpmath.mpf(p_abs)
        p_qnd_m = mpmath.mpf(p_qnd)
        total = mpmath.fsum(
            ((1 - p_abs_m) * p_qnd_m) ** l for l in range(rounds)
        )
        return float(p_abs_m * (1 - p_qnd_m) * total)


def oracle_false_positive(p_abs: float, p_dark: float, rounds: int) -> float:
    with mpmath.workdps(60):
        p_abs_m = mpmath.mpf(p_abs)
        p_dark_m = mpmath.mpf(p_dark)
        total = mpmath.fsum(
            ((1 - p_abs_m) * (1 - p_dark_m)) ** l for l in range(rounds)
        )
        return float(p_dark_m * (1 - p_abs_m) * total)


class TestBoundFormulas:
    GRID = [
        (0.01, 0.99, 40),
        (0.10, 0.99, 20),
        (0.25, 0.99, 20),
        (0.50, 0.99, 16),
        (0.90, 0.99, 4),
        (1e-9, 1.0 - 1e-9, 64),
        (0.999, 0.5, 3),
    ]

    @pytest.mark.parametrize("p_abs,p_qnd,rounds", GRID)
    def test_false_negative_matches_series(self, p_abs, p_qnd, rounds):
        expected = oracle_false_negative(p_abs, p_qnd, rounds)
        assert false_negative_bound(p_abs, p_qnd, rounds) == pytest.approx(
            expected, rel=1e-12, abs=1e-300
        )

    @pytest.mark.parametrize("p_abs,p_qnd,rounds", GRID)
    def test_false_positive_matches_series(self, p_abs, p_qnd, rounds):
        expected = oracle_false_positive(p_abs, 2e-4, rounds)
        assert false_positive_bound(p_abs, 2e-4, rounds) == pytest.approx(
            expected, rel=1e-12, abs=1e-300
        )

    def test_reference_values(self):
        assert false_negative_bound(0.25, 0.99, 20) / 0.01 == pytest.approx(
            0.9683556, rel=1e-6
        )
        assert false_negative_bound(0.5, 0.99, 16) / 0.01 == pytest.approx(
            0.9900865, rel=1e-6
        )
        assert false_positive_bound(0.9, 2e-4, 4) / 2e-4 == pytest.approx(
            0.1110975, rel=1e-6
        )

    def test_degenerate_inputs(self):
        assert false_negative_bound(0.0, 1.0, 12) == 0.0
        assert false_negative_bound(0.0, 0.3, 12) == 0.0
        assert false_positive_bound(0.0, 0.0, 12) == 0.0
        assert false_positive_bound(0.3, 0.0, 12) == 0.0
        assert false_positive_bound(1.0, 0.1, 12) == 0.0

    def test_rejects_invalid_inputs(self):
        with pytest.raises(ParameterError):
            false_negative_bound(1.2, 0.99, 4)
        with pytest.raises(ParameterError):
            false_negative_bound(0.5, -0.1, 4)
        with pytest.raises(ParameterError):
            false_negative_bound(0.5, 0.99, 0)
        with pytest.raises(ParameterError):
            false_positive_bound(0.5, 2e-4, 2.5)

    @given(p_abs=probabilities, p_qnd=probabilities, rounds=round_counts)
    @settings(max_examples=200, deadline=None)
    def test_false_negative_nondecreasing_in_rounds(self, p_abs, p_qnd, rounds):
        low = false_negative_bound(p_abs, p_qnd, rounds)
        high = false_negative_bound(p_abs, p_qnd, rounds + 1)
        assert high >= low - 1e-15

    @given(a=probabilities, b=probabilities, p_qnd=probabilities, rounds=round_counts)
    @settings(max_examples=200, deadline=None)
    def test_false_negative_nondecreasing_in_p_abs(self, a, b, p_qnd, rounds):
        lo, hi = sorted((a, b))
        assert false_negative_bound(hi, p_qnd, rounds) >= false_negative_bound(
            lo, p_qnd, rounds
        ) - 1e-12

    @given(a=probabilities, b=probabilities, rounds=round_counts)
    @settings(max_examples=200, deadline=None)
    def test_false_positive_nonincreasing_in_p_abs(self, a, b, rounds):
        lo, hi = sorted((a, b))
        assert false_positive_bound(hi, 2e-4, rounds) <= false_positive_bound(
            lo, 2e-4, rounds
        ) + 1e-12

    @given(p_abs=probabilities, p_dark=probabilities, rounds=round_counts)
    @settings(max_examples=200, deadline=None)
    def test_false_positive_nondecreasing_in_rounds(self, p_abs, p_dark, rounds):
        low = false_positive_bound(p_abs, p_dark, rounds)
        high = false_positive_bound(p_abs, p_dark, rounds + 1)
        assert high >= low - 1e-15


class TestEstimators:
    def test_spectral_width_formula(self):
        assert spectral_width(10e-9) == pytest.approx(1.0 / (math.pi * 1e-8), rel=1e-12)
        assert spectral_width(1.0) == pytest.approx(1.0 / math.pi, rel=1e-12)
        assert spectral_width(20e-9) == pytest.approx(spectral_width(10e-9) / 2, rel=1e-12)

    def test_lorentzian_suppression(self):
        assert lorentzian_suppression(0.0, 30e6) == 1.0
        assert lorentzian_suppression(30e6, 30e6) == pytest.approx(0.5, rel=1e-12)
        value = lorentzian_suppression(3e9, spectral_width(10e-9))
        assert value == pytest.approx(1.1256642e-4, rel=1e-6)

    def test_dephasing_factor(self):
        assert dephasing_factor(0.0, 1e-4) == 1.0
        assert dephasing_factor(1e-4, 1e-4) == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert 1.0 - dephasing_factor(200e-9, 100e-6) == pytest.approx(4e-6, abs=1e-8)

    def test_db_conversion_anchors(self):
        assert db_to_probability(0.0) == 0.0
        assert db_to_probability(10.0) == pytest.approx(0.9, rel=1e-12)
        assert db_to_probability(0.3) == pytest.approx(0.0667457, rel=1e-5)

    @given(st.floats(min_value=0.0, max_value=0.999, allow_nan=False))
    @settings(max_examples=200, deadline=None)
    def test_db_roundtrip(self, p_loss):
        assert db_to_probability(probability_to_db(p_loss)) == pytest.approx(
            p_loss, abs=1e-12
        )

    def test_estimator_input_validation(self):
        with pytest.raises(ParameterError):
            spectral_width(0.0)
        with pytest.raises(ParameterError):
            lorentzian_suppression(1.0, 0.0)
        with pytest.raises(ParameterError):
            dephasing_factor(-1.0, 1.0)
        with pytest.raises(ParameterError):
            dephasing_factor(1.0, 0.0)
        with pytest.raises(ParameterError):
            db_to_probability(-0.1)
        with pytest.raises(ParameterError):
            probability_to_db(1.0)


class TestOptimizeRounds:
    def test_a_reference_point(self):
        outcome = optimize_rounds("A", 0.5, p_loss=0.066)
        assert outcome.rounds == 10
        assert outcome.l_z is None and outcome.l_x is None
        assert outcome.score == pytest.approx(outcome.result.total_success)

    def test_b_reference_point(self):
        outcome = optimize_rounds("B", 0.9, p_loss=0.066)
        assert outcome.rounds == 8
        assert outcome.l_z == 2
        assert outcome.l_x == 4

    def test_saturated_success_prefers_smallest(self):
        outcome = optimize_rounds(
            "A", 1.0, r_a1=0.0, p_qnd=1.0, p_dark=0.0, p_loss=0.0, tau_cycle=0.0
        )
        assert outcome.rounds == 2
        assert outcome.score == pytest.approx(1.0, abs=1e-12)

    def test_weighted_objective_on_ideal_params(self):
        outcome = optimize_rounds(
            "A",
            1.0,
            objective=OBJECTIVE_WEIGHTED,
            r_a1=0.0,
            p_qnd=1.0,
            p_dark=0.0,
            p_loss=0.0,
            tau_cycle=0.0,
        )
        assert outcome.rounds == 2
        assert outcome.score == pytest.approx(1.0, abs=1e-12)

    def test_custom_candidates_are_respected(self):
        outcome = optimize_rounds("B", 0.9, p_loss=0.066, candidates=[8])
        assert outcome.rounds == 8

    def test_unreachable_threshold_reported(self):
        with pytest.raises(NoFeasibleRoundsError):
            optimize_rounds(
                "B",
                0.3,
                min_fidelity=0.999999,
                p_dark=0.05,
                p_loss=0.3,
                candidates=[4, 8],
            )

    def test_invalid_objective_rejected(self):
        with pytest.raises(ParameterError):
            optimize_rounds("A", 0.5, objective="fastest")
        with pytest.raises(ParameterError):
            optimize_rounds("A", 0.5, candidates=[])
