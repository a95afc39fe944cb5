import math

import numpy as np
import pytest

from acadtraj import (
    DegenerateEmissionError,
    DomainError,
    GradeTuple,
    InsufficientDataError,
    PoissonRates,
    RawSemesterGrades,
    assemble_initial_model,
    build_vocabulary,
    encode,
    estimate_rates,
    ev_grades,
    full_vocabulary,
    initial_pi0,
    initial_transition,
    poisson_emission,
)
from acadtraj import defaults


class TestInitialTransition:
    def test_constant_students_pin_their_row_and_leave_others_uniform(self):
        matrix = initial_transition([[1, 1, 1], [1, 1]], n_levels=4)
        np.testing.assert_allclose(matrix[0], [1, 0, 0, 0])
        for row in matrix[1:]:
            np.testing.assert_allclose(row, [0.25, 0.25, 0.25, 0.25])

    def test_direct_counting(self):
        matrix = initial_transition([[1, 2], [1, 1]], n_levels=4)
        np.testing.assert_allclose(matrix[0], [0.5, 0.5, 0, 0])

    def test_rows_are_probability_vectors(self, rng):
        trajectories = [list(rng.integers(1, 5, size=6)) for _ in range(30)]
        matrix = initial_transition(trajectories, n_levels=4)
        np.testing.assert_allclose(matrix.sum(axis=1), 1.0, atol=1e-12)

    def test_counts_recoverable_up_to_normalization(self):
        trajectories = [[1, 2, 1], [2, 2]]
        matrix = initial_transition(trajectories, n_levels=2)
        # row 1 saw 1->2 once; row 2 saw 2->1 and 2->2 once each
        np.testing.assert_allclose(matrix[0], [0, 1])
        np.testing.assert_allclose(matrix[1], [0.5, 0.5])

    def test_no_usable_trajectory(self):
        with pytest.raises(InsufficientDataError):
            initial_transition([[1], [2]], n_levels=4)

    def test_label_out_of_range(self):
        with pytest.raises(DomainError):
            initial_transition([[1, 5]], n_levels=4)


class TestInitialPi0:
    def test_single_level(self):
        np.testing.assert_allclose(initial_pi0([3, 3, 3], n_levels=4), [0, 0, 1, 0])

    def test_counting(self):
        np.testing.assert_allclose(initial_pi0([1, 2, 2, 3], n_levels=4), [0.25, 0.5, 0.25, 0])

    def test_empty(self):
        with pytest.raises(InsufficientDataError):
            initial_pi0([], n_levels=4)


class TestEstimateRates:
    def test_means_per_group(self):
        groups = [
            [RawSemesterGrades(n_a=1), RawSemesterGrades(n_a=3, n_w=2)],
            [RawSemesterGrades(n_d=1, n_f=1)],
        ]
        rates = estimate_rates(groups)
        np.testing.assert_allclose(rates.rates[0], [2.0, 0, 0, 0, 1.0])
        np.testing.assert_allclose(rates.rates[1], [0, 0, 0, 2.0, 0])

    def test_empty_group(self):
        with pytest.raises(InsufficientDataError):
            estimate_rates([[RawSemesterGrades(n_a=1)], []])


class TestPoissonEmission:
    def test_zero_rates_put_all_mass_on_the_empty_tuple(self):
        rates = PoissonRates(np.zeros((1, 5)))
        emission = poisson_emission(rates, full_vocabulary())
        assert emission[0, 0] == pytest.approx(1.0)
        assert emission[0, 1:].max() == 0.0

    def test_unit_rate_matches_the_clipped_poisson_pmf(self):
        rates = PoissonRates(np.array([[1.0, 0, 0, 0, 0]]))
        emission = poisson_emission(rates, full_vocabulary())
        e = math.exp(-1.0)
        expected = {0: e, 1: e, 2: e / 2, 3: 1 - e * 2.5}  # a-count cell -> probability
        for a_count, probability in expected.items():
            code = encode(GradeTuple(a_count, 0, 0, 0, 0))
            assert emission[0, code] == pytest.approx(probability, abs=1e-12)
        assert emission[0].sum() == pytest.approx(1.0, abs=1e-12)

    def test_reference_rates_give_a_stochastic_matrix(self):
        emission = poisson_emission(PoissonRates(defaults.LEVEL_GRADE_RATES), full_vocabulary())
        assert emission.shape == (4, 256)
        np.testing.assert_allclose(emission.sum(axis=1), 1.0, atol=1e-12)

    def test_rows_renormalize_over_restricted_vocabularies(self, rng):
        vocab = build_vocabulary([GradeTuple(0, 0, 0, 0, 0), GradeTuple(2, 1, 0, 0, 0)])
        rates = PoissonRates(rng.uniform(0.0, 2.5, size=(3, 5)))
        emission = poisson_emission(rates, vocab)
        np.testing.assert_allclose(emission.sum(axis=1), 1.0, atol=1e-12)

    def test_flag_factors_are_bernoulli_from_the_rate(self):
        rates = PoissonRates(np.array([[0, 0, 0, 2.0, 0]]))
        emission = poisson_emission(rates, full_vocabulary())
        df_on = encode(GradeTuple(0, 0, 0, 1, 0))
        assert emission[0, 0] == pytest.approx(math.exp(-2.0), abs=1e-12)
        assert emission[0, df_on] == pytest.approx(1 - math.exp(-2.0), abs=1e-12)

    def test_degenerate_row(self):
        vocab = build_vocabulary([GradeTuple(3, 3, 3, 1, 1)])
        # zero rates put literally no mass on the all-max tuple
        with pytest.raises(DegenerateEmissionError):
            poisson_emission(PoissonRates(np.zeros((1, 5))), vocab)


class TestEvGrades:
    def test_one_hot_row_returns_its_tuple_counts(self):
        vocab = full_vocabulary()
        emission = np.zeros((1, 256))
        emission[0, encode(GradeTuple(2, 1, 0, 0, 0))] = 1.0
        np.testing.assert_allclose(ev_grades(emission, vocab)[0], [2, 1, 0, 0, 0])

    def test_uniform_over_two_codes_averages(self):
        vocab = full_vocabulary()
        emission = np.zeros((1, 256))
        emission[0, encode(GradeTuple(0, 0, 0, 0, 0))] = 0.5
        emission[0, encode(GradeTuple(3, 0, 0, 0, 0))] = 0.5
        np.testing.assert_allclose(ev_grades(emission, vocab)[0], [1.5, 0, 0, 0, 0])

    def test_full_vocabulary_ev_equals_clipped_poisson_expectation(self, rng):
        # independent check: EV_A = sum_{k<3} k f(k) + 3 P(K>=3), etc.
        rates = rng.uniform(0.0, 2.0, size=(2, 5))
        emission = poisson_emission(PoissonRates(rates), full_vocabulary())
        ev = ev_grades(emission, full_vocabulary())
        for i in range(2):
            for g in range(3):
                lam = rates[i, g]
                pmf = [math.exp(-lam) * lam**k / math.factorial(k) for k in range(3)]
                expected = sum(k * p for k, p in enumerate(pmf)) + 3 * (1 - sum(pmf))
                assert ev[i, g] == pytest.approx(expected, abs=1e-10)
            for g in (3, 4):
                assert ev[i, g] == pytest.approx(1 - math.exp(-rates[i, g]), abs=1e-10)

    def test_clipped_expectations_stay_in_range(self):
        emission = poisson_emission(PoissonRates(defaults.LEVEL_GRADE_RATES), full_vocabulary())
        ev = ev_grades(emission, full_vocabulary())
        assert ev[:, :3].max() <= 3.0
        assert ev[:, 3:].max() <= 1.0
        assert ev.min() >= 0.0


class TestAssembleInitialModel:
    def test_valid_parts(self):
        model = assemble_initial_model(
            defaults.LEVEL_TRANSITION_GUESS,
            defaults.FIRST_SEMESTER_LEVELS_GUESS,
            poisson_emission(PoissonRates(defaults.LEVEL_GRADE_RATES), full_vocabulary()),
        )
        assert model.n_states == 4
        assert model.vocab_size == 256

    def test_small_row_error_is_renormalized(self):
        transition = np.array([[0.5, 0.5 + 1e-7], [0.5, 0.5]])
        model = assemble_initial_model(transition, [1.0, 0.0], [[1.0], [1.0]])
        np.testing.assert_allclose(model.transition.sum(axis=1), 1.0, atol=1e-12)

    def test_large_row_error_is_rejected(self):
        transition = np.array([[0.5, 0.6], [0.5, 0.5]])
        with pytest.raises(DomainError):
            assemble_initial_model(transition, [1.0, 0.0], [[1.0], [1.0]])

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            assemble_initial_model(np.eye(3), [1.0, 0.0], [[1.0], [1.0]])


class TestReferenceFixtures:
    """The shipped calibration matrices satisfy their own invariants."""

    def test_transition_fixtures_are_stochastic(self):
        for matrix in (defaults.LEVEL_TRANSITION, defaults.LEVEL_TRANSITION_GUESS):
            np.testing.assert_allclose(matrix.sum(axis=1), 1.0, atol=1e-9)

    def test_distribution_fixtures_sum_to_one(self):
        for vector in (
            defaults.FIRST_SEMESTER_LEVELS,
            defaults.FIRST_SEMESTER_LEVELS_GUESS,
            defaults.LONG_RUN_LEVELS,
        ):
            assert vector.sum() == pytest.approx(1.0, abs=1e-9)

    def test_grade_ev_fixtures_respect_clipping(self):
        for matrix in (defaults.LEVEL_GRADE_RATES, defaults.TRAINED_GRADE_EV):
            assert matrix.shape == (4, 5)
            assert matrix.min() >= 0.0
        assert defaults.TRAINED_GRADE_EV[:, :3].max() <= 3.0
        assert defaults.TRAINED_GRADE_EV[:, 3:].max() <= 1.0

    def test_trained_ev_ranks_levels_by_grade_quality(self):
        # higher levels earn more A's and withdraw less
        a_column = defaults.TRAINED_GRADE_EV[:, 0]
        w_column = defaults.TRAINED_GRADE_EV[:, 4]
        assert np.all(np.diff(a_column) > 0)
        assert np.all(np.diff(w_column) < 0)

    def test_halt_rates_are_probabilities_and_monotone_for_stayers(self):
        assert all(0.0 <= r <= 1.0 for r in defaults.HALT_RATES.values())
        stays = [defaults.HALT_RATES[f"stay:{i}"] for i in range(1, 5)]
        assert stays == sorted(stays, reverse=True)
