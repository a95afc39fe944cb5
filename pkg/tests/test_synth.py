import numpy as np
import pytest

from acadtraj import (
    ConfigError,
    GroupModel,
    HmmModel,
    LengthModel,
    Outcome,
    SynthConfig,
    TrainingConfig,
    build_vocabulary,
    clip,
    decode,
    encode,
    generate,
    halt_label,
    pattern_key,
    perturb_model,
    recovery_experiment,
)
from acadtraj import defaults
from acadtraj.grades import GradeTuple


def tiny_config(**overrides):
    base = dict(
        model=defaults.reference_model(),
        vocabulary=defaults.signature_vocabulary(),
        cohort_size=50,
        halt_rates=defaults.HALT_RATES,
        default_halt_rate=defaults.DEFAULT_HALT_RATE,
        seed=7,
    )
    base.update(overrides)
    return SynthConfig(**base)


class TestLengthModel:
    def test_stays_within_bounds(self, rng):
        model = LengthModel(min_semesters=3, max_semesters=9, continuation=0.8)
        lengths = [model.sample(rng) for _ in range(500)]
        assert min(lengths) >= 3 and max(lengths) <= 9

    def test_zero_continuation_pins_the_minimum(self, rng):
        model = LengthModel(min_semesters=4, max_semesters=10, continuation=0.0)
        assert {model.sample(rng) for _ in range(20)} == {4}

    def test_invalid_bounds(self):
        with pytest.raises(ConfigError):
            LengthModel(min_semesters=5, max_semesters=4)


class TestGenerate:
    def test_same_seed_is_byte_identical(self):
        first = generate(tiny_config())
        second = generate(tiny_config())
        assert first == second

    def test_different_seeds_differ(self):
        assert generate(tiny_config()) != generate(tiny_config(seed=8))

    def test_identity_dynamics_force_consistency(self):
        model = HmmModel(
            transition=np.eye(4),
            emission=defaults.reference_model().emission,
            initial=[1.0, 0.0, 0.0, 0.0],
        )
        cohort = generate(tiny_config(model=model))
        for student in cohort.students:
            assert pattern_key(student.true_levels) == "stay:1"

    def test_observations_consistent_with_true_states(self):
        cohort = generate(tiny_config(cohort_size=200))
        vocab = defaults.signature_vocabulary()
        model = defaults.reference_model()
        for student in cohort.students:
            for (_, raw), state in zip(student.record.semesters, student.true_states):
                index = vocab.index_of(encode(clip(raw)))
                assert model.emission[state, index] > 0

    def test_tuple_counts_become_exact_course_counts(self):
        cohort = generate(tiny_config(cohort_size=30))
        vocab = defaults.signature_vocabulary()
        for student in cohort.students:
            for _, raw in student.record.semesters:
                t = clip(raw)
                assert (raw.n_a, raw.n_b, raw.n_c) == (t.a, t.b, t.c)
                assert raw.n_d + raw.n_f == t.df
                assert raw.n_w == t.w

    def test_outcomes_resolve_without_censoring(self):
        cohort = generate(tiny_config(cohort_size=300))
        for student in cohort.students:
            assert halt_label(student.record, cohort.horizon) in (
                Outcome.GRADUATED,
                Outcome.HALTED,
            )

    def test_missing_pattern_falls_back_to_the_default_rate(self):
        cohort = generate(tiny_config(halt_rates={}, default_halt_rate=1.0, cohort_size=40))
        for student in cohort.students:
            assert halt_label(student.record, cohort.horizon) is Outcome.HALTED

    def test_missing_pattern_without_default_is_an_error(self):
        with pytest.raises(ConfigError):
            generate(tiny_config(halt_rates={}, default_halt_rate=None))

    def test_group_labels_follow_level_skew(self):
        groups = (
            GroupModel(
                column="track",
                categories=("x", "y"),
                weights=(0.5, 0.5),
                weights_by_level=((1.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.0, 1.0)),
            ),
        )
        cohort = generate(tiny_config(cohort_size=120, groups=groups))
        for student in cohort.students:
            expected = "x" if student.true_levels[0] <= 2 else "y"
            assert student.record.groups["track"] == expected


class TestEmpiricalConvergence:
    def test_transition_and_initial_frequencies_match_the_generator(self):
        config = tiny_config(
            cohort_size=4000,
            lengths=LengthModel(min_semesters=10, max_semesters=10, continuation=0.0),
            seed=11,
        )
        cohort = generate(config)
        n = config.model.n_states
        transitions = np.zeros((n, n))
        firsts = np.zeros(n)
        for student in cohort.students:
            states = student.true_states
            firsts[states[0]] += 1
            for a, b in zip(states, states[1:]):
                transitions[a, b] += 1
        transitions /= transitions.sum(axis=1, keepdims=True)
        firsts /= firsts.sum()
        assert np.abs(transitions - config.model.transition).max() < 0.02
        assert np.abs(firsts - config.model.initial).max() < 0.02

    def test_halt_rates_conditioned_on_true_pattern_match_the_config(self):
        config = tiny_config(cohort_size=6000, seed=13)
        cohort = generate(config)
        halted = {}
        totals = {}
        for student in cohort.students:
            key = pattern_key(student.true_levels)
            outcome = halt_label(student.record, cohort.horizon)
            totals[key] = totals.get(key, 0) + 1
            halted[key] = halted.get(key, 0) + (outcome is Outcome.HALTED)
        for key in ("stay:1", "stay:2", "stay:3", "stay:4"):
            target = defaults.HALT_RATES[key]
            observed = halted[key] / totals[key]
            assert abs(observed - target) < 0.05, (key, observed, target)


class TestPerturbModel:
    def test_preserves_stochasticity(self, rng):
        perturbed = perturb_model(defaults.reference_model(), rng, concentration=30.0)
        np.testing.assert_allclose(perturbed.transition.sum(axis=1), 1.0, atol=1e-9)
        np.testing.assert_allclose(perturbed.emission.sum(axis=1), 1.0, atol=1e-9)

    def test_higher_concentration_means_smaller_moves(self, rng):
        model = defaults.reference_model()
        loose = perturb_model(model, np.random.default_rng(3), concentration=5.0)
        tight = perturb_model(model, np.random.default_rng(3), concentration=5000.0)
        loose_err = np.abs(loose.transition - model.transition).max()
        tight_err = np.abs(tight.transition - model.transition).max()
        assert tight_err < loose_err


class TestRecoveryExperiment:
    def test_truth_as_init_stays_near_the_truth(self):
        config = tiny_config(
            cohort_size=800,
            lengths=LengthModel(min_semesters=12, max_semesters=12, continuation=0.0),
            seed=21,
        )
        report = recovery_experiment(
            config,
            TrainingConfig(max_iterations=5),
            concentration=1e9,  # effectively no perturbation
        )
        assert report.transition_error <= 0.05
        assert max(report.emission_tv) <= 0.05
        assert report.permutation == (0, 1, 2, 3)

    def test_small_sample_reports_errors_without_crashing(self):
        config = tiny_config(
            cohort_size=10,
            lengths=LengthModel(min_semesters=3, max_semesters=3, continuation=0.0),
            seed=23,
        )
        report = recovery_experiment(config, TrainingConfig(max_iterations=10))
        assert np.isfinite(report.transition_error)
        assert len(report.emission_tv) == 4
        assert report.training.iterations_run >= 1
