import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from acadtraj import (
    BUCKET_EDGES,
    CgpaBucketing,
    DomainError,
    EmptyBucketError,
    GradeDistribution,
    LevelScheme,
    RawSemesterGrades,
    UndefinedGpaError,
    bhattacharyya_angle,
    bucket_cohort,
    bucket_of,
    cumulative_gpa,
    direct_level_trajectory,
    grade_distribution,
    merge_levels,
)

simplex_points = st.lists(
    st.floats(min_value=1e-6, max_value=1.0), min_size=5, max_size=5
).map(lambda xs: GradeDistribution(np.array(xs) / np.sum(xs)))


def one_hot(index):
    probs = np.zeros(5)
    probs[index] = 1.0
    return GradeDistribution(probs)


class TestCumulativeGpa:
    def test_all_as(self):
        assert cumulative_gpa([RawSemesterGrades(n_a=3)]) == 4.0

    def test_midpoint(self):
        assert cumulative_gpa([RawSemesterGrades(n_a=1, n_c=1)]) == 3.0

    def test_withdrawals_excluded(self):
        # A, B, C, D graded; the W carries no points and no weight
        transcript = [RawSemesterGrades(n_a=1, n_b=1, n_c=1, n_d=1, n_w=1)]
        assert cumulative_gpa(transcript) == pytest.approx(2.5)

    def test_spans_semesters(self):
        transcript = [RawSemesterGrades(n_a=2), RawSemesterGrades(n_f=2)]
        assert cumulative_gpa(transcript) == pytest.approx(2.0)

    def test_only_withdrawals(self):
        with pytest.raises(UndefinedGpaError):
            cumulative_gpa([RawSemesterGrades(n_w=3)])


class TestBucketOf:
    @pytest.mark.parametrize(
        "cgpa,expected",
        [
            (1.0, 1),
            (2.10, 2),
            (2.0, 2),     # left-closed
            (2.25, 3),
            (2.49, 3),
            (2.5, 4),
            (3.0, 6),
            (3.49, 7),
            (3.5, 8),
            (4.0, 8),     # top bucket closed above
            (0.0, 1),
        ],
    )
    def test_boundaries(self, cgpa, expected):
        assert bucket_of(cgpa) == expected

    @pytest.mark.parametrize("cgpa", [-0.1, 4.1])
    def test_out_of_range(self, cgpa):
        with pytest.raises(DomainError):
            bucket_of(cgpa)


class TestGradeDistribution:
    def test_pure_a_bucket(self):
        dist = grade_distribution([RawSemesterGrades(n_a=4)])
        np.testing.assert_allclose(dist.probs, [1, 0, 0, 0, 0])

    def test_counting_with_withdrawal(self):
        dist = grade_distribution([RawSemesterGrades(n_a=2, n_b=1, n_w=1)])
        np.testing.assert_allclose(dist.probs, [0.5, 0.25, 0, 0, 0.25])

    def test_d_and_f_pool_together(self):
        dist = grade_distribution([RawSemesterGrades(n_d=1, n_f=3)])
        np.testing.assert_allclose(dist.probs, [0, 0, 0, 1.0, 0])

    def test_duplicating_students_changes_nothing(self):
        pool = [RawSemesterGrades(n_a=1, n_c=2), RawSemesterGrades(n_b=1, n_w=1)]
        once = grade_distribution(pool)
        twice = grade_distribution(pool + pool)
        np.testing.assert_allclose(once.probs, twice.probs)

    def test_empty_pool(self):
        with pytest.raises(EmptyBucketError):
            grade_distribution([])


class TestBhattacharyyaAngle:
    def test_identical_distributions(self):
        p = GradeDistribution(np.array([0.2, 0.2, 0.2, 0.2, 0.2]))
        assert bhattacharyya_angle(p, p) == 0.0

    def test_disjoint_support(self):
        assert bhattacharyya_angle(one_hot(0), one_hot(1)) == pytest.approx(math.pi / 2, abs=1e-12)

    def test_half_overlap(self):
        q = GradeDistribution(np.array([0.5, 0.5, 0, 0, 0]))
        assert bhattacharyya_angle(one_hot(0), q) == pytest.approx(math.pi / 4, abs=1e-12)

    @given(simplex_points, simplex_points)
    def test_symmetric_and_bounded(self, p, q):
        d = bhattacharyya_angle(p, q)
        assert 0.0 <= d <= math.pi / 2
        assert d == bhattacharyya_angle(q, p)

    @given(simplex_points)
    def test_zero_iff_equal_on_interior(self, p):
        assert bhattacharyya_angle(p, p) == pytest.approx(0.0, abs=3e-8)
        bumped = p.probs.copy()
        bumped[0] += 0.2
        q = GradeDistribution(bumped / bumped.sum())
        assert bhattacharyya_angle(p, q) > 0.0


def bucketing_from(distributions):
    return CgpaBucketing(
        members=tuple(("s",) for _ in distributions),
        distributions=tuple(distributions),
    )


def paired_distributions(noise=0.004):
    """Eight distributions forming four well-separated pairs: (1,2,3), (4,5), (6,7), (8)."""
    centers = [
        np.array([0.02, 0.08, 0.30, 0.35, 0.25]),  # weak: C/DF/W heavy
        np.array([0.15, 0.45, 0.30, 0.06, 0.04]),
        np.array([0.45, 0.40, 0.12, 0.02, 0.01]),
        np.array([0.80, 0.17, 0.01, 0.01, 0.01]),  # strong: A heavy
    ]
    assignment = [0, 0, 0, 1, 1, 2, 2, 3]
    out = []
    for i, center in enumerate(assignment):
        jitter = noise * np.sin(np.arange(5) + i)
        probs = np.clip(centers[center] + jitter, 1e-6, None)
        out.append(GradeDistribution(probs / probs.sum()))
    return out


class TestMergeLevels:
    def test_k_equals_buckets_is_identity(self):
        scheme = merge_levels(bucketing_from(paired_distributions()), k=8)
        assert scheme.groups == tuple((i,) for i in range(1, 9))

    def test_k_one_collapses_everything(self):
        scheme = merge_levels(bucketing_from(paired_distributions()), k=1)
        assert scheme.groups == (tuple(range(1, 9)),)
        assert scheme.intervals() == ((0.0, 4.0),)

    def test_forced_pairs_recover_the_reference_partition(self):
        scheme = merge_levels(bucketing_from(paired_distributions()), k=4)
        assert scheme.groups == ((1, 2, 3), (4, 5), (6, 7), (8,))
        assert scheme.intervals() == ((0.0, 2.5), (2.5, 3.0), (3.0, 3.5), (3.5, 4.0))

    def test_merge_history_records_one_distance_per_merge(self):
        scheme = merge_levels(bucketing_from(paired_distributions()), k=4)
        assert len(scheme.merge_history) == 4
        assert all(d >= 0 for d in scheme.merge_history)

    def test_groups_always_contiguous(self, rng):
        for _ in range(15):
            dists = [
                GradeDistribution(rng.dirichlet(np.ones(5))) for _ in range(8)
            ]
            k = int(rng.integers(1, 9))
            scheme = merge_levels(bucketing_from(dists), k=k)
            assert scheme.k == k
            flat = [b for g in scheme.groups for b in g]
            assert flat == list(range(1, 9))

    def test_empty_bucket_rejected(self):
        dists = list(paired_distributions())
        dists[3] = None
        bucketing = CgpaBucketing(
            members=tuple(() if d is None else ("s",) for d in dists),
            distributions=tuple(dists),
        )
        with pytest.raises(EmptyBucketError, match="bucket 4"):
            merge_levels(bucketing, k=4)

    def test_k_out_of_range(self):
        with pytest.raises(DomainError):
            merge_levels(bucketing_from(paired_distributions()), k=9)


class TestLevelScheme:
    def test_rejects_non_contiguous_groups(self):
        with pytest.raises(DomainError):
            LevelScheme(groups=((1, 3), (2,), (4, 5, 6, 7, 8)))

    def test_level_of_uses_bucket_intervals(self):
        scheme = LevelScheme(groups=((1, 2, 3), (4, 5), (6, 7), (8,)))
        assert scheme.level_of(1.8) == 1
        assert scheme.level_of(2.6) == 2
        assert scheme.level_of(3.2) == 3
        assert scheme.level_of(4.0) == 4


class TestBucketCohort:
    def test_assigns_by_final_cgpa_and_pools_courses(self):
        transcripts = {
            "low": [RawSemesterGrades(n_f=2)],                    # CGPA 0 -> bucket 1
            "mid": [RawSemesterGrades(n_a=1, n_c=1)],             # CGPA 3 -> bucket 6
            "top": [RawSemesterGrades(n_a=2)],                    # CGPA 4 -> bucket 8
            "gone": [RawSemesterGrades(n_w=1)],                   # no graded course: skipped
        }
        bucketing = bucket_cohort(transcripts)
        assert bucketing.members[0] == ("low",)
        assert bucketing.members[5] == ("mid",)
        assert bucketing.members[7] == ("top",)
        assert sum(len(m) for m in bucketing.members) == 3
        np.testing.assert_allclose(bucketing.distributions[7].probs, [1, 0, 0, 0, 0])


class TestDirectLevelTrajectory:
    def test_cumulative_mode_tracks_running_gpa(self):
        scheme = LevelScheme(groups=((1, 2, 3), (4, 5), (6, 7), (8,)))
        transcript = [RawSemesterGrades(n_a=2), RawSemesterGrades(n_f=2)]
        # CGPA after sem 1: 4.0 (level 4); after sem 2: 2.0 (level 1)
        assert direct_level_trajectory(transcript, scheme) == [4, 1]

    def test_semester_mode_scores_each_semester_alone(self):
        scheme = LevelScheme(groups=((1, 2, 3), (4, 5), (6, 7), (8,)))
        transcript = [RawSemesterGrades(n_a=2), RawSemesterGrades(n_f=2)]
        assert direct_level_trajectory(transcript, scheme, mode="semester") == [4, 1]
        transcript = [RawSemesterGrades(n_a=1, n_b=1), RawSemesterGrades(n_c=2)]
        assert direct_level_trajectory(transcript, scheme, mode="semester") == [4, 1]

    def test_ungradeable_semesters_are_skipped(self):
        scheme = LevelScheme(groups=((1, 2, 3), (4, 5), (6, 7), (8,)))
        transcript = [RawSemesterGrades(n_w=1), RawSemesterGrades(n_a=1)]
        assert direct_level_trajectory(transcript, scheme) == [4]

    def test_unknown_mode(self):
        scheme = LevelScheme(groups=((1, 2, 3), (4, 5), (6, 7), (8,)))
        with pytest.raises(DomainError):
            direct_level_trajectory([], scheme, mode="weekly")
