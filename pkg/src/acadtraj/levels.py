"""Performance-level construction from cumulative GPA.

Students are first split into eight CGPA bands, each band gets a
multinomial distribution over the five grade categories (A, B, C, D/F
pooled, W), and adjacent bands are then merged agglomeratively under the
Bhattacharyya angular distance until the target number of levels remains.
Restricting merges to adjacent bands keeps every level a CGPA interval.

Bucket and level intervals are left-closed/right-open, except the topmost,
which is closed at 4.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, EmptyBucketError, UndefinedGpaError
from .grades import RawSemesterGrades

#: The five grade categories a distribution ranges over.
GRADE_CATEGORIES = ("A", "B", "C", "DF", "W")

#: Grade points on the 4-point scale; withdrawals carry no points.
GRADE_POINTS = {"A": 4.0, "B": 3.0, "C": 2.0, "D": 1.0, "F": 0.0}

#: Boundaries of the eight initial CGPA buckets.
BUCKET_EDGES = (0.0, 2.0, 2.25, 2.5, 2.75, 3.0, 3.25, 3.5, 4.0)

N_BUCKETS = len(BUCKET_EDGES) - 1


def cumulative_gpa(transcript: Iterable[RawSemesterGrades]) -> float:
    """Unweighted mean grade points over all graded courses of a transcript.

    Withdrawals are excluded; a transcript with no graded course raises
    ``UndefinedGpaError``.
    """
    points = 0.0
    courses = 0
    for semester in transcript:
        points += (
            4.0 * semester.n_a
            + 3.0 * semester.n_b
            + 2.0 * semester.n_c
            + 1.0 * semester.n_d
        )
        courses += semester.graded_courses
    if courses == 0:
        raise UndefinedGpaError("transcript has no graded courses")
    return points / courses


def bucket_of(cgpa: float) -> int:
    """1-based CGPA bucket index; intervals are [lo, hi) except the last, [3.5, 4.0]."""
    if not 0.0 <= cgpa <= 4.0:
        raise DomainError(f"cgpa must lie in [0, 4], got {cgpa}")
    for i in range(1, N_BUCKETS):
        if cgpa < BUCKET_EDGES[i]:
            return i
    return N_BUCKETS


@dataclass(frozen=True)
class GradeDistribution:
    """Probability vector over (A, B, C, DF, W)."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.probs, dtype=float)
        if arr.shape != (len(GRADE_CATEGORIES),):
            raise DomainError(f"expected {len(GRADE_CATEGORIES)} categories, got {arr.shape}")
        if arr.min() < 0.0 or not np.isfinite(arr).all():
            raise DomainError("probabilities must be finite and non-negative")
        if abs(arr.sum() - 1.0) > 1e-9:
            raise DomainError(f"probabilities must sum to 1, got {arr.sum()!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)


def grade_distribution(semesters: Iterable[RawSemesterGrades]) -> GradeDistribution:
    """Category frequencies over all courses in a pool of semesters (D and F merged)."""
    counts = np.zeros(len(GRADE_CATEGORIES))
    for s in semesters:
        counts += (s.n_a, s.n_b, s.n_c, s.n_d + s.n_f, s.n_w)
    total = counts.sum()
    if total == 0:
        raise EmptyBucketError("no courses in this pool")
    return GradeDistribution(counts / total)


def bhattacharyya_angle(p: GradeDistribution, q: GradeDistribution) -> float:
    """Angular distance between two category distributions, in [0, pi/2].

    arccos of the Bhattacharyya coefficient sum(sqrt(p*q)); 0 for identical
    distributions, pi/2 for disjoint support.
    """
    coefficient = float(np.sqrt(p.probs * q.probs).sum())
    return math.acos(min(max(coefficient, 0.0), 1.0))


@dataclass(frozen=True)
class CgpaBucketing:
    """Cohort partition into the eight CGPA bands.

    ``members[i]`` holds the ids of students whose final CGPA falls in
    bucket ``i+1``; ``distributions[i]`` is that bucket's pooled grade
    distribution, or ``None`` when the bucket is empty.
    """

    members: tuple[tuple[str, ...], ...]
    distributions: tuple[GradeDistribution | None, ...]
    edges: tuple[float, ...] = BUCKET_EDGES

    def __post_init__(self) -> None:
        n = len(self.edges) - 1
        if len(self.members) != n or len(self.distributions) != n:
            raise DomainError(f"bucketing must describe exactly {n} buckets")

    @property
    def n_buckets(self) -> int:
        return len(self.edges) - 1


def bucket_cohort(transcripts: Mapping[str, Sequence[RawSemesterGrades]]) -> CgpaBucketing:
    """Assign each student to a CGPA bucket and pool per-bucket grade counts.

    Students whose transcripts have no graded course (withdrawals only)
    cannot be placed and are skipped.
    """
    members: list[list[str]] = [[] for _ in range(N_BUCKETS)]
    pools: list[list[RawSemesterGrades]] = [[] for _ in range(N_BUCKETS)]
    for student_id, transcript in transcripts.items():
        try:
            gpa = cumulative_gpa(transcript)
        except UndefinedGpaError:
            continue
        index = bucket_of(gpa) - 1
        members[index].append(student_id)
        pools[index].extend(transcript)
    distributions = tuple(
        grade_distribution(pool) if pool else None for pool in pools
    )
    return CgpaBucketing(
        members=tuple(tuple(m) for m in members),
        distributions=distributions,
    )


@dataclass(frozen=True)
class LevelScheme:
    """Partition of the CGPA buckets into K contiguous performance levels.

    Level 1 is the lowest-CGPA group.  ``groups[k]`` lists the 1-based
    bucket indices making up level ``k+1``; because merging is restricted
    to adjacent buckets, every level is a CGPA interval.
    """

    groups: tuple[tuple[int, ...], ...]
    edges: tuple[float, ...] = BUCKET_EDGES
    linkage: str = "average"
    merge_history: tuple[float, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        flat = [b for group in self.groups for b in group]
        if flat != list(range(1, len(self.edges))):
            raise DomainError(
                "groups must partition the buckets into contiguous ascending runs"
            )

    @property
    def k(self) -> int:
        return len(self.groups)

    def intervals(self) -> tuple[tuple[float, float], ...]:
        """Per-level CGPA interval boundaries (lo, hi)."""
        return tuple(
            (self.edges[group[0] - 1], self.edges[group[-1]]) for group in self.groups
        )

    def level_of(self, cgpa: float) -> int:
        """1-based level containing a CGPA value."""
        bucket = bucket_of(cgpa)
        for k, group in enumerate(self.groups, start=1):
            if bucket in group:
                return k
        raise DomainError(f"no level covers bucket {bucket}")  # pragma: no cover


def identity_scheme() -> LevelScheme:
    """One level per bucket (no merging)."""
    return LevelScheme(groups=tuple((i,) for i in range(1, N_BUCKETS + 1)))


def merge_levels(bucketing: CgpaBucketing, k: int = 4) -> LevelScheme:
    """Merge the eight buckets into ``k`` levels by adjacent agglomeration.

    At each step the adjacent pair of clusters with the smallest
    average-linkage Bhattacharyya angle is merged; ties go to the
    lower-CGPA pair.  Every bucket must be non-empty.
    """
    n = bucketing.n_buckets
    if not 1 <= k <= n:
        raise DomainError(f"target level count must be in 1..{n}, got {k}")
    for i, dist in enumerate(bucketing.distributions):
        if dist is None:
            raise EmptyBucketError(f"bucket {i + 1} has no members; cannot cluster")

    angles = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            angles[i, j] = angles[j, i] = bhattacharyya_angle(
                bucketing.distributions[i], bucketing.distributions[j]
            )

    clusters: list[list[int]] = [[i] for i in range(n)]
    history: list[float] = []
    while len(clusters) > k:
        best_pair = None
        best_distance = np.inf
        for idx in range(len(clusters) - 1):
            left, right = clusters[idx], clusters[idx + 1]
            distance = float(np.mean([angles[i, j] for i in left for j in right]))
            if distance < best_distance:
                best_distance = distance
                best_pair = idx
        assert best_pair is not None
        clusters[best_pair : best_pair + 2] = [clusters[best_pair] + clusters[best_pair + 1]]
        history.append(best_distance)

    groups = tuple(tuple(b + 1 for b in cluster) for cluster in clusters)
    return LevelScheme(
        groups=groups,
        edges=bucketing.edges,
        merge_history=tuple(history),
    )


def direct_level_trajectory(
    transcript: Sequence[RawSemesterGrades],
    scheme: LevelScheme,
    mode: str = "cumulative",
) -> list[int]:
    """Per-semester levels from GPA alone (no HMM filtering).

    ``cumulative`` maps the running CGPA through each semester; ``semester``
    maps each semester's own GPA.  Semesters where the chosen GPA is
    undefined (no graded courses yet) contribute no level.
    """
    if mode not in ("cumulative", "semester"):
        raise DomainError(f"mode must be 'cumulative' or 'semester', got {mode!r}")
    levels: list[int] = []
    points = 0.0
    courses = 0
    for semester in transcript:
        if mode == "cumulative":
            points += 4.0 * semester.n_a + 3.0 * semester.n_b + 2.0 * semester.n_c + semester.n_d
            courses += semester.graded_courses
            if courses == 0:
                continue
            gpa = points / courses
        else:
            if semester.graded_courses == 0:
                continue
            gpa = cumulative_gpa([semester])
        levels.append(scheme.level_of(gpa))
    return levels
