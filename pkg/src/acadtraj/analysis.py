"""Cohort decoding and trajectory analytics.

Takes a trained model plus a level scheme, turns each student's enrolled
semesters into a decoded level trajectory, and aggregates the cohort into
the summary tables: consistency mix, switch types, pattern-conditional
halt rates, and chi-squared group comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError
from .grades import ObservationVocabulary, RawSemesterGrades, clip, encode
from .hmm import HmmModel, viterbi
from .initialization import ev_grades
from .levels import LevelScheme

#: Semesters without enrollment after which a student is considered to have halted.
HALT_GAP = 3


class Outcome(str, Enum):
    GRADUATED = "graduated"
    HALTED = "halted"
    CENSORED = "censored"


class Verdict(str, Enum):
    """How a switcher's final level compares to their first."""

    IMPROVING = "improving"
    WORSENING = "worsening"
    RETURNING = "returning"


@dataclass(frozen=True)
class StudentRecord:
    """One student's ordered semester records plus outcome metadata.

    ``semesters`` pairs 1-based semester indices with raw grade counts;
    ``outcome`` is the explicit label when one is known (None otherwise);
    ``groups`` holds opaque demographic labels for group comparisons.
    """

    student_id: str
    semesters: tuple[tuple[int, RawSemesterGrades], ...]
    outcome: Outcome | None = None
    groups: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        indices = [index for index, _ in self.semesters]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise DomainError(f"semester indices must be strictly increasing for {self.student_id}")

    @property
    def enrolled(self) -> tuple[tuple[int, RawSemesterGrades], ...]:
        """Semesters with at least one course."""
        return tuple((i, s) for i, s in self.semesters if s.is_enrolled)

    @property
    def gaps(self) -> tuple[int, ...]:
        """Semester indices with no courses, inside the enrollment span."""
        enrolled = [i for i, s in self.semesters if s.is_enrolled]
        if not enrolled:
            return tuple(i for i, _ in self.semesters)
        present = set(enrolled)
        return tuple(
            i for i in range(enrolled[0], enrolled[-1] + 1) if i not in present
        )

    @property
    def last_enrolled(self) -> int | None:
        enrolled = self.enrolled
        return enrolled[-1][0] if enrolled else None


def halt_label(record: StudentRecord, horizon: int) -> Outcome:
    """Resolve a student's outcome at a data horizon.

    An explicit label wins; otherwise the student is halted when at least
    ``HALT_GAP`` semesters separate their last enrollment from the horizon,
    and censored when the record is too recent to tell.
    """
    if record.outcome is not None:
        return record.outcome
    last = record.last_enrolled
    if last is None:
        return Outcome.CENSORED
    return Outcome.HALTED if horizon - last >= HALT_GAP else Outcome.CENSORED


@dataclass(frozen=True)
class LevelTrajectory:
    """Decoded level per enrolled semester, plus the resolved outcome."""

    student_id: str
    semesters: tuple[int, ...]
    levels: tuple[int, ...]
    outcome: Outcome
    groups: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class TrajectoryClass:
    """Shape summary of one level trajectory.

    ``consistent_level`` is set exactly when there are no switches.  Each
    switch records (from_level, to_level, position) with 1-based positions
    into the trajectory.  ``verdict`` compares last level to first and is
    None for consistent students.
    """

    consistent_level: int | None
    switch_count: int
    switches: tuple[tuple[int, int, int], ...]
    verdict: Verdict | None

    @property
    def is_consistent(self) -> bool:
        return self.consistent_level is not None


def classify(levels: Sequence[int]) -> TrajectoryClass:
    """Classify a level trajectory by its switches."""
    if len(levels) == 0:
        raise DomainError("cannot classify an empty trajectory")
    switches = tuple(
        (prev, cur, t + 2)
        for t, (prev, cur) in enumerate(zip(levels, levels[1:]))
        if prev != cur
    )
    if not switches:
        return TrajectoryClass(
            consistent_level=levels[0], switch_count=0, switches=(), verdict=None
        )
    if levels[-1] > levels[0]:
        verdict = Verdict.IMPROVING
    elif levels[-1] < levels[0]:
        verdict = Verdict.WORSENING
    else:
        verdict = Verdict.RETURNING
    return TrajectoryClass(
        consistent_level=None,
        switch_count=len(switches),
        switches=switches,
        verdict=verdict,
    )


def pattern_key(levels: Sequence[int]) -> str:
    """Canonical trajectory-pattern key: ``stay:L``, ``switch:A>B``, or ``multi``."""
    cls = classify(levels)
    if cls.is_consistent:
        return f"stay:{cls.consistent_level}"
    if cls.switch_count == 1:
        src, dst, _ = cls.switches[0]
        return f"switch:{src}>{dst}"
    return "multi"


def state_level_order(model: HmmModel, vocab: ObservationVocabulary) -> tuple[int, ...]:
    """Map each HMM state to a 1-based level by expected-GPA ranking.

    States are scored by grade points per expected graded course from the
    emission's expected grade counts, then ranked ascending, so the state
    with the weakest grade profile becomes level 1.
    """
    ev = ev_grades(model.emission, vocab)
    graded = ev[:, 0] + ev[:, 1] + ev[:, 2] + ev[:, 3]
    points = 4.0 * ev[:, 0] + 3.0 * ev[:, 1] + 2.0 * ev[:, 2]
    with np.errstate(invalid="ignore", divide="ignore"):
        score = np.where(graded > 0, points / np.where(graded > 0, graded, 1.0), 0.0)
    order = np.argsort(score, kind="stable")
    level_of_state = np.empty(model.n_states, dtype=int)
    level_of_state[order] = np.arange(1, model.n_states + 1)
    return tuple(int(x) for x in level_of_state)


def decode_cohort(
    model: HmmModel,
    vocab: ObservationVocabulary,
    scheme: LevelScheme,
    cohort: Iterable[StudentRecord],
    horizon: int | None = None,
    state_to_level: Sequence[int] | None = None,
) -> list[LevelTrajectory]:
    """Viterbi-decode every student's enrolled semesters into level labels.

    Enrollment gaps are excluded from the observation sequence but still
    count toward outcome resolution.  Unless given, the state-to-level
    mapping is derived from the emission matrix via
    :func:`state_level_order`, and the horizon is the latest enrolled
    semester in the cohort.
    """
    if model.n_states != scheme.k:
        raise DomainError(
            f"model has {model.n_states} states but the scheme defines {scheme.k} levels"
        )
    records = list(cohort)
    if state_to_level is None:
        state_to_level = state_level_order(model, vocab)
    if horizon is None:
        horizon = max(
            (r.last_enrolled for r in records if r.last_enrolled is not None),
            default=0,
        )
    trajectories = []
    for record in records:
        enrolled = record.enrolled
        if not enrolled:
            continue
        obs = [vocab.index_of(encode(clip(s))) for _, s in enrolled]
        states = viterbi(model, obs)
        trajectories.append(
            LevelTrajectory(
                student_id=record.student_id,
                semesters=tuple(i for i, _ in enrolled),
                levels=tuple(state_to_level[s] for s in states),
                outcome=halt_label(record, horizon),
                groups=dict(record.groups),
            )
        )
    return trajectories


@dataclass(frozen=True)
class HaltRateTable:
    """Halt counts and totals per trajectory pattern.

    Keys are pattern strings (``stay:L``, ``switch:A>B``); patterns with no
    population simply do not appear.
    """

    entries: Mapping[str, tuple[int, int]]

    def rate(self, key: str) -> float:
        halts, total = self.entries[key]
        return halts / total


def _halt_counts(trajectories: Iterable[LevelTrajectory], keep) -> dict[str, tuple[int, int]]:
    counts: dict[str, list[int]] = {}
    for traj in trajectories:
        if traj.outcome is Outcome.CENSORED:
            raise DomainError(
                f"student {traj.student_id} is censored; exclude censored students first"
            )
        key = pattern_key(traj.levels)
        if not keep(key):
            continue
        entry = counts.setdefault(key, [0, 0])
        entry[0] += int(traj.outcome is Outcome.HALTED)
        entry[1] += 1
    return {k: (h, t) for k, (h, t) in counts.items()}


def halt_rate_table(trajectories: Iterable[LevelTrajectory]) -> HaltRateTable:
    """Halt rates for zero-switch (stay) and one-switch patterns.

    Students with two or more switches are outside this table's scope;
    censored students must be filtered out beforehand.
    """
    return HaltRateTable(entries=_halt_counts(trajectories, lambda k: k != "multi"))


def pattern_halt_rates(trajectories: Iterable[LevelTrajectory]) -> HaltRateTable:
    """Halt rates over all patterns, including the pooled multi-switch bucket."""
    return HaltRateTable(entries=_halt_counts(trajectories, lambda k: True))


def level_mix_table(
    trajectories: Sequence[LevelTrajectory], n_levels: int
) -> dict[str, float]:
    """Cohort shares of consistent-level students and switchers.

    Keys are ``consistent:1`` .. ``consistent:K`` and ``other``; the shares
    sum to 1.
    """
    if not trajectories:
        raise DomainError("cohort must not be empty")
    keys = [f"consistent:{i}" for i in range(1, n_levels + 1)] + ["other"]
    counts = dict.fromkeys(keys, 0)
    for traj in trajectories:
        cls = classify(traj.levels)
        key = f"consistent:{cls.consistent_level}" if cls.is_consistent else "other"
        counts[key] += 1
    total = len(trajectories)
    return {k: v / total for k, v in counts.items()}


def switch_type_distribution(
    trajectories: Sequence[LevelTrajectory], n_levels: int
) -> dict[tuple[int, int], float]:
    """Share of each ordered (from, to) pair among one-switch students."""
    pairs = [
        (i, j)
        for i in range(1, n_levels + 1)
        for j in range(1, n_levels + 1)
        if i != j
    ]
    counts = dict.fromkeys(pairs, 0)
    total = 0
    for traj in trajectories:
        cls = classify(traj.levels)
        if cls.switch_count != 1:
            continue
        src, dst, _ = cls.switches[0]
        counts[(src, dst)] += 1
        total += 1
    if total == 0:
        raise DomainError("no one-switch students in the cohort")
    return {pair: count / total for pair, count in counts.items()}


def chi_squared(table) -> tuple[float, int]:
    """Pearson chi-squared statistic and degrees of freedom for a count table.

    Returns (0.0, 0) for single-row or single-column tables.  P-values are
    out of scope; the statistic and dof are enough for threshold lookups.
    """
    counts = np.asarray(table, dtype=float)
    if counts.ndim != 2 or counts.size == 0:
        raise DomainError(f"contingency table must be 2-dimensional, got shape {counts.shape}")
    if counts.min() < 0:
        raise DomainError("contingency table entries must be non-negative")
    row_sums = counts.sum(axis=1)
    col_sums = counts.sum(axis=0)
    if np.any(row_sums <= 0) or np.any(col_sums <= 0):
        raise DomainError("every row and column must have a positive total")
    expected = np.outer(row_sums, col_sums) / counts.sum()
    statistic = float(((counts - expected) ** 2 / expected).sum())
    dof = (counts.shape[0] - 1) * (counts.shape[1] - 1)
    if dof == 0:
        return 0.0, 0
    return statistic, dof


def group_level_contingency(
    trajectories: Sequence[LevelTrajectory],
    group_column: str,
    n_levels: int,
) -> tuple[list[str], list[str], np.ndarray]:
    """Count table of group value x trajectory class for one group column.

    Returns (group values, class labels, counts); group values are sorted,
    class labels are ``consistent:1``..``consistent:K`` then ``other``.
    Students without the column are skipped.
    """
    class_labels = [f"consistent:{i}" for i in range(1, n_levels + 1)] + ["other"]
    values = sorted(
        {traj.groups[group_column] for traj in trajectories if group_column in traj.groups}
    )
    if not values:
        raise DomainError(f"no student carries group column {group_column!r}")
    counts = np.zeros((len(values), len(class_labels)))
    row_of = {v: i for i, v in enumerate(values)}
    for traj in trajectories:
        if group_column not in traj.groups:
            continue
        cls = classify(traj.levels)
        label = f"consistent:{cls.consistent_level}" if cls.is_consistent else "other"
        counts[row_of[traj.groups[group_column]], class_labels.index(label)] += 1
    return values, class_labels, counts
