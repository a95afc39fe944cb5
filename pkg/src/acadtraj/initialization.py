"""Initial model construction.

The transition guess comes from counting how direct GPA-mapped levels move
between consecutive semesters, the initial distribution from first-semester
level frequencies, and the emission guess from independent per-category
Poisson factors: counts A/B/C use the Poisson pmf with the cap-3 cell
absorbing the upper tail, while the binary D/F and W flags use
P(0) = exp(-rate) and P(1) = 1 - exp(-rate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateEmissionError, DomainError, InsufficientDataError
from .grades import COUNT_CAP, ObservationVocabulary, RawSemesterGrades, decode
from .hmm import HmmModel
from .levels import GRADE_CATEGORIES

#: Row-sum slack within which assemble_initial_model silently renormalizes.
RENORMALIZE_ATOL = 1e-6


@dataclass(frozen=True)
class PoissonRates:
    """Per-level, per-category rates; shape (n_levels, 5) for (A, B, C, DF, W)."""

    rates: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.rates, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != len(GRADE_CATEGORIES):
            raise DomainError(
                f"rates must be (n_levels, {len(GRADE_CATEGORIES)}), got {arr.shape}"
            )
        if not np.isfinite(arr).all() or arr.min() < 0.0:
            raise DomainError("rates must be finite and non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "rates", arr)

    @property
    def n_levels(self) -> int:
        return self.rates.shape[0]


def initial_transition(level_trajectories: Iterable[Sequence[int]], n_levels: int) -> np.ndarray:
    """Row-normalized transition counts between consecutive direct-mapped levels.

    Levels are 1-based; rows that never occur as a source become uniform.
    Raises ``InsufficientDataError`` when no trajectory has length >= 2.
    """
    counts = np.zeros((n_levels, n_levels))
    for trajectory in level_trajectories:
        for src, dst in zip(trajectory, trajectory[1:]):
            if not (1 <= src <= n_levels and 1 <= dst <= n_levels):
                raise DomainError(f"level labels must lie in 1..{n_levels}")
            counts[src - 1, dst - 1] += 1.0
    if counts.sum() == 0:
        raise InsufficientDataError("no trajectory of length >= 2; cannot count transitions")
    totals = counts.sum(axis=1, keepdims=True)
    matrix = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / n_levels)
    return matrix


def initial_pi0(first_levels: Iterable[int], n_levels: int) -> np.ndarray:
    """Frequency vector of first-semester levels (1-based labels)."""
    counts = np.zeros(n_levels)
    total = 0
    for level in first_levels:
        if not 1 <= level <= n_levels:
            raise DomainError(f"level labels must lie in 1..{n_levels}")
        counts[level - 1] += 1.0
        total += 1
    if total == 0:
        raise InsufficientDataError("no first-semester levels supplied")
    return counts / total


def estimate_rates(level_semesters: Sequence[Iterable[RawSemesterGrades]]) -> PoissonRates:
    """Mean observed raw counts per level group, one row per level.

    D and F counts are pooled into the DF rate.  A level group with no
    semesters raises ``InsufficientDataError``.
    """
    rows = []
    for i, semesters in enumerate(level_semesters):
        counts = np.zeros(len(GRADE_CATEGORIES))
        n = 0
        for s in semesters:
            counts += (s.n_a, s.n_b, s.n_c, s.n_d + s.n_f, s.n_w)
            n += 1
        if n == 0:
            raise InsufficientDataError(f"level group {i + 1} has no semesters")
        rows.append(counts / n)
    return PoissonRates(np.array(rows))


def _clipped_count_pmf(rate: float) -> np.ndarray:
    """Poisson pmf over counts 0..3 with the top cell absorbing P(K >= 3)."""
    pmf = np.array([math.exp(-rate) * rate**k / math.factorial(k) for k in range(COUNT_CAP)])
    return np.append(pmf, max(1.0 - pmf.sum(), 0.0))


def _flag_pmf(rate: float) -> np.ndarray:
    """P(flag=0) = exp(-rate), P(flag=1) = 1 - exp(-rate)."""
    p0 = math.exp(-rate)
    return np.array([p0, 1.0 - p0])


def poisson_emission(rates: PoissonRates, vocab: ObservationVocabulary) -> np.ndarray:
    """Emission matrix from separable Poisson factors, renormalized over the vocabulary.

    A row whose factors put zero weight on every vocabulary code raises
    ``DegenerateEmissionError``.
    """
    tuples = [decode(code) for code in vocab.codes]
    emission = np.empty((rates.n_levels, vocab.size))
    for i in range(rates.n_levels):
        rate_a, rate_b, rate_c, rate_df, rate_w = rates.rates[i]
        f_a, f_b, f_c = _clipped_count_pmf(rate_a), _clipped_count_pmf(rate_b), _clipped_count_pmf(rate_c)
        g_df, g_w = _flag_pmf(rate_df), _flag_pmf(rate_w)
        weights = np.array(
            [f_a[t.a] * f_b[t.b] * f_c[t.c] * g_df[t.df] * g_w[t.w] for t in tuples]
        )
        total = weights.sum()
        if total <= 0.0:
            raise DegenerateEmissionError(
                f"level {i + 1} assigns zero weight to every vocabulary code"
            )
        emission[i] = weights / total
    return emission


def ev_grades(emission: np.ndarray, vocab: ObservationVocabulary) -> np.ndarray:
    """Expected clipped grade counts per state: (n_states, 5) for (A, B, C, DF, W)."""
    emission = np.asarray(emission, dtype=float)
    if emission.ndim != 2 or emission.shape[1] != vocab.size:
        raise DomainError(
            f"emission must be (n_states, {vocab.size}), got {emission.shape}"
        )
    tuple_counts = np.array(
        [(t.a, t.b, t.c, t.df, t.w) for t in (decode(code) for code in vocab.codes)],
        dtype=float,
    )
    return emission @ tuple_counts


def assemble_initial_model(transition, pi0, emission) -> HmmModel:
    """Bundle the three parameter blocks into a validated model.

    Rows off stochastic by at most 1e-6 are silently renormalized; anything
    further off raises ``DomainError``.
    """
    transition = _renormalized(np.asarray(transition, dtype=float), "transition")
    emission = _renormalized(np.asarray(emission, dtype=float), "emission")
    pi0 = _renormalized(np.asarray(pi0, dtype=float)[None, :], "initial")[0]
    if transition.shape[0] != transition.shape[1]:
        raise DomainError(f"transition must be square, got {transition.shape}")
    if not (transition.shape[0] == emission.shape[0] == pi0.shape[0]):
        raise DomainError(
            f"inconsistent shapes: transition {transition.shape}, "
            f"emission {emission.shape}, initial {pi0.shape}"
        )
    return HmmModel(transition=transition, emission=emission, initial=pi0)


def _renormalized(matrix: np.ndarray, name: str) -> np.ndarray:
    if matrix.ndim != 2:
        raise DomainError(f"{name} must be 2-dimensional, got shape {matrix.shape}")
    if not np.isfinite(matrix).all() or matrix.min() < 0.0:
        raise DomainError(f"{name} entries must be finite and non-negative")
    sums = matrix.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > RENORMALIZE_ATOL):
        worst = int(np.argmax(np.abs(sums - 1.0)))
        raise DomainError(
            f"{name} row {worst} sums to {sums[worst]!r}, beyond the "
            f"{RENORMALIZE_ATOL} renormalization tolerance"
        )
    return matrix / sums[:, None]
