"""Default calibration values and the reference generating model.

The matrices below were calibrated on a large first-time-in-college
undergraduate cohort (tens of thousands of students over a decade) and
serve three purposes: documentation of realistic magnitudes, defaults for
the synthetic-cohort generator, and regression fixtures for the analysis
machinery.  They are not re-derivable from code; treat them as data.
"""

from __future__ import annotations

import numpy as np

from .grades import GradeTuple, ObservationVocabulary, VocabularyMode, encode
from .hmm import HmmModel

#: Trained level-to-level transition probabilities (4 levels, row-stochastic).
LEVEL_TRANSITION = np.array(
    [
        [0.8611, 0.1093, 0.0244, 0.0052],
        [0.0840, 0.8025, 0.1126, 0.0009],
        [0.0029, 0.0758, 0.8498, 0.0715],
        [0.0002, 0.0002, 0.0564, 0.9432],
    ]
)

#: Direct GPA-mapped transition guess used before training.
LEVEL_TRANSITION_GUESS = np.array(
    [
        [0.8181, 0.1710, 0.0102, 0.0007],
        [0.0790, 0.7843, 0.1352, 0.0015],
        [0.0074, 0.0854, 0.8444, 0.0628],
        [0.0034, 0.0100, 0.1032, 0.8834],
    ]
)

#: Trained first-semester level distribution.
FIRST_SEMESTER_LEVELS = np.array([0.1282, 0.3735, 0.3579, 0.1404])

#: Direct GPA-mapped first-semester guess.
FIRST_SEMESTER_LEVELS_GUESS = np.array([0.2014, 0.1907, 0.3350, 0.2729])

#: Long-run level occupancy (the fixed point of LEVEL_TRANSITION).
LONG_RUN_LEVELS = np.array([0.1170, 0.1819, 0.3044, 0.3967])

#: Per-level mean grade counts (A, B, C, DF, W) used as Poisson rates pre-training.
LEVEL_GRADE_RATES = np.array(
    [
        [0.331, 0.676, 0.718, 0.304, 0.154],
        [0.702, 1.058, 0.726, 0.179, 0.100],
        [1.130, 1.077, 0.401, 0.070, 0.060],
        [1.359, 0.572, 0.075, 0.009, 0.025],
    ]
)

#: Expected clipped grade counts per level under the trained emission matrix.
TRAINED_GRADE_EV = np.array(
    [
        [0.302, 0.658, 0.862, 0.608, 0.291],
        [0.789, 1.470, 0.902, 0.210, 0.098],
        [1.777, 1.416, 0.297, 0.036, 0.054],
        [2.561, 0.451, 0.023, 0.002, 0.020],
    ]
)

#: Halt probability per trajectory pattern ("stay:L" or "switch:A>B"); patterns
#: absent here (including multi-switch) fall back to DEFAULT_HALT_RATE.
HALT_RATES: dict[str, float] = {
    "stay:1": 0.974,
    "stay:2": 0.437,
    "stay:3": 0.238,
    "stay:4": 0.128,
    "switch:1>2": 0.092,
    "switch:1>3": 0.065,
    "switch:1>4": 0.051,
    "switch:2>1": 0.736,
    "switch:2>3": 0.042,
    "switch:3>1": 0.773,
    "switch:3>2": 0.087,
    "switch:3>4": 0.020,
    "switch:4>1": 1.000,
    "switch:4>3": 0.032,
}

#: Fallback halt probability for patterns without a calibrated rate.
DEFAULT_HALT_RATE = 0.25

#: Signature grade tuples per level with emission weights, lowest level first.
#: Supports are disjoint across levels, giving a near-deterministic emission
#: whose per-level GPA centers sit inside the four levels' CGPA intervals.
SIGNATURE_TUPLES: tuple[tuple[tuple[GradeTuple, float], ...], ...] = (
    (
        (GradeTuple(0, 0, 0, 1, 1), 0.25),
        (GradeTuple(0, 0, 1, 1, 1), 0.25),
        (GradeTuple(0, 0, 2, 1, 0), 0.20),
        (GradeTuple(0, 1, 0, 1, 1), 0.15),
        (GradeTuple(0, 0, 1, 1, 0), 0.15),
    ),
    (
        (GradeTuple(0, 2, 1, 0, 0), 0.30),
        (GradeTuple(1, 1, 1, 0, 0), 0.25),
        (GradeTuple(0, 1, 2, 0, 0), 0.20),
        (GradeTuple(0, 3, 0, 0, 0), 0.15),
        (GradeTuple(0, 2, 1, 0, 1), 0.10),
    ),
    (
        (GradeTuple(1, 2, 1, 0, 0), 0.30),
        (GradeTuple(2, 1, 1, 0, 0), 0.25),
        (GradeTuple(1, 3, 0, 0, 0), 0.20),
        (GradeTuple(1, 2, 0, 0, 0), 0.15),
        (GradeTuple(2, 2, 0, 0, 0), 0.10),
    ),
    (
        (GradeTuple(3, 0, 0, 0, 0), 0.35),
        (GradeTuple(2, 1, 0, 0, 0), 0.25),
        (GradeTuple(3, 1, 0, 0, 0), 0.20),
        (GradeTuple(2, 0, 0, 0, 0), 0.10),
        (GradeTuple(3, 0, 1, 0, 0), 0.10),
    ),
)


def signature_vocabulary() -> ObservationVocabulary:
    """Vocabulary of the signature tuples, in level order."""
    codes = tuple(encode(t) for level in SIGNATURE_TUPLES for t, _ in level)
    return ObservationVocabulary(codes=codes, mode=VocabularyMode.OBSERVED)


def reference_model(vocab: ObservationVocabulary | None = None) -> HmmModel:
    """Level-ordered generating model: calibrated dynamics, signature emissions.

    State ``i`` corresponds to level ``i+1``.  With the default vocabulary
    the emission supports are disjoint across states.
    """
    if vocab is None:
        vocab = signature_vocabulary()
    emission = np.zeros((len(SIGNATURE_TUPLES), vocab.size))
    for i, level in enumerate(SIGNATURE_TUPLES):
        for t, weight in level:
            emission[i, vocab.index_of(encode(t))] = weight
        emission[i] /= emission[i].sum()
    return HmmModel(
        transition=LEVEL_TRANSITION,
        emission=emission,
        initial=FIRST_SEMESTER_LEVELS,
    )
