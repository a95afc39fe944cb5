"""End-to-end wiring from raw student records to a trained model bundle."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .analysis import StudentRecord, state_level_order
from .errors import ImpossibleObservationError, InsufficientDataError, UndefinedGpaError
from .grades import (
    ObservationVocabulary,
    RawSemesterGrades,
    VocabularyMode,
    build_vocabulary,
    clip,
    encode,
)
from .initialization import (
    assemble_initial_model,
    estimate_rates,
    initial_pi0,
    initial_transition,
    poisson_emission,
)
from .levels import (
    CgpaBucketing,
    LevelScheme,
    bucket_cohort,
    cumulative_gpa,
    direct_level_trajectory,
    merge_levels,
)
from .model_io import ModelBundle
from .training import TrainingConfig, baum_welch


def enrolled_transcripts(records: Iterable[StudentRecord]) -> dict[str, list[RawSemesterGrades]]:
    """Per-student enrolled semesters, in order; students with no courses are dropped."""
    transcripts = {}
    for record in records:
        semesters = [raw for _, raw in record.enrolled]
        if semesters:
            transcripts[record.student_id] = semesters
    return transcripts


def build_scheme(records: Iterable[StudentRecord], n_levels: int = 4) -> tuple[CgpaBucketing, LevelScheme]:
    """CGPA-bucket the cohort and merge buckets into performance levels."""
    bucketing = bucket_cohort(enrolled_transcripts(records))
    return bucketing, merge_levels(bucketing, n_levels)


def build_vocab(
    records: Iterable[StudentRecord],
    mode: VocabularyMode = VocabularyMode.OBSERVED,
) -> ObservationVocabulary:
    """Observation vocabulary over every enrolled semester in the cohort."""
    tuples = [
        clip(raw) for transcript in enrolled_transcripts(records).values() for raw in transcript
    ]
    return build_vocabulary(tuples, mode)


def encode_cohort(
    records: Sequence[StudentRecord],
    vocab: ObservationVocabulary,
) -> list[np.ndarray]:
    """Dense observation sequences per student (enrolled semesters only).

    Vocabulary misses are re-raised naming the offending student and
    semester, so mismatched model/data pairs fail with a usable message.
    """
    corpus = []
    for record in records:
        indices = []
        for semester, raw in record.enrolled:
            try:
                indices.append(vocab.index_of(encode(clip(raw))))
            except ImpossibleObservationError as exc:
                raise ImpossibleObservationError(
                    f"student {record.student_id!r}, semester {semester}: {exc}"
                ) from None
        if indices:
            corpus.append(np.asarray(indices, dtype=np.intp))
    return corpus


def build_initial_model(
    records: Sequence[StudentRecord],
    scheme: LevelScheme,
    vocab: ObservationVocabulary,
):
    """Initial parameter guess from direct GPA mapping plus Poisson emissions."""
    transcripts = enrolled_transcripts(records)
    level_pools: list[list[RawSemesterGrades]] = [[] for _ in range(scheme.k)]
    for transcript in transcripts.values():
        try:
            level = scheme.level_of(cumulative_gpa(transcript))
        except UndefinedGpaError:
            continue
        level_pools[level - 1].extend(transcript)
    rates = estimate_rates(level_pools)

    direct = [
        direct_level_trajectory(transcript, scheme) for transcript in transcripts.values()
    ]
    direct = [trajectory for trajectory in direct if trajectory]
    if not direct:
        raise InsufficientDataError("no student has a mappable GPA trajectory")
    transition = initial_transition(direct, scheme.k)
    pi0 = initial_pi0([trajectory[0] for trajectory in direct], scheme.k)
    emission = poisson_emission(rates, vocab)
    return assemble_initial_model(transition, pi0, emission)


def fit_pipeline(
    records: Sequence[StudentRecord],
    n_levels: int = 4,
    vocab_mode: VocabularyMode = VocabularyMode.OBSERVED,
    config: TrainingConfig = TrainingConfig(),
    initial: ModelBundle | None = None,
    provenance: dict | None = None,
) -> ModelBundle:
    """Full learning pass: levels, vocabulary, initialization, Baum-Welch.

    When ``initial`` is given its model, vocabulary and scheme are reused
    and only training runs; otherwise everything is derived from the
    records.
    """
    records = list(records)
    if initial is None:
        _, scheme = build_scheme(records, n_levels)
        vocab = build_vocab(records, vocab_mode)
        model = build_initial_model(records, scheme, vocab)
    else:
        scheme = initial.scheme
        vocab = initial.vocabulary
        model = initial.model
    corpus = encode_cohort(records, vocab)
    trained, report = baum_welch(model, corpus, config)
    return ModelBundle(
        model=trained,
        vocabulary=vocab,
        scheme=scheme,
        state_to_level=state_level_order(trained, vocab),
        training={
            "iterations_run": report.iterations_run,
            "converged": report.converged,
            "final_log_likelihood": report.final_log_likelihood,
            "history": list(report.history),
        },
        provenance=provenance or {},
    )
