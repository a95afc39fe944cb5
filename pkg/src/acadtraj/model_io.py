"""File formats: the model bundle (JSON) and the transcript / trajectory CSVs.

The model file is a single self-describing JSON document carrying the HMM
parameters, the observation vocabulary, the level scheme, and the
state-to-level ordering, so decoding needs no side inputs.  Serialization
is canonical (sorted keys, fixed indentation, repr-exact floats): saving a
loaded bundle reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .analysis import LevelTrajectory, Outcome, StudentRecord
from .errors import ConfigError, DomainError, DuplicateError, ParseError
from .grades import ObservationVocabulary, RawSemesterGrades, VocabularyMode
from .hmm import HmmModel
from .levels import LevelScheme
from .synth import SynthCohort

SCHEMA_VERSION = 1

#: Letters accepted in a transcript grades string.
GRADE_LETTERS = frozenset("ABCDFW")

_OUTCOME_TOKENS = {
    "GRADUATED": Outcome.GRADUATED,
    "HALTED": Outcome.HALTED,
    "UNKNOWN": None,
    "": None,
}


@dataclass(frozen=True)
class ModelBundle:
    """Everything needed to decode new transcripts with a trained model."""

    model: HmmModel
    vocabulary: ObservationVocabulary
    scheme: LevelScheme | None = None
    state_to_level: tuple[int, ...] | None = None
    training: dict | None = None
    provenance: dict = field(default_factory=dict)


def config_hash(payload: dict) -> str:
    """Stable short hash of a JSON-serializable configuration mapping."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _scheme_to_json(scheme: LevelScheme) -> dict:
    return {
        "bucket_edges": list(scheme.edges),
        "groups": [list(group) for group in scheme.groups],
        "linkage": scheme.linkage,
        "merge_history": list(scheme.merge_history),
    }


def _scheme_from_json(data: dict) -> LevelScheme:
    return LevelScheme(
        groups=tuple(tuple(g) for g in data["groups"]),
        edges=tuple(data["bucket_edges"]),
        linkage=data["linkage"],
        merge_history=tuple(data["merge_history"]),
    )


def save_model(path, bundle: ModelBundle) -> None:
    document = {
        "schema_version": SCHEMA_VERSION,
        "n_states": bundle.model.n_states,
        "vocabulary": {
            "mode": bundle.vocabulary.mode.value,
            "codes": list(bundle.vocabulary.codes),
        },
        "transition": bundle.model.transition.tolist(),
        "emission": bundle.model.emission.tolist(),
        "initial": bundle.model.initial.tolist(),
        "level_scheme": _scheme_to_json(bundle.scheme) if bundle.scheme else None,
        "state_to_level": list(bundle.state_to_level) if bundle.state_to_level else None,
        "training": bundle.training,
        "provenance": bundle.provenance,
    }
    Path(path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")


def load_model(path) -> ModelBundle:
    try:
        document = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from None
    version = document.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema version {version!r}")
    vocab = ObservationVocabulary(
        codes=tuple(document["vocabulary"]["codes"]),
        mode=VocabularyMode(document["vocabulary"]["mode"]),
    )
    model = HmmModel(
        transition=document["transition"],
        emission=document["emission"],
        initial=document["initial"],
    )
    if model.n_states != document["n_states"]:
        raise ConfigError(f"{path}: n_states field disagrees with the matrices")
    if model.vocab_size != vocab.size:
        raise ConfigError(f"{path}: emission width disagrees with the vocabulary")
    scheme_data = document.get("level_scheme")
    state_to_level = document.get("state_to_level")
    return ModelBundle(
        model=model,
        vocabulary=vocab,
        scheme=_scheme_from_json(scheme_data) if scheme_data else None,
        state_to_level=tuple(state_to_level) if state_to_level else None,
        training=document.get("training"),
        provenance=document.get("provenance") or {},
    )


def save_scheme(path, scheme: LevelScheme) -> None:
    document = {"schema_version": SCHEMA_VERSION, "level_scheme": _scheme_to_json(scheme)}
    Path(path).write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")


def load_scheme(path) -> LevelScheme:
    document = json.loads(Path(path).read_text())
    if document.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(f"{path}: unsupported schema version")
    return _scheme_from_json(document["level_scheme"])


def _count_grades(grades: str, where: str) -> RawSemesterGrades:
    counts = {letter: 0 for letter in "ABCDFW"}
    for ch in grades:
        if ch not in GRADE_LETTERS:
            raise ParseError(f"{where}: unknown grade letter {ch!r} in {grades!r}")
        counts[ch] += 1
    return RawSemesterGrades(
        n_a=counts["A"],
        n_b=counts["B"],
        n_c=counts["C"],
        n_d=counts["D"],
        n_f=counts["F"],
        n_w=counts["W"],
    )


def ingest(path) -> list[StudentRecord]:
    """Read a transcript CSV into student records.

    Expected header: ``student_id, semester, grades, outcome`` plus any
    number of group columns.  Rows must be grouped by student with
    ascending semesters; the outcome (GRADUATED / HALTED / UNKNOWN) may
    only be non-blank on a student's last row.  Missing semester indices
    between a student's first and last enrollment become gaps.
    """
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        required = ["student_id", "semester", "grades", "outcome"]
        if header[: len(required)] != required:
            raise ParseError(
                f"{path}: header must start with {','.join(required)}, got {','.join(header)}"
            )
        group_columns = header[len(required) :]

        records: list[StudentRecord] = []
        finished: set[str] = set()
        current_id: str | None = None
        semesters: list[tuple[int, RawSemesterGrades]] = []
        outcomes: list[tuple[Outcome | None, int]] = []
        groups: dict[str, str] = {}

        def flush() -> None:
            if current_id is None:
                return
            for value, line in outcomes[:-1]:
                if value is not None:
                    raise ParseError(
                        f"{path}:{line}: outcome may only appear on a student's last row"
                    )
            records.append(
                StudentRecord(
                    student_id=current_id,
                    semesters=tuple(semesters),
                    outcome=outcomes[-1][0],
                    groups=dict(groups),
                )
            )
            finished.add(current_id)

        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}"
                )
            student_id, semester_text, grades, outcome_text = row[: len(required)]
            if student_id != current_id:
                flush()
                if student_id in finished:
                    raise ParseError(
                        f"{path}:{line_no}: rows for student {student_id!r} are not contiguous"
                    )
                current_id = student_id
                semesters = []
                outcomes = []
                groups = {
                    column: row[len(required) + i]
                    for i, column in enumerate(group_columns)
                    if row[len(required) + i] != ""
                }
            try:
                semester = int(semester_text)
            except ValueError:
                raise ParseError(
                    f"{path}:{line_no}: semester must be an integer, got {semester_text!r}"
                ) from None
            if semester < 1:
                raise ParseError(f"{path}:{line_no}: semester must be >= 1, got {semester}")
            if semesters and semester <= semesters[-1][0]:
                if semester == semesters[-1][0]:
                    raise DuplicateError(
                        f"{path}:{line_no}: duplicate semester {semester} for {student_id!r}"
                    )
                raise ParseError(
                    f"{path}:{line_no}: semesters must ascend within a student"
                )
            if grades == "":
                raise ParseError(f"{path}:{line_no}: grades string must not be empty")
            token = outcome_text.strip().upper()
            if token not in _OUTCOME_TOKENS:
                raise ParseError(
                    f"{path}:{line_no}: outcome must be GRADUATED, HALTED or UNKNOWN, "
                    f"got {outcome_text!r}"
                )
            semesters.append((semester, _count_grades(grades, f"{path}:{line_no}")))
            outcomes.append((_OUTCOME_TOKENS[token], line_no))
        flush()
    return records


def write_transcripts(path, records: Iterable[StudentRecord]) -> None:
    """Write student records in the transcript CSV format (inverse of ingest)."""
    records = list(records)
    group_columns = sorted({column for r in records for column in r.groups})
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["student_id", "semester", "grades", "outcome", *group_columns])
        for record in records:
            for position, (semester, raw) in enumerate(record.semesters):
                is_last = position == len(record.semesters) - 1
                outcome = ""
                if is_last:
                    outcome = record.outcome.name if record.outcome is not None else "UNKNOWN"
                grades = (
                    "A" * raw.n_a + "B" * raw.n_b + "C" * raw.n_c
                    + "D" * raw.n_d + "F" * raw.n_f + "W" * raw.n_w
                )
                writer.writerow(
                    [record.student_id, semester, grades, outcome]
                    + [record.groups.get(column, "") for column in group_columns]
                )


def write_truth(path, cohort: SynthCohort) -> None:
    """Write the hidden-truth sidecar: one row per (student, semester, true level)."""
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["student_id", "semester", "level"])
        for student in cohort.students:
            for (semester, _), level in zip(student.record.semesters, student.true_levels):
                writer.writerow([student.record.student_id, semester, level])


def write_trajectories(path, trajectories: Iterable[LevelTrajectory]) -> None:
    """Write decoded trajectories: one row per enrolled semester."""
    trajectories = list(trajectories)
    group_columns = sorted({column for t in trajectories for column in t.groups})
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["student_id", "semester", "level", "outcome", *group_columns])
        for traj in trajectories:
            for position, (semester, level) in enumerate(zip(traj.semesters, traj.levels)):
                is_last = position == len(traj.semesters) - 1
                writer.writerow(
                    [
                        traj.student_id,
                        semester,
                        level,
                        traj.outcome.name if is_last else "",
                    ]
                    + [traj.groups.get(column, "") for column in group_columns]
                )


def read_trajectories(path) -> list[LevelTrajectory]:
    """Read the CSV written by :func:`write_trajectories`."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        required = ["student_id", "semester", "level", "outcome"]
        if header[: len(required)] != required:
            raise ParseError(f"{path}: header must start with {','.join(required)}")
        group_columns = header[len(required) :]

        trajectories: list[LevelTrajectory] = []
        current_id: str | None = None
        semesters: list[int] = []
        levels: list[int] = []
        outcome: Outcome | None = None
        groups: dict[str, str] = {}

        def flush(line_no: int) -> None:
            nonlocal outcome
            if current_id is None:
                return
            if outcome is None:
                raise ParseError(
                    f"{path}:{line_no}: student {current_id!r} has no outcome on their last row"
                )
            trajectories.append(
                LevelTrajectory(
                    student_id=current_id,
                    semesters=tuple(semesters),
                    levels=tuple(levels),
                    outcome=outcome,
                    groups=dict(groups),
                )
            )

        last_line = 1
        for line_no, row in enumerate(reader, start=2):
            last_line = line_no
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{line_no}: expected {len(header)} fields")
            student_id, semester_text, level_text, outcome_text = row[: len(required)]
            if student_id != current_id:
                flush(line_no - 1)
                current_id = student_id
                semesters, levels, outcome = [], [], None
                groups = {
                    column: row[len(required) + i]
                    for i, column in enumerate(group_columns)
                    if row[len(required) + i] != ""
                }
            try:
                semesters.append(int(semester_text))
                levels.append(int(level_text))
            except ValueError:
                raise ParseError(
                    f"{path}:{line_no}: semester and level must be integers"
                ) from None
            if outcome_text:
                try:
                    outcome = Outcome[outcome_text.strip().upper()]
                except KeyError:
                    raise ParseError(
                        f"{path}:{line_no}: unknown outcome {outcome_text!r}"
                    ) from None
        flush(last_line)
    return trajectories
