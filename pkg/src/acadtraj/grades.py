"""Observation alphabet for semester grade records.

A semester is summarized as a five-element grade tuple: counts of A, B and
C grades clipped at 3, plus binary flags for "any D or F" and "any
withdrawal".  Tuples map bijectively onto integer codes 0..255 via a mixed
radix (A, B, C in base 4; the two flags in base 2), and a vocabulary maps
the codes that actually occur onto dense column indices for the HMM.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .errors import DomainError, EmptyCorpusError, ImpossibleObservationError, ParseError

#: Caps applied to the letter-grade counts (A, B, C).
COUNT_CAP = 3

#: Number of encodable grade tuples: 4 * 4 * 4 * 2 * 2.
CODE_SPACE = 256


@dataclass(frozen=True)
class GradeTuple:
    """Clipped per-semester grade summary.

    ``a``, ``b``, ``c`` are course counts capped at 3; ``df`` and ``w`` are
    0/1 flags for "any D or F grade" and "any withdrawal".
    """

    a: int
    b: int
    c: int
    df: int
    w: int

    def __post_init__(self) -> None:
        for name in ("a", "b", "c"):
            value = getattr(self, name)
            if not 0 <= value <= COUNT_CAP:
                raise DomainError(f"{name} count must be in 0..{COUNT_CAP}, got {value}")
        for name in ("df", "w"):
            value = getattr(self, name)
            if value not in (0, 1):
                raise DomainError(f"{name} flag must be 0 or 1, got {value}")

    def as_string(self) -> str:
        """Render as the five-digit form used in transcripts, e.g. ``"30201"``."""
        return f"{self.a}{self.b}{self.c}{self.df}{self.w}"


@dataclass(frozen=True)
class RawSemesterGrades:
    """Unclipped per-semester letter-grade counts.

    A zero-course instance is a legal value: it represents an enrollment
    gap rather than an observation, and is filtered out upstream of the
    HMM.
    """

    n_a: int = 0
    n_b: int = 0
    n_c: int = 0
    n_d: int = 0
    n_f: int = 0
    n_w: int = 0

    def __post_init__(self) -> None:
        for name in ("n_a", "n_b", "n_c", "n_d", "n_f", "n_w"):
            value = getattr(self, name)
            if value < 0:
                raise DomainError(f"{name} must be non-negative, got {value}")

    @property
    def total_courses(self) -> int:
        return self.n_a + self.n_b + self.n_c + self.n_d + self.n_f + self.n_w

    @property
    def graded_courses(self) -> int:
        """Courses that received a letter grade (withdrawals excluded)."""
        return self.n_a + self.n_b + self.n_c + self.n_d + self.n_f

    @property
    def is_enrolled(self) -> bool:
        return self.total_courses > 0


def clip(raw: RawSemesterGrades) -> GradeTuple:
    """Reduce raw counts to a grade tuple: A/B/C capped at 3, D/F and W binarized."""
    return GradeTuple(
        a=min(raw.n_a, COUNT_CAP),
        b=min(raw.n_b, COUNT_CAP),
        c=min(raw.n_c, COUNT_CAP),
        df=1 if raw.n_d + raw.n_f >= 1 else 0,
        w=1 if raw.n_w >= 1 else 0,
    )


def lift(t: GradeTuple) -> RawSemesterGrades:
    """Re-expand a grade tuple to raw counts (one D for df=1, one W for w=1).

    ``clip(lift(t)) == t`` for every valid tuple; used when synthesizing
    transcripts from encoded observations.
    """
    return RawSemesterGrades(n_a=t.a, n_b=t.b, n_c=t.c, n_d=t.df, n_f=0, n_w=t.w)


def encode(t: GradeTuple) -> int:
    """Map a grade tuple to its integer code: ``a*64 + b*16 + c*4 + df*2 + w``."""
    return ((t.a * 4 + t.b) * 4 + t.c) * 4 + t.df * 2 + t.w


def decode(code: int) -> GradeTuple:
    """Invert :func:`encode`; raises ``DomainError`` for codes outside 0..255."""
    if not 0 <= code < CODE_SPACE:
        raise DomainError(f"code must be in 0..{CODE_SPACE - 1}, got {code}")
    flags, w = divmod(code, 2)
    rest, df = divmod(flags, 2)
    rest, c = divmod(rest, 4)
    a, b = divmod(rest, 4)
    return GradeTuple(a=a, b=b, c=c, df=df, w=w)


def parse_tuple_string(s: str) -> GradeTuple:
    """Parse the five-digit tuple form, e.g. ``"30201"`` -> (3,0,2,0,1).

    The first three characters must be '0'..'3' and the last two '0'..'1';
    anything else raises ``ParseError`` naming the offending position.
    """
    if len(s) != 5:
        raise ParseError(f"expected 5 characters, got {len(s)} in {s!r}")
    digits = []
    for pos, ch in enumerate(s):
        limit = COUNT_CAP if pos < 3 else 1
        if not ch.isdigit() or int(ch) > limit:
            raise ParseError(
                f"character {ch!r} at position {pos} of {s!r} must be in '0'..'{limit}'"
            )
        digits.append(int(ch))
    return GradeTuple(*digits)


class VocabularyMode(str, Enum):
    """How the observation vocabulary is constructed."""

    #: Distinct codes seen in a corpus, in first-appearance order.
    OBSERVED = "observed"
    #: All 256 encodable codes.
    FULL = "full"


@dataclass(frozen=True)
class ObservationVocabulary:
    """Ordered set of observation codes with a dense index for each.

    Dense indices are the HMM's emission columns; ``codes[i]`` is the code
    at dense index ``i``.
    """

    codes: tuple[int, ...]
    mode: VocabularyMode = VocabularyMode.OBSERVED

    def __post_init__(self) -> None:
        if len(self.codes) == 0:
            raise EmptyCorpusError("vocabulary must contain at least one code")
        if len(set(self.codes)) != len(self.codes):
            raise DomainError("vocabulary codes must be distinct")
        if len(self.codes) > CODE_SPACE:
            raise DomainError(f"vocabulary cannot exceed {CODE_SPACE} codes")
        for code in self.codes:
            if not 0 <= code < CODE_SPACE:
                raise DomainError(f"code must be in 0..{CODE_SPACE - 1}, got {code}")
        object.__setattr__(self, "_index", {code: i for i, code in enumerate(self.codes)})

    @property
    def size(self) -> int:
        return len(self.codes)

    def __contains__(self, code: int) -> bool:
        return code in self._index

    def index_of(self, code: int) -> int:
        """Dense index of a code; unknown codes raise ``ImpossibleObservationError``."""
        try:
            return self._index[code]
        except KeyError:
            raise ImpossibleObservationError(
                f"code {code} (tuple {decode(code).as_string()}) is not in the "
                f"{self.mode.value} vocabulary of size {self.size}"
            ) from None

    def code_at(self, index: int) -> int:
        if not 0 <= index < self.size:
            raise DomainError(f"dense index must be in 0..{self.size - 1}, got {index}")
        return self.codes[index]

    def encode_tuples(self, tuples: Iterable[GradeTuple]) -> list[int]:
        """Dense indices for a sequence of grade tuples."""
        return [self.index_of(encode(t)) for t in tuples]


def full_vocabulary() -> ObservationVocabulary:
    """Vocabulary covering all 256 codes, in code order."""
    return ObservationVocabulary(codes=tuple(range(CODE_SPACE)), mode=VocabularyMode.FULL)


def build_vocabulary(
    tuples: Iterable[GradeTuple],
    mode: VocabularyMode = VocabularyMode.OBSERVED,
) -> ObservationVocabulary:
    """Build a vocabulary from a corpus of grade tuples.

    ``OBSERVED`` keeps the distinct codes in first-appearance order (an
    empty corpus raises ``EmptyCorpusError``); ``FULL`` ignores the corpus
    and returns all 256 codes.
    """
    if mode is VocabularyMode.FULL:
        return full_vocabulary()
    seen: dict[int, None] = {}
    for t in tuples:
        seen.setdefault(encode(t), None)
    if not seen:
        raise EmptyCorpusError("cannot build an observed vocabulary from an empty corpus")
    return ObservationVocabulary(codes=tuple(seen), mode=VocabularyMode.OBSERVED)
