"""Exception types raised across the package."""


class AcadtrajError(Exception):
    """Base class for every error this package raises deliberately."""


class DomainError(AcadtrajError):
    """An argument lies outside the operation's domain."""


class ParseError(AcadtrajError):
    """Malformed textual input; the message carries the offending position."""


class EmptyCorpusError(AcadtrajError):
    """An operation that needs at least one observation received none."""


class ImpossibleObservationError(AcadtrajError):
    """An observation cannot be produced under the current vocabulary or model."""


class NonErgodicError(AcadtrajError):
    """Power iteration failed to reach a fixed point within the iteration budget."""


class UnsupportedError(AcadtrajError):
    """The requested problem size is outside what the implementation supports."""


class InsufficientDataError(AcadtrajError):
    """Not enough data to estimate the requested quantity."""


class DegenerateEmissionError(AcadtrajError):
    """An emission row has no probability mass on any vocabulary symbol."""


class EmptyBucketError(AcadtrajError):
    """A CGPA bucket holds no graded courses."""


class UndefinedGpaError(AcadtrajError):
    """A GPA was requested for a transcript with no graded courses."""


class DuplicateError(AcadtrajError):
    """The same (student, semester) pair appears more than once."""


class ConfigError(AcadtrajError):
    """A configuration object is internally inconsistent or incomplete."""
