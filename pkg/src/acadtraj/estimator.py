"""Scikit-learn style front end for the trajectory pipeline.

``TrajectoryLevelHMM`` wraps level discovery, initialization and
Baum-Welch behind the familiar ``fit`` / ``predict`` / ``score`` surface,
so the model slots into pipelines, grid search and cloning.  ``X`` is a
cohort: either ``StudentRecord`` objects or, more simply, one list of
``RawSemesterGrades`` per student.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .analysis import StudentRecord, decode_cohort
from .errors import DomainError
from .grades import RawSemesterGrades, VocabularyMode
from .model_io import ModelBundle
from .pipeline import encode_cohort, fit_pipeline
from .training import TrainingConfig


def _as_records(X) -> list[StudentRecord]:
    records = []
    for i, item in enumerate(X):
        if isinstance(item, StudentRecord):
            records.append(item)
        else:
            semesters = tuple(enumerate(item, start=1))
            for _, raw in semesters:
                if not isinstance(raw, RawSemesterGrades):
                    raise DomainError(
                        "X must contain StudentRecord objects or sequences of "
                        f"RawSemesterGrades, got {type(raw).__name__}"
                    )
            records.append(StudentRecord(student_id=f"x{i}", semesters=semesters))
    if not records:
        raise DomainError("X must contain at least one student")
    return records


class TrajectoryLevelHMM(BaseEstimator):
    """Estimator mapping semester grade records to performance-level trajectories.

    Parameters
    ----------
    n_levels : number of performance levels (= hidden states).
    vocab_mode : "observed" restricts the emission alphabet to codes seen
        during fit; "full" covers all 256 grade tuples.
    max_iter, tol : Baum-Welch iteration budget and absolute log-likelihood
        improvement threshold.
    emission_floor : minimum emission probability kept after each update.

    Attributes (after fit)
    ----------------------
    bundle_ : the trained :class:`ModelBundle` (model, vocabulary, scheme,
        state-to-level ordering, training summary).
    """

    def __init__(
        self,
        n_levels: int = 4,
        vocab_mode: str = "observed",
        max_iter: int = 100,
        tol: float = 1e-6,
        emission_floor: float = 1e-10,
    ):
        self.n_levels = n_levels
        self.vocab_mode = vocab_mode
        self.max_iter = max_iter
        self.tol = tol
        self.emission_floor = emission_floor

    def fit(self, X, y=None):
        records = _as_records(X)
        config = TrainingConfig(
            max_iterations=self.max_iter,
            log_likelihood_tolerance=self.tol,
            emission_floor=self.emission_floor,
        )
        self.bundle_ = fit_pipeline(
            records,
            n_levels=self.n_levels,
            vocab_mode=VocabularyMode(self.vocab_mode),
            config=config,
        )
        return self

    def _check_fitted(self) -> ModelBundle:
        if not hasattr(self, "bundle_"):
            raise NotFittedError("this TrajectoryLevelHMM instance is not fitted yet")
        return self.bundle_

    def predict(self, X) -> list[list[int]]:
        """Decoded level trajectory (1-based levels) per student."""
        bundle = self._check_fitted()
        records = _as_records(X)
        trajectories = decode_cohort(
            bundle.model,
            bundle.vocabulary,
            bundle.scheme,
            records,
            state_to_level=bundle.state_to_level,
        )
        by_id = {t.student_id: list(t.levels) for t in trajectories}
        return [by_id.get(r.student_id, []) for r in records]

    def score(self, X, y=None) -> float:
        """Total log-likelihood of the cohort under the fitted model."""
        from .hmm import log_likelihood

        bundle = self._check_fitted()
        corpus = encode_cohort(_as_records(X), bundle.vocabulary)
        return float(sum(log_likelihood(bundle.model, obs) for obs in corpus))

    def fit_predict(self, X, y=None) -> list[list[int]]:
        return self.fit(X).predict(X)
