"""Multi-sequence Baum-Welch estimation.

Expected counts are accumulated over all sequences (in sequence order, so
runs are reproducible) and normalized once per iteration; the initial
distribution is re-estimated as the average first-step posterior.  Every
iteration can only improve the total corpus log-likelihood, which is the
convergence signal.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptyCorpusError, ImpossibleObservationError, UnsupportedError
from .hmm import HmmModel, forward_backward

#: Expected-count mass below which a row is treated as unvisited and left unchanged.
_UNVISITED = 1e-300


@dataclass(frozen=True)
class TrainingConfig:
    """Knobs for :func:`baum_welch`.

    ``log_likelihood_tolerance`` is the absolute per-iteration improvement
    below which training stops; ``emission_floor`` keeps unseen-but-possible
    symbols reachable by flooring emission rows before renormalizing.
    """

    max_iterations: int = 100
    log_likelihood_tolerance: float = 1e-6
    emission_floor: float = 1e-10
    record_history: bool = True

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be >= 1")
        if self.log_likelihood_tolerance <= 0:
            raise DomainError("log_likelihood_tolerance must be > 0")
        if self.emission_floor < 0:
            raise DomainError("emission_floor must be >= 0")


@dataclass(frozen=True)
class TrainingReport:
    """Outcome of a training run.

    ``iterations_run`` counts E-step evaluations; ``history`` holds the
    total corpus log-likelihood measured at each of them (empty when
    history recording is off).
    """

    iterations_run: int
    history: tuple[float, ...]
    converged: bool
    final_log_likelihood: float


def _e_step(model: HmmModel, corpus: list[np.ndarray]):
    n, m = model.n_states, model.vocab_size
    trans_num = np.zeros((n, n))
    trans_den = np.zeros(n)
    emit_num = np.zeros((n, m))
    init_acc = np.zeros(n)
    total_ll = 0.0
    for obs in corpus:
        fb = forward_backward(model, obs)
        total_ll += fb.log_likelihood
        if obs.shape[0] > 1:
            # xi[t, i, j] = P(s_t = i, s_{t+1} = j | obs); the /scale[t+1]
            # is already inside the scaled backward recursion
            weights = model.emission[:, obs[1:]].T * fb.backward[1:]  # (T-1, n)
            xi = fb.forward[:-1, :, None] * model.transition[None, :, :] * weights[:, None, :]
            xi /= xi.sum(axis=(1, 2), keepdims=True)
            trans_num += xi.sum(axis=0)
            trans_den += fb.posterior[:-1].sum(axis=0)
        np.add.at(emit_num.T, obs, fb.posterior)
        init_acc += fb.posterior[0]
    return trans_num, trans_den, emit_num, init_acc, total_ll


def _m_step(model: HmmModel, stats, n_sequences: int, floor: float) -> HmmModel:
    trans_num, trans_den, emit_num, init_acc, _ = stats
    transition = model.transition.copy()
    visited = trans_den > _UNVISITED
    transition[visited] = trans_num[visited] / trans_num[visited].sum(axis=1, keepdims=True)

    emission = model.emission.copy()
    emit_den = emit_num.sum(axis=1)
    observed = emit_den > _UNVISITED
    emission[observed] = emit_num[observed] / emit_den[observed, None]
    if floor > 0.0:
        emission = np.maximum(emission, floor)
        emission /= emission.sum(axis=1, keepdims=True)

    initial = init_acc / n_sequences
    initial /= initial.sum()
    return HmmModel(transition=transition, emission=emission, initial=initial)


def baum_welch(
    initial: HmmModel,
    corpus,
    config: TrainingConfig = TrainingConfig(),
) -> tuple[HmmModel, TrainingReport]:
    """Estimate model parameters from a corpus of observation-index sequences.

    Stops when the absolute log-likelihood improvement falls below the
    configured tolerance or the iteration budget is exhausted, whichever
    comes first.  When training stops on the tolerance, the returned model
    is the one whose likelihood was measured last (no trailing M-step).
    """
    sequences = [np.asarray(obs, dtype=np.intp) for obs in corpus]
    if not sequences:
        raise EmptyCorpusError("training corpus must contain at least one sequence")
    for i, obs in enumerate(sequences):
        if obs.ndim != 1 or obs.size == 0:
            raise DomainError(f"sequence {i} must be a non-empty 1-D index array")
        if obs.min() < 0 or obs.max() >= initial.vocab_size:
            raise ImpossibleObservationError(
                f"sequence {i} contains symbol {int(obs.max())} outside the "
                f"vocabulary of size {initial.vocab_size}"
            )

    model = initial
    history: list[float] = []
    previous_ll: float | None = None
    converged = False
    iterations = 0
    for _ in range(config.max_iterations):
        stats = _e_step(model, sequences)
        total_ll = stats[-1]
        iterations += 1
        if config.record_history:
            history.append(total_ll)
        if previous_ll is not None and total_ll - previous_ll < config.log_likelihood_tolerance:
            converged = True
            break
        model = _m_step(model, stats, len(sequences), config.emission_floor)
        previous_ll = total_ll

    report = TrainingReport(
        iterations_run=iterations,
        history=tuple(history),
        converged=converged,
        final_log_likelihood=total_ll,
    )
    return model, report


def align_states(estimated: HmmModel, reference: HmmModel) -> tuple[int, ...]:
    """Best relabeling of estimated states onto reference states.

    EM identifies states only up to permutation.  Returns ``perm`` such
    that estimated state ``perm[i]`` plays the role of reference state
    ``i``, minimizing the total L1 distance between the matched emission
    rows; exhaustive over all N! permutations, so N is capped at 8.
    """
    if estimated.n_states != reference.n_states or estimated.vocab_size != reference.vocab_size:
        raise DomainError("models must share n_states and vocab_size to be aligned")
    n = reference.n_states
    if n > 8:
        raise UnsupportedError(f"exhaustive alignment supports at most 8 states, got {n}")
    best_perm: tuple[int, ...] | None = None
    best_cost = np.inf
    for perm in itertools.permutations(range(n)):
        cost = float(np.abs(estimated.emission[list(perm)] - reference.emission).sum())
        if cost < best_cost:
            best_cost = cost
            best_perm = perm
    assert best_perm is not None
    return best_perm


def apply_permutation(model: HmmModel, perm) -> HmmModel:
    """Relabel states so that old state ``perm[i]`` becomes new state ``i``."""
    idx = np.asarray(perm, dtype=np.intp)
    if sorted(idx.tolist()) != list(range(model.n_states)):
        raise DomainError(f"perm must be a permutation of 0..{model.n_states - 1}")
    return HmmModel(
        transition=model.transition[np.ix_(idx, idx)],
        emission=model.emission[idx],
        initial=model.initial[idx],
    )
