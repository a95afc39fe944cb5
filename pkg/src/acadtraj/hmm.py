"""Discrete-observation hidden Markov model: representation and inference.

Likelihoods use the per-step scaled forward recursion, so sequences of
length up to 10^4 evaluate without underflow and the scale factors
multiply back to the exact likelihood.  Viterbi runs in log space with
ties broken toward the lowest state index, which keeps decoded paths
deterministic across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ImpossibleObservationError, NonErgodicError
from .validation import (
    as_observation_indices,
    as_probability_vector,
    as_row_stochastic,
    as_rng,
)


@dataclass(frozen=True)
class HmmModel:
    """Model parameters: transition matrix, emission matrix, initial distribution.

    ``transition[i, j]`` is the probability of moving from state ``i`` to
    state ``j`` in one step; ``emission[i, k]`` the probability of emitting
    vocabulary index ``k`` from state ``i``; ``initial[i]`` the probability
    of starting in state ``i``.  All rows must sum to 1 within 1e-9.
    Instances are immutable and safe to share across threads.
    """

    transition: np.ndarray
    emission: np.ndarray
    initial: np.ndarray

    def __post_init__(self) -> None:
        transition = as_row_stochastic(self.transition, "transition")
        emission = as_row_stochastic(self.emission, "emission")
        initial = as_probability_vector(self.initial, "initial")
        n = initial.shape[0]
        if transition.shape != (n, n):
            raise DomainError(
                f"transition must be {n}x{n} to match initial, got {transition.shape}"
            )
        if emission.shape[0] != n:
            raise DomainError(
                f"emission must have {n} rows to match initial, got {emission.shape[0]}"
            )
        for arr, field in ((transition, "transition"), (emission, "emission"), (initial, "initial")):
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)

    @property
    def n_states(self) -> int:
        return self.initial.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.emission.shape[1]


@dataclass(frozen=True)
class ForwardBackward:
    """Scaled forward/backward quantities for one observation sequence.

    ``forward[t]`` sums to 1 and ``scale`` multiplies back to the sequence
    likelihood (``sum(log(scale)) == log_likelihood``); ``posterior[t, i]``
    is the marginal probability of being in state ``i`` at step ``t``.
    """

    forward: np.ndarray
    backward: np.ndarray
    scale: np.ndarray
    posterior: np.ndarray

    @property
    def log_likelihood(self) -> float:
        return float(np.log(self.scale).sum())


def _scaled_forward(model: HmmModel, obs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    T = obs.shape[0]
    n = model.n_states
    forward = np.empty((T, n))
    scale = np.empty(T)
    current = model.initial * model.emission[:, obs[0]]
    for t in range(T):
        if t > 0:
            current = (forward[t - 1] @ model.transition) * model.emission[:, obs[t]]
        total = current.sum()
        if total <= 0.0:
            raise ImpossibleObservationError(
                f"observation index {int(obs[t])} at step {t} has zero probability "
                "in every reachable state"
            )
        scale[t] = total
        forward[t] = current / total
    return forward, scale


def log_likelihood(model: HmmModel, obs) -> float:
    """Log probability of an observation sequence under the model."""
    obs = as_observation_indices(obs, model.vocab_size)
    _, scale = _scaled_forward(model, obs)
    return float(np.log(scale).sum())


def forward_backward(model: HmmModel, obs) -> ForwardBackward:
    """Scaled forward/backward pass with per-step state posteriors."""
    obs = as_observation_indices(obs, model.vocab_size)
    forward, scale = _scaled_forward(model, obs)
    T = obs.shape[0]
    backward = np.empty_like(forward)
    backward[T - 1] = 1.0
    for t in range(T - 2, -1, -1):
        backward[t] = (model.transition @ (model.emission[:, obs[t + 1]] * backward[t + 1]))
        backward[t] /= scale[t + 1]
    posterior = forward * backward
    posterior /= posterior.sum(axis=1, keepdims=True)
    return ForwardBackward(forward=forward, backward=backward, scale=scale, posterior=posterior)


def viterbi(model: HmmModel, obs) -> np.ndarray:
    """Most probable state path for an observation sequence.

    Computed in log space; when several predecessors (or end states) tie,
    the lowest state index wins.
    """
    obs = as_observation_indices(obs, model.vocab_size)
    T = obs.shape[0]
    n = model.n_states
    with np.errstate(divide="ignore"):
        log_trans = np.log(model.transition)
        log_emit = np.log(model.emission)
        log_init = np.log(model.initial)

    score = log_init + log_emit[:, obs[0]]
    backptr = np.zeros((T, n), dtype=np.intp)
    for t in range(1, T):
        # candidate[i, j]: best-so-far score ending at i, then moving to j
        candidate = score[:, None] + log_trans
        backptr[t] = np.argmax(candidate, axis=0)  # argmax takes the lowest index on ties
        score = candidate[backptr[t], np.arange(n)] + log_emit[:, obs[t]]
    if not np.isfinite(score).any():
        raise ImpossibleObservationError(
            "no state path has positive probability for this sequence"
        )
    path = np.empty(T, dtype=np.intp)
    path[T - 1] = int(np.argmax(score))
    for t in range(T - 1, 0, -1):
        path[t - 1] = backptr[t, path[t]]
    return path


def stationary_distribution(
    transition,
    tol: float = 1e-12,
    max_iter: int = 10**6,
) -> np.ndarray:
    """Fixed point of a row-stochastic matrix, by power iteration from uniform.

    Iterates ``pi <- pi @ transition`` (renormalizing each step) until the
    L1 change is at most ``tol``; raises ``NonErgodicError`` if the budget
    runs out first.
    """
    matrix = as_row_stochastic(transition, "transition")
    n = matrix.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ matrix
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() <= tol:
            return nxt
        pi = nxt
    raise NonErgodicError(
        f"power iteration did not converge to tolerance {tol} in {max_iter} iterations"
    )


def sample(model: HmmModel, length: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw one (state sequence, observation sequence) pair of a given length.

    Deterministic given a seeded generator: states come from the initial
    distribution and transition rows, observations from the emission rows,
    all via inverse-CDF draws.
    """
    if length < 1:
        raise DomainError(f"sample length must be >= 1, got {length}")
    rng = as_rng(rng)
    trans_cdf = np.cumsum(model.transition, axis=1)
    emit_cdf = np.cumsum(model.emission, axis=1)
    init_cdf = np.cumsum(model.initial)

    states = np.empty(length, dtype=np.intp)
    observations = np.empty(length, dtype=np.intp)
    u = rng.random(2 * length)
    states[0] = np.searchsorted(init_cdf, u[0], side="right")
    observations[0] = np.searchsorted(emit_cdf[states[0]], u[1], side="right")
    for t in range(1, length):
        states[t] = np.searchsorted(trans_cdf[states[t - 1]], u[2 * t], side="right")
        observations[t] = np.searchsorted(emit_cdf[states[t]], u[2 * t + 1], side="right")
    # guard against cumsum rounding pushing a draw past the last cell
    np.clip(states, 0, model.n_states - 1, out=states)
    np.clip(observations, 0, model.vocab_size - 1, out=observations)
    return states, observations


def parameter_count(n_states: int, vocab_size: int) -> int:
    """Number of tunable parameters for a model of this size: N(N+M-2)+N.

    Counts each transition and emission row with one entry constrained by
    normalization, and treats every initial-distribution entry as free.
    """
    if n_states < 1 or vocab_size < 1:
        raise DomainError("n_states and vocab_size must be >= 1")
    return n_states * (n_states + vocab_size - 2) + n_states
