"""Exponential mechanism over a finite candidate list scored by miss counts.

Candidate ``i`` is chosen with probability proportional to
``exp(-epsilon * miss_counts[i] / 2)``.  Replacing one example moves every
miss count by at most one, so the selection is ``epsilon``-DP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_UTILITY_CONSTANT = 4.0


@dataclass(frozen=True)
class DpParams:
    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon must be positive and finite, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")


class SelectionOutcome(NamedTuple):
    index: int
    log_probabilities: np.ndarray


def _validated(miss_counts, n: int) -> np.ndarray:
    c = np.asarray(miss_counts)
    if c.ndim != 1 or c.size == 0:
        raise ValueError("need a nonempty 1-d list of miss counts")
    if not np.issubdtype(c.dtype, np.integer):
        if not np.all(np.equal(np.mod(c, 1), 0)):
            raise ValueError("miss counts must be integers")
        c = c.astype(np.int64)
    if c.min() < 0 or c.max() > n:
        raise ValueError(f"miss counts must lie in [0, {n}]")
    return c


def log_distribution(miss_counts, n: int, epsilon: float) -> np.ndarray:
    """Normalized log-probabilities; max-shifted before exponentiation."""
    DpParams(epsilon)
    c = _validated(miss_counts, n)
    scores = -0.5 * epsilon * c.astype(float)
    top = scores.max()
    return scores - (top + np.log(np.sum(np.exp(scores - top))))


def exact_distribution(miss_counts, n: int, epsilon: float) -> np.ndarray:
    logp = log_distribution(miss_counts, n, epsilon)
    p = np.exp(logp)
    return p / p.sum()


def select_exp_mech(miss_counts, n: int, epsilon: float, rng: np.random.Generator) -> SelectionOutcome:
    """Draw one candidate by inverse CDF over the exact distribution."""
    logp = log_distribution(miss_counts, n, epsilon)
    cdf = np.cumsum(np.exp(logp))
    u = rng.random() * cdf[-1]
    idx = int(np.searchsorted(cdf, u, side="right"))
    return SelectionOutcome(min(idx, cdf.size - 1), logp)


def utility_bound(card: int, n: int, epsilon: float, beta: float,
                  constant: float = DEFAULT_UTILITY_CONSTANT) -> float:
    """Excess error ``alpha`` solving ``n = C (ln card + ln 1/beta) max(1/alpha^2, 1/(eps alpha))``."""
    if card < 1:
        raise ValueError("need at least one candidate")
    if n < 1:
        raise ValueError("n must be positive")
    DpParams(epsilon)
    L = constant * (math.log(card) + math.log(1 / beta))
    a = math.sqrt(L / n)
    if a <= epsilon:
        return a
    return L / (epsilon * n)


def private_sample_size(card: int, alpha: float, epsilon: float, beta: float,
                        constant: float = DEFAULT_UTILITY_CONSTANT) -> int:
    """Inverse of ``utility_bound``, rounded up."""
    if card < 1:
        raise ValueError("need at least one candidate")
    L = constant * (math.log(card) + math.log(1 / beta))
    return max(1, math.ceil(L * max(1 / alpha**2, 1 / (epsilon * alpha))))


def sample_exp_mech(miss_counts, n: int, epsilon: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` independent draws; consumes ``rng`` exactly like repeated ``select_exp_mech`` calls."""
    cdf = np.cumsum(np.exp(log_distribution(miss_counts, n, epsilon)))
    u = rng.random(size) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
