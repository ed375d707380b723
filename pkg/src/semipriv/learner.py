"""The public-cover learner and its public-only ERM baseline."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cover import Cover, build_cover, public_sample_size
from .hypothesis import ConceptClass, Hypothesis, SampleLike, as_sample
from .mechanism import DEFAULT_UTILITY_CONSTANT, DpParams, SelectionOutcome, exact_distribution, select_exp_mech


@dataclass(frozen=True)
class SamplePlan:
    n_priv: int
    n_pub: int
    alpha: float
    beta: float
    epsilon: float
    d: int

    def __post_init__(self):
        if self.n_priv < 1 or self.n_pub < 1:
            raise ValueError("planned sample sizes must be positive")


def plan_sizes(d: int, alpha: float, beta: float, epsilon: float,
               utility_constant: float = DEFAULT_UTILITY_CONSTANT) -> SamplePlan:
    """Split alpha and beta evenly between the cover and the selection step.

    The public size makes the cover an alpha/2-cover with probability
    1 - beta/2.  The private size is the utility-bound inversion at alpha/2,
    beta/2 with ``ln|cover| <= d ln(e n_pub / d)``.
    """
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise ValueError("alpha and beta must lie in (0, 1)")
    DpParams(epsilon)
    n_pub = public_sample_size(d, alpha / 2, beta / 2)
    log_card = d * math.log(math.e * n_pub / d)
    half = alpha / 2
    L = utility_constant * (log_card + math.log(2 / beta))
    n_priv = math.ceil(L * max(1 / half**2, 1 / (epsilon * half)))
    return SamplePlan(n_priv=n_priv, n_pub=n_pub, alpha=alpha, beta=beta, epsilon=epsilon, d=d)


@dataclass(frozen=True)
class LearnResult:
    hypothesis: Hypothesis
    cover: Cover
    miss_counts: np.ndarray
    outcome: SelectionOutcome

    @property
    def index(self) -> int:
        return self.outcome.index


def sspp_learn_detailed(concept_class: ConceptClass, private_sample: SampleLike, public_points,
                        epsilon: float, rng: np.random.Generator) -> LearnResult:
    s = as_sample(private_sample)
    if len(s) == 0:
        raise ValueError("the private sample must be nonempty")
    cover = build_cover(concept_class, public_points)
    counts = cover.miss_counts(s)
    outcome = select_exp_mech(counts, len(s), epsilon, rng)
    return LearnResult(cover.hypothesis(outcome.index), cover, counts, outcome)


def sspp_learn(concept_class: ConceptClass, private_sample: SampleLike, public_points,
               epsilon: float, rng: np.random.Generator) -> Hypothesis:
    """Cover the class with the public points, then pick privately by miss count.

    The private sample enters only through the miss counts handed to the
    exponential mechanism, so the output is epsilon-DP in it for any fixed
    public input.
    """
    return sspp_learn_detailed(concept_class, private_sample, public_points, epsilon, rng).hypothesis


def sspp_output_distribution(concept_class: ConceptClass, private_sample: SampleLike, public_points,
                             epsilon: float) -> tuple[Cover, np.ndarray]:
    """Exact output law of ``sspp_learn`` over the entries of its cover."""
    s = as_sample(private_sample)
    if len(s) == 0:
        raise ValueError("the private sample must be nonempty")
    cover = build_cover(concept_class, public_points)
    return cover, exact_distribution(cover.miss_counts(s), len(s), epsilon)


def public_erm(concept_class: ConceptClass, labeled_public: SampleLike) -> Hypothesis:
    """Exact empirical risk minimizer over the class.

    Every labeling the class can give the sample points has a representative
    in the cover over those points, so minimizing over the cover is exact.
    Ties go to the first entry in cover order.
    """
    s = as_sample(labeled_public)
    if len(s) == 0:
        raise ValueError("ERM needs a nonempty sample")
    cover = build_cover(concept_class, s.xs)
    counts = cover.miss_counts(s)
    return cover.hypothesis(int(np.argmin(counts)))
