"""Turning a semi-private learner into a fully private one for realizable data.

A real sample of size ``tilde_n`` is hidden among dummy examples whose labels
are fair coins: every private slot takes the next unused real example with
probability ``p = 1/(100 n_pub)`` and a fresh dummy draw otherwise, and the
public sample is all dummies.  Each real example lands in at most one slot,
so any privacy guarantee of the wrapped learner carries over.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Hashable, Mapping

import numpy as np
from scipy.stats import binom

from .datagen import DataDistribution, DiscreteAtoms, UniformRandom, dummy_distribution, sample_labeled
from .hypothesis import ConceptClass, Hypothesis, LabeledSample, SampleLike, as_sample
from .learner import sspp_learn
from .mechanism import private_sample_size

SemiPrivateLearner = Callable[[LabeledSample, LabeledSample], Hypothesis]

# confidence the wrapped learner is run at
WRAPPED_BETA = 1.0 / 18.0


@dataclass(frozen=True)
class ReductionConfig:
    n_priv: int
    n_pub: int

    def __post_init__(self):
        if self.n_priv < 1 or self.n_pub < 1:
            raise ValueError("n_priv and n_pub must be positive")

    @property
    def p(self) -> float:
        return 1.0 / (100 * self.n_pub)

    @property
    def tilde_n(self) -> int:
        return math.ceil(self.n_priv / (10 * self.n_pub))

    @classmethod
    def for_cover_learner(cls, concept_class: ConceptClass, alpha: float, n_pub: int,
                          epsilon: float) -> "ReductionConfig":
        """Private size at which the cover learner meets ``alpha`` on its cover at confidence 1/18."""
        card = concept_class.growth(n_pub)
        return cls(private_sample_size(card, alpha, epsilon, WRAPPED_BETA), n_pub)


@dataclass(frozen=True, eq=False)
class PrivSampResult:
    sample: LabeledSample
    completed: bool
    real_positions: np.ndarray


def _success_positions(p: float, n: int, limit: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of the first ``limit`` successes among ``n`` Bernoulli(p) coins.

    Gaps between successes are geometric, which gives the same law as
    flipping every coin while using memory proportional to the successes.
    """
    if limit == 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    out = []
    pos = -1
    need = limit
    batch = max(16, min(limit, int(p * n * 1.2) + 16))
    while need > 0:
        gaps = rng.geometric(p, size=batch)
        idx = pos + np.cumsum(gaps)
        idx = idx[idx < n][:need]
        out.append(idx)
        need -= idx.size
        if idx.size < batch:
            break
        pos = int(idx[-1])
    return np.concatenate(out).astype(np.int64)


def _completed(pos: np.ndarray, n_real: int, n_priv: int) -> bool:
    # the loop fills every slot unless the last real example goes before the final slot
    return n_real > 0 and (pos.size < n_real or int(pos[-1]) == n_priv - 1)


def priv_samp_completes(p: float, n_priv: int, n_real: int, rng: np.random.Generator) -> bool:
    """The ``completed`` flag of ``priv_samp``, flipping only its coins.

    Consumes ``rng`` exactly as ``priv_samp`` does with a separate dummy stream.
    """
    return _completed(_success_positions(p, n_priv, n_real, rng), n_real, n_priv)


def priv_samp(real_sample: SampleLike, dummy: DataDistribution, p: float, n_priv: int,
              rng: np.random.Generator, dummy_rng: np.random.Generator | None = None) -> PrivSampResult:
    """Fill ``n_priv`` slots, consuming real examples in order on coin successes.

    If the real examples run out early the remaining slots are padded with
    dummy draws and ``completed`` is False.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if n_priv < 1:
        raise ValueError("n_priv must be positive")
    real = as_sample(real_sample)
    dummy_rng = rng if dummy_rng is None else dummy_rng
    t = len(real)
    pos = _success_positions(p, n_priv, t, rng)
    completed = _completed(pos, t, n_priv)

    is_real = np.zeros(n_priv, dtype=bool)
    is_real[pos] = True
    fill = sample_labeled(dummy, n_priv - pos.size, dummy_rng)
    xs = np.empty(n_priv)
    ys = np.empty(n_priv, dtype=np.int8)
    xs[pos], ys[pos] = real.xs[: pos.size], real.ys[: pos.size]
    xs[~is_real], ys[~is_real] = fill.xs, fill.ys
    return PrivSampResult(LabeledSample(xs, ys), bool(completed), pos)


def pub_samp(dummy: DataDistribution, n_pub: int, rng: np.random.Generator) -> LabeledSample:
    return sample_labeled(dummy, n_pub, rng)


@dataclass(frozen=True, eq=False)
class ReductionTrace:
    hypothesis: Hypothesis
    private: PrivSampResult
    public: LabeledSample


def reduce_to_private_detailed(learner: SemiPrivateLearner, real_sample: SampleLike, config: ReductionConfig,
                               rng: np.random.Generator, dummy: DataDistribution | None = None) -> ReductionTrace:
    real = as_sample(real_sample)
    if len(real) != config.tilde_n:
        raise ValueError(f"expected {config.tilde_n} real examples, got {len(real)}")
    dummy = dummy or dummy_distribution()
    if not isinstance(dummy.labeling, UniformRandom):
        raise ValueError("the dummy distribution must have uniformly random labels")
    coins, dummy_rng = rng.spawn(2)
    priv = priv_samp(real, dummy, config.p, config.n_priv, coins, dummy_rng)
    pub = pub_samp(dummy, config.n_pub, dummy_rng)
    return ReductionTrace(learner(priv.sample, pub), priv, pub)


def reduce_to_private(learner: SemiPrivateLearner, real_sample: SampleLike, config: ReductionConfig,
                      rng: np.random.Generator, dummy: DataDistribution | None = None) -> Hypothesis:
    return reduce_to_private_detailed(learner, real_sample, config, rng, dummy).hypothesis


def cover_learner(concept_class: ConceptClass, epsilon: float, rng: np.random.Generator) -> SemiPrivateLearner:
    """The public-cover learner as a closure; public labels are ignored."""

    def learn(s_priv: LabeledSample, s_pub: LabeledSample) -> Hypothesis:
        return sspp_learn(concept_class, s_priv, s_pub.xs, epsilon, rng)

    return learn


def completion_probability(config: ReductionConfig) -> float:
    """Exact probability that the private slots are all filled by the loop."""
    # fewer than tilde_n successes among the first n_priv - 1 coins
    return float(binom.cdf(config.tilde_n - 1, config.n_priv - 1, config.p))


def public_mixture_gap(config: ReductionConfig) -> float:
    """Chance that a mixture draw of the public sample contains a real example."""
    return 1.0 - (1.0 - config.p) ** config.n_pub


# --------------------------------------------------------------------------
# exact output law on finite instances


def _dummy_support(dummy: DataDistribution) -> list[tuple[tuple[float, int], float]]:
    if not isinstance(dummy.marginal, DiscreteAtoms):
        raise ValueError("exact enumeration needs a dummy distribution on finitely many atoms")
    return [((x, y), q * 0.5) for x, q in zip(dummy.marginal.points, dummy.marginal.probs) for y in (0, 1)]


def _multisets(support, size):
    """(examples, probability) for every multiset of ``size`` i.i.d. draws."""
    k = len(support)
    for counts in itertools.product(range(size + 1), repeat=k):
        if sum(counts) != size:
            continue
        prob = math.factorial(size)
        examples = []
        for (z, q), c in zip(support, counts):
            prob *= q**c / math.factorial(c)
            examples += [z] * c
        yield examples, prob


def exact_output_distribution(exact_learner: Callable[[LabeledSample, LabeledSample], Mapping[Hashable, float]],
                              real_sample: SampleLike, config: ReductionConfig,
                              dummy: DataDistribution) -> dict[Hashable, float]:
    """Output law of the reduction, integrating over coins and dummy draws.

    ``exact_learner`` returns the wrapped learner's output distribution and
    must not depend on the order of the private examples (true of any
    learner that only sees miss counts).  The number of real examples used
    is binomial, truncated at ``tilde_n``; dummy slots are enumerated as
    multisets, so nothing is truncated.
    """
    real = as_sample(real_sample)
    t = len(real)
    if t != config.tilde_n:
        raise ValueError(f"expected {config.tilde_n} real examples, got {t}")
    support = _dummy_support(dummy)
    n, p = config.n_priv, config.p
    used_law = [binom.pmf(r, n, p) for r in range(t)]
    used_law.append(1.0 - sum(used_law))
    publics = list(itertools.product(support, repeat=config.n_pub))
    out: dict[Hashable, float] = defaultdict(float)
    for r, pr_r in enumerate(used_law):
        reals = real.to_list()[:r]
        for fill, pr_fill in _multisets(support, n - r):
            priv = LabeledSample(*_columns(reals + fill))
            for pub in publics:
                pr_pub = math.prod(q for _, q in pub)
                pub_s = LabeledSample(*_columns([z for z, _ in pub]))
                weight = pr_r * pr_fill * pr_pub
                for outcome, q in exact_learner(priv, pub_s).items():
                    out[outcome] += weight * q
    return dict(out)


def _columns(pairs):
    if not pairs:
        return np.empty(0), np.empty(0, dtype=np.int8)
    xs, ys = zip(*pairs)
    return np.array(xs, dtype=float), np.array(ys, dtype=np.int8)
