"""Synthetic distributions over [0, 1] x {0, 1} and seeded sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Union

import numpy as np

from .hypothesis import (
    Hypothesis,
    LabeledSample,
    UnsupportedPairing,
    expected_disagreement,
    hypothesis_from_dict,
    hypothesis_to_dict,
)

STREAM_NAMES = ("data", "public", "mechanism", "coins", "dummy", "audit", "eval")


def make_rng(root_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(root_seed, spawn_key=tuple(key)))


def streams(root_seed: int, *key: int) -> dict[str, np.random.Generator]:
    """Independent named generators for one unit of work.

    ``key`` identifies the unit (e.g. grid cell and trial index); each name
    gets its own child so components can be replayed separately.
    """
    return {
        name: make_rng(root_seed, *key, i) for i, name in enumerate(STREAM_NAMES)
    }


# --------------------------------------------------------------------------
# marginals


@dataclass(frozen=True)
class PiecewiseUniform:
    """Density constant on each ``[breakpoints[i], breakpoints[i+1])``."""

    breakpoints: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        bp = tuple(float(b) for b in self.breakpoints)
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "weights", w)
        if len(bp) != len(w) + 1 or not w:
            raise ValueError("need len(breakpoints) == len(weights) + 1 >= 2")
        if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        if any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")

    kind = "piecewise"

    def cdf(self, x):
        bp = np.asarray(self.breakpoints)
        cum = np.concatenate([[0.0], np.cumsum(self.weights)])
        return np.interp(x, bp, cum, left=0.0, right=1.0)

    def mass(self, lo: float, hi: float) -> float:
        if hi < lo:
            return 0.0
        return float(max(0.0, self.cdf(hi) - self.cdf(lo)))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.empty(0)
        w = np.asarray(self.weights)
        piece = rng.choice(len(w), size=n, p=w / w.sum())
        bp = np.asarray(self.breakpoints)
        return bp[piece] + rng.random(n) * (bp[piece + 1] - bp[piece])

    def to_dict(self) -> dict:
        return {"kind": "piecewise", "breakpoints": list(self.breakpoints), "weights": list(self.weights)}


@dataclass(frozen=True)
class Uniform(PiecewiseUniform):
    breakpoints: tuple[float, ...] = (0.0, 1.0)
    weights: tuple[float, ...] = (1.0,)
    kind = "uniform"

    def cdf(self, x):
        return np.clip(x, 0.0, 1.0)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random(n)

    def to_dict(self) -> dict:
        return {"kind": "uniform"}


@dataclass(frozen=True)
class DiscreteAtoms:
    points: tuple[float, ...]
    probs: tuple[float, ...]
    kind = "discrete"

    def __post_init__(self):
        pts = tuple(float(p) for p in self.points)
        pr = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", pr)
        if len(pts) != len(pr) or not pts:
            raise ValueError("points and probs must be nonempty and of equal length")
        if any(p < 0 for p in pr) or abs(sum(pr) - 1.0) > 1e-12:
            raise ValueError("probs must be nonnegative and sum to 1")

    def mass(self, lo: float, hi: float) -> float:
        return float(sum(p for x, p in zip(self.points, self.probs) if lo <= x <= hi))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n == 0:
            return np.empty(0)
        pr = np.asarray(self.probs)
        return np.asarray(self.points)[rng.choice(len(pr), size=n, p=pr / pr.sum())]

    def to_dict(self) -> dict:
        return {"kind": "discrete", "points": list(self.points), "probs": list(self.probs)}


@dataclass(frozen=True)
class SampledMarginal:
    """A marginal known only through a sampler; has no closed-form mass."""

    draw: Callable[[int, np.random.Generator], np.ndarray]
    kind = "sampled"

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.draw(n, rng), dtype=float)


MarginalDistribution = Union[Uniform, PiecewiseUniform, DiscreteAtoms, SampledMarginal]


def marginal_from_dict(d: dict) -> MarginalDistribution:
    kind = d["kind"]
    if kind == "uniform":
        return Uniform()
    if kind == "piecewise":
        return PiecewiseUniform(tuple(d["breakpoints"]), tuple(d["weights"]))
    if kind == "discrete":
        return DiscreteAtoms(tuple(d["points"]), tuple(d["probs"]))
    raise ValueError(f"unknown marginal kind {kind!r}")


# --------------------------------------------------------------------------
# labeling rules


@dataclass(frozen=True)
class Realizable:
    target: Hypothesis


@dataclass(frozen=True)
class Noisy:
    target: Hypothesis
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta < 0.5:
            raise ValueError(f"eta must lie in [0, 1/2), got {self.eta}")


@dataclass(frozen=True)
class UniformRandom:
    pass


LabelingRule = Union[Realizable, Noisy, UniformRandom]


def labeling_to_dict(rule: LabelingRule) -> dict:
    if isinstance(rule, Realizable):
        return {"kind": "realizable", "target": hypothesis_to_dict(rule.target)}
    if isinstance(rule, Noisy):
        return {"kind": "noisy", "target": hypothesis_to_dict(rule.target), "eta": rule.eta}
    return {"kind": "uniform_random"}


def labeling_from_dict(d: dict) -> LabelingRule:
    kind = d["kind"]
    if kind == "realizable":
        return Realizable(hypothesis_from_dict(d["target"]))
    if kind == "noisy":
        return Noisy(hypothesis_from_dict(d["target"]), float(d["eta"]))
    if kind == "uniform_random":
        return UniformRandom()
    raise ValueError(f"unknown labeling kind {kind!r}")


@dataclass(frozen=True)
class DataDistribution:
    marginal: MarginalDistribution
    labeling: LabelingRule

    def to_dict(self) -> dict:
        return {"marginal": self.marginal.to_dict(), "labeling": labeling_to_dict(self.labeling)}

    @classmethod
    def from_dict(cls, d: dict) -> "DataDistribution":
        return cls(marginal_from_dict(d["marginal"]), labeling_from_dict(d["labeling"]))


def dummy_distribution(marginal: MarginalDistribution | None = None) -> DataDistribution:
    """Fair labels independent of the point; uniform marginal by default."""
    return DataDistribution(marginal or Uniform(), UniformRandom())


@dataclass(frozen=True)
class MixtureDistribution:
    p: float
    primary: DataDistribution
    dummy: DataDistribution = field(default_factory=dummy_distribution)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"mixture weight must lie in [0, 1], got {self.p}")


# --------------------------------------------------------------------------
# sampling


def _labels(rule: LabelingRule, xs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if isinstance(rule, UniformRandom):
        return rng.integers(0, 2, size=xs.size, dtype=np.int8)
    ys = rule.target.predict_array(xs)
    if isinstance(rule, Noisy) and rule.eta > 0:
        ys = ys ^ (rng.random(xs.size) < rule.eta).astype(np.int8)
    return ys


def sample_unlabeled(marginal: MarginalDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 0:
        raise ValueError("sample size must be nonnegative")
    return marginal.sample(n, rng)


def sample_labeled(dist: DataDistribution, n: int, rng: np.random.Generator) -> LabeledSample:
    """``n`` i.i.d. labeled draws; points first, then labels, from one stream."""
    xs = sample_unlabeled(dist.marginal, n, rng)
    return LabeledSample(xs, _labels(dist.labeling, xs, rng))


def sample_mixture(mix: MixtureDistribution, n: int, rng: np.random.Generator) -> LabeledSample:
    from_primary = rng.random(n) < mix.p
    k = int(from_primary.sum())
    prim = sample_labeled(mix.primary, k, rng)
    dumm = sample_labeled(mix.dummy, n - k, rng)
    xs = np.empty(n)
    ys = np.empty(n, dtype=np.int8)
    xs[from_primary], ys[from_primary] = prim.xs, prim.ys
    xs[~from_primary], ys[~from_primary] = dumm.xs, dumm.ys
    return LabeledSample(xs, ys)


# --------------------------------------------------------------------------
# population error


class McEstimate(NamedTuple):
    value: float
    stderr: float
    exact: bool


def population_error(h: Hypothesis, dist: DataDistribution) -> float:
    """Closed-form ``err(h; D)``; raises ``UnsupportedPairing`` without one."""
    rule = dist.labeling
    if isinstance(rule, UniformRandom):
        return 0.5
    dis = expected_disagreement(h, rule.target, dist.marginal)
    if isinstance(rule, Noisy):
        return rule.eta + (1.0 - 2.0 * rule.eta) * dis
    return dis


def mc_population_error(h: Hypothesis, dist: DataDistribution, n: int, rng: np.random.Generator) -> McEstimate:
    s = sample_labeled(dist, n, rng)
    rate = float(np.count_nonzero(h.predict_array(s.xs) != s.ys)) / n
    return McEstimate(rate, math.sqrt(max(rate * (1 - rate), 1e-300) / n), False)


def population_error_auto(h: Hypothesis, dist: DataDistribution, rng: np.random.Generator,
                          n_mc: int = 10**6) -> McEstimate:
    """Closed form when available, else a Monte Carlo estimate with its standard error."""
    try:
        return McEstimate(population_error(h, dist), 0.0, True)
    except UnsupportedPairing:
        return mc_population_error(h, dist, n_mc, rng)


def mixture_error(h: Hypothesis, mix: MixtureDistribution) -> float:
    if not isinstance(mix.dummy.labeling, UniformRandom):
        raise ValueError("mixture error needs a dummy component with uniformly random labels")
    return mix.p * population_error(h, mix.primary) + 0.5 * (1.0 - mix.p)


def mc_mixture_error(h: Hypothesis, mix: MixtureDistribution, n: int, rng: np.random.Generator) -> McEstimate:
    s = sample_mixture(mix, n, rng)
    rate = float(np.count_nonzero(h.predict_array(s.xs) != s.ys)) / n
    return McEstimate(rate, math.sqrt(rate * (1 - rate) / n), False)
