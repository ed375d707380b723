"""Checking pure differential privacy on neighboring datasets.

Two datasets are neighbors when they have the same length and differ in
exactly one example (replacement).  The exact audit compares output
distributions that the mechanism can compute; the empirical audit compares
observed frequencies and can only ever refute privacy, never certify it.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.stats import beta as beta_dist

from .hypothesis import LabeledSample, SampleLike, as_sample

MAX_AUDIT_N = 8
MAX_AUDIT_ATOMS = 8
TOLERANCE = 1e-9

Distribution = Union[Mapping[Hashable, float], Sequence[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class NeighborPair:
    base: LabeledSample
    variant: LabeledSample
    changed_index: int

    def __post_init__(self):
        if len(self.base) != len(self.variant):
            raise ValueError("neighbors must have equal length")
        diff = np.flatnonzero((self.base.xs != self.variant.xs) | (self.base.ys != self.variant.ys))
        if diff.size > 1 or (diff.size == 1 and diff[0] != self.changed_index):
            raise ValueError("neighbors must differ at exactly the changed index")


@dataclass
class AuditReport:
    epsilon_target: float
    method: str  # "exact" or "empirical"
    max_log_ratio: float
    passed: bool
    per_outcome: dict = field(default_factory=dict)
    pairs_checked: int = 0
    skipped_outcomes: list = field(default_factory=list)
    confidence: float | None = None
    # empirical audits can refute privacy but never certify it
    refutation_only: bool = False
    refuted: bool | None = None
    lower_bound: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_outcome"] = {str(k): _finite_or_str(v) for k, v in self.per_outcome.items()}
        d["skipped_outcomes"] = [str(o) for o in self.skipped_outcomes]
        d["max_log_ratio"] = _finite_or_str(self.max_log_ratio)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _finite_or_str(v):
    return v if v is None or math.isfinite(v) else str(v)


# --------------------------------------------------------------------------
# neighbors


def enumerate_neighbors(sample: SampleLike, domain_atoms: Iterable[float]) -> list[NeighborPair]:
    """Every dataset obtained by replacing one example with another (atom, label)."""
    s = as_sample(sample)
    atoms = sorted(set(float(a) for a in domain_atoms))
    if len(s) > MAX_AUDIT_N or len(atoms) > MAX_AUDIT_ATOMS:
        raise ValueError(f"audits enumerate at most {MAX_AUDIT_N} examples over {MAX_AUDIT_ATOMS} atoms")
    if not set(s.xs.tolist()) <= set(atoms):
        raise ValueError("every sample point must be one of the domain atoms")
    out = []
    for i, (x, y) in enumerate(s):
        for a, lab in itertools.product(atoms, (0, 1)):
            if (a, lab) == (x, y):
                continue
            xs, ys = s.xs.copy(), s.ys.copy()
            xs[i], ys[i] = a, lab
            out.append(NeighborPair(s, LabeledSample(xs, ys), i))
    return out


def enumerate_samples(domain_atoms: Iterable[float], n: int) -> list[LabeledSample]:
    """One sample per multiset of ``n`` (atom, label) examples, in sorted order.

    Enough for mechanisms that ignore example order.
    """
    examples = [(float(a), y) for a in sorted(set(domain_atoms)) for y in (0, 1)]
    out = []
    for combo in itertools.combinations_with_replacement(examples, n):
        xs, ys = zip(*combo) if combo else ((), ())
        out.append(LabeledSample(np.array(xs, dtype=float), np.array(ys, dtype=np.int8)))
    return out


# --------------------------------------------------------------------------
# exact audit


def _as_mapping(dist: Distribution) -> dict:
    if isinstance(dist, Mapping):
        return dict(dist)
    return {i: float(q) for i, q in enumerate(np.asarray(dist, dtype=float))}


def _key(s: LabeledSample):
    return (s.xs.tobytes(), s.ys.tobytes())


def exact_audit(mechanism: Callable[[LabeledSample], Distribution], pairs: Sequence[NeighborPair],
                epsilon: float) -> AuditReport:
    """Largest ``|log P[M(S) = o] - log P[M(S') = o]|`` over pairs and outcomes.

    A zero probability facing a nonzero one is an infinite ratio; outcomes
    impossible on both sides are skipped and listed in the report.
    """
    cache: dict = {}

    def dist(s):
        k = _key(s)
        if k not in cache:
            raw = mechanism(s)
            cache[k] = dict(raw) if isinstance(raw, Mapping) else np.asarray(raw, dtype=float)
        return cache[k]

    worst = 0.0
    per_outcome: dict = {}
    skipped = set()
    with np.errstate(divide="ignore", invalid="ignore"):
        for pair in pairs:
            p, q = dist(pair.base), dist(pair.variant)
            if isinstance(p, dict) or isinstance(q, dict):
                p, q = _as_mapping(p), _as_mapping(q)
                keys = sorted(set(p) | set(q), key=str)
                a = np.array([p.get(o, 0.0) for o in keys])
                b = np.array([q.get(o, 0.0) for o in keys])
            else:
                if p.shape != q.shape:
                    raise ValueError("neighbors produced outcome spaces of different sizes")
                keys, a, b = range(p.size), p, q
            both_zero = (a == 0.0) & (b == 0.0)
            r = np.abs(np.log(a) - np.log(b))
            r[both_zero] = 0.0
            if both_zero.any():
                skipped.update(o for o, z in zip(keys, both_zero) if z)
            top = float(r.max()) if r.size else 0.0
            if top > worst:
                worst = top
            for o, v in zip(keys, r.tolist()):
                if v > per_outcome.get(o, -1.0):
                    per_outcome[o] = v
    return AuditReport(
        epsilon_target=epsilon,
        method="exact",
        max_log_ratio=worst,
        passed=worst <= epsilon + TOLERANCE,
        per_outcome=per_outcome,
        pairs_checked=len(pairs),
        skipped_outcomes=sorted(skipped, key=str),
    )


# --------------------------------------------------------------------------
# empirical audit


def clopper_pearson(k: int, n: int, level: float) -> tuple[float, float]:
    """Two-sided interval with total miscoverage ``level``."""
    lo = 0.0 if k == 0 else float(beta_dist.ppf(level / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - level / 2, k + 1, n - k))
    return lo, hi


def _ratio_bounds(ka, kb, trials, level):
    a_lo, a_hi = clopper_pearson(ka, trials, level)
    b_lo, b_hi = clopper_pearson(kb, trials, level)
    up = max(_safe_log_ratio(a_hi, b_lo), _safe_log_ratio(b_hi, a_lo))
    down = max(0.0, _safe_log_ratio(a_lo, b_hi), _safe_log_ratio(b_lo, a_hi))
    return up, down


def _safe_log_ratio(num, den):
    if num == 0.0:
        return -math.inf
    if den == 0.0:
        return math.inf
    return math.log(num / den)


def min_trials(epsilon: float, confidence: float, n_tests: int = 2) -> int:
    """Fewest trials at which a fair-coin outcome could be shown within ``epsilon``."""
    level = (1 - confidence) / n_tests
    n = 16
    while _ratio_bounds(n // 2, n // 2, n, level)[0] > epsilon:
        n *= 2
        if n > 10**9:
            break
    return n


def empirical_audit(sampler: Callable[[LabeledSample, np.random.Generator, int], Sequence[Hashable]],
                    pairs: Sequence[NeighborPair], epsilon: float, trials: int, confidence: float,
                    rng: np.random.Generator, outcomes: Iterable[Hashable] | None = None) -> AuditReport:
    """Frequency-based bounds on the privacy loss; advisory only.

    ``sampler(sample, rng, size)`` returns ``size`` independent outcomes.

    Intervals are Clopper-Pearson, Bonferroni-corrected over every outcome
    and both sides of every pair.  ``max_log_ratio`` is the upper confidence
    bound; ``refuted`` is set when even the lower bound exceeds ``epsilon``.
    Outcomes in ``outcomes`` never observed on either side of a pair are
    excluded and listed in ``skipped_outcomes``.
    """
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    if trials < min_trials(epsilon, confidence):
        raise ValueError(f"{trials} trials cannot resolve epsilon={epsilon} at confidence {confidence}")
    counts: dict = {}

    def tally(s):
        k = _key(s)
        if k not in counts:
            vals, cnt = np.unique(np.asarray(sampler(s, rng, trials)), return_counts=True)
            counts[k] = {v.item(): int(c) for v, c in zip(vals, cnt)}
        return counts[k]

    tallies = [(tally(pr.base), tally(pr.variant)) for pr in pairs]
    n_tests = max(1, sum(len(set(a) | set(b)) for a, b in tallies)) * 2
    level = (1 - confidence) / n_tests
    upper, lower = 0.0, 0.0
    per_outcome: dict = {}
    skipped = set()
    for a, b in tallies:
        for o in set(a) | set(b):
            up, down = _ratio_bounds(a.get(o, 0), b.get(o, 0), trials, level)
            per_outcome[o] = max(per_outcome.get(o, 0.0), up)
            upper, lower = max(upper, up), max(lower, down)
    if outcomes is not None:
        for a, b in tallies:
            skipped |= {o for o in outcomes if o not in a and o not in b}
    return AuditReport(
        epsilon_target=epsilon,
        method="empirical",
        max_log_ratio=upper,
        passed=upper <= epsilon,
        per_outcome=per_outcome,
        pairs_checked=len(pairs),
        skipped_outcomes=sorted(skipped, key=str),
        confidence=confidence,
        refutation_only=True,
        refuted=lower > epsilon,
        lower_bound=lower,
    )
