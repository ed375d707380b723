"""Concept classes over the unit interval.

Three classes are supported: thresholds ``x >= t`` (VC dimension 1), closed
intervals ``[a, b]`` (VC dimension 2) and unions of at most ``k`` disjoint
closed intervals (VC dimension ``2k``).  Every hypothesis exposes its
positive region as a sorted list of closed intervals, which is all the
disagreement computations need.

Labeled samples are carried as a pair of numpy arrays (``LabeledSample``);
any sequence of ``(x, y)`` pairs is accepted wherever a sample is expected.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

Dichotomy = tuple[int, ...]


class UnsupportedPairing(Exception):
    """No closed form exists for this hypothesis/marginal combination."""


class NotRealizable(ValueError):
    """The dichotomy is not in the projection of the class."""


# --------------------------------------------------------------------------
# hypotheses


@dataclass(frozen=True)
class Threshold:
    t: float
    class_id = "threshold"

    def __post_init__(self):
        if not math.isfinite(self.t):
            raise ValueError(f"threshold must be finite, got {self.t}")

    @property
    def params(self) -> tuple[float, ...]:
        return (float(self.t),)

    def regions(self) -> list[tuple[float, float]]:
        return [(self.t, math.inf)]

    def predict_array(self, xs: np.ndarray) -> np.ndarray:
        return (xs >= self.t).astype(np.int8)


@dataclass(frozen=True)
class Interval:
    a: float
    b: float
    class_id = "interval"

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("interval endpoints must be finite")
        if self.a > self.b:
            raise ValueError(f"interval needs a <= b, got [{self.a}, {self.b}]")

    @property
    def params(self) -> tuple[float, ...]:
        return (float(self.a), float(self.b))

    def regions(self) -> list[tuple[float, float]]:
        return [(self.a, self.b)]

    def predict_array(self, xs: np.ndarray) -> np.ndarray:
        return ((xs >= self.a) & (xs <= self.b)).astype(np.int8)


@dataclass(frozen=True)
class IntervalUnion:
    """Union of sorted, pairwise disjoint closed intervals (possibly none)."""

    intervals: tuple[tuple[float, float], ...]
    class_id = "k_union"

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        prev_b = -math.inf
        for a, b in ivs:
            if not (math.isfinite(a) and math.isfinite(b)) or a > b:
                raise ValueError(f"bad interval [{a}, {b}]")
            if a <= prev_b:
                raise ValueError("intervals must be sorted and disjoint")
            prev_b = b

    @property
    def params(self) -> tuple[float, ...]:
        return tuple(v for iv in self.intervals for v in iv)

    def regions(self) -> list[tuple[float, float]]:
        return list(self.intervals)

    def predict_array(self, xs: np.ndarray) -> np.ndarray:
        out = np.zeros(xs.shape, dtype=np.int8)
        for a, b in self.intervals:
            out |= ((xs >= a) & (xs <= b)).astype(np.int8)
        return out


Hypothesis = Union[Threshold, Interval, IntervalUnion]


def predict(h: Hypothesis, x):
    """Label of ``x`` under ``h``; scalars give an int, arrays an int8 array."""
    arr = np.asarray(x, dtype=float)
    out = h.predict_array(arr)
    if arr.ndim == 0:
        return int(out)
    return out


def hypothesis_to_dict(h: Hypothesis) -> dict:
    return {"class_id": h.class_id, "params": list(h.params)}


def hypothesis_from_dict(d: dict) -> Hypothesis:
    cid, params = d["class_id"], [float(v) for v in d["params"]]
    if cid == "threshold":
        return Threshold(*params)
    if cid == "interval":
        return Interval(*params)
    if cid == "k_union":
        if len(params) % 2:
            raise ValueError("k_union params must come in (a, b) pairs")
        return IntervalUnion(tuple(zip(params[::2], params[1::2])))
    raise ValueError(f"unknown class_id {cid!r}")


# --------------------------------------------------------------------------
# labeled samples


@dataclass(frozen=True)
class LabeledSample:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float).reshape(-1)
        ys = np.asarray(self.ys).reshape(-1)
        if xs.shape != ys.shape:
            raise ValueError("xs and ys must have equal length")
        if ys.size and (ys.min() < 0 or ys.max() > 1 or (ys.dtype.kind == "f" and np.any(ys % 1))):
            raise ValueError("labels must be 0 or 1")
        ys = ys.astype(np.int8, copy=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    def __len__(self) -> int:
        return int(self.xs.size)

    def __iter__(self) -> Iterator[tuple[float, int]]:
        return zip(self.xs.tolist(), self.ys.tolist())

    def __getitem__(self, i):
        if isinstance(i, slice):
            return LabeledSample(self.xs[i], self.ys[i])
        return float(self.xs[i]), int(self.ys[i])

    def __eq__(self, other):
        if not isinstance(other, LabeledSample):
            return NotImplemented
        return np.array_equal(self.xs, other.xs) and np.array_equal(self.ys, other.ys)

    __hash__ = None

    def to_list(self) -> list[tuple[float, int]]:
        return list(self)

    @classmethod
    def empty(cls) -> "LabeledSample":
        return cls(np.empty(0), np.empty(0, dtype=np.int8))


SampleLike = Union[LabeledSample, Sequence[tuple[float, int]]]


def as_sample(sample: SampleLike) -> LabeledSample:
    if isinstance(sample, LabeledSample):
        return sample
    pairs = list(sample)
    if not pairs:
        return LabeledSample.empty()
    xs, ys = zip(*pairs)
    return LabeledSample(np.array(xs, dtype=float), np.array(ys))


# --------------------------------------------------------------------------
# concept classes


def distinct_sorted(points: Iterable[float]) -> np.ndarray:
    """The distinct public points, ascending (exact equality, no snapping)."""
    arr = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=float)
    if arr.size and not np.isfinite(arr).all():
        raise ValueError("points must be finite")
    return np.unique(arr)


def _check_increasing(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float).reshape(-1)
    if arr.size and not np.isfinite(arr).all():
        raise ValueError("points must be finite")
    if arr.size > 1 and not (np.diff(arr) > 0).all():
        raise ValueError("points must be strictly increasing (use distinct_sorted)")
    return arr


def _between(a: float, b: float) -> float | None:
    """Midpoint of ``a < b`` if it lies strictly inside, else None (adjacent floats)."""
    mid = 0.5 * (a + b)
    return float(mid) if a < mid < b else None


def left_node(points: np.ndarray, i: int) -> float:
    """Left endpoint placed for a run of ones starting at point ``i``."""
    if i == 0:
        return float(points[0])
    mid = _between(points[i - 1], points[i])
    return float(points[i]) if mid is None else mid


def right_node(points: np.ndarray, j: int) -> float:
    """Right endpoint placed for a run of ones ending at point ``j``."""
    if j == len(points) - 1:
        return float(points[-1])
    mid = _between(points[j], points[j + 1])
    return float(points[j]) if mid is None else mid


def left_nodes(points: np.ndarray) -> np.ndarray:
    """``left_node`` for every start index, vectorized."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return np.empty(0)
    mid = 0.5 * (points[1:] + points[:-1])
    ok = (points[:-1] < mid) & (mid < points[1:])
    return np.concatenate([points[:1], np.where(ok, mid, points[1:])])


def right_nodes(points: np.ndarray) -> np.ndarray:
    """``right_node`` for every end index, vectorized."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        return np.empty(0)
    mid = 0.5 * (points[1:] + points[:-1])
    ok = (points[:-1] < mid) & (mid < points[1:])
    return np.concatenate([np.where(ok, mid, points[:-1]), points[-1:]])


def threshold_rep(points: np.ndarray, zeros: int) -> float:
    """Threshold labelling the first ``zeros`` points 0 and the rest 1."""
    m = len(points)
    if m == 0:
        return 0.5
    if zeros < m:
        return left_node(points, zeros)
    last = float(points[-1])
    return 0.5 * (last + 1.0) if last < 1.0 else last + 0.5


def empty_spot(points: np.ndarray) -> float:
    """A location carrying no public point, for all-zero interval patterns."""
    m = len(points)
    if m == 0:
        return 0.5
    first, last = float(points[0]), float(points[-1])
    if first > 0.0 and 0.5 * first < first:
        return 0.5 * first
    if m > 1:
        mid = _between(points[0], points[1])
        if mid is not None:
            return mid
    return last + 0.5 if last + 0.5 > last else float(np.nextafter(last, np.inf))


def runs(bits: Sequence[int]) -> list[tuple[int, int]]:
    """Maximal runs of ones as inclusive ``(start, end)`` index pairs."""
    out, start = [], None
    for i, b in enumerate(bits):
        if b and start is None:
            start = i
        elif not b and start is not None:
            out.append((start, i - 1))
            start = None
    if start is not None:
        out.append((start, len(bits) - 1))
    return out


def _bits_from_runs(m: int, spans: Iterable[tuple[int, int]]) -> Dichotomy:
    bits = [0] * m
    for s, e in spans:
        for i in range(s, e + 1):
            bits[i] = 1
    return tuple(bits)


class _ClassBase:
    class_id: str

    @property
    def vc_dim(self) -> int:
        raise NotImplementedError

    def growth(self, m: int) -> int:
        """``|Pi_H(T)|`` for any ``m`` distinct points on the line."""
        raise NotImplementedError

    def _candidate_params(self, points: np.ndarray) -> list[float]:
        # one value per cell of the arrangement: every point, every gap, both ends
        if len(points) == 0:
            return [0.5]
        cands = [points[0] - 1.0, points[-1] + 1.0]
        cands += points.tolist()
        cands += (0.5 * (points[1:] + points[:-1])).tolist()
        return sorted(cands)

    def brute_force_project(self, points) -> set[Dichotomy]:
        """Patterns realized by one hypothesis per parameter cell (test oracle)."""
        pts = _check_increasing(points)
        if len(pts) > 20:
            raise ValueError("brute-force projection is limited to 20 points")
        return {tuple(int(v) for v in h.predict_array(pts)) for h in self._cell_hypotheses(pts)}

    def _cell_hypotheses(self, pts: np.ndarray) -> Iterator[Hypothesis]:
        raise NotImplementedError


@dataclass(frozen=True)
class Thresholds(_ClassBase):
    class_id = "threshold"

    @property
    def vc_dim(self) -> int:
        return 1

    def growth(self, m: int) -> int:
        return m + 1

    def project(self, points) -> set[Dichotomy]:
        pts = _check_increasing(points)
        m = len(pts)
        return {(0,) * j + (1,) * (m - j) for j in range(m + 1)}

    def representative(self, points, dichotomy: Sequence[int]) -> Threshold:
        pts = _check_increasing(points)
        bits = tuple(int(b) for b in dichotomy)
        if len(bits) != len(pts):
            raise ValueError("dichotomy length differs from the point list")
        zeros = bits.index(1) if 1 in bits else len(bits)
        if any(b != 1 for b in bits[zeros:]):
            raise NotRealizable(f"{bits} is not a threshold pattern")
        return Threshold(threshold_rep(pts, zeros))

    def _cell_hypotheses(self, pts):
        for t in self._candidate_params(pts):
            yield Threshold(t)


@dataclass(frozen=True)
class Intervals(_ClassBase):
    class_id = "interval"

    @property
    def vc_dim(self) -> int:
        return 2

    def growth(self, m: int) -> int:
        return m * (m + 1) // 2 + 1

    def project(self, points) -> set[Dichotomy]:
        pts = _check_increasing(points)
        m = len(pts)
        out = {(0,) * m}
        for i in range(m):
            for j in range(i, m):
                out.add((0,) * i + (1,) * (j - i + 1) + (0,) * (m - 1 - j))
        return out

    def representative(self, points, dichotomy: Sequence[int]) -> Interval:
        pts = _check_increasing(points)
        bits = tuple(int(b) for b in dichotomy)
        if len(bits) != len(pts):
            raise ValueError("dichotomy length differs from the point list")
        spans = runs(bits)
        if len(spans) > 1:
            raise NotRealizable(f"{bits} has more than one run of ones")
        if not spans:
            c = empty_spot(pts)
            return Interval(c, c)
        (i, j), = spans
        return Interval(left_node(pts, i), right_node(pts, j))

    def _cell_hypotheses(self, pts):
        cands = self._candidate_params(pts)
        for a, b in itertools.combinations_with_replacement(cands, 2):
            yield Interval(a, b)


@dataclass(frozen=True)
class IntervalUnions(_ClassBase):
    k: int = 2
    class_id = "k_union"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be a positive integer")

    @property
    def vc_dim(self) -> int:
        return 2 * self.k

    def growth(self, m: int) -> int:
        return sum(math.comb(m + 1, 2 * r) for r in range(self.k + 1))

    def project(self, points) -> set[Dichotomy]:
        pts = _check_increasing(points)
        m = len(pts)
        out = set()
        for r in range(self.k + 1):
            # 2r cut positions among the m+1 gaps delimit r runs of ones
            for cuts in itertools.combinations(range(m + 1), 2 * r):
                spans = [(cuts[2 * s], cuts[2 * s + 1] - 1) for s in range(r)]
                out.add(_bits_from_runs(m, spans))
        return out

    def representative(self, points, dichotomy: Sequence[int]) -> IntervalUnion:
        pts = _check_increasing(points)
        bits = tuple(int(b) for b in dichotomy)
        if len(bits) != len(pts):
            raise ValueError("dichotomy length differs from the point list")
        spans = runs(bits)
        if len(spans) > self.k:
            raise NotRealizable(f"{bits} needs {len(spans)} > {self.k} intervals")
        return IntervalUnion(tuple((left_node(pts, i), right_node(pts, j)) for i, j in spans))

    def _cell_hypotheses(self, pts):
        cands = self._candidate_params(pts)
        yield IntervalUnion(())
        for r in range(1, self.k + 1):
            for ends in itertools.combinations_with_replacement(cands, 2 * r):
                ivs = tuple(zip(ends[::2], ends[1::2]))
                try:
                    yield IntervalUnion(ivs)
                except ValueError:
                    continue


ConceptClass = Union[Thresholds, Intervals, IntervalUnions]


def concept_class_from_dict(d: dict) -> ConceptClass:
    kind = d["kind"]
    if kind == "threshold":
        return Thresholds()
    if kind == "interval":
        return Intervals()
    if kind == "k_union":
        return IntervalUnions(int(d.get("k", 2)))
    raise ValueError(f"unknown concept class {kind!r}")


def concept_class_to_dict(cls: ConceptClass) -> dict:
    if isinstance(cls, IntervalUnions):
        return {"kind": "k_union", "k": cls.k}
    return {"kind": cls.class_id}


def _check_member(cls: ConceptClass, h: Hypothesis) -> None:
    if h.class_id != cls.class_id:
        raise ValueError(f"{h.class_id} hypothesis does not belong to {cls.class_id} class")
    if isinstance(cls, IntervalUnions) and len(h.intervals) > cls.k:
        raise ValueError(f"union of {len(h.intervals)} intervals exceeds k={cls.k}")


def project(cls: ConceptClass, points, *, brute_force: bool = False) -> set[Dichotomy]:
    """All labelings of the (strictly increasing) points realizable by ``cls``.

    With ``brute_force=True`` the set is instead collected by evaluating one
    hypothesis per parameter cell; that path only exists as a test oracle.
    """
    if brute_force:
        return cls.brute_force_project(points)
    return cls.project(points)


def representative(cls: ConceptClass, points, dichotomy: Sequence[int]) -> Hypothesis:
    """Deterministic member of ``cls`` that labels ``points`` as ``dichotomy``.

    Free endpoints sit at gap midpoints; a run touching the first (last)
    point starts (ends) exactly at that point.  Raises ``NotRealizable``.
    """
    return cls.representative(points, dichotomy)


# --------------------------------------------------------------------------
# errors and disagreement


@dataclass(frozen=True)
class EmpiricalError:
    misses: int
    n: int

    @property
    def rate(self) -> Fraction:
        return Fraction(self.misses, self.n)

    def __float__(self) -> float:
        return self.misses / self.n


def empirical_error(h: Hypothesis, sample: SampleLike) -> EmpiricalError:
    s = as_sample(sample)
    if len(s) == 0:
        raise ValueError("empirical error of an empty sample is undefined")
    misses = int(np.count_nonzero(h.predict_array(s.xs) != s.ys))
    return EmpiricalError(misses, len(s))


def empirical_disagreement(h1: Hypothesis, h2: Hypothesis, points) -> Fraction:
    pts = np.asarray(points, dtype=float).reshape(-1)
    if pts.size == 0:
        raise ValueError("empirical disagreement of an empty point list is undefined")
    diff = np.count_nonzero(h1.predict_array(pts) != h2.predict_array(pts))
    return Fraction(int(diff), int(pts.size))


def _intersections(r1, r2):
    for a1, b1 in r1:
        for a2, b2 in r2:
            lo, hi = max(a1, a2), min(b1, b2)
            if lo <= hi:
                yield lo, hi


def expected_disagreement(h1: Hypothesis, h2: Hypothesis, marginal) -> float:
    """Marginal mass of the symmetric difference of the positive regions.

    ``marginal`` must provide ``mass(lo, hi)``, the probability of the closed
    interval ``[lo, hi]``; otherwise ``UnsupportedPairing`` is raised.
    """
    mass = getattr(marginal, "mass", None)
    if mass is None:
        raise UnsupportedPairing(f"no closed-form mass for {type(marginal).__name__}")
    r1, r2 = h1.regions(), h2.regions()
    m1 = sum(mass(a, b) for a, b in r1)
    m2 = sum(mass(a, b) for a, b in r2)
    both = sum(mass(a, b) for a, b in _intersections(r1, r2))
    return float(min(1.0, max(0.0, m1 + m2 - 2.0 * both)))
