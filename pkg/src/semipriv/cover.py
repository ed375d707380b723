"""Finite covers built from unlabeled public points.

``build_cover`` keeps one representative per labeling that the class can
produce on the distinct public points.  Covers for thresholds and intervals
are stored as parameter arrays so that covers with millions of entries (an
interval cover over a few thousand points) stay cheap to score; entries are
materialized on demand.

The coverage radius ``sup_h min_k dis(h, rep_k)`` is computed exactly in
CDF coordinates, where the disagreement of two thresholds is the distance of
their CDF values and that of two intervals is the mass of their symmetric
difference.
"""

from __future__ import annotations

import json
import math
from typing import Iterator

import numpy as np
from scipy.optimize import linprog

from .hypothesis import (
    ConceptClass,
    Dichotomy,
    Hypothesis,
    Interval,
    Intervals,
    SampleLike,
    Thresholds,
    Threshold,
    UnsupportedPairing,
    as_sample,
    concept_class_from_dict,
    concept_class_to_dict,
    distinct_sorted,
    empty_spot,
    hypothesis_to_dict,
    left_nodes,
    right_nodes,
    threshold_rep,
)

DEFAULT_PUBLIC_CONSTANT = 8.0


SMALL_COVER = 32


class Cover:
    """Representatives of every dichotomy of ``concept_class`` on ``points``."""

    def __init__(self, concept_class: ConceptClass, points: np.ndarray):
        self.concept_class = concept_class
        self.points = points

    def __len__(self) -> int:
        raise NotImplementedError

    def hypothesis(self, k: int) -> Hypothesis:
        raise NotImplementedError

    def dichotomy(self, k: int) -> Dichotomy:
        return tuple(int(b) for b in self.hypothesis(k).predict_array(self.points))

    def entries(self) -> Iterator[tuple[Dichotomy, Hypothesis]]:
        for k in range(len(self)):
            yield self.dichotomy(k), self.hypothesis(k)

    def miss_counts(self, sample: SampleLike) -> np.ndarray:
        """Number of misclassified examples for every entry, as int64."""
        s = as_sample(sample)
        return np.array(
            [np.count_nonzero(self.hypothesis(k).predict_array(s.xs) != s.ys) for k in range(len(self))],
            dtype=np.int64,
        )

    def to_json(self) -> str:
        doc = {
            "concept_class": concept_class_to_dict(self.concept_class),
            "points": self.points.tolist(),
            "entries": [
                {"dichotomy": "".join(map(str, c)), "hypothesis": hypothesis_to_dict(h)}
                for c, h in self.entries()
            ],
        }
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "Cover":
        doc = json.loads(text)
        cover = build_cover(concept_class_from_dict(doc["concept_class"]), doc["points"])
        stored = [e["dichotomy"] for e in doc["entries"]]
        if stored != ["".join(map(str, c)) for c, _ in cover.entries()]:
            raise ValueError("stored entries do not match the cover rebuilt from its points")
        return cover


class ThresholdCover(Cover):
    """Entry ``k`` labels the first ``k`` distinct points 0 and the rest 1."""

    def __init__(self, concept_class, points):
        super().__init__(concept_class, points)
        self.thresholds = np.array([threshold_rep(points, k) for k in range(len(points) + 1)])

    def __len__(self):
        return self.thresholds.size

    def hypothesis(self, k):
        return Threshold(float(self.thresholds[k]))

    def dichotomy(self, k):
        m = len(self.points)
        return (0,) * k + (1,) * (m - k)

    def miss_counts(self, sample):
        s = as_sample(sample)
        if len(self) <= SMALL_COVER:
            # a pass per entry beats sorting a huge sample
            pos = s.ys == 1
            n_ones = int(np.count_nonzero(pos))
            return np.array([n_ones - 2 * int(np.count_nonzero(pos[s.xs >= t])) + int(np.count_nonzero(s.xs >= t))
                             for t in self.thresholds], dtype=np.int64)
        ones = np.sort(s.xs[s.ys == 1])
        zeros = np.sort(s.xs[s.ys == 0])
        # h_t(x) = 1 iff x >= t: misses are ones left of t and zeros at or right of t
        ones_left = np.searchsorted(ones, self.thresholds, side="left")
        zeros_left = np.searchsorted(zeros, self.thresholds, side="left")
        return (ones_left + (zeros.size - zeros_left)).astype(np.int64)


class IntervalCover(Cover):
    """Entry 0 is the empty pattern; the rest are ``[node_p, node_q]``, p < q.

    Nodes are the first point, the gap midpoints and the last point, so a
    run of ones over points ``i..j`` is the pair ``(i, j + 1)``.  Pairs are
    enumerated in lexicographic order.
    """

    def __init__(self, concept_class, points):
        super().__init__(concept_class, points)
        m = len(points)
        if m:
            self.nodes = np.concatenate([[points[0]], 0.5 * (points[1:] + points[:-1]), [points[-1]]])
        else:
            self.nodes = np.empty(0)
        # endpoints actually placed: fall back to the point itself when a midpoint rounds onto one
        self.lefts = left_nodes(points)
        self.rights = right_nodes(points)
        self.empty_at = empty_spot(points)
        # index of the first pair in row p
        p = np.arange(m + 1)
        self._row_start = 1 + p * m - p * (p - 1) // 2

    def __len__(self):
        m = len(self.points)
        return 1 + m * (m + 1) // 2

    def pair(self, k: int) -> tuple[int, int]:
        if k <= 0 or k >= len(self):
            raise IndexError(k)
        p = int(np.searchsorted(self._row_start, k, side="right")) - 1
        return p, int(k - self._row_start[p] + p + 1)

    def hypothesis(self, k):
        if k == 0:
            return Interval(self.empty_at, self.empty_at)
        p, q = self.pair(k)
        return Interval(float(self.lefts[p]), float(self.rights[q - 1]))

    def dichotomy(self, k):
        m = len(self.points)
        if k == 0:
            return (0,) * m
        p, q = self.pair(k)
        return (0,) * p + (1,) * (q - p) + (0,) * (m - q)

    def miss_counts(self, sample):
        s = as_sample(sample)
        m = len(self.points)
        ones = np.sort(s.xs[s.ys == 1])
        zeros = np.sort(s.xs[s.ys == 0])
        out = np.empty(len(self), dtype=np.int64)
        empty = Interval(self.empty_at, self.empty_at)
        out[0] = np.count_nonzero(empty.predict_array(s.xs) != s.ys)
        if m == 0:
            return out
        ones_lt = np.searchsorted(ones, self.lefts, side="left")
        zeros_lt = np.searchsorted(zeros, self.lefts, side="left")
        ones_le = np.searchsorted(ones, self.rights, side="right")
        zeros_le = np.searchsorted(zeros, self.rights, side="right")
        # misses of [left_p, right_{q-1}] = ones outside + zeros inside, split by p and q
        row = ones.size + ones_lt - zeros_lt
        col = np.concatenate([[0], zeros_le - ones_le])
        start = 1
        for p in range(m):
            stop = start + m - p
            np.add(row[p], col[p + 1:], out=out[start:stop])
            start = stop
        return out


class ListCover(Cover):
    """Explicit entry list, used for unions of several intervals."""

    def __init__(self, concept_class, points):
        super().__init__(concept_class, points)
        pats = sorted(concept_class.project(points), key=lambda c: (sum(c), c))
        self._entries = [(c, concept_class.representative(points, c)) for c in pats]

    def __len__(self):
        return len(self._entries)

    def hypothesis(self, k):
        return self._entries[k][1]

    def dichotomy(self, k):
        return self._entries[k][0]


def build_cover(concept_class: ConceptClass, public_points) -> Cover:
    """Deduplicate the public points and keep one representative per dichotomy."""
    pts = distinct_sorted(public_points)
    if isinstance(concept_class, Thresholds):
        return ThresholdCover(concept_class, pts)
    if isinstance(concept_class, Intervals):
        return IntervalCover(concept_class, pts)
    return ListCover(concept_class, pts)


# --------------------------------------------------------------------------
# coverage radius


def _cdf_of(marginal):
    cdf = getattr(marginal, "cdf", None)
    if cdf is None:
        raise UnsupportedPairing(
            f"exact cover check needs a continuous CDF, {type(marginal).__name__} has none"
        )
    return cdf


def cover_radius(cover: Cover, marginal) -> float:
    """Exact ``sup_h min_k dis(h, rep_k)`` over the whole class.

    Supported for thresholds and intervals under marginals with a continuous
    CDF (uniform and piecewise-uniform); raises ``UnsupportedPairing`` otherwise.
    """
    cdf = _cdf_of(marginal)
    if isinstance(cover, ThresholdCover):
        return _threshold_radius(np.asarray(cdf(cover.thresholds), dtype=float))
    if isinstance(cover, IntervalCover):
        return _interval_radius(np.asarray(cdf(cover.nodes), dtype=float))
    raise UnsupportedPairing(f"no exact cover check for {cover.concept_class.class_id}")


def _threshold_radius(u: np.ndarray) -> float:
    # thresholds sweep the whole CDF range [0, 1]; dis is |F(t) - F(s)|
    u = np.unique(np.clip(u, 0.0, 1.0))
    gaps = np.diff(u)
    inner = float(gaps.max()) / 2 if gaps.size else 0.0
    return max(float(u[0]), 1.0 - float(u[-1]), inner)


def _interval_radius(nodes: np.ndarray) -> float:
    """Radius of the interval cover whose pairs are ``[U_p, U_q]``, p < q, plus empty.

    In CDF coordinates an interval is ``(u, v)`` with ``0 <= u <= v <= 1`` and
    the distance to the covering family reduces to
    ``min(v - u, min_{p<q} |u - U_p| + |v - U_q|)``: a representative that does
    not overlap ``[u, v]`` is never closer than the empty one.
    """
    m1 = nodes.size
    if m1 == 0:
        return 1.0
    U = np.clip(nodes, 0.0, 1.0)
    S = np.unique(np.concatenate([[0.0, 1.0], U]))
    R = S.size - 1
    vals = np.unique(U)
    is_node = np.isin(S, vals)
    lens = np.diff(S)
    # farthest distance to a node inside each cell
    e = np.where(is_node[:-1] & is_node[1:], lens / 2, lens)

    best = 0.0
    if R >= 3:
        # cells at least one apart: the nearest nodes form a valid pair
        suffix = np.maximum.accumulate(e[::-1])[::-1]
        best = float(np.max(e[: R - 2] + suffix[2:]))

    # index ranges of nodes by value, for candidate windows
    first_idx = {float(v): int(np.searchsorted(U, v, side="left")) for v in vals}
    last_idx = {float(v): int(np.searchsorted(U, v, side="right")) - 1 for v in vals}
    vpos = {float(v): i for i, v in enumerate(vals)}

    def window(r):
        # all node indices whose value lies within three distinct values of cell r
        lo_v, hi_v = S[r], S[r + 1]
        below = vals[vals <= lo_v]
        above = vals[vals >= hi_v]
        i_lo = vpos[float(below[-1])] if below.size else 0
        i_hi = vpos[float(above[0])] if above.size else vals.size - 1
        a = vals[max(0, i_lo - 3)]
        b = vals[min(vals.size - 1, i_hi + 3)]
        return range(first_idx[float(a)], last_idx[float(b)] + 1)

    boxes = [(r, r) for r in range(R)] + [(r, r + 1) for r in range(R - 1)]
    for r1, r2 in boxes:
        u_lo, u_hi, v_lo, v_hi = S[r1], S[r1 + 1], S[r2], S[r2 + 1]
        corners = [(u, v) for u in (u_lo, u_hi) for v in (v_lo, v_hi) if u <= v]
        ub = max(v - u for u, v in corners)
        if ub <= best:
            continue
        pairs = [(p, q) for p in window(r1) for q in window(r2) if p < q]
        rows = []
        for p, q in pairs:
            su = 1.0 if U[p] <= u_lo else -1.0
            sv = 1.0 if U[q] <= v_lo else -1.0
            rows.append((su, sv, -su * U[p] - sv * U[q]))
            ub = min(ub, max(su * u + sv * v + rows[-1][2] for u, v in corners))
        if ub <= best:
            continue
        # maximize z subject to z <= v - u and z <= each linear distance
        A = [[1.0, -1.0, 1.0]] + [[-su, -sv, 1.0] for su, sv, _ in rows]
        b = [0.0] + [c for _, _, c in rows]
        A.append([1.0, -1.0, 0.0])
        b.append(0.0)
        res = linprog(
            c=[0.0, 0.0, -1.0],
            A_ub=A,
            b_ub=b,
            bounds=[(u_lo, u_hi), (v_lo, v_hi), (None, None)],
            method="highs",
        )
        if res.status != 0:
            raise RuntimeError(f"cover radius LP failed: {res.message}")
        best = max(best, float(-res.fun))
    return best


def grid_cover_radius(cover: Cover, marginal, resolution: int = 10**4) -> float:
    """Lower estimate of the radius from a dense grid of class members.

    Used as an independent check: thresholds take ``resolution`` grid values,
    intervals every ordered pair of ``resolution`` grid values.  Distances
    use the full overlap formula in CDF coordinates.
    """
    cdf = _cdf_of(marginal)
    grid = np.linspace(0.0, 1.0, resolution + 1)
    if isinstance(cover, ThresholdCover):
        reps = np.clip(cdf(cover.thresholds), 0, 1)
        u = cdf(grid)
        best = 0.0
        for chunk in np.array_split(u, max(1, u.size // 2048)):
            d = np.abs(chunk[:, None] - reps[None, :]).min(axis=1)
            best = max(best, float(d.max()))
        return best
    if isinstance(cover, IntervalCover):
        reps = [(0.0, 0.0)]
        for k in range(1, len(cover)):
            h = cover.hypothesis(k)
            reps.append((float(cdf(h.a)), float(cdf(h.b))))
        ru = np.array([r[0] for r in reps])
        rv = np.array([r[1] for r in reps])
        g = cdf(grid)
        iu, iv = np.triu_indices(g.size)
        best = 0.0
        for sl in np.array_split(np.arange(iu.size), max(1, iu.size // 4096)):
            u = g[iu[sl]][:, None]
            v = g[iv[sl]][:, None]
            overlap = np.maximum(0.0, np.minimum(v, rv) - np.maximum(u, ru))
            d = (v - u) + (rv - ru) - 2 * overlap
            best = max(best, float(d.min(axis=1).max()))
        return best
    raise UnsupportedPairing(f"no grid check for {cover.concept_class.class_id}")


def is_alpha_cover(cover: Cover, concept_class: ConceptClass, marginal, alpha: float) -> bool:
    if cover.concept_class != concept_class:
        raise ValueError("cover was built for a different concept class")
    return cover_radius(cover, marginal) <= alpha + 1e-12


# --------------------------------------------------------------------------
# sample size


def log_cover_failure_bound(d: int, alpha: float, n_pub: int) -> float:
    return math.log(2.0) + 2 * d * math.log(2 * math.e * n_pub / d) - alpha * n_pub / 4.0


def cover_failure_bound(d: int, alpha: float, n_pub: int) -> float:
    """``min(1, 2 (2e n/d)^(2d) exp(-alpha n / 4))``, evaluated in log space."""
    if d < 1 or int(d) != d:
        raise ValueError("d must be a positive integer")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if n_pub < d:
        raise ValueError("the bound needs n_pub >= d")
    lb = log_cover_failure_bound(d, alpha, n_pub)
    return 1.0 if lb >= 0 else math.exp(lb)


def public_sample_size(d: int, alpha: float, beta: float, constant: float = DEFAULT_PUBLIC_CONSTANT) -> int:
    """Smallest ``n >= C (d ln(1/alpha) + ln(1/beta)) / alpha`` whose failure bound is <= beta."""
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise ValueError("alpha and beta must lie in (0, 1)")
    n = max(d, math.ceil(constant * (d * math.log(1 / alpha) + math.log(1 / beta)) / alpha))
    ok = lambda k: cover_failure_bound(d, alpha, k) <= beta  # noqa: E731
    if ok(n):
        return n
    # below 8d/alpha the bound increases in n, so no crossing hides there
    lo = max(n, math.ceil(8 * d / alpha))
    if ok(lo):
        return lo
    hi = 2 * lo
    while not ok(hi):
        lo, hi = hi, 2 * hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi
