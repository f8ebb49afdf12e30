"""
Slope geometry of symmetric valuations.

Forward and backward slopes, the smallest concave majorant (the closure) and
its decomposition of a valuation into right triangles, flat-slope
comparisons and counting bounds for items with steep forward slopes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from .errors import IndexOutOfRange, MalformedInput, NotSubadditive
from .valuations import RationalLike, SymmetricValuation, is_subadditive, parse_rational

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlopeQuery:
    """
    Result of a windowed slope query.

    Attributes:
        k: Bundle size the slope starts from
        r: Window length
        value: Extremal slope over the window
        realizer: Smallest step length attaining it
    """

    k: int
    r: int
    value: Fraction
    realizer: int


@dataclass(frozen=True)
class Triangle:
    start: int
    end: int
    slope: Fraction

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class TriangleDecomposition:
    """
    Closure of a valuation and the triangles between its contact points.

    Attributes:
        intersection_indices: Sizes where the valuation meets its closure,
            ascending, always starting at 0 and ending at m
        slopes: Closure slope between consecutive intersection indices,
            non-increasing
        closure: Smallest concave majorant as a valuation
    """

    intersection_indices: Tuple[int, ...]
    slopes: Tuple[Fraction, ...]
    closure: SymmetricValuation

    @property
    def triangles(self) -> List[Triangle]:
        idx = self.intersection_indices
        return [Triangle(idx[l], idx[l + 1], self.slopes[l]) for l in range(len(self.slopes))]

    def is_intersection(self, k: int) -> bool:
        return k in self.intersection_indices

    def triangle_at(self, k: int) -> Triangle:
        """
        The triangle containing bundle size ``k`` (its start inclusive).

        Raises:
            IndexOutOfRange: If ``k`` is not in ``0..m-1``
        """
        idx = self.intersection_indices
        if not 0 <= k < idx[-1]:
            raise IndexOutOfRange(f"no triangle starts at or contains k={k}")
        lo, hi = 0, len(idx) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if idx[mid] <= k:
                lo = mid
            else:
                hi = mid
        return Triangle(idx[lo], idx[lo + 1], self.slopes[lo])


def max_forward_slope(v: SymmetricValuation, k: int, r: Optional[int] = None) -> SlopeQuery:
    """
    Largest average gain ``(v(k+l) - v(k)) / l`` over ``l = 1..r``.

    Args:
        v: Symmetric valuation
        k (int): Current bundle size, ``0 <= k < m``
        r (int): Window length, defaults to ``m - k``

    Raises:
        IndexOutOfRange: If ``k`` or ``r`` leave the domain
    """
    m = v.m
    if not 0 <= k < m:
        raise IndexOutOfRange(f"forward slope needs 0 <= k < {m}, got k={k}")
    if r is None:
        r = m - k
    if not 1 <= r <= m - k:
        raise IndexOutOfRange(f"forward window needs 1 <= r <= {m - k}, got r={r}")
    vals = v.values
    best, realizer = None, None
    for l in range(1, r + 1):
        slope = (vals[k + l] - vals[k]) / l
        if best is None or slope > best:
            best, realizer = slope, l
    return SlopeQuery(k, r, best, realizer)


def min_backward_slope(v: SymmetricValuation, k: int, r: Optional[int] = None) -> SlopeQuery:
    """
    Smallest average loss ``(v(k) - v(k-l)) / l`` over ``l = 1..r``.

    Raises:
        IndexOutOfRange: If ``k`` is not in ``1..m`` or ``r`` not in ``1..k``
    """
    m = v.m
    if not 1 <= k <= m:
        raise IndexOutOfRange(f"backward slope needs 1 <= k <= {m}, got k={k}")
    if r is None:
        r = k
    if not 1 <= r <= k:
        raise IndexOutOfRange(f"backward window needs 1 <= r <= {k}, got r={r}")
    vals = v.values
    best, realizer = None, None
    for l in range(1, r + 1):
        slope = (vals[k] - vals[k - l]) / l
        if best is None or slope < best:
            best, realizer = slope, l
    return SlopeQuery(k, r, best, realizer)


def _extreme_ratio(nums: np.ndarray, dens: np.ndarray, maximize: bool) -> Fraction:
    """Exact extreme of ``nums / dens`` guided by a float pass."""
    approx = nums.astype(float) / dens
    i = int(np.argmax(approx) if maximize else np.argmin(approx))
    cross = nums * dens[i] - nums[i] * dens
    if np.any(cross > 0) if maximize else np.any(cross < 0):
        ratios = [Fraction(int(a), int(b)) for a, b in zip(nums, dens)]
        return max(ratios) if maximize else min(ratios)
    return Fraction(int(nums[i]), int(dens[i]))


@lru_cache(maxsize=256)
def forward_slope_table(v: SymmetricValuation) -> Tuple[Fraction, ...]:
    """Full-window forward slope for every ``k = 0..m-1``."""
    arr, scale = v.grid
    m = v.m
    table = []
    for k in range(m):
        dens = np.arange(1, m - k + 1, dtype=np.int64)
        table.append(_extreme_ratio(arr[k + 1 :] - arr[k], dens, maximize=True) / scale)
    return tuple(table)


@lru_cache(maxsize=256)
def backward_slope_table(v: SymmetricValuation) -> Tuple[Optional[Fraction], ...]:
    """Full-window backward slope for every ``k = 0..m``; undefined (None) at 0."""
    arr, scale = v.grid
    table: List[Optional[Fraction]] = [None]
    for k in range(1, v.m + 1):
        dens = np.arange(1, k + 1, dtype=np.int64)
        table.append(_extreme_ratio(arr[k] - arr[k - 1 :: -1], dens, maximize=False) / scale)
    return tuple(table)


def forward_slope(v: SymmetricValuation, k: int) -> Fraction:
    """Full-window forward slope, 0 once every item is held."""
    if k == v.m:
        return Fraction(0)
    return forward_slope_table(v)[k]


def backward_slope(v: SymmetricValuation, k: int) -> Optional[Fraction]:
    """Full-window backward slope, None for the empty bundle."""
    return backward_slope_table(v)[k]


def sorted_forward_slopes(v: SymmetricValuation) -> Tuple[Fraction, ...]:
    return tuple(sorted(forward_slope_table(v)))


def _cross(o: Tuple[int, Fraction], a: Tuple[int, Fraction], b: Tuple[int, Fraction]) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@lru_cache(maxsize=256)
def sm_closure(v: SymmetricValuation) -> TriangleDecomposition:
    """
    Smallest concave majorant of ``v`` and its triangle decomposition.

    The majorant is the upper hull of the points ``(k, v(k))``. Every size
    where ``v`` touches the hull is an intersection index, including sizes
    lying on a hull edge.
    """
    vals = v.values
    m = v.m
    hull: List[Tuple[int, Fraction]] = []
    for point in enumerate(vals):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], point) >= 0:
            hull.pop()
        hull.append(point)

    closure = [Fraction(0)] * (m + 1)
    for (a, va), (b, vb) in zip(hull, hull[1:]):
        rise = (vb - va) / (b - a)
        for k in range(a, b + 1):
            closure[k] = va + rise * (k - a)

    indices = tuple(k for k in range(m + 1) if vals[k] == closure[k])
    slopes = tuple(
        (vals[b] - vals[a]) / (b - a) for a, b in zip(indices, indices[1:])
    )
    logger.debug("closure of m=%d valuation touches at %d sizes", m, len(indices))
    return TriangleDecomposition(indices, slopes, SymmetricValuation(tuple(closure)))


def triangle_of(v: SymmetricValuation, k: int) -> Triangle:
    """The triangle of ``v`` containing bundle size ``k``."""
    return sm_closure(v).triangle_at(k)


def flat_function(v: SymmetricValuation) -> SymmetricValuation:
    """The valuation worth nothing below ``m`` items and ``v(m)`` at ``m``."""
    top, m = v.values[-1], v.m
    return SymmetricValuation.from_function(m, lambda k: top if k == m else 0)


def flat_slopes(v: SymmetricValuation) -> Tuple[Fraction, ...]:
    """Slope ``v(m) / (m - k)`` from ``(k, 0)`` to ``(m, v(m))`` for ``k = 0..m-1``."""
    top, m = v.values[-1], v.m
    return tuple(top / (m - k) for k in range(m))


def count_c_bad(v: SymmetricValuation, c: RationalLike) -> int:
    """
    Number of sizes whose forward slope exceeds ``c`` times the flat slope.

    Raises:
        MalformedInput: If ``c < 1``
    """
    c = parse_rational(c)
    if c < 1:
        raise MalformedInput(f"c must be at least 1, got {c}")
    threshold = c * v.values[-1] / v.m
    return sum(1 for slope in forward_slope_table(v) if slope > threshold)


def c_bad_bound(m: int, c: RationalLike) -> int:
    """Upper bound on ``count_c_bad`` for subadditive valuations over ``m`` items."""
    c = parse_rational(c)
    if c < 1:
        raise MalformedInput(f"c must be at least 1, got {c}")
    return m - math.floor((c - 1) * m / c) - 1


def lower_bound_value(v: SymmetricValuation, k: int) -> Fraction:
    """
    Lower bound ``k * min_{k' < k} forward_slope(k')`` on ``v(k)``.

    Raises:
        NotSubadditive: If ``v`` is not subadditive
        IndexOutOfRange: If ``k`` is not in ``1..m``
    """
    if not is_subadditive(v):
        raise NotSubadditive("lower_bound_value requires a subadditive valuation")
    if not 1 <= k <= v.m:
        raise IndexOutOfRange(f"need 1 <= k <= {v.m}, got k={k}")
    return k * min(forward_slope_table(v)[:k])
