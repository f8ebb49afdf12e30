"""
Constructive allocations of identical items with bounded discrepancy.

Both greedy algorithms hand whole closure triangles to the buyer with the
steepest forward slope. When the remaining items no longer fill the chosen
buyer's triangle, they are split between that buyer and the runner-up so
that neither forward slope grows by more than a constant factor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .equilibrium import (
    Allocation,
    TwoPriceSystem,
    UniformPrices,
    u2pe_feasible,
)
from .errors import (
    IndexOutOfRange,
    MalformedInput,
    NoPairFound,
    NotAnEquilibrium,
    NotSubadditive,
    TwoPriceError,
    ZeroWelfare,
)
from .geometry import forward_slope, sm_closure
from .valuations import SymmetricValuation, ValuationProfile, is_subadditive

logger = logging.getLogger(__name__)

# How the prices of a certificate were synthesized
NO_LEFTOVER = "no_leftover"
SHARED_TRIANGLE = "shared_triangle"
LONE_TRIANGLE = "lone_triangle"
LEFTOVER = "leftover"
TWO_GOOD_SPLIT = "two_good_split"


@dataclass(frozen=True)
class GoodPair:
    """
    Split of ``r`` leftover items between buyers ``x`` and ``y``.

    Both forward slopes after the split stay within ``c`` times their
    slopes at the anchors ``k_x`` and ``k_y``.
    """

    l_x: int
    l_y: int
    c: int
    k_x: int
    k_y: int
    r: int


@dataclass(frozen=True)
class Step:
    """
    One move of a greedy allocation.

    ``kind`` is ``"triangle"`` when a buyer took its whole current triangle
    and ``"pair"`` for the final split with ``partner``.
    """

    buyer: int
    kind: str
    length: int
    remaining: int
    slope: Fraction
    partner: Optional[int] = None

    def to_dict(self) -> Dict:
        return {
            "buyer": self.buyer,
            "kind": self.kind,
            "length": self.length,
            "remaining": self.remaining,
            "slope": self.slope,
            "partner": self.partner,
        }


@dataclass(frozen=True)
class AllocationCertificate:
    """
    Bundle sizes with bundle-uniform prices and their discrepancy guarantee.

    Attributes:
        counts: Bundle size per buyer
        prices: One (high, low) price pair per buyer
        discrepancy: Exact discrepancy of the prices on this split
        bound: Guarantee the construction promises, never below ``discrepancy``
        trace: Greedy steps in order
        case: Which price synthesis was used
    """

    counts: Tuple[int, ...]
    prices: UniformPrices
    discrepancy: Fraction
    bound: Fraction
    trace: Tuple[Step, ...] = field(default_factory=tuple)
    case: str = NO_LEFTOVER

    def allocation(self) -> Allocation:
        return Allocation.symmetric(self.counts)

    def two_price_system(self) -> TwoPriceSystem:
        return TwoPriceSystem.uniform_from(self.prices, self.counts)

    def to_dict(self) -> Dict:
        return {
            "counts": list(self.counts),
            "high": list(self.prices.high),
            "low": list(self.prices.low),
            "discrepancy": self.discrepancy,
            "bound": self.bound,
            "case": self.case,
            "trace": [step.to_dict() for step in self.trace],
        }


def _require_subadditive(valuations: Sequence[SymmetricValuation]) -> None:
    for i, v in enumerate(valuations):
        if not is_subadditive(v):
            raise NotSubadditive(f"valuation of buyer {i} is not subadditive")


def _certify(
    profile: ValuationProfile,
    counts: Sequence[int],
    prices: UniformPrices,
    bound: Fraction,
    trace: Sequence[Step],
    case: str,
) -> AllocationCertificate:
    """Check the prices form a 2PE within ``bound`` and package them."""
    counts = tuple(counts)
    report = u2pe_feasible(profile, counts, prices)
    if not report.holds:
        raise NotAnEquilibrium(f"prices for split {list(counts)} are not a 2PE", report)
    sw = sum((v(k) for v, k in zip(profile, counts)), Fraction(0))
    if sw == 0:
        raise ZeroWelfare(f"split {list(counts)} has zero welfare")
    gap = sum(
        (k * (h - l) for k, h, l in zip(counts, prices.high, prices.low)), Fraction(0)
    )
    d = gap / sw
    if d > bound:
        raise TwoPriceError(f"discrepancy {d} exceeds the guaranteed {bound}")
    logger.debug("certified split %s (%s) with discrepancy %s <= %s", counts, case, d, bound)
    return AllocationCertificate(counts, prices, d, bound, tuple(trace), case)


def two_buyer_split(v: SymmetricValuation) -> AllocationCertificate:
    """
    Best 2-good split for two buyers sharing valuation ``v``.

    A size ``k`` is 2-good when its forward slope is at most ``2 v(m) / m``.
    Every split with both sizes 2-good supports high prices equal to the
    partner's forward slope and zero low prices, with discrepancy at most 2.
    The split with the smallest discrepancy wins, ties going to smaller ``k1``.

    Raises:
        NotSubadditive: If ``v`` is not subadditive
        ZeroWelfare: If ``v`` is worth nothing
    """
    _require_subadditive([v])
    m, top = v.m, v(v.m)
    if top == 0:
        raise ZeroWelfare("the valuation is worth nothing")
    threshold = 2 * top / m
    best = None
    for k1 in range(m + 1):
        k2 = m - k1
        slope1, slope2 = forward_slope(v, k1), forward_slope(v, k2)
        if slope1 > threshold or slope2 > threshold:
            continue
        d = (k1 * slope2 + k2 * slope1) / (v(k1) + v(k2))
        if best is None or d < best[0]:
            best = (d, k1, slope1, slope2)
    if best is None:
        raise TwoPriceError("no 2-good split exists")
    _, k1, slope1, slope2 = best
    prices = UniformPrices((slope2, slope1), (Fraction(0), Fraction(0)))
    profile = ValuationProfile((v, v))
    return _certify(profile, (k1, m - k1), prices, Fraction(2), (), TWO_GOOD_SPLIT)


def find_good_pair(
    v_x: SymmetricValuation,
    v_y: SymmetricValuation,
    k_x: int,
    k_y: int,
    r: int,
    c: int,
    half_constraint: bool = False,
) -> GoodPair:
    """
    Split ``r`` items between ``x`` and ``y`` keeping both slopes c-bounded.

    Args:
        v_x, v_y: Valuations of the two buyers
        k_x (int): Current size of ``x``, a closure intersection index
        k_y (int): Current size of ``y``, a closure intersection index
        r (int): Items to split, fewer than ``x``'s current triangle holds
        c (int): Slope factor, 2 or 3
        half_constraint (bool): Give ``x`` at least half the items (c = 3 only)

    Returns:
        GoodPair: The feasible pair with the smallest ``l_x``

    Raises:
        MalformedInput: If ``c`` or ``half_constraint`` is not allowed
        IndexOutOfRange: If the anchors or ``r`` do not fit
        NoPairFound: If no pair qualifies
    """
    if c not in (2, 3):
        raise MalformedInput(f"slope factor must be 2 or 3, got {c}")
    if half_constraint and c != 3:
        raise MalformedInput("the half constraint only applies with factor 3")
    closure_x, closure_y = sm_closure(v_x), sm_closure(v_y)
    if not closure_x.is_intersection(k_x) or not closure_y.is_intersection(k_y):
        raise IndexOutOfRange(f"anchors ({k_x}, {k_y}) must be closure intersection indices")
    if k_x >= v_x.m:
        raise IndexOutOfRange(f"buyer x already holds all {v_x.m} items")
    length = closure_x.triangle_at(k_x).length
    if not 1 <= r < length:
        raise IndexOutOfRange(f"need 1 <= r < {length}, got r={r}")
    if k_x + k_y + r > v_x.m:
        raise IndexOutOfRange(f"{k_x} + {k_y} + {r} items exceed m={v_x.m}")

    limit_x = c * forward_slope(v_x, k_x)
    limit_y = c * forward_slope(v_y, k_y)
    scanned = []
    for l_x in range(math.ceil(Fraction(r, 2)) if half_constraint else 0, r + 1):
        l_y = r - l_x
        slope_x, slope_y = forward_slope(v_x, k_x + l_x), forward_slope(v_y, k_y + l_y)
        if slope_x <= limit_x and slope_y <= limit_y:
            logger.debug("good pair (%d, %d) for r=%d, c=%d", l_x, l_y, r, c)
            return GoodPair(l_x, l_y, c, k_x, k_y, r)
        scanned.append({"l_x": l_x, "l_y": l_y, "forward_x": slope_x, "forward_y": slope_y})
    raise NoPairFound(f"no {c}-good pair for r={r} at ({k_x}, {k_y})", scanned)


def _steepest(
    profile: ValuationProfile, counts: Sequence[int], exclude: Optional[int], fewest: bool
) -> Optional[int]:
    """Buyer with the steepest forward slope; ties to fewest items if asked, then index."""
    best, best_key = None, None
    for i, (v, k) in enumerate(zip(profile, counts)):
        if i == exclude or k == v.m:
            continue
        key = (forward_slope(v, k), -k if fewest else 0)
        if best_key is None or key > best_key:
            best, best_key = i, key
    return best


def _greedy(
    profile: ValuationProfile, c: int, fewest: bool, half_constraint: bool
) -> Tuple[List[int], List[Step], Fraction, int, Optional[int], List[int]]:
    """
    Shared loop of both greedy algorithms.

    Returns:
        tuple: (counts, trace, slope of the last chosen buyer, that buyer,
        its partner in the final split or None, counts before that split)
    """
    counts = [0] * profile.n
    trace: List[Step] = []
    r = profile.m
    theta, x = Fraction(0), None
    while r > 0:
        x = _steepest(profile, counts, None, fewest)
        v_x = profile[x]
        theta = forward_slope(v_x, counts[x])
        t = sm_closure(v_x).triangle_at(counts[x]).length
        if r >= t:
            counts[x] += t
            r -= t
            trace.append(Step(x, "triangle", t, r, theta))
            continue
        y = _steepest(profile, counts, x, fewest)
        pair = find_good_pair(v_x, profile[y], counts[x], counts[y], r, c, half_constraint)
        before = list(counts)
        counts[x] += pair.l_x
        counts[y] += pair.l_y
        trace.append(Step(x, "pair", r, 0, theta, y))
        return counts, trace, theta, x, y, before
    return counts, trace, theta, x, None, list(counts)


def allocate_identical(v: SymmetricValuation, n: int) -> AllocationCertificate:
    """
    Greedy triangle allocation for ``n`` buyers sharing valuation ``v``.

    The buyer with the steepest forward slope takes its whole current
    triangle; ties go to the buyer with fewer items, then the lower index.
    Prices depend on how the loop ended:

    * no leftover: a Walrasian price equal to the last chosen slope;
    * leftover shared by two buyers on the same triangle: high price twice
      that slope everywhere, low price 0;
    * leftover on a triangle only the chosen buyer had reached: high price
      twice its slope, low price equal to its slope outside the two final
      bundles.

    The guarantee is ``max(2, (n + 2) / (n - 1))``.

    Raises:
        NotSubadditive: If ``v`` is not subadditive
    """
    if n < 2:
        raise MalformedInput(f"need at least two buyers, got {n}")
    _require_subadditive([v])
    profile = ValuationProfile((v,) * n)
    bound = max(Fraction(2), Fraction(n + 2, n - 1))
    counts, trace, theta, x, y, before = _greedy(profile, 2, fewest=True, half_constraint=False)
    if y is None:
        prices = UniformPrices((theta,) * n, (theta,) * n)
        return _certify(profile, counts, prices, bound, trace, NO_LEFTOVER)

    closure = sm_closure(v)
    current = closure.triangle_at(before[x])
    shared = any(
        i != x and before[i] < v.m and closure.triangle_at(before[i]) == current
        for i in range(n)
    )
    high = (2 * theta,) * n
    if shared:
        prices = UniformPrices(high, (Fraction(0),) * n)
        return _certify(profile, counts, prices, bound, trace, SHARED_TRIANGLE)
    low = tuple(
        Fraction(0) if i in (x, y) or counts[i] == 0 else theta for i in range(n)
    )
    return _certify(profile, counts, UniformPrices(high, low), bound, trace, LONE_TRIANGLE)


def allocate_heterogeneous(profile: ValuationProfile) -> AllocationCertificate:
    """
    Greedy triangle allocation for buyers with different valuations.

    The buyer with the steepest forward slope (lowest index on ties) takes
    its whole current triangle. Leftover items go to that buyer and the
    runner-up, at least half to the former, with both slopes within three
    times their anchors. High prices are the steepest forward slope among
    the other buyers and low prices are 0, for a guarantee of 6. Without
    leftover the last chosen slope is a Walrasian price and the guarantee is 1.

    Raises:
        NotSubadditive: If some valuation is not subadditive
    """
    if not profile.is_symmetric:
        raise MalformedInput("allocate_heterogeneous needs symmetric valuations")
    n = profile.n
    if n < 2:
        raise MalformedInput(f"need at least two buyers, got {n}")
    _require_subadditive(profile.buyers)
    counts, trace, theta, x, y, _ = _greedy(profile, 3, fewest=False, half_constraint=True)
    if y is None:
        prices = UniformPrices((theta,) * n, (theta,) * n)
        return _certify(profile, counts, prices, Fraction(1), trace, NO_LEFTOVER)
    forward = [forward_slope(v, k) for v, k in zip(profile, counts)]
    high = tuple(max(forward[j] for j in range(n) if j != i) for i in range(n))
    prices = UniformPrices(high, (Fraction(0),) * n)
    return _certify(profile, counts, prices, Fraction(6), trace, LEFTOVER)
