"""
Equilibrium verification, discrepancy and welfare.

A two-price equilibrium (2PE) gives every item a high price, paid by buyers
acquiring it, and a low price, forgone by its owner when giving it up. Every
buyer must weakly prefer its bundle to every other bundle ``T``:

    v_i(S_i) - low(S_i \\ T) >= v_i(T) - high(T \\ S_i)

Walrasian (WE) and conditional equilibria (CE) are the special cases
``high == low`` and ``low == 0``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import active_limits
from .errors import (
    CountMismatch,
    DimensionMismatch,
    InstanceTooLarge,
    MalformedInput,
    NotAnEquilibrium,
    PriceOrderViolation,
    TwoPriceError,
    ZeroWelfare,
)
from .geometry import (
    backward_slope_table,
    forward_slope_table,
    min_backward_slope,
    sm_closure,
)
from .lp import solve_exact
from .valuations import (
    GeneralValuation,
    RationalLike,
    SymmetricValuation,
    Valuation,
    ValuationProfile,
    items_of,
    mask_of,
    parse_rational,
    popcount,
    subset_sums,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Allocation:
    """
    Partition of all ``m`` items among buyers.

    ``bundles[i]`` is the bitmask of buyer ``i``'s items. Allocations built
    from counts give buyer 0 items ``0..k_0-1``, buyer 1 the next ``k_1``
    items, and so on.
    """

    m: int
    bundles: Tuple[int, ...]

    def __post_init__(self):
        bundles = tuple(int(b) for b in self.bundles)
        if not bundles:
            raise MalformedInput("an allocation needs at least one buyer")
        full = (1 << self.m) - 1
        seen = 0
        for i, bundle in enumerate(bundles):
            if bundle < 0 or bundle & ~full:
                raise MalformedInput(f"bundle of buyer {i} names items outside 0..{self.m - 1}")
            if bundle & seen:
                raise MalformedInput(f"bundle of buyer {i} overlaps an earlier bundle")
            seen |= bundle
        if seen != full:
            raise MalformedInput(f"items {items_of(full ^ seen)} are not allocated")
        object.__setattr__(self, "bundles", bundles)

    @classmethod
    def symmetric(cls, counts: Sequence[int]) -> "Allocation":
        """Contiguous blocks of the given sizes."""
        counts = [int(k) for k in counts]
        if any(k < 0 for k in counts):
            raise CountMismatch(f"bundle sizes must be non-negative: {counts}")
        bundles, start = [], 0
        for k in counts:
            bundles.append(((1 << k) - 1) << start)
            start += k
        return cls(start, tuple(bundles))

    @classmethod
    def general(cls, m: int, bundles: Sequence[Union[int, Iterable[int]]]) -> "Allocation":
        """Bundles given as bitmasks or as iterables of item indices."""
        masks = [b if isinstance(b, int) else mask_of(b) for b in bundles]
        return cls(m, tuple(masks))

    @property
    def n(self) -> int:
        return len(self.bundles)

    @property
    def counts(self) -> Tuple[int, ...]:
        return tuple(popcount(b) for b in self.bundles)

    def owners(self) -> Tuple[int, ...]:
        """Buyer holding each item."""
        owner = [0] * self.m
        for i, bundle in enumerate(self.bundles):
            for j in items_of(bundle):
                owner[j] = i
        return tuple(owner)


@dataclass(frozen=True)
class UniformPrices:
    """One high and one low price per buyer, applied to every item of its bundle."""

    high: Tuple[Fraction, ...]
    low: Tuple[Fraction, ...]

    def __post_init__(self):
        high = tuple(parse_rational(p) for p in self.high)
        low = tuple(parse_rational(p) for p in self.low)
        if len(high) != len(low):
            raise DimensionMismatch("high and low price lists differ in length")
        for i, (h, l) in enumerate(zip(high, low)):
            if l < 0:
                raise PriceOrderViolation(f"buyer {i}: negative low price {l}")
            if h < l:
                raise PriceOrderViolation(f"buyer {i}: high price {h} below low price {l}")
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "low", low)

    @property
    def n(self) -> int:
        return len(self.high)

    def expand(self, allocation: Allocation) -> "TwoPriceSystem":
        """Per-item prices: each item priced at its owner's uniform prices."""
        if allocation.n != self.n:
            raise DimensionMismatch(f"{self.n} price pairs for {allocation.n} buyers")
        owners = allocation.owners()
        return TwoPriceSystem(
            tuple(self.high[i] for i in owners), tuple(self.low[i] for i in owners)
        )


@dataclass(frozen=True)
class TwoPriceSystem:
    """
    High and low price per item.

    Raises:
        PriceOrderViolation: If some low price is negative or exceeds its high price
    """

    high: Tuple[Fraction, ...]
    low: Tuple[Fraction, ...]

    def __post_init__(self):
        high = tuple(parse_rational(p) for p in self.high)
        low = tuple(parse_rational(p) for p in self.low)
        if len(high) != len(low):
            raise DimensionMismatch("high and low price vectors differ in length")
        for j, (h, l) in enumerate(zip(high, low)):
            if l < 0:
                raise PriceOrderViolation(f"item {j}: negative low price {l}")
            if h < l:
                raise PriceOrderViolation(f"item {j}: high price {h} below low price {l}")
        object.__setattr__(self, "high", high)
        object.__setattr__(self, "low", low)

    @classmethod
    def single(cls, prices: Sequence[RationalLike]) -> "TwoPriceSystem":
        """Walrasian prices: high and low coincide."""
        prices = tuple(prices)
        return cls(prices, prices)

    @classmethod
    def zero_low(cls, high: Sequence[RationalLike]) -> "TwoPriceSystem":
        return cls(tuple(high), tuple(0 for _ in high))

    @classmethod
    def uniform_from(
        cls, prices: UniformPrices, allocation: Union[Allocation, Sequence[int]]
    ) -> "TwoPriceSystem":
        if not isinstance(allocation, Allocation):
            allocation = Allocation.symmetric(allocation)
        return prices.expand(allocation)

    @property
    def m(self) -> int:
        return len(self.high)

    @property
    def gap(self) -> Fraction:
        """Total difference between high and low prices."""
        return sum((h - l for h, l in zip(self.high, self.low)), Fraction(0))

    def is_uniform_over(self, allocation: Allocation) -> bool:
        for bundle in allocation.bundles:
            items = items_of(bundle)
            if len({self.high[j] for j in items}) > 1 or len({self.low[j] for j in items}) > 1:
                return False
        return True


@dataclass(frozen=True)
class Witness:
    """
    A deviation showing an equilibrium condition fails.

    The buyer's current side ``lhs`` is strictly below the deviation side ``rhs``.
    """

    buyer: int
    size: int
    lhs: Fraction
    rhs: Fraction
    condition: str = "utility"
    bundle: Optional[int] = None

    def to_dict(self) -> Dict:
        return {
            "buyer": self.buyer,
            "condition": self.condition,
            "bundle": None if self.bundle is None else items_of(self.bundle),
            "size": self.size,
            "lhs": self.lhs,
            "rhs": self.rhs,
        }


@dataclass(frozen=True)
class EquilibriumReport:
    holds: bool
    witness: Optional[Witness] = None

    def __post_init__(self):
        if self.holds == (self.witness is not None):
            raise ValueError("a report carries a witness exactly when it fails")

    def __bool__(self) -> bool:
        return self.holds

    def to_dict(self) -> Dict:
        return {
            "holds": self.holds,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


HOLDS = EquilibriumReport(True)


@dataclass(frozen=True)
class DiscrepancyResult:
    """
    Best split found by ``min_discrepancy``.

    ``exact`` is set when the value is the certified minimum over all
    two-price equilibria of the split, which holds for two buyers.
    """

    allocation: Allocation
    prices: UniformPrices
    discrepancy: Fraction
    exact: bool


def _check_market(v: ValuationProfile, S: Allocation, n_prices: Optional[int] = None) -> None:
    if S.m != v.m:
        raise DimensionMismatch(f"allocation covers {S.m} items, market has {v.m}")
    if S.n != v.n:
        raise DimensionMismatch(f"allocation has {S.n} bundles, market has {v.n} buyers")
    if n_prices is not None and n_prices != v.m:
        raise DimensionMismatch(f"{n_prices} prices for {v.m} items")


def _require_enumerable(m: int) -> None:
    cap = active_limits().max_general_m
    if m > cap:
        raise InstanceTooLarge(f"enumerating 2^{m} bundles exceeds the cap of m = {cap}")


def _check_counts(v: ValuationProfile, counts: Sequence[int]) -> Tuple[int, ...]:
    if not v.is_symmetric:
        raise MalformedInput("bundle counts only describe symmetric markets")
    counts = tuple(int(k) for k in counts)
    if len(counts) != v.n:
        raise DimensionMismatch(f"{len(counts)} counts for {v.n} buyers")
    if any(k < 0 for k in counts) or sum(counts) != v.m:
        raise CountMismatch(f"counts {list(counts)} do not split {v.m} items")
    return counts


def _common_scale(valuations: Sequence[Valuation], prices: Sequence[Fraction] = ()) -> int:
    scales = [b.grid[1] for b in valuations] + [p.denominator for p in prices]
    return reduce(math.lcm, scales, 1)


def _scaled(values: Sequence[Fraction], scale: int) -> np.ndarray:
    ints = [x.numerator * (scale // x.denominator) for x in values]
    bound = max((abs(i) for i in ints), default=0)
    return np.array(ints, dtype=np.int64 if bound * (len(ints) + 2) < 2**62 else object)


def _rescale(v: Valuation, scale: int, headroom: int) -> np.ndarray:
    """Values of ``v`` multiplied by ``scale``, with room for ``headroom`` additions."""
    arr, own_scale = v.grid
    factor = scale // own_scale
    if arr.dtype != object and int(np.abs(arr).max()) * factor * (headroom + 2) < 2**62:
        return arr * factor
    return arr.astype(object) * factor


def _count_violation(
    v: SymmetricValuation, i: int, own: int, full: int, high, low
) -> Optional[Witness]:
    """
    Best deviation of a buyer whose value depends on bundle size only.

    For each number of dropped items the buyer drops its highest low prices,
    and for each number of bought items it buys the cheapest high prices.
    """
    own_items = sorted(items_of(own), key=lambda j: (-low[j], j))
    other_items = sorted(items_of(full ^ own), key=lambda j: (high[j], j))
    dropped = list(itertools.accumulate((low[j] for j in own_items), initial=Fraction(0)))
    bought = list(itertools.accumulate((high[j] for j in other_items), initial=Fraction(0)))
    vals, k = v.values, len(own_items)
    for d in range(k, -1, -1):
        lhs = vals[k] - dropped[d]
        for e in range(len(other_items) + 1):
            rhs = vals[k - d + e] - bought[e]
            if rhs > lhs:
                bundle = mask_of(own_items[d:]) | mask_of(other_items[:e])
                return Witness(i, k - d + e, lhs, rhs, "utility", bundle)
    return None


def _bundle_violation(v: GeneralValuation, i: int, own: int, high, low) -> Optional[Witness]:
    """First bundle, in bitmask order, a buyer strictly prefers to its own."""
    _require_enumerable(v.m)
    scale = _common_scale([v], list(high) + list(low))
    vals = _rescale(v, scale, v.m)
    lows = subset_sums(_scaled(low, scale))
    highs = subset_sums(_scaled(high, scale))
    index = np.arange(1 << v.m, dtype=np.int64)
    lhs = vals[own] - lows[own & ~index]
    rhs = vals - highs[index & ~own]
    bad = np.flatnonzero(rhs > lhs)
    if not len(bad):
        return None
    t = int(bad[0])
    return Witness(
        i, popcount(t), Fraction(int(lhs[t]), scale), Fraction(int(rhs[t]), scale), "utility", t
    )


def is_2pe(v: ValuationProfile, S: Allocation, P: TwoPriceSystem) -> EquilibriumReport:
    """
    Check that every buyer maximizes utility under two-price rules.

    Symmetric buyers are checked by counts (exact for any per-item prices);
    general buyers by enumerating all ``2^m`` bundles.

    Args:
        v: Valuation profile
        S: Complete allocation
        P: High and low price per item

    Returns:
        EquilibriumReport: With the first violating buyer and bundle on failure

    Raises:
        DimensionMismatch: If the allocation or prices do not fit the market
        InstanceTooLarge: If a general buyer has too many items to enumerate
    """
    _check_market(v, S, P.m)
    full = (1 << v.m) - 1
    for i, vi in enumerate(v.buyers):
        if isinstance(vi, SymmetricValuation):
            witness = _count_violation(vi, i, S.bundles[i], full, P.high, P.low)
        else:
            witness = _bundle_violation(vi, i, S.bundles[i], P.high, P.low)
        if witness is not None:
            logger.debug("2PE fails for buyer %d at bundle size %d", i, witness.size)
            return EquilibriumReport(False, witness)
    return HOLDS


def is_we(v: ValuationProfile, S: Allocation, p: Sequence[RationalLike]) -> EquilibriumReport:
    """A Walrasian equilibrium is a 2PE whose high and low prices coincide."""
    return is_2pe(v, S, TwoPriceSystem.single(p))


def is_ce(v: ValuationProfile, S: Allocation, p: Sequence[RationalLike]) -> EquilibriumReport:
    """
    Check individual rationality and outward stability.

    Outward stability: no buyer gains by adding items at their prices to
    its bundle. Market clearance holds for every ``Allocation``.
    """
    prices = tuple(parse_rational(x) for x in p)
    _check_market(v, S, len(prices))
    if any(x < 0 for x in prices):
        raise PriceOrderViolation("prices must be non-negative")
    full = (1 << v.m) - 1
    for i, vi in enumerate(v.buyers):
        own = S.bundles[i]
        utility = vi.of_bundle(own) - sum((prices[j] for j in items_of(own)), Fraction(0))
        if utility < 0:
            return EquilibriumReport(
                False, Witness(i, 0, utility, Fraction(0), "individual_rationality", 0)
            )
        if isinstance(vi, SymmetricValuation):
            k = popcount(own)
            others = sorted(items_of(full ^ own), key=lambda j: (prices[j], j))
            cost = Fraction(0)
            for e, j in enumerate(others, start=1):
                cost += prices[j]
                gain = vi.values[k + e] - vi.values[k] - cost
                if gain > 0:
                    bundle = own | mask_of(others[:e])
                    witness = Witness(
                        i, k + e, utility, utility + gain, "outward_stability", bundle
                    )
                    return EquilibriumReport(False, witness)
            continue
        _require_enumerable(v.m)
        scale = _common_scale([vi], prices)
        vals = _rescale(vi, scale, v.m)
        price_sums = subset_sums(_scaled(prices, scale))
        index = np.arange(1 << v.m, dtype=np.int64)
        extra = index[(index & own) == 0]
        gains = vals[own | extra] - vals[own] - price_sums[extra]
        bad = np.flatnonzero(gains > 0)
        if len(bad):
            t = int(extra[bad[0]])
            gain = Fraction(int(gains[bad[0]]), scale)
            return EquilibriumReport(
                False,
                Witness(
                    i, popcount(own | t), utility, utility + gain, "outward_stability", own | t
                ),
            )
    return HOLDS


def welfare(v: ValuationProfile, S: Allocation) -> Fraction:
    _check_market(v, S)
    return sum((vi.of_bundle(b) for vi, b in zip(v.buyers, S.bundles)), Fraction(0))


def _opt_symmetric(v: ValuationProfile) -> Tuple[Fraction, Allocation]:
    m, n = v.m, v.n
    scale = _common_scale(v.buyers)
    tables = [_rescale(b, scale, n) for b in v.buyers]
    # best[i][r]: most welfare buyers i..n-1 reach sharing exactly r items
    best = [None] * n
    best[n - 1] = tables[n - 1]
    for i in range(n - 2, -1, -1):
        cur, nxt = tables[i], best[i + 1]
        best[i] = np.array([(cur[: r + 1] + nxt[r::-1]).max() for r in range(m + 1)])
    counts, r = [], m
    for i in range(n - 1):
        candidates = tables[i][: r + 1] + best[i + 1][r::-1]
        k = int(np.flatnonzero(candidates == best[i][r])[0])
        counts.append(k)
        r -= k
    counts.append(r)
    return Fraction(int(best[0][m]), scale), Allocation.symmetric(counts)


def _opt_general(v: ValuationProfile) -> Tuple[Fraction, Allocation]:
    m, n = v.m, v.n
    _require_enumerable(m)
    full = (1 << m) - 1
    scale = _common_scale(v.buyers)
    vals = [_rescale(b, scale, n).tolist() for b in v.buyers]
    # levels[i][mask]: most welfare buyers i..n-1 reach sharing exactly mask
    levels: List[Optional[list]] = [None] * n
    levels[n - 1] = vals[n - 1]
    for i in range(n - 2, 0, -1):
        nxt, table = levels[i + 1], [0] * (full + 1)
        for mask in range(full + 1):
            best = vals[i][0] + nxt[mask]
            sub = mask
            while sub:
                best = max(best, vals[i][sub] + nxt[mask ^ sub])
                sub = (sub - 1) & mask
            table[mask] = best
        levels[i] = table

    bundles, mask = [], full
    for i in range(n - 1):
        nxt = levels[i + 1]
        choice, best = 0, vals[i][0] + nxt[mask]
        sub = mask
        while sub:
            value = vals[i][sub] + nxt[mask ^ sub]
            if value > best or (value == best and sub < choice):
                choice, best = sub, value
            sub = (sub - 1) & mask
        bundles.append(choice)
        mask ^= choice
    bundles.append(mask)
    S = Allocation(m, tuple(bundles))
    return welfare(v, S), S


def opt_welfare(v: ValuationProfile) -> Tuple[Fraction, Allocation]:
    """
    Maximum welfare over all complete allocations.

    Symmetric markets use a dynamic program over (buyer, items left); general
    markets a subset dynamic program. Ties go to the lexicographically
    smallest allocation (counts, or bitmasks buyer by buyer).

    Returns:
        tuple: (optimal welfare, an optimal allocation)
    """
    if v.n == 1:
        S = Allocation(v.m, ((1 << v.m) - 1,))
        return welfare(v, S), S
    if v.is_symmetric:
        return _opt_symmetric(v)
    return _opt_general(v)


def discrepancy(v: ValuationProfile, S: Allocation, P: TwoPriceSystem) -> Fraction:
    """
    Total price gap divided by the welfare of ``S``.

    Raises:
        ZeroWelfare: If the allocation has zero welfare
    """
    _check_market(v, S, P.m)
    sw = welfare(v, S)
    if sw == 0:
        raise ZeroWelfare("discrepancy is undefined for an allocation with zero welfare")
    return P.gap / sw


def welfare_bound_check(v: ValuationProfile, S: Allocation, P: TwoPriceSystem) -> bool:
    """
    Check ``SW(S) * (1 + d) >= OPT`` for a verified 2PE with discrepancy ``d``.

    Raises:
        NotAnEquilibrium: If ``(S, P)`` is not a 2PE
    """
    report = is_2pe(v, S, P)
    if not report.holds:
        raise NotAnEquilibrium("welfare bound needs a two-price equilibrium", report)
    d = discrepancy(v, S, P)
    opt, _ = opt_welfare(v)
    return welfare(v, S) * (1 + d) >= opt


def uniformize(
    v: ValuationProfile, S: Allocation, P: TwoPriceSystem
) -> Tuple[TwoPriceSystem, EquilibriumReport]:
    """
    Average high and low prices within every bundle of a symmetric 2PE.

    The total gap, and so the discrepancy, is unchanged.

    Raises:
        NotAnEquilibrium: If ``(S, P)`` is not a 2PE
    """
    if not v.is_symmetric:
        raise MalformedInput("uniformize needs a symmetric market")
    report = is_2pe(v, S, P)
    if not report.holds:
        raise NotAnEquilibrium("only a two-price equilibrium can be uniformized", report)
    high, low = list(P.high), list(P.low)
    for bundle in S.bundles:
        items = items_of(bundle)
        if not items:
            continue
        mean_high = sum((P.high[j] for j in items), Fraction(0)) / len(items)
        mean_low = sum((P.low[j] for j in items), Fraction(0)) / len(items)
        for j in items:
            high[j], low[j] = mean_high, mean_low
    uniform = TwoPriceSystem(tuple(high), tuple(low))
    return uniform, is_2pe(v, S, uniform)


def _cheapest_costs(counts: Sequence[int], high: Sequence[Fraction], buyer: int) -> List[Fraction]:
    """``costs[e]``: cheapest price of ``e`` items taken from other buyers' bundles."""
    order = sorted((high[i], i) for i in range(len(counts)) if i != buyer and counts[i] > 0)
    costs = [Fraction(0)]
    for price, i in order:
        for _ in range(counts[i]):
            costs.append(costs[-1] + price)
    return costs


def u2pe_feasible(
    v: ValuationProfile, counts: Sequence[int], U: UniformPrices
) -> EquilibriumReport:
    """
    Check the three conditions making bundle-uniform prices a 2PE.

    1. No owner's low price exceeds another non-empty bundle's high price.
    2. No owner's low price exceeds its backward slope.
    3. Buying extra items from others, cheapest first, never pays off.

    Args:
        v: Symmetric profile
        counts: Bundle size per buyer
        U: One (high, low) pair per buyer

    Raises:
        CountMismatch: If the counts do not split all items
    """
    counts = _check_counts(v, counts)
    if U.n != v.n:
        raise DimensionMismatch(f"{U.n} price pairs for {v.n} buyers")
    nonempty = [i for i in range(v.n) if counts[i] > 0]
    for i in nonempty:
        vals, k = v[i].values, counts[i]
        for other in nonempty:
            if other != i and U.low[i] > U.high[other]:
                # swap one own item for one of the other buyer's
                return EquilibriumReport(
                    False,
                    Witness(i, k, vals[k] - U.low[i], vals[k] - U.high[other], "low_above_high"),
                )
        query = min_backward_slope(v[i], k)
        if U.low[i] > query.value:
            l = query.realizer
            return EquilibriumReport(
                False,
                Witness(i, k - l, vals[k] - l * U.low[i], vals[k - l], "low_above_backward_slope"),
            )
    for i in range(v.n):
        vals, k = v[i].values, counts[i]
        costs = _cheapest_costs(counts, U.high, i)
        for t in range(k + 1, v.m + 1):
            if vals[t] - costs[t - k] > vals[k]:
                return EquilibriumReport(
                    False, Witness(i, t, vals[k], vals[t] - costs[t - k], "buying_pays_off")
                )
    return HOLDS


def _forward_or_zero(v: SymmetricValuation, k: int) -> Fraction:
    return Fraction(0) if k == v.m else forward_slope_table(v)[k]


def _canonical_prices(v: ValuationProfile, counts: Tuple[int, ...]) -> UniformPrices:
    n = v.n
    if n == 1:
        return UniformPrices((Fraction(0),), (Fraction(0),))
    forward = [_forward_or_zero(v[i], counts[i]) for i in range(n)]
    high = tuple(max(forward[j] for j in range(n) if j != i) for i in range(n))
    cap = min(high[i] for i in range(n) if counts[i] > 0)
    low = tuple(
        min(backward_slope_table(v[i])[counts[i]], cap) if counts[i] > 0 else Fraction(0)
        for i in range(n)
    )
    return UniformPrices(high, low)


def u2pe_sufficient_prices(v: ValuationProfile, counts: Sequence[int]) -> UniformPrices:
    """
    Canonical bundle-uniform prices for a split.

    A buyer's high price is the steepest forward slope among the other
    buyers. Its low price is its own backward slope, capped by the smallest
    high price of a non-empty bundle. Buyers with empty bundles get a low
    price of 0 and do not take part in the cap.

    Raises:
        CountMismatch: If the counts do not split all items
    """
    return _canonical_prices(v, _check_counts(v, counts))


def _split_discrepancy(
    v: ValuationProfile, counts: Tuple[int, ...]
) -> Tuple[UniformPrices, Optional[Fraction]]:
    prices = _canonical_prices(v, counts)
    sw = sum((v[i].values[counts[i]] for i in range(v.n)), Fraction(0))
    if sw == 0:
        return prices, None
    gap = sum(
        (counts[i] * (prices.high[i] - prices.low[i]) for i in range(v.n)), Fraction(0)
    )
    return prices, gap / sw


def allocation_discrepancy_two(
    v: ValuationProfile, counts: Sequence[int]
) -> Tuple[UniformPrices, Fraction]:
    """
    Discrepancy of a split under its canonical prices.

    For two buyers this is the smallest discrepancy of any 2PE with this split.

    Raises:
        ZeroWelfare: If the split has zero welfare
    """
    prices, d = _split_discrepancy(v, _check_counts(v, counts))
    if d is None:
        raise ZeroWelfare(f"split {list(counts)} has zero welfare")
    return prices, d


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    """All ways to write ``total`` as ``parts`` non-negative counts, lexicographically."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def min_discrepancy(v: ValuationProfile) -> DiscrepancyResult:
    """
    Split with the smallest discrepancy under canonical prices.

    Every split is scanned. For two buyers the result is the exact minimum
    discrepancy over all 2PE; for more buyers it is an upper bound.

    Raises:
        InstanceTooLarge: If there are more splits than the configured budget
        ZeroWelfare: If every split has zero welfare
    """
    if not v.is_symmetric:
        raise MalformedInput("min_discrepancy needs a symmetric market")
    n, m = v.n, v.m
    splits = math.comb(m + n - 1, n - 1)
    budget = active_limits().max_compositions
    if splits > budget:
        raise InstanceTooLarge(f"{splits} splits exceed the budget of {budget}")

    best: Optional[Tuple[Fraction, Tuple[int, ...], UniformPrices]] = None
    for counts in _compositions(m, n):
        prices, d = _split_discrepancy(v, counts)
        if d is not None and (best is None or d < best[0]):
            best = (d, counts, prices)
    if best is None:
        raise ZeroWelfare("every split has zero welfare")
    d, counts, prices = best
    logger.debug("minimum discrepancy %s at split %s over %d splits", d, counts, splits)
    return DiscrepancyResult(Allocation.symmetric(counts), prices, d, exact=n <= 2)


def table_rows(v: SymmetricValuation) -> List[Dict]:
    """
    Per-split slopes, canonical prices and discrepancy for two identical buyers.

    One row per split ``(k1, m - k1)`` with ``k1 <= m / 2``. Slopes that are
    undefined and prices of empty bundles are None.
    """
    profile = ValuationProfile((v, v))
    m = v.m
    forward, backward = forward_slope_table(v), backward_slope_table(v)
    rows = []
    for k1 in range(m // 2 + 1):
        k2 = m - k1
        prices, d = _split_discrepancy(profile, (k1, k2))
        rows.append(
            {
                "k1": k1,
                "k2": k2,
                "forward_1": forward[k1] if k1 < m else None,
                "backward_1": backward[k1],
                "forward_2": forward[k2] if k2 < m else None,
                "backward_2": backward[k2],
                "high_1": prices.high[0] if k1 else None,
                "high_2": prices.high[1] if k2 else None,
                "low_1": prices.low[0] if k1 else None,
                "low_2": prices.low[1] if k2 else None,
                "discrepancy": d,
            }
        )
    return rows


def we_exists_symmetric(v: ValuationProfile) -> Optional[Tuple[Allocation, Fraction]]:
    """
    Find a Walrasian equilibrium of a symmetric market, if one exists.

    A WE exists exactly when some split puts every buyer on an intersection
    index of its closure with all forward slopes below all backward slopes.
    Candidate prices are the closure slopes; for each, a reachability pass
    over bundle sizes decides whether acceptable sizes add up to ``m``.

    Returns:
        tuple: (allocation, price), or None when no WE exists. The price is
        the largest forward slope of the chosen split.
    """
    if not v.is_symmetric:
        raise MalformedInput("we_exists_symmetric needs a symmetric market")
    n, m = v.n, v.m
    if n == 1:
        return Allocation.symmetric((m,)), Fraction(0)
    decompositions = [sm_closure(b) for b in v.buyers]
    candidates = sorted({Fraction(0)} | {a for d in decompositions for a in d.slopes})
    everything = (1 << (m + 1)) - 1
    for price in candidates:
        acceptable = []
        for b, dec in zip(v.buyers, decompositions):
            acceptable.append(
                [
                    k
                    for k in dec.intersection_indices
                    if _forward_or_zero(b, k) <= price
                    and (k == 0 or backward_slope_table(b)[k] >= price)
                ]
            )
        # reach[i]: bitset of totals buyers i..n-1 can take
        reach = [0] * n + [1]
        for i in range(n - 1, -1, -1):
            bits = 0
            for k in acceptable[i]:
                bits |= reach[i + 1] << k
            reach[i] = bits & everything
        if not reach[0] >> m & 1:
            continue
        counts, r = [], m
        for i in range(n):
            k = next(k for k in acceptable[i] if k <= r and reach[i + 1] >> (r - k) & 1)
            counts.append(k)
            r -= k
        p = max(_forward_or_zero(b, k) for b, k in zip(v.buyers, counts))
        report = u2pe_feasible(v, counts, UniformPrices((p,) * n, (p,) * n))
        if not report.holds:
            raise NotAnEquilibrium("constructed Walrasian equilibrium failed verification", report)
        logger.debug("Walrasian equilibrium at split %s with price %s", counts, p)
        return Allocation.symmetric(counts), p
    return None


def opt_discrepancy_upper_bound(
    v: ValuationProfile,
) -> Tuple[Allocation, TwoPriceSystem, Fraction]:
    """
    2PE on a welfare-optimal allocation with discrepancy at most ``m``.

    Every item's high price is the full value its owner gets from its bundle;
    low prices are 0.

    Returns:
        tuple: (optimal allocation, prices, discrepancy)
    """
    general = v.as_general()
    _require_enumerable(general.m)
    _, S = opt_welfare(general)
    owners = S.owners()
    P = TwoPriceSystem.zero_low(
        tuple(general[owners[j]].of_bundle(S.bundles[owners[j]]) for j in range(v.m))
    )
    report = is_2pe(general, S, P)
    if not report.holds:
        raise NotAnEquilibrium("optimal-allocation prices failed verification", report)
    d = discrepancy(general, S, P)
    if d > v.m:
        raise TwoPriceError(f"discrepancy {d} exceeds the item count {v.m}")
    return S, P, d


def _indicator(mask: int, m: int, sign: int = 1) -> List[int]:
    return [sign if mask >> j & 1 else 0 for j in range(m)]


def find_ce_prices(v: ValuationProfile, S: Allocation) -> Optional[Tuple[Fraction, ...]]:
    """
    Item prices making ``S`` a conditional equilibrium, or None.

    Solves the linear feasibility system of individual rationality and
    outward stability; the returned prices pass ``is_ce`` exactly.
    """
    general = v.as_general()
    _check_market(general, S)
    m, full = general.m, (1 << general.m) - 1
    rows, bounds = [], []
    for vi, own in zip(general.buyers, S.bundles):
        rows.append(_indicator(own, m))
        bounds.append(vi(own))
        extra = full ^ own
        sub = extra
        while sub:
            rows.append(_indicator(sub, m, -1))
            bounds.append(vi(own) - vi(own | sub))
            sub = (sub - 1) & extra
    return solve_exact(m, rows, bounds, check=lambda p: is_ce(general, S, p).holds)


def find_we_prices(v: ValuationProfile, S: Allocation) -> Optional[Tuple[Fraction, ...]]:
    """Item prices making ``S`` a Walrasian equilibrium, or None."""
    general = v.as_general()
    _check_market(general, S)
    m, full = general.m, (1 << general.m) - 1
    rows, bounds = [], []
    for vi, own in zip(general.buyers, S.bundles):
        for t in range(full + 1):
            if t == own:
                continue
            row = [
                (1 if own >> j & 1 and not t >> j & 1 else 0)
                - (1 if t >> j & 1 and not own >> j & 1 else 0)
                for j in range(m)
            ]
            rows.append(row)
            bounds.append(vi(own) - vi(t))
    return solve_exact(m, rows, bounds, check=lambda p: is_we(general, S, p).holds)


def _all_allocations(m: int, n: int) -> Iterator[Allocation]:
    for owners in itertools.product(range(n), repeat=m):
        bundles = [0] * n
        for j, i in enumerate(owners):
            bundles[i] |= 1 << j
        yield Allocation(m, tuple(bundles))


def _search(v: ValuationProfile, finder, max_m: Optional[int]):
    cap = active_limits().max_search_m if max_m is None else max_m
    if v.m > cap:
        raise InstanceTooLarge(f"searching {v.n}^{v.m} allocations exceeds the cap of m = {cap}")
    for S in _all_allocations(v.m, v.n):
        prices = finder(v, S)
        if prices is not None:
            return S, prices
    return None


def search_ce(
    v: ValuationProfile, max_m: Optional[int] = None
) -> Optional[Tuple[Allocation, Tuple[Fraction, ...]]]:
    """First allocation (in owner-vector order) admitting CE prices, or None."""
    return _search(v, find_ce_prices, max_m)


def search_we(
    v: ValuationProfile, max_m: Optional[int] = None
) -> Optional[Tuple[Allocation, Tuple[Fraction, ...]]]:
    """First allocation (in owner-vector order) admitting WE prices, or None."""
    return _search(v, find_we_prices, max_m)
