"""
Simultaneous second-price auctions.

Every item is sold in its own second-price auction. A bid profile is a pure
Nash equilibrium when no bidder gains by changing its bids; a deviating
bidder can win any item by outbidding the others and then pays their
highest bid. Deviators never win ties.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Tuple

import numpy as np

from .equilibrium import (
    HOLDS,
    Allocation,
    EquilibriumReport,
    TwoPriceSystem,
    Witness,
    is_2pe,
)
from .errors import DimensionMismatch, MalformedInput, NotAnEquilibrium, PriceOrderViolation
from .valuations import (
    ValuationProfile,
    integer_grid,
    items_of,
    parse_rational,
    popcount,
    subset_sums,
)

logger = logging.getLogger(__name__)

PREFER_ALLOCATION = "alloc"
LOWEST_INDEX = "index"


@dataclass(frozen=True)
class BidProfile:
    """Non-negative bid of every bidder on every item, ``bids[i][j]``."""

    bids: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(parse_rational(b) for b in row) for row in self.bids)
        if not rows:
            raise MalformedInput("a bid profile needs at least one bidder")
        if len({len(row) for row in rows}) != 1:
            raise DimensionMismatch("every bidder must bid on the same items")
        if any(b < 0 for row in rows for b in row):
            raise PriceOrderViolation("bids must be non-negative")
        object.__setattr__(self, "bids", rows)

    @property
    def n(self) -> int:
        return len(self.bids)

    @property
    def m(self) -> int:
        return len(self.bids[0])

    def column(self, j: int) -> Tuple[Fraction, ...]:
        return tuple(row[j] for row in self.bids)


@dataclass(frozen=True)
class TieBreak:
    """
    How an item goes when several bidders tie for the highest bid.

    ``prefer_allocation`` keeps the item with its owner in ``allocation``
    when the owner is among the top bidders; otherwise, and under
    ``lowest_index``, the tied bidder with the lowest index wins.
    """

    rule: str
    allocation: Optional[Allocation] = None

    def __post_init__(self):
        if self.rule not in (PREFER_ALLOCATION, LOWEST_INDEX):
            raise MalformedInput(f"unknown tie-break rule {self.rule!r}")
        if self.rule == PREFER_ALLOCATION and self.allocation is None:
            raise MalformedInput("preferring an allocation needs the allocation")

    @classmethod
    def prefer_allocation(cls, allocation: Allocation) -> "TieBreak":
        return cls(PREFER_ALLOCATION, allocation)

    @classmethod
    def lowest_index(cls) -> "TieBreak":
        return cls(LOWEST_INDEX)


@dataclass(frozen=True)
class AuctionOutcome:
    allocation: Allocation
    payments: Tuple[Fraction, ...]
    tiebreak: str


def _check_bids(v: ValuationProfile, b: BidProfile, tiebreak: TieBreak) -> None:
    if b.n != v.n or b.m != v.m:
        raise DimensionMismatch(f"{b.n}x{b.m} bids for {v.n} buyers and {v.m} items")
    S = tiebreak.allocation
    if S is not None and (S.n != v.n or S.m != v.m):
        raise DimensionMismatch("tie-break allocation does not fit the market")


def _second_highest(column: Sequence[Fraction]) -> Fraction:
    """Second-highest bid counting repeats; 0 for a single bidder."""
    if len(column) < 2:
        return Fraction(0)
    return sorted(column, reverse=True)[1]


def resolve(v: ValuationProfile, b: BidProfile, tiebreak: TieBreak) -> AuctionOutcome:
    """
    Winner and price of every item.

    Raises:
        DimensionMismatch: If the bids do not fit the market
    """
    _check_bids(v, b, tiebreak)
    owners = tiebreak.allocation.owners() if tiebreak.rule == PREFER_ALLOCATION else None
    bundles = [0] * b.n
    payments = []
    for j in range(b.m):
        column = b.column(j)
        top = max(column)
        winners = [i for i, bid in enumerate(column) if bid == top]
        winner = owners[j] if owners is not None and owners[j] in winners else winners[0]
        bundles[winner] |= 1 << j
        payments.append(_second_highest(column))
    return AuctionOutcome(Allocation(b.m, tuple(bundles)), tuple(payments), tiebreak.rule)


def _utility(v: ValuationProfile, outcome: AuctionOutcome, i: int) -> Fraction:
    bundle = outcome.allocation.bundles[i]
    paid = sum((outcome.payments[j] for j in items_of(bundle)), Fraction(0))
    return v[i].of_bundle(bundle) - paid


def utility(v: ValuationProfile, b: BidProfile, i: int, tiebreak: TieBreak) -> Fraction:
    """Value of the items bidder ``i`` wins minus what it pays."""
    return _utility(v, resolve(v, b, tiebreak), i)


def best_response(
    v: ValuationProfile, b: BidProfile, i: int, tiebreak: TieBreak
) -> Tuple[int, Fraction]:
    """
    Most profitable bundle bidder ``i`` can secure against the other bids.

    Winning item ``j`` costs the highest bid of the other bidders on it.

    Returns:
        tuple: (bundle bitmask, utility); the smallest bitmask on ties
    """
    _check_bids(v, b, tiebreak)
    general = v.as_general()
    costs = [
        max((b.bids[k][j] for k in range(b.n) if k != i), default=Fraction(0))
        for j in range(b.m)
    ]
    values = list(general[i].values)
    grid, scale = integer_grid(values + costs)
    cost_sums = subset_sums(grid[len(values):])
    gains = grid[: len(values)] - cost_sums
    best = int(np.argmax(gains))
    return best, Fraction(int(gains[best]), scale)


def is_pne(v: ValuationProfile, b: BidProfile, tiebreak: TieBreak) -> EquilibriumReport:
    """
    Check that no bidder can raise its utility by bidding differently.

    Raises:
        InstanceTooLarge: If bundles over all items cannot be enumerated
    """
    outcome = resolve(v, b, tiebreak)
    for i in range(v.n):
        current = _utility(v, outcome, i)
        bundle, deviation = best_response(v, b, i, tiebreak)
        if deviation > current:
            logger.debug("bidder %d gains %s by deviating", i, deviation - current)
            return EquilibriumReport(
                False, Witness(i, popcount(bundle), current, deviation, "deviation", bundle)
            )
    return HOLDS


def pne_to_two_price(
    v: ValuationProfile, b: BidProfile, tiebreak: TieBreak
) -> Tuple[Allocation, TwoPriceSystem]:
    """
    Two-price equilibrium read off a Nash bid profile.

    High prices are the highest bids and low prices the second-highest.

    Raises:
        NotAnEquilibrium: If the bids are not a PNE
    """
    report = is_pne(v, b, tiebreak)
    if not report.holds:
        raise NotAnEquilibrium("bids are not a pure Nash equilibrium", report)
    outcome = resolve(v, b, tiebreak)
    high = tuple(max(b.column(j)) for j in range(b.m))
    P = TwoPriceSystem(high, outcome.payments)
    report = is_2pe(v, outcome.allocation, P)
    if not report.holds:
        raise NotAnEquilibrium("prices read off the bids are not a 2PE", report)
    return outcome.allocation, P


def two_price_to_pne(v: ValuationProfile, S: Allocation, P: TwoPriceSystem) -> BidProfile:
    """
    Nash bid profile realizing a two-price equilibrium.

    Owners bid the high price on their items and everyone else bids the low
    price. With ties kept by the owner, the auction returns ``S`` and
    charges the low prices.

    Raises:
        NotAnEquilibrium: If ``(S, P)`` is not a 2PE
    """
    report = is_2pe(v, S, P)
    if not report.holds:
        raise NotAnEquilibrium("only a two-price equilibrium maps to Nash bids", report)
    owners = S.owners()
    bids = BidProfile(
        tuple(
            tuple(P.high[j] if owners[j] == i else P.low[j] for j in range(v.m))
            for i in range(v.n)
        )
    )
    tiebreak = TieBreak.prefer_allocation(S)
    outcome = resolve(v, bids, tiebreak)
    if outcome.allocation != S:
        raise NotAnEquilibrium("bids do not reproduce the allocation")
    if v.n >= 2 and outcome.payments != P.low:
        raise NotAnEquilibrium("bids do not charge the low prices")
    report = is_pne(v, bids, tiebreak)
    if not report.holds:
        raise NotAnEquilibrium("bids built from the 2PE are not a Nash equilibrium", report)
    return bids
