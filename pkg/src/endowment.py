"""
Endowment equilibria and their correspondence with two-price equilibria.

An endowed buyer values a bundle ``Y`` at ``v(Y) + g^X(X & Y)``: its base
value plus a gain on the part of its endowment ``X`` it keeps. An endowment
equilibrium is a Walrasian equilibrium of the endowed valuations where every
buyer is endowed with its own bundle.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from .config import active_limits
from .equilibrium import (
    Allocation,
    EquilibriumReport,
    TwoPriceSystem,
    is_2pe,
    is_we,
    opt_welfare,
)
from .errors import InstanceTooLarge, MalformedInput, NotAnEquilibrium, NotXOS
from .valuations import (
    GeneralValuation,
    RationalLike,
    Valuation,
    ValuationClass,
    ValuationProfile,
    classify,
    items_of,
    parse_rational,
    popcount,
    supporting_prices,
)

logger = logging.getLogger(__name__)


class GainKind(Enum):
    IDENTITY = "id"
    ABSOLUTE_LOSS = "al"
    SUPPORTING_PRICES = "sp"
    EXPLICIT = "explicit"


@dataclass(frozen=True)
class GainFunction:
    """
    Gain a buyer draws from keeping part of its endowment.

    Explicit gains are either additive over items (``weights``) or a table
    per endowment bitmask mapping every kept sub-bundle to its gain.
    """

    kind: GainKind
    weights: Optional[Tuple[Fraction, ...]] = None
    tables: Optional[Mapping[int, Mapping[int, Fraction]]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind is GainKind.EXPLICIT and (self.weights is None) == (self.tables is None):
            raise MalformedInput("an explicit gain needs either weights or tables")
        if self.weights is not None:
            weights = tuple(parse_rational(w) for w in self.weights)
            if any(w < 0 for w in weights):
                raise MalformedInput("gain weights must be non-negative")
            object.__setattr__(self, "weights", weights)

    @classmethod
    def identity(cls) -> "GainFunction":
        return cls(GainKind.IDENTITY)

    @classmethod
    def absolute_loss(cls) -> "GainFunction":
        return cls(GainKind.ABSOLUTE_LOSS)

    @classmethod
    def supporting(cls) -> "GainFunction":
        return cls(GainKind.SUPPORTING_PRICES)

    @classmethod
    def additive(cls, weights: Sequence[RationalLike]) -> "GainFunction":
        return cls(GainKind.EXPLICIT, weights=tuple(weights))

    @classmethod
    def explicit(cls, tables: Mapping[int, Mapping[int, RationalLike]]) -> "GainFunction":
        parsed = {
            int(x): {int(z): parse_rational(g) for z, g in table.items()}
            for x, table in tables.items()
        }
        return cls(GainKind.EXPLICIT, tables=parsed)


class SupportingPriceTable:
    """
    Supporting prices per (valuation, endowment), computed once.

    Entries are keyed by valuation value, so equal valuations share them.
    At most ``maxsize`` entries are kept, least recently used first out.
    """

    def __init__(self, maxsize: int = 1024):
        self._lookup = lru_cache(maxsize=maxsize)(supporting_prices)

    def get(self, v: Valuation, bundle: int) -> Tuple[Fraction, ...]:
        return self._lookup(v, bundle)

    def clear(self) -> None:
        self._lookup.cache_clear()

    def __len__(self) -> int:
        return self._lookup.cache_info().currsize


SUPPORTING_PRICES = SupportingPriceTable()


def gain_value(g: GainFunction, v: Valuation, X: int, Z: int) -> Fraction:
    """
    Gain ``g^X(Z)`` of keeping ``Z`` out of endowment ``X``.

    Raises:
        MalformedInput: If ``Z`` is not inside ``X``, or an explicit table lacks it
        NotXOS: For supporting-price gains when ``v`` has none at ``X``
    """
    if Z & ~X:
        raise MalformedInput(f"kept items {items_of(Z)} lie outside the endowment {items_of(X)}")
    if g.kind is GainKind.IDENTITY:
        return v.of_bundle(Z)
    if g.kind is GainKind.ABSOLUTE_LOSS:
        return v.of_bundle(X) - v.of_bundle(X ^ Z)
    if g.kind is GainKind.SUPPORTING_PRICES:
        prices = SUPPORTING_PRICES.get(v, X)
        return sum((prices[j] for j in items_of(Z)), Fraction(0))
    if g.weights is not None:
        return sum((g.weights[j] for j in items_of(Z)), Fraction(0))
    if Z == 0:
        return Fraction(0)
    try:
        return g.tables[X][Z]
    except KeyError:
        raise MalformedInput(
            f"no gain for kept items {items_of(Z)} of endowment {items_of(X)}"
        ) from None


def marginal_gain(g: GainFunction, v: Valuation, X: int, Z: int) -> Fraction:
    """``g^X(Z | X \\ Z)``: what the buyer loses in gain by giving up ``Z``."""
    return gain_value(g, v, X, X) - gain_value(g, v, X, X ^ Z)


@dataclass(frozen=True)
class EndowedValuation:
    """A base valuation plus the gain on the kept part of an endowment."""

    base: Valuation
    endowment: int
    gain: GainFunction

    def value(self, Y: int) -> Fraction:
        kept = Y & self.endowment
        return self.base.of_bundle(Y) + gain_value(self.gain, self.base, self.endowment, kept)

    def general(self) -> GeneralValuation:
        """The endowed valuation as a table over all bundles."""
        m, X = self.base.m, self.endowment
        if m > active_limits().max_general_m:
            raise InstanceTooLarge(f"cannot tabulate 2^{m} endowed bundles")
        gains = {}
        sub = X
        while True:
            gains[sub] = gain_value(self.gain, self.base, X, sub)
            if sub == 0:
                break
            sub = (sub - 1) & X
        return GeneralValuation(
            m, tuple(self.base.of_bundle(Y) + gains[Y & X] for Y in range(1 << m))
        )


def endowed_value(v: Valuation, X: int, g: GainFunction, Y: int) -> Fraction:
    return EndowedValuation(v, X, g).value(Y)


GainSpec = Union[GainFunction, Sequence[GainFunction]]


def _per_buyer(g: GainSpec, n: int) -> List[GainFunction]:
    if isinstance(g, GainFunction):
        return [g] * n
    gains = list(g)
    if len(gains) != n:
        raise MalformedInput(f"{len(gains)} gain functions for {n} buyers")
    return gains


def endowed_profile(v: ValuationProfile, S: Allocation, g: GainSpec) -> ValuationProfile:
    gains = _per_buyer(g, v.n)
    return ValuationProfile(
        tuple(EndowedValuation(vi, S.bundles[i], gains[i]).general() for i, vi in enumerate(v))
    )


def is_ee(
    v: ValuationProfile, S: Allocation, p: Sequence[RationalLike], g: GainSpec
) -> EquilibriumReport:
    """
    Check that ``(S, p)`` is a Walrasian equilibrium of the endowed market.

    Args:
        v: Valuation profile
        S: Allocation, also the endowment of every buyer
        p: Item prices
        g: One gain function for all buyers, or one per buyer

    Raises:
        InstanceTooLarge: If bundles over all items cannot be enumerated
    """
    return is_we(endowed_profile(v, S, g), S, p)


@dataclass(frozen=True)
class GainRequirement:
    """Least marginal gain buyer ``buyer`` must draw from keeping ``bundle``."""

    buyer: int
    bundle: int
    required: Fraction

    def to_dict(self) -> Dict:
        return {"buyer": self.buyer, "bundle": items_of(self.bundle), "required": self.required}


def two_price_to_ee(
    v: ValuationProfile, S: Allocation, P: TwoPriceSystem
) -> Tuple[List[GainRequirement], List[GainFunction], EquilibriumReport]:
    """
    Endowment effect that turns a 2PE into an EE at the high prices.

    Every buyer must lose at least the price gap of the items it gives up.
    The additive gain charging exactly the gap per item meets every
    requirement with equality.

    Returns:
        tuple: (requirements per kept sub-bundle, additive gain per buyer,
        EE report at the high prices)

    Raises:
        NotAnEquilibrium: If ``(S, P)`` is not a 2PE
    """
    report = is_2pe(v, S, P)
    if not report.holds:
        raise NotAnEquilibrium("only a two-price equilibrium converts to an EE", report)
    gap = tuple(h - l for h, l in zip(P.high, P.low))
    requirements = []
    for i, own in enumerate(S.bundles):
        sub = own
        while sub:
            required = sum((gap[j] for j in items_of(sub)), Fraction(0))
            requirements.append(GainRequirement(i, sub, required))
            sub = (sub - 1) & own
    gains = [GainFunction.additive(gap)] * v.n
    ee = is_ee(v, S, P.high, gains)
    if not ee.holds:
        raise NotAnEquilibrium("the additive gap gain does not give an EE", ee)
    return requirements, gains, ee


def _low_price_caps(
    v: Valuation, own: int, high: Sequence[Fraction], g: GainFunction
) -> Dict[int, Fraction]:
    """Largest total low price each given-up sub-bundle may carry."""
    caps = {}
    sub = own
    while sub:
        total_high = sum((high[j] for j in items_of(sub)), Fraction(0))
        caps[sub] = max(Fraction(0), total_high - marginal_gain(g, v, own, sub))
        sub = (sub - 1) & own
    return caps


def _best_low_prices(
    v: Valuation, own: int, high: Sequence[Fraction], g: GainFunction
) -> Dict[int, Fraction]:
    """
    Low prices on one bundle satisfying every sub-bundle cap.

    Candidates are item-by-item caps, the largest uniform price and zero;
    the one with the largest total wins.
    """
    items = items_of(own)
    if not items:
        return {}
    caps = _low_price_caps(v, own, high, g)

    def fits(low: Dict[int, Fraction]) -> bool:
        return all(
            sum((low[j] for j in items_of(sub)), Fraction(0)) <= cap for sub, cap in caps.items()
        )

    candidates = [{j: Fraction(0) for j in items}]
    uniform = min(cap / popcount(sub) for sub, cap in caps.items())
    uniform = min([uniform] + [high[j] for j in items])
    candidates.append({j: uniform for j in items})
    per_item = {j: min(caps[1 << j], high[j]) for j in items}
    if fits(per_item):
        candidates.append(per_item)
    return max(candidates, key=lambda low: sum(low.values()))


def ee_to_two_price(
    v: ValuationProfile, S: Allocation, p_hat: Sequence[RationalLike], g: GainSpec
) -> Tuple[TwoPriceSystem, EquilibriumReport]:
    """
    Two-price equilibrium from an endowment equilibrium.

    High prices stay at ``p_hat``. Low prices are the largest of a few
    candidates whose total on every given-up sub-bundle stays within the
    high price of that sub-bundle minus the gain lost with it; zero low
    prices always qualify.

    Raises:
        NotAnEquilibrium: If ``(S, p_hat)`` is not an EE
    """
    high = tuple(parse_rational(p) for p in p_hat)
    gains = _per_buyer(g, v.n)
    report = is_ee(v, S, high, gains)
    if not report.holds:
        raise NotAnEquilibrium("only an endowment equilibrium converts to a 2PE", report)
    low = [Fraction(0)] * v.m
    for i, own in enumerate(S.bundles):
        for j, price in _best_low_prices(v[i], own, high, gains[i]).items():
            low[j] = price
    P = TwoPriceSystem(high, tuple(low))
    report = is_2pe(v, S, P)
    if not report.holds:
        logger.warning("Low prices from the endowment caps failed; falling back to zero")
        P = TwoPriceSystem.zero_low(high)
        report = is_2pe(v, S, P)
        if not report.holds:
            raise NotAnEquilibrium("high prices of the EE do not form a 2PE", report)
    return P, report


def gain_order_check(v: Valuation, X: int) -> bool:
    """
    Check identity <= supporting prices <= absolute loss on marginal gains.

    Every ``Z`` inside ``X`` is compared on ``g^X(Z | X \\ Z)``.

    Raises:
        InstanceTooLarge: If ``v`` has more items than the gain-order cap
        NotXOS: If ``v`` has no supporting prices at ``X``
    """
    cap = active_limits().gain_order_max_m
    if v.m > cap:
        raise InstanceTooLarge(f"gain order checks are capped at m = {cap}")
    identity, sp = GainFunction.identity(), GainFunction.supporting()
    al = GainFunction.absolute_loss()
    sub = X
    while True:
        lo = marginal_gain(identity, v, X, sub)
        mid = marginal_gain(sp, v, X, sub)
        hi = marginal_gain(al, v, X, sub)
        if not lo <= mid <= hi:
            logger.debug("gain order fails at %s: %s, %s, %s", items_of(sub), lo, mid, hi)
            return False
        if sub == 0:
            return True
        sub = (sub - 1) & X


def xos_ee_exists(
    v: ValuationProfile,
) -> Tuple[Allocation, Tuple[Fraction, ...], EquilibriumReport]:
    """
    EE with supporting-price gains on a welfare-optimal allocation.

    Every item is priced at its owner's supporting price for the owner's
    bundle. The result is also a 2PE with zero low prices.

    Raises:
        NotXOS: If some buyer is not XOS
        InstanceTooLarge: If the market exceeds the gain-order cap
    """
    cap = active_limits().gain_order_max_m
    if v.m > cap:
        raise InstanceTooLarge(f"XOS endowment search is capped at m = {cap}")
    for i, vi in enumerate(v):
        if ValuationClass.XOS not in classify(vi):
            raise NotXOS(f"valuation of buyer {i} is not XOS")
    _, S = opt_welfare(v)
    prices = [Fraction(0)] * v.m
    for vi, own in zip(v, S.bundles):
        support = SUPPORTING_PRICES.get(vi, own)
        for j in items_of(own):
            prices[j] = support[j]
    p_hat = tuple(prices)
    report = is_2pe(v, S, TwoPriceSystem.zero_low(p_hat))
    if not report.holds:
        raise NotAnEquilibrium("supporting prices with zero low prices are not a 2PE", report)
    report = is_ee(v, S, p_hat, GainFunction.supporting())
    if not report.holds:
        raise NotAnEquilibrium("supporting prices do not give an EE", report)
    return S, p_hat, report
