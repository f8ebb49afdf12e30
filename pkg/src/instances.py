"""
Named markets used as fixtures and worked examples.
"""

import logging
from fractions import Fraction
from typing import Callable, Dict, Tuple

from .equilibrium import Allocation, TwoPriceSystem
from .errors import UnknownInstance
from .valuations import SymmetricValuation, ValuationProfile, unit_demand_general

logger = logging.getLogger(__name__)

# Instances whose values only follow the shape of a drawing
APPROXIMATE_INSTANCES = frozenset({"fig1"})


def no_ce_market() -> ValuationProfile:
    """
    Two buyers over four items with no conditional equilibrium.

    Buyer 0 values any one to three items at 1 and all four at 2; buyer 1
    values every non-empty bundle at 9/10.
    """
    buyer0 = SymmetricValuation.from_values((0, 1, 1, 1, 2))
    buyer1 = SymmetricValuation.from_function(4, lambda k: Fraction(9, 10) if k else 0)
    return ValuationProfile((buyer0, buyer1))


def crossed_unit_demand_market() -> ValuationProfile:
    """Two unit-demand buyers over two items, each preferring a different item."""
    return ValuationProfile((unit_demand_general((2, 1)), unit_demand_general((1, 2))))


def closure_figure_valuation() -> SymmetricValuation:
    """
    A 23-item valuation whose closure touches it at 0-5, 13 and 21-23.

    Values between the contact points are chosen to reproduce the shape only.
    """
    values = [0, 6, 11, 15, 18, 20] + [20] * 7 + [28] + [28] * 7 + [32] * 3
    return SymmetricValuation.from_values(values)


def step_valuation_27() -> SymmetricValuation:
    """27 identical items with value rising by one at sizes 1, 5, 11, 17, 23 and 27."""
    steps = ((1, 1), (5, 2), (11, 3), (17, 4), (23, 5), (27, 6))

    def value(k: int) -> int:
        return max((level for start, level in steps if k >= start), default=0)

    return SymmetricValuation.from_function(27, value)


def step_valuation_3461() -> SymmetricValuation:
    """3461 identical items with three step regimes of widths 30, 50 and 30."""

    def value(k: int) -> int:
        if k == 0:
            return 0
        if k <= 480:
            return (k - 1) // 30 + 1
        if k <= 2980:
            return (k - 481) // 50 + 17
        return (k - 2981) // 30 + 67

    return SymmetricValuation.from_function(3461, value)


_BUILDERS: Dict[str, Callable[[], ValuationProfile]] = {
    "ex3.2": no_ce_market,
    "prop4.3": crossed_unit_demand_market,
    "fig1": lambda: ValuationProfile((closure_figure_valuation(),)),
    "appendixE": lambda: ValuationProfile((step_valuation_27(),) * 2),
    "thm7.2": lambda: ValuationProfile((step_valuation_3461(),) * 2),
}

INSTANCE_NAMES = tuple(_BUILDERS)


def build_paper_instance(name: str) -> ValuationProfile:
    """
    Build a named market.

    Args:
        name (str): One of ``INSTANCE_NAMES``

    Raises:
        UnknownInstance: If the name is not known
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownInstance(
            f"unknown instance {name!r}; choose from {', '.join(INSTANCE_NAMES)}"
        ) from None
    if name in APPROXIMATE_INSTANCES:
        logger.warning("Instance %s only approximates its source values", name)
    return builder()


def paper_equilibrium(name: str) -> Tuple[Allocation, TwoPriceSystem]:
    """
    The equilibrium stated alongside a named market.

    ``ex3.2`` gives all items to buyer 0 with high price 9/10 and low price
    1/3. ``prop4.3`` gives each buyer its less preferred item at price 1
    with zero low prices.
    """
    if name == "ex3.2":
        return (
            Allocation.symmetric((4, 0)),
            TwoPriceSystem((Fraction(9, 10),) * 4, (Fraction(1, 3),) * 4),
        )
    if name == "prop4.3":
        return Allocation.general(2, ([1], [0])), TwoPriceSystem.zero_low((1, 1))
    raise UnknownInstance(f"no stated equilibrium for instance {name!r}")
