"""
Reproduce the published fixtures and check them cell by cell.
"""

import logging
from fractions import Fraction
from typing import Any, Callable, Dict

from .equilibrium import discrepancy, is_2pe, is_ce, min_discrepancy, search_ce, table_rows
from .errors import FixtureFailed, UnknownInstance
from .instances import build_paper_instance, paper_equilibrium
from .valuations import is_subadditive

logger = logging.getLogger(__name__)

# Discrepancy of every split (k1, 27 - k1) of the 27-item step valuation
TABLE1_DISCREPANCIES = (
    Fraction(81, 22),
    Fraction(29, 24),
    Fraction(14, 9),
    Fraction(13, 6),
    Fraction(121, 36),
    Fraction(89, 66),
    Fraction(6, 5),
    Fraction(11, 9),
    Fraction(25, 18),
    Fraction(11, 6),
    Fraction(97, 36),
    Fraction(73, 36),
    Fraction(3, 2),
    Fraction(47, 36),
)

THM72_LOWER = Fraction(13895, 10000)
THM72_UPPER = Fraction(139, 100)


def _expect(cell: str, expected: Any, actual: Any) -> None:
    if expected != actual:
        raise FixtureFailed(cell, expected, actual)


def reproduce_table1() -> Dict[str, Any]:
    """Per-split slopes, prices and discrepancies of two buyers over 27 items."""
    v = build_paper_instance("appendixE")[0]
    rows = table_rows(v)
    _expect("rows", len(TABLE1_DISCREPANCIES), len(rows))
    for row, expected in zip(rows, TABLE1_DISCREPANCIES):
        _expect(f"({row['k1']},{row['k2']}).discrepancy", expected, row["discrepancy"])
    minimum = min(row["discrepancy"] for row in rows)
    _expect("minimum", Fraction(6, 5), minimum)
    return {"rows": rows, "minimum": minimum}


def reproduce_thm72() -> Dict[str, Any]:
    """Scan every split of 3461 items between two buyers for the least discrepancy."""
    profile = build_paper_instance("thm7.2")
    if not is_subadditive(profile[0]):
        raise FixtureFailed("subadditive", True, False)
    result = min_discrepancy(profile)
    k1 = result.allocation.counts[0]
    if k1 not in (1, 3460):
        raise FixtureFailed("argmin", "1 or 3460", k1)
    if not THM72_LOWER < result.discrepancy < THM72_UPPER:
        raise FixtureFailed("minimum", f"in ({THM72_LOWER}, {THM72_UPPER})", result.discrepancy)
    logger.info("least discrepancy %s at split %s", result.discrepancy, result.allocation.counts)
    return {
        "split": list(result.allocation.counts),
        "high": list(result.prices.high),
        "low": list(result.prices.low),
        "discrepancy": result.discrepancy,
        "approx": float(result.discrepancy),
    }


def reproduce_ex32() -> Dict[str, Any]:
    """A market without conditional equilibria that has a 2PE with d = 17/15."""
    profile = build_paper_instance("ex3.2")
    _expect("conditional_equilibrium", None, search_ce(profile))
    S, P = paper_equilibrium("ex3.2")
    report = is_2pe(profile, S, P)
    _expect("two_price_equilibrium", True, report.holds)
    d = discrepancy(profile, S, P)
    _expect("discrepancy", Fraction(17, 15), d)
    return {"conditional_equilibrium": None, "two_price": report.to_dict(), "discrepancy": d}


def reproduce_prop43() -> Dict[str, Any]:
    """Crossed unit-demand buyers: a conditional equilibrium with d = 1."""
    profile = build_paper_instance("prop4.3")
    S, P = paper_equilibrium("prop4.3")
    report = is_ce(profile, S, P.high)
    _expect("conditional_equilibrium", True, report.holds)
    d = discrepancy(profile, S, P)
    _expect("discrepancy", Fraction(1), d)
    return {"conditional_equilibrium": report.to_dict(), "discrepancy": d}


REPRODUCERS: Dict[str, Callable[[], Dict[str, Any]]] = {
    "table1": reproduce_table1,
    "thm7.2": reproduce_thm72,
    "ex3.2": reproduce_ex32,
    "prop4.3": reproduce_prop43,
}


def reproduce(name: str) -> Dict[str, Any]:
    """
    Run one fixture.

    Raises:
        UnknownInstance: If no fixture has this name
        FixtureFailed: At the first cell that disagrees
    """
    try:
        runner = REPRODUCERS[name]
    except KeyError:
        raise UnknownInstance(
            f"unknown fixture {name!r}; choose from {', '.join(REPRODUCERS)}"
        ) from None
    return runner()
