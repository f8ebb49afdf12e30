"""
Exact solutions of small linear feasibility problems.

HiGHS (through ``scipy.optimize.linprog``) finds a floating-point point of the
feasible region; the point is then rounded to nearby rationals with growing
denominators until an exact checker accepts it.
"""

import logging
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from .errors import TwoPriceError

logger = logging.getLogger(__name__)

# linprog status codes
_SOLVED = 0
_INFEASIBLE = 2

_DENOMINATORS = (1, 2, 6, 12, 60, 120, 840, 2520, 27720, 720720, 10**7, 10**9)


def _rationalize(x: np.ndarray, limit: int) -> Tuple[Fraction, ...]:
    out = []
    for value in x:
        q = Fraction(float(value)).limit_denominator(limit)
        out.append(q if q > 0 else Fraction(0))
    return tuple(out)


def solve_exact(
    n_vars: int,
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence[Fraction] = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence[Fraction] = (),
    check: Callable[[Tuple[Fraction, ...]], bool] = None,
) -> Optional[Tuple[Fraction, ...]]:
    """
    Find an exact non-negative rational point satisfying linear constraints.

    Args:
        n_vars (int): Number of variables
        a_ub, b_ub: Rows and bounds of ``A x <= b``
        a_eq, b_eq: Rows and right-hand sides of ``A x == b``
        check: Exact feasibility test applied to candidate rational points

    Returns:
        tuple: A point accepted by ``check``, or None if the LP is infeasible

    Raises:
        TwoPriceError: If the solver fails, or no rounding of its point passes ``check``
    """
    kwargs = {}
    if len(a_ub):
        kwargs["A_ub"] = np.array(a_ub, dtype=float)
        kwargs["b_ub"] = np.array([float(b) for b in b_ub])
    if len(a_eq):
        kwargs["A_eq"] = np.array(a_eq, dtype=float)
        kwargs["b_eq"] = np.array([float(b) for b in b_eq])
    result = linprog(
        c=np.zeros(n_vars), bounds=[(0, None)] * n_vars, method="highs", **kwargs
    )
    if result.status == _INFEASIBLE:
        logger.debug("LP with %d variables is infeasible", n_vars)
        return None
    if result.status != _SOLVED:
        raise TwoPriceError(f"LP solver failed: {result.message}")

    for limit in _DENOMINATORS:
        candidate = _rationalize(result.x, limit)
        if check is None or check(candidate):
            logger.debug("LP point certified with denominators up to %d", limit)
            return candidate
    logger.warning("LP reported feasible but no rational rounding was certified")
    raise TwoPriceError("could not certify the LP solution exactly")
