"""
Valuation functions over identical items and over distinct items.

Symmetric valuations are stored as the value of every bundle size. General
valuations are stored as a table indexed by the bitmask of the bundle, so item
``j`` belongs to bundle ``S`` exactly when ``S >> j & 1``.
"""

from __future__ import annotations

import logging
import math
import numbers
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property, reduce
from typing import Callable, FrozenSet, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .config import active_limits
from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InstanceTooLarge,
    InvalidValuation,
    MalformedInput,
    NotXOS,
    UnsupportedClass,
)

logger = logging.getLogger(__name__)

RationalLike = Union[Fraction, int, float, str]


def parse_rational(value: RationalLike) -> Fraction:
    """
    Parse an exact rational from an int, a decimal or ``"p/q"`` string.

    Floats are read through their shortest decimal representation, so
    ``0.9`` becomes ``9/10``.

    Raises:
        MalformedInput: If the value is not a finite rational
    """
    if isinstance(value, bool):
        raise MalformedInput(f"not a rational: {value!r}")
    if isinstance(value, numbers.Rational):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise MalformedInput(f"not a finite rational: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise MalformedInput(f"not a rational: {value!r}") from e
    raise MalformedInput(f"not a rational: {value!r}")


def format_rational(value: Fraction) -> str:
    """Format a rational as ``"p/q"``, or ``"p"`` when integral."""
    return str(Fraction(value))


def integer_grid(values: Sequence[Fraction]) -> Tuple[np.ndarray, int]:
    """
    Scale rationals to integers by their common denominator.

    The array uses int64 while sums of up to ``len(values)`` entries stay
    far from overflow, and Python integers (object dtype) otherwise.

    Returns:
        tuple: (integer array, scale) with ``array[i] == values[i] * scale``
    """
    scale = reduce(math.lcm, {x.denominator for x in values}, 1)
    ints = [x.numerator * (scale // x.denominator) for x in values]
    bound = max((abs(i) for i in ints), default=0)
    dtype = np.int64 if bound * (len(ints) + 1) < 2**62 else object
    return np.array(ints, dtype=dtype), scale


def mask_of(items: Iterable[int]) -> int:
    """Bitmask of an iterable of item indices."""
    mask = 0
    for j in items:
        mask |= 1 << j
    return mask


def items_of(mask: int) -> List[int]:
    """Item indices contained in a bitmask, ascending."""
    items = []
    j = 0
    while mask:
        if mask & 1:
            items.append(j)
        mask >>= 1
        j += 1
    return items


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def subset_sums(weights: Sequence) -> np.ndarray:
    """
    Sum of weights over every subset, indexed by bitmask.

    Built by doubling: the table for items ``0..j`` is the table for
    ``0..j-1`` followed by the same table shifted by ``weights[j]``.
    """
    dtype = np.asarray(weights).dtype if len(weights) else np.int64
    table = np.zeros(1, dtype=dtype)
    for w in weights:
        table = np.concatenate([table, table + w])
    return table


def subset_maxima(weights: Sequence) -> np.ndarray:
    """Maximum weight over every subset (0 for the empty set), indexed by bitmask."""
    dtype = np.asarray(weights).dtype if len(weights) else np.int64
    table = np.zeros(1, dtype=dtype)
    for w in weights:
        table = np.concatenate([table, np.maximum(table, w)])
    return table


def popcount_table(m: int) -> np.ndarray:
    """Bundle size of every bitmask over ``m`` items."""
    return subset_sums(np.ones(m, dtype=np.int64))


class ValuationClass(Enum):
    """Valuation classes, from most to least restrictive."""

    UNIT_DEMAND = "unit_demand"
    ADDITIVE = "additive"
    SUBMODULAR = "submodular"
    XOS = "xos"
    SUBADDITIVE = "subadditive"
    GENERAL = "general"


@dataclass(frozen=True)
class SymmetricValuation:
    """
    Valuation over ``m`` identical items.

    ``values[k]`` is the value of any bundle of ``k`` items. Values are
    normalized (``values[0] == 0``) and non-decreasing.
    """

    values: Tuple[Fraction, ...]

    def __post_init__(self):
        values = tuple(parse_rational(x) for x in self.values)
        if len(values) < 2:
            raise InvalidValuation("a valuation needs at least one item")
        if values[0] != 0:
            raise InvalidValuation(f"v(0) must be 0, got {values[0]}")
        for k in range(1, len(values)):
            if values[k] < values[k - 1]:
                raise InvalidValuation(
                    f"not monotone: v({k}) = {values[k]} < v({k - 1}) = {values[k - 1]}"
                )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: Iterable[RationalLike]) -> "SymmetricValuation":
        return cls(tuple(values))

    @classmethod
    def from_function(cls, m: int, f: Callable[[int], RationalLike]) -> "SymmetricValuation":
        """Tabulate ``f(k)`` for ``k = 0..m``."""
        return cls(tuple(f(k) for k in range(m + 1)))

    @property
    def m(self) -> int:
        return len(self.values) - 1

    def __call__(self, k: int) -> Fraction:
        if not 0 <= k <= self.m:
            raise IndexOutOfRange(f"bundle size {k} outside 0..{self.m}")
        return self.values[k]

    def of_bundle(self, mask: int) -> Fraction:
        """Value of the bundle with the given bitmask."""
        return self.values[popcount(mask)]

    def marginals(self) -> Tuple[Fraction, ...]:
        """Marginal values ``v(k) - v(k-1)`` for ``k = 1..m``."""
        return tuple(self.values[k] - self.values[k - 1] for k in range(1, self.m + 1))

    def scaled(self, factor: RationalLike) -> "SymmetricValuation":
        factor = parse_rational(factor)
        if factor < 0:
            raise InvalidValuation("scale factor must be non-negative")
        return SymmetricValuation(tuple(x * factor for x in self.values))

    @cached_property
    def grid(self) -> Tuple[np.ndarray, int]:
        """Integer-scaled values, see ``integer_grid``."""
        return integer_grid(self.values)

    @cached_property
    def _hash(self) -> int:
        return hash(self.values)

    # hashed once; slope tables are cached per valuation
    def __hash__(self) -> int:
        return self._hash


@dataclass(frozen=True)
class GeneralValuation:
    """
    Valuation over ``m`` distinct items.

    ``values[S]`` is the value of the bundle with bitmask ``S``.
    """

    m: int
    values: Tuple[Fraction, ...]

    def __post_init__(self):
        if self.m < 1:
            raise InvalidValuation("a valuation needs at least one item")
        cap = active_limits().max_general_m
        if self.m > cap:
            raise InstanceTooLarge(f"general valuation over {self.m} items exceeds cap {cap}")
        if len(self.values) != 1 << self.m:
            raise InvalidValuation(
                f"expected {1 << self.m} bundle values for m={self.m}, got {len(self.values)}"
            )
        values = tuple(parse_rational(x) for x in self.values)
        if values[0] != 0:
            raise InvalidValuation(f"v(empty) must be 0, got {values[0]}")
        object.__setattr__(self, "values", values)
        arr, _ = self.grid
        index = np.arange(len(values))
        for j in range(self.m):
            with_j = index[(index >> j) & 1 == 1]
            bad = np.nonzero(arr[with_j] < arr[with_j ^ (1 << j)])[0]
            if len(bad):
                mask = int(with_j[bad[0]])
                raise InvalidValuation(
                    f"not monotone: adding item {j} to bundle {items_of(mask ^ (1 << j))} "
                    "lowers its value"
                )

    @classmethod
    def from_function(cls, m: int, f: Callable[[int], RationalLike]) -> "GeneralValuation":
        """Tabulate ``f(S)`` for every bitmask ``S`` over ``m`` items."""
        return cls(m, tuple(f(mask) for mask in range(1 << m)))

    @property
    def full(self) -> int:
        return (1 << self.m) - 1

    def __call__(self, mask: int) -> Fraction:
        return self.values[mask]

    def of_bundle(self, mask: int) -> Fraction:
        return self.values[mask]

    @cached_property
    def grid(self) -> Tuple[np.ndarray, int]:
        return integer_grid(self.values)

    @cached_property
    def _hash(self) -> int:
        return hash((self.m, self.values))

    def __hash__(self) -> int:
        return self._hash


Valuation = Union[SymmetricValuation, GeneralValuation]


def additive_general(weights: Sequence[RationalLike]) -> GeneralValuation:
    """Additive valuation: a bundle is worth the sum of its item weights."""
    w = [parse_rational(x) for x in weights]
    return GeneralValuation.from_function(
        len(w), lambda s: sum((w[j] for j in items_of(s)), Fraction(0))
    )


def unit_demand_general(weights: Sequence[RationalLike]) -> GeneralValuation:
    """Unit-demand valuation: a bundle is worth its best single item."""
    w = [parse_rational(x) for x in weights]
    return GeneralValuation.from_function(
        len(w), lambda s: max((w[j] for j in items_of(s)), default=Fraction(0))
    )


def xos_general(clauses: Sequence[Sequence[RationalLike]]) -> GeneralValuation:
    """Maximum over additive clauses with non-negative weights."""
    rows = [[parse_rational(x) for x in clause] for clause in clauses]
    if not rows or len({len(r) for r in rows}) != 1:
        raise InvalidValuation("XOS clauses must be non-empty and share one length")
    if any(x < 0 for r in rows for x in r):
        raise InvalidValuation("XOS clause weights must be non-negative")
    return GeneralValuation.from_function(
        len(rows[0]),
        lambda s: max(sum((r[j] for j in items_of(s)), Fraction(0)) for r in rows),
    )


@dataclass(frozen=True)
class ValuationProfile:
    """
    One valuation per buyer over a shared item set.

    A profile is either entirely symmetric or entirely general.
    """

    buyers: Tuple[Valuation, ...]

    def __post_init__(self):
        buyers = tuple(self.buyers)
        if not buyers:
            raise MalformedInput("a market needs at least one buyer")
        kinds = {type(v) for v in buyers}
        if len(kinds) != 1:
            raise MalformedInput("cannot mix symmetric and general valuations in one profile")
        sizes = {v.m for v in buyers}
        if len(sizes) != 1:
            raise DimensionMismatch(f"buyers disagree on the number of items: {sorted(sizes)}")
        object.__setattr__(self, "buyers", buyers)

    @property
    def n(self) -> int:
        return len(self.buyers)

    @property
    def m(self) -> int:
        return self.buyers[0].m

    @property
    def is_symmetric(self) -> bool:
        return isinstance(self.buyers[0], SymmetricValuation)

    @property
    def identical(self) -> bool:
        return all(v == self.buyers[0] for v in self.buyers)

    def __getitem__(self, i: int) -> Valuation:
        return self.buyers[i]

    def __iter__(self):
        return iter(self.buyers)

    def __len__(self) -> int:
        return len(self.buyers)

    def as_general(self) -> "ValuationProfile":
        """The same market with every buyer lifted to a bundle table."""
        if not self.is_symmetric:
            return self
        return ValuationProfile(tuple(symmetric_to_general(v) for v in self.buyers))


def symmetric_to_general(v: SymmetricValuation, max_m: int = None) -> GeneralValuation:
    """
    Lift a symmetric valuation to a table over all ``2^m`` bundles.

    Raises:
        InstanceTooLarge: If ``m`` exceeds the general enumeration cap
    """
    cap = active_limits().max_general_m if max_m is None else max_m
    if v.m > cap:
        raise InstanceTooLarge(f"cannot lift m={v.m} items to 2^m bundles (cap {cap})")
    sizes = popcount_table(v.m)
    return GeneralValuation(v.m, tuple(v.values[int(k)] for k in sizes))


def is_subadditive(v: Valuation) -> bool:
    """True when ``v(S) + v(T) >= v(S | T)`` for all bundles."""
    if isinstance(v, SymmetricValuation):
        arr, _ = v.grid
        m = v.m
        for a in range(1, m // 2 + 1):
            if np.any(arr[a] + arr[a : m - a + 1] < arr[2 * a : m + 1]):
                return False
        return True
    # monotone, so disjoint pairs suffice
    vals = v.grid[0].tolist()
    for union in range(1, 1 << v.m):
        sub = (union - 1) & union
        while sub:
            rest = union ^ sub
            if sub < rest and vals[sub] + vals[rest] < vals[union]:
                return False
            sub = (sub - 1) & union
    return True


def _is_submodular_general(v: GeneralValuation) -> bool:
    arr, _ = v.grid
    index = np.arange(1 << v.m)
    for i in range(v.m):
        for j in range(i + 1, v.m):
            base = index[((index >> i) & 1 == 0) & ((index >> j) & 1 == 0)]
            lhs = arr[base | (1 << i)] + arr[base | (1 << j)]
            rhs = arr[base | (1 << i) | (1 << j)] + arr[base]
            if np.any(lhs < rhs):
                return False
    return True


def classify_symmetric(v: SymmetricValuation) -> FrozenSet[ValuationClass]:
    """
    Every class a symmetric valuation belongs to.

    ``GENERAL`` is implied and never listed.
    """
    vals = v.values
    m = v.m
    classes = set()
    if all(x == vals[1] for x in vals[1:]):
        classes.add(ValuationClass.UNIT_DEMAND)
    if all(vals[k] == k * vals[1] for k in range(m + 1)):
        classes.add(ValuationClass.ADDITIVE)
    marginals = v.marginals()
    if all(marginals[i] >= marginals[i + 1] for i in range(m - 1)):
        classes.add(ValuationClass.SUBMODULAR)
    # v(k)/k non-increasing
    if all(vals[k] * (k + 1) >= vals[k + 1] * k for k in range(1, m)):
        classes.add(ValuationClass.XOS)
    if is_subadditive(v):
        classes.add(ValuationClass.SUBADDITIVE)
    return frozenset(classes)


def classify_general(v: GeneralValuation) -> FrozenSet[ValuationClass]:
    """
    Every class a general valuation belongs to.

    XOS membership is decided through supporting prices on every bundle,
    after the subadditive and submodular shortcuts.
    """
    arr, _ = v.grid
    singles = arr[[1 << j for j in range(v.m)]]
    classes = set()
    if np.array_equal(subset_maxima(singles), arr):
        classes.add(ValuationClass.UNIT_DEMAND)
    if np.array_equal(subset_sums(singles), arr):
        classes.add(ValuationClass.ADDITIVE)
    submodular = _is_submodular_general(v)
    if submodular:
        classes.add(ValuationClass.SUBMODULAR)
    if is_subadditive(v):
        classes.add(ValuationClass.SUBADDITIVE)
        if submodular or _all_supported(v):
            classes.add(ValuationClass.XOS)
    return frozenset(classes)


def _all_supported(v: GeneralValuation) -> bool:
    for mask in range(1, 1 << v.m):
        try:
            supporting_prices(v, mask)
        except NotXOS:
            logger.debug("no supporting prices for bundle %s", items_of(mask))
            return False
    return True


def classify(v: Valuation) -> FrozenSet[ValuationClass]:
    if isinstance(v, SymmetricValuation):
        return classify_symmetric(v)
    return classify_general(v)


def supporting_prices(v: Valuation, bundle: int) -> Tuple[Fraction, ...]:
    """
    Item prices supporting ``v`` at ``bundle``.

    Supporting prices are zero outside the bundle, sum to ``v(bundle)`` and
    price every sub-bundle at most at its value.

    Args:
        v: Symmetric or general valuation
        bundle (int): Bitmask of the supported bundle

    Returns:
        tuple: One price per item

    Raises:
        NotXOS: If no supporting prices exist for the bundle
    """
    m = v.m
    if bundle == 0:
        return tuple(Fraction(0) for _ in range(m))
    if isinstance(v, SymmetricValuation):
        size = popcount(bundle)
        price = v.values[size] / size
        if any(v.values[k] < k * price for k in range(1, size)):
            raise NotXOS(f"no supporting prices for a bundle of {size} items")
        return tuple(price if bundle >> j & 1 else Fraction(0) for j in range(m))

    from .lp import solve_exact

    members = items_of(bundle)
    rows, bounds = [], []
    for sub in range(1, 1 << len(members)):
        if sub == (1 << len(members)) - 1:
            continue
        rows.append([sub >> t & 1 for t in range(len(members))])
        bounds.append(v.values[mask_of(members[t] for t in range(len(members)) if sub >> t & 1)])

    def check(x: Tuple[Fraction, ...]) -> bool:
        if sum(x) != v.values[bundle] or any(p < 0 for p in x):
            return False
        return all(
            sum((x[t] for t in range(len(members)) if row[t]), Fraction(0)) <= b
            for row, b in zip(rows, bounds)
        )

    solution = solve_exact(
        n_vars=len(members),
        a_ub=rows,
        b_ub=bounds,
        a_eq=[[1] * len(members)],
        b_eq=[v.values[bundle]],
        check=check,
    )
    if solution is None:
        raise NotXOS(f"no supporting prices for bundle {members}")
    prices = [Fraction(0)] * m
    for t, j in enumerate(members):
        prices[j] = solution[t]
    return tuple(prices)


def random_symmetric(m: int, cls: ValuationClass, seed: int) -> SymmetricValuation:
    """
    Draw a random symmetric valuation of the given class.

    Args:
        m (int): Number of items
        cls (ValuationClass): ADDITIVE, SUBMODULAR, XOS or SUBADDITIVE
        seed (int): Seed for ``numpy.random.default_rng``

    Raises:
        UnsupportedClass: For UNIT_DEMAND or GENERAL
    """
    if m < 1:
        raise InvalidValuation("a valuation needs at least one item")
    rng = np.random.default_rng(seed)
    if cls is ValuationClass.ADDITIVE:
        slope = Fraction(int(rng.integers(1, 10)), int(rng.integers(1, 4)))
        return SymmetricValuation.from_function(m, lambda k: slope * k)
    if cls is ValuationClass.SUBMODULAR:
        marginals = sorted((int(x) for x in rng.integers(0, 10, size=m)), reverse=True)
        marginals[0] = max(marginals[0], 1)
        return SymmetricValuation.from_values(np.concatenate([[0], np.cumsum(marginals)]).tolist())
    if cls is ValuationClass.XOS:
        marginals = [int(x) for x in rng.integers(0, 6, size=m)]
        marginals[0] = max(marginals[0], 1)
        base = [Fraction(int(x)) for x in np.concatenate([[0], np.cumsum(marginals)])]
        # raise each value to the largest scaled-down value of a bigger bundle
        values = list(base)
        for k in range(1, m + 1):
            values[k] = max([base[k]] + [k * base[t] / t for t in range(k + 1, m + 1)])
        return SymmetricValuation(tuple(values))
    if cls is ValuationClass.SUBADDITIVE:
        marginals = [int(x) for x in rng.integers(0, 4, size=m)]
        marginals[0] = max(marginals[0], 1)
        values = [0] + np.cumsum(marginals).tolist()
        for k in range(2, m + 1):
            values[k] = min([values[k]] + [values[s] + values[k - s] for s in range(1, k // 2 + 1)])
        return SymmetricValuation.from_values(values)
    raise UnsupportedClass(f"no symmetric generator for class {cls.value}")


def random_general(m: int, cls: ValuationClass, seed: int, clauses: int = 3) -> GeneralValuation:
    """
    Draw a random general valuation of the given class.

    GENERAL draws arbitrary monotone tables, SUBMODULAR draws weighted
    coverage functions and SUBADDITIVE lifts a random symmetric valuation.
    """
    rng = np.random.default_rng(seed)
    if cls is ValuationClass.ADDITIVE:
        return additive_general([int(x) for x in rng.integers(0, 10, size=m)])
    if cls is ValuationClass.UNIT_DEMAND:
        return unit_demand_general([int(x) for x in rng.integers(0, 10, size=m)])
    if cls is ValuationClass.XOS:
        return xos_general(rng.integers(0, 6, size=(clauses, m)).tolist())
    if cls is ValuationClass.SUBMODULAR:
        universe = 2 * m
        weights = rng.integers(1, 5, size=universe).tolist()
        covers = [mask_of(np.flatnonzero(rng.random(universe) < 0.3).tolist()) for _ in range(m)]

        def coverage(s: int) -> int:
            covered = 0
            for j in items_of(s):
                covered |= covers[j]
            return sum(weights[e] for e in items_of(covered))

        return GeneralValuation.from_function(m, coverage)
    if cls is ValuationClass.SUBADDITIVE:
        return symmetric_to_general(random_symmetric(m, ValuationClass.SUBADDITIVE, seed))
    if cls is ValuationClass.GENERAL:
        draws = rng.integers(0, 10, size=1 << m).tolist()
        values = [0] * (1 << m)
        for mask in range(1, 1 << m):
            values[mask] = max([draws[mask]] + [values[mask ^ (1 << j)] for j in items_of(mask)])
        return GeneralValuation(m, tuple(values))
    raise UnsupportedClass(f"no general generator for class {cls.value}")
