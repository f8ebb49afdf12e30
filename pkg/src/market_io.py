"""
JSON documents for markets, equilibria, bids and gains.

Rationals are written as ``"p/q"`` strings (or integer strings) and read
from strings, integers or decimal literals.
"""

import json
import logging
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple, Union

from .auctions import BidProfile
from .endowment import GainFunction
from .equilibrium import Allocation, TwoPriceSystem
from .errors import MalformedInput
from .valuations import (
    GeneralValuation,
    SymmetricValuation,
    ValuationProfile,
    format_rational,
    items_of,
    parse_rational,
)

logger = logging.getLogger(__name__)


def to_jsonable(obj: Any, approx: bool = False) -> Any:
    """
    Convert results to JSON-ready values.

    Args:
        obj: Nested dicts, lists, tuples, sets, enums and rationals
        approx (bool): Pair every rational with a decimal approximation
    """
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str, float)):
        return obj
    if isinstance(obj, Fraction):
        text = format_rational(obj)
        return {"exact": text, "approx": float(obj)} if approx else text
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, approx) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted(to_jsonable(x, approx) for x in obj)
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(x, approx) for x in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict(), approx)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2, approx: bool = False) -> str:
    return json.dumps(to_jsonable(obj, approx), indent=indent)


def load_json(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON object from a file.

    Raises:
        MalformedInput: If the file cannot be read or is not a JSON object
    """
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except OSError as e:
        raise MalformedInput(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise MalformedInput(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise MalformedInput(f"{path} must hold a JSON object")
    return data


def _rationals(values: Any, what: str) -> List[Fraction]:
    if not isinstance(values, list):
        raise MalformedInput(f"{what} must be a list")
    return [parse_rational(x) for x in values]


def _buyer_from_dict(entry: Dict[str, Any], m: int):
    kind = entry.get("kind", "symmetric")
    values = entry.get("values")
    if kind == "symmetric":
        v = SymmetricValuation(tuple(_rationals(values, "symmetric values")))
        if v.m != m:
            raise MalformedInput(f"symmetric buyer has {v.m} items, market has {m}")
        return v
    if kind == "general":
        if isinstance(values, list):
            return GeneralValuation(m, tuple(_rationals(values, "general values")))
        if not isinstance(values, dict):
            raise MalformedInput("general values must be a list or an object keyed by bitmask")
        try:
            table = {int(key): parse_rational(x) for key, x in values.items()}
        except ValueError as e:
            raise MalformedInput(f"general value keys must be decimal bitmasks: {e}") from e
        missing = [mask for mask in range(1 << m) if mask not in table]
        if missing:
            raise MalformedInput(f"general values miss {len(missing)} bundles, first {missing[0]}")
        return GeneralValuation(m, tuple(table[mask] for mask in range(1 << m)))
    raise MalformedInput(f"unknown buyer kind {kind!r}")


def market_from_dict(data: Dict[str, Any]) -> ValuationProfile:
    """
    Build a market from ``{"m": int, "buyers": [...]}``.

    Raises:
        MalformedInput: If fields are missing or of the wrong type
    """
    m = data.get("m")
    buyers = data.get("buyers")
    if not isinstance(m, int) or isinstance(m, bool) or m < 1:
        raise MalformedInput("market needs a positive integer 'm'")
    if not isinstance(buyers, list) or not buyers:
        raise MalformedInput("market needs a non-empty 'buyers' list")
    return ValuationProfile(tuple(_buyer_from_dict(entry, m) for entry in buyers))


def market_to_dict(profile: ValuationProfile) -> Dict[str, Any]:
    buyers = []
    for v in profile:
        if isinstance(v, SymmetricValuation):
            buyers.append({"kind": "symmetric", "values": list(v.values)})
        else:
            values = {str(mask): x for mask, x in enumerate(v.values)}
            buyers.append({"kind": "general", "values": values})
    return {"m": profile.m, "buyers": buyers}


def load_market(path: Union[str, Path]) -> ValuationProfile:
    return market_from_dict(load_json(path))


def allocation_from_list(entries: Any, profile: ValuationProfile) -> Allocation:
    """
    Allocation from bundle sizes (symmetric markets) or item lists.

    Raises:
        MalformedInput: If the entries do not partition the items
    """
    if not isinstance(entries, list) or len(entries) != profile.n:
        raise MalformedInput(f"allocation must list one entry per buyer ({profile.n})")
    if all(isinstance(e, int) and not isinstance(e, bool) for e in entries):
        if not profile.is_symmetric:
            raise MalformedInput("bundle sizes only describe symmetric markets")
        S = Allocation.symmetric(entries)
        if S.m != profile.m:
            raise MalformedInput(f"bundle sizes sum to {S.m}, market has {profile.m} items")
        return S
    if not all(isinstance(e, list) for e in entries):
        raise MalformedInput("allocation entries must all be sizes or all be item lists")
    return Allocation.general(profile.m, entries)


def allocation_to_list(S: Allocation, symmetric: bool) -> List:
    if symmetric and all(b == ((1 << k) - 1) << s for b, k, s in _blocks(S)):
        return list(S.counts)
    return [items_of(b) for b in S.bundles]


def _blocks(S: Allocation):
    start = 0
    for bundle, k in zip(S.bundles, S.counts):
        yield bundle, k, start
        start += k


def equilibrium_from_dict(
    data: Dict[str, Any], profile: ValuationProfile
) -> Tuple[Allocation, TwoPriceSystem]:
    """
    Read ``{"allocation", "high", "low"}``, or ``{"allocation", "prices"}``.

    Single ``prices`` give equal high and low prices; a missing ``low`` is 0.
    """
    S = allocation_from_list(data.get("allocation"), profile)
    if "prices" in data:
        P = TwoPriceSystem.single(_rationals(data["prices"], "prices"))
    elif "high" in data:
        high = _rationals(data["high"], "high prices")
        low = _rationals(data["low"], "low prices") if "low" in data else [0] * len(high)
        P = TwoPriceSystem(tuple(high), tuple(low))
    else:
        raise MalformedInput("equilibrium needs 'prices' or 'high'")
    return S, P


def equilibrium_to_dict(S: Allocation, P: TwoPriceSystem, symmetric: bool) -> Dict[str, Any]:
    return {
        "allocation": allocation_to_list(S, symmetric),
        "high": list(P.high),
        "low": list(P.low),
    }


def bids_from_dict(data: Dict[str, Any]) -> BidProfile:
    rows = data.get("bids")
    if not isinstance(rows, list) or not all(isinstance(row, list) for row in rows):
        raise MalformedInput("bids must be a list of per-bidder lists")
    return BidProfile(tuple(tuple(row) for row in rows))


_NAMED_GAINS = {
    "id": GainFunction.identity,
    "al": GainFunction.absolute_loss,
    "sp": GainFunction.supporting,
}


def _gain_from_dict(entry: Dict[str, Any]) -> GainFunction:
    kind = entry.get("kind")
    if kind in _NAMED_GAINS:
        return _NAMED_GAINS[kind]()
    if kind == "additive":
        return GainFunction.additive(_rationals(entry.get("weights"), "gain weights"))
    if kind == "explicit":
        tables = entry.get("tables")
        if not isinstance(tables, dict):
            raise MalformedInput("explicit gains need 'tables' keyed by endowment bitmask")
        try:
            return GainFunction.explicit(
                {int(x): {int(z): g for z, g in table.items()} for x, table in tables.items()}
            )
        except (ValueError, AttributeError) as e:
            raise MalformedInput(f"malformed gain tables: {e}") from e
    raise MalformedInput(f"unknown gain kind {kind!r}")


def parse_gain(spec: str, n: int) -> Union[GainFunction, Sequence[GainFunction]]:
    """
    Gain functions from ``id``, ``al``, ``sp`` or ``file:<path>``.

    A gain file holds ``{"gains": [...]}`` with one entry per buyer.
    """
    if spec in _NAMED_GAINS:
        return _NAMED_GAINS[spec]()
    if spec.startswith("file:"):
        entries = load_json(spec[len("file:"):]).get("gains")
        if not isinstance(entries, list) or len(entries) != n:
            raise MalformedInput(f"gain file must list one gain per buyer ({n})")
        return [_gain_from_dict(entry) for entry in entries]
    raise MalformedInput(f"unknown gain {spec!r}; use id, al, sp or file:<path>")
