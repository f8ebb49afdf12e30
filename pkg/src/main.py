"""
Command-line entry point for two-price equilibrium computations.

Results are written to stdout as JSON (or CSV for ``plotdata``); logs go to
stderr.
"""

import argparse
import csv
import logging
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .allocation import (
    AllocationCertificate,
    allocate_heterogeneous,
    allocate_identical,
    two_buyer_split,
)
from .auctions import TieBreak, is_pne, pne_to_two_price, resolve, two_price_to_pne
from .config import Config, use_limits
from .endowment import ee_to_two_price, is_ee, two_price_to_ee
from .equilibrium import (
    Allocation,
    TwoPriceSystem,
    discrepancy,
    is_2pe,
    is_ce,
    is_we,
    min_discrepancy,
    opt_discrepancy_upper_bound,
    opt_welfare,
    we_exists_symmetric,
    welfare,
)
from .errors import (
    FixtureFailed,
    InstanceTooLarge,
    MalformedInput,
    NoPairFound,
    NotAnEquilibrium,
    TwoPriceError,
)
from .geometry import (
    backward_slope_table,
    flat_slopes,
    forward_slope_table,
    sm_closure,
)
from .instances import INSTANCE_NAMES, build_paper_instance, paper_equilibrium
from .market_io import (
    allocation_to_list,
    bids_from_dict,
    dumps,
    equilibrium_from_dict,
    equilibrium_to_dict,
    load_json,
    load_market,
    market_to_dict,
    parse_gain,
)
from .report import RunReport
from .reproduce import REPRODUCERS, reproduce
from .valuations import SymmetricValuation, ValuationProfile, classify, format_rational

logger = logging.getLogger(__name__)

# (results, input files, whether every check passed)
Outcome = Tuple[Dict[str, Any], List[str], bool]


def _symmetric_buyer(profile: ValuationProfile, i: int) -> SymmetricValuation:
    if not 0 <= i < profile.n:
        raise MalformedInput(f"buyer {i} does not exist; the market has {profile.n}")
    v = profile[i]
    if not isinstance(v, SymmetricValuation):
        raise MalformedInput(f"buyer {i} is not symmetric")
    return v


def _load_equilibrium(path: str, profile: ValuationProfile) -> Tuple[Allocation, TwoPriceSystem]:
    return equilibrium_from_dict(load_json(path), profile)


def allocate(profile: ValuationProfile, identical: bool = False) -> AllocationCertificate:
    """
    Pick the allocation algorithm for a symmetric market.

    Two identical buyers use the 2-good split, more identical buyers the
    identical greedy, and anything else the heterogeneous greedy.
    ``identical`` forces the identical greedy.
    """
    if not profile.is_symmetric:
        raise MalformedInput("allocation algorithms need symmetric valuations")
    if identical:
        if not profile.identical:
            raise MalformedInput("--identical needs every buyer to share one valuation")
        return allocate_identical(profile[0], profile.n)
    if profile.identical and profile.n == 2:
        return two_buyer_split(profile[0])
    if profile.identical:
        return allocate_identical(profile[0], profile.n)
    return allocate_heterogeneous(profile)


def cmd_classify(args) -> Outcome:
    profile = load_market(args.market)
    classes = [sorted(c.value for c in classify(v)) for v in profile]
    return {"n": profile.n, "m": profile.m, "classes": classes}, [args.market], True


def cmd_geometry(args) -> Outcome:
    profile = load_market(args.market)
    v = _symmetric_buyer(profile, args.buyer)
    closure = sm_closure(v)
    return (
        {
            "buyer": args.buyer,
            "values": list(v.values),
            "closure": list(closure.closure.values),
            "intersection_indices": list(closure.intersection_indices),
            "slopes": list(closure.slopes),
            "forward": list(forward_slope_table(v)),
            "backward": list(backward_slope_table(v)),
        },
        [args.market],
        True,
    )


def cmd_allocate(args) -> Outcome:
    profile = load_market(args.market)
    certificate = allocate(profile, args.identical)
    return certificate.to_dict(), [args.market], True


def cmd_verify(args) -> Outcome:
    profile = load_market(args.market)
    S, P = _load_equilibrium(args.equilibrium, profile)
    if args.kind == "2pe":
        report = is_2pe(profile, S, P)
    elif args.kind == "we":
        report = is_we(profile, S, P.high)
    else:
        report = is_ce(profile, S, P.high)
    results = {"kind": args.kind, **report.to_dict()}
    if report.holds and args.kind == "2pe" and welfare(profile, S) > 0:
        results["discrepancy"] = discrepancy(profile, S, P)
    return results, [args.market, args.equilibrium], report.holds


def cmd_min_discrepancy(args) -> Outcome:
    profile = load_market(args.market)
    result = min_discrepancy(profile)
    return (
        {
            "split": list(result.allocation.counts),
            "high": list(result.prices.high),
            "low": list(result.prices.low),
            "discrepancy": result.discrepancy,
            "exact": result.exact,
        },
        [args.market],
        True,
    )


def cmd_auction(args) -> Outcome:
    profile = load_market(args.market)
    bids = bids_from_dict(load_json(args.bids))
    inputs = [args.market, args.bids]
    if args.tiebreak == "alloc":
        if args.equilibrium is None:
            raise MalformedInput("--tiebreak alloc needs --equilibrium to prefer")
        S, _ = _load_equilibrium(args.equilibrium, profile)
        tiebreak = TieBreak.prefer_allocation(S)
        inputs.append(args.equilibrium)
    else:
        tiebreak = TieBreak.lowest_index()
    outcome = resolve(profile, bids, tiebreak)
    results = {
        "allocation": allocation_to_list(outcome.allocation, symmetric=False),
        "payments": list(outcome.payments),
    }
    if args.action == "resolve":
        return results, inputs, True
    report = is_pne(profile, bids, tiebreak)
    results.update(report.to_dict())
    if report.holds:
        S, P = pne_to_two_price(profile, bids, tiebreak)
        results["two_price"] = equilibrium_to_dict(S, P, symmetric=False)
    return results, inputs, report.holds


def cmd_endowment(args) -> Outcome:
    profile = load_market(args.market)
    S, P = _load_equilibrium(args.equilibrium, profile)
    gains = parse_gain(args.gain, profile.n)
    inputs = [args.market, args.equilibrium]
    if args.gain.startswith("file:"):
        inputs.append(args.gain[len("file:"):])
    if args.action == "check":
        report = is_ee(profile, S, P.high, gains)
        return report.to_dict(), inputs, report.holds
    if args.action == "convert":
        converted, report = ee_to_two_price(profile, S, P.high, gains)
        results = {
            "two_price": equilibrium_to_dict(S, converted, profile.is_symmetric),
            **report.to_dict(),
        }
        if report.holds and welfare(profile, S) > 0:
            results["discrepancy"] = discrepancy(profile, S, converted)
        return results, inputs, report.holds
    requirements, _, report = two_price_to_ee(profile, S, P)
    return (
        {"requirements": [r.to_dict() for r in requirements], **report.to_dict()},
        inputs,
        report.holds,
    )


def cmd_paper_instance(args) -> Outcome:
    profile = build_paper_instance(args.name)
    results = {"name": args.name, "market": market_to_dict(profile)}
    try:
        S, P = paper_equilibrium(args.name)
    except TwoPriceError:
        return results, [], True
    results["equilibrium"] = equilibrium_to_dict(S, P, profile.is_symmetric)
    return results, [], True


def cmd_reproduce(args) -> Outcome:
    return {"fixture": args.name, **reproduce(args.name)}, [], True


def pipeline(profile: ValuationProfile, with_bids: bool = False) -> Tuple[Dict[str, Any], bool]:
    """
    Classify, allocate, verify and bound the welfare of one market.

    Symmetric markets first look for a Walrasian equilibrium and otherwise
    run the matching allocation algorithm. General markets price a
    welfare-optimal allocation.
    """
    results: Dict[str, Any] = {
        "classes": [sorted(c.value for c in classify(v)) for v in profile],
    }
    if profile.is_symmetric:
        found = we_exists_symmetric(profile)
        if found is not None:
            S, price = found
            P = TwoPriceSystem.single((price,) * profile.m)
            results.update(method="walrasian", bound=Fraction(0))
        else:
            certificate = allocate(profile)
            S, P = certificate.allocation(), certificate.two_price_system()
            results.update(method=certificate.case, bound=certificate.bound)
    else:
        S, P, _ = opt_discrepancy_upper_bound(profile)
        results.update(method="optimal_allocation", bound=Fraction(profile.m))
    report = is_2pe(profile, S, P)
    results.update(equilibrium_to_dict(S, P, profile.is_symmetric))
    results["verified"] = report.to_dict()
    if not report.holds:
        return results, False
    sw = welfare(profile, S)
    opt, _ = opt_welfare(profile)
    d = discrepancy(profile, S, P) if sw > 0 else Fraction(0)
    results.update(
        discrepancy=d,
        welfare=sw,
        optimal_welfare=opt,
        welfare_bound_holds=sw * (1 + d) >= opt,
    )
    if with_bids:
        try:
            bids = two_price_to_pne(profile, S, P)
        except InstanceTooLarge as e:
            logger.warning("Skipping bid conversion: %s", e)
        else:
            results["bids"] = [list(row) for row in bids.bids]
    return results, bool(results["welfare_bound_holds"])


def cmd_pipeline(args) -> Outcome:
    results, ok = pipeline(load_market(args.market), args.bids)
    return results, [args.market], ok


def write_plotdata(v: SymmetricValuation, out, approx: bool = False) -> None:
    """
    Write one CSV row per bundle size: value, closure and slopes.

    Undefined slopes (forward at ``m``, backward at 0) are left empty.
    """
    closure = sm_closure(v).closure
    forward, backward, flat = forward_slope_table(v), backward_slope_table(v), flat_slopes(v)

    def cell(x: Optional[Fraction]) -> str:
        if x is None:
            return ""
        return f"{float(x):.10g}" if approx else format_rational(x)

    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["k", "value", "closure", "forward", "backward", "flat"])
    for k in range(v.m + 1):
        writer.writerow(
            [
                k,
                cell(v(k)),
                cell(closure(k)),
                cell(forward[k] if k < v.m else None),
                cell(backward[k]),
                cell(flat[k] if k < v.m else None),
            ]
        )


COMMANDS = {
    "classify": cmd_classify,
    "geometry": cmd_geometry,
    "allocate": cmd_allocate,
    "verify": cmd_verify,
    "min-discrepancy": cmd_min_discrepancy,
    "auction": cmd_auction,
    "endowment": cmd_endowment,
    "paper-instance": cmd_paper_instance,
    "reproduce": cmd_reproduce,
    "pipeline": cmd_pipeline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twoprice", description="Two-price equilibria of combinatorial markets"
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument("--config", default="config/settings.json", help="settings file")
    parser.add_argument(
        "--approx", action="store_true", default=None, help="add decimal approximations"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="valuation classes of every buyer")
    p.add_argument("market")

    p = sub.add_parser("geometry", help="closure and slopes of a symmetric buyer")
    p.add_argument("market")
    p.add_argument("--buyer", type=int, default=0)

    p = sub.add_parser("allocate", help="allocation and prices with a discrepancy guarantee")
    p.add_argument("market")
    p.add_argument("--identical", action="store_true", help="force the identical-buyer greedy")

    p = sub.add_parser("verify", help="check an equilibrium")
    p.add_argument("market")
    p.add_argument("equilibrium")
    p.add_argument("--kind", choices=("2pe", "we", "ce"), default="2pe")

    p = sub.add_parser("min-discrepancy", help="least discrepancy over splits")
    p.add_argument("market")

    p = sub.add_parser("auction", help="simultaneous second-price auctions")
    p.add_argument("action", choices=("resolve", "check"))
    p.add_argument("market")
    p.add_argument("bids")
    p.add_argument("--tiebreak", choices=("alloc", "index"), default="index")
    p.add_argument("--equilibrium", help="allocation preferred on ties")

    p = sub.add_parser("endowment", help="endowment equilibria")
    p.add_argument("action", choices=("check", "convert", "endow"))
    p.add_argument("market")
    p.add_argument("equilibrium")
    p.add_argument("--gain", default="id", help="id, al, sp or file:<path>")

    p = sub.add_parser("paper-instance", help="print a named market")
    p.add_argument("name", choices=INSTANCE_NAMES)

    p = sub.add_parser("reproduce", help="rerun a published fixture")
    p.add_argument("name", choices=tuple(REPRODUCERS))

    p = sub.add_parser("plotdata", help="CSV of values, closure and slopes")
    p.add_argument("market")
    p.add_argument("--buyer", type=int, default=0)

    p = sub.add_parser("pipeline", help="classify, allocate, verify and bound welfare")
    p.add_argument("market")
    p.add_argument("--bids", action="store_true", help="also build Nash bids")
    return parser


def _error_document(error: TwoPriceError) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"error": type(error).__name__, "message": str(error)}
    if isinstance(error, NotAnEquilibrium) and error.report is not None:
        doc["report"] = error.report.to_dict()
    if isinstance(error, NoPairFound):
        doc["slope_table"] = error.slope_table
    if isinstance(error, FixtureFailed):
        doc.update(cell=error.cell, expected=error.expected, actual=error.actual)
    return doc


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand and print its report.

    Returns:
        int: 0 on success, 2 when a check fails, 3 for malformed input,
        4 when an instance is too large, 1 for other errors
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)

    config = Config(args.config)
    level = config.get("logging", "level", "WARNING")
    if args.verbose:
        level = "DEBUG" if args.verbose > 1 else "INFO"
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    use_limits(config.limits())
    approx = config.get("output", "approx", False) if args.approx is None else args.approx
    indent = config.get("output", "indent", 2)

    try:
        if args.command == "plotdata":
            v = _symmetric_buyer(load_market(args.market), args.buyer)
            write_plotdata(v, sys.stdout, approx)
            return 0
        report = RunReport.start(argv)
        results, inputs, ok = COMMANDS[args.command](args)
        report.finish(results, inputs)
    except TwoPriceError as e:
        logger.error("%s", e)
        print(dumps(_error_document(e), indent=indent, approx=approx))
        return e.exit_code

    print(dumps(report, indent=indent, approx=approx))
    return 0 if ok else 2


if __name__ == "__main__":
    sys.exit(main())
