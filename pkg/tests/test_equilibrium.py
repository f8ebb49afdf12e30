"""
Unit tests for equilibrium checks, discrepancy and welfare.
"""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from src.allocation import allocate_heterogeneous
from src.config import Limits, use_limits
from src.equilibrium import (
    Allocation,
    EquilibriumReport,
    TwoPriceSystem,
    UniformPrices,
    Witness,
    allocation_discrepancy_two,
    discrepancy,
    find_ce_prices,
    find_we_prices,
    is_2pe,
    is_ce,
    is_we,
    min_discrepancy,
    opt_discrepancy_upper_bound,
    opt_welfare,
    search_ce,
    search_we,
    table_rows,
    u2pe_feasible,
    u2pe_sufficient_prices,
    uniformize,
    we_exists_symmetric,
    welfare,
    welfare_bound_check,
)
from src.errors import (
    CountMismatch,
    DimensionMismatch,
    InstanceTooLarge,
    MalformedInput,
    NotAnEquilibrium,
    PriceOrderViolation,
    ZeroWelfare,
)
from src.geometry import backward_slope_table, forward_slope_table
from src.instances import (
    crossed_unit_demand_market,
    no_ce_market,
    paper_equilibrium,
    step_valuation_27,
)
from src.valuations import (
    SymmetricValuation,
    ValuationClass,
    ValuationProfile,
    items_of,
    random_general,
    random_symmetric,
)


def brute_is_2pe(v: ValuationProfile, S: Allocation, P: TwoPriceSystem) -> bool:
    """Compare every buyer's bundle with every other bundle directly."""
    general = v.as_general()
    full = 1 << v.m
    for i, vi in enumerate(general):
        own = S.bundles[i]
        for t in range(full):
            lhs = vi(own) - sum(P.low[j] for j in items_of(own) if not t >> j & 1)
            rhs = vi(t) - sum(P.high[j] for j in items_of(t) if not own >> j & 1)
            if rhs > lhs:
                return False
    return True


def every_allocation(m: int, n: int):
    """Each way to hand ``m`` distinct items to ``n`` buyers."""
    for owners in itertools.product(range(n), repeat=m):
        yield Allocation.general(m, [[j for j in range(m) if owners[j] == i] for i in range(n)])


def every_split(m: int, n: int):
    """Each way to write ``m`` as ``n`` non-negative bundle sizes."""
    for head in itertools.product(range(m + 1), repeat=n - 1):
        if sum(head) <= m:
            yield head + (m - sum(head),)


def individually_rational(v: ValuationProfile, S: Allocation, p) -> bool:
    return all(
        vi.of_bundle(b) >= sum((p[j] for j in items_of(b)), Fraction(0))
        for vi, b in zip(v.buyers, S.bundles)
    )


def exhaustive_we_exists(v: ValuationProfile) -> bool:
    """Try every split against every slope value as a single price."""
    prices = {Fraction(0)}
    for b in v.buyers:
        prices.update(forward_slope_table(b))
        prices.update(x for x in backward_slope_table(b) if x is not None)
    for counts in every_split(v.m, v.n):
        S = Allocation.symmetric(counts)
        if any(is_we(v, S, (p,) * v.m).holds for p in sorted(prices)):
            return True
    return False


def random_market(seed: int, classes) -> ValuationProfile:
    """Two general buyers over three items, drawn from the given classes."""
    return ValuationProfile(
        tuple(
            random_general(3, classes[(seed + i) % len(classes)], seed * 7 + i) for i in range(2)
        )
    )


@pytest.fixture
def restore_limits():
    yield
    use_limits(Limits())


@pytest.fixture
def table_market():
    v = step_valuation_27()
    return ValuationProfile((v, v))


class TestAllocation:
    """Test suite for allocations."""

    def test_symmetric_blocks(self):
        """Test counts expand to contiguous blocks."""
        S = Allocation.symmetric((2, 0, 1))
        assert S.m == 3
        assert S.bundles == (0b011, 0, 0b100)
        assert S.counts == (2, 0, 1)
        assert S.owners() == (0, 0, 2)

    def test_general(self):
        """Test bundles given as item lists."""
        S = Allocation.general(3, ([2], [0, 1]))
        assert S.bundles == (0b100, 0b011)
        assert S.n == 2

    def test_overlap(self):
        """Test overlapping bundles are rejected."""
        with pytest.raises(MalformedInput):
            Allocation(2, (0b01, 0b11))

    def test_unallocated(self):
        """Test every item must be allocated."""
        with pytest.raises(MalformedInput):
            Allocation(3, (0b001, 0b010))

    def test_negative_count(self):
        """Test negative bundle sizes."""
        with pytest.raises(CountMismatch):
            Allocation.symmetric((2, -1))


class TestPrices:
    """Test suite for price systems."""

    def test_order_violation(self):
        """Test low prices may not exceed high prices."""
        with pytest.raises(PriceOrderViolation):
            TwoPriceSystem((1, 1), (0, 2))

    def test_negative_low(self):
        """Test low prices must be non-negative."""
        with pytest.raises(PriceOrderViolation):
            TwoPriceSystem((1,), (-1,))

    def test_length_mismatch(self):
        """Test high and low vectors must match."""
        with pytest.raises(DimensionMismatch):
            TwoPriceSystem((1, 1), (0,))

    def test_gap(self):
        """Test the total price gap."""
        P = TwoPriceSystem(("9/10",) * 4, ("1/3",) * 4)
        assert P.gap == Fraction(34, 15)

    def test_uniform_expansion(self):
        """Test bundle-uniform prices expand over contiguous blocks."""
        U = UniformPrices((3, 1), (2, 0))
        P = TwoPriceSystem.uniform_from(U, (1, 2))
        assert P.high == (3, 1, 1)
        assert P.low == (2, 0, 0)
        assert P.is_uniform_over(Allocation.symmetric((1, 2)))
        assert not P.is_uniform_over(Allocation.symmetric((2, 1)))

    def test_report_requires_witness(self):
        """Test a failing report needs a witness and a passing one has none."""
        with pytest.raises(ValueError):
            EquilibriumReport(False)
        with pytest.raises(ValueError):
            EquilibriumReport(True, Witness(0, 0, Fraction(0), Fraction(1)))


class TestTwoPriceEquilibrium:
    """Test suite for is_2pe, is_we and is_ce."""

    def test_stated_equilibrium(self):
        """Test the four-item market's stated 2PE and its discrepancy."""
        v = no_ce_market()
        S, P = paper_equilibrium("ex3.2")
        assert is_2pe(v, S, P).holds
        assert discrepancy(v, S, P) == Fraction(17, 15)

    def test_low_price_too_high(self):
        """Test the owner prefers dropping everything when low prices are too high."""
        v = no_ce_market()
        S = Allocation.symmetric((4, 0))
        report = is_2pe(v, S, TwoPriceSystem(("9/10",) * 4, ("3/4",) * 4))
        assert not report.holds
        assert report.witness.buyer == 0
        assert report.witness.size == 0
        assert report.witness.lhs == -1
        assert report.witness.rhs == 0

    def test_high_price_too_low(self):
        """Test the other buyer buys an item when high prices are too low."""
        v = no_ce_market()
        S = Allocation.symmetric((4, 0))
        report = is_2pe(v, S, TwoPriceSystem(("1/2",) * 4, ("1/3",) * 4))
        assert not report
        assert report.witness.buyer == 1
        assert report.witness.size == 1
        assert report.witness.rhs == Fraction(2, 5)

    def test_ce_but_not_we(self):
        """Test crossed unit-demand buyers holding their worse items."""
        v = crossed_unit_demand_market()
        S, P = paper_equilibrium("prop4.3")
        assert is_ce(v, S, P.high).holds
        assert not is_we(v, S, P.high).holds
        assert discrepancy(v, S, P) == 1

    def test_ce_outward_violation(self):
        """Test a buyer adding a cheap item breaks outward stability."""
        v = crossed_unit_demand_market()
        S = Allocation.general(2, ([1], [0]))
        report = is_ce(v, S, (0, 1))
        assert not report.holds
        assert report.witness.condition == "outward_stability"

    def test_ce_individual_rationality(self):
        """Test a buyer paying more than its bundle is worth."""
        v = crossed_unit_demand_market()
        S = Allocation.general(2, ([0, 1], []))
        report = is_ce(v, S, (2, 2))
        assert report.witness.condition == "individual_rationality"

    def test_ce_needs_individual_rationality(self):
        """Test an overpriced lone buyer is a zero-low 2PE but not a CE."""
        v = ValuationProfile((SymmetricValuation.from_values((0, 1)),))
        S = Allocation.symmetric((1,))
        assert is_2pe(v, S, TwoPriceSystem.zero_low((5,))).holds
        report = is_ce(v, S, (5,))
        assert not report.holds
        assert report.witness.condition == "individual_rationality"

    @pytest.mark.parametrize("seed", range(40))
    def test_ce_is_zero_low_2pe_plus_rationality(self, seed):
        """Test CE holds exactly when the zero-low 2PE holds and every buyer is rational."""
        rng = np.random.default_rng(seed)
        if seed % 2:
            v = ValuationProfile(
                tuple(random_symmetric(3, ValuationClass.SUBADDITIVE, seed + i) for i in (0, 50))
            )
        else:
            v = random_market(seed, (ValuationClass.GENERAL,))
        for S in every_allocation(3, 2):
            p = tuple(Fraction(int(x), 2) for x in rng.integers(0, 8, size=3))
            zero_low = TwoPriceSystem.zero_low(p)
            expected = is_2pe(v, S, zero_low).holds and individually_rational(v, S, p)
            assert is_ce(v, S, p).holds == expected
            if expected and welfare(v, S) > 0:
                assert discrepancy(v, S, zero_low) <= 1

    def test_dimension_mismatch(self):
        """Test prices must cover every item."""
        v = no_ce_market()
        with pytest.raises(DimensionMismatch):
            is_2pe(v, Allocation.symmetric((4, 0)), TwoPriceSystem.single((1, 1)))

    @pytest.mark.parametrize("seed", range(12))
    def test_symmetric_matches_brute_force(self, seed):
        """Test the size-based check against bundle enumeration."""
        a = random_symmetric(5, ValuationClass.SUBADDITIVE, seed)
        b = random_symmetric(5, ValuationClass.SUBADDITIVE, seed + 100)
        v = ValuationProfile((a, b))
        S = Allocation.general(5, ([0, 3], [1, 2, 4]))
        high = tuple(Fraction((seed * 7 + 3 * j) % 5, 2) for j in range(5))
        low = tuple(h * Fraction(j % 3, 3) for j, h in enumerate(high))
        P = TwoPriceSystem(high, low)
        assert is_2pe(v, S, P).holds == brute_is_2pe(v, S, P)
        assert is_2pe(v.as_general(), S, P).holds == brute_is_2pe(v, S, P)

    @pytest.mark.parametrize("seed", range(6))
    def test_general_matches_brute_force(self, seed):
        """Test the bundle-table check on random general buyers."""
        v = ValuationProfile(
            (
                random_general(3, ValuationClass.GENERAL, seed),
                random_general(3, ValuationClass.GENERAL, seed + 50),
            )
        )
        S = Allocation.general(3, ([0], [1, 2]))
        P = TwoPriceSystem((4, 2, 5), (1, 2, 0))
        assert is_2pe(v, S, P).holds == brute_is_2pe(v, S, P)


class TestWelfare:
    """Test suite for welfare and discrepancy."""

    def test_welfare(self):
        """Test welfare sums the buyers' values."""
        v = crossed_unit_demand_market()
        assert welfare(v, Allocation.general(2, ([1], [0]))) == 2

    def test_opt_general(self):
        """Test the optimum gives each buyer its favourite item."""
        value, S = opt_welfare(crossed_unit_demand_market())
        assert value == 4
        assert S.bundles == (0b01, 0b10)

    def test_opt_symmetric(self, table_market):
        """Test the optimum of the 27-item table market."""
        value, S = opt_welfare(table_market)
        assert value == 6
        assert welfare(table_market, S) == 6

    def test_zero_welfare(self):
        """Test discrepancy is undefined at zero welfare."""
        v = ValuationProfile((SymmetricValuation.from_values((0, 0, 0)),))
        with pytest.raises(ZeroWelfare):
            discrepancy(v, Allocation.symmetric((2,)), TwoPriceSystem.single((0, 0)))

    def test_welfare_bound(self):
        """Test SW(S) * (1 + d) >= OPT for the stated 2PE."""
        v = no_ce_market()
        S, P = paper_equilibrium("ex3.2")
        assert welfare_bound_check(v, S, P)

    def test_welfare_bound_needs_equilibrium(self):
        """Test the bound check rejects non-equilibria."""
        v = no_ce_market()
        S = Allocation.symmetric((4, 0))
        with pytest.raises(NotAnEquilibrium):
            welfare_bound_check(v, S, TwoPriceSystem(("1/2",) * 4, ("1/3",) * 4))

    @pytest.mark.parametrize("factor", [Fraction(1, 3), Fraction(5)])
    def test_discrepancy_scale_invariance(self, factor):
        """Test scaling values and prices leaves the discrepancy unchanged."""
        v = no_ce_market()
        S, P = paper_equilibrium("ex3.2")
        scaled = ValuationProfile(tuple(b.scaled(factor) for b in v))
        Q = TwoPriceSystem(
            tuple(h * factor for h in P.high), tuple(lo * factor for lo in P.low)
        )
        assert is_2pe(scaled, S, Q).holds
        assert discrepancy(scaled, S, Q) == discrepancy(v, S, P)

    @pytest.mark.parametrize("seed", range(60))
    def test_welfare_bound_on_constructed_equilibria(self, seed):
        """Test SW * (1 + d) >= OPT for greedy and optimal-allocation 2PEs."""
        n, m = 2 + seed % 3, 3 + seed % 8
        profile = ValuationProfile(
            tuple(random_symmetric(m, ValuationClass.SUBADDITIVE, seed * 11 + i) for i in range(n))
        )
        certificate = allocate_heterogeneous(profile)
        S, P = certificate.allocation(), certificate.two_price_system()
        assert welfare_bound_check(profile, S, P)
        v = random_market(seed, (ValuationClass.XOS, ValuationClass.GENERAL))
        if opt_welfare(v)[0] > 0:
            S, P, _ = opt_discrepancy_upper_bound(v)
            assert welfare_bound_check(v, S, P)


class TestWelfareTheorems:
    """Test suite for welfare of verified Walrasian and conditional equilibria."""

    CLASSES = (
        ValuationClass.UNIT_DEMAND,
        ValuationClass.ADDITIVE,
        ValuationClass.SUBMODULAR,
        ValuationClass.XOS,
        ValuationClass.GENERAL,
    )

    @pytest.mark.parametrize("seed", range(30))
    def test_walrasian_allocations_are_optimal(self, seed):
        """Test every allocation with WE prices reaches the optimal welfare."""
        v = random_market(seed, self.CLASSES)
        opt, _ = opt_welfare(v)
        for S in every_allocation(3, 2):
            prices = find_we_prices(v, S)
            if prices is None:
                continue
            assert is_we(v, S, prices).holds
            assert welfare(v, S) == opt

    @pytest.mark.parametrize("seed", range(10))
    def test_unit_demand_has_we(self, seed):
        """Test unit-demand markets always have an optimal WE."""
        v = random_market(seed, (ValuationClass.UNIT_DEMAND,))
        found = search_we(v)
        assert found is not None
        S, _ = found
        assert welfare(v, S) == opt_welfare(v)[0]

    @pytest.mark.parametrize("seed", range(30))
    def test_ce_discrepancy_at_most_one(self, seed):
        """Test every CE priced as (p, 0) has discrepancy at most 1."""
        v = random_market(seed, self.CLASSES)
        for S in every_allocation(3, 2):
            prices = find_ce_prices(v, S)
            if prices is None or welfare(v, S) == 0:
                continue
            assert is_ce(v, S, prices).holds
            zero_low = TwoPriceSystem.zero_low(prices)
            assert is_2pe(v, S, zero_low).holds
            assert discrepancy(v, S, zero_low) <= 1


class TestUniformize:
    """Test suite for averaging prices within bundles."""

    def test_averages_keep_gap(self):
        """Test averaging keeps the gap and the equilibrium."""
        v = no_ce_market()
        S = Allocation.symmetric((4, 0))
        P = TwoPriceSystem(("9/10", "9/10", 1, 1), ("1/3", "1/3", 0, 0))
        uniform, report = uniformize(v, S, P)
        assert report.holds
        assert uniform.high == (Fraction(19, 20),) * 4
        assert uniform.low == (Fraction(1, 6),) * 4
        assert uniform.gap == P.gap

    def test_requires_equilibrium(self):
        """Test only 2PE are uniformized."""
        v = no_ce_market()
        S = Allocation.symmetric((4, 0))
        with pytest.raises(NotAnEquilibrium):
            uniformize(v, S, TwoPriceSystem(("1/2",) * 4, ("1/3",) * 4))


class TestUniformPrices:
    """Test suite for bundle-uniform prices on symmetric markets."""

    @pytest.mark.parametrize("counts", [(0, 27), (1, 26), (6, 21), (13, 14), (27, 0)])
    def test_canonical_prices_are_2pe(self, table_market, counts):
        """Test canonical prices pass both the uniform and the general check."""
        U = u2pe_sufficient_prices(table_market, counts)
        assert u2pe_feasible(table_market, counts, U).holds
        P = TwoPriceSystem.uniform_from(U, counts)
        assert is_2pe(table_market, Allocation.symmetric(counts), P).holds

    @pytest.mark.parametrize("seed", range(100))
    def test_feasibility_matches_item_check(self, seed):
        """Test the three uniform conditions agree with the per-item check."""
        rng = np.random.default_rng(seed)
        n, m = 2 + seed % 2, 2 + seed % 7
        profile = ValuationProfile(
            tuple(random_symmetric(m, ValuationClass.SUBADDITIVE, seed * 13 + i) for i in range(n))
        )
        cuts = sorted(int(x) for x in rng.integers(0, m + 1, size=n - 1))
        counts = tuple(b - a for a, b in zip([0] + cuts, cuts + [m]))
        S = Allocation.symmetric(counts)
        pairs = [sorted(Fraction(int(x), 2) for x in rng.integers(0, 7, size=2)) for _ in range(n)]
        drawn = UniformPrices(tuple(p[1] for p in pairs), tuple(p[0] for p in pairs))
        for U in (drawn, u2pe_sufficient_prices(profile, counts)):
            expected = is_2pe(profile, S, TwoPriceSystem.uniform_from(U, counts)).holds
            assert u2pe_feasible(profile, counts, U).holds == expected

    def test_low_above_backward_slope(self, table_market):
        """Test a low price above the backward slope fails."""
        report = u2pe_feasible(table_market, (6, 21), UniformPrices((1, 1), (1, 1)))
        assert not report.holds

    def test_buying_pays_off(self, table_market):
        """Test free items make buying pay off."""
        report = u2pe_feasible(table_market, (6, 21), UniformPrices((0, 0), (0, 0)))
        assert report.witness.condition == "buying_pays_off"

    def test_count_mismatch(self, table_market):
        """Test counts must split all items."""
        with pytest.raises(CountMismatch):
            u2pe_sufficient_prices(table_market, (6, 20))

    def test_general_market_rejected(self):
        """Test counts only describe symmetric markets."""
        with pytest.raises(MalformedInput):
            u2pe_sufficient_prices(crossed_unit_demand_market(), (1, 1))


class TestMinDiscrepancy:
    """Test suite for the split scan and the per-split table."""

    def test_table_market(self, table_market):
        """Test the least discrepancy of two buyers over 27 items."""
        result = min_discrepancy(table_market)
        assert result.discrepancy == Fraction(6, 5)
        assert result.allocation.counts == (6, 21)
        assert result.exact

    def test_allocation_discrepancy_two(self, table_market):
        """Test single splits of the table market."""
        _, d = allocation_discrepancy_two(table_market, (0, 27))
        assert d == Fraction(81, 22)
        _, d = allocation_discrepancy_two(table_market, (13, 14))
        assert d == Fraction(47, 36)

    def test_table_rows(self):
        """Test the first row leaves the empty bundle's prices undefined."""
        rows = table_rows(step_valuation_27())
        assert len(rows) == 14
        first = rows[0]
        assert (first["k1"], first["k2"]) == (0, 27)
        assert first["high_1"] is None and first["low_1"] is None
        assert first["high_2"] == 1
        assert first["low_2"] == Fraction(2, 11)
        assert first["forward_2"] is None
        assert first["backward_1"] is None
        assert rows[6]["discrepancy"] == Fraction(6, 5)

    def test_three_buyers_upper_bound(self):
        """Test more than two buyers give an upper bound."""
        v = step_valuation_27()
        result = min_discrepancy(ValuationProfile((v, v, v)))
        assert not result.exact
        assert sum(result.allocation.counts) == 27

    def test_budget(self, restore_limits):
        """Test the split budget."""
        use_limits(Limits(max_compositions=10))
        v = step_valuation_27()
        with pytest.raises(InstanceTooLarge):
            min_discrepancy(ValuationProfile((v, v, v)))


class TestWalrasian:
    """Test suite for Walrasian equilibrium existence."""

    def test_additive_buyers(self):
        """Test additive buyers clear at their common marginal value."""
        v = SymmetricValuation.from_values((0, 1, 2, 3))
        found = we_exists_symmetric(ValuationProfile((v, v)))
        assert found is not None
        S, price = found
        assert S.counts == (0, 3)
        assert price == 1
        assert is_we(ValuationProfile((v, v)), S, (price,) * 3).holds

    def test_no_we(self, table_market):
        """Test markets with positive least discrepancy have no WE."""
        assert we_exists_symmetric(table_market) is None
        assert we_exists_symmetric(no_ce_market()) is None

    def test_single_buyer(self):
        """Test a lone buyer takes everything at price zero."""
        v = SymmetricValuation.from_values((0, 1, 1))
        S, price = we_exists_symmetric(ValuationProfile((v,)))
        assert S.counts == (2,)
        assert price == 0

    def test_submodular_market(self):
        """Test submodular buyers always have a WE."""
        a = random_symmetric(6, ValuationClass.SUBMODULAR, 1)
        b = random_symmetric(6, ValuationClass.SUBMODULAR, 2)
        v = ValuationProfile((a, b))
        S, price = we_exists_symmetric(v)
        assert is_we(v, S, (price,) * 6).holds

    @pytest.mark.parametrize("seed", range(60))
    def test_matches_exhaustive_search(self, seed):
        """Test existence agrees with trying every split at every slope price."""
        n = 2 + seed % 2
        m = 1 + seed % (12 if n == 2 else 9)
        classes = (ValuationClass.SUBMODULAR, ValuationClass.XOS, ValuationClass.SUBADDITIVE)
        v = ValuationProfile(
            tuple(random_symmetric(m, classes[(seed + i) % 3], seed * 17 + i) for i in range(n))
        )
        found = we_exists_symmetric(v)
        assert (found is not None) == exhaustive_we_exists(v)
        if found is not None:
            S, price = found
            assert is_we(v, S, (price,) * m).holds


class TestPriceSearch:
    """Test suite for CE and WE price search on general markets."""

    def test_no_ce(self):
        """Test the four-item market has no conditional equilibrium."""
        assert search_ce(no_ce_market()) is None

    def test_find_we(self):
        """Test crossed buyers have a WE with their favourite items."""
        v = crossed_unit_demand_market()
        S, prices = search_we(v)
        assert S.bundles == (0b01, 0b10)
        assert is_we(v, S, prices).holds

    def test_find_ce_prices(self):
        """Test CE prices for the worse-item allocation."""
        v = crossed_unit_demand_market()
        S = Allocation.general(2, ([1], [0]))
        prices = find_ce_prices(v, S)
        assert prices is not None
        assert is_ce(v, S, prices).holds
        assert find_we_prices(v, S) is None

    def test_search_cap(self):
        """Test the allocation search cap."""
        with pytest.raises(InstanceTooLarge):
            search_ce(crossed_unit_demand_market(), max_m=1)

    def test_search_cap_from_limits(self, restore_limits):
        """Test the default cap comes from the configured limits."""
        use_limits(Limits(max_search_m=1))
        with pytest.raises(InstanceTooLarge):
            search_we(crossed_unit_demand_market())
        assert search_we(crossed_unit_demand_market(), max_m=2) is not None


class TestOptimalUpperBound:
    """Test suite for pricing a welfare-optimal allocation."""

    def test_crossed_market(self):
        """Test owners' full values as high prices."""
        S, P, d = opt_discrepancy_upper_bound(crossed_unit_demand_market())
        assert S.bundles == (0b01, 0b10)
        assert P.high == (2, 2)
        assert P.low == (0, 0)
        assert d == 1

    @pytest.mark.parametrize("seed", range(5))
    def test_within_item_count(self, seed):
        """Test the discrepancy stays within m on random markets."""
        v = ValuationProfile(
            tuple(random_general(3, ValuationClass.GENERAL, seed + 10 * i) for i in range(3))
        )
        if opt_welfare(v)[0] == 0:
            pytest.skip("zero-welfare draw")
        S, P, d = opt_discrepancy_upper_bound(v)
        assert is_2pe(v, S, P).holds
        assert d <= 3
