"""
Unit tests for endowed valuations and endowment equilibria.
"""

from fractions import Fraction

import pytest

from src.config import Limits, use_limits
from src.endowment import (
    SUPPORTING_PRICES,
    GainFunction,
    GainKind,
    SupportingPriceTable,
    ee_to_two_price,
    endowed_value,
    gain_order_check,
    gain_value,
    is_ee,
    marginal_gain,
    two_price_to_ee,
    xos_ee_exists,
)
from src.allocation import allocate_heterogeneous
from src.equilibrium import (
    Allocation,
    TwoPriceSystem,
    discrepancy,
    opt_discrepancy_upper_bound,
    opt_welfare,
)
from src.errors import InstanceTooLarge, MalformedInput, NotAnEquilibrium, NotXOS
from src.instances import crossed_unit_demand_market, no_ce_market, paper_equilibrium
from src.valuations import (
    SymmetricValuation,
    ValuationClass,
    ValuationProfile,
    additive_general,
    random_general,
    random_symmetric,
    unit_demand_general,
    xos_general,
)


@pytest.fixture(autouse=True)
def fresh_supporting_prices():
    SUPPORTING_PRICES.clear()
    yield
    SUPPORTING_PRICES.clear()


def random_equilibrium(seed):
    """A verified 2PE: greedy on a symmetric market or priced optimum on a general one."""
    if seed % 2:
        n, m = 2 + seed % 4 // 2, 2 + seed % 6
        v = ValuationProfile(
            tuple(random_symmetric(m, ValuationClass.SUBADDITIVE, seed * 3 + i) for i in range(n))
        )
        certificate = allocate_heterogeneous(v)
        return v, certificate.allocation(), certificate.two_price_system()
    classes = (ValuationClass.XOS, ValuationClass.GENERAL)
    v = ValuationProfile(
        tuple(random_general(3, classes[(seed + i) % 2], seed * 7 + i) for i in range(2))
    )
    if opt_welfare(v)[0] == 0:
        pytest.skip("zero-welfare draw")
    S, P, _ = opt_discrepancy_upper_bound(v)
    return v, S, P


class TestGainFunctions:
    """Test suite for gain values and marginal gains."""

    def test_identity(self):
        """Test the identity gain is the base value of the kept items."""
        v = unit_demand_general((2, 1))
        assert gain_value(GainFunction.identity(), v, 0b11, 0b10) == 1

    def test_absolute_loss_marginal(self):
        """Test the absolute-loss marginal of Z is v(Z)."""
        v = xos_general([[2, 0, 1], [0, 3, 1]])
        al = GainFunction.absolute_loss()
        for Z in range(8):
            assert marginal_gain(al, v, 0b111, Z) == v(Z)

    def test_identity_marginal(self):
        """Test the identity marginal is v(X) - v(X \\ Z)."""
        v = additive_general((1, 2, 4))
        assert marginal_gain(GainFunction.identity(), v, 0b111, 0b100) == 4

    def test_supporting(self):
        """Test supporting-price gains sum the support of the endowment."""
        v = SymmetricValuation.from_values((0, 2, 3, 4))
        gain = gain_value(GainFunction.supporting(), v, 0b111, 0b011)
        assert gain == Fraction(8, 3)
        assert len(SUPPORTING_PRICES) == 1

    def test_supporting_table_bounded(self):
        """Test equal valuations share an entry and the oldest entries are evicted."""
        table = SupportingPriceTable(maxsize=2)
        first = table.get(SymmetricValuation.from_values((0, 2, 3, 4)), 0b011)
        again = table.get(SymmetricValuation.from_values((0, 2, 3, 4)), 0b011)
        assert first == again == (Fraction(3, 2), Fraction(3, 2), 0)
        assert len(table) == 1
        for top in (5, 6, 7):
            table.get(SymmetricValuation.from_values((0, 2, 3, top)), 0b011)
        assert len(table) == 2

    def test_additive_weights(self):
        """Test explicit additive gains."""
        g = GainFunction.additive(("1/2", 1))
        assert gain_value(g, additive_general((1, 1)), 0b11, 0b11) == Fraction(3, 2)

    def test_explicit_table(self):
        """Test explicit per-endowment tables."""
        g = GainFunction.explicit({3: {1: "1/4", 2: 0, 3: 1}})
        v = additive_general((1, 1))
        assert gain_value(g, v, 3, 1) == Fraction(1, 4)
        assert gain_value(g, v, 3, 0) == 0
        with pytest.raises(MalformedInput):
            gain_value(g, v, 1, 1)

    def test_kept_outside_endowment(self):
        """Test kept items must lie inside the endowment."""
        with pytest.raises(MalformedInput):
            gain_value(GainFunction.identity(), additive_general((1, 1)), 0b01, 0b10)

    @pytest.mark.parametrize(
        "build",
        [
            lambda: GainFunction(GainKind.EXPLICIT),
            lambda: GainFunction.additive((1, -1)),
        ],
    )
    def test_malformed(self, build):
        """Test an explicit gain without data and negative weights."""
        with pytest.raises(MalformedInput):
            build()

    def test_endowed_value(self):
        """Test base value plus gain on the kept endowment."""
        v = unit_demand_general((2, 1))
        assert endowed_value(v, 0b01, GainFunction.identity(), 0b11) == 4
        assert endowed_value(v, 0b01, GainFunction.identity(), 0b10) == 1


class TestGainOrder:
    """Test suite for identity <= supporting <= absolute loss."""

    @pytest.mark.parametrize("seed", range(5))
    def test_xos_order(self, seed):
        """Test the order holds on random XOS valuations."""
        v = random_general(4, ValuationClass.XOS, seed)
        assert gain_order_check(v, 0b1111)
        assert gain_order_check(v, 0b0101)

    def test_not_xos(self):
        """Test a valuation without supporting prices at four items."""
        v = no_ce_market()[0]
        with pytest.raises(NotXOS):
            gain_order_check(v, 0b1111)

    def test_cap(self):
        """Test the item cap."""
        use_limits(Limits(gain_order_max_m=2))
        try:
            with pytest.raises(InstanceTooLarge):
                gain_order_check(additive_general((1, 1, 1)), 0b111)
        finally:
            use_limits(Limits())


class TestConversions:
    """Test suite for converting between 2PE and EE."""

    def test_two_price_to_ee(self):
        """Test the gap gain turns the stated 2PE into an EE at the high prices."""
        v = no_ce_market()
        S, P = paper_equilibrium("ex3.2")
        requirements, gains, report = two_price_to_ee(v, S, P)
        assert report.holds
        assert len(requirements) == 15
        full = next(r for r in requirements if r.bundle == 0b1111)
        assert full.required == Fraction(34, 15)
        assert gains[0].weights == (Fraction(17, 30),) * 4

    def test_round_trip(self):
        """Test converting back recovers the low prices and discrepancy."""
        v = no_ce_market()
        S, P = paper_equilibrium("ex3.2")
        _, gains, _ = two_price_to_ee(v, S, P)
        recovered, report = ee_to_two_price(v, S, P.high, gains)
        assert report.holds
        assert recovered.low == (Fraction(1, 3),) * 4
        assert discrepancy(v, S, recovered) == Fraction(17, 15)

    @pytest.mark.parametrize("seed", range(80))
    def test_random_round_trip(self, seed):
        """Test random two-price equilibria become EEs and convert back unchanged."""
        v, S, P = random_equilibrium(seed)
        _, gains, report = two_price_to_ee(v, S, P)
        assert report.holds
        recovered, report = ee_to_two_price(v, S, P.high, gains)
        assert report.holds
        assert recovered == P

    def test_rejects_non_equilibrium(self):
        """Test both directions reject inputs that are not equilibria."""
        v = no_ce_market()
        S = Allocation.symmetric((4, 0))
        with pytest.raises(NotAnEquilibrium):
            two_price_to_ee(v, S, TwoPriceSystem(("1/2",) * 4, ("1/3",) * 4))
        with pytest.raises(NotAnEquilibrium):
            ee_to_two_price(v, S, ("1/2",) * 4, GainFunction.identity())

    def test_gain_count(self):
        """Test one gain function per buyer."""
        v = no_ce_market()
        S, P = paper_equilibrium("ex3.2")
        with pytest.raises(MalformedInput):
            is_ee(v, S, P.high, [GainFunction.identity()])


class TestXOSEndowment:
    """Test suite for supporting-price endowment equilibria."""

    def test_crossed_market(self):
        """Test each buyer's favourite item priced at its value."""
        S, p_hat, report = xos_ee_exists(crossed_unit_demand_market())
        assert S.bundles == (0b01, 0b10)
        assert p_hat == (2, 2)
        assert report.holds

    @pytest.mark.parametrize("seed", range(4))
    def test_random_xos(self, seed):
        """Test random XOS markets have a supporting-price EE."""
        v = ValuationProfile(
            (
                random_general(3, ValuationClass.XOS, seed),
                random_general(3, ValuationClass.XOS, seed + 20),
            )
        )
        S, p_hat, report = xos_ee_exists(v)
        assert report.holds
        assert is_ee(v, S, p_hat, GainFunction.supporting()).holds

    def test_not_xos(self):
        """Test a non-XOS buyer is rejected."""
        with pytest.raises(NotXOS):
            xos_ee_exists(no_ce_market())
