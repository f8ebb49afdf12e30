"""
Unit tests for reproducing the published fixtures.
"""

from fractions import Fraction

import pytest

from src import reproduce as reproduce_module
from src.errors import FixtureFailed, UnknownInstance
from src.reproduce import REPRODUCERS, TABLE1_DISCREPANCIES, reproduce


class TestReproduce:
    """Test suite for fixture reproduction."""

    def test_table1(self):
        """Test every split of the 27-item market matches its fixture."""
        results = reproduce("table1")
        assert results["minimum"] == Fraction(6, 5)
        assert [row["discrepancy"] for row in results["rows"]] == list(TABLE1_DISCREPANCIES)

    def test_ex32(self):
        """Test the market without conditional equilibria."""
        results = reproduce("ex3.2")
        assert results["conditional_equilibrium"] is None
        assert results["discrepancy"] == Fraction(17, 15)

    def test_prop43(self):
        """Test the conditional equilibrium of crossed buyers."""
        results = reproduce("prop4.3")
        assert results["conditional_equilibrium"]["holds"]
        assert results["discrepancy"] == 1

    @pytest.mark.slow
    def test_thm72(self):
        """Test the least discrepancy over 3461 items."""
        results = reproduce("thm7.2")
        assert results["split"][0] in (1, 3460)
        assert Fraction(13895, 10000) < results["discrepancy"] < Fraction(139, 100)

    def test_unknown(self):
        """Test unknown fixture names."""
        with pytest.raises(UnknownInstance):
            reproduce("table9")

    def test_catalogue(self):
        """Test the fixture names."""
        assert set(REPRODUCERS) == {"table1", "thm7.2", "ex3.2", "prop4.3"}

    def test_mismatch_names_cell(self, monkeypatch):
        """Test a wrong expected value reports the first bad cell."""
        wrong = (Fraction(81, 23),) + TABLE1_DISCREPANCIES[1:]
        monkeypatch.setattr(reproduce_module, "TABLE1_DISCREPANCIES", wrong)
        with pytest.raises(FixtureFailed) as excinfo:
            reproduce("table1")
        assert excinfo.value.cell == "(0,27).discrepancy"
        assert excinfo.value.expected == Fraction(81, 23)
        assert excinfo.value.actual == Fraction(81, 22)
