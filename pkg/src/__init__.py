"""
Two-Price Equilibrium Package
Provides tools for computing and verifying two-price equilibria of
combinatorial markets, with discrepancy guarantees.
"""

__version__ = "0.1.0"
