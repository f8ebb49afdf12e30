"""Test suite for the two-price equilibrium package."""
