"""Hanson-Wright and sub-gaussian concentration bounds with a Monte Carlo checker."""

__version__ = "0.1.0"
