"""Trapped-ion spin-motion dynamics in static and dynamic magnetic gradients."""

__version__ = "0.1.0"
