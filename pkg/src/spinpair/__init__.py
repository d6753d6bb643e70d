"""Cooperative optical pumping and decoherence of two driven atoms."""

__version__ = "0.1.0"
