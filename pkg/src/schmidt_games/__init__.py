"""Simulator and verifier for Schmidt-type games driven by smooth dynamics."""

__version__ = "0.1.0"
