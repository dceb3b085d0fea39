"""Symmetric few-body equilibria, stability, and hierarchical-stability tools."""

__version__ = "0.1.0"
