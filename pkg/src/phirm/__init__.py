"""Exact and approximate (Phi, f)-regret-matching with empirical regret-bound checks."""

__version__ = "0.1.0"
