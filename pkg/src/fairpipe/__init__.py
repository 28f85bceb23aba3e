"""Fairness-aware evaluation of ML pipelines on tabular data with an isolated test set."""

__version__ = "0.1.0"
