"""Intended-sarcasm detection: three transformer heads, imbalance-aware losses,
rephrase augmentation, hard-vote ensembles and sub-task evaluators."""

__version__ = "0.1.0"
