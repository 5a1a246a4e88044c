"""Automated ML for binary tabular classification.

Pipeline: typed ingestion -> one of three preprocessing scenarios -> a bank of
from-scratch base learners -> out-of-fold stacking -> a greedy weighted
ensemble, with deterministic seeding end to end.
"""

__version__ = "0.1.0"
