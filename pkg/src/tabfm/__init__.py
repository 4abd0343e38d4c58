"""Desk-scale tabular foundation model.

Retrieval-based in-context learning on tabular data: self-supervised
pre-training of a row-token transformer over a corpus of real tables, plus
inference, few-shot, scaling-law, evaluation, and data-hygiene tooling.
"""

__version__ = "0.1.0"
