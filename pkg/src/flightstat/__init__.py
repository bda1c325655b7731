"""Flight delay prediction toolkit.

Subpackages mirror the processing pipeline: ingest (parsing, cleaning,
synthetic data), features (encoding), numerics (least squares and
metrics), the three predictors (carrier_origin, seasonal, mlp), store
(persistence), dialog (the conversational agent), service (HTTP), and
cli (operator entry point).
"""

__version__ = "0.1.0"
