"""Decision-boundary instability toolkit.

Filter-bank label maps, grid symmetry groups and orbit-volume bounds,
empirical epsilon-stability, feature usefulness under perturbation, and a
query-budgeted label-only boundary attack.
"""

from .core import (
    ConstantClassifier,
    DecisionFunction,
    LinearFeatureClassifier,
    MeanThresholdClassifier,
    Point,
    RejectedInputError,
    ThresholdClassifier,
    VectorizedClassifier,
    evaluate_linear,
    seeded_stream,
)

__version__ = "0.1.0"
