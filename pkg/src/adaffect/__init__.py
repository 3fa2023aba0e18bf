"""Ad affect recognition toolkit.

Agreement statistics, content and EEG feature extraction, shallow/MTL/CNN
classifiers, decision fusion, a cross-validation harness, and a GA-based
ad-insertion scheduler, all runnable at desk scale on synthetic data.
"""

__version__ = "0.1.0"

from .core import (
    AffectLabel,
    Quadrant,
    AdRecord,
    RatingMatrix,
    FeatureMatrix,
    load_manifest,
    min_max_normalize,
    binarize_ratings,
    quadrant_summary,
)

__all__ = [
    "__version__",
    "AffectLabel",
    "Quadrant",
    "AdRecord",
    "RatingMatrix",
    "FeatureMatrix",
    "load_manifest",
    "min_max_normalize",
    "binarize_ratings",
    "quadrant_summary",
]
