"""
In-context learning: prediction methods, Template Ensembles, and demonstration selection.
"""

# Prediction methods.
from .predict import (
    DEFAULT_CF_TOKENS, METHODS, LabelDistribution, Prediction, adjust_boundary, calibrate, classify,
    content_free_distribution, predict, predict_calibrated, predict_channel, predict_direct
)

# Template Ensembles.
from .ensemble import ensemble_average, ensemble_pool, ensemble_predict, ensemble_vote

# Demonstration selection.
from .select import DemonstrationSet, load_demonstrations, select_random, select_subset
