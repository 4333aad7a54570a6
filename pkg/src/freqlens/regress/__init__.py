"""Frequency regression: feature tables, forest, evaluation, importance."""

from .evaluate import (
    EvalReport,
    FoldReport,
    TransferReport,
    baselines,
    cross_model_transfer,
    loro_cv,
    mae_ln,
    pearson,
    within_magnitude_accuracy,
)
from .features import (
    ALL_FEATURES,
    LM_FEATURES,
    LRE_FEATURES,
    FeatureRow,
    build_feature_table,
    feature_matrix,
    read_feature_table,
    write_feature_table,
)
from .forest import Forest, read_forest, to_count, train_forest, write_forest
from .importance import PcaMergeResult, pca_merge, permutation_importance
from .tree import Tree, fit_tree

__all__ = [
    "ALL_FEATURES",
    "EvalReport",
    "FeatureRow",
    "FoldReport",
    "Forest",
    "LM_FEATURES",
    "LRE_FEATURES",
    "PcaMergeResult",
    "TransferReport",
    "Tree",
    "baselines",
    "build_feature_table",
    "cross_model_transfer",
    "feature_matrix",
    "fit_tree",
    "loro_cv",
    "mae_ln",
    "pca_merge",
    "pearson",
    "permutation_importance",
    "read_feature_table",
    "read_forest",
    "to_count",
    "train_forest",
    "within_magnitude_accuracy",
    "write_feature_table",
    "write_forest",
]
