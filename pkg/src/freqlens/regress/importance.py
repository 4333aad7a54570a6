"""Permutation feature importance and PCA merging of correlated features."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ..rng import derive_seed
from .evaluate import within_magnitude_accuracy
from .features import ALL_FEATURES, FeatureRow, feature_matrix
from .forest import Forest, to_count


def permutation_importance(
    forest: Forest,
    rows: Sequence[FeatureRow],
    n_repeats: int = 10,
    seed: int = 0,
) -> dict[str, float]:
    """Mean drop in within-magnitude accuracy when one feature column is
    shuffled; run on held-out rows. A feature no tree splits on drops 0."""
    if len(rows) == 0:
        raise ValueError("empty evaluation set")
    X, y = feature_matrix(rows, forest.feature_names)
    true_counts = to_count(y)
    base = within_magnitude_accuracy(to_count(forest.predict(X)), true_counts)
    drops: dict[str, float] = {}
    for j, name in enumerate(forest.feature_names):
        total = 0.0
        for rep in range(n_repeats):
            rng = np.random.default_rng(derive_seed(seed, j * n_repeats + rep))
            Xp = X.copy()
            Xp[:, j] = Xp[rng.permutation(X.shape[0]), j]
            acc = within_magnitude_accuracy(to_count(forest.predict(Xp)), true_counts)
            total += base - acc
        drops[name] = total / n_repeats
    return drops


@dataclass
class PcaMergeResult:
    rows: list[FeatureRow]
    feature_names: tuple[str, ...]   # merged column replaces the subset
    merged_name: str
    explained_variance_ratio: float
    component: np.ndarray            # loadings on the standardized subset
    means: np.ndarray
    stds: np.ndarray


def pca_merge(
    rows: Sequence[FeatureRow],
    subset: Sequence[str],
    feature_names: Sequence[str] = ALL_FEATURES,
) -> PcaMergeResult:
    """Replace a correlated feature subset by its first principal component.

    Columns are standardized first; the explained-variance ratio reported is
    the top eigenvalue's share of the standardized covariance spectrum. The
    merged column overwrites the first subset feature; remaining subset
    features are dropped from the returned feature-name tuple.
    """
    subset = tuple(subset)
    if len(subset) < 2:
        raise ValueError("subset must contain at least two features")
    if len(rows) < 2:
        raise ValueError("need at least two rows")
    for name in subset:
        if name not in feature_names:
            raise ValueError(f"unknown feature {name!r}")
    Z, _ = feature_matrix(rows, subset)
    means = Z.mean(axis=0)
    stds = Z.std(axis=0)
    if np.any(stds == 0):
        dead = [subset[i] for i in np.flatnonzero(stds == 0)]
        raise ValueError(f"zero-variance features cannot be merged: {dead}")
    Z = (Z - means) / stds
    cov = (Z.T @ Z) / (Z.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    component = eigvecs[:, -1]
    # Deterministic sign: largest-magnitude loading is positive.
    pivot = int(np.argmax(np.abs(component)))
    if component[pivot] < 0:
        component = -component
    scores = Z @ component
    evr = float(eigvals[-1] / np.sum(eigvals))

    merged_name = subset[0]
    kept = tuple(n for n in feature_names if n not in subset[1:])
    out_rows = []
    for row, score in zip(rows, scores):
        out_rows.append(replace(row, **{merged_name: float(score)}))
    return PcaMergeResult(
        rows=out_rows,
        feature_names=kept,
        merged_name=merged_name,
        explained_variance_ratio=evr,
        component=component,
        means=means,
        stds=stds,
    )
