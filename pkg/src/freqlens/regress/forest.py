"""Random forest regressor over feature rows.

100 trees by default, each on a bootstrap resample of size n. Per-tree seeds
come from a splitmix expansion of the master seed and rows are sorted by
(relation_id, example_id) before training, so results are independent of
both input order and any parallel scheduling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..rng import derive_seed
from .features import ALL_FEATURES, FeatureRow, feature_matrix
from .tree import Tree, fit_tree

DEFAULT_N_TREES = 100


@dataclass
class Forest:
    trees: list[Tree]
    master_seed: int
    feature_names: tuple[str, ...]
    hyperparams: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        """Mean over trees, in ln(1 + count) space."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.feature_names):
            raise ValueError(
                f"feature dimension {X.shape[1]} != {len(self.feature_names)} "
                f"({self.feature_names})"
            )
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)

    def predict_rows(self, rows: Sequence[FeatureRow]) -> np.ndarray:
        X, _ = feature_matrix(rows, self.feature_names)
        return self.predict(X)

    def used_features(self) -> set[int]:
        used: set[int] = set()
        for t in self.trees:
            used |= t.used_features()
        return used


def to_count(ln_value) -> np.ndarray:
    """Inverse target transform, clamped at zero: exp(ln) - 1."""
    return np.maximum(np.expm1(np.asarray(ln_value, dtype=np.float64)), 0.0)


def train_forest(
    rows: Sequence[FeatureRow],
    feature_names: Sequence[str] = ALL_FEATURES,
    n_trees: int = DEFAULT_N_TREES,
    seed: int = 0,
    bootstrap: bool = True,
    max_depth: Optional[int] = None,
    min_samples_leaf: int = 1,
) -> Forest:
    if len(rows) == 0:
        raise ValueError("no training rows")
    if len(feature_names) == 0:
        raise ValueError("empty feature set")
    ordered = sorted(rows, key=lambda r: (r.relation_id, r.example_id))
    X, y = feature_matrix(ordered, feature_names)
    n = X.shape[0]
    trees = []
    for t in range(n_trees):
        if bootstrap:
            rng = np.random.default_rng(derive_seed(seed, t))
            idx = rng.integers(0, n, size=n)
            Xt, yt = X[idx], y[idx]
        else:
            Xt, yt = X, y
        trees.append(
            fit_tree(Xt, yt, max_depth=max_depth, min_samples_leaf=min_samples_leaf)
        )
    return Forest(
        trees=trees,
        master_seed=seed,
        feature_names=tuple(feature_names),
        hyperparams={
            "n_trees": n_trees,
            "bootstrap": bootstrap,
            "max_depth": max_depth,
            "min_samples_leaf": min_samples_leaf,
        },
    )


def write_forest(path, forest: Forest) -> None:
    """Forest artifact: JSON header line + per-tree node arrays (LE binary)."""
    header = {
        "format": "forest-v1",
        "master_seed": forest.master_seed,
        "feature_names": list(forest.feature_names),
        "hyperparams": forest.hyperparams,
        "node_counts": [t.n_nodes for t in forest.trees],
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        for t in forest.trees:
            fh.write(np.ascontiguousarray(t.feature, dtype="<i4").tobytes())
            fh.write(np.ascontiguousarray(t.threshold, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(t.left, dtype="<i4").tobytes())
            fh.write(np.ascontiguousarray(t.right, dtype="<i4").tobytes())
            fh.write(np.ascontiguousarray(t.value, dtype="<f8").tobytes())


def read_forest(path) -> Forest:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != "forest-v1":
            raise ValueError(f"{path}: not a forest artifact")
        trees = []
        for n in header["node_counts"]:
            feature = np.frombuffer(fh.read(4 * n), dtype="<i4")
            threshold = np.frombuffer(fh.read(8 * n), dtype="<f8")
            left = np.frombuffer(fh.read(4 * n), dtype="<i4")
            right = np.frombuffer(fh.read(4 * n), dtype="<i4")
            value = np.frombuffer(fh.read(8 * n), dtype="<f8")
            trees.append(
                Tree(
                    feature=feature.copy(),
                    threshold=threshold.copy(),
                    left=left.copy(),
                    right=right.copy(),
                    value=value.copy(),
                )
            )
    return Forest(
        trees=trees,
        master_seed=header["master_seed"],
        feature_names=tuple(header["feature_names"]),
        hyperparams=header["hyperparams"],
    )
