"""Evaluation: within-magnitude accuracy, ln-space MAE, baselines,
leave-one-relation-out cross-validation, Pearson correlation, and
cross-model transfer with token-ratio scaling."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..rng import derive_seed
from .features import ALL_FEATURES, FeatureRow, feature_matrix
from .forest import Forest, to_count, train_forest


def within_magnitude_accuracy(pred_counts, true_counts) -> float:
    """Fraction of predictions within one order of magnitude of the truth
    (|log10 pred - log10 true| <= 1). Predictions are clamped to >= 1."""
    pred = np.maximum(np.asarray(pred_counts, dtype=np.float64), 1.0)
    true = np.asarray(true_counts, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise ValueError("empty evaluation set")
    if np.any(true <= 0):
        raise ValueError("true counts must be positive")
    return float(np.mean(np.abs(np.log10(pred) - np.log10(true)) <= 1.0))


def mae_ln(pred_ln, true_ln) -> float:
    pred = np.asarray(pred_ln, dtype=np.float64)
    true = np.asarray(true_ln, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"length mismatch {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise ValueError("empty evaluation set")
    return float(np.mean(np.abs(pred - true)))


def pearson(x, y) -> float:
    """Product-moment correlation; errors on zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be equal-length vectors")
    if x.size < 2:
        raise ValueError("need at least two points")
    if np.std(x) == 0 or np.std(y) == 0:
        raise ValueError("zero variance input")
    return float(np.corrcoef(x, y)[0, 1])


def baselines(
    rows_train: Sequence[FeatureRow],
    rows_eval: Sequence[FeatureRow],
    seed: int = 0,
) -> dict[str, float]:
    """Within-magnitude accuracy of predicting the mean or a random training
    ln-count for every evaluation row."""
    if len(rows_train) == 0:
        raise ValueError("empty training set")
    if len(rows_eval) == 0:
        raise ValueError("empty evaluation set")
    train_ln = np.asarray([r.target_ln_count for r in rows_train])
    true_counts = to_count([r.target_ln_count for r in rows_eval])

    mean_pred = to_count(np.full(len(rows_eval), float(np.mean(train_ln))))
    rng = np.random.default_rng(seed)
    random_pred = to_count(train_ln[rng.integers(0, train_ln.size, size=len(rows_eval))])
    return {
        "mean": within_magnitude_accuracy(mean_pred, true_counts),
        "random": within_magnitude_accuracy(random_pred, true_counts),
    }


@dataclass
class FoldReport:
    seed: int
    relation_id: int
    n_train: int
    n_eval: int
    accuracy: float
    mae_ln: float
    baseline_mean: float
    baseline_random: float


@dataclass
class EvalReport:
    """Aggregate over folds: mean and std per metric, plus per-fold rows."""

    accuracy_mean: float
    accuracy_std: float
    mae_mean: float
    mae_std: float
    baseline_mean_accuracy: float
    baseline_random_accuracy: float
    n_folds: int
    folds: list[FoldReport] = field(default_factory=list)
    feature_names: tuple[str, ...] = ALL_FEATURES
    label: str = ""


def _evaluate_fold(forest: Forest, rows_eval: Sequence[FeatureRow]):
    pred_ln = forest.predict_rows(rows_eval)
    true_ln = np.asarray([r.target_ln_count for r in rows_eval])
    acc = within_magnitude_accuracy(to_count(pred_ln), to_count(true_ln))
    return acc, mae_ln(pred_ln, true_ln)


def loro_cv(
    rows: Sequence[FeatureRow],
    seeds: Sequence[int] = (0, 1, 2, 3),
    feature_names: Sequence[str] = ALL_FEATURES,
    n_trees: int = 100,
    label: str = "",
) -> EvalReport:
    """Leave-one-relation-out: every relation held out once per seed.

    Training rows sharing an object term with the held-out relation are
    dropped too, so no held-out object or relation ever leaks into training.
    """
    relation_ids = sorted({r.relation_id for r in rows})
    if len(relation_ids) < 2:
        raise ValueError("need at least two relations for LORO-CV")
    folds: list[FoldReport] = []
    for seed in seeds:
        for rel in relation_ids:
            rows_eval = [r for r in rows if r.relation_id == rel]
            heldout_objects = {r.object_term for r in rows_eval}
            rows_train = [
                r
                for r in rows
                if r.relation_id != rel and r.object_term not in heldout_objects
            ]
            if not rows_train or not rows_eval:
                raise ValueError(f"fold for relation {rel} has no usable rows")
            fold_seed = derive_seed(seed, rel)
            forest = train_forest(
                rows_train, feature_names=feature_names, n_trees=n_trees, seed=fold_seed
            )
            acc, mae = _evaluate_fold(forest, rows_eval)
            base = baselines(rows_train, rows_eval, seed=fold_seed)
            folds.append(
                FoldReport(
                    seed=seed,
                    relation_id=rel,
                    n_train=len(rows_train),
                    n_eval=len(rows_eval),
                    accuracy=acc,
                    mae_ln=mae,
                    baseline_mean=base["mean"],
                    baseline_random=base["random"],
                )
            )
    accs = np.asarray([f.accuracy for f in folds])
    maes = np.asarray([f.mae_ln for f in folds])
    return EvalReport(
        accuracy_mean=float(np.mean(accs)),
        accuracy_std=float(np.std(accs)),
        mae_mean=float(np.mean(maes)),
        mae_std=float(np.std(maes)),
        baseline_mean_accuracy=float(np.mean([f.baseline_mean for f in folds])),
        baseline_random_accuracy=float(np.mean([f.baseline_random for f in folds])),
        n_folds=len(folds),
        folds=folds,
        feature_names=tuple(feature_names),
        label=label,
    )


@dataclass
class TransferReport:
    accuracy: float
    mae_ln: float
    n_eval: int
    token_ratio: float
    source_model: str
    target_model: str
    count_scaling: str = "ground-truth counts scaled by token_ratio"


def cross_model_transfer(
    forest: Forest,
    rows_eval: Sequence[FeatureRow],
    token_ratio: float,
    source_model: str = "source",
    target_model: str = "target",
) -> TransferReport:
    """Evaluate a fitted forest on another model's rows; ground-truth counts
    are rescaled by the ratio of total tokens trained, features pass through
    unchanged."""
    if token_ratio <= 0:
        raise ValueError("token_ratio must be positive")
    if len(rows_eval) == 0:
        raise ValueError("empty evaluation set")
    pred_ln = forest.predict_rows(rows_eval)
    scaled_true = to_count([r.target_ln_count for r in rows_eval]) * token_ratio
    acc = within_magnitude_accuracy(to_count(pred_ln), scaled_true)
    mae = mae_ln(pred_ln, np.log1p(scaled_true))
    return TransferReport(
        accuracy=acc,
        mae_ln=mae,
        n_eval=len(rows_eval),
        token_ratio=float(token_ratio),
        source_model=source_model,
        target_model=target_model,
    )
