"""Feature tables joining LM-likelihood features, relation-embedding
metrics, and ground-truth counts.

Rows exist only for examples whose target count exceeds one, targets are
ln(1 + count), and no explicit relation-identity feature is included; the
relation_id column is metadata for cross-validation, never a regressor.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import log
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

LM_FEATURES = ("logprob_correct", "fewshot_accuracy")
LRE_FEATURES = ("faithfulness", "faith_prob", "soft_causality", "hard_causality")
ALL_FEATURES = LM_FEATURES + LRE_FEATURES

TARGET_KINDS = ("object", "subject_object")


@dataclass
class FeatureRow:
    relation_id: int
    example_id: str
    object_term: int          # metadata: object-leakage exclusion in LORO-CV
    logprob_correct: float
    fewshot_accuracy: float
    faithfulness: float
    faith_prob: float
    soft_causality: float
    hard_causality: float
    target_ln_count: float
    target_kind: str

    def features(self, names: Sequence[str] = ALL_FEATURES) -> list[float]:
        return [getattr(self, n) for n in names]

    @property
    def target_count(self) -> float:
        return np.expm1(self.target_ln_count)


def build_feature_table(
    relations,                 # iterable of RelationData
    metrics: dict,             # relation_id -> LREMetrics
    lm_evals: dict,            # (relation_id, subject_id) -> (logprob, fewshot_acc)
    counts,                    # CountTable
    target_kind: str = "object",
) -> list[FeatureRow]:
    """Join per-relation metrics and per-example LM features against counts.

    Examples with target count <= 1 are dropped (counts of 0 and 1 carry no
    usable frequency signal). Examples whose terms cannot be resolved raise,
    listing every offender.
    """
    if target_kind not in TARGET_KINDS:
        raise ValueError(f"target_kind {target_kind!r} not in {TARGET_KINDS}")
    rows: list[FeatureRow] = []
    unresolved: list[str] = []
    for rel in relations:
        met = metrics[rel.relation_id]
        for ex in rel.examples:
            if ex.object_term is None or (
                target_kind == "subject_object" and ex.subject_term is None
            ):
                unresolved.append(f"{rel.name}/{ex.subject_id}")
                continue
            if target_kind == "object":
                count = counts.occurrence(ex.object_term)
            else:
                count = counts.pair(ex.subject_term, ex.object_term)
            if count <= 1:
                continue
            logprob, fewshot = lm_evals[(rel.relation_id, ex.subject_id)]
            rows.append(
                FeatureRow(
                    relation_id=rel.relation_id,
                    example_id=ex.subject_id,
                    object_term=ex.object_term,
                    logprob_correct=float(logprob),
                    fewshot_accuracy=float(fewshot),
                    faithfulness=float(met.faithfulness),
                    faith_prob=float(met.faith_prob),
                    soft_causality=float(met.soft_causality),
                    hard_causality=float(met.hard_causality),
                    target_ln_count=log(1 + count),
                    target_kind=target_kind,
                )
            )
    if unresolved:
        raise ValueError(f"examples without resolvable term ids: {unresolved}")
    return rows


def feature_matrix(rows: Sequence[FeatureRow], names: Sequence[str] = ALL_FEATURES):
    """(X, y) arrays in row order."""
    X = np.asarray([r.features(names) for r in rows], dtype=np.float64)
    y = np.asarray([r.target_ln_count for r in rows], dtype=np.float64)
    return X, y


_COLUMNS = (
    ("relation_id", int),
    ("example_id", str),
    ("object_term", int),
    ("logprob_correct", float),
    ("fewshot_accuracy", float),
    ("faithfulness", float),
    ("faith_prob", float),
    ("soft_causality", float),
    ("hard_causality", float),
    ("target_ln_count", float),
    ("target_kind", str),
)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_feature_table(path, rows: Iterable[FeatureRow]) -> None:
    lines = ["\t".join(name for name, _ in _COLUMNS)]
    for r in rows:
        lines.append("\t".join(_fmt(getattr(r, name)) for name, _ in _COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def read_feature_table(path) -> list[FeatureRow]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split("\t")
    expected = [name for name, _ in _COLUMNS]
    if header != expected:
        raise ValueError(f"{path}: header {header} != {expected}")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        values = line.split("\t")
        kwargs = {
            name: caster(val) for (name, caster), val in zip(_COLUMNS, values)
        }
        rows.append(FeatureRow(**kwargs))
    return rows
