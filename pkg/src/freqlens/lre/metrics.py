"""Quality metrics for fitted relation embeddings.

Faithfulness asks whether the affine approximation decodes to the same top
token as the model it approximates; causality asks whether editing the
subject representation through the rank-truncated pseudoinverse of W steers
the model to a chosen target object. Hard causality requires the target to
become the top prediction; the soft variant only requires the target token
to outscore the source's original object token after the edit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .data import RelationExample
from .fit import LRE, lre_apply
from .linalg import low_rank_pinv
from .model import decode_argmax, log_softmax


@dataclass(frozen=True)
class LREMetrics:
    faithfulness: float
    faith_prob: float
    soft_causality: float
    hard_causality: float
    n_eval: int

    def __post_init__(self):
        for name in ("faithfulness", "soft_causality", "hard_causality"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} = {v} outside [0, 1]")


def faithfulness(lre: LRE, model, examples: Sequence[RelationExample]) -> float:
    """Fraction of examples where the LRE and the model decode the same token."""
    if len(examples) == 0:
        raise ValueError("empty evaluation set")
    hits = 0
    for ex in examples:
        lre_tok = decode_argmax(model.decode(lre_apply(lre, ex.subject_vector)))
        model_out = model.forward(ex.subject_vector, ex.context_id, probe_point=lre.probe_point)
        model_tok = decode_argmax(model.decode(model_out))
        hits += lre_tok == model_tok
    return hits / len(examples)


def faith_prob(lre: LRE, model, examples: Sequence[RelationExample]) -> float:
    """Mean log-probability of each example's object token under the LRE."""
    if len(examples) == 0:
        raise ValueError("empty evaluation set")
    total = 0.0
    for ex in examples:
        logp = log_softmax(model.decode(lre_apply(lre, ex.subject_vector)))
        total += logp[ex.object_token]
    return total / len(examples)


@dataclass(frozen=True)
class EditResult:
    token: int
    scores: np.ndarray
    delta: np.ndarray  # subject-space edit that was applied


def causal_edit(
    lre: LRE,
    model,
    source: RelationExample,
    target: RelationExample,
    rank: Optional[int] = None,
) -> EditResult:
    """Steer `source` toward `target`'s object via the pseudoinverse of W."""
    rank = lre.rank if rank is None else rank
    pinv = low_rank_pinv(lre.W, rank)
    o_src = np.asarray(
        model.forward(source.subject_vector, source.context_id, probe_point=lre.probe_point)
    )
    o_tgt = np.asarray(
        model.forward(target.subject_vector, target.context_id, probe_point=lre.probe_point)
    )
    delta = pinv @ (o_tgt - o_src)
    edited = model.forward(
        source.subject_vector + delta, source.context_id, probe_point=lre.probe_point
    )
    scores = np.asarray(model.decode(edited), dtype=np.float64)
    return EditResult(token=decode_argmax(scores), scores=scores, delta=delta)


def causality(
    lre: LRE,
    model,
    pairs: Sequence[tuple[RelationExample, RelationExample]],
    rank: Optional[int] = None,
) -> dict[str, float]:
    """Soft and hard edit success over (source, target) pairs."""
    if len(pairs) == 0:
        raise ValueError("empty pair set")
    soft = hard = 0
    for source, target in pairs:
        res = causal_edit(lre, model, source, target, rank=rank)
        hard += res.token == target.object_token
        soft += res.scores[target.object_token] > res.scores[source.object_token]
    n = len(pairs)
    return {"soft": soft / n, "hard": hard / n}


def cyclic_eval_pairs(
    examples: Sequence[RelationExample],
) -> list[tuple[RelationExample, RelationExample]]:
    """(example_i, example_{i+1}) pairs, skipping same-object pairings."""
    n = len(examples)
    pairs = []
    for i in range(n):
        src, tgt = examples[i], examples[(i + 1) % n]
        if src is tgt or src.object_token == tgt.object_token:
            continue
        pairs.append((src, tgt))
    return pairs


def evaluate_lre(
    lre: LRE,
    model,
    examples: Sequence[RelationExample],
    pairs=None,
    rank: Optional[int] = None,
) -> LREMetrics:
    """All four metrics over one evaluation set."""
    if pairs is None:
        pairs = cyclic_eval_pairs(examples)
    caus = (
        causality(lre, model, pairs, rank=rank)
        if pairs
        else {"soft": 0.0, "hard": 0.0}
    )
    return LREMetrics(
        faithfulness=faithfulness(lre, model, examples),
        faith_prob=faith_prob(lre, model, examples),
        soft_causality=caus["soft"],
        hard_causality=caus["hard"],
        n_eval=len(examples),
    )


def lm_features(model, example: RelationExample, trials: int = 5) -> tuple[float, float]:
    """(log-probability of the object token, accuracy across `trials`).

    Reference models are deterministic, so trials differ only by rotating
    the context id; feature files from a real LM can substitute genuinely
    stochastic trial accuracy.
    """
    out = model.forward(example.subject_vector, example.context_id)
    logp = float(log_softmax(model.decode(out))[example.object_token])
    hits = 0
    for t in range(trials):
        o = model.forward(example.subject_vector, example.context_id + t)
        hits += decode_argmax(model.decode(o)) == example.object_token
    return logp, hits / trials
