"""Linear relational embeddings: fitting, metrics, edits, sweeps."""

from .data import (
    RelationData,
    RelationExample,
    read_lre,
    sample_relation_examples,
    write_lre,
)
from .fit import LRE, fit_lre, jacobian, lre_apply
from .linalg import low_rank_pinv
from .metrics import (
    EditResult,
    LREMetrics,
    causal_edit,
    causality,
    cyclic_eval_pairs,
    evaluate_lre,
    faith_prob,
    faithfulness,
    lm_features,
)
from .model import (
    LinearReferenceModel,
    MlpReferenceModel,
    RelationModel,
    decode_argmax,
    log_softmax,
    make_reference_model,
    model_from_spec,
)
from .sweep import (
    SweepResult,
    default_beta_grid,
    examples_at_probe,
    rank_schedule,
    sweep_hyperparams,
)

__all__ = [
    "EditResult",
    "LRE",
    "LREMetrics",
    "LinearReferenceModel",
    "MlpReferenceModel",
    "RelationData",
    "RelationExample",
    "RelationModel",
    "SweepResult",
    "causal_edit",
    "causality",
    "cyclic_eval_pairs",
    "decode_argmax",
    "default_beta_grid",
    "evaluate_lre",
    "examples_at_probe",
    "faith_prob",
    "faithfulness",
    "fit_lre",
    "jacobian",
    "lm_features",
    "log_softmax",
    "low_rank_pinv",
    "lre_apply",
    "make_reference_model",
    "model_from_spec",
    "rank_schedule",
    "read_lre",
    "sample_relation_examples",
    "sweep_hyperparams",
    "write_lre",
]
