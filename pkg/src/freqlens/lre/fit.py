"""Jacobian estimation and affine relation-embedding fits.

The embedding for a relation is the first-order approximation
F(s, c) ~ beta * W s + b with W the mean Jacobian over n fit examples and
b the mean of F(s_i, c_i) - J_i s_i. Examples are never filtered by whether
the model predicts them correctly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import RelationExample


def jacobian(model, s, context_id, method="analytic", h=1e-4, probe_point=None) -> np.ndarray:
    """d_o x d_s Jacobian of model.forward at (s, context_id).

    `analytic` delegates to the model; `central_difference` perturbs each
    coordinate by h * (1 + |s_j|) both ways.
    """
    s = np.asarray(s, dtype=np.float64)
    if method == "analytic":
        fn = getattr(model, "analytic_jacobian", None)
        if fn is None:
            raise ValueError(f"{type(model).__name__} provides no analytic jacobian")
        return np.asarray(fn(s, context_id, probe_point=probe_point), dtype=np.float64)
    if method != "central_difference":
        raise ValueError(f"unknown jacobian method {method!r}")

    base = np.asarray(model.forward(s, context_id, probe_point=probe_point), dtype=np.float64)
    if not np.all(np.isfinite(base)):
        coord = int(np.flatnonzero(~np.isfinite(base))[0])
        raise FloatingPointError(f"forward output non-finite at coordinate {coord}")
    J = np.empty((base.shape[0], s.shape[0]), dtype=np.float64)
    for j in range(s.shape[0]):
        hj = h * (1.0 + abs(s[j]))
        sp = s.copy()
        sm = s.copy()
        sp[j] += hj
        sm[j] -= hj
        fp = np.asarray(model.forward(sp, context_id, probe_point=probe_point), dtype=np.float64)
        fm = np.asarray(model.forward(sm, context_id, probe_point=probe_point), dtype=np.float64)
        col = (fp - fm) / (2.0 * hj)
        if not np.all(np.isfinite(col)):
            raise FloatingPointError(f"forward output non-finite when perturbing coordinate {j}")
        J[:, j] = col
    return J


@dataclass
class LRE:
    """Affine relation approximation: applied transform is beta * W s + b.

    `rank` is used only for causal edits (pseudoinverse truncation); `beta`
    only scales the application path.
    """

    W: np.ndarray
    b: np.ndarray
    beta: float = 1.0
    rank: Optional[int] = None
    probe_point: Optional[str] = None
    fit_example_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.W = np.asarray(self.W, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ValueError(f"inconsistent shapes W{self.W.shape} b{self.b.shape}")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        full = min(self.W.shape)
        if self.rank is None:
            self.rank = full
        if not 1 <= self.rank <= full:
            raise ValueError(f"rank {self.rank} outside [1, {full}]")

    @property
    def d_s(self) -> int:
        return self.W.shape[1]

    @property
    def d_o(self) -> int:
        return self.W.shape[0]


def fit_lre(
    model,
    examples: Sequence[RelationExample],
    beta: float = 1.0,
    probe_point: Optional[str] = None,
    rank: Optional[int] = None,
    jacobian_method: Optional[str] = None,
) -> LRE:
    """Mean-Jacobian fit over the given examples (no correctness filter)."""
    if len(examples) == 0:
        raise ValueError("need at least one fit example")
    if jacobian_method is None:
        jacobian_method = (
            "analytic" if hasattr(model, "analytic_jacobian") else "central_difference"
        )
    d_s = examples[0].subject_vector.shape[0]
    W_sum = None
    b_sum = None
    for ex in examples:
        s = ex.subject_vector
        if s.shape != (d_s,):
            raise ValueError(
                f"example {ex.subject_id!r}: subject vector shape {s.shape} != ({d_s},)"
            )
        J = jacobian(model, s, ex.context_id, method=jacobian_method, probe_point=probe_point)
        out = np.asarray(model.forward(s, ex.context_id, probe_point=probe_point), dtype=np.float64)
        term_b = out - J @ s
        if W_sum is None:
            W_sum, b_sum = J, term_b
        else:
            W_sum = W_sum + J
            b_sum = b_sum + term_b
    n = len(examples)
    return LRE(
        W=W_sum / n,
        b=b_sum / n,
        beta=beta,
        rank=rank,
        probe_point=probe_point,
        fit_example_ids=[ex.subject_id for ex in examples],
    )


def lre_apply(lre: LRE, s) -> np.ndarray:
    """beta * W s + b."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (lre.d_s,):
        raise ValueError(f"subject vector shape {s.shape} != ({lre.d_s},)")
    return lre.beta * (lre.W @ s) + lre.b
