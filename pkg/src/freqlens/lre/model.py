"""Relation models: the pluggable interface LREs are fit against, plus
deterministic reference models for desk-scale verification.

A relation model maps a subject representation (read at some probe point)
to an object representation, then decodes that to scores over a finite
vocabulary. Reference models stand in for a transformer: the `linear` kind
is exactly affine (so fits are exact), the `mlp` kind composes two smooth
blocks whose distance from affine is set by a noise knob.
"""

from __future__ import annotations

from typing import Optional, Protocol, runtime_checkable

import numpy as np


@runtime_checkable
class RelationModel(Protocol):
    probe_points: tuple[str, ...]
    d_s: int
    d_o: int
    vocab: int

    def forward(self, s: np.ndarray, context_id: int, probe_point: Optional[str] = None) -> np.ndarray: ...

    def decode(self, o: np.ndarray) -> np.ndarray: ...


def decode_argmax(scores: np.ndarray) -> int:
    """Deterministic argmax with lowest-token-index tie-break."""
    return int(np.argmax(scores))


def log_softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - np.max(scores)
    return z - np.log(np.sum(np.exp(z)))


class LinearReferenceModel:
    """F(s, c) = A s + k, context-independent; analytic Jacobian is A."""

    def __init__(self, d_s: int, d_o: int, vocab: int, seed: int = 0):
        rng = np.random.default_rng(seed)
        self.d_s, self.d_o, self.vocab = d_s, d_o, vocab
        self.A = rng.normal(0.0, 1.0 / np.sqrt(d_s), size=(d_o, d_s))
        self.k = rng.normal(0.0, 0.5, size=d_o)
        self.D = rng.normal(0.0, 1.0 / np.sqrt(d_o), size=(vocab, d_o))
        self.probe_points = ("main",)

    def forward(self, s, context_id, probe_point=None):
        return self.A @ np.asarray(s, dtype=np.float64) + self.k

    def decode(self, o):
        return self.D @ np.asarray(o, dtype=np.float64)

    def analytic_jacobian(self, s, context_id, probe_point=None):
        return self.A.copy()

    def probe_state(self, s, context_id, probe_point=None):
        return np.asarray(s, dtype=np.float64)


class _SmoothBlock:
    """x -> A x + a + noise * tanh(B x + b); affine exactly when noise = 0."""

    def __init__(self, dim: int, noise: float, rng: np.random.Generator):
        self.A = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, dim)) + 0.5 * np.eye(dim)
        self.a = rng.normal(0.0, 0.3, size=dim)
        self.B = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, dim))
        self.b = rng.normal(0.0, 0.3, size=dim)
        self.noise = float(noise)

    def __call__(self, x):
        return self.A @ x + self.a + self.noise * np.tanh(self.B @ x + self.b)

    def jacobian(self, x):
        if self.noise == 0.0:
            return self.A.copy()
        g = 1.0 - np.tanh(self.B @ x + self.b) ** 2
        return self.A + self.noise * (g[:, None] * self.B)


class MlpReferenceModel:
    """Two smooth blocks and a linear decode head.

    Probe points: "input" (runs both blocks; context embedding enters here)
    and "mid" (treats the subject vector as the intermediate state, runs only
    the second block, context-free). Per-block noise allows a probe point to
    be exactly affine while the other is not.
    """

    def __init__(
        self,
        d_s: int,
        d_o: int,
        vocab: int,
        seed: int = 0,
        noise: float | tuple[float, float] = 0.0,
        ctx_scale: float = 0.0,
    ):
        rng = np.random.default_rng(seed)
        self.d_s, self.d_o, self.vocab = d_s, d_o, vocab
        if isinstance(noise, (int, float)):
            noise = (float(noise), float(noise))
        self.block1 = _SmoothBlock(d_s, noise[0], rng)
        self.block2 = _SmoothBlock(d_s, noise[1], rng)
        self.H = rng.normal(0.0, 1.0 / np.sqrt(d_s), size=(d_o, d_s))
        self.h0 = rng.normal(0.0, 0.3, size=d_o)
        self.D = rng.normal(0.0, 1.0 / np.sqrt(d_o), size=(vocab, d_o))
        self.ctx_scale = float(ctx_scale)
        self.seed = int(seed)
        self.probe_points = ("input", "mid")
        self._ctx_cache: dict[int, np.ndarray] = {}

    def _ctx(self, context_id: int) -> np.ndarray:
        vec = self._ctx_cache.get(context_id)
        if vec is None:
            crng = np.random.default_rng([self.seed, 7919, int(context_id)])
            vec = crng.normal(0.0, 1.0, size=self.d_s)
            self._ctx_cache[context_id] = vec
        return vec

    def _resolve(self, probe_point):
        probe = probe_point or self.probe_points[0]
        if probe not in self.probe_points:
            raise ValueError(f"unknown probe point {probe!r}; have {self.probe_points}")
        return probe

    def forward(self, s, context_id, probe_point=None):
        probe = self._resolve(probe_point)
        x = np.asarray(s, dtype=np.float64)
        if probe == "input":
            x = x + self.ctx_scale * self._ctx(context_id)
            x = self.block1(x)
        x = self.block2(x)
        return self.H @ x + self.h0

    def probe_state(self, s, context_id, probe_point=None):
        """Representation the canonical forward pass reaches at a probe point;
        forward(probe_state(s, c, p), c, p) is the same output for every p."""
        probe = self._resolve(probe_point)
        x = np.asarray(s, dtype=np.float64)
        if probe == "input":
            return x
        return self.block1(x + self.ctx_scale * self._ctx(context_id))

    def decode(self, o):
        return self.D @ np.asarray(o, dtype=np.float64)

    def analytic_jacobian(self, s, context_id, probe_point=None):
        probe = self._resolve(probe_point)
        x = np.asarray(s, dtype=np.float64)
        if probe == "input":
            x0 = x + self.ctx_scale * self._ctx(context_id)
            x1 = self.block1(x0)
            return self.H @ self.block2.jacobian(x1) @ self.block1.jacobian(x0)
        return self.H @ self.block2.jacobian(x)


def make_reference_model(
    kind: str,
    d_s: int = 24,
    d_o: int = 16,
    vocab: int = 64,
    seed: int = 0,
    noise: float | tuple[float, float] = 0.0,
    ctx_scale: float = 0.0,
):
    """Deterministic linear or mlp reference model for a fixed seed."""
    if kind == "linear":
        return LinearReferenceModel(d_s, d_o, vocab, seed=seed)
    if kind == "mlp":
        return MlpReferenceModel(
            d_s, d_o, vocab, seed=seed, noise=noise, ctx_scale=ctx_scale
        )
    raise ValueError(f"unknown reference model kind {kind!r}")


def model_from_spec(spec: dict):
    """Build a reference model from a JSON-friendly spec dict."""
    spec = dict(spec)
    kind = spec.pop("kind")
    noise = spec.pop("noise", 0.0)
    if isinstance(noise, list):
        noise = tuple(noise)
    return make_reference_model(kind, noise=noise, **spec)
