"""Relation example data and on-disk artifact formats."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


@dataclass
class RelationExample:
    subject_id: str
    subject_vector: np.ndarray
    context_id: int
    object_token: int
    object_surface: str = ""
    subject_surface: str = ""
    subject_term: Optional[int] = None  # term id in the corpus dictionary
    object_term: Optional[int] = None

    def __post_init__(self):
        self.subject_vector = np.asarray(self.subject_vector, dtype=np.float64)


@dataclass
class RelationData:
    name: str
    relation_id: int
    examples: list[RelationExample] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "relation_id": self.relation_id,
            "examples": [
                {
                    "subject_id": ex.subject_id,
                    "subject_vector": [float(x) for x in ex.subject_vector],
                    "context_id": ex.context_id,
                    "object_token": ex.object_token,
                    "object_surface": ex.object_surface,
                    "subject_surface": ex.subject_surface,
                    "subject_term": ex.subject_term,
                    "object_term": ex.object_term,
                }
                for ex in self.examples
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "RelationData":
        return cls(
            name=raw["name"],
            relation_id=int(raw["relation_id"]),
            examples=[
                RelationExample(
                    subject_id=e["subject_id"],
                    subject_vector=np.asarray(e["subject_vector"], dtype=np.float64),
                    context_id=int(e["context_id"]),
                    object_token=int(e["object_token"]),
                    object_surface=e.get("object_surface", ""),
                    subject_surface=e.get("subject_surface", ""),
                    subject_term=e.get("subject_term"),
                    object_term=e.get("object_term"),
                )
                for e in raw["examples"]
            ],
        )

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path) -> "RelationData":
        return cls.from_dict(json.loads(Path(path).read_text()))


def sample_relation_examples(
    model,
    n: int,
    seed: int,
    relation_name: str = "relation",
    context_base: int = 0,
) -> list[RelationExample]:
    """Draw random subject vectors; object tokens come from the model itself,
    so the model is always 'correct' on its own examples."""
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        s = rng.normal(0.0, 1.0, size=model.d_s)
        c = context_base + i
        scores = model.decode(model.forward(s, c))
        examples.append(
            RelationExample(
                subject_id=f"{relation_name}/s{i}",
                subject_vector=s,
                context_id=c,
                object_token=int(np.argmax(scores)),
            )
        )
    return examples


def write_lre(path, lre) -> None:
    """LRE artifact: one JSON header line, then W and b as little-endian f64."""
    header = {
        "format": "lre-v1",
        "d_o": lre.d_o,
        "d_s": lre.d_s,
        "beta": lre.beta,
        "rank": lre.rank,
        "probe_point": lre.probe_point,
        "fit_example_ids": lre.fit_example_ids,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(lre.W, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(lre.b, dtype="<f8").tobytes())


def read_lre(path):
    from .fit import LRE

    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("format") != "lre-v1":
            raise ValueError(f"{path}: not an LRE artifact")
        d_o, d_s = header["d_o"], header["d_s"]
        W = np.frombuffer(fh.read(8 * d_o * d_s), dtype="<f8").reshape(d_o, d_s)
        b = np.frombuffer(fh.read(8 * d_o), dtype="<f8")
    return LRE(
        W=W.copy(),
        b=b.copy(),
        beta=header["beta"],
        rank=header["rank"],
        probe_point=header["probe_point"],
        fit_example_ids=header["fit_example_ids"],
    )
