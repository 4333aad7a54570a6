"""Experiment configs: versioned JSON, strict about unknown keys.

Silent typos are the main failure mode of experiment configs, so any key
the schema does not know is an error, and `validate` checks referenced
paths, schedule monotonicity, and grid sanity before anything runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from ..errors import ConfigError

CONFIG_VERSION = 1

# section -> {key: default}; None means required (no default)
_SCHEMA: dict[str, Any] = {
    "version": None,
    "seed": 0,
    "shards": 1,
    "pair_mode": "presence",
    "experiment": {
        "kind": None,  # "planted" | "files"
        "planted": {
            "relations": 12,
            "examples_per_relation": 24,
            "freq_exponent_min": 0.6,
            "freq_exponent_max": 3.9,
            "jitter_orders": 0.3,
            "object_multiplier": 1.3,
            "corpus": {
                "n_batches": 64,
                "batch_size": 352,
                "seq_len": 256,
                "filler_lo": 1000,
                "filler_hi": 60000,
                "doc_rows": [1, 4],
            },
            "model": {
                "d_s": 24,
                "d_o": 16,
                "vocab": 64,
                "ctx_scale": 0.05,
                "noise_min": 0.0,
                "noise_max": 5.0,
            },
        },
        "files": {
            "corpus": "",
            "dictionary": "",
            "relations": [],
            "model": {},
        },
    },
    "checkpoints": None,  # optional list of cutoffs; validated if present
    "lre": {
        "n_fit": 8,
        "beta_grid": None,     # null -> default 21 points in [0, 5]
        "ranks": None,         # null -> dense-near-zero schedule
        "probe_points": None,  # null -> model's own probe points
    },
    "regression": {
        "enabled": True,
        "seeds": [0, 1, 2, 3],
        "n_trees": 100,
        "target_kind": "subject_object",
        "importance_repeats": 10,
        "pca_merge": ["faithfulness", "faith_prob"],
    },
    "transfer": {
        "enabled": False,
        "token_ratio": 1.0,
        "model_seed_offset": 5000,
    },
}

_OPTIONAL_SECTIONS = {"checkpoints"}


def _apply_schema(raw: Any, schema: Any, path: str) -> Any:
    if isinstance(schema, dict) and schema and all(isinstance(k, str) for k in schema):
        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping")
        unknown = set(raw) - set(schema)
        if unknown:
            raise ConfigError(f"{path or 'config'}: unknown keys {sorted(unknown)}")
        out = {}
        for key, default in schema.items():
            sub = f"{path}.{key}" if path else key
            if key in raw:
                out[key] = _apply_schema(raw[key], default, sub)
            elif isinstance(default, dict):
                out[key] = _apply_schema({}, default, sub)
            elif default is None and sub not in _OPTIONAL_SECTIONS and sub not in (
                "lre.beta_grid", "lre.ranks", "lre.probe_points",
            ):
                if sub in ("version", "experiment.kind"):
                    raise ConfigError(f"{sub}: required key missing")
                out[key] = None
            else:
                out[key] = default
        return out
    return raw


@dataclass
class ExperimentConfig:
    raw: dict = field(default_factory=dict)
    base_dir: Path = field(default_factory=Path)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
        return cls.from_dict(data, base_dir=path.parent)

    @classmethod
    def from_dict(cls, data: dict, base_dir=Path(".")) -> "ExperimentConfig":
        cooked = _apply_schema(data, _SCHEMA, "")
        return cls(raw=cooked, base_dir=Path(base_dir))

    def __getitem__(self, key):
        return self.raw[key]

    def section(self, *keys) -> Any:
        node = self.raw
        for k in keys:
            node = node[k]
        return node

    def resolve(self, rel_path: str) -> Path:
        p = Path(rel_path)
        return p if p.is_absolute() else self.base_dir / p

    def canonical_json(self) -> str:
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    def round_trips(self) -> bool:
        return (
            ExperimentConfig.from_dict(json.loads(self.canonical_json()), self.base_dir).canonical_json()
            == self.canonical_json()
        )


def validate(config: ExperimentConfig) -> list[str]:
    """Static checks; returns a list of problems (empty means valid)."""
    problems: list[str] = []
    raw = config.raw

    if raw["version"] != CONFIG_VERSION:
        problems.append(f"version: expected {CONFIG_VERSION}, got {raw['version']}")

    kind = raw["experiment"]["kind"]
    if kind not in ("planted", "files"):
        problems.append(f"experiment.kind: unknown kind {kind!r}")
    elif kind == "files":
        files = raw["experiment"]["files"]
        for key in ("corpus", "dictionary"):
            p = config.resolve(files[key]) if files[key] else None
            if p is None or not p.exists():
                problems.append(f"experiment.files.{key}: missing path {files[key]!r}")
        if not files["relations"]:
            problems.append("experiment.files.relations: no relation files listed")
        for rel in files["relations"]:
            if not config.resolve(rel).exists():
                problems.append(f"experiment.files.relations: missing path {rel!r}")
        if not files["model"]:
            problems.append("experiment.files.model: model spec required")
    else:
        planted = raw["experiment"]["planted"]
        if planted["relations"] < 2:
            problems.append("experiment.planted.relations: need at least 2 relations")
        if planted["examples_per_relation"] < 2:
            problems.append("experiment.planted.examples_per_relation: need at least 2")
        if planted["freq_exponent_min"] >= planted["freq_exponent_max"]:
            problems.append("experiment.planted: freq_exponent_min >= freq_exponent_max")

    cutoffs = raw["checkpoints"]
    if cutoffs is not None:
        if not isinstance(cutoffs, list) or not cutoffs:
            problems.append("checkpoints: expected a non-empty list of cutoffs")
        else:
            for prev, cur in zip(cutoffs, cutoffs[1:]):
                if cur <= prev:
                    problems.append(f"checkpoints: not strictly increasing at {prev} -> {cur}")
                    break
            if any(c <= 0 for c in cutoffs):
                problems.append("checkpoints: cutoffs must be positive")

    if raw["pair_mode"] not in ("presence", "product"):
        problems.append(f"pair_mode: unknown mode {raw['pair_mode']!r}")

    lre = raw["lre"]
    if lre["n_fit"] < 1:
        problems.append("lre.n_fit: must be >= 1")
    if lre["beta_grid"] is not None and len(lre["beta_grid"]) == 0:
        problems.append("lre.beta_grid: empty grid")
    if lre["ranks"] is not None:
        if len(lre["ranks"]) == 0:
            problems.append("lre.ranks: empty schedule")
        elif any(r < 1 for r in lre["ranks"]):
            problems.append("lre.ranks: ranks must be >= 1")

    reg = raw["regression"]
    if reg["target_kind"] not in ("object", "subject_object"):
        problems.append(f"regression.target_kind: unknown kind {reg['target_kind']!r}")
    if not reg["seeds"]:
        problems.append("regression.seeds: need at least one seed")
    if reg["n_trees"] < 1:
        problems.append("regression.n_trees: must be >= 1")

    if raw["transfer"]["enabled"] and raw["transfer"]["token_ratio"] <= 0:
        problems.append("transfer.token_ratio: must be positive")

    if raw["shards"] < 1:
        problems.append("shards: must be >= 1")

    if not config.round_trips():
        problems.append("config does not round-trip parse -> serialize -> parse")
    return problems
