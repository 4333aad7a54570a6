"""Run orchestration: stage graph, content-digest caching, run manifest.

A stage is skipped when its recorded input digests and config-section digest
match the current state and all its outputs still exist with their recorded
digests. Deleting any output forces just that stage to re-execute, and
determinism guarantees the regenerated file is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .. import __version__
from ..errors import StageError
from .config import ExperimentConfig, validate
from . import stages as S
from .report import stage_report

LOCK_NAME = "run.lock"
MANIFEST_NAME = "manifest.json"


def _digest_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _digest_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _corpus_files(config, run_dir) -> list[Path]:
    d = S.corpus_dir(config, run_dir)
    files = [d / "manifest", d / "tokens.bin"]
    if (d / "docs.idx").exists():
        files.append(d / "docs.idx")
    return files


def _lre_artifacts(config, run_dir) -> list[Path]:
    from ..lre import RelationData

    if config.section("experiment", "kind") == "planted":
        n = config.section("experiment", "planted", "relations")
        ids = range(n)
    else:
        ids = [RelationData.read(p).relation_id for p in S.relation_paths(config, run_dir)]
    return [run_dir / "lre" / f"r{i:03d}.lre" for i in ids]


@dataclass
class Stage:
    name: str
    fn: Callable
    config_keys: tuple[str, ...]   # config sections hashed into the stage digest
    inputs: Callable               # (config, run_dir) -> list[Path]
    outputs: Callable              # (config, run_dir) -> list[Path]
    enabled: Callable = staticmethod(lambda config: True)


def _stage_list() -> list[Stage]:
    synth_outputs = lambda c, d: [
        d / "inputs" / "corpus" / "manifest",
        d / "inputs" / "corpus" / "tokens.bin",
        d / "inputs" / "corpus" / "docs.idx",
        d / "inputs" / "dictionary.tsv",
        d / "inputs" / "truth_occurrences.tsv",
        d / "inputs" / "truth_pairs.tsv",
        d / "inputs" / "models.json",
    ] + S.relation_paths(c, d)

    return [
        Stage(
            "synth",
            S.stage_synth,
            ("seed", "experiment", "transfer"),
            inputs=lambda c, d: [],
            outputs=synth_outputs,
            enabled=lambda c: c.section("experiment", "kind") == "planted",
        ),
        Stage(
            "count",
            S.stage_count,
            (),
            inputs=lambda c, d: _corpus_files(c, d) + [S.dictionary_path(c, d)],
            outputs=lambda c, d: [d / "counts" / "occurrences.tsv"],
        ),
        Stage(
            "cooc",
            S.stage_cooc,
            ("pair_mode",),
            inputs=lambda c, d: _corpus_files(c, d) + [S.dictionary_path(c, d)],
            outputs=lambda c, d: [d / "counts" / "pairs.tsv"],
        ),
        Stage(
            "checkpoints",
            S.stage_checkpoints,
            ("checkpoints", "pair_mode"),
            inputs=lambda c, d: _corpus_files(c, d) + [S.dictionary_path(c, d)],
            outputs=lambda c, d: [
                d / "counts" / "checkpoint_occurrences.tsv",
                d / "counts" / "checkpoint_pairs.tsv",
            ],
            enabled=lambda c: c.section("checkpoints") is not None,
        ),
        Stage(
            "lre",
            S.stage_lre,
            ("lre", "transfer", "seed"),
            inputs=lambda c, d: S.relation_paths(c, d)
            + (
                [d / "inputs" / "models.json"]
                if c.section("experiment", "kind") == "planted"
                else []
            ),
            outputs=lambda c, d: [
                d / "lre" / "metrics.tsv",
                d / "lre" / "lm_features.tsv",
                d / "lre" / "sweep_surfaces.tsv",
            ]
            + _lre_artifacts(c, d)
            + (
                [d / "lre" / "metrics_transfer.tsv", d / "lre" / "lm_features_transfer.tsv"]
                if c.section("transfer", "enabled")
                else []
            ),
        ),
        Stage(
            "features",
            S.stage_features,
            ("regression", "transfer"),
            inputs=lambda c, d: [
                d / "lre" / "metrics.tsv",
                d / "lre" / "lm_features.tsv",
                d / "counts" / "occurrences.tsv",
                d / "counts" / "pairs.tsv",
            ]
            + S.relation_paths(c, d)
            + (
                [d / "lre" / "metrics_transfer.tsv", d / "lre" / "lm_features_transfer.tsv"]
                if c.section("transfer", "enabled")
                else []
            ),
            outputs=lambda c, d: [d / "features" / "features.tsv"]
            + (
                [d / "features" / "features_transfer.tsv"]
                if c.section("transfer", "enabled")
                else []
            ),
        ),
        Stage(
            "regress",
            S.stage_regress,
            ("regression", "transfer"),
            inputs=lambda c, d: [d / "features" / "features.tsv"]
            + (
                [d / "features" / "features_transfer.tsv"]
                if c.section("transfer", "enabled")
                else []
            ),
            outputs=lambda c, d: [
                d / "regress" / "loro_folds.tsv",
                d / "regress" / "loro_summary.tsv",
                d / "regress" / "importance.tsv",
            ]
            + ([d / "regress" / "transfer.tsv"] if c.section("transfer", "enabled") else []),
            enabled=lambda c: c.section("regression", "enabled"),
        ),
        Stage(
            "correlate",
            S.stage_correlate,
            ("checkpoints",),
            inputs=lambda c, d: [
                d / "lre" / "metrics.tsv",
                d / "counts" / "pairs.tsv",
            ]
            + (
                [d / "counts" / "checkpoint_pairs.tsv"]
                if c.section("checkpoints") is not None
                else []
            )
            + S.relation_paths(c, d),
            outputs=lambda c, d: [
                d / "correlate" / "correlation.tsv",
                d / "correlate" / "fig_scatter.tsv",
            ],
        ),
        Stage(
            "report",
            stage_report,
            ("regression", "transfer", "checkpoints"),
            inputs=lambda c, d: [
                d / "lre" / "metrics.tsv",
                d / "correlate" / "correlation.tsv",
                d / "correlate" / "fig_scatter.tsv",
            ]
            + (
                [d / "regress" / "loro_summary.tsv", d / "regress" / "importance.tsv"]
                if c.section("regression", "enabled")
                else []
            )
            + (
                [d / "regress" / "transfer.tsv"]
                if c.section("regression", "enabled") and c.section("transfer", "enabled")
                else []
            ),
            outputs=lambda c, d: [
                d / "report" / "metrics_table.tsv",
                d / "report" / "correlation_table.tsv",
                d / "report" / "fig_scatter.tsv",
            ]
            + (
                [d / "report" / "regression_table.tsv", d / "report" / "importance_table.tsv"]
                if c.section("regression", "enabled")
                else []
            ),
        ),
    ]


class RunLock:
    """One process owns a run directory; stale locks from dead pids are reclaimed."""

    def __init__(self, run_dir: Path):
        self.path = run_dir / LOCK_NAME

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            pid = int(self.path.read_text().strip() or "0")
            if pid and _pid_alive(pid):
                raise StageError(f"run dir locked by live pid {pid}: {self.path}")
            self.path.unlink()
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except OSError:
        return False
    return True


def _stage_config_digest(config: ExperimentConfig, stage: Stage) -> str:
    subset = {k: config.raw[k] for k in stage.config_keys}
    return _digest_text(json.dumps(subset, sort_keys=True, separators=(",", ":")))


def run(config: ExperimentConfig, out_dir, force: bool = False) -> dict:
    """Execute all enabled stages, skipping up-to-date ones; returns the manifest."""
    problems = validate(config)
    if problems:
        raise StageError("config invalid: " + "; ".join(problems))
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    manifest_path = run_dir / MANIFEST_NAME
    manifest = {
        "config_hash": _digest_text(config.canonical_json()),
        "tool_version": __version__,
        "stages": {},
    }
    previous = {}
    if manifest_path.exists():
        try:
            previous = json.loads(manifest_path.read_text())
        except json.JSONDecodeError:
            previous = {}
        if previous.get("config_hash") != manifest["config_hash"]:
            previous = {}

    with RunLock(run_dir):
        for stage in _stage_list():
            if not stage.enabled(config):
                continue
            t0 = time.monotonic()
            in_paths = stage.inputs(config, run_dir)
            missing_inputs = [str(p) for p in in_paths if not p.exists()]
            if missing_inputs:
                _write_manifest(manifest_path, manifest)
                raise StageError(
                    f"stage {stage.name}: missing inputs {missing_inputs} "
                    f"(manifest records completion up to this stage)"
                )
            input_digests = {str(p): _digest_file(p) for p in in_paths}
            config_digest = _stage_config_digest(config, stage)

            prev = previous.get("stages", {}).get(stage.name)
            out_paths = stage.outputs(config, run_dir)
            up_to_date = (
                not force
                and prev is not None
                and prev.get("inputs") == input_digests
                and prev.get("config_digest") == config_digest
                and all(p.exists() for p in out_paths)
                and {str(p): _digest_file(p) for p in out_paths} == prev.get("outputs")
            )
            if up_to_date:
                record = dict(prev)
                record["skipped"] = True
                record["wall_clock_s"] = 0.0
                manifest["stages"][stage.name] = record
                continue

            try:
                stage.fn(config, run_dir)
            except Exception as exc:
                _write_manifest(manifest_path, manifest)
                raise StageError(f"stage {stage.name} failed: {exc}") from exc

            out_paths = stage.outputs(config, run_dir)
            missing = [str(p) for p in out_paths if not p.exists()]
            if missing:
                _write_manifest(manifest_path, manifest)
                raise StageError(f"stage {stage.name} did not produce {missing}")
            manifest["stages"][stage.name] = {
                "inputs": input_digests,
                "config_digest": config_digest,
                "outputs": {str(p): _digest_file(p) for p in out_paths},
                "wall_clock_s": round(time.monotonic() - t0, 3),
                "skipped": False,
            }
        _write_manifest(manifest_path, manifest)
    return manifest


def _write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
