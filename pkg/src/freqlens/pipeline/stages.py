"""Pipeline stage implementations.

Each stage reads files written by earlier stages and writes its own outputs
deterministically (sorted keys, repr-formatted floats), so reruns with the
same inputs are byte-identical and content digests can drive caching.
"""

from __future__ import annotations

import json
from math import log10
from pathlib import Path

import numpy as np

from ..corpus import (
    CheckpointSchedule,
    CountTable,
    TermDictionary,
    TokenCorpus,
    compile_patterns,
    cumulative_counts,
    generate_synthetic_corpus,
    read_checkpoint_pairs,
    scan_corpus,
    write_checkpoint_occurrences,
    write_checkpoint_pairs,
)
from ..lre import (
    RelationData,
    lm_features,
    model_from_spec,
    sweep_hyperparams,
    write_lre,
)
from ..regress import (
    ALL_FEATURES,
    LM_FEATURES,
    build_feature_table,
    cross_model_transfer,
    loro_cv,
    pca_merge,
    pearson,
    permutation_importance,
    read_feature_table,
    train_forest,
    write_feature_table,
)
from ..regress.features import FeatureRow
from ..rng import derive_seed
from .planted import build_planted_experiment


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_tsv(path, header, rows, comments=()) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append("\t".join(header))
    for row in rows:
        lines.append("\t".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# input resolution

def corpus_dir(config, run_dir: Path) -> Path:
    if config.section("experiment", "kind") == "planted":
        return run_dir / "inputs" / "corpus"
    return config.resolve(config.section("experiment", "files", "corpus"))


def dictionary_path(config, run_dir: Path) -> Path:
    if config.section("experiment", "kind") == "planted":
        return run_dir / "inputs" / "dictionary.tsv"
    return config.resolve(config.section("experiment", "files", "dictionary"))


def relation_paths(config, run_dir: Path) -> list[Path]:
    if config.section("experiment", "kind") == "planted":
        rel_dir = run_dir / "inputs" / "relations"
        n = config.section("experiment", "planted", "relations")
        return [rel_dir / f"r{i:03d}.json" for i in range(n)]
    return [config.resolve(p) for p in config.section("experiment", "files", "relations")]


def model_specs(config, run_dir: Path, transfer: bool = False) -> dict[int, dict]:
    if config.section("experiment", "kind") == "planted":
        raw = json.loads((run_dir / "inputs" / "models.json").read_text())
        key = "transfer" if transfer else "relations"
        return {int(k): v for k, v in raw[key].items()}
    spec = dict(config.section("experiment", "files", "model"))
    if transfer:
        spec["seed"] = spec.get("seed", 0) + config.section("transfer", "model_seed_offset")
    rels = [RelationData.read(p) for p in relation_paths(config, run_dir)]
    return {r.relation_id: spec for r in rels}


# --------------------------------------------------------------------------
# stages

def stage_synth(config, run_dir: Path) -> None:
    """Planted experiment: emit corpus, dictionary, relations, model specs."""
    planted_cfg = config.section("experiment", "planted")
    exp = build_planted_experiment(planted_cfg, seed=config.section("seed"))
    inputs = run_dir / "inputs"
    (inputs / "relations").mkdir(parents=True, exist_ok=True)

    result = generate_synthetic_corpus(exp.dictionary, exp.synth_spec)
    result.corpus.save(inputs / "corpus")
    exp.dictionary.write(inputs / "dictionary.tsv")
    result.truth_presence.write_occurrences(inputs / "truth_occurrences.tsv")
    result.truth_presence.write_pairs(inputs / "truth_pairs.tsv")
    for rel in exp.relations:
        rel.save(inputs / "relations" / f"r{rel.relation_id:03d}.json")

    offset = config.section("transfer", "model_seed_offset")
    transfer_specs = {
        rid: {**spec, "seed": derive_seed(spec["seed"], offset)}
        for rid, spec in exp.model_specs.items()
    }
    models = {
        "relations": {str(k): v for k, v in sorted(exp.model_specs.items())},
        "transfer": {str(k): v for k, v in sorted(transfer_specs.items())},
        "levels": {str(k): v for k, v in sorted(exp.relation_levels.items())},
    }
    (inputs / "models.json").write_text(json.dumps(models, indent=1, sort_keys=True) + "\n")


def stage_count(config, run_dir: Path) -> None:
    corpus = TokenCorpus.open(corpus_dir(config, run_dir))
    matcher = compile_patterns(TermDictionary.read(dictionary_path(config, run_dir)))
    table = scan_corpus(matcher, corpus, pair_mode="none", shards=config.section("shards"))
    out = run_dir / "counts"
    out.mkdir(parents=True, exist_ok=True)
    table.write_occurrences(out / "occurrences.tsv")


def stage_cooc(config, run_dir: Path) -> None:
    corpus = TokenCorpus.open(corpus_dir(config, run_dir))
    matcher = compile_patterns(TermDictionary.read(dictionary_path(config, run_dir)))
    table = scan_corpus(
        matcher, corpus, pair_mode=config.section("pair_mode"), shards=config.section("shards")
    )
    out = run_dir / "counts"
    out.mkdir(parents=True, exist_ok=True)
    table.write_pairs(out / "pairs.tsv")


def stage_checkpoints(config, run_dir: Path) -> None:
    cutoffs = config.section("checkpoints")
    corpus = TokenCorpus.open(corpus_dir(config, run_dir))
    matcher = compile_patterns(TermDictionary.read(dictionary_path(config, run_dir)))
    schedule = CheckpointSchedule(tuple(cutoffs))
    tables = cumulative_counts(
        matcher,
        corpus,
        schedule,
        pair_mode=config.section("pair_mode"),
        shards=config.section("shards"),
    )
    out = run_dir / "counts"
    out.mkdir(parents=True, exist_ok=True)
    write_checkpoint_occurrences(out / "checkpoint_occurrences.tsv", tables)
    write_checkpoint_pairs(out / "checkpoint_pairs.tsv", tables)


def _sweep_relation(config, model, relation):
    lre_cfg = config.section("lre")
    beta_grid = lre_cfg["beta_grid"]
    return sweep_hyperparams(
        model,
        relation.examples,
        beta_grid=np.asarray(beta_grid, float) if beta_grid else None,
        ranks=lre_cfg["ranks"],
        probe_points=lre_cfg["probe_points"],
        n_fit=lre_cfg["n_fit"],
    )


def _run_lre_pass(config, run_dir: Path, transfer: bool):
    suffix = "_transfer" if transfer else ""
    specs = model_specs(config, run_dir, transfer=transfer)
    out = run_dir / "lre"
    out.mkdir(parents=True, exist_ok=True)

    metric_rows = []
    lm_rows = []
    surface_rows = []
    for path in relation_paths(config, run_dir):
        rel = RelationData.read(path)
        model = model_from_spec(specs[rel.relation_id])
        res = _sweep_relation(config, model, rel)
        if not transfer:
            write_lre(out / f"r{rel.relation_id:03d}.lre", res.lre)
        m = res.metrics
        metric_rows.append(
            (
                rel.relation_id,
                rel.name,
                m.faithfulness,
                m.faith_prob,
                m.soft_causality,
                m.hard_causality,
                m.n_eval,
                res.beta,
                res.rank,
                res.probe_point,
            )
        )
        for ex in rel.examples:
            logp, acc = lm_features(model, ex)
            lm_rows.append((rel.relation_id, ex.subject_id, logp, acc))
        for probe, surface in sorted(res.faith_surface.items()):
            for beta, faith in surface:
                surface_rows.append((rel.relation_id, probe, "beta", beta, faith, ""))
        for probe, surface in sorted(res.causality_surface.items()):
            for rank, soft, hard in surface:
                surface_rows.append((rel.relation_id, probe, "rank", rank, soft, hard))

    _write_tsv(
        out / f"metrics{suffix}.tsv",
        (
            "relation_id",
            "name",
            "faithfulness",
            "faith_prob",
            "soft_causality",
            "hard_causality",
            "n_eval",
            "beta",
            "rank",
            "probe_point",
        ),
        metric_rows,
    )
    _write_tsv(
        out / f"lm_features{suffix}.tsv",
        ("relation_id", "subject_id", "logprob_correct", "fewshot_accuracy"),
        lm_rows,
    )
    if not transfer:
        _write_tsv(
            out / "sweep_surfaces.tsv",
            ("relation_id", "probe_point", "grid", "x", "faith_or_soft", "hard"),
            surface_rows,
        )


def stage_lre(config, run_dir: Path) -> None:
    _run_lre_pass(config, run_dir, transfer=False)
    if config.section("transfer", "enabled"):
        _run_lre_pass(config, run_dir, transfer=True)


def read_metrics_tsv(path) -> dict[int, "SimpleMetrics"]:
    rows = {}
    lines = Path(path).read_text().splitlines()
    for line in lines[1:]:
        if not line:
            continue
        vals = line.split("\t")
        rows[int(vals[0])] = SimpleMetrics(
            name=vals[1],
            faithfulness=float(vals[2]),
            faith_prob=float(vals[3]),
            soft_causality=float(vals[4]),
            hard_causality=float(vals[5]),
            n_eval=int(vals[6]),
            beta=float(vals[7]),
            rank=int(vals[8]),
            probe_point=vals[9],
        )
    return rows


class SimpleMetrics:
    def __init__(self, **kw):
        self.__dict__.update(kw)


def _read_lm_features(path) -> dict[tuple[int, str], tuple[float, float]]:
    out = {}
    for line in Path(path).read_text().splitlines()[1:]:
        if not line:
            continue
        rid, sid, logp, acc = line.split("\t")
        out[(int(rid), sid)] = (float(logp), float(acc))
    return out


def _build_rows(config, run_dir: Path, suffix: str) -> list[FeatureRow]:
    relations = [RelationData.read(p) for p in relation_paths(config, run_dir)]
    metrics = read_metrics_tsv(run_dir / "lre" / f"metrics{suffix}.tsv")
    lm = _read_lm_features(run_dir / "lre" / f"lm_features{suffix}.tsv")
    counts = CountTable.read(
        run_dir / "counts" / "occurrences.tsv", run_dir / "counts" / "pairs.tsv"
    )
    return build_feature_table(
        relations,
        metrics,
        lm,
        counts,
        target_kind=config.section("regression", "target_kind"),
    )


def stage_features(config, run_dir: Path) -> None:
    out = run_dir / "features"
    out.mkdir(parents=True, exist_ok=True)
    write_feature_table(out / "features.tsv", _build_rows(config, run_dir, ""))
    if config.section("transfer", "enabled"):
        write_feature_table(
            out / "features_transfer.tsv", _build_rows(config, run_dir, "_transfer")
        )


def stage_regress(config, run_dir: Path) -> None:
    reg = config.section("regression")
    rows = read_feature_table(run_dir / "features" / "features.tsv")
    out = run_dir / "regress"
    out.mkdir(parents=True, exist_ok=True)

    fold_rows = []
    summary_rows = []
    for label, names in (("lre+lm", ALL_FEATURES), ("lm_only", LM_FEATURES)):
        report = loro_cv(
            rows,
            seeds=tuple(reg["seeds"]),
            feature_names=names,
            n_trees=reg["n_trees"],
            label=label,
        )
        for f in report.folds:
            fold_rows.append(
                (
                    label,
                    f.seed,
                    f.relation_id,
                    f.n_train,
                    f.n_eval,
                    f.accuracy,
                    f.mae_ln,
                    f.baseline_mean,
                    f.baseline_random,
                )
            )
        summary_rows.append(
            (
                label,
                report.accuracy_mean,
                report.accuracy_std,
                report.mae_mean,
                report.mae_std,
                report.baseline_mean_accuracy,
                report.baseline_random_accuracy,
                report.n_folds,
            )
        )
    _write_tsv(
        out / "loro_folds.tsv",
        (
            "feature_set",
            "seed",
            "relation_id",
            "n_train",
            "n_eval",
            "accuracy",
            "mae_ln",
            "baseline_mean",
            "baseline_random",
        ),
        fold_rows,
    )
    _write_tsv(
        out / "loro_summary.tsv",
        (
            "feature_set",
            "accuracy_mean",
            "accuracy_std",
            "mae_mean",
            "mae_std",
            "baseline_mean_accuracy",
            "baseline_random_accuracy",
            "n_folds",
        ),
        summary_rows,
    )

    # Permutation importance on held-out folds, correlated features merged.
    merged = pca_merge(rows, tuple(reg["pca_merge"])) if reg["pca_merge"] else None
    imp_rows_src = merged.rows if merged else list(rows)
    imp_features = merged.feature_names if merged else ALL_FEATURES
    relation_ids = sorted({r.relation_id for r in imp_rows_src})
    totals: dict[str, float] = {name: 0.0 for name in imp_features}
    n_folds = 0
    for seed in reg["seeds"]:
        for rel in relation_ids:
            rows_eval = [r for r in imp_rows_src if r.relation_id == rel]
            held_objects = {r.object_term for r in rows_eval}
            rows_train = [
                r
                for r in imp_rows_src
                if r.relation_id != rel and r.object_term not in held_objects
            ]
            forest = train_forest(
                rows_train,
                feature_names=imp_features,
                n_trees=reg["n_trees"],
                seed=derive_seed(seed, rel),
            )
            drops = permutation_importance(
                forest, rows_eval, n_repeats=reg["importance_repeats"], seed=derive_seed(seed, 777 + rel)
            )
            for name, d in drops.items():
                totals[name] += d
            n_folds += 1
    comments = []
    if merged:
        comments.append(
            f"pca_merge={','.join(reg['pca_merge'])} into {merged.merged_name} "
            f"explained_variance_ratio={merged.explained_variance_ratio!r}"
        )
    imp_rows = sorted(
        ((name, total / n_folds) for name, total in totals.items()),
        key=lambda t: -t[1],
    )
    _write_tsv(
        out / "importance.tsv",
        ("feature", "mean_accuracy_drop"),
        imp_rows,
        comments=comments,
    )

    if config.section("transfer", "enabled"):
        ratio = config.section("transfer", "token_ratio")
        rows_b = read_feature_table(run_dir / "features" / "features_transfer.tsv")
        transfer_rows = []
        for label, names in (("lre+lm", ALL_FEATURES), ("lm_only", LM_FEATURES)):
            forest = train_forest(
                rows, feature_names=names, n_trees=reg["n_trees"], seed=reg["seeds"][0]
            )
            rep = cross_model_transfer(
                forest, rows_b, ratio, source_model="model_a", target_model="model_b"
            )
            transfer_rows.append(
                (
                    rep.source_model,
                    rep.target_model,
                    rep.token_ratio,
                    rep.count_scaling,
                    label,
                    rep.accuracy,
                    rep.mae_ln,
                    rep.n_eval,
                )
            )
        _write_tsv(
            out / "transfer.tsv",
            (
                "source",
                "target",
                "token_ratio",
                "count_scaling",
                "feature_set",
                "accuracy",
                "mae_ln",
                "n_eval",
            ),
            transfer_rows,
        )


def stage_correlate(config, run_dir: Path) -> None:
    """Pearson r between per-relation mean log10 pair frequency and causality,
    one row per checkpoint cutoff (or a single full-corpus row)."""
    relations = [RelationData.read(p) for p in relation_paths(config, run_dir)]
    metrics = read_metrics_tsv(run_dir / "lre" / "metrics.tsv")

    cp_path = run_dir / "counts" / "checkpoint_pairs.tsv"
    if config.section("checkpoints") is not None and cp_path.exists():
        checkpoint_tables = read_checkpoint_pairs(cp_path)
    else:
        table = CountTable.read(pairs_path=run_dir / "counts" / "pairs.tsv")
        checkpoint_tables = [("full", table.pair_counts)]

    scatter_rows = []
    corr_rows = []
    for cutoff, pairs in checkpoint_tables:
        mean_logs = []
        hard = []
        for rel in relations:
            logs = []
            for ex in rel.examples:
                a, b = ex.subject_term, ex.object_term
                key = (a, b) if a < b else (b, a)
                logs.append(log10(1 + pairs.get(key, 0)))
            m = metrics[rel.relation_id]
            mean_log = float(np.mean(logs))
            mean_logs.append(mean_log)
            hard.append(m.hard_causality)
            scatter_rows.append(
                (
                    cutoff,
                    rel.relation_id,
                    rel.name,
                    mean_log,
                    m.faithfulness,
                    m.faith_prob,
                    m.soft_causality,
                    m.hard_causality,
                )
            )
        try:
            r_log = pearson(mean_logs, hard)
        except ValueError:
            r_log = float("nan")
        try:
            r_raw = pearson([10.0**v for v in mean_logs], hard)
        except ValueError:
            r_raw = float("nan")
        corr_rows.append((cutoff, len(relations), r_log, r_raw))

    out = run_dir / "correlate"
    out.mkdir(parents=True, exist_ok=True)
    _write_tsv(
        out / "correlation.tsv",
        ("cutoff_tokens", "n_relations", "pearson_r_log10", "pearson_r_raw"),
        corr_rows,
        comments=("correlation computed on log10(1 + pair count) unless column says raw",),
    )
    _write_tsv(
        out / "fig_scatter.tsv",
        (
            "cutoff_tokens",
            "relation_id",
            "name",
            "mean_log10_pair_count",
            "faithfulness",
            "faith_prob",
            "soft_causality",
            "hard_causality",
        ),
        scatter_rows,
    )
