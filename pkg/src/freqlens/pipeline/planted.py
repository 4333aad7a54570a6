"""The planted-frequency experiment: synthetic corpus + reference models
constructed so that deviation from linearity falls as planted frequency
rises. Validates the whole measurement pipeline end to end at desk scale.

Per relation r with frequency level f_r (log-spaced across the configured
exponent range), every example's subject-object pair is planted ~f_r times
(with per-example jitter), and the relation's model gets nonlinearity noise
decreasing in log10(f_r). High-frequency relations therefore have strong
linear structure, mirroring the effect the measurement stack is meant to
detect; the experiment asserts the stack recovers it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import SynthSpec, TermDictionary, TermEntry
from ..lre import RelationData, RelationExample, make_reference_model
from ..rng import derive_seed

TOKEN_BASE = 1_000_000  # planted term tokens live above any filler id


@dataclass
class PlantedExperiment:
    dictionary: TermDictionary
    synth_spec: SynthSpec
    relations: list[RelationData]
    model_specs: dict[int, dict]      # relation_id -> reference model spec
    relation_levels: dict[int, float]  # relation_id -> planted frequency level


def _term_patterns(term_index: int) -> tuple[tuple[int, ...], ...]:
    """Two surface variants per term, from a reserved token range."""
    base = TOKEN_BASE + term_index * 4
    return ((base, base + 1), (base + 2,))


def build_planted_experiment(planted_cfg: dict, seed: int) -> PlantedExperiment:
    n_rel = int(planted_cfg["relations"])
    n_ex = int(planted_cfg["examples_per_relation"])
    e_min = float(planted_cfg["freq_exponent_min"])
    e_max = float(planted_cfg["freq_exponent_max"])
    jitter = float(planted_cfg["jitter_orders"])
    obj_mult = float(planted_cfg["object_multiplier"])
    corpus_cfg = planted_cfg["corpus"]
    model_cfg = planted_cfg["model"]

    rng = np.random.default_rng(derive_seed(seed, 1))

    entries: list[TermEntry] = []
    pair_targets: dict[tuple[int, int], int] = {}
    occurrence_targets: dict[int, int] = {}
    relations: list[RelationData] = []
    model_specs: dict[int, dict] = {}
    relation_levels: dict[int, float] = {}

    exponents = np.linspace(e_min, e_max, n_rel)
    for rel_id in range(n_rel):
        level = 10.0 ** exponents[rel_id]
        relation_levels[rel_id] = level
        # Linearity planted to track frequency: noisiest at the low end.
        frac = (exponents[rel_id] - e_min) / (e_max - e_min)
        noise = model_cfg["noise_max"] - frac * (model_cfg["noise_max"] - model_cfg["noise_min"])
        model_seed = derive_seed(seed, 100 + rel_id)
        spec = {
            "kind": "mlp",
            "d_s": model_cfg["d_s"],
            "d_o": model_cfg["d_o"],
            "vocab": model_cfg["vocab"],
            "seed": model_seed,
            "noise": round(float(noise), 6),
            "ctx_scale": model_cfg["ctx_scale"],
        }
        model_specs[rel_id] = spec
        model = make_reference_model(**{k: v for k, v in spec.items()})

        examples = []
        for i in range(n_ex):
            subj_term = len(entries)
            entries.append(
                TermEntry(subj_term, f"r{rel_id}s{i}", _term_patterns(subj_term))
            )
            obj_term = len(entries)
            entries.append(
                TermEntry(obj_term, f"r{rel_id}o{i}", _term_patterns(obj_term))
            )

            pair_count = int(round(level * 10.0 ** rng.uniform(-jitter, jitter)))
            pair_count = max(pair_count, 2)  # keep above the count>1 filter
            pair_targets[(subj_term, obj_term)] = pair_count
            occurrence_targets[obj_term] = int(np.ceil(pair_count * obj_mult))

            s_vec = rng.normal(0.0, 1.0, size=model.d_s)
            context_id = rel_id * 100_000 + i * 10
            scores = model.decode(model.forward(s_vec, context_id))
            examples.append(
                RelationExample(
                    subject_id=f"r{rel_id}s{i}",
                    subject_vector=s_vec,
                    context_id=context_id,
                    object_token=int(np.argmax(scores)),
                    subject_surface=f"r{rel_id}s{i}",
                    object_surface=f"r{rel_id}o{i}",
                    subject_term=subj_term,
                    object_term=obj_term,
                )
            )
        relations.append(RelationData(name=f"relation{rel_id}", relation_id=rel_id, examples=examples))

    dictionary = TermDictionary(entries)
    synth_spec = SynthSpec(
        n_batches=corpus_cfg["n_batches"],
        batch_size=corpus_cfg["batch_size"],
        seq_len=corpus_cfg["seq_len"],
        filler_range=(corpus_cfg["filler_lo"], corpus_cfg["filler_hi"]),
        pair_targets=pair_targets,
        occurrence_targets=occurrence_targets,
        seed=derive_seed(seed, 2),
        tokenizer_id="planted-synthetic",
        doc_rows=tuple(corpus_cfg["doc_rows"]) if corpus_cfg.get("doc_rows") else None,
    )
    return PlantedExperiment(
        dictionary=dictionary,
        synth_spec=synth_spec,
        relations=relations,
        model_specs=model_specs,
        relation_levels=relation_levels,
    )
