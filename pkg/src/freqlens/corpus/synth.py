"""Synthetic corpora with planted term and pair frequencies.

Desk-scale experiments need corpora whose ground-truth counts are known
exactly. The generator dedicates groups of rows to batches of pairs so that
requested pair presence counts are met exactly, keeps one filler token
between plantings, and draws filler from a vocabulary disjoint from every
pattern token, so no accidental matches can form. The returned ground-truth
tables are derived from the placement plan and provably equal a scan of the
emitted corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import InfeasiblePlanError
from .corpus import TokenCorpus
from .counts import CountTable
from .dictionary import TermDictionary
from .matcher import compile_patterns
from .scan import scan_sequence


@dataclass
class SynthSpec:
    n_batches: int
    batch_size: int
    seq_len: int
    filler_range: tuple[int, int]              # [lo, hi) candidate filler ids
    pair_targets: dict[tuple[int, int], int] = field(default_factory=dict)
    occurrence_targets: dict[int, int] = field(default_factory=dict)
    seed: int = 0
    tokenizer_id: str = "synthetic"
    doc_rows: Optional[tuple[int, int]] = None  # random row-aligned doc lengths
    shuffle_rows: bool = True  # spread plantings uniformly over the stream

    @property
    def n_rows(self) -> int:
        return self.n_batches * self.batch_size

    @classmethod
    def from_json(cls, path) -> "SynthSpec":
        raw = json.loads(open(path).read())
        shape = raw["shape"]
        return cls(
            n_batches=shape["n_batches"],
            batch_size=shape["batch_size"],
            seq_len=shape["seq_len"],
            filler_range=tuple(raw["filler_range"]),
            pair_targets={(int(a), int(b)): int(n) for a, b, n in raw.get("pairs", [])},
            occurrence_targets={int(t): int(n) for t, n in raw.get("occurrences", {}).items()},
            seed=int(raw.get("seed", 0)),
            tokenizer_id=raw.get("tokenizer_id", "synthetic"),
            doc_rows=tuple(raw["doc_rows"]) if raw.get("doc_rows") else None,
            shuffle_rows=bool(raw.get("shuffle_rows", True)),
        )

    def to_json(self, path) -> None:
        raw = {
            "shape": {
                "n_batches": self.n_batches,
                "batch_size": self.batch_size,
                "seq_len": self.seq_len,
            },
            "filler_range": list(self.filler_range),
            "pairs": [[a, b, n] for (a, b), n in sorted(self.pair_targets.items())],
            "occurrences": {str(t): n for t, n in sorted(self.occurrence_targets.items())},
            "seed": self.seed,
            "tokenizer_id": self.tokenizer_id,
            "doc_rows": list(self.doc_rows) if self.doc_rows else None,
            "shuffle_rows": self.shuffle_rows,
        }
        with open(path, "w") as fh:
            json.dump(raw, fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass
class SynthResult:
    corpus: TokenCorpus
    truth_presence: CountTable
    truth_product: CountTable


def _check_substring_free(dictionary: TermDictionary, terms: set[int]) -> None:
    """Planting assumes no pattern occurs inside another pattern."""
    matcher = compile_patterns(dictionary)
    for t in sorted(terms):
        for pidx, pat in enumerate(dictionary.entries[t].patterns):
            hits = scan_sequence(matcher, np.asarray(pat, dtype=np.uint32))
            if len(hits) != 1:
                culprits = {(h.term_id, h.pattern_index) for h in hits} - {(t, pidx)}
                raise InfeasiblePlanError(
                    f"pattern {list(pat)} of term {t} contains other patterns "
                    f"{sorted(culprits)}; planted counts would not be exact"
                )


def _max_pattern_len(dictionary: TermDictionary, term: int) -> int:
    return max(len(p) for p in dictionary.entries[term].patterns)


def generate_synthetic_corpus(dictionary: TermDictionary, spec: SynthSpec) -> SynthResult:
    """Build a corpus meeting the requested counts exactly.

    Pair targets are presence counts (rows where both terms appear); the
    product-mode truth is returned alongside. Occurrence targets, when given
    for a term, must be >= the occurrences already implied by its pair
    plantings; the difference is planted in dedicated solo rows.
    """
    for (a, b) in spec.pair_targets:
        if a == b:
            raise InfeasiblePlanError(f"self pair ({a}, {a}) cannot be planted")
        if not (0 <= a < len(dictionary) and 0 <= b < len(dictionary)):
            raise InfeasiblePlanError(f"pair ({a}, {b}) references unknown terms")
    for t in spec.occurrence_targets:
        if not 0 <= t < len(dictionary):
            raise InfeasiblePlanError(f"occurrence target references unknown term {t}")

    planted_terms = {t for pair in spec.pair_targets for t in pair}
    planted_terms |= set(spec.occurrence_targets)
    if planted_terms:
        _check_substring_free(dictionary, planted_terms)

    # Filler vocabulary must avoid every pattern token of the dictionary.
    lo, hi = spec.filler_range
    forbidden = np.fromiter(dictionary.pattern_tokens(), dtype=np.int64) if len(dictionary) else np.empty(0, np.int64)
    pool = np.arange(lo, hi, dtype=np.int64)
    if forbidden.size:
        pool = pool[~np.isin(pool, forbidden)]
    if pool.size == 0:
        raise InfeasiblePlanError("filler range contains no token free of pattern tokens")

    n_rows, seq_len = spec.n_rows, spec.seq_len

    # --- plan: pack pair targets into row groups -------------------------
    # A group of pairs shares a block of rows; row k of the block hosts one
    # planting of every pair whose target exceeds k. Sorting by target keeps
    # hosted sets prefix-shaped, which makes the ground truth analytic.
    def pair_cost(a, b):
        return _max_pattern_len(dictionary, a) + _max_pattern_len(dictionary, b) + 2

    pairs_sorted = sorted(
        ((n, a, b) for (a, b), n in spec.pair_targets.items() if n > 0),
        key=lambda x: (-x[0], x[1], x[2]),
    )
    groups: list[list[tuple[int, int, int]]] = []  # [(n, a, b)]
    budget = 0
    for n, a, b in pairs_sorted:
        cost = pair_cost(a, b)
        if cost > seq_len:
            raise InfeasiblePlanError(
                f"pair ({a}, {b}) needs {cost} tokens per row; seq_len is {seq_len}"
            )
        if n > n_rows:
            raise InfeasiblePlanError(
                f"pair ({a}, {b}) presence target {n} exceeds corpus row count {n_rows}"
            )
        if groups and budget + cost <= seq_len:
            groups[-1].append((n, a, b))
            budget += cost
        else:
            groups.append([(n, a, b)])
            budget = cost

    group_row0: list[int] = []
    next_row = 0
    for g in groups:
        group_row0.append(next_row)
        next_row += g[0][0]  # sorted desc: first pair's target is the span
    if next_row > n_rows:
        raise InfeasiblePlanError(
            f"pair targets need {next_row} rows; corpus has {n_rows} "
            f"(raise n_batches/batch_size or lower targets)"
        )

    # --- plan: occurrence top-ups in solo rows ---------------------------
    implied_occ: dict[int, int] = {}
    for g in groups:
        for n, a, b in g:
            implied_occ[a] = implied_occ.get(a, 0) + n
            implied_occ[b] = implied_occ.get(b, 0) + n

    solo: list[tuple[int, int]] = []  # (term, count) needing solo planting
    for t, target in sorted(spec.occurrence_targets.items()):
        have = implied_occ.get(t, 0)
        if target < have:
            raise InfeasiblePlanError(
                f"term {t}: occurrence target {target} below the {have} occurrences "
                f"already implied by pair plantings"
            )
        if target > have:
            solo.append((t, target - have))

    # One term per solo row: mixing terms would create unplanned pairs.
    solo_rows: list[list[int]] = []
    for t, remaining in solo:
        step = _max_pattern_len(dictionary, t) + 1
        per_row = max(1, seq_len // step)
        while remaining > 0:
            take = min(per_row, remaining)
            solo_rows.append([t] * take)
            remaining -= take
    if next_row + len(solo_rows) > n_rows:
        raise InfeasiblePlanError(
            f"plan needs {next_row + len(solo_rows)} rows "
            f"({next_row} for pairs, {len(solo_rows)} solo); corpus has {n_rows}"
        )

    # --- materialize ------------------------------------------------------
    rng = np.random.default_rng(spec.seed)
    tokens = pool[rng.integers(0, pool.size, size=(n_rows, seq_len))].astype(np.uint32)

    pattern_cycle: dict[int, int] = {}

    def next_pattern(term):
        i = pattern_cycle.get(term, 0)
        pats = dictionary.entries[term].patterns
        pattern_cycle[term] = i + 1
        return pats[i % len(pats)]

    def plant(row, cursor, term):
        pat = next_pattern(term)
        tokens[row, cursor:cursor + len(pat)] = np.asarray(pat, dtype=np.uint32)
        return cursor + len(pat) + 1

    for g, row0 in zip(groups, group_row0):
        span = g[0][0]
        for k in range(span):
            cursor = 0
            for n, a, b in g:
                if n > k:
                    cursor = plant(row0 + k, cursor, a)
                    cursor = plant(row0 + k, cursor, b)
    for i, terms in enumerate(solo_rows):
        cursor = 0
        for t in terms:
            cursor = plant(next_row + i, cursor, t)

    if spec.shuffle_rows:
        # Per-row content is what counts; permuting rows spreads plantings
        # uniformly so checkpoint prefixes see representative counts.
        tokens = tokens[rng.permutation(n_rows)]

    corpus_tokens = tokens.reshape(spec.n_batches, spec.batch_size, seq_len)
    doc_offsets = None
    if spec.doc_rows is not None:
        lo_r, hi_r = spec.doc_rows
        spans = []
        row = 0
        while row < n_rows:
            length = int(rng.integers(lo_r, hi_r + 1))
            end = min(row + length, n_rows)
            spans.append((row * seq_len, end * seq_len))
            row = end
        doc_offsets = np.asarray(spans, dtype=np.int64)
    corpus = TokenCorpus.from_array(
        corpus_tokens, tokenizer_id=spec.tokenizer_id, doc_offsets=doc_offsets
    )

    # --- ground truth from the plan ----------------------------------------
    presence = CountTable(tokens_scanned=n_rows * seq_len)
    product = CountTable(tokens_scanned=n_rows * seq_len)

    for t, n in sorted(implied_occ.items()):
        presence.add_occurrence(t, n)
        product.add_occurrence(t, n)
    for t, extra in solo:
        presence.add_occurrence(t, extra)
        product.add_occurrence(t, extra)

    for g in groups:
        # Row segments where the hosted pair set is constant.
        thresholds = sorted({n for n, _, _ in g})
        prev = 0
        for cut in thresholds:
            seg_len = cut - prev
            active = [(a, b) for n, a, b in g if n >= cut]
            term_counts: dict[int, int] = {}
            for a, b in active:
                term_counts[a] = term_counts.get(a, 0) + 1
                term_counts[b] = term_counts.get(b, 0) + 1
            terms = sorted(term_counts)
            for i in range(len(terms)):
                for j in range(i + 1, len(terms)):
                    t, u = terms[i], terms[j]
                    presence.add_pair(t, u, seg_len)
                    product.add_pair(t, u, seg_len * term_counts[t] * term_counts[u])
            prev = cut

    return SynthResult(corpus, presence, product)
