"""Corpus scanning: occurrences, within-row co-occurrence, document windows,
and checkpoint-cumulative counts.

Rows are the co-occurrence window for `scan_corpus` (matching how models see
training sequences); `document_counts` swaps the window for document spans,
which may cross row boundaries. Matches themselves never cross rows.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .corpus import TokenCorpus
from .counts import CountTable, merge_counts
from .matcher import Matcher
from . import _kernels

PAIR_MODE_CODES = {
    None: _kernels.PAIR_NONE,
    "none": _kernels.PAIR_NONE,
    "presence": _kernels.PAIR_PRESENCE,
    "product": _kernels.PAIR_PRODUCT,
}

POSITION_COLUMNS = ("batch", "row", "position", "term_id", "pattern_index")


@dataclass(frozen=True)
class MatchRecord:
    term_id: int
    batch_index: int
    row_index: int
    position: int       # index of the pattern's first token
    pattern_index: int


@dataclass(frozen=True)
class CheckpointSchedule:
    """Strictly increasing token budgets, e.g. 41e9 ... 2e12."""

    cutoffs: tuple[int, ...]

    def __post_init__(self):
        cut = tuple(int(c) for c in self.cutoffs)
        object.__setattr__(self, "cutoffs", cut)
        if not cut:
            raise ValueError("schedule needs at least one cutoff")
        for prev, cur in zip(cut, cut[1:]):
            if cur <= prev:
                raise ValueError(f"schedule not strictly increasing at {prev} -> {cur}")
        if cut[0] <= 0:
            raise ValueError("cutoffs must be positive")

    def validate_for(self, corpus: TokenCorpus) -> None:
        total = corpus.manifest.total_tokens
        for c in self.cutoffs:
            if c > total:
                raise ValueError(f"cutoff {c} exceeds corpus total_tokens {total}")


def _kernel_args(matcher: Matcher):
    return (
        matcher.ht_keys,
        matcher.ht_vals,
        matcher.ht_shift,
        matcher.fail,
        matcher.out_offsets,
        matcher.out_terms,
        matcher.out_pidx,
        matcher.out_plen,
        matcher.n_terms,
    )


def _accumulate_pairs(keys: np.ndarray, weights: np.ndarray, into: dict) -> None:
    if keys.size == 0:
        return
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    ws = weights[order]
    starts = np.flatnonzero(np.concatenate(([True], ks[1:] != ks[:-1])))
    sums = np.add.reduceat(ws, starts)
    for key, total in zip(ks[starts].tolist(), sums.tolist()):
        pair = (key >> 32, key & 0xFFFFFFFF)
        into[pair] = into.get(pair, 0) + int(total)


def _scan_row_block(matcher, rows2d, pair_mode_code, emit_positions):
    """Scan a contiguous (rows, seq_len) block; one kernel invocation."""
    occ, pk, pw, prow, pstart, pterm, ppidx = _kernels.scan_chunk(
        rows2d, *_kernel_args(matcher), pair_mode_code, emit_positions
    )
    return occ, pk, pw, (prow, pstart, pterm, ppidx)


def _scan_batch_range(matcher, corpus, b0, b1, pair_mode_code, emit_positions):
    """Scan batches [b0, b1) as one block. Returns a CountTable + positions."""
    m = corpus.manifest
    block = np.asarray(corpus.tokens[b0:b1]).reshape((b1 - b0) * m.batch_size, m.seq_len)
    occ, pk, pw, pos = _scan_row_block(matcher, block, pair_mode_code, emit_positions)
    table = CountTable(tokens_scanned=block.size)
    nz = np.flatnonzero(occ)
    table.occurrences = {int(t): int(occ[t]) for t in nz}
    _accumulate_pairs(pk, pw, table.pair_counts)

    positions = None
    if emit_positions:
        prow, pstart, pterm, ppidx = pos
        grow = prow + b0 * m.batch_size  # global row index
        positions = np.column_stack(
            (grow // m.batch_size, grow % m.batch_size, pstart, pterm, ppidx)
        )
    return table, positions


def _shard_ranges(n_batches: int, shards: int):
    shards = max(1, min(shards, n_batches)) if n_batches else 1
    bounds = np.linspace(0, n_batches, shards + 1).astype(int)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(shards) if bounds[i] < bounds[i + 1]]


def _scan_batches(matcher, corpus, b0, b1, pair_mode_code, emit_positions, shards):
    ranges = _shard_ranges(b1 - b0, shards)
    ranges = [(b0 + lo, b0 + hi) for lo, hi in ranges]
    if len(ranges) <= 1:
        results = [
            _scan_batch_range(matcher, corpus, lo, hi, pair_mode_code, emit_positions)
            for lo, hi in ranges
        ]
    else:
        # The kernel releases the GIL, so threads give real parallelism.
        with ThreadPoolExecutor(max_workers=len(ranges)) as pool:
            futures = [
                pool.submit(
                    _scan_batch_range, matcher, corpus, lo, hi, pair_mode_code, emit_positions
                )
                for lo, hi in ranges
            ]
            results = [f.result() for f in futures]

    table = CountTable()
    chunks = []
    for shard_table, positions in results:
        table = merge_counts(table, shard_table)
        if positions is not None:
            chunks.append(positions)
    merged_positions = None
    if emit_positions:
        merged_positions = (
            np.vstack(chunks) if chunks else np.empty((0, 5), dtype=np.int64)
        )
        if merged_positions.shape[0]:
            order = np.lexsort(
                (
                    merged_positions[:, 4],
                    merged_positions[:, 3],
                    merged_positions[:, 2],
                    merged_positions[:, 1],
                    merged_positions[:, 0],
                )
            )
            merged_positions = merged_positions[order]
    return table, merged_positions


def scan_sequence(matcher: Matcher, tokens, batch_index=0, row_index=0) -> list[MatchRecord]:
    """All pattern matches in one token sequence, ordered by (position, term)."""
    row = np.ascontiguousarray(tokens, dtype=np.dtype("<u4")).reshape(1, -1)
    _, _, _, (prow, pstart, pterm, ppidx) = _scan_row_block(
        matcher, row, _kernels.PAIR_NONE, True
    )
    records = [
        MatchRecord(int(t), batch_index, row_index, int(s), int(pi))
        for s, t, pi in zip(pstart, pterm, ppidx)
    ]
    records.sort(key=lambda r: (r.position, r.term_id, r.pattern_index))
    return records


def scan_corpus(
    matcher: Matcher,
    corpus: TokenCorpus,
    pair_mode: str = "presence",
    emit_positions: bool = False,
    shards: int = 1,
):
    """Count occurrences and within-row co-occurrences over the whole corpus.

    In `presence` mode a pair counts once per row where both terms match; in
    `product` mode it counts (matches of a) * (matches of b) per row. With
    emit_positions=True also returns an (n, 5) int array of match records
    with columns (batch, row, position, term_id, pattern_index).
    """
    code = PAIR_MODE_CODES[pair_mode]
    table, positions = _scan_batches(
        matcher, corpus, 0, corpus.manifest.n_batches, code, emit_positions, shards
    )
    if emit_positions:
        return table, positions
    return table


def document_counts(matcher: Matcher, corpus: TokenCorpus, shards: int = 1) -> CountTable:
    """Co-occurrence with document spans as the window (presence mode).

    Matches are still found within rows; each match is assigned to the
    document containing its first token. Matches outside every document
    contribute occurrences but no pairs.
    """
    if corpus.doc_offsets is None:
        raise ValueError("corpus has no doc offsets; document_counts needs docs.idx")
    table, positions = _scan_batches(
        matcher, corpus, 0, corpus.manifest.n_batches, _kernels.PAIR_NONE, True, shards
    )

    m = corpus.manifest
    starts = corpus.doc_offsets[:, 0]
    ends = corpus.doc_offsets[:, 1]
    if positions.shape[0] and starts.size:
        gstart = (positions[:, 0] * m.batch_size + positions[:, 1]) * m.seq_len + positions[:, 2]
        doc_idx = np.searchsorted(starts, gstart, side="right") - 1
        valid = (doc_idx >= 0) & (gstart < ends[np.clip(doc_idx, 0, None)])
        doc_term = np.unique(
            np.column_stack((doc_idx[valid], positions[valid, 3])), axis=0
        )
        # Pairs of distinct terms per document, presence semantics.
        doc_ids, first = np.unique(doc_term[:, 0], return_index=True)
        bounds = np.append(first, doc_term.shape[0])
        for d in range(doc_ids.size):
            terms = doc_term[bounds[d]:bounds[d + 1], 1]
            for i in range(terms.size):
                for j in range(i + 1, terms.size):
                    table.add_pair(int(terms[i]), int(terms[j]))
    return table


def cumulative_counts(
    matcher: Matcher,
    corpus: TokenCorpus,
    schedule: CheckpointSchedule,
    pair_mode: str = "presence",
    shards: int = 1,
) -> list[tuple[int, CountTable]]:
    """Counts over the batch prefix a training run would have seen per cutoff.

    A batch is included in cutoff k only when fully contained (cumulative
    token total <= cutoff); counts are monotone non-decreasing in the cutoff.
    """
    schedule.validate_for(corpus)
    m = corpus.manifest
    code = PAIR_MODE_CODES[pair_mode]
    n_full = [min(m.n_batches, c // m.batch_tokens) for c in schedule.cutoffs]

    results: list[tuple[int, CountTable]] = []
    running = CountTable()
    done = 0
    for cutoff, upto in zip(schedule.cutoffs, n_full):
        if upto > done:
            segment, _ = _scan_batches(matcher, corpus, done, upto, code, False, shards)
            running = merge_counts(running, segment)
            done = upto
        results.append((cutoff, running.copy()))
    return results


def write_positions(path, positions: np.ndarray) -> None:
    """Position log TSV: batch, row, position, term_id, pattern_index."""
    with open(path, "w") as fh:
        for rec in positions:
            fh.write("\t".join(str(int(x)) for x in rec) + "\n")
