"""Numba scan kernels. Pure array-in/array-out, nogil, cached.

Pair emissions come back as raw (key, weight) streams so aggregation can
happen vectorized on the Python side; this keeps the hot loop free of
dictionaries and makes the kernels safe under thread-based sharding.
"""

import numpy as np
from numba import njit, uint64

_MULT = uint64(0x9E3779B97F4A7C15)
_EMPTY = uint64(0xFFFFFFFFFFFFFFFF)

PAIR_NONE = -1
PAIR_PRESENCE = 0
PAIR_PRODUCT = 1


@njit(inline="always")
def _ht_get(ht_keys, ht_vals, shift, mask, key):
    idx = (key * _MULT) >> shift
    idx = idx & mask
    while True:
        k = ht_keys[idx]
        if k == key:
            return ht_vals[idx]
        if k == _EMPTY:
            return -1
        idx = (idx + uint64(1)) & mask


@njit(cache=True, nogil=True)
def scan_chunk(
    tok,            # (rows, seq_len) uint32, one shard chunk
    ht_keys, ht_vals, shift,
    fail, out_offsets, out_terms, out_pidx, out_plen,
    n_terms,
    pair_mode,      # PAIR_NONE / PAIR_PRESENCE / PAIR_PRODUCT
    emit_positions, # bool: also return per-match (row, start, term, pidx)
):
    rows, seq = tok.shape
    shift_u = uint64(shift)
    mask = uint64(ht_keys.shape[0] - 1)

    occ = np.zeros(n_terms, dtype=np.int64)
    row_counts = np.zeros(n_terms, dtype=np.int64)
    touched = np.empty(n_terms, dtype=np.int64)

    pair_cap = 1024
    pair_keys = np.empty(pair_cap, dtype=np.uint64)
    pair_w = np.empty(pair_cap, dtype=np.int64)
    n_pairs = 0

    pos_cap = 1024 if emit_positions else 0
    pos_row = np.empty(pos_cap, dtype=np.int64)
    pos_start = np.empty(pos_cap, dtype=np.int64)
    pos_term = np.empty(pos_cap, dtype=np.int64)
    pos_pidx = np.empty(pos_cap, dtype=np.int64)
    n_pos = 0

    for r in range(rows):
        state = 0
        n_touched = 0
        for p in range(seq):
            t = uint64(tok[r, p])
            while True:
                key = (uint64(state) << uint64(32)) | t
                nxt = _ht_get(ht_keys, ht_vals, shift_u, mask, key)
                if nxt >= 0:
                    state = nxt
                    break
                if state == 0:
                    break
                state = fail[state]
            o0 = out_offsets[state]
            o1 = out_offsets[state + 1]
            for k in range(o0, o1):
                term = out_terms[k]
                occ[term] += 1
                if pair_mode != PAIR_NONE:
                    if row_counts[term] == 0:
                        touched[n_touched] = term
                        n_touched += 1
                    row_counts[term] += 1
                if emit_positions:
                    if n_pos == pos_cap:
                        pos_cap = pos_cap * 2
                        tmp = np.empty(pos_cap, dtype=np.int64)
                        tmp[:n_pos] = pos_row
                        pos_row = tmp
                        tmp = np.empty(pos_cap, dtype=np.int64)
                        tmp[:n_pos] = pos_start
                        pos_start = tmp
                        tmp = np.empty(pos_cap, dtype=np.int64)
                        tmp[:n_pos] = pos_term
                        pos_term = tmp
                        tmp = np.empty(pos_cap, dtype=np.int64)
                        tmp[:n_pos] = pos_pidx
                        pos_pidx = tmp
                    pos_row[n_pos] = r
                    pos_start[n_pos] = p - out_plen[k] + 1
                    pos_term[n_pos] = term
                    pos_pidx[n_pos] = out_pidx[k]
                    n_pos += 1

        if pair_mode != PAIR_NONE and n_touched > 1:
            need = n_touched * (n_touched - 1) // 2
            if n_pairs + need > pair_cap:
                new_cap = pair_cap
                while new_cap < n_pairs + need:
                    new_cap *= 2
                tmp_k = np.empty(new_cap, dtype=np.uint64)
                tmp_k[:n_pairs] = pair_keys[:n_pairs]
                pair_keys = tmp_k
                tmp_w = np.empty(new_cap, dtype=np.int64)
                tmp_w[:n_pairs] = pair_w[:n_pairs]
                pair_w = tmp_w
                pair_cap = new_cap
            for i in range(n_touched):
                for j in range(i + 1, n_touched):
                    ta = touched[i]
                    tb = touched[j]
                    if ta > tb:
                        ta, tb = tb, ta
                    pair_keys[n_pairs] = (uint64(ta) << uint64(32)) | uint64(tb)
                    if pair_mode == PAIR_PRESENCE:
                        pair_w[n_pairs] = 1
                    else:
                        pair_w[n_pairs] = row_counts[touched[i]] * row_counts[touched[j]]
                    n_pairs += 1
        if pair_mode != PAIR_NONE:
            for i in range(n_touched):
                row_counts[touched[i]] = 0

    return (
        occ,
        pair_keys[:n_pairs].copy(),
        pair_w[:n_pairs].copy(),
        pos_row[:n_pos].copy(),
        pos_start[:n_pos].copy(),
        pos_term[:n_pos].copy(),
        pos_pidx[:n_pos].copy(),
    )
