"""Multi-pattern automaton over the token-id alphabet.

The alphabet (uint32 token ids) is far too large for dense transition
tables, so goto edges live in a single open-addressing hash table keyed by
(state << 32) | token. Failure links and output lists are flat arrays, which
keeps the scan kernel free of Python objects.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import DictionaryError
from .dictionary import TermDictionary

HASH_MULT = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1
EMPTY_KEY = MASK64


@dataclass(frozen=True)
class Matcher:
    """Immutable compiled automaton; safe to share across scan workers."""

    ht_keys: np.ndarray       # uint64, open-addressing table keys
    ht_vals: np.ndarray       # int64, next-state per key
    ht_shift: int             # 64 - log2(table size)
    fail: np.ndarray          # int64, per-state failure link
    out_offsets: np.ndarray   # int64, (n_states + 1) output slices
    out_terms: np.ndarray     # int64, term id per output
    out_pidx: np.ndarray      # int64, pattern index within term
    out_plen: np.ndarray      # int64, pattern length (for start positions)
    n_terms: int
    n_states: int
    n_patterns: int
    max_pattern_len: int
    dictionary: TermDictionary

    def __len__(self) -> int:
        return self.n_states


def compile_patterns(dictionary: TermDictionary) -> Matcher:
    """Build the automaton for every pattern of every term.

    Rejects dictionaries where one pattern maps to two terms (the dictionary
    validates this too; compiling from raw entries re-checks).
    """
    goto: list[dict[int, int]] = [{}]
    own: list[tuple[int, int, int] | None] = [None]  # (term, pidx, plen) at terminal

    n_patterns = 0
    max_plen = 0
    for entry in dictionary.entries:
        for pidx, pat in enumerate(entry.patterns):
            if len(pat) == 0:
                raise DictionaryError(f"term {entry.term_id}: empty pattern")
            s = 0
            for tok in pat:
                nxt = goto[s].get(tok)
                if nxt is None:
                    nxt = len(goto)
                    goto[s][tok] = nxt
                    goto.append({})
                    own.append(None)
                s = nxt
            if own[s] is not None:
                other_term, other_pidx, _ = own[s]
                raise DictionaryError(
                    f"duplicate pattern {list(pat)}: term {other_term} (pattern "
                    f"{other_pidx}) and term {entry.term_id} (pattern {pidx})"
                )
            own[s] = (entry.term_id, pidx, len(pat))
            n_patterns += 1
            max_plen = max(max_plen, len(pat))

    n_states = len(goto)
    fail = np.zeros(n_states, dtype=np.int64)
    # Output closure: out(s) = own(s) + out(fail(s)); BFS order guarantees
    # fail(s) is finalized before s.
    outs: list[list[tuple[int, int, int]]] = [[] for _ in range(n_states)]

    queue = deque()
    for tok, s in goto[0].items():
        fail[s] = 0
        queue.append(s)
    while queue:
        r = queue.popleft()
        if own[r] is not None:
            outs[r].append(own[r])
        outs[r].extend(outs[fail[r]])
        for tok, s in goto[r].items():
            queue.append(s)
            f = fail[r]
            while f != 0 and tok not in goto[f]:
                f = fail[f]
            fail[s] = goto[f].get(tok, 0)

    # Flatten output lists.
    out_offsets = np.zeros(n_states + 1, dtype=np.int64)
    for s in range(n_states):
        out_offsets[s + 1] = out_offsets[s] + len(outs[s])
    total_out = int(out_offsets[-1])
    out_terms = np.zeros(total_out, dtype=np.int64)
    out_pidx = np.zeros(total_out, dtype=np.int64)
    out_plen = np.zeros(total_out, dtype=np.int64)
    k = 0
    for s in range(n_states):
        for term, pidx, plen in outs[s]:
            out_terms[k] = term
            out_pidx[k] = pidx
            out_plen[k] = plen
            k += 1

    # Hash table at <= 50% load.
    n_edges = sum(len(d) for d in goto)
    size = 8
    while size < 2 * max(n_edges, 1):
        size *= 2
    shift = 64 - size.bit_length() + 1
    ht_keys = np.full(size, EMPTY_KEY, dtype=np.uint64)
    ht_vals = np.zeros(size, dtype=np.int64)
    mask = size - 1
    for s, edges in enumerate(goto):
        for tok, nxt in edges.items():
            key = (s << 32) | tok
            idx = ((key * HASH_MULT) & MASK64) >> shift
            while ht_keys[idx] != EMPTY_KEY:
                idx = (idx + 1) & mask
            ht_keys[idx] = key
            ht_vals[idx] = nxt

    return Matcher(
        ht_keys=ht_keys,
        ht_vals=ht_vals,
        ht_shift=shift,
        fail=fail,
        out_offsets=out_offsets,
        out_terms=out_terms,
        out_pidx=out_pidx,
        out_plen=out_plen,
        n_terms=len(dictionary),
        n_states=n_states,
        n_patterns=n_patterns,
        max_pattern_len=max_plen,
        dictionary=dictionary,
    )
