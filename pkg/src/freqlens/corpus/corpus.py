"""Fixed-shape token corpora: manifest + raw uint32 token array + doc spans.

Layout on disk mirrors how LM pretraining batches are stored: a `manifest`
JSON file, a row-major `tokens.bin` of 4-byte little-endian token ids shaped
(n_batches, batch_size, seq_len), and an optional `docs.idx` of sorted
(start, end) token offsets marking document boundaries in the flat stream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import CorpusIntegrityError

TOKEN_DTYPE = np.dtype("<u4")
TOKEN_WIDTH = 4

MANIFEST_NAME = "manifest"
TOKENS_NAME = "tokens.bin"
DOCS_NAME = "docs.idx"


@dataclass(frozen=True)
class CorpusManifest:
    token_width: int
    endianness: str
    batch_size: int
    seq_len: int
    n_batches: int
    total_tokens: int
    tokenizer_id: str

    def __post_init__(self):
        if self.token_width != TOKEN_WIDTH:
            raise CorpusIntegrityError(
                f"token_width {self.token_width} unsupported; corpora use {TOKEN_WIDTH}-byte tokens"
            )
        if self.endianness != "little":
            raise CorpusIntegrityError(f"endianness {self.endianness!r} unsupported")
        expected = self.n_batches * self.batch_size * self.seq_len
        if self.total_tokens != expected:
            raise CorpusIntegrityError(
                f"total_tokens {self.total_tokens} != n_batches*batch_size*seq_len = {expected}"
            )

    @property
    def batch_tokens(self) -> int:
        return self.batch_size * self.seq_len

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n_batches, self.batch_size, self.seq_len)


def _validate_doc_offsets(doc_offsets: np.ndarray, total_tokens: int) -> np.ndarray:
    doc_offsets = np.asarray(doc_offsets, dtype=np.int64)
    if doc_offsets.ndim != 2 or doc_offsets.shape[1] != 2:
        raise CorpusIntegrityError("doc offsets must be an (n_docs, 2) array of (start, end)")
    if doc_offsets.shape[0] == 0:
        return doc_offsets
    starts, ends = doc_offsets[:, 0], doc_offsets[:, 1]
    if np.any(starts >= ends):
        bad = int(np.argmax(starts >= ends))
        raise CorpusIntegrityError(f"doc {bad} has start >= end: {doc_offsets[bad].tolist()}")
    if np.any(starts < 0) or np.any(ends > total_tokens):
        raise CorpusIntegrityError("doc offsets out of corpus bounds")
    if np.any(starts[1:] < ends[:-1]):
        bad = int(np.argmax(starts[1:] < ends[:-1]))
        raise CorpusIntegrityError(f"doc offsets overlap or are unsorted near doc {bad}")
    return doc_offsets


@dataclass
class TokenCorpus:
    """A manifest plus its (n_batches, batch_size, seq_len) token array."""

    manifest: CorpusManifest
    tokens: np.ndarray
    doc_offsets: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.tokens.shape != self.manifest.shape:
            raise CorpusIntegrityError(
                f"token array shape {self.tokens.shape} != manifest shape {self.manifest.shape}"
            )
        if self.tokens.dtype != TOKEN_DTYPE:
            raise CorpusIntegrityError(f"token dtype {self.tokens.dtype} != {TOKEN_DTYPE}")
        if self.doc_offsets is not None:
            self.doc_offsets = _validate_doc_offsets(
                self.doc_offsets, self.manifest.total_tokens
            )

    @classmethod
    def from_array(cls, tokens, tokenizer_id="in-memory", doc_offsets=None) -> "TokenCorpus":
        """Wrap an (n_batches, batch_size, seq_len) uint array as a corpus."""
        tokens = np.ascontiguousarray(tokens, dtype=TOKEN_DTYPE)
        if tokens.ndim != 3:
            raise CorpusIntegrityError("expected a 3-d (batch, row, position) token array")
        nb, bs, sl = tokens.shape
        manifest = CorpusManifest(
            token_width=TOKEN_WIDTH,
            endianness="little",
            batch_size=bs,
            seq_len=sl,
            n_batches=nb,
            total_tokens=nb * bs * sl,
            tokenizer_id=tokenizer_id,
        )
        return cls(manifest, tokens, doc_offsets)

    @classmethod
    def open(cls, directory) -> "TokenCorpus":
        """Memory-map a corpus directory, verifying sizes before any scan."""
        directory = Path(directory)
        manifest_path = directory / MANIFEST_NAME
        if not manifest_path.exists():
            raise CorpusIntegrityError(f"missing manifest: {manifest_path}")
        manifest = CorpusManifest(**json.loads(manifest_path.read_text()))

        tokens_path = directory / TOKENS_NAME
        if not tokens_path.exists():
            raise CorpusIntegrityError(f"missing token file: {tokens_path}")
        expected_bytes = manifest.total_tokens * manifest.token_width
        actual_bytes = tokens_path.stat().st_size
        if actual_bytes != expected_bytes:
            raise CorpusIntegrityError(
                f"{tokens_path}: expected {expected_bytes} bytes "
                f"({manifest.total_tokens} tokens), found {actual_bytes} bytes "
                f"(truncated at byte offset {min(actual_bytes, expected_bytes)})"
            )
        tokens = np.memmap(tokens_path, dtype=TOKEN_DTYPE, mode="r").reshape(manifest.shape)

        doc_offsets = None
        docs_path = directory / DOCS_NAME
        if docs_path.exists():
            raw = np.loadtxt(docs_path, dtype=np.int64, ndmin=2)
            doc_offsets = raw if raw.size else np.empty((0, 2), dtype=np.int64)
        return cls(manifest, tokens, doc_offsets)

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / MANIFEST_NAME).write_text(
            json.dumps(asdict(self.manifest), indent=2, sort_keys=True) + "\n"
        )
        arr = np.ascontiguousarray(self.tokens, dtype=TOKEN_DTYPE)
        arr.tofile(directory / TOKENS_NAME)
        if self.doc_offsets is not None:
            lines = [f"{int(s)}\t{int(e)}" for s, e in self.doc_offsets]
            (directory / DOCS_NAME).write_text("\n".join(lines) + ("\n" if lines else ""))

    def batch(self, index) -> np.ndarray:
        """Batch `index` as a plain contiguous (batch_size, seq_len) view."""
        return np.asarray(self.tokens[index])

    def row_start_offset(self, batch_index, row_index) -> int:
        """Global token offset of a row's first position in the flat stream."""
        m = self.manifest
        return (batch_index * m.batch_size + row_index) * m.seq_len
