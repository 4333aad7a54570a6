"""Token-corpus search and counting engine."""

from .corpus import CorpusManifest, TokenCorpus
from .counts import (
    CountTable,
    merge_counts,
    read_checkpoint_pairs,
    write_checkpoint_occurrences,
    write_checkpoint_pairs,
)
from .dictionary import TermDictionary, TermEntry
from .matcher import Matcher, compile_patterns
from .scan import (
    CheckpointSchedule,
    MatchRecord,
    cumulative_counts,
    document_counts,
    scan_corpus,
    scan_sequence,
    write_positions,
)
from .synth import SynthResult, SynthSpec, generate_synthetic_corpus

__all__ = [
    "CheckpointSchedule",
    "CorpusManifest",
    "CountTable",
    "Matcher",
    "MatchRecord",
    "SynthResult",
    "SynthSpec",
    "TermDictionary",
    "TermEntry",
    "TokenCorpus",
    "compile_patterns",
    "cumulative_counts",
    "document_counts",
    "generate_synthetic_corpus",
    "merge_counts",
    "read_checkpoint_pairs",
    "scan_corpus",
    "scan_sequence",
    "write_checkpoint_occurrences",
    "write_checkpoint_pairs",
    "write_positions",
]
