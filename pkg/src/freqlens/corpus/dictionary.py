"""Term dictionaries: term ids mapped to one or more token-id patterns.

A term is a surface string (e.g. a named entity) that may tokenize several
ways (leading space, capitalization); every variant is a separate pattern
accruing to the same term counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DictionaryError

MAX_TOKEN_ID = 2**32 - 1


@dataclass(frozen=True)
class TermEntry:
    term_id: int
    surface: str
    patterns: tuple[tuple[int, ...], ...]


@dataclass
class TermDictionary:
    """Dense term_id -> patterns mapping, validated on construction."""

    entries: list[TermEntry] = field(default_factory=list)

    def __post_init__(self):
        seen_patterns: dict[tuple[int, ...], int] = {}
        for i, e in enumerate(self.entries):
            if e.term_id != i:
                raise DictionaryError(
                    f"term ids must be dense 0..T-1; entry {i} has term_id {e.term_id}"
                )
            if not e.patterns:
                raise DictionaryError(f"term {e.term_id} ({e.surface!r}) has no patterns")
            for pat in e.patterns:
                if len(pat) == 0:
                    raise DictionaryError(f"term {e.term_id} ({e.surface!r}) has an empty pattern")
                for tok in pat:
                    if not 0 <= tok <= MAX_TOKEN_ID:
                        raise DictionaryError(
                            f"term {e.term_id}: token id {tok} outside [0, 2^32)"
                        )
                prev = seen_patterns.get(pat)
                if prev is not None:
                    if prev != e.term_id:
                        raise DictionaryError(
                            f"pattern {list(pat)} appears under both term {prev} "
                            f"and term {e.term_id}"
                        )
                    raise DictionaryError(
                        f"pattern {list(pat)} repeated within term {e.term_id}"
                    )
                seen_patterns[pat] = e.term_id

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def n_patterns(self) -> int:
        return sum(len(e.patterns) for e in self.entries)

    def pattern_tokens(self) -> set[int]:
        """Every token id used by any pattern."""
        toks: set[int] = set()
        for e in self.entries:
            for pat in e.patterns:
                toks.update(pat)
        return toks

    def surface_to_id(self) -> dict[str, int]:
        return {e.surface: e.term_id for e in self.entries}

    @classmethod
    def from_patterns(cls, patterns_per_term, surfaces=None) -> "TermDictionary":
        """Build from a list (indexed by term id) of pattern lists."""
        entries = []
        for tid, pats in enumerate(patterns_per_term):
            surface = surfaces[tid] if surfaces is not None else f"term{tid}"
            entries.append(
                TermEntry(tid, surface, tuple(tuple(int(t) for t in p) for p in pats))
            )
        return cls(entries)

    @classmethod
    def read(cls, path) -> "TermDictionary":
        """Parse the on-disk format: term_id <TAB> surface <TAB> pat1 <TAB> pat2 ...

        Pattern tokens are comma-separated. Lines starting with '#' are skipped.
        """
        entries = []
        for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 3:
                raise DictionaryError(f"{path}:{lineno}: expected term_id, surface, patterns")
            try:
                tid = int(parts[0])
                pats = tuple(
                    tuple(int(t) for t in chunk.split(",")) for chunk in parts[2:]
                )
            except ValueError as exc:
                raise DictionaryError(f"{path}:{lineno}: {exc}") from exc
            entries.append(TermEntry(tid, parts[1], pats))
        entries.sort(key=lambda e: e.term_id)
        return cls(entries)

    def write(self, path) -> None:
        lines = []
        for e in self.entries:
            if "\t" in e.surface or "\n" in e.surface:
                raise DictionaryError(f"term {e.term_id}: surface may not contain tabs/newlines")
            cols = [str(e.term_id), e.surface]
            cols += [",".join(str(t) for t in pat) for pat in e.patterns]
            lines.append("\t".join(cols))
        Path(path).write_text("\n".join(lines) + "\n")
