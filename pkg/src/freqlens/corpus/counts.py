"""Mergeable occurrence / co-occurrence count tables and their TSV formats."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class CountTable:
    """Sparse term and pair counts; merging is a commutative monoid.

    Pair keys are always stored with term_a < term_b. Same-term pairs are
    never recorded.
    """

    occurrences: dict[int, int] = field(default_factory=dict)
    pair_counts: dict[tuple[int, int], int] = field(default_factory=dict)
    tokens_scanned: int = 0

    def __post_init__(self):
        for (a, b) in self.pair_counts:
            if a >= b:
                raise ValueError(f"pair key ({a}, {b}) not stored with a < b")

    def add_occurrence(self, term_id, n=1) -> None:
        if n:
            self.occurrences[term_id] = self.occurrences.get(term_id, 0) + n

    def add_pair(self, a, b, n=1) -> None:
        if a == b:
            raise ValueError("self co-occurrence (a, a) is not recorded")
        key = (a, b) if a < b else (b, a)
        if n:
            self.pair_counts[key] = self.pair_counts.get(key, 0) + n

    def occurrence(self, term_id) -> int:
        return self.occurrences.get(term_id, 0)

    def pair(self, a, b) -> int:
        if a == b:
            return 0
        key = (a, b) if a < b else (b, a)
        return self.pair_counts.get(key, 0)

    def copy(self) -> "CountTable":
        return CountTable(dict(self.occurrences), dict(self.pair_counts), self.tokens_scanned)

    def write_occurrences(self, path) -> None:
        lines = [f"# tokens_scanned\t{self.tokens_scanned}"]
        lines += [f"{t}\t{c}" for t, c in sorted(self.occurrences.items())]
        Path(path).write_text("\n".join(lines) + "\n")

    def write_pairs(self, path) -> None:
        lines = [f"{a}\t{b}\t{c}" for (a, b), c in sorted(self.pair_counts.items())]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))

    @classmethod
    def read(cls, occurrences_path=None, pairs_path=None) -> "CountTable":
        table = cls()
        if occurrences_path is not None:
            for line in Path(occurrences_path).read_text().splitlines():
                if not line:
                    continue
                if line.startswith("#"):
                    parts = line[1:].strip().split("\t")
                    if parts[0] == "tokens_scanned":
                        table.tokens_scanned = int(parts[1])
                    continue
                t, c = line.split("\t")
                table.occurrences[int(t)] = int(c)
        if pairs_path is not None:
            for line in Path(pairs_path).read_text().splitlines():
                if not line or line.startswith("#"):
                    continue
                a, b, c = line.split("\t")
                table.add_pair(int(a), int(b), int(c))
        return table


def merge_counts(a: CountTable, b: CountTable) -> CountTable:
    """Fieldwise sum of two tables; merge(a, empty) == a."""
    out = a.copy()
    for t, c in b.occurrences.items():
        out.occurrences[t] = out.occurrences.get(t, 0) + c
    for key, c in b.pair_counts.items():
        out.pair_counts[key] = out.pair_counts.get(key, 0) + c
    out.tokens_scanned += b.tokens_scanned
    return out


def write_checkpoint_occurrences(path, tables) -> None:
    """TSV of (cutoff_tokens, term_id, count) for a cumulative-count result."""
    lines = []
    for cutoff, table in tables:
        for t, c in sorted(table.occurrences.items()):
            lines.append(f"{cutoff}\t{t}\t{c}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def write_checkpoint_pairs(path, tables) -> None:
    """TSV of (cutoff_tokens, term_a, term_b, count)."""
    lines = []
    for cutoff, table in tables:
        for (a, b), c in sorted(table.pair_counts.items()):
            lines.append(f"{cutoff}\t{a}\t{b}\t{c}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_checkpoint_pairs(path) -> list[tuple[int, dict[tuple[int, int], int]]]:
    """Inverse of write_checkpoint_pairs, cutoffs in file order."""
    out: dict[int, dict[tuple[int, int], int]] = {}
    order: list[int] = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        cutoff, a, b, c = (int(x) for x in line.split("\t"))
        if cutoff not in out:
            out[cutoff] = {}
            order.append(cutoff)
        out[cutoff][(a, b)] = c
    return [(c, out[c]) for c in order]
