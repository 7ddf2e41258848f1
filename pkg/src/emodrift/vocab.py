"""Shared vocabulary construction across corpus slices.

The vocabulary is the intersection of all slices: a token is kept only when
it reaches min_count in every slice, so the same id space works in every
trained model. Ids are dense, ordered by total frequency (ties by surface).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class SharedVocabulary:
    tokens: list[str]
    slice_counts: dict[str, np.ndarray]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, surface: str) -> bool:
        return surface in self.index

    def id_of(self, surface: str) -> int:
        try:
            return self.index[surface]
        except KeyError:
            raise KeyError(f"token not in shared vocabulary: {surface!r}") from None

    @property
    def total_counts(self) -> np.ndarray:
        out = np.zeros(len(self.tokens), dtype=np.int64)
        for counts in self.slice_counts.values():
            out += counts
        return out


def count_tokens(path: str | Path) -> Counter:
    counts: Counter[str] = Counter()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            counts.update(line.split())
    return counts


def build_vocab(slices: dict[str, str | Path], min_count: int = 5) -> SharedVocabulary:
    """Intersect per-slice counts; error (naming the sparsest slices) if empty."""
    if not slices:
        raise ValueError("need at least one slice")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")

    per_slice = {label: count_tokens(path) for label, path in slices.items()}

    shared: set[str] | None = None
    for counts in per_slice.values():
        qualifying = {t for t, c in counts.items() if c >= min_count}
        shared = qualifying if shared is None else shared & qualifying
    assert shared is not None

    if not shared:
        ranked = sorted(
            per_slice,
            key=lambda lb: sum(1 for c in per_slice[lb].values() if c >= min_count),
        )
        raise ValueError(
            "empty shared vocabulary at min_count=%d; sparsest slices: %s"
            % (min_count, ", ".join(ranked[:3]))
        )

    totals = Counter()
    for counts in per_slice.values():
        for t in shared:
            totals[t] += counts[t]
    tokens = sorted(shared, key=lambda t: (-totals[t], t))

    order = {t: i for i, t in enumerate(tokens)}
    slice_counts = {}
    for label, counts in per_slice.items():
        arr = np.zeros(len(tokens), dtype=np.int64)
        for t in tokens:
            arr[order[t]] = counts[t]
        slice_counts[label] = arr
    return SharedVocabulary(tokens=tokens, slice_counts=slice_counts)
