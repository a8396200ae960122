"""Pivot-seeded diverse token selection.

The selector keeps a budget of n tokens in three stages:

1. Pivots: the floor(n * pivot_ratio) tokens with the highest relative
   attention are kept unconditionally (plain top-k, pivots never exclude
   each other), and every graph neighbor of a pivot is disqualified.
2. Greedy independent-set expansion: repeatedly keep the highest-scoring
   token that is neither kept nor disqualified, then disqualify its
   neighbors.  Each kept token therefore has no edge to any token kept
   before it.
3. Saturation fallback: if disqualification exhausts the candidates before
   the budget is met, the remaining slots are filled with the
   highest-scoring unkept tokens regardless of disqualification, so the
   budget contract always holds.

Ties are broken toward the lower cell index at every step, which makes the
whole procedure deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import AttentionGrid
from .graph import AdjacencyGraph

__all__ = ["SelectionResult", "pivot_count", "select_tokens"]

TAG_PIVOT = "pivot"
TAG_MIS = "mis"
TAG_FALLBACK = "fallback"

_FLOOR_GUARD = 1e-9


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one selection run.

    ``kept`` is sorted ascending; ``provenance`` is aligned with ``kept``
    and tags each token pivot / mis / fallback.  ``excluded_count`` counts
    the distinct tokens that were disqualified at any point (a token that
    was disqualified and later rescued by the fallback still counts).
    """

    n_tokens: int
    kept: tuple[int, ...]
    pivots: tuple[int, ...]
    provenance: tuple[str, ...]
    excluded_count: int

    def __post_init__(self):
        if len(self.kept) != len(self.provenance):
            raise ValueError("provenance must align with kept")
        if list(self.kept) != sorted(set(self.kept)):
            raise ValueError("kept must be sorted and duplicate-free")
        if not set(self.pivots) <= set(self.kept):
            raise ValueError("pivots must be a subset of kept")
        bad = set(self.provenance) - {TAG_PIVOT, TAG_MIS, TAG_FALLBACK}
        if bad:
            raise ValueError(f"unknown provenance tags: {bad}")

    @property
    def n(self) -> int:
        return len(self.kept)

    def mask(self) -> np.ndarray:
        """Boolean keep-mask of length n_tokens."""
        m = np.zeros(self.n_tokens, dtype=np.bool_)
        m[list(self.kept)] = True
        return m


def pivot_count(n: int, pivot_ratio: float) -> int:
    """floor(n * pivot_ratio), guarded against binary representation error."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (math.isfinite(pivot_ratio) and 0.0 <= pivot_ratio <= 1.0):
        raise ValueError(f"pivot_ratio must lie in [0, 1], got {pivot_ratio}")
    return math.floor(n * pivot_ratio + _FLOOR_GUARD)


def _score_vector(a_rel) -> np.ndarray:
    if isinstance(a_rel, AttentionGrid):
        return a_rel.values
    return np.asarray(a_rel, dtype=np.float64)


def select_tokens(a_rel, adj: AdjacencyGraph, n: int,
                  pivot_ratio: float) -> SelectionResult:
    """Select n tokens by descending relative attention under neighbor
    exclusion.

    ``a_rel`` may be an AttentionGrid or a plain score vector.  Complexity is
    O(N log N) for the ranking plus one boolean row operation per kept token.
    """
    values = _score_vector(a_rel)
    n_tokens = adj.n
    if values.shape != (n_tokens,):
        raise ValueError(
            f"score vector has shape {values.shape}, expected ({n_tokens},)")
    if not (1 <= n <= n_tokens):
        raise ValueError(f"budget n={n} out of range [1, {n_tokens}]")

    # Descending value, ascending index on ties.
    order = np.lexsort((np.arange(n_tokens), -values))
    n_p = pivot_count(n, pivot_ratio)

    selected = np.zeros(n_tokens, dtype=np.bool_)
    excluded = np.zeros(n_tokens, dtype=np.bool_)
    tags = {}

    pivots = [int(t) for t in order[:n_p]]
    for t in pivots:
        selected[t] = True
        tags[t] = TAG_PIVOT
    for t in pivots:
        excluded |= adj.matrix[t]
    excluded &= ~selected
    kept_count = n_p

    # Greedy expansion: a single pass over the ranking is equivalent to
    # repeated argmax because disqualification only ever grows.
    for t in order[n_p:]:
        if kept_count == n:
            break
        t = int(t)
        if selected[t] or excluded[t]:
            continue
        selected[t] = True
        tags[t] = TAG_MIS
        kept_count += 1
        excluded |= adj.matrix[t] & ~selected

    if kept_count < n:
        for t in order:
            if kept_count == n:
                break
            t = int(t)
            if selected[t]:
                continue
            selected[t] = True
            tags[t] = TAG_FALLBACK
            kept_count += 1

    kept = sorted(tags)
    return SelectionResult(
        n_tokens=n_tokens,
        kept=tuple(kept),
        pivots=tuple(sorted(pivots)),
        provenance=tuple(tags[t] for t in kept),
        excluded_count=int(excluded.sum()),
    )
