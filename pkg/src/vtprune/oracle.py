"""Reference implementations for differential and exhaustive testing.

Nothing here is on the production path.  ``reference_select`` re-derives the
selection procedure with per-step linear argmax scans (no ranking array, no
single-pass pointer) so that agreement with ``selection.select_tokens`` is
meaningful.  ``exhaustive_select`` brute-forces the composite
importance-plus-diversity objective on small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import AdjacencyGraph
from .selection import (
    TAG_FALLBACK,
    TAG_MIS,
    TAG_PIVOT,
    SelectionResult,
    _score_vector,
)

__all__ = [
    "ObjectiveParams",
    "objective_score",
    "exhaustive_select",
    "reference_select",
    "random_instance",
]

ENUMERATION_BOUND = 20


@dataclass(frozen=True)
class ObjectiveParams:
    """Diversity weight of the composite subset objective."""

    lam: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam >= 0.0):
            raise ValueError("lam must be a nonnegative finite real")


def objective_score(a_rel, adj: AdjacencyGraph, kept,
                    params: ObjectiveParams) -> float:
    """Sum of kept scores plus lam * diversity.

    Diversity is operationalized as the negated count of graph edges with
    both endpoints kept: exactly the quantity each greedy exclusion step
    prevents from growing.
    """
    values = _score_vector(a_rel)
    kept = list(kept)
    if len(set(kept)) != len(kept):
        raise ValueError("kept indices must be distinct")
    if kept and not all(0 <= i < adj.n for i in kept):
        raise ValueError("kept indices out of range")
    importance = float(values[kept].sum()) if kept else 0.0
    internal = int(adj.matrix[np.ix_(kept, kept)].sum()) // 2
    return importance - params.lam * internal


def exhaustive_select(a_rel, adj: AdjacencyGraph, n: int,
                      params: ObjectiveParams) -> tuple[int, ...]:
    """Best size-n subset by brute-force enumeration.

    Ties go to the lexicographically smallest sorted index tuple, which is
    the first one visited by ``itertools.combinations``.
    """
    values = _score_vector(a_rel)
    n_tokens = adj.n
    if n_tokens > ENUMERATION_BOUND:
        raise ValueError(
            f"exhaustive search limited to N <= {ENUMERATION_BOUND}, "
            f"got N = {n_tokens}")
    if not (1 <= n <= n_tokens):
        raise ValueError(f"budget n={n} out of range [1, {n_tokens}]")
    best = None
    best_score = -np.inf
    for subset in combinations(range(n_tokens), n):
        idx = list(subset)
        score = float(values[idx].sum()) - params.lam * (
            int(adj.matrix[np.ix_(idx, idx)].sum()) // 2)
        if score > best_score:
            best_score = score
            best = subset
    return tuple(best)


def random_instance(rng: np.random.Generator, *, max_side: int = 16,
                    dim: int = 8):
    """One randomized selection problem built through the real graph path.

    Returns (scores, adjacency, n, pivot_ratio).  Scores are sometimes
    quantized to a coarse lattice so tie-breaking gets exercised; token
    features are drawn so semantic edges actually occur.
    """
    from .core import PruneConfig, TokenSet
    from .graph import build_graph

    h = int(rng.integers(1, max_side + 1))
    w = int(rng.integers(1, max_side + 1))
    n_tokens = h * w
    feats = rng.normal(size=(n_tokens, dim))
    if n_tokens > 1 and rng.random() < 0.5:
        # Duplicate a few rows: similarity ties and guaranteed 1.0 entries.
        src = rng.integers(0, n_tokens, size=max(1, n_tokens // 4))
        dst = rng.integers(0, n_tokens, size=src.shape[0])
        feats[dst] = feats[src]
    ts = TokenSet(h=h, w=w, features=feats)
    cfg = PruneConfig(
        alpha=float(rng.choice([0.0, 0.5, 1.0])),
        theta_sim=float(rng.choice([0.5, 0.8])),
        keep_ratio=1.0,
    )
    adj = build_graph(ts, cfg)
    if rng.random() < 0.3:
        scores = rng.integers(0, 10, size=n_tokens) / 10.0
    else:
        scores = rng.random(n_tokens)
    n = int(rng.integers(1, n_tokens + 1))
    pivot_ratio = float(rng.choice([0.0, 0.5, 0.7, 1.0]))
    return scores, adj, n, pivot_ratio


def _argmax_available(values: np.ndarray, available: np.ndarray) -> int:
    # np.argmax returns the first maximum, i.e. the lowest index on ties.
    masked = np.where(available, values, -np.inf)
    return int(np.argmax(masked))


def reference_select(a_rel, adj: AdjacencyGraph, n: int,
                     pivot_ratio: float) -> SelectionResult:
    """Naive restatement of the selection contract, one argmax per step."""
    values = _score_vector(a_rel)
    n_tokens = adj.n
    if values.shape != (n_tokens,):
        raise ValueError(
            f"score vector has shape {values.shape}, expected ({n_tokens},)")
    if not (1 <= n <= n_tokens):
        raise ValueError(f"budget n={n} out of range [1, {n_tokens}]")
    if not (math.isfinite(pivot_ratio) and 0.0 <= pivot_ratio <= 1.0):
        raise ValueError(f"pivot_ratio must lie in [0, 1], got {pivot_ratio}")

    n_p = math.floor(n * pivot_ratio + 1e-9)
    selected = np.zeros(n_tokens, dtype=np.bool_)
    excluded = np.zeros(n_tokens, dtype=np.bool_)
    tags = {}

    pivots = []
    for _ in range(n_p):
        t = _argmax_available(values, ~selected)
        selected[t] = True
        tags[t] = TAG_PIVOT
        pivots.append(t)
    for t in pivots:
        excluded |= adj.matrix[t]
    excluded &= ~selected

    while len(tags) < n:
        available = ~selected & ~excluded
        if not available.any():
            break
        t = _argmax_available(values, available)
        selected[t] = True
        tags[t] = TAG_MIS
        excluded |= adj.matrix[t] & ~selected

    while len(tags) < n:
        t = _argmax_available(values, ~selected)
        selected[t] = True
        tags[t] = TAG_FALLBACK

    kept = sorted(tags)
    return SelectionResult(
        n_tokens=n_tokens,
        kept=tuple(kept),
        pivots=tuple(sorted(pivots)),
        provenance=tuple(tags[t] for t in kept),
        excluded_count=int(excluded.sum()),
    )
