"""Hybrid semantic/spatial adjacency graph over grid tokens.

An edge marks a redundant pair: two tokens that are semantically similar
and/or spatially adjacent strongly enough that keeping both wastes budget.
The construction is a five-step pipeline (cosine similarity, min-max
normalization, 8-connectivity, weighted fusion, thresholding); every
intermediate is a dense float64 matrix, and the similarity matmul is pinned
to one BLAS thread so results are bit-identical regardless of the host's
thread configuration.

Diagonal handling: diagonals are excluded from min/max statistics and forced
to 0 in every matrix.  A self-loop would be meaningless for neighbor
exclusion, and a cosine diagonal of 1 would pin the normalization range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .core import PruneConfig, TokenSet, check_finite_array

__all__ = [
    "AdjacencyGraph",
    "semantic_similarity",
    "minmax_normalize",
    "spatial_adjacency",
    "fuse_similarity",
    "threshold_graph",
    "build_graph",
]


@dataclass(frozen=True)
class AdjacencyGraph:
    """Symmetric, loop-free binary relation over N tokens."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"adjacency matrix must be square, got {m.shape}")
        if m.dtype != np.bool_:
            m = m.astype(np.bool_)
        if m.size and bool(m.diagonal().any()):
            raise ValueError("adjacency matrix has self-loops")
        if not np.array_equal(m, m.T):
            raise ValueError("adjacency matrix is not symmetric")
        m = np.ascontiguousarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def edge_count(self) -> int:
        """Number of undirected edges."""
        return int(self.matrix.sum()) // 2

    @property
    def degrees(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.matrix[i])

    @classmethod
    def from_edges(cls, n: int, edges) -> "AdjacencyGraph":
        m = np.zeros((n, n), dtype=np.bool_)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop ({i}, {j}) not allowed")
            m[i, j] = True
            m[j, i] = True
        return cls(matrix=m)


def semantic_similarity(ts: TokenSet) -> np.ndarray:
    """Pairwise cosine similarity between token features.

    Zero-norm vectors get similarity 0 against everything (a null token
    should not attract edges); the diagonal is set to 1 by convention but is
    excluded from all downstream statistics.
    """
    feats = ts.features
    # Single-threaded GEMM: deterministic bits whatever the machine's
    # BLAS thread count.
    with threadpool_limits(limits=1, user_api="blas"):
        sim = feats @ feats.T
    norms = np.sqrt(np.einsum("ij,ij->i", feats, feats))
    # Dividing by the norm product (not by each norm in turn) keeps the
    # matrix exactly symmetric.
    with np.errstate(divide="ignore", invalid="ignore"):
        sim /= np.outer(norms, norms)
    zero = norms == 0.0
    if zero.any():
        sim[zero, :] = 0.0
        sim[:, zero] = 0.0
    np.fill_diagonal(sim, 1.0)
    return sim


def minmax_normalize(m: np.ndarray) -> np.ndarray:
    """Affine map of the off-diagonal entries onto [0, 1].

    Min and max are taken over off-diagonal entries only; the output
    diagonal is forced to 0.  A degenerate range (max == min, including the
    1x1 case) yields all zeros: zero discrimination, zero semantic edges.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"similarity matrix must be square, got {m.shape}")
    n = m.shape[0]
    if n < 2:
        return np.zeros_like(m)
    out = m.copy()
    np.fill_diagonal(out, np.inf)
    lo = float(out.min())
    np.fill_diagonal(out, -np.inf)
    hi = float(out.max())
    if hi == lo:
        return np.zeros_like(m)
    np.fill_diagonal(out, lo)
    out -= lo
    out /= hi - lo
    np.fill_diagonal(out, 0.0)
    return out


def spatial_adjacency(h: int, w: int) -> AdjacencyGraph:
    """8-connectivity relation of the h×w grid.

    Built per neighbor offset in O(N) each instead of broadcasting an
    N×N distance computation.
    """
    n = h * w
    idx = np.arange(n)
    rows = idx // w
    cols = idx % w
    m = np.zeros((n, n), dtype=np.bool_)
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            ok = ((0 <= rows + dr) & (rows + dr < h)
                  & (0 <= cols + dc) & (cols + dc < w))
            src = idx[ok]
            m[src, src + dr * w + dc] = True
    return AdjacencyGraph(matrix=m)


def fuse_similarity(sem_norm: np.ndarray, spat: AdjacencyGraph,
                    alpha: float) -> np.ndarray:
    """Weighted sum alpha * semantic + (1 - alpha) * spatial.

    alpha = 1 keeps only semantics, alpha = 0 only the 8-connectivity
    structure; the diagonal stays 0.
    """
    if not (np.isfinite(alpha) and 0.0 <= alpha <= 1.0):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    sem_norm = np.asarray(sem_norm, dtype=np.float64)
    if sem_norm.shape != spat.matrix.shape:
        raise ValueError(
            f"semantic matrix {sem_norm.shape} does not match spatial "
            f"matrix {spat.matrix.shape}")
    # Touching only the edge positions is bit-identical to the dense
    # alpha*sem + (1-alpha)*spat expression: off-edge entries add 0.0 and
    # alpha*sem is never -0.0 here.
    fused = alpha * sem_norm
    if alpha < 1.0:
        fused[spat.matrix] += 1.0 - alpha
    np.fill_diagonal(fused, 0.0)
    return fused


def threshold_graph(fused: np.ndarray, theta_sim: float) -> AdjacencyGraph:
    """Binary graph with an edge wherever fused similarity strictly exceeds
    the threshold."""
    fused = np.asarray(fused, dtype=np.float64)
    edges = fused > theta_sim
    np.fill_diagonal(edges, False)
    return AdjacencyGraph(matrix=edges)


def build_graph(ts: TokenSet, cfg: PruneConfig) -> AdjacencyGraph:
    """Full pipeline: cosine similarity -> min-max -> fuse with
    8-connectivity -> threshold."""
    sem = minmax_normalize(semantic_similarity(ts))
    spat = spatial_adjacency(ts.h, ts.w)
    fused = fuse_similarity(sem, spat, cfg.alpha)
    return threshold_graph(fused, cfg.theta_sim)


def validate_similarity(m: np.ndarray, name: str = "similarity") -> np.ndarray:
    """Check a dense similarity matrix: square, finite, symmetric."""
    m = check_finite_array(m, name, ndim=2)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got {m.shape}")
    if not np.array_equal(m, m.T):
        raise ValueError(f"{name} is not symmetric")
    return m
