"""Grid-aware numeric containers and validation shared by the whole pipeline.

Cell indexing is row-major everywhere: cell ``i`` sits at
``(row, col) = (i // w, i % w)``.  All containers are immutable after
construction (arrays are marked read-only), so they are safe to share
across threads; every function in this package is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = [
    "TokenSet",
    "AttentionGrid",
    "PruneConfig",
    "resolve_budget",
    "grid_neighbors",
    "check_finite_array",
]

# Absorbs binary representation error when a ratio budget is an exact
# rational, e.g. floor((1/9) * 2880) must come out as 320, not 319.
_FLOOR_GUARD = 1e-9


def check_finite_array(values, name: str, *, ndim: int | None = None,
                       nonnegative: bool = False) -> np.ndarray:
    """Coerce to a read-only float64 array, rejecting NaN/Inf (and negatives
    when asked).  NaN is a hard error here, never a silent propagation."""
    arr = np.asarray(values, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if nonnegative and arr.size and float(arr.min()) < 0.0:
        raise ValueError(f"{name} contains negative values")
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


def _check_grid_dims(h: int, w: int) -> None:
    if not (isinstance(h, (int, np.integer)) and isinstance(w, (int, np.integer))):
        raise ValueError("grid dimensions must be integers")
    if h < 1 or w < 1:
        raise ValueError(f"grid dimensions must be positive, got {h}x{w}")


@dataclass(frozen=True)
class TokenSet:
    """An h×w grid of D-dimensional token feature vectors.

    ``features`` has shape (h*w, D), row-major by cell index.
    """

    h: int
    w: int
    features: np.ndarray

    def __post_init__(self):
        _check_grid_dims(self.h, self.w)
        feats = check_finite_array(self.features, "features", ndim=2)
        if feats.shape[0] != self.h * self.w:
            raise ValueError(
                f"features has {feats.shape[0]} rows, expected {self.h * self.w}")
        if feats.shape[1] < 1:
            raise ValueError("feature dimension must be >= 1")
        object.__setattr__(self, "features", feats)

    @property
    def n(self) -> int:
        return self.h * self.w

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])


@dataclass(frozen=True)
class AttentionGrid:
    """One nonnegative scalar per grid cell, row-major.

    The same container serves as raw attention, as a bias prior, and as
    relative attention; relative values may exceed 1.
    """

    h: int
    w: int
    values: np.ndarray

    def __post_init__(self):
        _check_grid_dims(self.h, self.w)
        vals = check_finite_array(self.values, "values", ndim=1, nonnegative=True)
        if vals.shape[0] != self.h * self.w:
            raise ValueError(
                f"values has {vals.shape[0]} entries, expected {self.h * self.w}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.h * self.w

    def as_matrix(self) -> np.ndarray:
        """Values reshaped to (h, w)."""
        return self.values.reshape(self.h, self.w)

    def same_shape(self, other: "AttentionGrid") -> bool:
        return self.h == other.h and self.w == other.w


@dataclass(frozen=True)
class PruneConfig:
    """Hyperparameters of the pruning pipeline.

    The budget is given either as an absolute ``keep_count`` or as a
    ``keep_ratio`` in (0, 1]; exactly one must be set.  ``layer`` is carried
    as metadata only and never consulted by the algorithm.
    """

    epsilon: float = 1e-7
    alpha: float = 1.0
    theta_sim: float = 0.8
    pivot_ratio: float = 0.7
    keep_count: Optional[int] = None
    keep_ratio: Optional[float] = None
    layer: int = 2

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon > 0):
            raise ValueError("epsilon must be a positive finite real")
        for name in ("alpha", "theta_sim", "pivot_ratio"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if (self.keep_count is None) == (self.keep_ratio is None):
            raise ValueError("exactly one of keep_count / keep_ratio must be set")
        if self.keep_count is not None and self.keep_count < 1:
            raise ValueError("keep_count must be >= 1")
        if self.keep_ratio is not None and not (0.0 < self.keep_ratio <= 1.0):
            raise ValueError("keep_ratio must lie in (0, 1]")
        if not (isinstance(self.layer, (int, np.integer)) and self.layer >= 0):
            raise ValueError("layer must be a nonnegative integer")


def resolve_budget(cfg: PruneConfig, n_tokens: int) -> int:
    """Number of tokens to keep out of ``n_tokens``.

    An absolute budget is passed through (out of range is an error); a ratio
    budget is floor(r * N), clamped into [1, N] so the selection is never
    empty.
    """
    if n_tokens < 1:
        raise ValueError("n_tokens must be >= 1")
    if cfg.keep_count is not None:
        if cfg.keep_count > n_tokens:
            raise ValueError(
                f"absolute budget {cfg.keep_count} exceeds token count {n_tokens}")
        return int(cfg.keep_count)
    n = math.floor(cfg.keep_ratio * n_tokens + _FLOOR_GUARD)
    return max(1, min(n, n_tokens))


def grid_neighbors(i: int, h: int, w: int) -> set[int]:
    """Indices of the 8-neighborhood of cell ``i`` on an h×w grid.

    Cells whose row and column each differ by at most 1, excluding ``i``
    itself; boundaries are respected.
    """
    _check_grid_dims(h, w)
    n = h * w
    if not (0 <= i < n):
        raise IndexError(f"cell index {i} out of range for {h}x{w} grid")
    r, c = divmod(i, w)
    out = set()
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            if dr == 0 and dc == 0:
                continue
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w:
                out.add(rr * w + cc)
    return out
