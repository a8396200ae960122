"""Deterministic synthetic scenes for property tests and bias-recovery
experiments.

A scene is a token grid with a few planted "objects" (clusters of cells
sharing a feature centroid), a known positional bias profile, and an
attention map that composes the two multiplicatively:

    attention(i) = saliency(i) * bias(i),   saliency(i) = 1 + gain * [salient]

Multiplicative composition is exactly the regime the bias-division step
inverts, so recovery of the planted cells is directly measurable.  All
randomness comes from a counter-based Philox generator keyed by the seed;
identical specs reproduce identical scenes bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import AttentionGrid, TokenSet

__all__ = ["BIAS_PROFILES", "RNG_ALGORITHM", "SceneSpec", "Scene",
           "bias_profile_grid", "generate_scene"]

BIAS_PROFILES = ("uniform", "bottom_heavy", "periphery_heavy")

# Recorded in scene metadata so dumps can be regenerated elsewhere.
RNG_ALGORITHM = "philox4x64-10"

_PLACEMENT_TRIES = 10_000


@dataclass(frozen=True)
class SceneSpec:
    """Everything needed to regenerate a scene deterministically.

    Objects are squares of side 2*object_radius + 1 placed fully inside the
    grid without overlap; ``center_rows`` optionally restricts the rows the
    object centers may occupy (inclusive band).  ``saliency_gain`` sets how
    much brighter object cells are than background in the true saliency.
    """

    seed: int
    h: int
    w: int
    dim: int
    object_count: int = 3
    object_radius: int = 2
    noise_sigma: float = 0.05
    bias_profile: str = "uniform"
    bias_strength: float = 1.0
    saliency_gain: float = 4.0
    center_rows: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if self.h < 1 or self.w < 1 or self.dim < 1:
            raise ValueError("grid and feature dimensions must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        if self.object_count < 0 or self.object_radius < 0:
            raise ValueError("object_count and object_radius must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.bias_profile not in BIAS_PROFILES:
            raise ValueError(f"unknown bias profile {self.bias_profile!r}")
        if not (math.isfinite(self.bias_strength) and self.bias_strength >= 1.0):
            raise ValueError("bias_strength must be >= 1")
        if self.saliency_gain < 0:
            raise ValueError("saliency_gain must be >= 0")


class Scene(NamedTuple):
    tokens: TokenSet
    attention: AttentionGrid
    true_bias: AttentionGrid
    salient_cells: tuple[int, ...]


def bias_profile_grid(profile: str, h: int, w: int, beta: float) -> AttentionGrid:
    """Positional bias profile with peak multiplier beta.

    bottom_heavy ramps linearly from 1 at the top row to beta at the bottom;
    periphery_heavy ramps with Chebyshev distance from the grid center.
    """
    rows = np.arange(h, dtype=np.float64)
    cols = np.arange(w, dtype=np.float64)
    if profile == "uniform":
        mat = np.ones((h, w))
    elif profile == "bottom_heavy":
        ramp = rows / (h - 1) if h > 1 else np.zeros(1)
        mat = np.broadcast_to((1.0 + (beta - 1.0) * ramp)[:, None], (h, w)).copy()
    elif profile == "periphery_heavy":
        cr, cc = (h - 1) / 2.0, (w - 1) / 2.0
        dist = np.maximum(np.abs(rows - cr)[:, None], np.abs(cols - cc)[None, :])
        max_dist = max(cr, cc)
        ramp = dist / max_dist if max_dist > 0 else np.zeros((h, w))
        mat = 1.0 + (beta - 1.0) * ramp
    else:
        raise ValueError(f"unknown bias profile {profile!r}")
    return AttentionGrid(h=h, w=w, values=mat.reshape(-1))


def _place_objects(spec: SceneSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    rad = spec.object_radius
    row_lo, row_hi = rad, spec.h - 1 - rad
    col_lo, col_hi = rad, spec.w - 1 - rad
    if spec.center_rows is not None:
        row_lo = max(row_lo, spec.center_rows[0])
        row_hi = min(row_hi, spec.center_rows[1])
    if row_lo > row_hi or col_lo > col_hi:
        raise ValueError(
            f"objects of radius {rad} do not fit a {spec.h}x{spec.w} grid "
            f"with center_rows={spec.center_rows}")
    centers: list[tuple[int, int]] = []
    tries = 0
    while len(centers) < spec.object_count:
        if tries >= _PLACEMENT_TRIES:
            raise ValueError(
                f"could not place {spec.object_count} non-overlapping objects "
                f"of radius {rad} on a {spec.h}x{spec.w} grid")
        tries += 1
        r = int(rng.integers(row_lo, row_hi + 1))
        c = int(rng.integers(col_lo, col_hi + 1))
        if all(abs(r - pr) > 2 * rad or abs(c - pc) > 2 * rad
               for pr, pc in centers):
            centers.append((r, c))
    return centers


def generate_scene(spec: SceneSpec) -> Scene:
    """Materialize a scene: features, attention, true bias, salient cells.

    Draw order is fixed (placement, centroids, background features, object
    noise) so outputs are a pure function of the spec.  With noise_sigma = 0
    all cells of one object share the centroid exactly.
    """
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    n = spec.h * spec.w
    centers = _place_objects(spec, rng)

    centroids = rng.normal(size=(spec.object_count, spec.dim))
    norms = np.linalg.norm(centroids, axis=1, keepdims=True)
    while centroids.size and float(norms.min()) == 0.0:  # pragma: no cover
        centroids = rng.normal(size=(spec.object_count, spec.dim))
        norms = np.linalg.norm(centroids, axis=1, keepdims=True)
    if centroids.size:
        centroids = centroids / norms

    features = rng.normal(size=(n, spec.dim))
    salient: list[int] = []
    rad = spec.object_radius
    for k, (r, c) in enumerate(centers):
        cells = [rr * spec.w + cc
                 for rr in range(r - rad, r + rad + 1)
                 for cc in range(c - rad, c + rad + 1)]
        noise = rng.normal(scale=spec.noise_sigma, size=(len(cells), spec.dim)) \
            if spec.noise_sigma > 0 else 0.0
        features[cells] = centroids[k] + noise
        salient.extend(cells)
    salient_cells = tuple(sorted(salient))

    true_bias = bias_profile_grid(spec.bias_profile, spec.h, spec.w,
                                  spec.bias_strength)
    saliency = np.ones(n)
    saliency[list(salient_cells)] = 1.0 + spec.saliency_gain
    attention = AttentionGrid(h=spec.h, w=spec.w,
                              values=saliency * true_bias.values)
    tokens = TokenSet(h=spec.h, w=spec.w, features=features)
    return Scene(tokens=tokens, attention=attention, true_bias=true_bias,
                 salient_cells=salient_cells)
