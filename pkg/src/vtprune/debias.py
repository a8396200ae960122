"""Positional-bias calibration and relative attention.

Attention heads in multimodal decoders put weight on certain grid positions
regardless of image content.  Averaging attention maps over many unrelated
images isolates that positional profile; dividing a fresh map by the profile
(plus a small epsilon) leaves the content-specific part, so the ranking of
tokens reflects what is in the image rather than where the model habitually
looks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import AttentionGrid, check_finite_array

__all__ = ["BiasPrior", "calibrate_bias", "resize_bias", "relative_attention"]


@dataclass(frozen=True)
class BiasPrior:
    """Per-position average attention plus the number of maps averaged."""

    grid: AttentionGrid
    sample_count: int

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")


def calibrate_bias(maps: Sequence[AttentionGrid]) -> BiasPrior:
    """Elementwise arithmetic mean of calibration attention maps.

    Per cell, addends are accumulated in ascending value order before the
    divide; that canonical order makes the result bit-identical under any
    permutation of the input list.
    """
    maps = list(maps)
    if not maps:
        raise ValueError("calibration requires at least one attention map")
    h, w = maps[0].h, maps[0].w
    for k, m in enumerate(maps):
        if m.h != h or m.w != w:
            raise ValueError(
                f"calibration map {k} is {m.h}x{m.w}, expected {h}x{w}")
    stack = np.ascontiguousarray(np.stack([m.values for m in maps]))
    stack.sort(axis=0)
    mean = stack.sum(axis=0) / float(len(maps))
    return BiasPrior(grid=AttentionGrid(h=h, w=w, values=mean),
                     sample_count=len(maps))


def _resize_axis(mat: np.ndarray, target: int) -> np.ndarray:
    """Linearly resample axis 0 of ``mat`` to ``target`` samples.

    Align-corners semantics: sample t maps to source coordinate
    t * (src - 1) / (target - 1), so the first and last samples reproduce the
    source endpoints exactly.  A target of 1 collapses the axis to its mean.
    """
    src = mat.shape[0]
    if target == src:
        return mat
    if target == 1:
        return mat.mean(axis=0, keepdims=True)
    if src == 1:
        return np.broadcast_to(mat, (target,) + mat.shape[1:]).copy()
    pos = np.linspace(0.0, float(src - 1), num=target)
    lo = np.minimum(np.floor(pos).astype(np.intp), src - 2)
    frac = (pos - lo).reshape((target,) + (1,) * (mat.ndim - 1))
    return (1.0 - frac) * mat[lo] + frac * mat[lo + 1]


def resize_bias(prior: BiasPrior, target_h: int, target_w: int) -> BiasPrior:
    """Resample a bias prior onto a target grid (bilinear, align-corners).

    Identity dimensions return the values unchanged; nonnegativity is
    preserved because every output is a convex combination of inputs.
    """
    if target_h < 1 or target_w < 1:
        raise ValueError("target dimensions must be positive")
    src = prior.grid
    if target_h == src.h and target_w == src.w:
        return prior
    mat = src.as_matrix()
    mat = _resize_axis(mat, target_h)
    mat = _resize_axis(mat.T, target_w).T
    grid = AttentionGrid(h=target_h, w=target_w, values=mat.reshape(-1))
    return BiasPrior(grid=grid, sample_count=prior.sample_count)


def relative_attention(a_ori: AttentionGrid, prior: BiasPrior,
                       epsilon: float) -> AttentionGrid:
    """Divide raw attention elementwise by the bias prior plus epsilon.

    The caller is responsible for resizing the prior first: dimensions must
    already match.  Zero prior entries are legal; epsilon keeps the division
    finite.  The output is not renormalized, selection only consumes its
    ordering.
    """
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise ValueError("epsilon must be a positive finite real")
    if not a_ori.same_shape(prior.grid):
        raise ValueError(
            f"attention is {a_ori.h}x{a_ori.w} but prior is "
            f"{prior.grid.h}x{prior.grid.w}; resize the prior first")
    rel = a_ori.values / (prior.grid.values + epsilon)
    rel = check_finite_array(rel, "relative attention", nonnegative=True)
    return AttentionGrid(h=a_ori.h, w=a_ori.w, values=rel)
