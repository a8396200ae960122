"""Scikit-learn style front end.

``AttentionDebiaser`` is a plain transformer: fit on a stack of calibration
attention maps, transform new maps into debiased ones.  ``TokenPruner``
bundles the full pipeline behind ``fit`` / ``prune`` / ``transform`` with
sklearn parameter semantics (``get_params`` / ``set_params`` / ``clone``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .core import AttentionGrid, PruneConfig, TokenSet, resolve_budget
from .debias import BiasPrior, calibrate_bias, relative_attention, resize_bias
from .graph import build_graph
from .selection import SelectionResult, select_tokens

__all__ = ["AttentionDebiaser", "TokenPruner", "attention_maps"]


def attention_maps(X) -> list[AttentionGrid]:
    """Coerce calibration input to a list of AttentionGrid.

    Accepts a list of AttentionGrid, or an array of shape (k, h, w).
    """
    if isinstance(X, np.ndarray):
        if X.ndim != 3:
            raise ValueError(f"expected (k, h, w) array, got shape {X.shape}")
        return [AttentionGrid(h=X.shape[1], w=X.shape[2], values=m.reshape(-1))
                for m in X]
    maps = list(X)
    if not all(isinstance(m, AttentionGrid) for m in maps):
        raise TypeError("expected AttentionGrid instances or a (k, h, w) array")
    return maps


class AttentionDebiaser(TransformerMixin, BaseEstimator):
    """Learns a positional bias prior and rescales attention maps by it."""

    def __init__(self, epsilon=1e-7):
        self.epsilon = epsilon

    def fit(self, X, y=None):
        maps = attention_maps(X)
        self.prior_ = calibrate_bias(maps)
        return self

    def transform(self, X):
        """Debias maps; the prior is resampled when grid sizes differ.

        Returns an array of shape (k, h, w).
        """
        maps = attention_maps(X)
        out = []
        for m in maps:
            prior = self.prior_
            if not m.same_shape(prior.grid):
                prior = resize_bias(prior, m.h, m.w)
            out.append(relative_attention(m, prior, self.epsilon).as_matrix())
        return np.stack(out)


class TokenPruner(BaseEstimator):
    """End-to-end pruner: calibrate on attention maps, then select tokens.

    ``keep`` is an absolute count when given as an int and a ratio in (0, 1]
    when given as a float.  ``layer`` is metadata echoed into reports.
    """

    def __init__(self, epsilon=1e-7, alpha=1.0, theta_sim=0.8,
                 pivot_ratio=0.7, keep=0.333, layer=2):
        self.epsilon = epsilon
        self.alpha = alpha
        self.theta_sim = theta_sim
        self.pivot_ratio = pivot_ratio
        self.keep = keep
        self.layer = layer

    def config(self) -> PruneConfig:
        keep_count = self.keep if isinstance(self.keep, (int, np.integer)) else None
        keep_ratio = None if keep_count is not None else float(self.keep)
        return PruneConfig(epsilon=self.epsilon, alpha=self.alpha,
                           theta_sim=self.theta_sim,
                           pivot_ratio=self.pivot_ratio,
                           keep_count=keep_count, keep_ratio=keep_ratio,
                           layer=self.layer)

    def fit(self, X, y=None):
        self.prior_ = calibrate_bias(attention_maps(X))
        return self

    def prune(self, tokens: TokenSet, attention: AttentionGrid) -> SelectionResult:
        cfg = self.config()
        prior = getattr(self, "prior_", None)
        if prior is None:
            # Uncalibrated: a uniform prior keeps the raw attention order.
            prior = BiasPrior(
                grid=AttentionGrid(h=attention.h, w=attention.w,
                                   values=np.ones(attention.n)),
                sample_count=1)
        elif not attention.same_shape(prior.grid):
            prior = resize_bias(prior, attention.h, attention.w)
        rel = relative_attention(attention, prior, cfg.epsilon)
        adj = build_graph(tokens, cfg)
        n = resolve_budget(cfg, tokens.n)
        return select_tokens(rel, adj, n, cfg.pivot_ratio)

    def transform(self, X):
        """Prune a (tokens, attention) pair down to the kept feature rows."""
        tokens, attention = X
        result = self.prune(tokens, attention)
        return tokens.features[list(result.kept)]
