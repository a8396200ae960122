import numpy as np

from vtprune import AttentionGrid, TokenSet
from vtprune.graph import AdjacencyGraph


def grid(h, w, values):
    return AttentionGrid(h=h, w=w, values=np.asarray(values, dtype=np.float64))


def tokens(h, w, features):
    return TokenSet(h=h, w=w, features=np.asarray(features, dtype=np.float64))


def edgeless(n):
    return AdjacencyGraph(matrix=np.zeros((n, n), dtype=np.bool_))


def random_graph(rng, n, density):
    m = rng.random((n, n)) < density
    m = np.triu(m, 1)
    return AdjacencyGraph(matrix=m | m.T)


def new_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))
