"""Seeded random-graph generators (Erdos-Renyi, Barabasi-Albert, SBM)."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .graph import Graph, from_edge_list


def _uniform_weights(rng: np.random.Generator, size: int) -> np.ndarray:
    # Generator.random is [0, 1); flip to (0, 1]
    return 1.0 - rng.random(size)


def generate_er(n: int, p: float, seed=None) -> Graph:
    """G(n, p) with independent uniform (0, 1] edge weights."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    w = _uniform_weights(rng, int(keep.sum()))
    return from_edge_list(n, zip(iu[keep].tolist(), ju[keep].tolist(), w.tolist()))


def generate_ba(n: int, m: int, seed=None) -> Graph:
    """Preferential attachment grown from an ``m + 1`` node clique.

    Each new node draws ``m`` distinct targets with probability proportional
    to current degree.
    """
    if not 1 <= m < n:
        raise ValueError(f"need 1 <= m < n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    pairs = [(i, j) for i in range(m + 1) for j in range(i + 1, m + 1)]
    deg = np.zeros(n)
    deg[: m + 1] = m
    for v in range(m + 1, n):
        targets = rng.choice(v, size=m, replace=False, p=deg[:v] / deg[:v].sum())
        for u in sorted(targets.tolist()):
            pairs.append((u, v))
        deg[targets] += 1
        deg[v] = m
    w = _uniform_weights(rng, len(pairs))
    return from_edge_list(n, ((i, j, wt) for (i, j), wt in zip(pairs, w.tolist())))


def generate_sbm(block_sizes: Sequence[int], p_in: float, p_out: float, seed=None) -> Graph:
    """Stochastic block model with unit edge weights.

    Nodes are numbered block by block in the order of ``block_sizes``.
    """
    for p in (p_in, p_out):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probabilities must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    block = np.repeat(np.arange(len(block_sizes)), block_sizes)
    n = len(block)
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    return from_edge_list(n, ((i, j, 1.0) for i, j in zip(iu[keep].tolist(), ju[keep].tolist())))


def disjoint_cliques(num_cliques: int, size: int) -> Graph:
    """``num_cliques`` disjoint unit-weight cliques of ``size`` nodes each."""
    return generate_sbm([size] * num_cliques, 1.0, 0.0)
