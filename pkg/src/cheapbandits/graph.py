"""Weighted undirected graphs, Laplacian eigenanalysis and effective dimension."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericFailure

ZERO_EIGENVALUE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph with strictly positive edge weights.

    ``edges`` holds ``(i, j, w)`` triples with ``i < j``, sorted
    lexicographically. The dense weight matrix is built once on construction.
    """

    num_nodes: int
    edges: tuple[tuple[int, int, float], ...]
    weights: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.num_nodes

    @cached_property
    def degree(self) -> np.ndarray:
        return np.count_nonzero(self.weights, axis=1)

    @property
    def kappa(self) -> int:
        return int(self.degree.max()) if self.num_nodes else 0

    @property
    def min_degree(self) -> int:
        return int(self.degree.min())

    @cached_property
    def laplacian(self) -> np.ndarray:
        return np.diag(self.weights.sum(axis=1)) - self.weights

    @cached_property
    def neighbor_order(self) -> tuple[np.ndarray, ...]:
        """Neighbors of every node sorted by weight descending, then index."""
        order = []
        for i in range(self.num_nodes):
            nbrs = np.flatnonzero(self.weights[i])
            # lexsort: last key is primary
            order.append(nbrs[np.lexsort((nbrs, -self.weights[i, nbrs]))])
        return tuple(order)

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.weights[i])

    def connected_components(self) -> int:
        """Component count via union-find over the edge list."""
        parent = list(range(self.num_nodes))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for i, j, _ in self.edges:
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[ri] = rj
        return len({find(x) for x in range(self.num_nodes)})


def from_edge_list(n: int, edges: Iterable[Sequence[float]]) -> Graph:
    """Build a :class:`Graph` from ``(i, j, weight)`` triples.

    Raises ``ValueError`` on self-loops, duplicate pairs, out-of-range
    indices and non-positive weights.
    """
    if n < 1:
        raise ValueError(f"number of nodes must be positive, got {n}")
    W = np.zeros((n, n))
    clean = []
    for e in edges:
        i, j, w = int(e[0]), int(e[1]), float(e[2])
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise ValueError(f"self-loop at node {i}")
        if not w > 0 or not math.isfinite(w):
            raise ValueError(f"edge ({i}, {j}) has non-positive weight {w}")
        if W[i, j] != 0:
            raise ValueError(f"duplicate edge ({i}, {j})")
        W[i, j] = W[j, i] = w
        clean.append((min(i, j), max(i, j), w))
    clean.sort()
    return Graph(n, tuple(clean), W)


def from_weight_matrix(W: np.ndarray) -> Graph:
    iu, ju = np.nonzero(np.triu(W, 1))
    return from_edge_list(W.shape[0], zip(iu.tolist(), ju.tolist(), W[iu, ju].tolist()))


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending Laplacian eigenvalues and eigenvectors (columns of ``Q``)."""

    eigenvalues: np.ndarray
    Q: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def zero_multiplicity(self, tol: float = ZERO_EIGENVALUE_TOL) -> int:
        return int(np.count_nonzero(np.abs(self.eigenvalues) <= tol))


@dataclass(frozen=True, eq=False)
class ShiftedSpectrum:
    """A spectrum with regularizer ``shift`` added to every eigenvalue."""

    base: Spectrum
    shift: float

    def __post_init__(self):
        if not self.shift > 0:
            raise ValueError(f"shift must be positive, got {self.shift}")

    @cached_property
    def values(self) -> np.ndarray:
        return self.base.eigenvalues + self.shift

    @property
    def Q(self) -> np.ndarray:
        return self.base.Q

    @property
    def n(self) -> int:
        return self.base.n


def _fix_signs(Q: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    # first entry with |q| > tol made positive in every column
    first = np.argmax(np.abs(Q) > tol, axis=0)
    signs = np.sign(Q[first, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return Q * signs


def spectral_decomposition(g: Graph) -> Spectrum:
    """Dense eigendecomposition of the unnormalized Laplacian ``D - W``."""
    try:
        vals, Q = np.linalg.eigh(g.laplacian)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"Laplacian eigensolver failed: {exc}") from exc
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(Q))):
        raise NumericFailure("Laplacian eigensolver returned non-finite values")
    return Spectrum(vals, _fix_signs(Q))


def identity_spectrum(n: int) -> Spectrum:
    """Spectrum of the edgeless graph: zero eigenvalues, identity basis.

    Used to express identity-regularized (node basis) estimators with the
    same machinery as the Laplacian-regularized ones.
    """
    return Spectrum(np.zeros(n), np.eye(n))


def effective_dimension(s: ShiftedSpectrum, T: int) -> int:
    """Largest ``d`` with ``(d - 1) * lam_d <= T / log(1 + T / shift)``."""
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    threshold = T / math.log1p(T / s.shift)
    d = np.arange(1, s.n + 1)
    ok = np.flatnonzero((d - 1) * s.values <= threshold)
    return int(ok[-1]) + 1


def write_edge_list(g: Graph, path: str | Path) -> None:
    """Write ``N`` on the first line, then one ``i j w`` line per edge.

    Weights use ``repr`` so a read-back reproduces them bit for bit.
    """
    lines = [str(g.num_nodes)]
    lines += [f"{i} {j} {w!r}" for i, j, w in g.edges]
    Path(path).write_text("\n".join(lines) + "\n")


def read_edge_list(path: str | Path) -> Graph:
    n = None
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 1:
                raise ValueError(f"{path}:{lineno}: expected node count, got {raw!r}")
            n = int(parts[0])
            continue
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'i j w', got {raw!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if n is None:
        raise ValueError(f"{path}: empty edge-list file")
    return from_edge_list(n, edges)
