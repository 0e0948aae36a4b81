"""Probe signals (arms), graph Fourier transforms and sensing-cost models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph, Spectrum


@dataclass(frozen=True)
class Probe:
    """Uniform signal of weight ``1/width`` on ``support``, centered on ``anchor``."""

    anchor: int
    support: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.support)

    def vector(self, n: int) -> np.ndarray:
        s = np.zeros(n)
        s[list(self.support)] = 1.0 / self.width
        return s

    def __str__(self) -> str:
        return f"{self.anchor}:{self.width}"


def build_probe(g: Graph, anchor: int, w: int) -> Probe:
    """Probe of width ``w`` at ``anchor``: the anchor plus its ``w - 1``
    heaviest incident neighbors (ties to the lower node index)."""
    deg = int(g.degree[anchor])
    if w < 1 or w > deg + 1:
        raise ValueError(f"width {w} infeasible at node {anchor} with degree {deg}")
    nbrs = g.neighbor_order[anchor][: w - 1]
    return Probe(int(anchor), (int(anchor), *(int(j) for j in nbrs)))


def probe_set(g: Graph, w: int) -> list[Probe]:
    """One width-``w`` probe per node, in node order."""
    return [build_probe(g, i, w) for i in range(g.num_nodes)]


def arm_universe(g: Graph) -> list[Probe]:
    """Every feasible (anchor, width) probe, ordered by width then anchor."""
    out = []
    for w in range(1, g.kappa + 2):
        out.extend(build_probe(g, i, w) for i in range(g.num_nodes) if g.degree[i] + 1 >= w)
    return out


def probe_matrix(probes: Sequence[Probe], n: int) -> np.ndarray:
    """Stack probe vectors as rows: shape ``(len(probes), n)``."""
    P = np.zeros((len(probes), n))
    for row, p in enumerate(probes):
        P[row, list(p.support)] = 1.0 / p.width
    return P


def gft(s: Spectrum, p: Probe | np.ndarray) -> np.ndarray:
    """Graph Fourier transform ``Q' s`` of a probe or raw signal."""
    x = p.vector(s.n) if isinstance(p, Probe) else np.asarray(p, dtype=float)
    if x.shape != (s.n,):
        raise ValueError(f"signal of shape {x.shape} does not match spectrum of size {s.n}")
    return s.Q.T @ x


def inverse_gft(s: Spectrum, coeffs: np.ndarray) -> np.ndarray:
    return s.Q @ coeffs


def cost_closed_form(w: int, n: int) -> float:
    """Width-only probe cost ``(w-1)/w^2 * (1 - 1/n) + 1/w^2``."""
    if not 1 <= w <= n:
        raise ValueError(f"need 1 <= w <= n, got w={w}, n={n}")
    return (w - 1) / w**2 * (1.0 - 1.0 / n) + 1.0 / w**2


def cost_quadratic(base: Graph | Spectrum, p: Probe | np.ndarray) -> float:
    """Laplacian quadratic-form cost of a probe.

    With a :class:`Graph` this is the edge sum ``sum_{i~j} w_ij (s_i - s_j)^2``
    (unit weights give the plain squared differences); with a
    :class:`Spectrum` it is ``sum_i lam_i * s~_i^2``. Both equal ``s' L s``.
    """
    if isinstance(base, Spectrum):
        st = gft(base, p)
        return float(np.dot(base.eigenvalues, st**2))
    x = p.vector(base.num_nodes) if isinstance(p, Probe) else np.asarray(p, dtype=float)
    if not base.edges:
        return 0.0
    e = np.asarray(base.edges)
    i, j = e[:, 0].astype(int), e[:, 1].astype(int)
    return float(np.sum(e[:, 2] * (x[i] - x[j]) ** 2))
