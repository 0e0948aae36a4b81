"""Labeled feature vectors -> k-means clusters -> per-cluster rewards -> kNN graph."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .graph import Graph, from_edge_list


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.points.ndim != 2:
            raise ValueError(f"points must be a 2-D array, got shape {self.points.shape}")
        if len(self.labels) != len(self.points):
            raise ValueError(f"{len(self.points)} points but {len(self.labels)} labels")

    def __len__(self) -> int:
        return len(self.points)


def read_points_csv(path: str | Path) -> PointSet:
    """Read ``f1,...,fF,label`` rows; labels are kept as strings."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1].strip() != "label" or len(header) < 2:
            raise ValueError(f"{path}: header must be f1..fF,label")
        F = len(header) - 1
        pts, labels = [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != F + 1:
                raise ValueError(f"{path}:{lineno}: expected {F + 1} fields, got {len(row)}")
            pts.append([float(v) for v in row[:F]])
            labels.append(row[F].strip())
    return PointSet(np.array(pts, dtype=float).reshape(-1, F), np.array(labels))


def write_points_csv(ps: PointSet, path: str | Path) -> None:
    F = ps.points.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i + 1}" for i in range(F)] + ["label"])
        for x, lab in zip(ps.points.tolist(), ps.labels.tolist()):
            w.writerow([repr(v) for v in x] + [lab])


def normalize_features(points: np.ndarray) -> np.ndarray:
    """Min-max scale every coordinate into [0, 1]; constant columns become 0."""
    lo = points.min(axis=0)
    span = points.max(axis=0) - lo
    span[span == 0] = 1.0
    return (points - lo) / span


@dataclass
class Clustering:
    assignment: np.ndarray
    centers: np.ndarray
    inertia_history: list[float] = field(default_factory=list)

    @property
    def inertia(self) -> float:
        return self.inertia_history[-1]


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (X**2).sum(1)[:, None] - 2.0 * X @ C.T + (C**2).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _seed_centers(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    # k-means++ style: next center drawn with probability ~ squared distance
    M = len(X)
    idx = [int(rng.integers(M))]
    closest = _sq_dists(X, X[idx])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(M, p=closest / total))
        else:
            free = np.setdiff1d(np.arange(M), idx)
            nxt = int(rng.choice(free))
        idx.append(nxt)
        closest = np.minimum(closest, _sq_dists(X, X[[nxt]])[:, 0])
    return X[idx].copy()


def cluster(points: np.ndarray, k: int, seed=None, max_iter: int = 100, tol: float = 1e-6) -> Clustering:
    """Lloyd's k-means with distance-weighted seeding.

    Stops after ``max_iter`` rounds or when the relative inertia change
    drops below ``tol``. A cluster left empty takes over the point farthest
    from its current center.
    """
    X = np.asarray(points, dtype=float)
    M = len(X)
    if not 1 <= k <= M:
        raise ValueError(f"need 1 <= k <= number of points ({M}), got {k}")
    rng = np.random.default_rng(seed)
    centers = _seed_centers(X, k, rng)
    history: list[float] = []
    assign = np.zeros(M, dtype=int)
    for _ in range(max_iter):
        D = _sq_dists(X, centers)
        assign = np.argmin(D, axis=1)
        dist = D[np.arange(M), assign]
        counts = np.bincount(assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            movable = counts[assign] > 1
            far = int(np.argmax(np.where(movable, dist, -1.0)))
            counts[assign[far]] -= 1
            assign[far] = empty
            counts[empty] = 1
            dist[far] = 0.0
        for j in range(k):
            centers[j] = X[assign == j].mean(axis=0)
        inertia = float(((X - centers[assign]) ** 2).sum())
        history.append(inertia)
        if len(history) > 1:
            prev = history[-2]
            if prev == 0 or abs(prev - inertia) / prev < tol:
                break
        elif inertia == 0:
            break
    return Clustering(assign, centers, history)


def cluster_rewards(assignment: np.ndarray, labels: Sequence, target_label, k: int | None = None) -> np.ndarray:
    """Fraction of each cluster's members carrying ``target_label``."""
    assignment = np.asarray(assignment)
    k = int(assignment.max()) + 1 if k is None else k
    hit = (np.asarray(labels).astype(str) == str(target_label)).astype(float)
    sizes = np.bincount(assignment, minlength=k).astype(float)
    hits = np.bincount(assignment, weights=hit, minlength=k)
    return np.divide(hits, sizes, out=np.zeros(k), where=sizes > 0)


def knn_graph(centers: np.ndarray, k_nn: int) -> Graph:
    """Unit-weight graph linking each center to its ``k_nn`` nearest others.

    The directed relation is symmetrized by union. Distance ties go to the
    lower index.
    """
    C = np.asarray(centers, dtype=float)
    n = len(C)
    if not 1 <= k_nn < n:
        raise ValueError(f"need 1 <= k_nn < {n}, got {k_nn}")
    D = _sq_dists(C, C)
    np.fill_diagonal(D, np.inf)
    pairs = set()
    for i in range(n):
        for j in np.argsort(D[i], kind="stable")[:k_nn].tolist():
            pairs.add((min(i, j), max(i, j)))
    return from_edge_list(n, ((i, j, 1.0) for i, j in sorted(pairs)))


@dataclass(eq=False)
class IngestResult:
    graph: Graph
    rewards: np.ndarray
    clustering: Clustering


def ingest(ps: PointSet, n_clusters: int, k_nn: int, target_label, seed=None) -> IngestResult:
    """Run the whole pipeline on a labeled point set."""
    X = normalize_features(ps.points)
    cl = cluster(X, n_clusters, seed)
    f = cluster_rewards(cl.assignment, ps.labels, target_label, n_clusters)
    return IngestResult(knn_graph(cl.centers, k_nn), f, cl)


def synthetic_blobs(
    n_points: int, n_blobs: int, dim: int, labels: Sequence[str], seed=None, spread: float = 0.05, purity: float = 0.8
) -> PointSet:
    """Gaussian blobs in the unit cube whose labels follow the geometry.

    Each blob has a dominant label (cycled through ``labels``) carried by
    roughly a ``purity`` share of its points; the rest are uniform over
    ``labels``.
    """
    rng = np.random.default_rng(seed)
    centers = rng.random((n_blobs, dim))
    which = rng.integers(n_blobs, size=n_points)
    pts = centers[which] + spread * rng.standard_normal((n_points, dim))
    dominant = np.array([labels[b % len(labels)] for b in range(n_blobs)])
    noisy = rng.random(n_points) > purity
    lab = np.where(noisy, np.asarray(labels)[rng.integers(len(labels), size=n_points)], dominant[which])
    return PointSet(pts, lab)
