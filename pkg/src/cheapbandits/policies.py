"""Ridge estimation in a spectral basis, UCB scores and the stage schedule.

Three policies share this machinery:

* ``CheapUCB``    -- Laplacian regularization, probe width shrinks stage by stage.
* ``SpectralUCB`` -- Laplacian regularization, node probes only.
* ``LinUCB``      -- identity regularization in the node basis, node probes only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvariantBreach, NumericFailure
from .graph import Graph, ShiftedSpectrum, Spectrum, effective_dimension, identity_spectrum
from .probes import Probe, probe_matrix, probe_set

CHEAP_UCB = "CheapUCB"
SPECTRAL_UCB = "SpectralUCB"
LIN_UCB = "LinUCB"
POLICY_KINDS = (CHEAP_UCB, SPECTRAL_UCB, LIN_UCB)

INVERSE_CHECK_EVERY = 64
INVERSE_TOL = 1e-6
SCORE_TIE_RTOL = 1e-10


def parse_policy(name: str) -> str:
    for kind in POLICY_KINDS:
        if name.strip().lower() == kind.lower():
            return kind
    raise ValueError(f"unknown policy {name!r}; expected one of {', '.join(POLICY_KINDS)}")


def confidence_width(R: float, d: int, T: int, lam: float, delta: float, c: float) -> float:
    """``2R sqrt(d log(1 + T/lam) + 2 log(1/delta)) + c``."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return 2.0 * R * math.sqrt(d * math.log1p(T / lam) + 2.0 * math.log(1.0 / delta)) + c


@dataclass(eq=False)
class RidgeState:
    """Regularized least squares in the GFT basis.

    ``V`` starts at ``diag(eigenvalues + shift)``; its inverse is kept up to
    date with Sherman-Morrison and re-checked against ``V`` periodically.
    """

    V: np.ndarray
    V_inv: np.ndarray
    S: np.ndarray
    alpha_hat: np.ndarray
    t: int = 0
    logdet_ratio: float = 0.0
    basis: np.ndarray | None = field(default=None, repr=False)

    def update(self, s_tilde: np.ndarray, r: float) -> "RidgeState":
        x = np.asarray(s_tilde, dtype=float)
        u = self.V_inv @ x
        denom = 1.0 + float(x @ u)
        if not denom > 0.0 or not math.isfinite(denom):
            raise NumericFailure(f"rank-one denominator {denom} at step {self.t + 1}")
        self.V += np.outer(x, x)
        self.V_inv -= np.outer(u, u) / denom
        self.S += r * x
        self.alpha_hat = self.V_inv @ self.S
        self.logdet_ratio += math.log(denom)
        self.t += 1
        if self.t % INVERSE_CHECK_EVERY == 0:
            self.check_inverse()
        return self

    def check_inverse(self) -> float:
        drift = float(np.max(np.abs(self.V @ self.V_inv - np.eye(len(self.S)))))
        if drift > INVERSE_TOL:
            raise InvariantBreach(f"V @ V_inv deviates from I by {drift:.3e} at step {self.t}")
        return drift

    def scores(self, features: np.ndarray, beta: float) -> np.ndarray:
        """UCB of every row of ``features``."""
        quad = np.einsum("ij,ij->i", features @ self.V_inv, features)
        return features @ self.alpha_hat + beta * np.sqrt(np.maximum(quad, 0.0))


def init_estimator(s: ShiftedSpectrum) -> RidgeState:
    vals = s.values
    if np.any(vals <= 0):
        raise ValueError("shifted eigenvalues must be positive")
    n = s.n
    return RidgeState(np.diag(vals), np.diag(1.0 / vals), np.zeros(n), np.zeros(n), basis=s.Q)


def update_estimator(st: RidgeState, s_tilde: np.ndarray, r: float) -> RidgeState:
    return st.update(s_tilde, r)


def ucb_score(st: RidgeState, s_tilde: np.ndarray, beta: float) -> float:
    """``s~' alpha_hat + beta * ||s~||_{V^-1}``."""
    x = np.asarray(s_tilde, dtype=float)
    return float(x @ st.alpha_hat + beta * math.sqrt(max(float(x @ st.V_inv @ x), 0.0)))


def argmax_lowest_anchor(scores: np.ndarray, probes: Sequence[Probe]) -> int:
    """Row index of the best score; near-ties go to the lowest anchor, then width."""
    top = float(np.max(scores))
    tol = SCORE_TIE_RTOL * max(1.0, abs(top))
    tied = np.flatnonzero(scores >= top - tol)
    return int(min(tied, key=lambda i: (probes[i].anchor, probes[i].width)))


@dataclass(frozen=True)
class Stage:
    first: int
    last: int
    width: int

    def __len__(self) -> int:
        return self.last - self.first + 1


@dataclass(frozen=True)
class StagePlan:
    J: int
    stages: tuple[Stage, ...]

    @property
    def T(self) -> int:
        return self.stages[-1].last

    def width_at(self, t: int) -> int:
        for st in self.stages:
            if st.first <= t <= st.last:
                return st.width
        raise IndexError(f"step {t} outside 1..{self.T}")

    def widths(self) -> np.ndarray:
        return np.concatenate([np.full(len(st), st.width) for st in self.stages])

    @property
    def capped(self) -> bool:
        return any(st.width < self.J - j for j, st in enumerate(self.stages))


def stage_schedule(T: int, min_degree: int) -> StagePlan:
    """Doubling stages ``[2^(j-1), 2^j - 1]`` with width ``min(J - j + 1, min_degree + 1)``.

    ``J = max(1, ceil(log2 T))``. The last stage is stretched to end at ``T``
    (for ``T`` a power of two the doubling ranges stop at ``T - 1``).
    """
    if T < 1:
        raise ValueError(f"horizon must be >= 1, got {T}")
    J = max(1, (T - 1).bit_length())  # == ceil(log2 T) for T >= 2
    cap = max(1, min_degree + 1)
    stages = []
    for j in range(1, J + 1):
        first = 2 ** (j - 1)
        last = T if j == J else min(2**j - 1, T)
        stages.append(Stage(first, last, min(J - j + 1, cap)))
    return StagePlan(J, tuple(stages))


def select_action(
    policy_kind: str,
    st: RidgeState,
    stage_probes: Sequence[Probe],
    beta: float,
    features: np.ndarray | None = None,
) -> Probe:
    """Probe maximizing the UCB among ``stage_probes``.

    ``features`` are the probes' coordinates in the estimator basis (rows);
    they are computed from ``st.basis`` when not supplied.
    """
    if policy_kind not in POLICY_KINDS:
        raise ValueError(f"unknown policy {policy_kind!r}")
    if not stage_probes:
        raise ValueError("no probes offered")
    if features is None:
        features = probe_matrix(stage_probes, len(st.S)) @ st.basis
    return stage_probes[argmax_lowest_anchor(st.scores(features, beta), stage_probes)]


class Policy:
    """One policy instance driving one trajectory.

    Probe sets and their GFT features are cached per width.
    """

    def __init__(
        self,
        kind: str,
        graph: Graph,
        spectrum: Spectrum,
        lam: float,
        T: int,
        delta: float,
        R: float,
        c: float,
    ):
        self.kind = parse_policy(kind)
        self.graph = graph
        basis = identity_spectrum(graph.num_nodes) if self.kind == LIN_UCB else spectrum
        self.shifted = ShiftedSpectrum(basis, lam)
        self.T = T
        min_deg = graph.min_degree if self.kind == CHEAP_UCB else 0
        self.plan = stage_schedule(T, min_deg)
        self.d = effective_dimension(self.shifted, T)
        self.beta = confidence_width(R, self.d, T, lam, delta, c)
        self.state = init_estimator(self.shifted)
        self._cache: dict[int, tuple[list[Probe], np.ndarray]] = {}

    def probes_for(self, width: int) -> tuple[list[Probe], np.ndarray]:
        if width not in self._cache:
            probes = probe_set(self.graph, width)
            self._cache[width] = (probes, probe_matrix(probes, self.graph.num_nodes) @ self.shifted.Q)
        return self._cache[width]

    def features(self, p: Probe) -> np.ndarray:
        return self.shifted.Q.T @ p.vector(self.graph.num_nodes)

    def select(self, t: int) -> Probe:
        probes, feats = self.probes_for(self.plan.width_at(t))
        return select_action(self.kind, self.state, probes, self.beta, feats)

    def update(self, p: Probe, r: float) -> None:
        self.state.update(self.features(p), r)
