"""Smooth reward fields on graphs and the noisy observation channel."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .graph import Graph, ShiftedSpectrum, Spectrum
from .probes import Probe, gft, probe_matrix

TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RewardField:
    """Node rewards ``f = Q @ alpha_star`` with smoothness budget ``c``.

    ``R`` is the standard deviation of the Gaussian observation noise.
    """

    alpha_star: np.ndarray
    f: np.ndarray
    c: float
    R: float

    @property
    def n(self) -> int:
        return len(self.f)


def smoothness_norm(alpha: np.ndarray, s: ShiftedSpectrum) -> float:
    """``||alpha||_Lambda`` with ``Lambda = diag(eigenvalues + shift)``."""
    alpha = np.asarray(alpha, dtype=float)
    return math.sqrt(float(np.dot(s.values, alpha**2)))


def synthesize_smooth_reward(
    s: ShiftedSpectrum, k: int, c: float | None = None, seed=None, R: float = 0.01
) -> RewardField:
    """Random sparse ``alpha_star`` on the ``k`` lowest-frequency modes.

    Magnitudes are uniform on (0, 1] with random signs. The field is scaled
    so that ``max |f| = 1``; if that leaves ``||alpha||_Lambda > c`` it is
    shrunk further to meet the budget exactly. ``c=None`` takes the budget
    from the synthesized field itself.
    """
    if not 1 <= k <= s.n:
        raise ValueError(f"sparsity k must lie in [1, {s.n}], got {k}")
    if c is not None and not c > 0:
        raise ValueError(f"smoothness budget must be positive, got {c}")
    rng = np.random.default_rng(seed)
    alpha = np.zeros(s.n)
    alpha[:k] = (1.0 - rng.random(k)) * rng.choice([-1.0, 1.0], size=k)
    alpha /= np.max(np.abs(s.Q @ alpha))
    norm = smoothness_norm(alpha, s)
    if c is None:
        c = norm
    elif norm > c:
        alpha *= c / norm
    return RewardField(alpha, s.Q @ alpha, float(c), float(R))


def reward_from_values(
    f: np.ndarray, s: ShiftedSpectrum, c: float | None = None, R: float = 0.01
) -> RewardField:
    """Wrap given node rewards; ``alpha_star`` is their GFT."""
    f = np.asarray(f, dtype=float)
    alpha = s.Q.T @ f
    if c is None:
        c = smoothness_norm(alpha, s)
    return RewardField(alpha, f, float(c), float(R))


def probe_reward(rf: RewardField, p: Probe, s: Spectrum) -> float:
    """Noiseless probe reward ``s~' alpha_star``."""
    return float(gft(s, p) @ rf.alpha_star)


def observe(rf: RewardField, p: Probe, s: Spectrum, rng: np.random.Generator) -> float:
    return probe_reward(rf, p, s) + float(rng.normal(0.0, rf.R))


def support_means(rf: RewardField, probes: Sequence[Probe]) -> np.ndarray:
    """Mean of ``f`` over each probe's support (node-basis evaluation)."""
    return probe_matrix(probes, rf.n) @ rf.f


def best_probe(rf: RewardField, arm_universe: Sequence[Probe]) -> Probe:
    """Exhaustive argmax of the probe reward.

    Rewards within ``TIE_TOL`` of the maximum count as ties, resolved by
    smaller width and then smaller anchor.
    """
    if not arm_universe:
        raise ValueError("empty arm universe")
    values = support_means(rf, arm_universe)
    top = values.max()
    tied = [p for p, v in zip(arm_universe, values) if v >= top - TIE_TOL]
    return min(tied, key=lambda p: (p.width, p.anchor))


class LocalSmoothness(NamedTuple):
    gap: float
    c_prime: float


def local_smoothness_gap(rf: RewardField, g: Graph) -> LocalSmoothness:
    """Largest deviation of a node reward from its neighborhood mean.

    Also returns ``c' = 56 * kappa * sqrt(2 * kappa) * c``, the constant
    of the matching upper bound ``c' d / lam_{d+1}``.
    """
    deg = g.degree
    if np.any(deg == 0):
        raise ValueError(f"graph has isolated nodes: {np.flatnonzero(deg == 0).tolist()}")
    A = (g.weights > 0).astype(float)
    nbr_mean = (A @ rf.f) / deg
    kappa = g.kappa
    return LocalSmoothness(
        float(np.max(np.abs(rf.f - nbr_mean))), 56.0 * kappa * math.sqrt(2.0 * kappa) * rf.c
    )


def local_smoothness_bound(c_prime: float, d: int, s: ShiftedSpectrum) -> float:
    """``c' d / lam_{d+1}`` on the shifted spectrum (``inf`` when ``d == N``)."""
    if d >= s.n:
        return math.inf
    return c_prime * d / s.values[d]


def write_rewards_csv(f: np.ndarray, path: str | Path) -> None:
    rows = ["node,f"] + [f"{i},{v!r}" for i, v in enumerate(np.asarray(f, dtype=float).tolist())]
    Path(path).write_text("\n".join(rows) + "\n")


def write_alpha_csv(alpha: np.ndarray, path: str | Path) -> None:
    rows = ["mode,alpha"] + [f"{i},{v!r}" for i, v in enumerate(np.asarray(alpha, dtype=float).tolist())]
    Path(path).write_text("\n".join(rows) + "\n")


def read_rewards_csv(path: str | Path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "node,f":
        raise ValueError(f"{path}: expected header 'node,f'")
    pairs = sorted((int(a), float(b)) for a, b in (ln.split(",") for ln in lines[1:]))
    if [i for i, _ in pairs] != list(range(len(pairs))):
        raise ValueError(f"{path}: node indices must be 0..N-1")
    return np.array([v for _, v in pairs])
