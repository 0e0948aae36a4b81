"""Seeded experiment execution, regret/cost ledgers, aggregation and checks.

Seeding: run ``i`` of an experiment uses ``seed = base_seed + i``. That seed
feeds a :class:`numpy.random.SeedSequence` spawned into three independent
streams (graph, reward, noise), so a run replays identically no matter
how many runs or workers surround it. Every policy within a run sees the
same graph, reward field and noise stream.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .environment import (
    RewardField,
    best_probe,
    read_rewards_csv,
    reward_from_values,
    support_means,
    synthesize_smooth_reward,
)
from .errors import ConfigError, InvariantBreach
from .generators import generate_ba, generate_er, generate_sbm
from .graph import Graph, ShiftedSpectrum, Spectrum, read_edge_list, spectral_decomposition
from .policies import CHEAP_UCB, LIN_UCB, POLICY_KINDS, SPECTRAL_UCB, Policy, parse_policy
from .probes import Probe, arm_universe, build_probe, cost_closed_form, cost_quadratic

log = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("policy", "seed", "t", "anchor", "width", "reward", "regret_cum", "cost_cum")
SUMMARY_COLUMNS = ("policy", "t", "regret_mean", "regret_se", "cost_mean", "cost_se")
COST_MODELS = ("width", "quadratic")

GRAPH_KEYS = {
    "er": ("n", "p"),
    "ba": ("n", "m"),
    "sbm": ("block_sizes", "p_in", "p_out"),
    "file": ("graph_path",),
}


@dataclass
class ExperimentConfig:
    """Flat experiment description; see the README for every key."""

    graph: str
    n: int | None = None
    p: float | None = None
    m: int | None = None
    block_sizes: list[int] | None = None
    p_in: float | None = None
    p_out: float | None = None
    graph_path: str | None = None
    graph_seed: int | None = None
    k: int = 5
    c: float | None = None
    reward_path: str | None = None
    R: float = 0.01
    lam: float = 0.01
    delta: float = 0.001
    T: int = 100
    policies: list[str] = field(default_factory=lambda: list(POLICY_KINDS))
    runs: int = 100
    seed: int = 0
    cost_model: str = "width"

    def __post_init__(self):
        self.graph = str(self.graph).lower()
        if self.graph not in GRAPH_KEYS:
            raise ConfigError(f"unknown graph kind {self.graph!r}; expected one of {sorted(GRAPH_KEYS)}")
        for key in GRAPH_KEYS[self.graph]:
            if getattr(self, key) is None:
                raise ConfigError(f"missing key {key!r} required by graph={self.graph!r}")
        self.policies = [parse_policy(p) for p in self.policies]
        if not self.policies:
            raise ConfigError("policy list is empty")
        if self.cost_model not in COST_MODELS:
            raise ConfigError(f"cost_model must be one of {COST_MODELS}, got {self.cost_model!r}")
        for key in ("lam", "T", "runs", "k"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)!r}")
        if self.R < 0:
            raise ConfigError(f"R must be non-negative, got {self.R!r}")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta!r}")
        if self.c is not None and not self.c > 0:
            raise ConfigError(f"c must be positive, got {self.c!r}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        if "lambda" in raw:
            raw["lam"] = raw.pop("lambda")
        if "graph" not in raw:
            raise ConfigError("missing key 'graph'")
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.runs)]


def load_config(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc


@dataclass(eq=False)
class Instance:
    """Everything a run needs that does not depend on the policy."""

    graph: Graph
    spectrum: Spectrum
    reward: RewardField
    universe: list[Probe]
    values: dict[tuple[int, int], float]
    best: Probe
    noise_seed: np.random.SeedSequence

    @property
    def best_value(self) -> float:
        return self.values[(self.best.anchor, self.best.width)]

    def value(self, p: Probe) -> float:
        return self.values[(p.anchor, p.width)]


def make_graph(cfg: ExperimentConfig, seed) -> Graph:
    if cfg.graph == "er":
        return generate_er(cfg.n, cfg.p, seed)
    if cfg.graph == "ba":
        return generate_ba(cfg.n, cfg.m, seed)
    if cfg.graph == "sbm":
        return generate_sbm(cfg.block_sizes, cfg.p_in, cfg.p_out, seed)
    return read_edge_list(cfg.graph_path)


def build_instance(cfg: ExperimentConfig, seed: int) -> Instance:
    graph_ss, reward_ss, noise_ss = np.random.SeedSequence(seed).spawn(3)
    g = make_graph(cfg, graph_ss if cfg.graph_seed is None else cfg.graph_seed)
    spec = spectral_decomposition(g)
    shifted = ShiftedSpectrum(spec, cfg.lam)
    if cfg.reward_path is not None:
        f = read_rewards_csv(cfg.reward_path)
        if len(f) != g.num_nodes:
            raise ConfigError(f"reward file has {len(f)} nodes, graph has {g.num_nodes}")
        rf = reward_from_values(f, shifted, cfg.c, cfg.R)
    else:
        rf = synthesize_smooth_reward(shifted, cfg.k, cfg.c, reward_ss, cfg.R)
    universe = arm_universe(g)
    vals = support_means(rf, universe)
    values = {(p.anchor, p.width): float(v) for p, v in zip(universe, vals)}
    return Instance(g, spec, rf, universe, values, best_probe(rf, universe), noise_ss)


@dataclass(eq=False)
class Trajectory:
    policy: str
    seed: int
    anchor: np.ndarray
    width: np.ndarray
    reward: np.ndarray
    regret: np.ndarray
    cost: np.ndarray
    regret_cum: np.ndarray
    cost_cum: np.ndarray
    digest: str = ""

    @property
    def T(self) -> int:
        return len(self.anchor)

    @property
    def probes(self) -> list[tuple[int, int]]:
        return list(zip(self.anchor.tolist(), self.width.tolist()))


def probe_cost(inst: Instance, p: Probe, cost_model: str) -> float:
    if cost_model == "width":
        return cost_closed_form(p.width, inst.graph.num_nodes)
    return cost_quadratic(inst.graph, p)


def make_policy(cfg: ExperimentConfig, inst: Instance, kind: str) -> Policy:
    return Policy(kind, inst.graph, inst.spectrum, cfg.lam, cfg.T, cfg.delta, cfg.R, inst.reward.c)


def run_trajectory(
    cfg: ExperimentConfig, policy_kind: str, seed: int, instance: Instance | None = None
) -> Trajectory:
    """Play ``cfg.T`` steps of one policy on the instance derived from ``seed``."""
    inst = instance if instance is not None else build_instance(cfg, seed)
    pol = make_policy(cfg, inst, policy_kind)
    rng = np.random.default_rng(inst.noise_seed)
    T = cfg.T
    anchor = np.zeros(T, dtype=int)
    width = np.zeros(T, dtype=int)
    reward = np.zeros(T)
    regret = np.zeros(T)
    cost = np.zeros(T)
    best = inst.best_value
    for t in range(1, T + 1):
        p = pol.select(t)
        mean = inst.value(p)
        r = mean + float(rng.normal(0.0, inst.reward.R))
        anchor[t - 1], width[t - 1] = p.anchor, p.width
        reward[t - 1] = r
        regret[t - 1] = best - mean
        cost[t - 1] = probe_cost(inst, p, cfg.cost_model)
        pol.update(p, r)
    st = pol.state
    digest = hashlib.sha256(st.V_inv.tobytes() + st.alpha_hat.tobytes()).hexdigest()[:16]
    traj = Trajectory(
        pol.kind, seed, anchor, width, reward, regret, cost, np.cumsum(regret), np.cumsum(cost), digest
    )
    _check_ledgers(traj, cfg.cost_model)
    return traj


def _check_ledgers(traj: Trajectory, cost_model: str) -> None:
    if np.any(traj.regret < 0):
        raise InvariantBreach(f"negative instantaneous regret in {traj.policy} seed {traj.seed}")
    steps = np.diff(np.concatenate([[0.0], traj.cost_cum]))
    # quadratic costs can be zero (probe constant on a whole component)
    if cost_model == "width" and np.any(steps <= 0):
        raise InvariantBreach(f"cumulative cost not strictly increasing in {traj.policy} seed {traj.seed}")


def run_experiment(cfg: ExperimentConfig, progress=None) -> list[Trajectory]:
    """All policies on every seed; trajectories ordered by seed, then policy."""
    out = []
    for seed in cfg.seeds():
        inst = build_instance(cfg, seed)
        for kind in cfg.policies:
            out.append(run_trajectory(cfg, kind, seed, inst))
        if progress is not None:
            progress(seed)
    return out


@dataclass
class PolicySummary:
    regret_mean: np.ndarray
    regret_se: np.ndarray
    cost_mean: np.ndarray
    cost_se: np.ndarray
    runs: int


def _mean_se(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = rows.mean(axis=0)
    if rows.shape[0] < 2:
        return mean, np.zeros_like(mean)
    return mean, rows.std(axis=0, ddof=1) / math.sqrt(rows.shape[0])


def aggregate(trajectories: Sequence[Trajectory]) -> dict[str, PolicySummary]:
    """Per-step mean and standard error of cumulative regret and cost, per policy."""
    if not trajectories:
        raise ValueError("nothing to aggregate")
    horizons = {tr.T for tr in trajectories}
    if len(horizons) > 1:
        raise ValueError(f"mixed horizons: {sorted(horizons)}")
    groups: dict[str, list[Trajectory]] = {}
    for tr in trajectories:
        groups.setdefault(tr.policy, []).append(tr)
    out = {}
    for policy, trs in groups.items():
        rm, rs = _mean_se(np.array([tr.regret_cum for tr in trs]))
        cm, cs = _mean_se(np.array([tr.cost_cum for tr in trs]))
        out[policy] = PolicySummary(rm, rs, cm, cs, len(trs))
    return out


def write_trajectories_csv(trajectories: Iterable[Trajectory], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_COLUMNS)
        for tr in trajectories:
            for i in range(tr.T):
                w.writerow(
                    [
                        tr.policy,
                        tr.seed,
                        i + 1,
                        int(tr.anchor[i]),
                        int(tr.width[i]),
                        repr(float(tr.reward[i])),
                        repr(float(tr.regret_cum[i])),
                        repr(float(tr.cost_cum[i])),
                    ]
                )


def read_trajectories_csv(path: str | Path) -> list[Trajectory]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRAJECTORY_COLUMNS:
            raise ValueError(f"{path}: expected columns {','.join(TRAJECTORY_COLUMNS)}")
        rows: dict[tuple[str, int], list[dict]] = {}
        for row in reader:
            rows.setdefault((row["policy"], int(row["seed"])), []).append(row)
    out = []
    for (policy, seed), rs in rows.items():
        rs.sort(key=lambda r: int(r["t"]))
        if [int(r["t"]) for r in rs] != list(range(1, len(rs) + 1)):
            raise ValueError(f"{path}: steps for {policy} seed {seed} are not 1..T")
        regret_cum = np.array([float(r["regret_cum"]) for r in rs])
        cost_cum = np.array([float(r["cost_cum"]) for r in rs])
        out.append(
            Trajectory(
                parse_policy(policy),
                seed,
                np.array([int(r["anchor"]) for r in rs]),
                np.array([int(r["width"]) for r in rs]),
                np.array([float(r["reward"]) for r in rs]),
                np.diff(regret_cum, prepend=0.0),
                np.diff(cost_cum, prepend=0.0),
                regret_cum,
                cost_cum,
            )
        )
    return out


def write_summary_csv(summary: dict[str, PolicySummary], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for policy, s in summary.items():
            for i in range(len(s.regret_mean)):
                w.writerow(
                    [
                        policy,
                        i + 1,
                        repr(float(s.regret_mean[i])),
                        repr(float(s.regret_se[i])),
                        repr(float(s.cost_mean[i])),
                        repr(float(s.cost_se[i])),
                    ]
                )


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------


def logdet_ratio_direct(pol: Policy, probes: Sequence[tuple[int, int]]) -> float:
    """``log det(V_{T+1}) / det(Lambda)`` rebuilt from scratch by dense algebra."""
    n = pol.graph.num_nodes
    X = np.array([pol.features(build_probe(pol.graph, a, w)) for a, w in probes]).reshape(-1, n)
    V = np.diag(pol.shifted.values) + X.T @ X
    sign, logdet = np.linalg.slogdet(V)
    if sign <= 0:
        raise InvariantBreach("design matrix lost positive definiteness")
    return float(logdet - np.sum(np.log(pol.shifted.values)))


def self_normalized_ratio(traj: Trajectory, inst: Instance, pol: Policy) -> float:
    """``max_t ||sum_i s~_i eps_i||_{V_t^-1} / (beta - c)`` over the trajectory.

    ``eps_i`` is recovered as observed minus true probe reward. Values above
    1 are violations of the self-normalized confidence bound.
    """
    n = inst.graph.num_nodes
    V_inv = np.diag(1.0 / pol.shifted.values)
    xi = np.zeros(n)
    worst = 0.0
    for (a, w), r in zip(traj.probes, traj.reward):
        p = build_probe(inst.graph, a, w)
        x = pol.features(p)
        xi += x * (r - inst.value(p))
        u = V_inv @ x
        V_inv -= np.outer(u, u) / (1.0 + x @ u)
        worst = max(worst, math.sqrt(max(float(xi @ V_inv @ xi), 0.0)))
    radius = pol.beta - inst.reward.c
    if radius <= 0:
        return 0.0 if worst == 0 else math.inf
    return worst / radius


def cheap_cost_bound(T: int) -> float:
    return 3.0 * T / 4.0 - 0.5


def verify_trajectory(traj: Trajectory, cfg: ExperimentConfig, instance: Instance | None = None) -> dict:
    """Deterministic post-run checks of a completed trajectory.

    * ``logdet``: ``log det(V_{T+1}) / det(Lambda) <= 2 d log(1 + T/lam)``.
    * ``cost``: CheapUCB width-model cost against ``3T/4 - 1/2`` (applies when
      the stage widths are not capped by a low minimum degree); node-action
      policies against ``C_T = T``.
    * ``local_smoothness``: residuals ``|F(s*) - F(s*^w)| - c' sqrt(T) w / lam_{d+1}``
      for the widths the schedule used. Positive residuals are logged only.
    """
    inst = instance if instance is not None else build_instance(cfg, traj.seed)
    pol = make_policy(cfg, inst, traj.policy)
    T = traj.T
    lhs = logdet_ratio_direct(pol, traj.probes)
    rhs = 2.0 * pol.d * math.log1p(T / cfg.lam)
    report: dict = {
        "policy": traj.policy,
        "seed": traj.seed,
        "effective_dimension": pol.d,
        "logdet": {"lhs": lhs, "rhs": rhs, "ok": bool(lhs <= rhs + 1e-9)},
    }
    C_T = float(traj.cost_cum[-1])
    if traj.policy == CHEAP_UCB:
        bound = cheap_cost_bound(T)
        applicable = cfg.cost_model == "width" and not pol.plan.capped
        report["cost"] = {
            "C_T": C_T,
            "bound": bound,
            "applicable": applicable,
            "ok": bool(C_T <= bound) if applicable else True,
        }
    else:
        applicable = cfg.cost_model == "width"
        report["cost"] = {
            "C_T": C_T,
            "bound": float(T),
            "applicable": applicable,
            "ok": bool(abs(C_T - T) <= 1e-9 * T) if applicable else True,
        }
    report["local_smoothness"] = _local_smoothness_residuals(inst, pol, cfg, traj.seed)
    report["ok"] = report["logdet"]["ok"] and report["cost"]["ok"]
    return report


def _local_smoothness_residuals(inst: Instance, pol: Policy, cfg: ExperimentConfig, seed: int) -> dict:
    g = inst.graph
    star = inst.best.anchor
    kappa = g.kappa
    c_prime = 56.0 * kappa * math.sqrt(2.0 * kappa) * inst.reward.c
    d = pol.d
    lam_next = pol.shifted.values[d] if d < g.num_nodes else math.inf
    best = inst.best_value
    residuals = {}
    for w in sorted({st.width for st in pol.plan.stages}):
        if w > g.degree[star]:
            continue
        gap = abs(best - inst.value(build_probe(g, star, w)))
        residuals[w] = gap - c_prime * math.sqrt(cfg.T) * w / lam_next
    violations = [w for w, r in residuals.items() if r > 0]
    if violations:
        log.warning("local smoothness assumption violated at widths %s (seed %s)", violations, seed)
    return {"c_prime": c_prime, "residuals": residuals, "violations": len(violations)}
