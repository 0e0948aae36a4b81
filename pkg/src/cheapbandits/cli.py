"""Command-line front end: ``cheapbandits {gen-graph,ingest,run,report}``.

Exit status: 0 on success, 1 when a run fails verification, 2 for bad
configuration or unreadable input, 3 for numeric failures and invariant
breaches raised during a run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .environment import write_rewards_csv
from .errors import ConfigError, InvariantBreach, NumericFailure
from .graph import write_edge_list
from .harness import (
    COST_MODELS,
    ExperimentConfig,
    aggregate,
    load_config,
    make_graph,
    read_trajectories_csv,
    run_experiment,
    verify_trajectory,
    write_summary_csv,
    write_trajectories_csv,
)
from .ingest import ingest, read_points_csv

log = logging.getLogger("cheapbandits")

PATH_KEYS = ("graph_path", "reward_path", "input")
INGEST_DEFAULTS = {"clusters": 2000, "k_nn": 10, "seed": 0}


def _read_config(path: str | None) -> dict:
    if path is None:
        raise ConfigError("--config is required for this command")
    raw = load_config(path)
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    base = Path(path).resolve().parent
    for key in PATH_KEYS:
        if isinstance(raw.get(key), str) and not Path(raw[key]).is_absolute():
            raw[key] = str(base / raw[key])
    return raw


def _experiment_config(args) -> ExperimentConfig:
    raw = _read_config(args.config)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.runs is not None:
        raw["runs"] = args.runs
    if args.policies:
        raw["policies"] = [p for p in args.policies.split(",") if p]
    if args.cost_model:
        raw["cost_model"] = args.cost_model
    try:
        return ExperimentConfig.from_dict(raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_gen_graph(args, out: Path) -> int:
    cfg = _experiment_config(args)
    g = make_graph(cfg, cfg.graph_seed if cfg.graph_seed is not None else cfg.seed)
    path = out / "graph.edges"
    write_edge_list(g, path)
    log.info("wrote %s (%d nodes, %d edges)", path, g.num_nodes, len(g.edges))
    return 0


def cmd_ingest(args, out: Path) -> int:
    raw = {**INGEST_DEFAULTS, **_read_config(args.config)}
    if args.seed is not None:
        raw["seed"] = args.seed
    for key in ("input", "target_label"):
        if key not in raw:
            raise ConfigError(f"missing key {key!r}")
    ps = read_points_csv(raw["input"])
    res = ingest(ps, int(raw["clusters"]), int(raw["k_nn"]), raw["target_label"], raw["seed"])
    write_edge_list(res.graph, out / "graph.edges")
    write_rewards_csv(res.rewards, out / "rewards.csv")
    log.info("wrote %s and %s", out / "graph.edges", out / "rewards.csv")
    return 0


def _summarize(trajectories, out: Path) -> None:
    from .plotting import plot_summary

    summary = aggregate(trajectories)
    write_summary_csv(summary, out / "summary.csv")
    plot_summary(summary, out)


def cmd_run(args, out: Path) -> int:
    cfg = _experiment_config(args)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
    trajectories = run_experiment(cfg, progress=lambda s: log.debug("seed %d done", s))
    write_trajectories_csv(trajectories, out / "trajectories.csv")
    _summarize(trajectories, out)
    reports = [verify_trajectory(tr, cfg) for tr in trajectories]
    failed = [r for r in reports if not r["ok"]]
    (out / "verification.json").write_text(
        json.dumps({"ok": not failed, "trajectories": reports}, indent=2, default=str) + "\n"
    )
    if failed:
        for r in failed:
            log.error("verification failed: %s seed %s", r["policy"], r["seed"])
        return 1
    log.info("%d trajectories verified; outputs in %s", len(reports), out)
    return 0


def cmd_report(args, out: Path) -> int:
    paths = args.trajectories or [str(out / "trajectories.csv")]
    trajectories = []
    for p in paths:
        trajectories.extend(read_trajectories_csv(p))
    _summarize(trajectories, out)
    log.info("wrote %s", out / "summary.csv")
    return 0


COMMANDS = {"gen-graph": cmd_gen_graph, "ingest": cmd_ingest, "run": cmd_run, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cheapbandits", description=__doc__.splitlines()[0])
    ap.add_argument("verb", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--out", default=".", help="output directory (created if absent)")
    ap.add_argument("--seed", type=int, help="override the base seed")
    ap.add_argument("--policies", help="comma-separated subset of CheapUCB,SpectralUCB,LinUCB")
    ap.add_argument("--runs", type=int, help="override the number of runs")
    ap.add_argument("--cost-model", choices=COST_MODELS)
    ap.add_argument("--trajectories", action="append", help="trajectory CSV for 'report' (repeatable)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.verb](args, out)
    except (ConfigError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2
    except (NumericFailure, InvariantBreach) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
