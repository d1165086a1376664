"""Batch command-line interface.

Verbs:
  train      train the agents required by the strategy list, save checkpoints
  evaluate   evaluate strategies on the test segment using saved checkpoints
  compare    full pipeline: train, evaluate, aggregate, t-test, emit outputs
  ttest      recompute metrics from emitted equity CSVs and run the t-tests
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import replace

from .agents import DqnAgent, Td3Agent
from .data import chronological_split, load_csv
from .harness import (
    ExperimentConfig,
    _write_atomic,
    build_table,
    compare_report,
    emit_outputs,
    emit_training_logs,
    evaluate_strategies,
    load_config,
    resolved_config,
    run_experiment,
    train_agent_for_seed,
)
from .stats import RunReport, return_pct, sharpe


def _parse_seeds(text: str) -> tuple[int, ...]:
    return tuple(int(s) for s in text.split(",") if s.strip())


def _parse_pairs(text: str) -> tuple[tuple[str, str], ...]:
    pairs = []
    for chunk in text.split(","):
        if not chunk.strip():
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise ValueError(f"pair {chunk!r} must look like x:y")
        pairs.append((parts[0].strip(), parts[1].strip()))
    return tuple(pairs)


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if getattr(args, "seeds", None):
        updates["seeds"] = _parse_seeds(args.seeds)
    if getattr(args, "output_dir", None):
        updates["output_dir"] = args.output_dir
    if getattr(args, "strategies", None):
        updates["strategies"] = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    if getattr(args, "workers", None):
        updates["workers"] = args.workers
    if getattr(args, "pairs", None):
        updates["ttest_pairs"] = _parse_pairs(args.pairs)
    if getattr(args, "alpha", None) is not None:
        updates["alpha"] = args.alpha
    return replace(cfg, **updates) if updates else cfg


def _checkpoint_path(cfg: ExperimentConfig, kind: str, seed: int) -> str:
    return os.path.join(cfg.output_dir, "checkpoints", f"{kind}_seed{seed}.npz")


def _needed_agents(strategies) -> list[str]:
    kinds = []
    if any(s in strategies for s in ("td3", "td3_sign", "td3_d3")):
        kinds.append("td3")
    if "tdqn" in strategies:
        kinds.append("tdqn")
    return kinds


def cmd_train(cfg: ExperimentConfig) -> int:
    prices = load_csv(cfg.dataset_path, cfg.columns or None)
    train_seg, valid_seg, _ = chronological_split(prices, cfg.split, window=cfg.env.window)
    kinds = _needed_agents(cfg.strategies)
    if not kinds:
        print("no trainable strategies requested; nothing to do", file=sys.stderr)
        return 2
    os.makedirs(os.path.join(cfg.output_dir, "checkpoints"), exist_ok=True)
    for seed in cfg.seeds:
        for kind in kinds:
            agent, log = train_agent_for_seed(cfg, kind, seed, train_seg, valid_seg)
            path = _checkpoint_path(cfg, kind, seed)
            agent.save(path)
            emit_training_logs({kind: log}, seed, cfg.output_dir)
            print(f"trained {kind} seed {seed} -> {path}")
    return 0


def cmd_evaluate(cfg: ExperimentConfig) -> int:
    prices = load_csv(cfg.dataset_path, cfg.columns or None)
    _, _, test_seg = chronological_split(prices, cfg.split, window=cfg.env.window)
    reports: dict[str, list[RunReport]] = {s: [] for s in cfg.strategies}
    for seed in cfg.seeds:
        agents = {}
        for kind in _needed_agents(cfg.strategies):
            path = _checkpoint_path(cfg, kind, seed)
            if not os.path.exists(path):
                print(f"missing checkpoint {path}; run `tradelab train` first", file=sys.stderr)
                return 2
            agent = (Td3Agent(cfg.env.window, cfg.td3, seed=seed) if kind == "td3"
                     else DqnAgent(cfg.env.window, cfg.dqn, seed=seed))
            agent.load(path)
            agents[kind] = agent
        for strategy, report in evaluate_strategies(cfg, agents, test_seg, seed).items():
            reports[strategy].append(report)
    table = build_table(reports, cfg.strategies)
    emit_outputs(table, reports, None, cfg.output_dir, resolved_config(cfg))
    _print_table(table)
    return 0


def cmd_compare(cfg: ExperimentConfig) -> int:
    table, _, ttests = run_experiment(cfg)
    _print_table(table)
    for row in ttests:
        r = row.result
        verdict = "reject H0" if r.reject else "keep H0"
        print(f"{row.pair} [{row.metric}]: t0={r.t0:.4f} df={r.df} p={r.p_value:.6g} ({verdict})")
    return 0


def cmd_ttest(cfg: ExperimentConfig) -> int:
    reports: dict[str, list[RunReport]] = {}
    strategies = {s for pair in cfg.ttest_pairs for s in pair}
    for strategy in sorted(strategies):
        runs = []
        for seed in cfg.seeds:
            path = os.path.join(cfg.output_dir, f"equity_{strategy}_{seed}.csv")
            if not os.path.exists(path):
                print(f"missing {path}; run `tradelab compare` or `evaluate` first", file=sys.stderr)
                return 2
            equity = _read_equity(path)
            daily = [(b - a) / a for a, b in zip(equity, equity[1:])]
            try:
                sharpe_val = sharpe(daily, cfg.env.annualization_days)
            except ValueError:
                sharpe_val = 0.0
            runs.append(RunReport(strategy=strategy, seed=seed, equity=tuple(equity),
                                  daily_returns=tuple(daily),
                                  return_pct=return_pct(equity[0], equity[-1]),
                                  sharpe=sharpe_val))
        reports[strategy] = runs
    ttests = compare_report(reports, cfg.ttest_pairs, cfg.alpha)
    lines = ["pair,metric,t0,df,p_value"]
    for row in ttests:
        r = row.result
        lines.append(f"{row.pair},{row.metric},{r.t0:.17g},{r.df},{r.p_value:.17g}")
        verdict = "reject H0" if r.reject else "keep H0"
        print(f"{row.pair} [{row.metric}]: t0={r.t0:.4f} df={r.df} p={r.p_value:.6g} ({verdict})")
    _write_atomic(os.path.join(cfg.output_dir, "ttest.csv"), "\n".join(lines) + "\n")
    return 0


def _read_equity(path) -> list[float]:
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [float(row["cash"]) for row in reader]


def _print_table(table) -> None:
    print(f"{'strategy':<12} {'return_pct':>12} {'sharpe':>10}")
    for row in table.rows:
        print(f"{row.strategy:<12} {row.return_pct:>12.4f} {row.sharpe:>10.4f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tradelab",
                                     description="Daily-trading RL laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("train", "train agents and save checkpoints"),
        ("evaluate", "evaluate strategies from saved checkpoints"),
        ("compare", "full pipeline: train, evaluate, compare, t-test"),
        ("ttest", "paired t-tests from emitted equity curves"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON experiment config")
        p.add_argument("--seeds", help="comma-separated seed list override")
        p.add_argument("--output-dir", help="output directory override")
        if name in ("train", "evaluate", "compare"):
            p.add_argument("--strategies", help="comma-separated strategy list override")
        if name == "compare":
            p.add_argument("--workers", type=int, help="parallel seed workers")
        if name == "ttest":
            p.add_argument("--pairs", help="comma-separated x:y strategy pairs")
            p.add_argument("--alpha", type=float, help="significance level")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        handler = {
            "train": cmd_train,
            "evaluate": cmd_evaluate,
            "compare": cmd_compare,
            "ttest": cmd_ttest,
        }[args.command]
        return handler(cfg)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
