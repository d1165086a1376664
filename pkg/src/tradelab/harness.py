"""Batch experiment harness: train, evaluate, compare, test.

One experiment = one dataset, one chronological split, one agent
configuration, a strategy list, and a seed list. Per seed the harness trains
the required agents on the train segment, selects the checkpoint with the
best validation Sharpe, evaluates everything once on the test segment, and
aggregates the per-seed reports into a comparison table plus paired t-tests.

All artifacts are plain CSV/JSON written atomically; identical configs
produce byte-identical numeric outputs.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .agents import DecaySchedule, DqnAgent, DqnConfig, Td3Agent, Td3Config, train
from .baselines import (
    KINDS,
    StrategySpec,
    act,
    d3_discretize,
    holds_position,
    is_random,
    sign_discretize,
)
from .data import SplitSpec, chronological_split, load_csv
from .env import EnvConfig, TradingEnv
from .stats import RunReport, TTestResult, paired_ttest_one_sided, return_pct, sharpe

AGENT_STRATEGIES = ("td3", "td3_sign", "td3_d3", "tdqn")
ALL_STRATEGIES = AGENT_STRATEGIES + KINDS

DEFAULT_STRATEGIES = ALL_STRATEGIES
DEFAULT_TTEST_PAIRS = (("td3_sign", "td3"), ("td3_d3", "td3"))

# stable per-strategy stream tags so evaluation rngs never collide
EVAL_STREAM = {kind: i for i, kind in enumerate(ALL_STRATEGIES)}


@dataclass(frozen=True)
class ExperimentConfig:
    dataset_path: str
    columns: dict = field(default_factory=dict)
    split: SplitSpec = field(default_factory=SplitSpec)
    env: EnvConfig = field(default_factory=EnvConfig)
    td3: Td3Config = field(default_factory=Td3Config)
    dqn: DqnConfig = field(default_factory=DqnConfig)
    episodes: int = 50
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES
    seeds: tuple[int, ...] = (0,)
    ma_window: int = 20
    output_dir: str = "out"
    ttest_pairs: tuple[tuple[str, str], ...] = DEFAULT_TTEST_PAIRS
    alpha: float = 0.01
    workers: int = 1

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be unique")
        unknown = [s for s in self.strategies if s not in ALL_STRATEGIES]
        if unknown:
            raise ValueError(f"unknown strategies {unknown}; expected among {ALL_STRATEGIES}")
        for pair in self.ttest_pairs:
            if len(pair) != 2 or any(s not in ALL_STRATEGIES for s in pair):
                raise ValueError(f"invalid t-test pair {pair}")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        # the moving average must be defined at the first decision bar
        if any(s in self.strategies for s in ("mrma", "tfma")) and self.ma_window > self.env.window:
            raise ValueError(
                f"mrma/tfma with ma_window {self.ma_window} need env.window >= {self.ma_window}"
            )


def _schedule_from(d: dict, default: DecaySchedule) -> DecaySchedule:
    return DecaySchedule(
        initial=d.get("initial", default.initial),
        final=d.get("final", default.final),
        decay=d.get("decay", default.decay),
    )


def _build_td3(d: dict) -> Td3Config:
    base = Td3Config()
    kwargs = {}
    for key in ("gamma", "tau", "policy_delay", "batch_size", "warmup_episodes",
                "action_low", "action_high", "actor_lr", "critic_lr",
                "grad_clip_norm", "buffer_capacity"):
        if key in d:
            kwargs[key] = d[key]
    for key in ("exploration_noise", "policy_noise", "noise_clip"):
        if key in d:
            kwargs[key] = _schedule_from(d[key], getattr(base, key))
    for key in ("actor_hidden", "critic_hidden"):
        if key in d:
            kwargs[key] = tuple(d[key])
    return Td3Config(**kwargs)


def _build_dqn(d: dict) -> DqnConfig:
    kwargs = {}
    for key in ("gamma", "target_sync", "batch_size", "learning_rate",
                "buffer_capacity", "warmup_episodes", "dropout"):
        if key in d:
            kwargs[key] = d[key]
    if "epsilon" in d:
        kwargs["epsilon"] = _schedule_from(d["epsilon"], DqnConfig().epsilon)
    if "actions" in d:
        kwargs["actions"] = tuple(d["actions"])
    if "hidden" in d:
        kwargs["hidden"] = tuple(d["hidden"])
    return DqnConfig(**kwargs)


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a plain (JSON-shaped) dict."""
    dataset = raw.get("dataset", {})
    if "path" not in dataset:
        raise ValueError("config must name a dataset path under dataset.path")
    split_d = raw.get("split", {})
    env_d = raw.get("env", {})
    ttest_d = raw.get("ttest", {})
    return ExperimentConfig(
        dataset_path=dataset["path"],
        columns=dict(dataset.get("columns", {})),
        split=SplitSpec(
            train_frac=split_d.get("train_frac", 0.8),
            valid_frac=split_d.get("valid_frac", 0.1),
            test_frac=split_d.get("test_frac", 0.1),
        ),
        env=EnvConfig(
            window=env_d.get("window", 30),
            transaction_cost=env_d.get("transaction_cost", 0.0),
            initial_cash=env_d.get("initial_cash", 100_000.0),
            annualization_days=env_d.get("annualization_days", 252),
        ),
        td3=_build_td3(raw.get("td3", {})),
        dqn=_build_dqn(raw.get("dqn", {})),
        episodes=raw.get("episodes", 50),
        strategies=tuple(raw.get("strategies", DEFAULT_STRATEGIES)),
        seeds=tuple(raw.get("seeds", (0,))),
        ma_window=raw.get("ma_window", 20),
        output_dir=raw.get("output_dir", "out"),
        ttest_pairs=tuple(tuple(p) for p in ttest_d.get("pairs", DEFAULT_TTEST_PAIRS)),
        alpha=ttest_d.get("alpha", 0.01),
        workers=raw.get("workers", 1),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON config: {exc}") from None
    return config_from_dict(raw)


def resolved_config(cfg: ExperimentConfig) -> dict:
    """The fully-resolved configuration, for echoing into the output dir."""
    out = asdict(cfg)
    out["split"] = asdict(cfg.split)
    out["env"] = asdict(cfg.env)
    out["td3"] = asdict(cfg.td3)
    out["dqn"] = asdict(cfg.dqn)
    return out


# -- evaluation ------------------------------------------------------------


def evaluate_policy(policy, segment, env_config: EnvConfig, strategy: str, seed: int,
                    hold_fees: bool = False) -> RunReport:
    """Run one chronological pass of ``policy`` over ``segment``.

    ``policy(t, obs)`` returns the action for bar index t. With ``hold_fees``
    the configured transaction cost applies only on the first and final step
    (single open / single close emulation for the hold strategies).
    """
    env = TradingEnv(segment, env_config)
    state, obs = env.reset()
    dates = segment.dates()
    equity = [state.cash]
    equity_dates = [dates[state.t]]
    actions: list[float] = []
    action_dates = []
    daily: list[float] = []
    while not state.terminal:
        action = float(policy(state.t, obs))
        tc = None
        if hold_fees and state.t not in (env.first_t, env.last_t):
            tc = 0.0
        prev_cash = state.cash
        outcome = env.step(action, tc=tc)
        actions.append(action)
        action_dates.append(dates[state.t])
        state, obs = outcome.next_state, outcome.observation
        equity.append(state.cash)
        equity_dates.append(dates[state.t])
        daily.append((state.cash - prev_cash) / prev_cash)
    try:
        sharpe_val = sharpe(daily, env_config.annualization_days)
    except ValueError:
        sharpe_val = 0.0  # degenerate run (constant equity): no risk, no ratio
    return RunReport(
        strategy=strategy,
        seed=seed,
        dates=tuple(equity_dates),
        equity=tuple(equity),
        daily_returns=tuple(daily),
        actions=tuple(actions),
        return_pct=return_pct(equity[0], equity[-1]),
        sharpe=sharpe_val,
        action_dates=tuple(action_dates),
    )


def _validation_scorer(env_config: EnvConfig, valid_segment):
    """Score an agent by its validation Sharpe; -inf when undefined."""

    def score(agent) -> float:
        report = evaluate_policy(lambda t, obs: agent.policy(obs), valid_segment,
                                 env_config, strategy="validation", seed=-1)
        try:
            return sharpe(report.daily_returns, env_config.annualization_days)
        except ValueError:
            return -math.inf

    return score


def train_agent_for_seed(cfg: ExperimentConfig, kind: str, seed: int, train_segment, valid_segment):
    """Train one agent with validation-Sharpe checkpoint selection."""
    window = cfg.env.window
    if kind == "td3":
        agent = Td3Agent(window, cfg.td3, seed=seed)
    elif kind == "tdqn":
        agent = DqnAgent(window, cfg.dqn, seed=seed)
    else:
        raise ValueError(f"not a trainable strategy: {kind!r}")
    score = _validation_scorer(cfg.env, valid_segment)
    best = {"score": -math.inf, "snapshot": None}

    def on_episode_end(a, episode):
        s = score(a)
        if s > best["score"]:
            best["score"] = s
            best["snapshot"] = a.snapshot()

    log = train(agent, train_segment, cfg.env, cfg.episodes, seed, on_episode_end=on_episode_end)
    if best["snapshot"] is not None:
        agent.restore(best["snapshot"])
    return agent, log


def agent_policy(strategy: str, agents: dict):
    if strategy in ("td3", "td3_sign", "td3_d3"):
        agent = agents["td3"]
        if strategy == "td3":
            return lambda t, obs: agent.policy(obs)
        wrap = sign_discretize if strategy == "td3_sign" else d3_discretize
        return lambda t, obs: wrap(agent.policy(obs))
    agent = agents["tdqn"]
    return lambda t, obs: agent.policy(obs)


def baseline_policy(spec: StrategySpec, segment, rng):
    return lambda t, obs: act(spec, t, segment, rng)


def evaluate_strategies(cfg: ExperimentConfig, agents: dict, segment, seed: int) -> dict[str, RunReport]:
    """One test-segment pass per requested strategy for one seed."""
    reports: dict[str, RunReport] = {}
    for strategy in cfg.strategies:
        if strategy in AGENT_STRATEGIES:
            policy = agent_policy(strategy, agents)
            hold = False
        else:
            spec = StrategySpec(kind=strategy, ma_window=cfg.ma_window,
                                seed=seed if is_random(strategy) else None)
            rng = (np.random.default_rng([seed, EVAL_STREAM[strategy]])
                   if is_random(strategy) else None)
            policy = baseline_policy(spec, segment, rng)
            hold = holds_position(strategy)
        reports[strategy] = evaluate_policy(policy, segment, cfg.env, strategy, seed,
                                            hold_fees=hold)
    return reports


def run_seed(cfg: ExperimentConfig, seed: int) -> dict:
    """Everything one seed contributes: trained agents evaluated on the test segment."""
    prices = load_csv(cfg.dataset_path, cfg.columns or None)
    train_seg, valid_seg, test_seg = chronological_split(prices, cfg.split, window=cfg.env.window)

    agents: dict[str, object] = {}
    logs: dict[str, list[dict]] = {}
    if any(s in cfg.strategies for s in ("td3", "td3_sign", "td3_d3")):
        agents["td3"], logs["td3"] = train_agent_for_seed(cfg, "td3", seed, train_seg, valid_seg)
    if "tdqn" in cfg.strategies:
        agents["tdqn"], logs["tdqn"] = train_agent_for_seed(cfg, "tdqn", seed, train_seg, valid_seg)

    reports = evaluate_strategies(cfg, agents, test_seg, seed)
    return {"reports": reports, "agents": agents, "logs": logs}


# -- aggregation -------------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    strategy: str
    return_pct: float
    sharpe: float


@dataclass(frozen=True)
class ComparisonTable:
    """Mean metrics per strategy plus the per-seed distributions behind them."""

    rows: tuple[ComparisonRow, ...]
    distributions: dict[str, tuple[tuple[float, float], ...]]


def build_table(reports: dict[str, list[RunReport]], order) -> ComparisonTable:
    rows = []
    dists = {}
    for strategy in order:
        runs = reports[strategy]
        rows.append(ComparisonRow(
            strategy=strategy,
            return_pct=float(np.mean([r.return_pct for r in runs])),
            sharpe=float(np.mean([r.sharpe for r in runs])),
        ))
        dists[strategy] = tuple((r.return_pct, r.sharpe) for r in runs)
    return ComparisonTable(rows=tuple(rows), distributions=dists)


@dataclass(frozen=True)
class TTestRow:
    pair: str
    metric: str
    result: TTestResult


def compare_report(reports: dict[str, list[RunReport]], pairs, alpha: float) -> list[TTestRow]:
    """Paired one-sided tests per (pair, metric); x is the first id of each pair."""
    rows = []
    for x_id, y_id in pairs:
        xs, ys = reports.get(x_id), reports.get(y_id)
        if xs is None or ys is None:
            raise ValueError(f"t-test pair ({x_id}, {y_id}) references unevaluated strategies")
        if len(xs) != len(ys):
            raise ValueError(f"misaligned report lists for ({x_id}, {y_id}): {len(xs)} vs {len(ys)}")
        if [r.seed for r in xs] != [r.seed for r in ys]:
            raise ValueError(f"report lists for ({x_id}, {y_id}) are not seed-aligned")
        for metric in ("return_pct", "sharpe"):
            x = [getattr(r, metric) for r in xs]
            y = [getattr(r, metric) for r in ys]
            rows.append(TTestRow(
                pair=f"{x_id}_vs_{y_id}",
                metric=metric,
                result=paired_ttest_one_sided(x, y, alpha=alpha),
            ))
    return rows


# -- emission ----------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_atomic(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def emit_outputs(table: ComparisonTable, reports: dict[str, list[RunReport]],
                 ttests: list[TTestRow] | None, outdir, resolved: dict | None = None) -> list[str]:
    """Write comparison.csv, per-run equity/action CSVs, ttest.csv, config echo."""
    os.makedirs(outdir, exist_ok=True)
    written = []

    lines = ["strategy,return_pct,sharpe"]
    for row in table.rows:
        lines.append(f"{row.strategy},{_fmt(row.return_pct)},{_fmt(row.sharpe)}")
    path = os.path.join(outdir, "comparison.csv")
    _write_atomic(path, "\n".join(lines) + "\n")
    written.append(path)

    for strategy, runs in reports.items():
        for report in runs:
            eq = ["date,cash"]
            eq += [f"{d.isoformat()},{_fmt(c)}" for d, c in zip(report.dates, report.equity)]
            path = os.path.join(outdir, f"equity_{strategy}_{report.seed}.csv")
            _write_atomic(path, "\n".join(eq) + "\n")
            written.append(path)

            ac = ["date,action"]
            ac += [f"{d.isoformat()},{_fmt(a)}" for d, a in zip(report.action_dates, report.actions)]
            path = os.path.join(outdir, f"actions_{strategy}_{report.seed}.csv")
            _write_atomic(path, "\n".join(ac) + "\n")
            written.append(path)

    if ttests:
        lines = ["pair,metric,t0,df,p_value"]
        for row in ttests:
            r = row.result
            lines.append(f"{row.pair},{row.metric},{_fmt(r.t0)},{r.df},{_fmt(r.p_value)}")
        path = os.path.join(outdir, "ttest.csv")
        _write_atomic(path, "\n".join(lines) + "\n")
        written.append(path)

    if resolved is not None:
        path = os.path.join(outdir, "resolved_config.json")
        _write_atomic(path, json.dumps(resolved, indent=2, sort_keys=True) + "\n")
        written.append(path)
    return written


def emit_training_logs(logs: dict, seed: int, outdir) -> None:
    os.makedirs(outdir, exist_ok=True)
    for kind, records in logs.items():
        lines = ["episode,warmup,total_reward,final_cash,mean_loss"]
        for rec in records:
            lines.append(
                f"{rec['episode']},{int(rec['warmup'])},{_fmt(rec['total_reward'])},"
                f"{_fmt(rec['final_cash'])},{_fmt(rec['mean_loss'])}"
            )
        _write_atomic(os.path.join(outdir, f"training_log_{kind}_{seed}.csv"),
                      "\n".join(lines) + "\n")


# -- the full experiment -------------------------------------------------------


def _run_seed_task(args):
    cfg, seed = args
    return seed, run_seed(cfg, seed)


def run_experiment(cfg: ExperimentConfig):
    """Train, select, evaluate, aggregate, and emit everything.

    Returns (table, reports, ttests) where reports maps strategy id to the
    seed-ordered list of RunReports.
    """
    if not os.path.exists(cfg.dataset_path):
        raise FileNotFoundError(f"no such data file: {cfg.dataset_path}")

    tasks = [(cfg, seed) for seed in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = dict(pool.map(_run_seed_task, tasks))
    else:
        results = dict(map(_run_seed_task, tasks))

    reports: dict[str, list[RunReport]] = {s: [] for s in cfg.strategies}
    ckpt_dir = os.path.join(cfg.output_dir, "checkpoints")
    for seed in cfg.seeds:  # seed order, regardless of completion order
        outcome = results[seed]
        for strategy in cfg.strategies:
            reports[strategy].append(outcome["reports"][strategy])
        if outcome["agents"]:
            os.makedirs(ckpt_dir, exist_ok=True)
            for kind, agent in outcome["agents"].items():
                agent.save(os.path.join(ckpt_dir, f"{kind}_seed{seed}.npz"))
        emit_training_logs(outcome["logs"], seed, cfg.output_dir)

    table = build_table(reports, cfg.strategies)
    pairs = [p for p in cfg.ttest_pairs if p[0] in cfg.strategies and p[1] in cfg.strategies]
    ttests = compare_report(reports, pairs, cfg.alpha) if pairs and len(cfg.seeds) >= 2 else []
    emit_outputs(table, reports, ttests, cfg.output_dir, resolved_config(cfg))
    return table, reports, ttests
