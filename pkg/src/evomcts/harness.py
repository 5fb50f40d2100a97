"""Experiment harness: agent grid, seeded runs, CSV outputs, CLI.

A batch is the cross product of agents, landscapes and run indices. Every
run draws its own RNG stream from a stable hash of (base seed, agent,
function, run index), so records never depend on execution order and the
output files are byte-identical across repeats, serial or parallel.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import logging
import os
import random
import sys
from concurrent.futures import FIRST_EXCEPTION, ProcessPoolExecutor, wait
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from .evo import EvoConfig, evolve_policy, fitness_budget
from .expr import Expr, parse_text, to_text, ucb1_seed
from .fop import FopConfig, FunctionId
from .harness_io import write_config_echo, write_csvs  # noqa: F401  (re-export)
from .metrics import (
    RunRecord,
    StageTracker,
    expansion_rate,
    summarize,
    terminal_states_reached,
)
from .mcts import (
    SearchTree,
    dump_tree,
    recommend_best_reward,
    recommend_most_visited,
    run_iterations,
)

log = logging.getLogger(__name__)

UCT_C_TOKENS = {
    "0.5": 0.5,
    "1": 1.0,
    "sqrt2": 2.0 ** 0.5,
    "2": 2.0,
    "3": 3.0,
}

DEFAULT_AGENTS = (
    "uct:0.5",
    "uct:1",
    "uct:sqrt2",
    "uct:2",
    "uct:3",
    "ea:2570",
    "ea:5000",
    "siea:2570",
    "siea:5000",
)

DEFAULT_FUNCTIONS = ("f1", "f2", "f3", "f4", "f5")


class ConfigError(ValueError):
    """Bad flags or agent specs; maps to exit code 1."""


class RunFailure(RuntimeError):
    """A single run raised; maps to exit code 2."""

    def __init__(self, agent: str, function: str, run_index: int, cause: str):
        super().__init__(f"run failed: agent={agent} function={function} run={run_index}: {cause}")
        self.agent = agent
        self.function = function
        self.run_index = run_index
        self.cause = cause


@dataclass(frozen=True)
class AgentSpec:
    """One column of the comparison grid.

    kind "uct" uses the UCB1 rule with constant c for the whole run; "ea"
    and "siea" evolve the policy online and then search for another budget
    iterations; "expr" runs a fixed user-supplied policy expression.
    """

    kind: str
    label: str
    c: Optional[float] = None
    budget: Optional[int] = None
    policy: Optional[Expr] = None


def parse_agent(token: str) -> AgentSpec:
    kind, sep, arg = token.partition(":")
    if kind == "uct":
        if arg not in UCT_C_TOKENS:
            raise ConfigError(
                f"bad agent {token!r}: uct constant must be one of "
                + ", ".join(sorted(UCT_C_TOKENS))
            )
        return AgentSpec("uct", f"uct:{arg}", c=UCT_C_TOKENS[arg])
    if kind in ("ea", "siea"):
        try:
            budget = int(arg)
        except ValueError:
            raise ConfigError(f"bad agent {token!r}: need an iteration count") from None
        if budget < 1:
            raise ConfigError(f"bad agent {token!r}: budget must be >= 1")
        return AgentSpec(kind, f"{kind}:{budget}", budget=budget)
    raise ConfigError(f"unknown agent kind in {token!r} (want uct:C, ea:N or siea:N)")


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved batch description; everything a run needs to replay."""

    functions: Tuple[FunctionId, ...]
    agents: Tuple[AgentSpec, ...]
    runs: int = 30
    base_seed: int = 0
    bins: int = 100
    alpha: float = 5.0
    beta: float = 10.0
    out_dir: str = "results"
    jobs: int = 1
    dump_trees: bool = False
    uct_iterations: int = 5000
    policy_expr: Optional[str] = None
    fop: FopConfig = FopConfig()
    evo: EvoConfig = EvoConfig()


def default_config(**overrides) -> ExperimentConfig:
    cfg = ExperimentConfig(
        functions=tuple(FunctionId(f) for f in DEFAULT_FUNCTIONS),
        agents=tuple(parse_agent(a) for a in DEFAULT_AGENTS),
    )
    return replace(cfg, **overrides) if overrides else cfg


def derive_seed(base_seed: int, agent: str, function: str, run_index: int) -> int:
    """Stable per-run seed; independent of batch composition and ordering."""
    key = f"{base_seed}|{agent}|{function}|{run_index}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big")


def run_one(cfg: ExperimentConfig, agent: AgentSpec, fid: FunctionId, run_index: int) -> RunRecord:
    """Execute one seeded run and measure it."""
    rng = random.Random(derive_seed(cfg.base_seed, agent.label, fid.value, run_index))
    evo_cfg = replace(cfg.evo, alpha=cfg.alpha, beta=cfg.beta)
    evolved_text = ""
    fitness_iters = 0

    if agent.kind in ("uct", "expr"):
        policy = agent.policy if agent.kind == "expr" else ucb1_seed(agent.c)
        total = cfg.uct_iterations
        tree = SearchTree(policy, cfg.fop)
        tracker = StageTracker(total, cfg.bins)
        run_iterations(tree, fid, total, rng, tracker)
    else:
        fitness_iters = fitness_budget(evo_cfg)
        total = fitness_iters + agent.budget
        warm = cfg.fop.branching
        if agent.budget < warm:
            raise ConfigError(
                f"agent {agent.label}: budget must cover the {warm} warm-up iterations"
            )
        tree = SearchTree(ucb1_seed(evo_cfg.c_init), cfg.fop)
        tracker = StageTracker(total, cfg.bins)
        # expand every root child first so selection statistics exist
        run_iterations(tree, fid, warm, rng, tracker)
        evolved = evolve_policy(
            tree, fid, evo_cfg, rng, semantic=(agent.kind == "siea"), stage_hooks=tracker
        )
        run_iterations(tree, fid, agent.budget - warm, rng, tracker)
        evolved_text = to_text(evolved)

    if tree.iterations_done != total:
        raise RuntimeError(
            f"budget accounting broke: {tree.iterations_done} != {total}"
        )
    mv_x, mv_value = recommend_most_visited(tree, fid, rng)
    br_x, br_value = recommend_best_reward(tree, fid, rng)

    if cfg.dump_trees:
        path = os.path.join(cfg.out_dir, "trees", f"{agent.label.replace(':', '_')}_{fid.value}_{run_index}.txt")
        with open(path, "w") as fh:
            fh.write(dump_tree(tree))

    return RunRecord(
        agent=agent.label,
        function=fid.value,
        seed=run_index,
        expansion_rate=expansion_rate(tree),
        terminal_states=terminal_states_reached(tree),
        most_visited_x=mv_x,
        most_visited_value=mv_value,
        best_reward_x=br_x,
        best_reward_value=br_value,
        iterations=tree.iterations_done,
        fitness_iterations=fitness_iters,
        evolved_policy=evolved_text,
        histograms=tuple(tuple(h) for h in tracker.histograms),
    )


def _run_task(args) -> RunRecord:
    cfg, agent, fid, run_index = args
    try:
        return run_one(cfg, agent, fid, run_index)
    except Exception as e:  # noqa: BLE001  (reported with run identity, exit 2)
        raise RunFailure(agent.label, fid.value, run_index, f"{type(e).__name__}: {e}") from e


def run_batch(cfg: ExperimentConfig) -> Tuple[List[RunRecord], list]:
    """Run the whole grid, write the output files, return records and summary."""
    if cfg.runs < 1:
        raise ConfigError("runs must be >= 1")
    if not cfg.agents or not cfg.functions:
        raise ConfigError("need at least one agent and one function")
    for agent in cfg.agents:
        if agent.kind in ("ea", "siea") and agent.budget < cfg.fop.branching:
            raise ConfigError(
                f"agent {agent.label}: budget must cover the "
                f"{cfg.fop.branching} warm-up iterations"
            )
    os.makedirs(cfg.out_dir, exist_ok=True)
    if cfg.dump_trees:
        os.makedirs(os.path.join(cfg.out_dir, "trees"), exist_ok=True)

    tasks = [
        (cfg, agent, fid, r)
        for agent in cfg.agents
        for fid in cfg.functions
        for r in range(cfg.runs)
    ]
    records: List[RunRecord] = []
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            futures = [pool.submit(_run_task, t) for t in tasks]
            try:
                step = max(1, len(futures) // 20)
                for i, fut in enumerate(futures):
                    records.append(fut.result())
                    if (i + 1) % step == 0 or i + 1 == len(futures):
                        log.info("%d/%d runs done", i + 1, len(futures))
            except RunFailure:
                for fut in futures:
                    fut.cancel()
                raise
    else:
        for i, task in enumerate(tasks):
            records.append(_run_task(task))
            if (i + 1) % max(1, len(tasks) // 20) == 0 or i + 1 == len(tasks):
                log.info("%d/%d runs done", i + 1, len(tasks))

    records.sort(key=lambda r: (r.agent, r.function, r.seed))
    summary = summarize(records)
    write_csvs(cfg.out_dir, records, summary)
    write_config_echo(cfg)
    return records, summary


# ---------------------------------------------------------------------------
# CLI

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit 2; we reserve that for run failures
        raise ConfigError(message)


def cli_parse(argv: Sequence[str]) -> ExperimentConfig:
    p = _Parser(
        prog="evomcts",
        description="Compare tree-search agents on the five interval-splitting landscapes.",
    )
    p.add_argument("--functions", default=",".join(DEFAULT_FUNCTIONS),
                   help="comma list of landscapes, e.g. f1,f3 (default: all five)")
    p.add_argument("--agents", default=None,
                   help="comma list of agents, e.g. uct:sqrt2,ea:2570 (default: the full grid)")
    p.add_argument("--runs", type=int, default=30, help="repetitions per cell (default 30)")
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--bins", type=int, default=100, help="histogram bins (default 100)")
    p.add_argument("--alpha", type=float, default=5.0, help="semantic window lower bound")
    p.add_argument("--beta", type=float, default=10.0, help="semantic window upper bound")
    p.add_argument("--out", default="results", metavar="DIR", help="output directory")
    p.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel worker processes")
    p.add_argument("--dump-trees", action="store_true", help="write a per-run tree dump")
    p.add_argument("--policy-expr", default=None, metavar="EXPR",
                   help="run a fixed selection policy given in prefix text")
    ns = p.parse_args(argv)

    try:
        functions = tuple(FunctionId(tok) for tok in _split(ns.functions))
    except ValueError as e:
        raise ConfigError(f"bad --functions: {e}") from None
    agents = tuple(parse_agent(tok) for tok in _split(ns.agents or ",".join(DEFAULT_AGENTS)))
    if ns.policy_expr is not None:
        try:
            policy = parse_text(ns.policy_expr)
        except ValueError as e:
            raise ConfigError(f"bad --policy-expr: {e}") from None
        custom = AgentSpec("expr", "expr", policy=policy)
        agents = (custom,) if ns.agents is None else agents + (custom,)
    if not functions:
        raise ConfigError("empty --functions")
    if not agents:
        raise ConfigError("empty --agents")
    if ns.runs < 1:
        raise ConfigError("--runs must be >= 1")
    if ns.bins < 1:
        raise ConfigError("--bins must be >= 1")
    if ns.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    if not 0.0 <= ns.alpha < ns.beta:
        raise ConfigError("need 0 <= alpha < beta")
    return ExperimentConfig(
        functions=functions,
        agents=agents,
        runs=ns.runs,
        base_seed=ns.seed,
        bins=ns.bins,
        alpha=ns.alpha,
        beta=ns.beta,
        out_dir=ns.out,
        jobs=ns.jobs,
        dump_trees=ns.dump_trees,
        policy_expr=ns.policy_expr,
    )


def _split(tokens: str) -> List[str]:
    return [t for t in (s.strip() for s in tokens.split(",")) if t]


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(
        level=logging.INFO, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        cfg = cli_parse(sys.argv[1:] if argv is None else argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    try:
        records, _ = run_batch(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except RunFailure as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {len(records)} runs to {cfg.out_dir}")
    return 0
