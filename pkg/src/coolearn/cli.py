"""Experiment runner: validates experiment configs, executes learner
comparisons and projection benchmarks, and writes deterministic CSV plus a
bound-certificate report.

Config files are YAML (keys documented in the repository README).  The CSV
contract: columns experiment,learner,seed,t,regret,utility_gain,projected,
gap,proj_time_us with one row per (learner, seed, round), cumulative regret
and utility columns, stable ordering, and %.9g number formatting.  Rows with
seed "mean" carry per-round means across seeds.

Exit codes: 0 success, 1 invalid config or I/O failure, 2 a run's observed
linearized regret exceeded its certificate (implementation fault detector).
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .core import LossKind, LossSpec, cumulative_regret, num_pairs
from .constraints import set_norm
from .env import (
    CostModel,
    HemimetricWorld,
    MarketScenario,
    OrderingPolicy,
    PairEnvironment,
)
from .hemimetric import matrix_from_pair_values, project_hemimetric
from .learners import (
    AccuracyRule,
    LearnerConfig,
    ProjectionSchedule,
    ScheduleMode,
    expected_regret_bound,
    iol_bound,
    run,
)

EXPERIMENT_KINDS = (
    "figure2a",
    "figure2b",
    "figure2c",
    "sweep_alpha",
    "sweep_beta",
    "projection_runtime",
    "market",
)
LEARNER_NAMES = ("OL", "IOL", "CoOL", "uwCoOL")
CSV_HEADER = "experiment,learner,seed,t,regret,utility_gain,projected,gap,proj_time_us"

#: offset separating the projection-indicator stream from environment seeding
XI_SEED_SALT = 1_000_003


@dataclass
class ExperimentConfig:
    experiment: str
    T: int = 500
    seeds: list = field(default_factory=lambda: list(range(20)))
    learners: list = field(default_factory=lambda: ["IOL", "CoOL"])
    n: int = 10
    intra: float = 1.0
    inter: float = 9.0
    r: float = 10.0
    loss_kind: LossKind = LossKind.CONVEX_SURROGATE
    u: float = 10.0
    delta: float = 10.0
    eta: Optional[float] = None
    schedule_mode: ScheduleMode = ScheduleMode.ALWAYS
    alpha: float = 1.0
    every_k: int = 1
    accuracy: AccuracyRule = AccuracyRule.EXACT
    c_beta: float = 1.0
    beta: float = 1.0
    alpha_grid: list = field(default_factory=lambda: [0.0, 0.1, 0.25, 0.5, 1.0])
    beta_grid: list = field(default_factory=lambda: [0.5, 0.85, 0.95, 1.0])
    batch_size: int = 5
    problem: int = 0
    num_instances: int = 60
    market_n_items: int = 20
    market_u: float = 40.0
    market_delta: float = 20.0
    market_r: float = 40.0
    market_cost_model: CostModel = CostModel.DETERMINISTIC
    market_explore_only: bool = True
    initial_weight: Optional[float] = None  # None: box midpoint; market: 0
    max_projection_sweeps: int = 1000

    def loss(self) -> LossSpec:
        if self.experiment == "market":
            return LossSpec(self.loss_kind, self.market_u, self.market_delta)
        return LossSpec(self.loss_kind, self.u, self.delta)


def _expect(errors, cond, msg):
    if not cond:
        errors.append(msg)


def parse_config(raw: dict) -> tuple[Optional[ExperimentConfig], list[str]]:
    """Structural validation; reports every violation rather than the first."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        return None, ["config root must be a mapping"]
    kind = raw.get("experiment")
    _expect(errors, kind in EXPERIMENT_KINDS, f"experiment must be one of {EXPERIMENT_KINDS}, got {kind!r}")
    cfg = ExperimentConfig(experiment=kind if kind in EXPERIMENT_KINDS else "figure2a")

    if "T" in raw:
        _expect(errors, isinstance(raw["T"], int) and raw["T"] >= 0, f"T must be a nonnegative integer, got {raw['T']!r}")
        if isinstance(raw["T"], int):
            cfg.T = raw["T"]
    if "seeds" in raw:
        seeds = raw["seeds"]
        ok = isinstance(seeds, list) and seeds and all(isinstance(s, int) for s in seeds)
        _expect(errors, ok, "seeds must be a nonempty list of integers")
        if ok:
            _expect(errors, len(set(seeds)) == len(seeds), "seeds must be distinct")
            cfg.seeds = seeds
    if "learners" in raw:
        ls = raw["learners"]
        ok = isinstance(ls, list) and ls
        _expect(errors, ok, "learners must be a nonempty list")
        if ok:
            for name in ls:
                _expect(errors, name in LEARNER_NAMES, f"unknown learner {name!r}; expected one of {LEARNER_NAMES}")
            cfg.learners = ls

    world = raw.get("world", {})
    if world:
        _expect(errors, isinstance(world, dict), "world must be a mapping")
    if isinstance(world, dict):
        cfg.n = world.get("n", cfg.n)
        cfg.intra = float(world.get("intra", cfg.intra))
        cfg.inter = float(world.get("inter", cfg.inter))
        cfg.r = float(world.get("r", cfg.r))
        _expect(errors, isinstance(cfg.n, int) and cfg.n >= 2 and cfg.n % 2 == 0, f"world.n must be an even integer >= 2, got {cfg.n!r}")
        _expect(errors, cfg.r > 0, f"world.r must be > 0, got {cfg.r}")
        _expect(errors, 0 <= cfg.intra <= cfg.r and 0 <= cfg.inter <= cfg.r, "world intra/inter costs must lie in [0, r]")
        if "K" in world:
            _expect(
                errors,
                world["K"] == num_pairs(cfg.n),
                f"world.K={world['K']} inconsistent with n={cfg.n}: pair worlds need K = n^2 - n = {num_pairs(cfg.n)}",
            )

    loss = raw.get("loss", {})
    if isinstance(loss, dict):
        cfg.u = float(loss.get("u", cfg.u))
        cfg.delta = float(loss.get("delta", cfg.delta))
        kind_name = loss.get("kind", "surrogate")
        _expect(errors, kind_name in ("surrogate", "true"), f"loss.kind must be surrogate|true, got {kind_name!r}")
        if kind_name == "true":
            cfg.loss_kind = LossKind.TRUE_INCENTIVE
        _expect(errors, cfg.u >= 0, f"loss.u must be >= 0, got {cfg.u}")
        _expect(errors, cfg.delta > 0, f"loss.delta must be > 0, got {cfg.delta}")

    if "eta" in raw and raw["eta"] is not None:
        _expect(errors, isinstance(raw["eta"], (int, float)) and raw["eta"] > 0, f"eta must be > 0, got {raw['eta']!r}")
        cfg.eta = float(raw["eta"])

    sched = raw.get("schedule", {})
    if isinstance(sched, dict) and sched:
        mode = sched.get("mode", "always")
        modes = {m.value: m for m in ScheduleMode}
        _expect(errors, mode in modes, f"schedule.mode must be one of {sorted(modes)}, got {mode!r}")
        if mode in modes:
            cfg.schedule_mode = modes[mode]
        cfg.alpha = float(sched.get("alpha", cfg.alpha))
        _expect(errors, 0.0 <= cfg.alpha <= 1.0, f"alpha out of [0,1]: {cfg.alpha}")
        cfg.every_k = sched.get("k", cfg.every_k)
        _expect(errors, isinstance(cfg.every_k, int) and cfg.every_k >= 1, f"schedule.k must be an integer >= 1, got {cfg.every_k!r}")
        acc = sched.get("accuracy", "exact")
        _expect(errors, acc in ("exact", "decaying"), f"schedule.accuracy must be exact|decaying, got {acc!r}")
        if acc == "decaying":
            cfg.accuracy = AccuracyRule.DECAYING
        cfg.c_beta = float(sched.get("c_beta", cfg.c_beta))
        cfg.beta = float(sched.get("beta", cfg.beta))
        _expect(errors, cfg.c_beta >= 0, f"c_beta must be >= 0, got {cfg.c_beta}")
        _expect(errors, 0.0 <= cfg.beta <= 1.0, f"beta out of [0,1]: {cfg.beta}")

    if "alpha_grid" in raw:
        grid = raw["alpha_grid"]
        ok = isinstance(grid, list) and grid
        _expect(errors, ok, "alpha_grid must be a nonempty list")
        if ok:
            for a in grid:
                _expect(errors, isinstance(a, (int, float)) and 0.0 <= a <= 1.0, f"alpha out of [0,1]: {a}")
            cfg.alpha_grid = [float(a) for a in grid]
    if "beta_grid" in raw:
        grid = raw["beta_grid"]
        ok = isinstance(grid, list) and grid
        _expect(errors, ok, "beta_grid must be a nonempty list")
        if ok:
            for b in grid:
                _expect(errors, isinstance(b, (int, float)) and 0.0 <= b <= 1.0, f"beta out of [0,1]: {b}")
            cfg.beta_grid = [float(b) for b in grid]
    if "batch_size" in raw:
        _expect(errors, isinstance(raw["batch_size"], int) and raw["batch_size"] >= 1, f"batch_size must be an integer >= 1, got {raw['batch_size']!r}")
        if isinstance(raw["batch_size"], int):
            cfg.batch_size = raw["batch_size"]
    if "problem" in raw:
        _expect(errors, isinstance(raw["problem"], int) and raw["problem"] >= 0, f"problem must be a nonnegative integer, got {raw['problem']!r}")
        if isinstance(raw["problem"], int):
            cfg.problem = raw["problem"]
            _expect(errors, raw["problem"] < num_pairs(cfg.n), f"problem {raw['problem']} out of range for K={num_pairs(cfg.n)}")
    if "num_instances" in raw:
        _expect(errors, isinstance(raw["num_instances"], int) and raw["num_instances"] >= 1, "num_instances must be an integer >= 1")
        if isinstance(raw["num_instances"], int):
            cfg.num_instances = raw["num_instances"]

    market = raw.get("market", {})
    if isinstance(market, dict) and market:
        cfg.market_n_items = market.get("n_items", cfg.market_n_items)
        cfg.market_u = float(market.get("u", cfg.market_u))
        cfg.market_delta = float(market.get("delta", cfg.market_delta))
        cfg.market_r = float(market.get("r", cfg.market_r))
        _expect(errors, isinstance(cfg.market_n_items, int) and cfg.market_n_items >= 2 and cfg.market_n_items % 2 == 0,
                f"market.n_items must be an even integer >= 2, got {cfg.market_n_items!r}")
        _expect(errors, min(cfg.market_u, cfg.market_delta, cfg.market_r) > 0, "market u, delta, r must be > 0")
        model = market.get("cost_model", "deterministic")
        _expect(errors, model in ("deterministic", "stochastic"), f"market.cost_model must be deterministic|stochastic, got {model!r}")
        if model == "stochastic":
            cfg.market_cost_model = CostModel.STOCHASTIC
        cfg.market_explore_only = bool(market.get("explore_only", True))
        if "K" in market:
            _expect(errors, market["K"] == num_pairs(cfg.market_n_items),
                    f"market.K={market['K']} inconsistent with n_items={cfg.market_n_items}: expected {num_pairs(cfg.market_n_items)}")

    if "initial_weight" in raw and raw["initial_weight"] is not None:
        _expect(errors, isinstance(raw["initial_weight"], (int, float)),
                f"initial_weight must be a number, got {raw['initial_weight']!r}")
        if isinstance(raw["initial_weight"], (int, float)):
            cfg.initial_weight = float(raw["initial_weight"])
    elif cfg.experiment == "market":
        # incentive offers start at zero in the market scenario
        cfg.initial_weight = 0.0

    if errors:
        return None, errors
    return cfg, []


def validate_config(path: str | Path) -> tuple[Optional[ExperimentConfig], list[str]]:
    """Load and validate a config file; returns (config, errors)."""
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        return None, [f"cannot read config: {exc}"]
    except yaml.YAMLError as exc:
        return None, [f"config is not valid YAML: {exc}"]
    return parse_config(raw)


# ---------------------------------------------------------------------------
# experiment execution


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _schedule_for(cfg: ExperimentConfig, learner: str, seed: int, alpha=None, beta=None) -> ProjectionSchedule:
    xi_seed = seed + XI_SEED_SALT
    if learner in ("IOL", "OL"):
        return ProjectionSchedule.never(cfg.T, rng_seed=xi_seed)
    if alpha is not None:
        return ProjectionSchedule.bernoulli(alpha, cfg.T, rng_seed=xi_seed)
    if beta is not None:
        if beta >= 1.0:
            return ProjectionSchedule.always_exact(cfg.T, rng_seed=xi_seed)
        return ProjectionSchedule.always_decaying(cfg.c_beta, beta, cfg.T, rng_seed=xi_seed)
    mode = cfg.schedule_mode
    if mode is ScheduleMode.NEVER:
        return ProjectionSchedule.never(cfg.T, rng_seed=xi_seed)
    if mode is ScheduleMode.BERNOULLI:
        return ProjectionSchedule.bernoulli(cfg.alpha, cfg.T, rng_seed=xi_seed,
                                            accuracy_rule=cfg.accuracy, c_beta=cfg.c_beta, beta=cfg.beta)
    if mode is ScheduleMode.EVERY_KTH:
        return ProjectionSchedule.every_kth(cfg.every_k, cfg.T, rng_seed=xi_seed)
    if cfg.accuracy is AccuracyRule.DECAYING:
        return ProjectionSchedule.always_decaying(cfg.c_beta, cfg.beta, cfg.T, rng_seed=xi_seed)
    return ProjectionSchedule.always_exact(cfg.T, rng_seed=xi_seed)


@dataclass
class _RunOutput:
    label: str
    seed: int
    regret: np.ndarray
    utility: np.ndarray
    projected: list
    gaps: list
    times: list
    certificate: object
    schedule: ProjectionSchedule


def _execute_run(cfg: ExperimentConfig, world, ordering, learner: str, seed: int,
                 alpha=None, beta=None, label=None) -> _RunOutput:
    loss = cfg.loss()
    structure = world.structure()
    env = (
        world.environment(ordering=ordering, seed=seed, explore_only=cfg.market_explore_only)
        if isinstance(world, MarketScenario)
        else PairEnvironment(world, ordering, seed=seed)
    )
    schedule = _schedule_for(cfg, learner, seed, alpha=alpha, beta=beta)
    initial = None
    if cfg.initial_weight is not None:
        from .core import JointWeights

        initial = JointWeights.constant(
            cfg.initial_weight, structure.num_problems, structure.dim
        )
    lcfg = LearnerConfig(
        structure=structure,
        schedule=schedule,
        loss=loss,
        eta=cfg.eta,
        initial_weights=initial,
        identity_projection_weights=(learner == "uwCoOL"),
        max_projection_sweeps=cfg.max_projection_sweeps,
    )
    result = run(lcfg, env, cfg.T)
    regret = cumulative_regret(result.records, env.ground_truth_weights(), loss)
    utility = np.cumsum([rec.utility_gain for rec in result.records])
    return _RunOutput(
        label=label or learner,
        seed=seed,
        regret=regret,
        utility=utility,
        projected=[rec.projected for rec in result.records],
        gaps=[rec.duality_gap for rec in result.records],
        times=[rec.projection_wall_time for rec in result.records],
        certificate=result.certificate,
        schedule=schedule,
    )


def _learner_tasks(cfg: ExperimentConfig):
    """(learner, label, alpha, beta, ordering) combinations for the config."""
    if cfg.experiment == "figure2a":
        ordering = OrderingPolicy.random()
        return [(lr, lr, None, None, ordering) for lr in cfg.learners]
    if cfg.experiment == "figure2b":
        ordering = OrderingPolicy.batch(cfg.batch_size)
        return [(lr, lr, None, None, ordering) for lr in cfg.learners]
    if cfg.experiment == "figure2c":
        ordering = OrderingPolicy.single(cfg.problem)
        learners = cfg.learners if set(cfg.learners) != {"IOL", "CoOL"} else ["IOL", "CoOL", "uwCoOL"]
        return [(lr, lr, None, None, ordering) for lr in learners]
    if cfg.experiment == "sweep_alpha":
        ordering = OrderingPolicy.random()
        tasks = [("IOL", "IOL", None, None, ordering)]
        for a in cfg.alpha_grid:
            tasks.append(("CoOL", f"CoOL(alpha={_fmt(a)})", a, None, ordering))
        return tasks
    if cfg.experiment == "sweep_beta":
        ordering = OrderingPolicy.random()
        tasks = [("IOL", "IOL", None, None, ordering)]
        for b in cfg.beta_grid:
            tasks.append(("CoOL", f"CoOL(beta={_fmt(b)})", None, b, ordering))
        return tasks
    if cfg.experiment == "market":
        ordering = OrderingPolicy.random()
        return [(lr, lr, None, None, ordering) for lr in cfg.learners]
    raise ValueError(f"no learner tasks for experiment {cfg.experiment}")


def _projection_benchmark(cfg: ExperimentConfig) -> tuple[list[str], dict, list[str]]:
    """Cold-instance projection benchmark: one shared instance set, timed per
    beta.  Instances pair a sampled round t with observation counts drawn at t
    and the decaying accuracy evaluated at t.  Accuracies are interleaved per
    instance and each cell keeps the better of two timings, so slow drift in
    machine state cannot skew one accuracy level against another."""
    n, r, K, T = cfg.n, cfg.r, num_pairs(cfg.n), max(cfg.T, 1)
    world = HemimetricWorld(n=n, intra=cfg.intra, inter=cfg.inter, r=r)
    s2 = set_norm(world.structure()) ** 2
    rows = []
    medians: dict[float, float] = {}
    report = []
    rng = np.random.default_rng(cfg.seeds[0] if cfg.seeds else 0)
    instances = []
    for _ in range(cfg.num_instances):
        target = rng.uniform(0.0, r, (n, n))
        np.fill_diagonal(target, 0.0)
        t_round = int(rng.integers(1, T + 1))
        tau = rng.multinomial(t_round, np.ones(K) / K)
        weights = matrix_from_pair_values(np.sqrt(tau.astype(float)), n)
        instances.append((target, weights, t_round))
    if instances:
        # one warm-up call so jit compilation stays out of the measurements
        project_hemimetric(instances[0][0], instances[0][1], r, gap_tolerance=max(s2, 1.0))
    times = {beta: [] for beta in cfg.beta_grid}
    gaps = {beta: [] for beta in cfg.beta_grid}
    for idx, (target, weights, t_round) in enumerate(instances):
        for beta in cfg.beta_grid:
            delta = cfg.c_beta * (1.0 - beta) ** 2 * math.sqrt(K) / math.sqrt(t_round) * s2
            best = np.inf
            gap = 0.0
            for _ in range(2):
                start = time.perf_counter()
                rep = project_hemimetric(target, weights, r, gap_tolerance=delta,
                                         max_sweeps=cfg.max_projection_sweeps)
                elapsed = time.perf_counter() - start
                if elapsed < best:
                    best = elapsed
                    gap = rep.gap
            times[beta].append(best)
            gaps[beta].append(gap)
    for beta in cfg.beta_grid:
        for idx, (elapsed, gap) in enumerate(zip(times[beta], gaps[beta])):
            rows.append(
                f"{cfg.experiment},projection(beta={_fmt(beta)}),{cfg.seeds[0] if cfg.seeds else 0},"
                f"{idx + 1},0,0,1,{_fmt(gap)},{_fmt(elapsed * 1e6)}"
            )
        medians[beta] = float(np.median(times[beta]))
        report.append(
            f"beta={_fmt(beta)}: median projection time {medians[beta] * 1e6:.1f} us "
            f"over {len(times[beta])} instances"
        )
    if 1.0 in medians:
        for beta in sorted(m for m in medians if m < 1.0):
            ratio = medians[beta] / medians[1.0]
            report.append(f"beta={_fmt(beta)} / beta=1: median time ratio {ratio:.4f}")
    return rows, medians, report


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path, seed_offset: int = 0,
                   threads: int = 1) -> dict:
    """Execute the configured experiment; write CSV + report; return summary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{cfg.experiment}.csv"
    report_path = out_dir / f"{cfg.experiment}_report.txt"
    summary: dict = {"experiment": cfg.experiment, "csv": str(csv_path), "report": str(report_path)}

    rows: list[str] = [CSV_HEADER]
    report_lines: list[str] = [f"experiment: {cfg.experiment}"]
    cert_violation = False

    if cfg.experiment == "projection_runtime":
        bench_rows, medians, bench_report = _projection_benchmark(cfg)
        rows.extend(bench_rows)
        report_lines.extend(bench_report)
        summary["projection_medians"] = medians
    else:
        seeds = [s + seed_offset for s in cfg.seeds]
        if cfg.experiment == "market":
            world = MarketScenario(
                n_items=cfg.market_n_items,
                u=cfg.market_u,
                delta=cfg.market_delta,
                r=cfg.market_r,
                cost_model=cfg.market_cost_model,
            )
        else:
            world = HemimetricWorld(n=cfg.n, intra=cfg.intra, inter=cfg.inter, r=cfg.r)

        tasks = []
        for learner, label, alpha, beta, ordering in _learner_tasks(cfg):
            for seed in seeds:
                tasks.append((learner, label, alpha, beta, ordering, seed))

        def _work(task):
            learner, label, alpha, beta, ordering, seed = task
            return _execute_run(cfg, world, ordering, learner, seed, alpha=alpha, beta=beta, label=label)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                outputs = list(pool.map(_work, tasks))
        else:
            outputs = [_work(t) for t in tasks]

        by_label: dict[str, list[_RunOutput]] = {}
        for out in outputs:
            by_label.setdefault(out.label, []).append(out)

        for label in sorted(by_label):
            group = sorted(by_label[label], key=lambda o: o.seed)
            for out in group:
                for t_idx in range(cfg.T):
                    rows.append(
                        f"{cfg.experiment},{label},{out.seed},{t_idx + 1},"
                        f"{_fmt(out.regret[t_idx])},{_fmt(out.utility[t_idx])},"
                        f"{1 if out.projected[t_idx] else 0},{_fmt(out.gaps[t_idx])},"
                        f"{_fmt(out.times[t_idx] * 1e6)}"
                    )
            if cfg.T > 0 and len(group) > 1:
                mean_regret = np.mean([o.regret for o in group], axis=0)
                mean_util = np.mean([o.utility for o in group], axis=0)
                for t_idx in range(cfg.T):
                    rows.append(
                        f"{cfg.experiment},{label},mean,{t_idx + 1},"
                        f"{_fmt(mean_regret[t_idx])},{_fmt(mean_util[t_idx])},0,0,0"
                    )

            finals = [o.regret[-1] if cfg.T else 0.0 for o in group]
            final_util = [o.utility[-1] if cfg.T else 0.0 for o in group]
            summary.setdefault("final_regret", {})[label] = float(np.mean(finals))
            summary.setdefault("final_utility", {})[label] = float(np.mean(final_util))
            report_lines.append(f"\n[{label}] mean final regret {np.mean(finals):.6g}, "
                                f"mean final utility gain {np.mean(final_util):.6g}")
            for out in group:
                c = out.certificate
                ok = c.holds
                cert_violation = cert_violation or not ok
                report_lines.append(
                    f"  seed {out.seed}: observed {c.observed_linearized_regret:.6g} "
                    f"<= bound {c.total_bound:.6g} [{'ok' if ok else 'VIOLATED'}] "
                    f"(R1={c.R1:.6g} R2={c.R2:.6g} R3={c.R3:.6g} R4={c.R4:.6g})"
                )
                sched = out.schedule
                if sched.mode is ScheduleMode.BERNOULLI and cfg.T > 0:
                    world_struct = world.structure()
                    expected = expected_regret_bound(
                        cfg.T,
                        world_struct.num_problems,
                        set_norm(world_struct),
                        cfg.loss().gradient_bound,
                        sched.c_alpha,
                        sched.c_beta if sched.accuracy_rule is AccuracyRule.DECAYING else 0.0,
                        sched.beta if sched.accuracy_rule is AccuracyRule.DECAYING else 1.0,
                    )
                    report_lines.append(f"    closed-form expected bound: {expected:.6g}")
            if label == "IOL" and cfg.T > 0:
                ws = world.structure()
                report_lines.append(
                    f"  baseline worst-case bound: {iol_bound(cfg.T, ws.num_problems, set_norm(ws), cfg.loss().gradient_bound):.6g}"
                )

    csv_path.write_text("\n".join(rows) + "\n")
    report_path.write_text("\n".join(report_lines) + "\n")
    summary["certificate_violation"] = cert_violation
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="coolearn", description="coordinated online learning experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run an experiment config")
    runp.add_argument("config")
    runp.add_argument("--out", default="results")
    runp.add_argument("--seed-offset", type=int, default=0)
    runp.add_argument("--threads", type=int, default=1)
    valp = sub.add_parser("validate", help="validate an experiment config")
    valp.add_argument("config")
    args = parser.parse_args(argv)

    cfg, errors = validate_config(args.config)
    if errors:
        for err in errors:
            print(f"config error: {err}", file=sys.stderr)
        return 1
    if args.command == "validate":
        print(f"{args.config}: ok ({cfg.experiment})")
        return 0
    try:
        summary = run_experiment(cfg, args.out, seed_offset=args.seed_offset, threads=args.threads)
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {summary['csv']} and {summary['report']}")
    if summary.get("certificate_violation"):
        print("certificate violation: observed regret exceeded its bound", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
