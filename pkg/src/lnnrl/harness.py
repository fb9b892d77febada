"""Experiment driver: baseline vs. shielded vs. guided agents on Coin-collector.

Every run is a pure function of its :class:`RunConfig`, so repeated runs
write byte-identical CSV files and runs can be farmed out to worker
processes freely.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import constraints
from .agent import AgentConfig, QAgent, Transition, novelty_bonus, select_baseline
from .dsl import default_knowledge, load_rules
from .grounding import GroundingMemory, feature_vector, ground, parse_observation, update_memory
from .logic import build_graph
from .world import generate_level, reset, step

METHODS = ("baseline", "shield", "guide")
CSV_COLUMNS = ("method", "seed", "episode", "reward", "steps", "fallbacks", "moving_avg")
DEFAULT_THRESHOLD = 0.9
DEFAULT_WINDOW = 5
WORKERS_ENV = "LNNRL_WORKERS"

# settings that belong to the constraint layer and may differ between methods
_LAYER_FIELDS = {"method", "alpha", "max_rejections", "pinned_midpoint", "trace"}


class ConfigError(ValueError):
    pass


class ConfigMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    method: str = "baseline"
    length: int = 15
    distractors: int = 3
    level_seed: int = 0
    max_steps: int = 50
    episodes: int = 300
    seed: int = 0
    alpha: float = 1.0
    max_rejections: int = 5
    pinned_midpoint: bool = False
    rules: str | None = None
    window: int = DEFAULT_WINDOW
    trace: str | None = None
    agent: AgentConfig = field(default_factory=AgentConfig)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.episodes < 1 or self.window < 1 or self.max_steps < 1:
            raise ConfigError("episodes, window and max_steps must be >= 1")

    def for_seed(self, offset: int) -> "RunConfig":
        return replace(self, seed=self.seed + offset, level_seed=self.level_seed + offset)


@dataclass(frozen=True)
class EpisodeRecord:
    method: str
    seed: int
    episode: int
    reward: float
    steps: int
    fallbacks: int
    wall_time: float = field(default=0.0, compare=False)


def load_config(path, **overrides) -> RunConfig:
    """Read a flat ``key = value`` (TOML) file; agent keys may sit at top level or under ``[agent]``."""
    import tomli

    path = Path(path)
    try:
        data = tomli.loads(path.read_text(encoding="utf-8"))
    except (OSError, tomli.TOMLDecodeError) as err:
        raise ConfigError(f"{path}: {err}") from None
    data.update(overrides)
    return config_from_dict(data, source=str(path))


def config_from_dict(data: dict, source: str = "<config>") -> RunConfig:
    run_keys = {f.name for f in fields(RunConfig)} - {"agent"}
    agent_keys = {f.name for f in fields(AgentConfig)}
    run_kw, agent_kw = {}, dict(data.get("agent", {}))
    for key, value in data.items():
        if key == "agent":
            continue
        if key in run_keys:
            run_kw[key] = value
        elif key in agent_keys:
            agent_kw[key] = value
        else:
            raise ConfigError(f"{source}: unknown field {key!r}")
    for key in agent_kw:
        if key not in agent_keys:
            raise ConfigError(f"{source}: unknown field 'agent.{key}'")
    try:
        return RunConfig(agent=AgentConfig(**agent_kw), **run_kw)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{source}: {err}") from None


def _rules(cfg: RunConfig):
    return default_knowledge() if cfg.rules is None else load_rules(cfg.rules)


def run_experiment(cfg: RunConfig, greedy: bool = False) -> list[EpisodeRecord]:
    """Train one agent for ``cfg.episodes`` episodes and record each episode.

    ``greedy=True`` disables exploration entirely (epsilon 0 throughout).
    """
    level = generate_level(cfg.length, cfg.distractors, cfg.level_seed)
    graph = build_graph(_rules(cfg))
    agent_seq, select_seq = np.random.SeedSequence(cfg.seed).spawn(2)
    agent = QAgent(cfg.agent, rng=np.random.default_rng(agent_seq))
    rng = np.random.default_rng(select_seq)
    shield_cfg = constraints.ShieldConfig(cfg.alpha, cfg.max_rejections)
    trace = open(cfg.trace, "w", encoding="utf-8") if cfg.trace else None
    records = []
    try:
        for ep in range(cfg.episodes):
            eps = 0.0 if greedy else cfg.agent.epsilon(ep)
            records.append(_run_episode(cfg, ep, eps, level, graph, agent, rng, shield_cfg, trace))
    finally:
        if trace is not None:
            trace.close()
    return records


def _run_episode(cfg, ep, eps, level, graph, agent, rng, shield_cfg, trace) -> EpisodeRecord:
    t0 = time.perf_counter()
    state, obs = reset(level, cfg.max_steps)
    memory = GroundingMemory()
    here = parse_observation(obs.text)
    update_memory(memory, None, None, here.room, here.coin)
    visits = {here.room: 1}
    props = ground(obs.text, memory)
    feats = tuple(feature_vector(props))
    total, fallbacks = 0.0, 0
    while not obs.done:
        rec = None
        if cfg.method == "baseline":
            action = select_baseline(agent.qf, feats, eps, rng)
            if trace:
                rec = constraints.trace_record(state.steps, props, cfg.method, action)
        elif cfg.method == "shield":
            res = constraints.shield_select(graph, props, agent.qf, feats, eps, shield_cfg, rng)
            action = res.action
            fallbacks += res.fallback
            if trace:
                rec = constraints.trace_record(state.steps, props, cfg.method, action,
                                               res.rejected + [action], res.contradictions)
        else:
            probs = constraints.guide_distribution(graph, props, cfg.pinned_midpoint)
            action, _ = constraints.guide_pick(probs, agent.qf(feats), eps, rng)
            if trace:
                rec = constraints.trace_record(state.steps, props, cfg.method, action,
                                               contradictions=constraints.action_contradictions(graph, props),
                                               probs=probs)
        if rec is not None:
            rec["episode"] = ep
            trace.write(json.dumps(rec, sort_keys=True) + "\n")

        state, obs = step(level, state, action)
        nxt = parse_observation(obs.text)
        bonus = 0.0
        if nxt.room != here.room:
            update_memory(memory, here.room, action, nxt.room, nxt.coin)
            visits[nxt.room] = visits.get(nxt.room, 0) + 1
            bonus = novelty_bonus(nxt.room, visits, cfg.agent.novelty_bonus)
        here = nxt
        props = ground(obs.text, memory)
        next_feats = tuple(feature_vector(props))
        # running out of steps is a truncation, not a terminal state
        agent.observe(Transition(feats, int(action), obs.reward + bonus, next_feats, state.coin_taken))
        feats = next_feats
        total += obs.reward
    return EpisodeRecord(cfg.method, cfg.seed, ep, total, state.steps, fallbacks,
                         time.perf_counter() - t0)


def moving_average(series, n: int) -> list[float]:
    """Trailing mean over the last ``n`` points (fewer at the start)."""
    if n < 1:
        raise ValueError("window must be >= 1")
    out, acc = [], 0.0
    values = [float(x) for x in series]
    for i, x in enumerate(values):
        acc += x
        if i >= n:
            acc -= values[i - n]
        out.append(acc / min(n, i + 1))
    return out


def episodes_to_threshold(rewards, threshold: float = DEFAULT_THRESHOLD,
                          n: int = DEFAULT_WINDOW) -> int | None:
    """First episode whose trailing moving average reaches ``threshold``."""
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    # compare with a little slack so 0.9 is reached by 9/10 despite rounding
    for i, m in enumerate(moving_average(rewards, n)):
        if m >= threshold - 1e-12:
            return i
    return None


def records_to_csv(records, window: int = DEFAULT_WINDOW) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for (method, seed), recs in _group(records).items():
        ma = moving_average([r.reward for r in recs], window)
        for r, m in zip(recs, ma):
            writer.writerow([method, seed, r.episode, f"{r.reward:g}", r.steps, r.fallbacks, f"{m:.6f}"])
    return buf.getvalue()


def read_csv(path) -> list[EpisodeRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [EpisodeRecord(row["method"], int(row["seed"]), int(row["episode"]),
                              float(row["reward"]), int(row["steps"]), int(row["fallbacks"]))
                for row in csv.DictReader(fh)]


def _group(records) -> dict:
    groups: dict = {}
    for r in records:
        groups.setdefault((r.method, r.seed), []).append(r)
    for recs in groups.values():
        recs.sort(key=lambda r: r.episode)
    return groups


def _median(values):
    finite = [math.inf if v is None else v for v in values]
    if not finite:
        return None
    m = statistics.median(finite)
    return None if math.isinf(m) else m


def curve_summary(records, window: int = DEFAULT_WINDOW, threshold: float = DEFAULT_THRESHOLD) -> dict:
    """Per-method moving-average curves (mean and std across seeds) and convergence episodes."""
    by_method: dict = {}
    for (method, seed), recs in _group(records).items():
        by_method.setdefault(method, {})[seed] = [r.reward for r in recs]
    out = {}
    for method in sorted(by_method, key=lambda m: (METHODS.index(m) if m in METHODS else 99, m)):
        seeds = by_method[method]
        curves = np.array([moving_average(seeds[s], window) for s in sorted(seeds)])
        ett = {s: episodes_to_threshold(seeds[s], threshold, window) for s in sorted(seeds)}
        out[method] = {
            "mean": curves.mean(axis=0).tolist(),
            "std": curves.std(axis=0).tolist(),
            "episodes_to_threshold": ett,
            "median_episodes_to_threshold": _median(list(ett.values())),
        }
    return out


def check_comparable(configs: dict) -> None:
    """Refuse comparisons whose runs differ in anything but the constraint layer."""
    items = list(configs.items())
    for method, cfg in items:
        if cfg.method != method:
            raise ConfigMismatchError(f"config given for {method!r} has method={cfg.method!r}")
    ref_method, ref = items[0]
    for method, cfg in items[1:]:
        for f in fields(RunConfig):
            if f.name in _LAYER_FIELDS:
                continue
            if getattr(cfg, f.name) != getattr(ref, f.name):
                raise ConfigMismatchError(
                    f"{method} and {ref_method} differ in {f.name!r}: "
                    f"{getattr(cfg, f.name)!r} != {getattr(ref, f.name)!r}")


def _run_task(cfg: RunConfig):
    return run_experiment(cfg)


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_many(cfgs, workers: int | None = None) -> list[list[EpisodeRecord]]:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(cfgs) <= 1:
        return [run_experiment(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=min(workers, len(cfgs))) as pool:
        return list(pool.map(_run_task, cfgs))


def compare(configs: dict, seeds: int = 5, threshold: float = DEFAULT_THRESHOLD,
            window: int = DEFAULT_WINDOW, workers: int | None = None):
    """Run every method over ``seeds`` seeds; returns (records, report)."""
    check_comparable(configs)
    tasks = [configs[m].for_seed(s) for m in configs for s in range(seeds)]
    results = run_many(tasks, workers)
    records = [r for recs in results for r in recs]
    return records, build_report(records, threshold, window)


def build_report(records, threshold: float = DEFAULT_THRESHOLD, window: int = DEFAULT_WINDOW) -> dict:
    summary = curve_summary(records, window, threshold)
    fallbacks: dict = {}
    for r in records:
        per = fallbacks.setdefault(r.method, {})
        per[r.seed] = per.get(r.seed, 0) + r.fallbacks
    methods = {}
    for method, s in summary.items():
        methods[method] = {
            "median_episodes_to_threshold": s["median_episodes_to_threshold"],
            "episodes_to_threshold": {str(k): v for k, v in s["episodes_to_threshold"].items()},
            "fallbacks": sum(fallbacks[method].values()),
            "fallbacks_per_seed": {str(k): v for k, v in fallbacks[method].items()},
            "final_moving_average": s["mean"][-1],
        }
    return {"threshold": threshold, "window": window, "methods": methods}


def report_text(report: dict) -> str:
    lines = [f"episodes to moving-average (N={report['window']}) reward >= {report['threshold']}"]
    for method, m in report["methods"].items():
        med = m["median_episodes_to_threshold"]
        per = ", ".join(f"{k}:{'-' if v is None else v}" for k, v in m["episodes_to_threshold"].items())
        lines.append(f"  {method:<9} median {'never' if med is None else med:>6}   "
                     f"fallbacks {m['fallbacks']:>4}   per seed [{per}]")
    return "\n".join(lines) + "\n"


def curves_table(records, window: int = DEFAULT_WINDOW) -> str:
    """``method,episode,mean,std`` of the moving-average reward across seeds."""
    lines = ["method,episode,mean,std"]
    for method, s in curve_summary(records, window).items():
        for ep, (m, sd) in enumerate(zip(s["mean"], s["std"])):
            lines.append(f"{method},{ep},{m:.6f},{sd:.6f}")
    return "\n".join(lines) + "\n"


def gnuplot_script(curves_file: str = "curves_mean.csv", methods=METHODS) -> str:
    plots = []
    for k, m in enumerate(methods, start=1):
        src = f"\"< grep '^{m},' {curves_file}\""
        plots.append(f"{src} using 2:($3-$4):($3+$4) with filledcurves lc {k} fs transparent solid 0.2 notitle")
        plots.append(f"{src} using 2:3 with lines lc {k} lw 2 title '{m}'")
    return ("set datafile separator ','\n"
            "set xlabel 'episode'\nset ylabel 'reward (moving average)'\n"
            "set yrange [0:1]\nset key bottom right\n"
            "plot " + ", \\\n     ".join(plots) + "\n")


def write_outputs(records, report, out_dir, window: int = DEFAULT_WINDOW, gnuplot: bool = False) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "curves.csv").write_text(records_to_csv(records, window), encoding="utf-8")
    (out / "curves_mean.csv").write_text(curves_table(records, window), encoding="utf-8")
    (out / "summary.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "summary.txt").write_text(report_text(report), encoding="utf-8")
    if gnuplot:
        (out / "plot.gp").write_text(gnuplot_script(), encoding="utf-8")


def config_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)
