"""Seeded experiment runner: per-episode records, aggregation, CSV emission.

Run r of an experiment uses seed ``base_seed + r``; the environment and the
agent draw from independent substreams of that seed, and every episode
reseeds the environment from (run seed, episode index). Re-running a config
therefore reproduces its CSV byte for byte, regardless of worker count.

CSV schema (LF line endings, '.' decimal, floats via repr):
    run,episode,scalarized_return,measurements,steps[,cumulative_reward,query_rate]
Aggregate files carry, per metric: episode,<metric>_mean,<metric>_ci95 where
the per-run series is first smoothed by a centered moving average (window
truncated at the edges) and ci95 = 1.96 * stddev(ddof=1) / sqrt(runs).
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agents import KALMAN, REPLICATED, AtmAgent, AtmConfig
from .core import derive_seed, episode_rng
from .envs import make_env
from .envs.mhealth import MHealthEnv

ARTIFACT_VERSION = "atmrl-csv v1"

AGENT_LEARNERS = {"q": REPLICATED, "kq": KALMAN}

BASE_METRICS = ("scalarized_return", "measurements", "steps")
MHEALTH_METRICS = BASE_METRICS + ("cumulative_reward", "query_rate")

_ENV_STREAM, _AGENT_STREAM = 0, 1


@dataclass(frozen=True)
class EpisodeRecord:
    run: int
    episode: int
    scalarized_return: float
    measurements: int
    steps: int
    cumulative_reward: float | None = None
    query_rate: float | None = None

    @property
    def is_mhealth(self) -> bool:
        return self.cumulative_reward is not None


@dataclass
class ExperimentConfig:
    env: str
    agent: str  # "q" (replicated) or "kq" (kalman)
    episodes: int
    env_params: dict = field(default_factory=dict)
    atm: AtmConfig = field(default_factory=AtmConfig)
    runs: int = 5
    base_seed: int = 0
    final_window: int = 200
    smoothing_window: int = 25
    jobs: int | None = None
    snapshot_path: str | None = None
    warmup_days: int = 0  # mhealth only: forced-survey initialization

    def __post_init__(self):
        if self.agent not in AGENT_LEARNERS:
            raise ValueError(f"agent must be one of {sorted(AGENT_LEARNERS)}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.episodes < self.final_window:
            raise ValueError("episodes must be >= final_window")
        if self.smoothing_window < 1:
            raise ValueError("smoothing window must be >= 1")

    def resolved_atm(self) -> AtmConfig:
        return dataclasses.replace(self.atm, learner=AGENT_LEARNERS[self.agent])


def epsilon_for(atm: AtmConfig, episode: int, total_episodes: int) -> float:
    """Exploration rate for one episode: geometric decay, then flat."""
    start, end = atm.epsilon_start, atm.epsilon_end
    if start == end or start <= 0.0:
        return end
    decay_over = max(1, int(round(atm.epsilon_decay_frac * total_episodes)))
    t = min(1.0, episode / decay_over)
    if end <= 0.0:
        return start * (1.0 - t)
    return start * (end / start) ** t


def _make_agent(cfg: ExperimentConfig, env, run_seed: int) -> AtmAgent:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([run_seed, _AGENT_STREAM])))
    agent = AtmAgent(env.spec, cfg.resolved_atm(), rng)
    if cfg.snapshot_path:
        agent.load(cfg.snapshot_path)
    return agent


def run_single(cfg: ExperimentConfig, run_idx: int) -> list[EpisodeRecord]:
    """One independent run: fresh environment and agent, persistent within."""
    env = make_env(cfg.env, _resolved_env_params(cfg))
    run_seed = cfg.base_seed + run_idx
    agent = _make_agent(cfg, env, run_seed)
    if isinstance(env, MHealthEnv):
        return _run_mhealth(cfg, env, agent, run_idx, run_seed)
    records = []
    for ep in range(cfg.episodes):
        env.reset(derive_seed(run_seed, _ENV_STREAM, ep))
        agent.begin_episode(env.initial_belief())
        eps = epsilon_for(agent.cfg, ep, cfg.episodes)
        scalarized = 0.0
        measurements = 0
        steps = 0
        done = False
        while not done:
            decision = agent.act(eps)
            outcome = env.step(decision.action, decision.measure)
            agent.observe(decision, outcome)
            scalarized += outcome.scalarized
            measurements += int(decision.measure)
            steps += 1
            done = outcome.done
        cost = env.spec.measurement_cost
        if abs(scalarized + cost * measurements - env.episode_reward_sum) > 1e-9:
            raise AssertionError("scalarized return fails the raw-reward cross-check")
        records.append(EpisodeRecord(run_idx, ep, scalarized, measurements, steps))
    return records


def _run_mhealth(cfg, env: MHealthEnv, agent: AtmAgent, run_idx: int, run_seed: int) -> list[EpisodeRecord]:
    """One user horizon; records are per day, the agent never resets."""
    env.reset(derive_seed(run_seed, _ENV_STREAM, 0))
    agent.begin_episode(env.initial_belief())
    bag = env.mspec.bag_size
    records = []
    for day in range(env.mspec.horizon_days):
        eps = epsilon_for(agent.cfg, day, cfg.episodes)
        scalarized = 0.0
        queries = 0
        for _ in range(bag):
            decision = agent.act(eps)
            if day < cfg.warmup_days:
                decision = agent.force_measure(decision)
            outcome = env.step(decision.action, decision.measure)
            agent.observe(decision, outcome)
            scalarized += outcome.scalarized
            queries += int(decision.measure)
        records.append(
            EpisodeRecord(
                run=run_idx,
                episode=day,
                scalarized_return=scalarized,
                measurements=queries,
                steps=bag,
                cumulative_reward=env.latent_reward_sum,
                query_rate=queries / bag,
            )
        )
    return records


def _resolved_env_params(cfg: ExperimentConfig) -> dict:
    params = dict(cfg.env_params)
    if cfg.env == "mhealth":
        params.setdefault("horizon_days", cfg.episodes)
        if params["horizon_days"] != cfg.episodes:
            raise ValueError("mhealth horizon_days must equal episodes")
    return params


def _run_task(args) -> list[EpisodeRecord]:
    cfg, run_idx = args
    return run_single(cfg, run_idx)


def run_experiment(cfg: ExperimentConfig, jobs: int | None = None) -> list[EpisodeRecord]:
    """All runs of a config, ordered by (run, episode)."""
    jobs = jobs if jobs is not None else (cfg.jobs if cfg.jobs is not None else cfg.runs)
    jobs = max(1, min(jobs, cfg.runs, os.cpu_count() or 1))
    if jobs == 1 or cfg.runs == 1:
        per_run = [run_single(cfg, r) for r in range(cfg.runs)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_run = list(pool.map(_run_task, [(cfg, r) for r in range(cfg.runs)]))
    records = [rec for run in per_run for rec in run]
    records.sort(key=lambda rec: (rec.run, rec.episode))
    return records


# -- aggregation --


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average; the window truncates at both edges."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    out = np.empty(n)
    left = (window - 1) // 2
    right = window // 2
    for i in range(n):
        lo = max(0, i - left)
        hi = min(n, i + right + 1)
        out[i] = x[lo:hi].mean()
    return out


@dataclass(frozen=True)
class AggregateRow:
    episode: int
    mean: float
    ci95_half_width: float


def _metric_matrix(records: list[EpisodeRecord], metric: str) -> np.ndarray:
    """(runs, episodes) matrix of one metric; validates rectangular shape."""
    runs = sorted({rec.run for rec in records})
    by_run = {r: [] for r in runs}
    for rec in records:
        by_run[rec.run].append(rec)
    lengths = {len(v) for v in by_run.values()}
    if len(lengths) != 1:
        raise ValueError("runs have unequal episode counts")
    return np.array(
        [[float(getattr(rec, metric)) for rec in by_run[r]] for r in runs]
    )


def aggregate(records: list[EpisodeRecord], metric: str, smoothing_window: int) -> list[AggregateRow]:
    """Cross-run mean and 95% CI of the per-run smoothed metric."""
    matrix = _metric_matrix(records, metric)
    smoothed = np.vstack([moving_average(row, smoothing_window) for row in matrix])
    mean = smoothed.mean(axis=0)
    n_runs = smoothed.shape[0]
    if n_runs > 1:
        stderr = smoothed.std(axis=0, ddof=1) / np.sqrt(n_runs)
    else:
        stderr = np.zeros_like(mean)
    return [AggregateRow(i, float(m), float(1.96 * se)) for i, (m, se) in enumerate(zip(mean, stderr))]


@dataclass(frozen=True)
class FinalSummary:
    scalarized_return: float
    measurements: float
    steps: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def final_summary(records: list[EpisodeRecord], final_window: int) -> FinalSummary:
    """Pooled means over the last ``final_window`` episodes of every run."""
    episodes = max(rec.episode for rec in records) + 1
    if final_window > episodes:
        raise ValueError("final_window exceeds the episode count")
    tail = [rec for rec in records if rec.episode >= episodes - final_window]
    return FinalSummary(
        scalarized_return=float(np.mean([r.scalarized_return for r in tail])),
        measurements=float(np.mean([r.measurements for r in tail])),
        steps=float(np.mean([r.steps for r in tail])),
    )


def cost_sweep(
    cfg: ExperimentConfig,
    costs: list[float],
    summary_window: int = 50,
    jobs: int | None = None,
) -> list[tuple[float, FinalSummary]]:
    """One full experiment per measurement cost, summarized over a tail window."""
    if not costs or any(c < 0 for c in costs):
        raise ValueError("costs must be nonempty and nonnegative")
    cost_key = "query_cost" if cfg.env == "mhealth" else "cost"
    out = []
    for cost in costs:
        cfg_c = dataclasses.replace(cfg, env_params={**cfg.env_params, cost_key: cost})
        records = run_experiment(cfg_c, jobs=jobs)
        out.append((cost, final_summary(records, summary_window)))
    return out


# -- CSV emission --


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def records_header(mhealth: bool) -> str:
    return "run,episode," + ",".join(MHEALTH_METRICS if mhealth else BASE_METRICS)


def write_records(records: list[EpisodeRecord], path) -> None:
    mhealth = records[0].is_mhealth
    lines = [records_header(mhealth)]
    for rec in sorted(records, key=lambda r: (r.run, r.episode)):
        fields = [rec.run, rec.episode, rec.scalarized_return, rec.measurements, rec.steps]
        if mhealth:
            fields += [rec.cumulative_reward, rec.query_rate]
        lines.append(",".join(_fmt(f) for f in fields))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_records(path) -> list[EpisodeRecord]:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = lines[0].split(",")
    if header[:5] != ["run", "episode", "scalarized_return", "measurements", "steps"]:
        raise ValueError(f"unrecognized CSV header in {path}")
    mhealth = len(header) == 7
    records = []
    for ln in lines[1:]:
        parts = ln.split(",")
        records.append(
            EpisodeRecord(
                run=int(parts[0]),
                episode=int(parts[1]),
                scalarized_return=float(parts[2]),
                measurements=int(parts[3]),
                steps=int(parts[4]),
                cumulative_reward=float(parts[5]) if mhealth else None,
                query_rate=float(parts[6]) if mhealth else None,
            )
        )
    return records


def write_aggregates(records: list[EpisodeRecord], smoothing_window: int, path) -> None:
    metrics = MHEALTH_METRICS if records[0].is_mhealth else BASE_METRICS
    columns = {m: aggregate(records, m, smoothing_window) for m in metrics}
    header = "episode," + ",".join(f"{m}_mean,{m}_ci95" for m in metrics)
    lines = [header]
    episodes = len(next(iter(columns.values())))
    for i in range(episodes):
        cells = [str(i)]
        for m in metrics:
            row = columns[m][i]
            cells += [repr(row.mean), repr(row.ci95_half_width)]
        lines.append(",".join(cells))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_config_echo(cfg: ExperimentConfig, path, extra: dict | None = None) -> None:
    payload = {
        "artifact_version": ARTIFACT_VERSION,
        "config": dataclasses.asdict(cfg),
    }
    if extra:
        payload.update(extra)
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
