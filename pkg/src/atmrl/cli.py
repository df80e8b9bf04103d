"""Command-line front end: single runs, cost sweeps, bundled reproductions.

Exit codes: 0 success, 2 usage error, 3 runtime failure. Every run prints
its fully resolved configuration before executing and writes, per agent:
a raw per-episode CSV, an aggregate CSV, and a JSON config echo.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .agents import AtmConfig
from .configs import CONFIG_NAMES, SWEEP_COSTS, bundled_configs
from .harness import (
    ExperimentConfig,
    cost_sweep,
    final_summary,
    run_experiment,
    write_aggregates,
    write_config_echo,
    write_records,
)

USAGE_ERROR, RUNTIME_ERROR = 2, 3


class _CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _parse_costs(text: str) -> list[float]:
    """Either comma-separated values or start:end:step (end inclusive)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise _CliError(f"bad range {text!r}, expected start:end:step", USAGE_ERROR)
        start, end, step = (float(p) for p in parts)
        if step <= 0 or end < start:
            raise _CliError("range needs end >= start and step > 0", USAGE_ERROR)
        costs = []
        k = 0
        while True:
            c = start + k * step
            if c > end + 1e-12:
                break
            costs.append(round(c, 10))
            k += 1
        return costs
    return [float(p) for p in text.split(",") if p]


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--env", choices=["mv", "lake", "mhealth"], default="lake")
    p.add_argument("--variant", choices=["deterministic", "semi", "slippery"], default="semi")
    p.add_argument("--size", type=int, default=4, help="lake side length")
    p.add_argument("--hole-density", type=float, default=0.2)
    p.add_argument("--map-seed", type=int, default=0)
    p.add_argument("--map-path", type=str, default=None, help="load a lake map file (S/F/H/G rows)")
    p.add_argument("--cost", type=float, default=0.05, help="measurement cost")
    p.add_argument("--step-cap", type=int, default=None)
    p.add_argument("--agent", choices=["q", "kq"], default="q")
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--final-window", type=int, default=200)
    p.add_argument("--smoothing-window", type=int, default=25)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--warmup-days", type=int, default=50, help="mhealth forced-survey days")
    # agent hyperparameters
    p.add_argument("--gamma", type=float, default=0.95)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--nm", type=int, default=5, help="forced-measurement visits per pair")
    p.add_argument("--epsilon-start", type=float, default=1.0)
    p.add_argument("--epsilon-end", type=float, default=0.05)
    p.add_argument("--epsilon-decay-frac", type=float, default=0.2)
    p.add_argument("--tau2", type=float, default=0.25, help="kalman observation noise variance")
    p.add_argument("--init-var", type=float, default=1.0)
    p.add_argument("--dyna", type=int, default=0, help="simulated backups per real step")
    p.add_argument("--snapshot", type=str, default=None, help="agent snapshot to resume from")


def _config_from_args(args) -> ExperimentConfig:
    atm = AtmConfig(
        discount=args.gamma,
        exploratory_visits=args.nm,
        epsilon_start=args.epsilon_start,
        epsilon_end=args.epsilon_end,
        epsilon_decay_frac=args.epsilon_decay_frac,
        learning_rate=args.eta,
        obs_noise=args.tau2,
        init_var=args.init_var,
        dyna_sweeps=args.dyna,
    )
    env_params: dict = {}
    if args.env == "lake":
        variant = {"semi": "semi_slippery"}.get(args.variant, args.variant)
        env_params = {"variant": variant, "cost": args.cost, "size": args.size}
        if args.size != 4:
            env_params["hole_density"] = args.hole_density
            env_params["map_seed"] = args.map_seed
        if args.map_path:
            env_params = {"variant": variant, "cost": args.cost, "map_path": args.map_path}
        if args.step_cap is not None:
            env_params["step_cap"] = args.step_cap
    elif args.env == "mv":
        env_params = {"cost": args.cost, "discount": args.gamma}
    elif args.env == "mhealth":
        env_params = {"query_cost": args.cost}
    try:
        return ExperimentConfig(
            env=args.env,
            env_params=env_params,
            agent=args.agent,
            atm=atm,
            episodes=args.episodes,
            runs=args.runs,
            base_seed=args.seed,
            final_window=args.final_window,
            smoothing_window=args.smoothing_window,
            jobs=args.jobs,
            snapshot_path=args.snapshot,
            warmup_days=args.warmup_days if args.env == "mhealth" else 0,
        )
    except ValueError as exc:
        raise _CliError(str(exc), USAGE_ERROR)


def _echo_config(cfg: ExperimentConfig, label: str) -> None:
    print(f"[{label}] resolved config: {dataclasses.asdict(cfg)}")


def _execute(cfg: ExperimentConfig, out_dir: Path, label: str) -> None:
    _echo_config(cfg, label)
    records = run_experiment(cfg)
    out_dir.mkdir(parents=True, exist_ok=True)
    raw = out_dir / f"{label}.csv"
    write_records(records, raw)
    write_aggregates(records, cfg.smoothing_window, out_dir / f"{label}.agg.csv")
    summary = final_summary(records, cfg.final_window)
    write_config_echo(cfg, out_dir / f"{label}.config.json", extra={"final_summary": summary.as_dict()})
    print(
        f"[{label}] final {cfg.final_window}-episode window: "
        f"SR={summary.scalarized_return:.4f} M={summary.measurements:.4f} steps={summary.steps:.2f}"
    )
    print(f"[{label}] wrote {raw}")


def _cmd_run(args) -> int:
    cfg = _config_from_args(args)
    label = f"run-{args.env}-{args.agent}"
    _execute(cfg, Path(args.out), label)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    costs = _parse_costs(args.costs)
    _echo_config(cfg, "sweep")
    print(f"[sweep] costs: {costs}")
    rows = cost_sweep(cfg, costs, summary_window=args.summary_window, jobs=args.jobs)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"sweep-{args.env}-{args.agent}.csv"
    lines = ["cost,scalarized_return,measurements,steps"]
    for cost, summary in rows:
        lines.append(
            f"{cost!r},{summary.scalarized_return!r},{summary.measurements!r},{summary.steps!r}"
        )
    path.write_text("\n".join(lines) + "\n")
    write_config_echo(cfg, out_dir / f"sweep-{args.env}-{args.agent}.config.json",
                      extra={"costs": costs, "summary_window": args.summary_window})
    print(f"[sweep] wrote {path} ({len(rows)} summary rows)")
    return 0


def _cmd_reproduce(args) -> int:
    try:
        configs = bundled_configs(args.name)
    except KeyError:
        raise _CliError(f"unknown config {args.name!r}; see list-configs", USAGE_ERROR)
    out_dir = Path(args.out)
    overrides = {}
    if args.episodes is not None:
        overrides["episodes"] = args.episodes
    if args.runs is not None:
        overrides["runs"] = args.runs
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.name == "appendix-cost-sweep":
        for label, cfg in configs.items():
            cfg = dataclasses.replace(cfg, **overrides)
            _echo_config(cfg, f"{args.name}-{label}")
            rows = cost_sweep(cfg, SWEEP_COSTS, summary_window=50, jobs=cfg.jobs)
            out_dir.mkdir(parents=True, exist_ok=True)
            path = out_dir / f"{args.name}-{label}.csv"
            lines = ["cost,scalarized_return,measurements,steps"]
            for cost, summary in rows:
                lines.append(
                    f"{cost!r},{summary.scalarized_return!r},{summary.measurements!r},{summary.steps!r}"
                )
            path.write_text("\n".join(lines) + "\n")
            print(f"[{args.name}-{label}] wrote {path}")
        return 0
    for label, cfg in configs.items():
        merged = dict(overrides)
        episodes = merged.get("episodes", cfg.episodes)
        if episodes < cfg.final_window:
            merged["final_window"] = episodes
        cfg = dataclasses.replace(cfg, **merged)
        _execute(cfg, out_dir, f"{args.name}-{label}")
    return 0


def _cmd_list(args) -> int:
    for name in CONFIG_NAMES:
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atmrl",
        description="Act-then-measure agents under costly state observation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    _add_experiment_flags(p_run)
    p_run.add_argument("--out", type=str, required=True, help="output directory")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run one experiment per measurement cost")
    _add_experiment_flags(p_sweep)
    p_sweep.add_argument("--costs", type=str, required=True,
                         help="comma list or start:end:step (end inclusive)")
    p_sweep.add_argument("--summary-window", type=int, default=50)
    p_sweep.add_argument("--out", type=str, required=True)
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_rep = sub.add_parser("reproduce", help="run a bundled named configuration")
    p_rep.add_argument("name", type=str)
    p_rep.add_argument("--out", type=str, required=True)
    p_rep.add_argument("--episodes", type=int, default=None, help="override episode count")
    p_rep.add_argument("--runs", type=int, default=None, help="override run count")
    p_rep.add_argument("--jobs", type=int, default=None)
    p_rep.set_defaults(fn=_cmd_reproduce)

    p_list = sub.add_parser("list-configs", help="print bundled config names")
    p_list.set_defaults(fn=_cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad flags already
        return int(exc.code) if exc.code else 0
    try:
        return args.fn(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
