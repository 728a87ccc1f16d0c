"""Command-line front end: train a policy, validate it in closed loop, and
compare runs against the published benchmark numbers.

Precedence for every setting: command-line flag > config-file key > built-in
default. Numeric artifacts (CSV, policy file) carry full double precision;
console output is rounded for reading. Given identical flags and seed, the
data artifacts are byte-identical across invocations (the manifest differs
in its wall-clock timings).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .agent import (
    PolicyIOError,
    PolicyMismatchError,
    ReducedToggleEnv,
    convergence_episode,
    load_policy,
    save_policy,
    train,
)
from .control import export_campaign, run_campaign
from .metrics import (
    DEFAULT_WINDOW_MIN,
    PAPER_TABLE2,
    compute_metrics,
    write_error_series_csv,
)
from .params import (
    ConfigError,
    ExperimentConfig,
    ModelParams,
    config_as_dict,
    load_config,
    save_config,
)

MODEL_ALIASES = {"reduced": "reduced", "det": "deterministic", "stoch": "stochastic"}


def _load_inputs(args) -> tuple[ModelParams, ExperimentConfig]:
    if getattr(args, "config", None):
        params, cfg = load_config(args.config)
    else:
        params, cfg = ModelParams(), ExperimentConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    if getattr(args, "episodes", None) is not None:
        overrides["n_episodes"] = args.episodes
    if getattr(args, "trials", None) is not None:
        overrides["n_trials"] = args.trials
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return params, cfg


def _write_manifest(out_dir: Path, command: str, params, cfg, artifacts, seeds, timings) -> Path:
    manifest = {
        "command": command,
        "toggleql_version": __version__,
        "config": config_as_dict(params, cfg),
        "seeds": seeds,
        "artifacts": [str(p) for p in artifacts],
        "timings_s": timings,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    missing = [str(p) for p in artifacts if not Path(p).exists()]
    if missing:
        raise RuntimeError(f"declared artifacts were not written: {missing}")
    return path


def cmd_train(args) -> int:
    params, cfg = _load_inputs(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    t_start = time.perf_counter()
    env = ReducedToggleEnv(params, cfg)
    policy, rewards = train(env, cfg, jobs=args.jobs)
    train_s = time.perf_counter() - t_start

    artifacts = []
    policy_path = out_dir / "policy.bin"
    save_policy(policy, policy_path)
    artifacts.append(policy_path)

    for i in range(cfg.n_trials):
        p = out_dir / f"reward_trial_{i:02d}.csv"
        with open(p, "w", newline="") as fh:
            fh.write("episode,cumulative_reward\n")
            for ep, r in enumerate(rewards[i]):
                fh.write(f"{ep},{float(r)!r}\n")
        artifacts.append(p)

    snapshot = out_dir / "config_used.txt"
    save_config(snapshot, params, cfg)
    artifacts.append(snapshot)

    mean_curve = rewards.mean(axis=0)
    episode, plateau = convergence_episode(mean_curve)
    seeds = {
        "master": cfg.rng_seed,
        "scheme": "trial i uses SeedSequence(entropy=master, spawn_key=(0, i))",
        "n_trials": cfg.n_trials,
    }
    _write_manifest(
        out_dir, "train", params, cfg, artifacts, seeds, {"train": train_s}
    )

    print(f"trained {cfg.n_trials} trials x {cfg.n_episodes} episodes in {train_s:.1f} s")
    print(f"selected trial {policy.trial_index} (best plateau mean)")
    if episode is None:
        print(f"plateau {plateau:.3f}: mean curve never reached 95% of it")
    else:
        print(f"plateau {plateau:.3f}: mean cumulative reward within 5% by episode {episode}")
    print(f"artifacts in {out_dir}")
    return 0


def cmd_validate(args) -> int:
    params, cfg = _load_inputs(args)
    model = MODEL_ALIASES[args.model]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    policy = load_policy(args.policy)

    t_start = time.perf_counter()
    campaign = run_campaign(
        model,
        policy,
        args.realizations,
        params,
        cfg,
        master_seed=cfg.rng_seed,
        dt=args.dt,
        log_interval=5.0,
        jobs=args.jobs,
    )
    run_s = time.perf_counter() - t_start

    artifacts = list(export_campaign(campaign, out_dir))

    reports = [compute_metrics(tr, params, cfg, t_w=args.tw) for tr in campaign.traces]
    # also score the pointwise-mean trajectory: the benchmark is ambiguous about
    # whether its numbers average the metrics or evaluate the averaged run
    mean_traj = dataclasses.replace(
        campaign.traces[0], states=campaign.state_mean, phi=campaign.phi_mean
    )
    mean_report = compute_metrics(mean_traj, params, cfg, t_w=args.tw)
    metrics_json = {
        "model": model,
        "t_w": args.tw,
        "realizations": args.realizations,
        "per_realization": [{"ise": r.ise, "itae": r.itae} for r in reports],
        "mean_ise": float(np.mean([r.ise for r in reports])),
        "mean_itae": float(np.mean([r.itae for r in reports])),
        "ise_of_mean_trajectory": mean_report.ise,
        "itae_of_mean_trajectory": mean_report.itae,
        "reference": list(reports[0].reference),
    }

    metrics_path = out_dir / "metrics.json"
    metrics_path.write_text(json.dumps(metrics_json, indent=2) + "\n")
    artifacts.append(metrics_path)

    err_path = out_dir / "error_series_000.csv"
    write_error_series_csv(reports[0], err_path)
    artifacts.append(err_path)

    snapshot = out_dir / "config_used.txt"
    save_config(snapshot, params, cfg)
    artifacts.append(snapshot)

    seeds = {
        "master": cfg.rng_seed,
        "scheme": "realization i uses SeedSequence(entropy=master, spawn_key=(1, i))",
        "n_realizations": args.realizations,
    }
    _write_manifest(out_dir, "validate", params, cfg, artifacts, seeds, {"campaign": run_s})

    print(f"{model} campaign: {args.realizations} realization(s) in {run_s:.1f} s")
    print(f"mean ISE  = {metrics_json['mean_ise']:.2f}")
    print(f"mean ITAE = {metrics_json['mean_itae']:.3e}")
    print(f"artifacts in {out_dir}")
    return 0


def _format_report_rows(runs: list[dict]) -> list[str]:
    """Benchmark comparison: measured runs beside the stored reference columns."""
    lines = []
    header = f"{'regime':<14}{'metric':<8}" + "".join(f"{name:>22}" for name in
        ["this run (QL)", "QL complete (ref)", "MPC (ref)", "PI-PWM (ref)"])
    lines.append(header)
    lines.append("-" * len(header))
    for run in runs:
        regime = "stochastic" if run["model"] == "stochastic" else "deterministic"
        ref_col = (
            "QL_quasi_steady_state" if run["model"] == "reduced" else "QL_complete_model"
        )
        refs = PAPER_TABLE2[regime]
        for metric, key in (("ISE", "mean_ise"), ("ITAE", "mean_itae")):
            i = 0 if metric == "ISE" else 1
            row = f"{run['model']:<14}{metric:<8}"
            row += f"{run[key]:>22.4g}"
            row += f"{refs[ref_col][i]:>22.4g}"
            row += f"{refs['MPC'][i]:>22.4g}"
            row += f"{refs['PI_PWM'][i]:>22.4g}"
            lines.append(row)
    return lines


def cmd_report(args) -> int:
    runs = []
    for d in args.run_dirs:
        d = Path(d)
        metrics_path = d / "metrics.json"
        manifest_path = d / "manifest.json"
        if not metrics_path.exists() or not manifest_path.exists():
            print(f"error: {d} is not a validation run directory (missing metrics/manifest)",
                  file=sys.stderr)
            return 2
        try:
            metrics = json.loads(metrics_path.read_text())
            json.loads(manifest_path.read_text())
        except json.JSONDecodeError as exc:
            print(f"error: malformed JSON in {d}: {exc}", file=sys.stderr)
            return 2
        runs.append(metrics)

    lines = _format_report_rows(runs)
    for line in lines:
        print(line)
    if args.out:
        out = Path(args.out)
        with open(out, "w", newline="") as fh:
            fh.write("model,metric,this_run,paper_QL,paper_MPC,paper_PI_PWM\n")
            for run in runs:
                regime = "stochastic" if run["model"] == "stochastic" else "deterministic"
                ref_col = (
                    "QL_quasi_steady_state" if run["model"] == "reduced" else "QL_complete_model"
                )
                refs = PAPER_TABLE2[regime]
                for i, (metric, key) in enumerate((("ISE", "mean_ise"), ("ITAE", "mean_itae"))):
                    fh.write(
                        f"{run['model']},{metric},{run[key]!r},"
                        f"{refs[ref_col][i]!r},{refs['MPC'][i]!r},{refs['PI_PWM'][i]!r}\n"
                    )
        print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toggleql",
        description="Train and validate a Q-learning controller for the genetic toggle switch.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train the policy on the reduced model")
    p_train.add_argument("--config", help="key-value config file (defaults to built-in values)")
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.add_argument("--seed", type=int, help="override rng_seed")
    p_train.add_argument("--episodes", type=int, help="override n_episodes")
    p_train.add_argument("--trials", type=int, help="override n_trials")
    p_train.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                         help="parallel trial workers (default: cores)")
    p_train.set_defaults(func=cmd_train)

    p_val = sub.add_parser("validate", help="run the frozen policy in closed loop")
    p_val.add_argument("--policy", required=True, help="policy file from 'train'")
    p_val.add_argument("--model", required=True, choices=sorted(MODEL_ALIASES),
                       help="reduced | det (full deterministic) | stoch (Langevin)")
    p_val.add_argument("--realizations", type=int, default=1)
    p_val.add_argument("--out", required=True, help="output directory")
    p_val.add_argument("--config", help="key-value config file")
    p_val.add_argument("--seed", type=int, help="override rng_seed")
    p_val.add_argument("--dt", type=float, default=0.1, help="integration step, min")
    p_val.add_argument("--tw", type=float, default=DEFAULT_WINDOW_MIN,
                       help="moving-average window, min")
    p_val.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel realization workers (default: cores)")
    p_val.set_defaults(func=cmd_validate)

    p_rep = sub.add_parser("report", help="tabulate runs against the published benchmarks")
    p_rep.add_argument("run_dirs", nargs="+", help="validation output directories")
    p_rep.add_argument("--out", help="also write the table as CSV")
    p_rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, PolicyIOError, PolicyMismatchError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
