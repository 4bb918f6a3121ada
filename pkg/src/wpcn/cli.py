"""Command-line entry point: solve single operating points, run parameter
sweeps, and roll out solved policies, emitting plot-ready CSV files.

Subcommands
    solve     solve one operating point (optimal and/or myopic)
    myopic    shorthand for solve with policy=myopic
    sweep     iterate a declared parameter sweep, one CSV row per
              (point, policy); failed points become error rows
    simulate  solve, then Monte-Carlo roll out the resulting policy

Exit codes: 0 success, 2 configuration error, 3 model-validity error,
4 numerical failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .baselines import myopic_policy
from .channel import build_channel_model
from .config import (ExperimentConfig, apply_overrides, load_config,
                     serialize_config)
from .errors import ConfigError, ModelValidityError, NumericalError
from .kernels import backend
from .sim import RNG_ALGORITHM, rollout, trajectory_to_csv
from .solver import MixedPolicy, solve_cmdp
from .system import build_model

RESULT_COLUMNS = [
    "sweep_param", "sweep_value", "policy", "reward_bits", "cost_J", "q",
    "beta_lo", "beta_hi", "fingerprint", "policy_match_ref", "status", "error",
]

_CHANNEL_KEYS = ("K", "varrho2", "varsigma2", "fD", "T", "d", "alpha")


def policy_fingerprint(policy_hi: np.ndarray, policy_lo: np.ndarray, q: float) -> str:
    """Stable hash of the two per-state action-index vectors plus the
    mixing weight rounded to 1e-9; equal fingerprints mean equal policies."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(policy_hi, dtype=np.int64).tobytes())
    h.update(b"|")
    h.update(np.ascontiguousarray(policy_lo, dtype=np.int64).tobytes())
    h.update(f"|q={round(float(q), 9):.9f}".encode())
    return h.hexdigest()


def db_ratio(a: float, b: float) -> float:
    """Throughput ratio in decibels, 10 log10(a / b)."""
    return 10.0 * math.log10(a / b)


def _build(cfg: ExperimentConfig):
    params = cfg.system_params()
    channel = build_channel_model(cfg.K, cfg.fading(), cfg.T, cfg.d, cfg.alpha)
    model = build_model(params, channel, cfg.action_grid(params))
    return model


def _solve_rows(cfg: ExperimentConfig, sweep_param: str = "", sweep_value="",
                channel=None):
    """Solve one operating point; returns one result row per policy kind."""
    params = cfg.system_params()
    if channel is None:
        channel = build_channel_model(cfg.K, cfg.fading(), cfg.T, cfg.d, cfg.alpha)
    model = build_model(params, channel, cfg.action_grid(params))
    cmdp = model.to_cmdp()
    rows = []
    base = {"sweep_param": sweep_param, "sweep_value": sweep_value,
            "policy_match_ref": "", "status": "ok", "error": ""}
    if cfg.policy in ("optimal", "both"):
        mix = solve_cmdp(cmdp, cfg.Eth, epsilon_beta=cfg.epsilon_beta,
                         epsilon_via=cfg.epsilon_via)
        rows.append(dict(
            base, policy="optimal", reward_bits=mix.reward, cost_J=mix.cost,
            q=mix.q, beta_lo=mix.beta_lo, beta_hi=mix.beta_hi,
            fingerprint=policy_fingerprint(mix.policy_hi, mix.policy_lo, mix.q),
        ))
    if cfg.policy in ("myopic", "both"):
        pol = myopic_policy(model, cfg.Eth)
        from .solver import evaluate_policy

        r, e = evaluate_policy(cmdp, pol)
        rows.append(dict(
            base, policy="myopic", reward_bits=r, cost_J=e, q="",
            beta_lo="", beta_hi="",
            fingerprint=policy_fingerprint(pol, pol, 1.0),
        ))
    return rows


def run_solve(cfg: ExperimentConfig):
    return _solve_rows(cfg)


def _coerce_sweep_value(name: str, value: float):
    return int(value) if name == "K" else float(value)


def _point_config(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    return cfg.replace(sweep_param="", sweep_values=[],
                       **{cfg.sweep_param: _coerce_sweep_value(cfg.sweep_param, value)})


def _sweep_point(args):
    cfg, value = args
    point_cfg = _point_config(cfg, value)
    try:
        return _solve_rows(point_cfg, sweep_param=cfg.sweep_param, sweep_value=value)
    except (ConfigError, ModelValidityError, NumericalError) as exc:
        return [{
            "sweep_param": cfg.sweep_param, "sweep_value": value, "policy": cfg.policy,
            "reward_bits": "", "cost_J": "", "q": "", "beta_lo": "", "beta_hi": "",
            "fingerprint": "", "policy_match_ref": "",
            "status": "error", "error": f"{type(exc).__name__}: {exc}",
        }]


def run_sweep(cfg: ExperimentConfig):
    """Solve every sweep point in order. The channel is constructed once
    and shared when the swept parameter does not affect it; failed points
    are recorded as error rows and the sweep continues."""
    if not cfg.sweep_param:
        raise ConfigError("no sweep declared: set sweep_param and sweep_values")
    jobs = [(cfg, value) for value in cfg.sweep_values]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_point = list(pool.map(_sweep_point, jobs))
    elif cfg.sweep_param not in _CHANNEL_KEYS:
        channel = build_channel_model(cfg.K, cfg.fading(), cfg.T, cfg.d, cfg.alpha)
        per_point = []
        for cfg_value in jobs:
            _, value = cfg_value
            try:
                per_point.append(_solve_rows(_point_config(cfg, value),
                                             sweep_param=cfg.sweep_param,
                                             sweep_value=value, channel=channel))
            except (ConfigError, ModelValidityError, NumericalError) as exc:
                per_point.append([{
                    "sweep_param": cfg.sweep_param, "sweep_value": value,
                    "policy": cfg.policy, "reward_bits": "", "cost_J": "", "q": "",
                    "beta_lo": "", "beta_hi": "", "fingerprint": "",
                    "policy_match_ref": "", "status": "error",
                    "error": f"{type(exc).__name__}: {exc}",
                }])
    else:
        per_point = [_sweep_point(job) for job in jobs]

    rows = [row for point in per_point for row in point]
    if cfg.sweep_param == "zeta":
        _mark_policy_match(rows)
    return rows


def _mark_policy_match(rows) -> None:
    """Fill the binary indicator column for gap-factor sweeps: 1 when the
    optimal policy at this point coincides with the one at zeta = 1."""
    ref = next((r["fingerprint"] for r in rows
                if r["policy"] == "optimal" and r["status"] == "ok"
                and float(r["sweep_value"]) == 1.0), None)
    if ref is None:
        return
    for r in rows:
        if r["policy"] == "optimal" and r["status"] == "ok":
            r["policy_match_ref"] = int(r["fingerprint"] == ref)


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_plotdata(rows, path, cfg: ExperimentConfig, created: str | None = None) -> str:
    """Write result rows as CSV plus a JSON metadata sidecar.

    Output is byte-stable given identical rows, config, and `created`
    stamp (the stamp defaults to the current UTC time and only appears in
    the sidecar, never in the CSV).
    """
    if not rows:
        raise ConfigError("refusing to write an empty result")
    path = str(path)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _format_cell(v) for k, v in row.items()})
        sidecar = {
            "tool": "wpcn",
            "version": __version__,
            "kernel_backend": backend(),
            "rng": RNG_ALGORITHM,
            "created_utc": created or datetime.now(timezone.utc).isoformat(),
            "columns": RESULT_COLUMNS,
            "config": serialize_config(cfg),
        }
        meta_path = path + ".meta.json"
        with open(meta_path, "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise ConfigError(f"cannot write results to {path}: {exc}") from None
    return meta_path


def _print_rows(rows) -> None:
    for row in rows:
        if row["status"] != "ok":
            print(f"{row['policy']:>8}  value={row['sweep_value']!r}  ERROR {row['error']}")
            continue
        label = f"{row['sweep_param']}={row['sweep_value']!r}  " if row["sweep_param"] else ""
        extra = f"  q={row['q']:.6f}  beta=[{row['beta_lo']:.6g}, {row['beta_hi']:.6g}]" \
            if row["policy"] == "optimal" else ""
        print(f"{row['policy']:>8}  {label}R={row['reward_bits']:.6f} bits/block  "
              f"E={row['cost_J']:.6e} J/block{extra}")


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = list(args.set or [])
    if args.output is not None:
        overrides.append(f"output={args.output}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return apply_overrides(cfg, overrides)


def _cmd_solve(args) -> int:
    cfg = _load(args)
    rows = run_solve(cfg)
    _print_rows(rows)
    if cfg.output:
        emit_plotdata(rows, cfg.output, cfg)
        print(f"wrote {cfg.output}")
    return 0


def _cmd_myopic(args) -> int:
    cfg = _load(args).replace(policy="myopic")
    rows = run_solve(cfg)
    _print_rows(rows)
    if cfg.output:
        emit_plotdata(rows, cfg.output, cfg)
        print(f"wrote {cfg.output}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    if args.param:
        values = [float(tok) for tok in args.values.split(",")] if args.values else []
        cfg = cfg.replace(sweep_param=args.param, sweep_values=values)
    rows = run_sweep(cfg)
    _print_rows(rows)
    if cfg.output:
        emit_plotdata(rows, cfg.output, cfg)
        print(f"wrote {cfg.output}")
    failures = sum(1 for r in rows if r["status"] != "ok")
    if failures:
        print(f"{failures} sweep point(s) failed", file=sys.stderr)
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load(args)
    model = _build(cfg)
    cmdp = model.to_cmdp()
    if cfg.policy == "myopic":
        policy: MixedPolicy | np.ndarray = myopic_policy(model, cfg.Eth)
    else:
        policy = solve_cmdp(cmdp, cfg.Eth, epsilon_beta=cfg.epsilon_beta,
                            epsilon_via=cfg.epsilon_via)
    s0 = model.state_index(args.h0, args.b0)
    traj = rollout(cmdp, policy, s0, args.horizon, cfg.seed)
    mean_r = float(traj.rewards.mean())
    mean_e = float(traj.costs.mean())
    print(f"rollout of {args.horizon} blocks from (h={args.h0}, b={args.b0}), "
          f"seed {cfg.seed}: mean R={mean_r:.6f} bits/block, mean E={mean_e:.6e} J/block")
    if cfg.output:
        trajectory_to_csv(traj, model, cfg.output)
        meta = {
            "tool": "wpcn", "version": __version__, "rng": RNG_ALGORITHM,
            "kernel_backend": backend(),
            "created_utc": datetime.now(timezone.utc).isoformat(),
            "seed": cfg.seed, "horizon": args.horizon,
            "policy": cfg.policy, "config": serialize_config(cfg),
        }
        with open(cfg.output + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {cfg.output}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable; flags win)")
    parser.add_argument("--output", help="output CSV path")
    parser.add_argument("--seed", type=int, help="RNG seed override")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wpcn",
        description="Energy-budgeted transmission policies for a wireless-powered link",
    )
    parser.add_argument("--version", action="version", version=f"wpcn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one operating point")
    _add_common(p_solve)
    p_solve.set_defaults(fn=_cmd_solve)

    p_myopic = sub.add_parser("myopic", help="evaluate the myopic baseline")
    _add_common(p_myopic)
    p_myopic.set_defaults(fn=_cmd_myopic)

    p_sweep = sub.add_parser("sweep", help="run a declared parameter sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--param", help="swept parameter (overrides config)")
    p_sweep.add_argument("--values", help="comma-separated sweep values")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_sim = sub.add_parser("simulate", help="roll out the solved policy")
    _add_common(p_sim)
    p_sim.add_argument("--horizon", type=int, default=100_000,
                       help="number of simulated blocks (default 100000)")
    p_sim.add_argument("--h0", type=int, default=1, help="initial channel state")
    p_sim.add_argument("--b0", type=int, default=0, help="initial battery level")
    p_sim.set_defaults(fn=_cmd_simulate)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ModelValidityError as exc:
        print(f"model validity error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
