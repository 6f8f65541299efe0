"""Command-line entry point: simulate / ulam / sweep / basins.

Configuration comes from flags, an optional key=value config file, and the
RDSLAB_SEED environment variable; precedence is flags > config file > env >
defaults.  Invalid configurations are rejected with a single aggregated error
report before any computation.  Exit status: 0 when every requested check
passed its tolerance, 1 when a check failed, 2 for configuration or
precondition errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys as _sys
from pathlib import Path

import numpy as np

from . import reporting
from .dynamics import NoiseLevel, PerturbedSystem
from .errors import RdslabError
from .measures import sojourn_point, global_sojourn_counts
from .models import build_model, model_names
from .sweep import McBudget, PartitionPolicy, basin_growth_check, run_sweep
from .ulam import absorption, build_ulam, recurrent_classes, stationary_measure, weights


def _parse_params(items):
    params = {}
    for item in items or []:
        for piece in item.split(","):
            if not piece:
                continue
            if "=" not in piece:
                raise ValueError(f"--params expects key=value, got {piece!r}")
            key, value = piece.split("=", 1)
            try:
                params[key.strip()] = float(value)
            except ValueError as exc:
                raise ValueError(f"--params value for {key!r} is not a number: {value!r}") from exc
    return params


def _read_config_file(path):
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config file line is not key=value: {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


_CONFIG_FILE_KEYS = {"model", "params", "eps", "cells_per_eps", "n", "samples",
                     "x_samples", "seed", "out", "samples_per_cell", "x0"}


def _build_parser():
    parser = argparse.ArgumentParser(prog="rdslab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, eps_list: bool):
        p.add_argument("--model", help="model name, see --model help for the list")
        p.add_argument("--params", action="append", default=None,
                       help="model parameters as k=v[,k=v...] (repeatable)")
        if eps_list:
            p.add_argument("--eps", help="comma-separated descending noise levels")
        else:
            p.add_argument("--eps", help="noise level")
        p.add_argument("--cells-per-eps", type=float, default=None,
                       help="1d partition rule: cell width = eps/this (default 8)")
        p.add_argument("--seed", type=int, default=None,
                       help="seed (default: RDSLAB_SEED env var, else 0)")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--samples-per-cell", type=int, default=None,
                       help="2d transition-matrix samples per cell (default 256)")

    p_sim = sub.add_parser("simulate", help="Monte Carlo sojourn measure")
    common(p_sim, eps_list=False)
    p_sim.add_argument("--n", type=int, default=None, help="visits per orbit (default 100000)")
    p_sim.add_argument("--samples", type=int, default=None, help="orbits per initial point (default 20)")
    p_sim.add_argument("--x-samples", type=int, default=None, help="initial points (default 200)")
    p_sim.add_argument("--x0", type=float, default=None,
                       help="track one initial point instead of volume-distributed ones")

    p_ulam = sub.add_parser("ulam", help="transition matrix, classes, stationary measures, weights")
    common(p_ulam, eps_list=False)

    p_sweep = sub.add_parser("sweep", help="descending noise-level sweep with full diagnostics")
    common(p_sweep, eps_list=True)
    p_sweep.add_argument("--n", type=int, default=None)
    p_sweep.add_argument("--samples", type=int, default=None)
    p_sweep.add_argument("--x-samples", type=int, default=None)
    p_sweep.add_argument("--no-mc", action="store_true", help="skip the Monte Carlo cross-check")

    p_bas = sub.add_parser("basins", help="absorption probabilities at probe points per level")
    common(p_bas, eps_list=True)
    p_bas.add_argument("--probes", help="comma-separated probe coordinates")
    p_bas.add_argument("--ref", default=None, help="attractor id (default: first reference)")
    return parser


def _resolve(args):
    """Merge flag / config-file / environment values; collect every error."""
    errors = []
    file_values = {}
    if args.config:
        try:
            file_values = _read_config_file(args.config)
            unknown = set(file_values) - _CONFIG_FILE_KEYS
            if unknown:
                errors.append(f"unknown config file keys: {sorted(unknown)}")
        except (OSError, ValueError) as exc:
            errors.append(str(exc))

    def pick(name, default=None):
        flag = getattr(args, name, None)
        if flag is not None:
            return flag
        if name in file_values:
            return file_values[name]
        return default

    cfg = argparse.Namespace()
    cfg.command = args.command

    model_name = pick("model")
    if not model_name:
        errors.append("--model is required")
    elif model_name not in model_names():
        errors.append(f"unknown model {model_name!r}; available: {', '.join(model_names())}")
    cfg.model = model_name

    try:
        raw_params = args.params if args.params is not None else (
            [file_values["params"]] if "params" in file_values else None)
        cfg.params = _parse_params(raw_params)
    except ValueError as exc:
        errors.append(str(exc))
        cfg.params = {}

    eps_raw = pick("eps")
    cfg.epsilons = []
    if eps_raw is None:
        errors.append("--eps is required")
    else:
        try:
            cfg.epsilons = [float(v) for v in str(eps_raw).split(",") if v != ""]
            if not cfg.epsilons:
                errors.append("--eps is empty")
            if any(e == 0.0 for e in cfg.epsilons):
                errors.append("degenerate noise: eps must be positive")
            elif any(not 0.0 < e < 0.25 for e in cfg.epsilons):
                errors.append("noise levels must lie in (0, 0.25)")
        except ValueError:
            errors.append(f"--eps is not a number list: {eps_raw!r}")

    def pick_num(name, default, cast):
        value = pick(name, default)
        try:
            return cast(value)
        except (TypeError, ValueError):
            errors.append(f"--{name.replace('_', '-')} must be a number, got {value!r}")
            return default

    cfg.cells_per_eps = pick_num("cells_per_eps", 8.0, float)
    if cfg.cells_per_eps < 4.0:
        errors.append("cells-per-eps below 4 makes the partition too coarse for the noise level")
    cfg.seed = pick_num("seed", int(os.environ.get("RDSLAB_SEED", "0")), int)
    cfg.n = pick_num("n", 100_000, int) if hasattr(args, "n") else None
    cfg.samples = pick_num("samples", 20, int) if hasattr(args, "samples") else None
    cfg.x_samples = pick_num("x_samples", 200, int) if hasattr(args, "x_samples") else None
    cfg.samples_per_cell = pick_num("samples_per_cell", 256, int)
    cfg.x0 = getattr(args, "x0", None)
    if cfg.x0 is None and "x0" in file_values and args.command == "simulate":
        cfg.x0 = float(file_values["x0"])
    cfg.no_mc = getattr(args, "no_mc", False)
    cfg.probes = []
    if args.command == "basins":
        probes_raw = getattr(args, "probes", None)
        if not probes_raw:
            errors.append("--probes is required for basins")
        else:
            try:
                cfg.probes = [float(v) for v in probes_raw.split(",")]
            except ValueError:
                errors.append(f"--probes is not a number list: {probes_raw!r}")
        cfg.ref = getattr(args, "ref", None)

    out = pick("out")
    if out is None:
        errors.append("--out is required")
    cfg.out = Path(out) if out else None

    if args.command in ("simulate", "ulam") and len(cfg.epsilons) > 1:
        errors.append(f"{args.command} takes a single noise level")
    if args.command in ("sweep", "basins") and len(cfg.epsilons) > 1:
        if any(b >= a for a, b in zip(cfg.epsilons, cfg.epsilons[1:])):
            errors.append("noise levels must be strictly decreasing")
    return cfg, errors


def _config_dict(cfg) -> dict:
    out = {"command": cfg.command, "model": cfg.model, "params": cfg.params,
           "epsilons": cfg.epsilons, "cells_per_eps": cfg.cells_per_eps, "seed": cfg.seed}
    for key in ("n", "samples", "x_samples", "samples_per_cell", "x0"):
        value = getattr(cfg, key, None)
        if value is not None:
            out[key] = value
    return out


def _cmd_simulate(cfg) -> int:
    model = build_model(cfg.model, **cfg.params)
    sys_ = PerturbedSystem(space=model.space, base_map=model.map, name=model.name)
    level = NoiseLevel(cfg.epsilons[0])
    policy = PartitionPolicy(cells_per_eps=cfg.cells_per_eps)
    part = policy.partition_for(model.space, level.epsilon)
    if cfg.x0 is not None:
        mv = sojourn_point(sys_, cfg.x0, level, cfg.n, cfg.samples, part, cfg.seed)
        clamps = 0
    else:
        counts = global_sojourn_counts(sys_, level, cfg.n, cfg.x_samples, cfg.samples,
                                       part, cfg.seed)
        mv = counts.measure()
        clamps = counts.clamp_events
    cfg.out.mkdir(parents=True, exist_ok=True)
    config = _config_dict(cfg)
    reporting.write_model_refs(cfg.out, model)
    reporting.write_measure_csv(cfg.out / "sojourn.csv", mv, config)
    summary = {"config": config, "clamp_events": clamps,
               "cells": part.ncells, "resolution": list(part.shape)}
    (cfg.out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    print(f"wrote {cfg.out / 'sojourn.csv'} ({part.ncells} cells)")
    return 0


def _cmd_ulam(cfg) -> int:
    model = build_model(cfg.model, **cfg.params)
    sys_ = PerturbedSystem(space=model.space, base_map=model.map, name=model.name)
    level = NoiseLevel(cfg.epsilons[0])
    policy = PartitionPolicy(cells_per_eps=cfg.cells_per_eps)
    part = policy.partition_for(model.space, level.epsilon)
    markov = build_ulam(sys_, level, part, samples_per_cell=cfg.samples_per_cell, seed=cfg.seed)
    decomp = recurrent_classes(markov)
    stationaries = [stationary_measure(markov, cells) for cells in decomp.classes]
    table = absorption(markov, decomp)
    beta = weights(table, part)
    cfg.out.mkdir(parents=True, exist_ok=True)
    config = _config_dict(cfg)
    reporting.write_model_refs(cfg.out, model)
    reporting.write_markov_csv(cfg.out / "markov.csv", markov, config)
    reporting.write_markov_meta(cfg.out / "markov.meta.txt", markov, config)
    for i, mv in enumerate(stationaries):
        reporting.write_measure_csv(cfg.out / f"class_{i}_stationary.csv", mv, config)
    summary = {
        "config": config,
        "l": decomp.count,
        "classes": [{"class_index": i, "size": int(c.size), "beta": float(b)}
                    for i, (c, b) in enumerate(zip(decomp.classes, beta))],
        "beta": [float(b) for b in beta],
        "row_sum_error": float(np.abs(markov.row_sums() - 1.0).max()),
        "alpha_row_sum_error": float(np.abs(table.alpha.sum(axis=1) - 1.0).max()),
    }
    (cfg.out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    print(f"l={decomp.count} beta={[round(float(b), 6) for b in beta]}")
    ok = summary["row_sum_error"] <= 1e-12 and summary["alpha_row_sum_error"] <= 1e-9
    return 0 if ok else 1


def _cmd_sweep(cfg) -> int:
    model = build_model(cfg.model, **cfg.params)
    policy = PartitionPolicy(cells_per_eps=cfg.cells_per_eps)
    mc = McBudget(n=cfg.n, samples=cfg.samples, x_samples=cfg.x_samples,
                  enabled=not cfg.no_mc)
    report = run_sweep(model, cfg.epsilons, policy=policy, mc=mc, seed=cfg.seed,
                       out_dir=cfg.out, samples_per_cell=cfg.samples_per_cell,
                       config_extra={"command": "sweep"})
    for rec in report.records:
        status = "ok" if all(rec.checks.values()) else "FAIL"
        print(f"eps={rec.epsilon:g} l={rec.decomposition.count} "
              f"beta={[round(float(b), 4) for b in rec.beta]} {status}")
    return 0 if report.passed else 1


def _cmd_basins(cfg) -> int:
    model = build_model(cfg.model, **cfg.params)
    refs = {r.ref_id: r for r in model.refs}
    ref_id = cfg.ref or model.refs[0].ref_id
    if ref_id not in refs:
        raise ValueError(f"unknown attractor id {ref_id!r}; available: {sorted(refs)}")
    policy = PartitionPolicy(cells_per_eps=cfg.cells_per_eps)
    table = basin_growth_check(model, refs[ref_id], cfg.epsilons, cfg.probes,
                               policy=policy, seed=cfg.seed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    config = _config_dict(cfg)
    lines = ["# config: " + json.dumps(config, sort_keys=True, separators=(",", ":")),
             "epsilon," + ",".join(f"alpha_at_{p:g}" for p in table.probes) + ",basin_fraction_absorbed"]
    for k, eps in enumerate(table.epsilons):
        row = [reporting.fmt(eps)] + [reporting.fmt(v) for v in table.probe_alpha[k]]
        row.append(reporting.fmt(table.basin_fraction[k]))
        lines.append(",".join(row))
    (cfg.out / "basin_growth.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {cfg.out / 'basin_growth.csv'}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    cfg, errors = _resolve(args)
    if errors:
        print("configuration errors:", file=_sys.stderr)
        for err in errors:
            print(f"  - {err}", file=_sys.stderr)
        return 2
    handlers = {"simulate": _cmd_simulate, "ulam": _cmd_ulam,
                "sweep": _cmd_sweep, "basins": _cmd_basins}
    try:
        return handlers[cfg.command](cfg)
    except RdslabError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
