"""Artifact writers: measure CSVs, transition-matrix triplets, report.json.

Every artifact embeds the run configuration (as '#'-prefixed header lines in
CSVs, as a "config" object in JSON) so it can be reproduced bit-exactly from
the file alone.  Floats are written with 17 significant digits and JSON keys
are sorted, making byte-identical reruns a testable contract.

Report directory layout (schema_version 1):

    report.json          summary: status, config, per-level records, thresholds
    model_refs.json      reference data (sinks, basins, saddles, level curve)
    eps_<value>/
        markov.csv       sparse triplets row,col,prob
        markov.meta.txt  key=value sidecar (space, resolution, eps, mode, ...)
        mu.csv           assembled global measure
        class_<i>_stationary.csv
        mc_sojourn.csv   Monte Carlo cross-check measure (when enabled)
        alpha.csv        absorption probabilities per cell and class
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def fmt(x) -> str:
    return f"{float(x):.17g}"


def _config_header(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True, separators=(",", ":"))


def eps_dirname(eps: float) -> str:
    return f"eps_{eps:g}"


def write_measure_csv(path, mv, config: dict) -> None:
    part = mv.part
    lines = [_config_header(config), "cell_index,center_coords,mass"]
    centers = part.centers
    if part.space.ndim == 1:
        coord_strs = [fmt(c) for c in centers]
    else:
        coord_strs = [f"{fmt(c[0])};{fmt(c[1])}" for c in centers]
    for i, (coord, mass) in enumerate(zip(coord_strs, mv.mass)):
        lines.append(f"{i},{coord},{fmt(mass)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_measure_csv(path, part):
    """Read a measure CSV back onto a matching partition (round-trip helper)."""
    from .measures import MeasureVector
    mass = np.zeros(part.ncells)
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#") or line.startswith("cell_index"):
            continue
        idx, _, m = line.split(",")
        mass[int(idx)] = float(m)
    return MeasureVector(part, mass)


def write_markov_csv(path, model, config: dict) -> None:
    coo = model.matrix.tocoo()
    lines = [_config_header(config), "row,col,prob"]
    lines.extend(f"{r},{c},{fmt(v)}" for r, c, v in zip(coo.row, coo.col, coo.data))
    Path(path).write_text("\n".join(lines) + "\n")


def write_markov_meta(path, model, config: dict) -> None:
    part = model.part
    pairs = [
        ("space", part.space.kind),
        ("resolution", "x".join(str(n) for n in part.shape)),
        ("epsilon", fmt(model.epsilon)),
        ("mode", model.build_mode),
        ("seed", str(model.seed)),
        ("prune_tol", fmt(model.prune_tol)),
        ("samples_per_cell", str(model.samples_per_cell)),
        ("clamp_events", str(model.clamp_events)),
        ("config", json.dumps(config, sort_keys=True, separators=(",", ":"))),
    ]
    Path(path).write_text("".join(f"{k}={v}\n" for k, v in pairs))


def write_model_refs(out_dir, model) -> None:
    """Reference data for the plotting layer (sinks, basins, saddles, level curve)."""
    out = {
        "model": model.name,
        "params": model.params,
        "space": model.space.kind,
        "attractors": [
            {
                "id": ref.ref_id,
                "description": ref.description,
                "kind": ref.kind,
                "points": [list(np.atleast_1d(np.asarray(p, dtype=float))) for p in ref.points],
                "basin_arc": list(ref.basin_arc) if ref.basin_arc else None,
                "basin_volume": ref.basin_volume,
            }
            for ref in model.refs
        ],
    }
    extras = model.extras
    if "sources" in extras:
        out["sources"] = [list(np.atleast_1d(np.asarray(p, dtype=float))) for p in extras["sources"]]
    if "saddles" in extras:
        out["saddles"] = [list(map(float, s)) for s in extras["saddles"]]
    if "h_sep" in extras:
        out["separatrix_level"] = float(extras["h_sep"])
        from .models import separatrix_polyline
        upper, lower = separatrix_polyline(256)
        out["separatrix_polylines"] = [upper.tolist(), lower.tolist()]
    if "degenerate_point_circle" in extras:
        out["degenerate_point"] = extras["degenerate_point_circle"]
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    (path / "model_refs.json").write_text(json.dumps(out, sort_keys=True, indent=1) + "\n")


def write_eps_artifacts(out_dir, rec, config: dict) -> None:
    eps_dir = Path(out_dir) / eps_dirname(rec.epsilon)
    eps_dir.mkdir(parents=True, exist_ok=True)
    level_config = dict(config, epsilon=rec.epsilon)
    write_markov_csv(eps_dir / "markov.csv", rec.model, level_config)
    write_markov_meta(eps_dir / "markov.meta.txt", rec.model, level_config)
    write_measure_csv(eps_dir / "mu.csv", rec.assembled, level_config)
    for cls in rec.classes:
        write_measure_csv(eps_dir / f"class_{cls.class_index}_stationary.csv",
                          cls.stationary, level_config)
    alpha_lines = [_config_header(level_config),
                   "cell_index," + ",".join(f"alpha_{i}" for i in range(rec.alpha.alpha.shape[1]))]
    for i, row in enumerate(rec.alpha.alpha):
        alpha_lines.append(f"{i}," + ",".join(fmt(v) for v in row))
    (eps_dir / "alpha.csv").write_text("\n".join(alpha_lines) + "\n")
    if rec.mc_measure is not None:
        write_measure_csv(eps_dir / "mc_sojourn.csv", rec.mc_measure, level_config)


def write_mc_csv(out_dir, eps, mv, config: dict) -> None:
    eps_dir = Path(out_dir) / eps_dirname(eps)
    eps_dir.mkdir(parents=True, exist_ok=True)
    write_measure_csv(eps_dir / "mc_sojourn.csv", mv, dict(config, epsilon=eps))


def _record_summary(rec) -> dict:
    out = {
        "epsilon": rec.epsilon,
        "resolution": list(rec.part.shape),
        "cell_width": rec.part.metric_width,
        "l": rec.decomposition.count,
        "transient_cells": int(rec.decomposition.transient.size),
        "classes": [
            {
                "class_index": cls.class_index,
                "size": int(cls.cells.size),
                "beta": cls.beta,
                "matched": cls.matched_ref,
                "flag": cls.flag,
                "w1_to_reference": cls.w1_to_reference,
                "hausdorff_to_carrier": cls.hausdorff_to_carrier,
                "support_cells": int(len(cls.support)),
                "stationary_csv": f"{eps_dirname(rec.epsilon)}/class_{cls.class_index}_stationary.csv",
            }
            for cls in rec.classes
        ],
        "beta_sum": float(rec.beta.sum()),
        "mu_csv": f"{eps_dirname(rec.epsilon)}/mu.csv",
        "markov_csv": f"{eps_dirname(rec.epsilon)}/markov.csv",
        "mc": None,
        "hull": None,
        "support_hd_to_carrier_set": rec.support_hd_to_carrier_set,
        "ulam_clamp_events": rec.model.clamp_events,
        "checks": rec.checks,
    }
    if rec.mc_distance is not None:
        out["mc"] = {
            "distance_to_assembled": rec.mc_distance,
            "tolerance": rec.mc_tolerance,
            "clamp_events": rec.mc_clamp_events,
            "csv": f"{eps_dirname(rec.epsilon)}/mc_sojourn.csv",
        }
    if rec.hull_max is not None:
        out["hull"] = {
            "distance": rec.hull_max,
            "per_function": list(map(float, rec.hull_per_function)),
        }
    return out


def write_report_json(out_dir, report, config: dict, status: str) -> None:
    path = Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "status": status,
        "config": config,
        "model": {"name": report.model.name, "params": report.model.params,
                  "space": report.model.space.kind},
        "epsilons": report.epsilons,
        "records": [_record_summary(rec) for rec in report.records],
        "thresholds": report.thresholds,
    }
    (path / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
