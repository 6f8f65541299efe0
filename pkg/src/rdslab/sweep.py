"""Noise-level sweeps and the diagnostics that make the limit claims testable.

A sweep runs the chain analysis at a descending list of noise levels and
tabulates, per level: the number of coexisting stationary classes, the match
between classes and reference attractors (containment of the carrier cells),
per-class weights, distances of each stationary measure to its reference
measure, Hausdorff distances of supports to carriers, the assembled global
measure, a Monte Carlo cross-check, and (on the cylinder) the distance of the
global measure's test-function integrals to the segment spanned by the two
saddle Diracs.  Nothing is extrapolated: the report tabulates the swept levels
and per-attractor threshold intervals estimated from them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import reporting
from .dynamics import NoiseLevel, PerturbedSystem
from .errors import CarrierSplitError, DegenerateNoiseError
from .measures import (MeasureVector, SupportSet, dictionary_at_point, dictionary_matrix,
                       global_sojourn_counts, hausdorff, support_of, w1_distance)
from .models import AttractorRef, ModelSpec
from .spaces import CYLINDER, Partition
from .ulam import (AbsorptionTable, MarkovModel, RecurrentDecomposition, absorption,
                   assemble_mean_sojourn, build_ulam, recurrent_classes, stationary_measure,
                   weights)

MC_TOL_CELL_WIDTHS = 2.0   # 1d cross-check tolerance, in cell widths
MC_TOL_DICTIONARY = 0.02   # 2d cross-check tolerance over the test dictionary


@dataclass(frozen=True)
class PartitionPolicy:
    """Per-level resolution rule: 1d width = eps/cells_per_eps; 2d grids capped."""

    cells_per_eps: float = 8.0
    grid2d_cells_per_eps: float = 4.0
    grid2d_min: int = 128
    grid2d_max: int = 256

    def partition_for(self, space, eps: float) -> Partition:
        if space.ndim == 1:
            n = int(math.ceil(self.cells_per_eps / eps))
            return Partition(space, (n,))
        n = int(math.ceil(self.grid2d_cells_per_eps / eps))
        n = min(max(n, self.grid2d_min), self.grid2d_max)
        return Partition(space, (n, n))


@dataclass(frozen=True)
class McBudget:
    n: int = 100_000
    samples: int = 20
    x_samples: int = 200
    enabled: bool = True


@dataclass
class ClassRecord:
    class_index: int
    cells: np.ndarray
    stationary: MeasureVector
    support: SupportSet
    beta: float
    matched_ref: str | None
    flag: str                      # "matched" | "merged" | "spurious"
    w1_to_reference: float | None
    hausdorff_to_carrier: float | None


@dataclass
class EpsRecord:
    epsilon: float
    part: Partition
    model: MarkovModel
    decomposition: RecurrentDecomposition
    classes: list
    alpha: AbsorptionTable
    beta: np.ndarray
    assembled: MeasureVector
    mc_measure: MeasureVector | None
    mc_distance: float | None
    mc_tolerance: float | None
    mc_clamp_events: int
    hull_max: float | None
    hull_per_function: np.ndarray | None
    support_hd_to_carrier_set: float | None
    checks: dict = field(default_factory=dict)


@dataclass
class SweepReport:
    model: ModelSpec
    epsilons: list
    records: list
    thresholds: dict
    seed: int
    out_dir: Path | None

    @property
    def passed(self) -> bool:
        return all(all(rec.checks.values()) for rec in self.records)


@dataclass(frozen=True)
class MatchResult:
    """Outcome of containment matching between recurrent classes and references."""

    class_ref: dict      # class index -> ref_id or None
    class_flag: dict     # class index -> "matched" | "merged" | "spurious"
    ref_class: dict      # ref_id -> class index or None (unresolved)


def match_classes(decomp: RecurrentDecomposition, refs, part: Partition) -> MatchResult:
    """Containment matching: a class is matched to the unique reference whose
    carrier cells it contains; zero carriers flags "spurious", several flags
    "merged".  A carrier straddling two classes means the partition is too
    coarse and raises CarrierSplitError.
    """
    carriers = {ref.ref_id: ref.carrier_cells(part) for ref in refs}
    per_class_refs: dict = {i: [] for i in range(decomp.count)}
    ref_class: dict = {}
    for ref_id, cells in carriers.items():
        hit_classes = np.unique(decomp.class_of[cells])
        hit_classes = hit_classes[hit_classes >= 0]
        if hit_classes.size > 1:
            raise CarrierSplitError(
                f"carrier split: carrier of {ref_id} intersects classes {hit_classes.tolist()}")
        contained = (hit_classes.size == 1
                     and np.all(decomp.class_of[cells] == hit_classes[0]))
        if contained:
            per_class_refs[int(hit_classes[0])].append(ref_id)
            ref_class[ref_id] = int(hit_classes[0])
        else:
            ref_class[ref_id] = None
    class_ref, class_flag = {}, {}
    for i in range(decomp.count):
        inside = per_class_refs[i]
        if len(inside) == 1:
            class_ref[i], class_flag[i] = inside[0], "matched"
        elif len(inside) == 0:
            class_ref[i], class_flag[i] = None, "spurious"
        else:
            class_ref[i], class_flag[i] = None, "merged"
            for ref_id in inside:
                ref_class[ref_id] = None
    return MatchResult(class_ref=class_ref, class_flag=class_flag, ref_class=ref_class)


def hull_distance(values, vertex_values):
    """Max over test functions of the distance from a value to the segment
    between the two vertex values (degenerate segments allowed).

    ``values``: shape (k,); ``vertex_values``: shape (k, 2).
    Returns (max distance, per-function distances).
    """
    values = np.asarray(values, dtype=float)
    vv = np.asarray(vertex_values, dtype=float)
    lo = vv.min(axis=1)
    hi = vv.max(axis=1)
    per = np.maximum(np.maximum(lo - values, values - hi), 0.0)
    return float(per.max()), per


def run_sweep(model: ModelSpec, epsilons, policy: PartitionPolicy | None = None,
              mc: McBudget | None = None, seed: int = 0, out_dir=None,
              refs=None, prune_tol: float = 1e-12, samples_per_cell: int = 256,
              stationary_method: str = "direct", config_extra: dict | None = None) -> SweepReport:
    """Run the full per-level analysis over a strictly descending list of levels.

    Artifacts (measure CSVs, the transition-matrix triplet CSV, report.json,
    model_refs.json) are written under ``out_dir`` when given; report.json is
    rewritten after every level so an interrupted run leaves valid per-level
    directories and a report marked incomplete.
    """
    epsilons = [float(e) for e in epsilons]
    if any(e <= 0.0 for e in epsilons):
        raise DegenerateNoiseError("degenerate noise")
    if any(b >= a for a, b in zip(epsilons, epsilons[1:])):
        raise ValueError("noise levels must be strictly decreasing")
    policy = policy or PartitionPolicy()
    mc = mc or McBudget()
    refs = model.refs if refs is None else tuple(refs)
    sys = PerturbedSystem(space=model.space, base_map=model.map, name=model.name)
    out_path = Path(out_dir) if out_dir is not None else None

    config = {
        "model": model.name, "params": model.params, "epsilons": epsilons,
        "cells_per_eps": policy.cells_per_eps, "seed": seed,
        "mc": {"enabled": mc.enabled, "n": mc.n, "samples": mc.samples,
               "x_samples": mc.x_samples},
        "prune_tol": prune_tol, "samples_per_cell": samples_per_cell,
        "stationary_method": stationary_method,
    }
    if config_extra:
        config.update(config_extra)

    report = SweepReport(model=model, epsilons=epsilons, records=[], thresholds={},
                         seed=seed, out_dir=out_path)
    if out_path is not None:
        reporting.write_model_refs(out_path, model)
        reporting.write_report_json(out_path, report, config, status="incomplete")

    for eps in epsilons:
        try:
            rec = _run_one_level(model, sys, refs, eps, policy, mc, seed, prune_tol,
                                 samples_per_cell, stationary_method)
        except Exception as exc:
            raise type(exc)(f"[eps={eps:g}] {exc}") from exc
        report.records.append(rec)
        if out_path is not None:
            reporting.write_eps_artifacts(out_path, rec, config)
            reporting.write_report_json(out_path, report, config, status="incomplete")

    report.thresholds = threshold_estimate(report)
    if out_path is not None:
        reporting.write_report_json(out_path, report, config, status="complete")
    return report


def _run_one_level(model, sys, refs, eps, policy, mc, seed, prune_tol,
                   samples_per_cell, stationary_method) -> EpsRecord:
    level = NoiseLevel(eps)
    part = policy.partition_for(model.space, eps)
    markov = build_ulam(sys, level, part, prune_tol=prune_tol,
                        samples_per_cell=samples_per_cell, seed=seed)
    decomp = recurrent_classes(markov)
    stationaries = [stationary_measure(markov, cells, method=stationary_method)
                    for cells in decomp.classes]
    table = absorption(markov, decomp)
    beta = weights(table, part)
    assembled = assemble_mean_sojourn(stationaries, beta)

    match = match_classes(decomp, refs, part)
    classes = []
    for i, cells in enumerate(decomp.classes):
        ref_id = match.class_ref[i]
        w1_ref = hd_ref = None
        supp = support_of(stationaries[i])
        if ref_id is not None:
            ref = next(r for r in refs if r.ref_id == ref_id)
            w1_ref = w1_distance(stationaries[i], ref.reference_measure(part))
            carrier = SupportSet(part=part, cells=ref.carrier_cells(part), threshold=0.0)
            hd_ref = hausdorff(model.space, supp, carrier)
        classes.append(ClassRecord(class_index=i, cells=cells, stationary=stationaries[i],
                                   support=supp, beta=float(beta[i]), matched_ref=ref_id,
                                   flag=match.class_flag[i], w1_to_reference=w1_ref,
                                   hausdorff_to_carrier=hd_ref))

    mc_distance = mc_tol = mc_measure = None
    mc_clamps = 0
    if mc.enabled:
        counts = global_sojourn_counts(sys, level, mc.n, mc.x_samples, mc.samples, part, seed)
        mc_clamps = counts.clamp_events
        mc_measure = counts.measure()
        mc_distance = w1_distance(assembled, mc_measure)
        mc_tol = (MC_TOL_DICTIONARY if model.space.kind == CYLINDER
                  else MC_TOL_CELL_WIDTHS * part.metric_width)

    hull_max = hull_per = None
    support_hd = None
    if model.space.kind == CYLINDER and "saddles" in model.extras:
        s1, s2 = model.extras["saddles"]
        values = dictionary_matrix(part) @ assembled.mass
        vertex = np.column_stack([dictionary_at_point(s1), dictionary_at_point(s2)])
        hull_max, hull_per = hull_distance(values, vertex)
        level_ref = next((r for r in refs if r.kind == "level_set"), None)
        if level_ref is not None:
            carrier = SupportSet(part=part, cells=level_ref.carrier_cells(part), threshold=0.0)
            support_hd = hausdorff(model.space, support_of(assembled), carrier)

    checks = {
        "beta_sums_to_one": bool(abs(beta.sum() - 1.0) <= 1e-9),
        "alpha_rows_sum_to_one": bool(np.abs(table.alpha.sum(axis=1) - 1.0).max() <= 1e-9),
        "supports_disjoint": _supports_disjoint(classes),
    }
    if mc_distance is not None:
        checks["mc_within_tolerance"] = bool(mc_distance <= mc_tol)

    return EpsRecord(epsilon=eps, part=part, model=markov, decomposition=decomp,
                     classes=classes, alpha=table, beta=beta, assembled=assembled,
                     mc_measure=mc_measure, mc_distance=mc_distance, mc_tolerance=mc_tol,
                     mc_clamp_events=mc_clamps, hull_max=hull_max,
                     hull_per_function=hull_per, support_hd_to_carrier_set=support_hd,
                     checks=checks)


def _supports_disjoint(classes) -> bool:
    seen: set = set()
    for rec in classes:
        cells = set(rec.support.cells.tolist())
        if seen & cells:
            return False
        seen |= cells
    return True


def threshold_estimate(report: SweepReport) -> dict:
    """Per-attractor noise thresholds estimated from the sweep itself.

    An attractor's threshold interval starts at the largest swept level where
    it is matched to its own class and the supports are nested downward along
    all smaller swept levels (one coarse-cell slack for the change of grid).
    Censored outcomes are reported explicitly rather than extrapolated.
    """
    out: dict = {}
    refs = report.model.refs
    for ref in refs:
        matched_eps = []
        supports = {}
        for rec in report.records:
            for cls in rec.classes:
                if cls.matched_ref == ref.ref_id:
                    matched_eps.append(rec.epsilon)
                    supports[rec.epsilon] = (cls.support, rec.part.metric_width)
        if not matched_eps:
            out[ref.ref_id] = {"kind": "below_sweep_range"}
            continue
        verified = None
        for eps in sorted(matched_eps, reverse=True):
            smaller_swept = [e for e in report.epsilons if e < eps]  # already descending
            if all(e in supports for e in smaller_swept) and _nested_downward(
                    report.model.space, supports, [eps] + smaller_swept):
                verified = eps
                break
        swept_desc = report.epsilons
        if verified is None:
            out[ref.ref_id] = {"kind": "below_sweep_range"}
        elif verified == swept_desc[0]:
            out[ref.ref_id] = {"kind": "censored_top", "verified_up_to": verified}
        else:
            first_failing = min(e for e in swept_desc if e > verified)
            out[ref.ref_id] = {"kind": "interval", "verified_up_to": verified,
                               "first_failing": first_failing}
    return out


def _nested_downward(space, supports, eps_desc) -> bool:
    from .measures import _min_dist_to_set
    for bigger, smaller in zip(eps_desc, eps_desc[1:]):
        sup_big, w_big = supports[bigger]
        sup_small, _ = supports[smaller]
        d = _min_dist_to_set(space, sup_small.centers(), sup_big.centers())
        if d.max() > w_big * 1.01:
            return False
    return True


# ---------------------------------------------------------------------------
# basin growth diagnostics
# ---------------------------------------------------------------------------

@dataclass
class BasinGrowthTable:
    ref_id: str
    epsilons: list
    probes: list
    probe_alpha: np.ndarray      # (n_eps, n_probes) absorption into the reference class
    basin_fraction: np.ndarray   # fraction of oracle-basin volume with alpha >= 0.99


def _in_arc(u, arc):
    lo, hi = arc
    u = np.asarray(u, dtype=float)
    if lo <= hi:
        return (u >= lo) & (u < hi)
    return (u >= lo) | (u < hi)


def basin_growth_check(model: ModelSpec, ref: AttractorRef, epsilons, probes,
                       policy: PartitionPolicy | None = None, seed: int = 0,
                       prune_tol: float = 1e-12, check_steps: int = 4000) -> BasinGrowthTable:
    """Absorption probability into one attractor's class at each probe and level.

    Probes are first verified to lie in the deterministic basin by iterating
    the unperturbed map.  Reported alongside: the volume fraction of the
    oracle basin whose cells are absorbed with probability at least 0.99.
    """
    if model.space.ndim != 1:
        raise ValueError("basin growth diagnostics are defined for 1d models")
    policy = policy or PartitionPolicy()
    sys = PerturbedSystem(space=model.space, base_map=model.map, name=model.name)
    sink = ref.points[0][0]
    for p in probes:
        x = float(p)
        for _ in range(check_steps):
            x = float(np.asarray(model.map(np.array([x])))[0])
        if min(abs(x - sink), 1.0 - abs(x - sink)) > 1e-6:
            raise ValueError(f"probe {p} is not in the deterministic basin of {ref.ref_id}")
    epsilons = [float(e) for e in epsilons]
    probe_alpha = np.zeros((len(epsilons), len(probes)))
    fractions = np.zeros(len(epsilons))
    for k, eps in enumerate(epsilons):
        level = NoiseLevel(eps)
        part = policy.partition_for(model.space, eps)
        markov = build_ulam(sys, level, part, prune_tol=prune_tol, seed=seed)
        decomp = recurrent_classes(markov)
        # match against every reference so a merged class is not mistaken
        # for the requested attractor's own class
        match = match_classes(decomp, model.refs, part)
        ci = match.ref_class[ref.ref_id]
        if ci is None:
            probe_alpha[k] = np.nan
            fractions[k] = np.nan
            continue
        table = absorption(markov, decomp)
        cells = part.cell_of(np.asarray([float(p) for p in probes]))
        probe_alpha[k] = table.alpha[cells, ci]
        basin_cells = np.flatnonzero(_in_arc(part.centers, ref.basin_arc))
        fractions[k] = float(np.mean(table.alpha[basin_cells, ci] >= 0.99))
    return BasinGrowthTable(ref_id=ref.ref_id, epsilons=epsilons, probes=list(probes),
                            probe_alpha=probe_alpha, basin_fraction=fractions)
