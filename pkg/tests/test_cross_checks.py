"""Cross-route checks: the Monte Carlo and transfer-operator legs against each other."""

import numpy as np
import pytest

from rdslab.dynamics import NoiseLevel, PerturbedSystem
from rdslab.measures import sojourn_counts, sojourn_point, w1_distance
from rdslab.models import build_model
from rdslab.spaces import Partition, StateSpace
from rdslab.ulam import absorption, assemble_mean_sojourn, build_ulam, recurrent_classes, stationary_measure, weights

circle = StateSpace.circle()
cylinder = StateSpace.cylinder()


@pytest.fixture(scope="module")
def ns_system():
    model = build_model("north_south", a=0.05)
    return PerturbedSystem(space=circle, base_map=model.map, name="ns")


def test_point_sojourn_matches_class_stationary(ns_system):
    # a trapped start point's sojourn measure approaches the stationary
    # measure of its own class, within two cell widths
    level = NoiseLevel(0.02)
    part = Partition(circle, (400,))
    markov = build_ulam(ns_system, level, part)
    decomp = recurrent_classes(markov)
    cls = next(c for c in decomp.classes if part.cell_of(0.0) in set(c.tolist()))
    target = stationary_measure(markov, cls)
    mc = sojourn_point(ns_system, 0.1, level, 100_000, 50, part, seed=33)
    assert w1_distance(mc, target) <= 2.0 / 400


def test_assembled_matches_global_monte_carlo(ns_system):
    from rdslab.measures import global_sojourn_counts
    level = NoiseLevel(0.02)
    part = Partition(circle, (400,))
    markov = build_ulam(ns_system, level, part)
    decomp = recurrent_classes(markov)
    stationaries = [stationary_measure(markov, c) for c in decomp.classes]
    mu = assemble_mean_sojourn(stationaries, weights(absorption(markov, decomp), part))
    mc = global_sojourn_counts(ns_system, level, 40_000, 100, 4, part, seed=5)
    assert w1_distance(mu, mc.measure()) <= 2.0 / 400


def test_argmax_decision_stable_under_half_budget(ns_system):
    # which attractor a probe's sojourn measure concentrates on does not
    # change when the Monte Carlo budget is halved
    level = NoiseLevel(0.02)
    part = Partition(circle, (200,))
    for probe in (0.1, 0.6, 0.35):
        full = sojourn_point(ns_system, probe, level, 20_000, 8, part, seed=17)
        half = sojourn_point(ns_system, probe, level, 10_000, 4, part, seed=17)
        sink = 0.0 if circle.dist(part.cell_center(int(np.argmax(full.mass))), 0.0) < 0.25 else 0.5
        sink_half = 0.0 if circle.dist(part.cell_center(int(np.argmax(half.mass))), 0.0) < 0.25 else 0.5
        assert sink == sink_half


def test_clamp_events_counted_on_the_cylinder():
    drift_up = PerturbedSystem(
        space=cylinder,
        base_map=lambda z: np.column_stack([z[..., 0], np.clip(z[..., 1] + 0.05, -1, 1)]),
        name="drift_up")
    part = Partition(cylinder, (8, 8))
    x0 = np.tile([[0.5, 0.97]], (16, 1))
    counts = sojourn_counts(drift_up, x0, NoiseLevel(0.1), 50, part, seed=1)
    assert counts.clamp_events > 0


def test_bowen_interior_runs_never_clamp():
    model = build_model("bowen")
    sys_ = PerturbedSystem(space=cylinder, base_map=model.map, name="bowen")
    part = Partition(cylinder, (16, 16))
    x0 = np.column_stack([np.linspace(0, 1, 12, endpoint=False), np.zeros(12)])
    counts = sojourn_counts(sys_, x0, NoiseLevel(0.05), 300, part, seed=2)
    assert counts.clamp_events == 0


def test_support_width_grows_with_level(ns_system):
    # discrete analogue of "the support contains a ball of radius xi":
    # each class spans at least eps / cell width cells
    for eps in (0.02, 0.04):
        part = Partition(circle, (400,))
        markov = build_ulam(ns_system, NoiseLevel(eps), part)
        decomp = recurrent_classes(markov)
        for cells in decomp.classes:
            assert len(cells) >= int(np.ceil(eps * 400))
