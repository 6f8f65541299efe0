import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import circular_w1_bruteforce, line_w1
from rdslab.dynamics import NoiseLevel, PerturbedSystem
from rdslab.errors import EmptySupportError, PartitionMismatchError, SpaceMismatchError
from rdslab.measures import (MeasureVector, SupportSet, dictionary_at_point,
                             dictionary_matrix, dictionary_resolution, global_sojourn_counts,
                             hausdorff, lipschitz_dictionary, sojourn_counts, sojourn_global,
                             sojourn_point, support_of, w1_distance)
from rdslab.models import build_model, rotation_map
from rdslab.spaces import Partition, StateSpace

circle = StateSpace.circle()
cylinder = StateSpace.cylinder()
part16 = Partition(circle, (16,))


def rotation_system(alpha):
    return PerturbedSystem(space=circle, base_map=lambda x: rotation_map(x, alpha),
                           name=f"rotation_{alpha}")


mass_strategy = st.lists(st.floats(min_value=0.0, max_value=10.0), min_size=16, max_size=16)


# ---------------------------------------------------------------------------
# MeasureVector basics
# ---------------------------------------------------------------------------

def test_measure_normalizes_on_construction():
    mv = MeasureVector(part16, np.full(16, 3.0))
    assert mv.mass.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(mv.mass >= 0.0)


def test_measure_rejects_negative_and_empty():
    with pytest.raises(ValueError):
        MeasureVector(part16, np.full(16, -1.0))
    with pytest.raises(ValueError):
        MeasureVector(part16, np.zeros(16))


def test_measure_mass_is_immutable():
    mv = MeasureVector.uniform(part16)
    with pytest.raises(ValueError):
        mv.mass[0] = 2.0


# ---------------------------------------------------------------------------
# W1, oracle-frozen values first
# ---------------------------------------------------------------------------

def test_w1_two_atoms_quarter_apart():
    mu = MeasureVector.delta(part16, 0.0)
    nu = MeasureVector.delta(part16, 0.25)
    d = w1_distance(mu, nu)
    assert abs(d - 0.25) <= 1.0 / 16


def test_w1_identity_is_zero():
    mu = MeasureVector(part16, np.arange(1.0, 17.0))
    assert w1_distance(mu, mu) == 0.0


def test_w1_uniform_vs_delta_matches_transport_oracle():
    # brute-force cut enumeration gives 1/4 (mean circle distance to a point);
    # frozen from the oracle, not from the closed form alone
    mu = MeasureVector.uniform(part16)
    nu = MeasureVector.delta(part16, 0.0)
    oracle = circular_w1_bruteforce(mu.mass, nu.mass, part16.centers)
    assert oracle == pytest.approx(0.25, abs=1.0 / 16)
    assert w1_distance(mu, nu) == pytest.approx(oracle, abs=1e-12)


@given(mass_strategy, mass_strategy)
@settings(max_examples=60, deadline=None)
def test_w1_agrees_with_bruteforce_cut_oracle(raw_a, raw_b):
    if sum(raw_a) <= 0 or sum(raw_b) <= 0:
        return
    mu = MeasureVector(part16, np.asarray(raw_a))
    nu = MeasureVector(part16, np.asarray(raw_b))
    oracle = circular_w1_bruteforce(mu.mass, nu.mass, part16.centers)
    assert w1_distance(mu, nu) == pytest.approx(oracle, abs=1e-10)


@given(mass_strategy, mass_strategy, mass_strategy)
@settings(max_examples=100, deadline=None)
def test_w1_is_a_metric_on_1d(raw_a, raw_b, raw_c):
    if min(sum(raw_a), sum(raw_b), sum(raw_c)) <= 0:
        return
    mu, nu, rho = (MeasureVector(part16, np.asarray(r)) for r in (raw_a, raw_b, raw_c))
    assert w1_distance(mu, nu) == pytest.approx(w1_distance(nu, mu), abs=1e-14)
    assert w1_distance(mu, mu) <= 1e-12
    assert w1_distance(mu, rho) <= w1_distance(mu, nu) + w1_distance(nu, rho) + 1e-12


def test_w1_interval_exact_kantorovich():
    seg = Partition(StateSpace.interval(0.0, 2.0), (8,))
    mu = MeasureVector.delta(seg, 0.125)   # cell 0
    nu = MeasureVector.delta(seg, 1.875)   # cell 7
    # 7 cells apart, each 1/8 in the normalized metric
    assert w1_distance(mu, nu) == pytest.approx(7 / 8)
    oracle = line_w1(mu.mass, nu.mass, np.arange(8) / 8)
    assert w1_distance(mu, nu) == pytest.approx(oracle)


def test_w1_rejects_partition_mismatch():
    mu = MeasureVector.uniform(part16)
    nu = MeasureVector.uniform(Partition(circle, (8,)))
    with pytest.raises(PartitionMismatchError, match="partition mismatch"):
        w1_distance(mu, nu)


# ---------------------------------------------------------------------------
# the 2d test-function dictionary
# ---------------------------------------------------------------------------

def test_dictionary_has_32_lipschitz_functions():
    funcs = lipschitz_dictionary()
    assert len(funcs) == 32
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0, 1, 400), rng.uniform(-1, 1, 400)])
    qts = np.column_stack([rng.uniform(0, 1, 400), rng.uniform(-1, 1, 400)])
    d = cylinder.dist(pts, qts)
    for name, f in funcs:
        gap = np.abs(f(pts[:, 0], pts[:, 1]) - f(qts[:, 0], qts[:, 1]))
        assert np.all(gap <= d * (1.0 + 1e-9) + 1e-12), name


def test_dictionary_distance_separates_and_vanishes():
    part = Partition(cylinder, (32, 32))
    mu = MeasureVector.delta(part, (0.0, 0.0))
    nu = MeasureVector.delta(part, (0.5, 0.0))
    assert w1_distance(mu, mu) == 0.0
    d = w1_distance(mu, nu)
    assert 0.05 <= d <= 0.5 + dictionary_resolution(part)


def test_dictionary_matrix_matches_pointwise_eval():
    part = Partition(cylinder, (8, 8))
    mat = dictionary_matrix(part)
    assert mat.shape == (32, 64)
    np.testing.assert_allclose(mat[:, 5], dictionary_at_point(part.cell_center(5)))


# ---------------------------------------------------------------------------
# support and Hausdorff
# ---------------------------------------------------------------------------

def test_support_examples():
    mv = MeasureVector(part16, np.eye(16)[3])
    assert list(support_of(mv).cells) == [3]
    assert len(support_of(MeasureVector.uniform(part16))) == 16
    mass = np.zeros(16)
    mass[0], mass[1], mass[2] = 0.5, 0.5, 1e-9
    assert list(support_of(MeasureVector(part16, mass)).cells) == [0, 1]


def test_support_threshold_sensitivity():
    mass = np.zeros(16)
    mass[0], mass[1] = 1.0, 1e-5
    for tau in (1e-8, 1e-6, 1e-4):
        cells = support_of(MeasureVector(part16, mass), threshold=tau).cells
        expected = [0, 1] if tau < 1e-5 else [0]
        assert list(cells) == expected


def test_hausdorff_examples():
    part = Partition(circle, (100,))
    a = SupportSet(part, np.array([part.cell_of(0.1)]), 0.0)
    b = SupportSet(part, np.array([part.cell_of(0.1), part.cell_of(0.3)]), 0.0)
    assert hausdorff(circle, a, b) == pytest.approx(0.2, abs=1 / 100)
    assert hausdorff(circle, a, a) == 0.0
    c = SupportSet(part, np.array([part.cell_of(0.0)]), 0.0)
    d = SupportSet(part, np.array([part.cell_of(0.5)]), 0.0)
    assert hausdorff(circle, c, d) == pytest.approx(0.5, abs=1 / 100)


def test_hausdorff_error_cases():
    part = Partition(circle, (10,))
    full = SupportSet(part, np.arange(10), 0.0)
    empty = SupportSet(part, np.array([], dtype=np.int64), 0.0)
    with pytest.raises(EmptySupportError, match="empty support"):
        hausdorff(circle, full, empty)
    with pytest.raises(SpaceMismatchError, match="space mismatch"):
        hausdorff(cylinder, full, full)


# ---------------------------------------------------------------------------
# sojourn estimators
# ---------------------------------------------------------------------------

def test_sojourn_point_fixed_deterministic_orbit():
    sys = rotation_system(0.0)
    part = Partition(circle, (20,))
    mv = sojourn_point(sys, 0.37, NoiseLevel(0.0), 100, 1, part, seed=0)
    assert mv.mass[part.cell_of(0.37)] == pytest.approx(1.0)


def test_sojourn_point_period_four_rotation():
    sys = rotation_system(0.25)
    part = Partition(circle, (8,))
    mv = sojourn_point(sys, 0.0, NoiseLevel(0.0), 400, 1, part, seed=0)
    np.testing.assert_allclose(mv.mass[[0, 2, 4, 6]], 0.25, atol=1e-12)
    np.testing.assert_allclose(mv.mass[[1, 3, 5, 7]], 0.0, atol=1e-12)


def test_sojourn_single_visit_is_one_atom():
    sys = rotation_system(0.17)
    part = Partition(circle, (16,))
    counts = global_sojourn_counts(sys, NoiseLevel(0.05), 1, 1, 1, part, seed=4)
    assert counts.counts.sum() == 1


def test_sojourn_point_converges_to_attracting_fixed_point():
    model = build_model("north_south", a=0.05)
    sys = PerturbedSystem(space=circle, base_map=model.map, name="ns")
    part = Partition(circle, (50,))
    target = MeasureVector.delta(part, 0.0)
    dists = [w1_distance(sojourn_point(sys, 0.1, NoiseLevel(0.0), n, 1, part, seed=0), target)
             for n in (100, 1000, 10_000)]
    assert dists[0] >= dists[1] >= dists[2]
    assert dists[2] <= 2 / 50


def test_half_ensembles_merge_exactly():
    sys = rotation_system(0.3)
    part = Partition(circle, (32,))
    level = NoiseLevel(0.08)
    x0s = np.full(10, 0.2)
    full = sojourn_counts(sys, x0s, level, 500, part, seed=11, orbit_start=0)
    first = sojourn_counts(sys, x0s[:4], level, 500, part, seed=11, orbit_start=0)
    second = sojourn_counts(sys, x0s[4:], level, 500, part, seed=11, orbit_start=4)
    merged = first.merged(second)
    assert np.array_equal(merged.counts, full.counts)
    assert merged.orbits == full.orbits


def test_global_sojourn_merges_exactly_across_orbit_ranges():
    sys = rotation_system(0.3)
    part = Partition(circle, (32,))
    level = NoiseLevel(0.08)
    full = global_sojourn_counts(sys, level, 200, 6, 2, part, seed=5)
    a = global_sojourn_counts(sys, level, 200, 3, 2, part, seed=5,
                              orbit_start=0, total_orbits=12)
    b = global_sojourn_counts(sys, level, 200, 3, 2, part, seed=5,
                              orbit_start=6, total_orbits=12)
    assert np.array_equal(a.merged(b).counts, full.counts)


def test_rotation_with_noise_has_uniform_sojourn():
    # rotation + symmetric noise preserves the uniform measure (the unique
    # stationary one); W1 tolerance one cell width
    sys = rotation_system(0.25)
    part = Partition(circle, (40,))
    mv = sojourn_global(sys, NoiseLevel(0.05), 4000, 50, 2, part, seed=21)
    assert w1_distance(mv, MeasureVector.uniform(part)) <= 1 / 40


def test_symmetric_north_south_splits_mass_evenly():
    model = build_model("north_south", a=0.05)
    sys = PerturbedSystem(space=circle, base_map=model.map, name="ns")
    part = Partition(circle, (100,))
    mv = sojourn_global(sys, NoiseLevel(0.02), 20_000, 100, 2, part, seed=3)
    mass_near_zero = mv.mass[:25].sum() + mv.mass[75:].sum()
    assert mass_near_zero == pytest.approx(0.5, abs=0.02)


def test_sojourn_reproducible_bit_for_bit():
    sys = rotation_system(0.11)
    part = Partition(circle, (32,))
    a = sojourn_global(sys, NoiseLevel(0.03), 300, 5, 3, part, seed=9)
    b = sojourn_global(sys, NoiseLevel(0.03), 300, 5, 3, part, seed=9)
    assert np.array_equal(a.mass, b.mass)
