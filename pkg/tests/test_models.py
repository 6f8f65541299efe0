import math

import numpy as np
import pytest

from oracles import newton_grad_h, phi_prime, tan_branch_root
from rdslab.errors import PhasePortraitError
from rdslab.models import (BOWEN_H_SEP, CHART_HALF, bowen_energy, bowen_map, bowen_saddles,
                           build_model, chart_from_circle, circle_from_chart, example1_map,
                           example1_sinks, map_derivative, model_names, north_south_map,
                           asym_two_sink_map, SINK_BRANCH_CAP)

FOUR_PI = 4.0 * math.pi


def test_model_registry():
    assert model_names() == ["asym_two_sink", "bowen", "example1", "north_south", "rotation"]
    with pytest.raises(KeyError):
        build_model("unknown")


# ---------------------------------------------------------------------------
# north_south
# ---------------------------------------------------------------------------

def test_north_south_fixed_points():
    assert north_south_map(0.0, 0.05) == pytest.approx(0.0)
    assert north_south_map(0.25, 0.05) == pytest.approx(0.25)
    assert north_south_map(0.5, 0.05) == pytest.approx(0.5)


def test_north_south_point_value():
    # one-line arithmetic recomputed independently
    expected = 0.1 - 0.05 * math.sin(0.4 * math.pi)
    assert expected == pytest.approx(0.05244717418524232)
    assert north_south_map(0.1, 0.05) == pytest.approx(expected, abs=1e-15)


def test_north_south_parameter_range():
    with pytest.raises(ValueError):
        north_south_map(0.1, a=0.2)
    with pytest.raises(ValueError):
        north_south_map(0.1, a=0.0)


def test_north_south_is_increasing_diffeomorphism():
    xs = np.arange(10_000) / 10_000
    deriv = 1.0 - 4 * math.pi * 0.05 * np.cos(FOUR_PI * xs)
    assert deriv.min() > 0.0
    fx = np.asarray(north_south_map(xs, 0.05))
    gaps = np.diff(np.unwrap(fx * 2 * np.pi) / (2 * np.pi))
    assert gaps.min() > 0.0


def test_north_south_refs():
    model = build_model("north_south", a=0.05)
    sinks = sorted(ref.points[0][0] for ref in model.refs)
    np.testing.assert_allclose(sinks, [0.0, 0.5], atol=1e-9)
    assert all(ref.basin_volume == pytest.approx(0.5, abs=1e-9) for ref in model.refs)
    for p in (0.0, 0.5):
        assert abs(map_derivative(model.map, p)) == pytest.approx(1 - FOUR_PI * 0.05, abs=1e-5)
    np.testing.assert_allclose(sorted(model.extras["sources"]), [0.25, 0.75], atol=1e-9)


# ---------------------------------------------------------------------------
# asym_two_sink
# ---------------------------------------------------------------------------

def test_asym_fixed_point_structure():
    model = build_model("asym_two_sink")
    fps = model.extras["fixed_points"]
    assert len(fps) == 4
    # cos(2 pi x) = -a/(2b) = -0.3 gives the two sources; sinks at 0 and 1/2
    x_src = math.acos(-0.3) / (2 * math.pi)
    np.testing.assert_allclose(sorted(fps), sorted([0.0, 0.5, x_src, 1.0 - x_src]), atol=1e-10)
    sinks = sorted(ref.points[0][0] for ref in model.refs)
    np.testing.assert_allclose(sinks, [0.0, 0.5], atol=1e-10)


def test_asym_basins_partition_the_circle():
    model = build_model("asym_two_sink")
    total = sum(ref.basin_volume for ref in model.refs)
    assert total == pytest.approx(1.0, abs=1e-9)
    volumes = sorted(ref.basin_volume for ref in model.refs)
    assert volumes[0] < 0.45 and volumes[1] > 0.55  # genuinely unequal


def test_asym_rejects_degenerate_portraits():
    # dominant first harmonic leaves only two fixed points
    with pytest.raises(PhasePortraitError, match="unexpected phase portrait"):
        build_model("asym_two_sink", a=0.1, b=0.01)


# ---------------------------------------------------------------------------
# example1
# ---------------------------------------------------------------------------

def test_chart_conversions_roundtrip():
    us = np.linspace(0.0, 1.0, 13, endpoint=False)
    np.testing.assert_allclose(circle_from_chart(chart_from_circle(us)), us, atol=1e-12)
    assert chart_from_circle(0.5) == pytest.approx(0.0)
    assert chart_from_circle(0.0) == pytest.approx(-CHART_HALF)


def test_degenerate_point_is_fixed():
    model = build_model("example1")
    p = model.extras["degenerate_point_circle"]
    assert p == pytest.approx(0.5)
    assert example1_map(p) == pytest.approx(p, abs=1e-12)


def test_critical_points_are_fixed_points_of_time_one_map():
    for s in (tan_branch_root(1), -1.0 / tan_branch_root(2)):
        s_chart = 1.0 / s if abs(s) > 1.0 else s  # tan_branch_root returns u = 1/s
        u = circle_from_chart(s_chart)
        assert example1_map(float(u)) == pytest.approx(float(u), abs=1e-8)


def test_outermost_sink_matches_bisection_oracle():
    u1 = tan_branch_root(1)
    s_star = 1.0 / u1
    assert s_star == pytest.approx(0.2554, abs=5e-4)  # sanity only; oracle is truth
    assert abs(phi_prime(s_star)) <= 1e-12
    sinks = example1_sinks(1)
    assert sinks[0].position_chart == pytest.approx(s_star, abs=1e-10)
    u = sinks[0].position_circle
    assert example1_map(u) == pytest.approx(u, abs=1e-8)


def test_sink_list_structure():
    sinks = example1_sinks(5)
    mags = [abs(s.position_chart) for s in sinks]
    assert all(a > b for a, b in zip(mags, mags[1:]))  # outermost first
    sides = [np.sign(s.position_chart) for s in sinks]
    assert sides == [1, -1, 1, -1, 1]  # consecutive sinks alternate sides
    for s in sinks:
        assert s.basin_volume > 0.0
        # basin endpoints are sources: phi' has a local max sign pattern there
        for src in s.sources_chart:
            assert abs(phi_prime(src)) <= 1e-10
            h = 1e-5 * abs(src)
            assert phi_prime(src - h) > 0.0 > phi_prime(src + h)


def test_critical_set_symmetric_under_negation():
    # phi is odd, so critical points come in +-|s| pairs with swapped roles
    # (the mirrored point of a sink is a source); the truncation edge, whose
    # mirror falls outside the computed list, is exempt
    sinks = example1_sinks(4)
    criticals = {round(s.position_chart, 12) for s in sinks}
    criticals |= {round(c, 12) for s in sinks for c in s.sources_chart}
    smallest = min(abs(c) for c in criticals)
    for c in criticals:
        if abs(c) > smallest + 1e-9:
            assert any(abs(c + d) <= 1e-10 for d in criticals), c
    # and the mirrored partner of each sink is classified as a source
    for s in sinks:
        h = 1e-5 * abs(s.position_chart)
        m = -s.position_chart
        assert phi_prime(m - h) > 0.0 > phi_prime(m + h)


def test_basin_volumes_sum_below_one_and_shrink():
    sinks = example1_sinks(6)
    assert sum(s.basin_volume for s in sinks) < 1.0
    volumes = [s.basin_volume for s in sinks]
    assert all(a > b for a, b in zip(volumes, volumes[1:]))


def test_sink_count_cap():
    with pytest.raises(ValueError, match=str(SINK_BRANCH_CAP)):
        example1_sinks(SINK_BRANCH_CAP + 1)
    with pytest.raises(ValueError):
        example1_sinks(0)


def test_example1_rk4_step_halving():
    # the gluing at the chart endpoints is only C^1, so fourth-order accuracy
    # holds away from orbits that cross the glue within one time unit
    # (circle coordinates below 0.1 flow across it); those get a loose bound
    us = np.linspace(0.1, 1.0, 100, endpoint=False)
    base = example1_map(us, substeps=64)
    fine = example1_map(us, substeps=128)
    gap = np.abs(base - fine)
    assert np.minimum(gap, 1.0 - gap).max() <= 1e-9
    cross = np.linspace(0.0, 0.1, 20, endpoint=False)
    gap = np.abs(example1_map(cross, substeps=64) - example1_map(cross, substeps=128))
    assert np.minimum(gap, 1.0 - gap).max() <= 1e-5


# ---------------------------------------------------------------------------
# bowen
# ---------------------------------------------------------------------------

def test_saddles_from_newton_oracle():
    saddles = bowen_saddles()
    assert len(saddles) == 2
    for (x, y) in saddles:
        assert y == 0.0  # dH/dy = y vanishes only at y = 0
        ox, oy, hxx = newton_grad_h(x + 0.004, 0.05)
        assert min(abs(ox - x), 1 - abs(ox - x)) <= 1e-10
        assert hxx < 0.0  # indefinite Hessian: saddle
    xs = sorted(x for x, _ in saddles)
    np.testing.assert_allclose(xs, [0.0, 0.5], atol=1e-10)
    assert bowen_energy(xs[0], 0.0) == pytest.approx(bowen_energy(xs[1], 0.0))
    assert bowen_energy(xs[0], 0.0) == pytest.approx(BOWEN_H_SEP)


def test_sources_are_energy_minima():
    model = build_model("bowen")
    sources = model.extras["sources"]
    np.testing.assert_allclose(sorted(x for x, _ in sources), [0.25, 0.75], atol=1e-10)
    for (x, y) in sources:
        assert -math.cos(FOUR_PI * x) > 0.0  # definite Hessian


def test_equilibria_fixed_under_time_one_map():
    model = build_model("bowen")
    for p in list(model.extras["saddles"]) + list(model.extras["sources"]):
        image = bowen_map(np.array(p))
        assert np.abs(image - np.array(p)).max() <= 1e-6


def test_energy_is_lyapunov_for_the_separatrix_level():
    rng = np.random.default_rng(7)
    pts = np.column_stack([rng.uniform(0, 1, 100), rng.uniform(-0.95, 0.95, 100)])
    # keep away from the equilibria where the contraction rate vanishes
    keep = np.ones(100, dtype=bool)
    for (ex, ey) in [(0.0, 0.0), (0.5, 0.0), (0.25, 0.0), (0.75, 0.0)]:
        keep &= (np.hypot(pts[:, 0] - ex, pts[:, 1] - ey) > 0.05)
    pts = pts[keep]
    h0 = bowen_energy(pts[:, 0], pts[:, 1])
    image = bowen_map(pts)
    h1 = bowen_energy(image[:, 0], image[:, 1])
    assert np.all(np.abs(h1 - BOWEN_H_SEP) <= np.abs(h0 - BOWEN_H_SEP) + 1e-6)


def test_bowen_rk4_step_halving():
    # 128 substeps give ~1.5e-9 worst-case on the full cylinder (the field is
    # strongest near |y| = 1); comfortably below every tolerance that uses the map
    rng = np.random.default_rng(3)
    pts = np.column_stack([rng.uniform(0, 1, 100), rng.uniform(-1, 1, 100)])
    a = bowen_map(pts, substeps=128)
    b = bowen_map(pts, substeps=256)
    gapx = np.abs(a[:, 0] - b[:, 0])
    gapx = np.minimum(gapx, 1.0 - gapx)
    assert max(gapx.max(), np.abs(a[:, 1] - b[:, 1]).max()) <= 2e-9


def test_separatrix_curve_lies_on_the_level():
    from rdslab.models import separatrix_polyline
    upper, lower = separatrix_polyline(64)
    for curve in (upper, lower):
        np.testing.assert_allclose(bowen_energy(curve[:, 0], curve[:, 1]),
                                   BOWEN_H_SEP, atol=1e-14)


def test_level_set_cells_cover_the_curve():
    from rdslab.spaces import Partition, StateSpace
    part = Partition(StateSpace.cylinder(), (64, 64))
    cells = build_model("bowen").refs[0].carrier_cells(part)
    from rdslab.models import separatrix_polyline
    upper, lower = separatrix_polyline(500)
    curve_cells = set(part.cell_of(np.vstack([upper, lower])).tolist())
    assert curve_cells <= set(cells.tolist())
