import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdslab.dynamics import (NoiseLevel, PerturbedSystem, coverage_report,
                             perturbed_step, random_orbit, sample_noise, stream,
                             ORBIT_STREAM, NOISE_BLOCK)
from rdslab.errors import DegenerateNoiseError, NoiseExceedsLevelError
from rdslab.models import build_model, north_south_map, rotation_map
from rdslab.spaces import StateSpace

circle = StateSpace.circle()
cylinder = StateSpace.cylinder()


def rotation_system(alpha):
    return PerturbedSystem(space=circle, base_map=lambda x: rotation_map(x, alpha),
                           name=f"rotation_{alpha}")


def test_noise_level_validation():
    NoiseLevel(0.0)
    NoiseLevel(0.24)
    with pytest.raises(ValueError):
        NoiseLevel(0.25)
    with pytest.raises(ValueError):
        NoiseLevel(-0.01)


def test_perturbed_step_identity_map_zero_noise():
    sys = rotation_system(0.0)
    assert perturbed_step(sys, 0.37, 0.0, NoiseLevel(0.1)) == pytest.approx(0.37)


def test_perturbed_step_wraps():
    sys = rotation_system(0.0)
    assert perturbed_step(sys, 0.95, 0.1, NoiseLevel(0.1)) == pytest.approx(0.05)


def test_perturbed_step_fixed_point_of_north_south():
    model = build_model("north_south", a=0.05)
    sys = PerturbedSystem(space=circle, base_map=model.map, name="ns")
    assert perturbed_step(sys, 0.25, 0.0, NoiseLevel(0.1)) == pytest.approx(0.25)


def test_perturbed_step_rejects_large_noise():
    sys = rotation_system(0.0)
    with pytest.raises(NoiseExceedsLevelError, match="noise exceeds level"):
        perturbed_step(sys, 0.5, 0.2, NoiseLevel(0.1))


def test_sample_noise_zero_level_is_degenerate():
    rng = stream(0, ORBIT_STREAM, 0)
    assert sample_noise(NoiseLevel(0.0), rng) == 0.0
    assert np.all(sample_noise(NoiseLevel(0.0), rng, size=5, dim=2) == 0.0)


@given(st.integers(min_value=0, max_value=2 ** 32))
@settings(max_examples=25, deadline=None)
def test_sample_noise_support(seed):
    rng = stream(seed, ORBIT_STREAM, 0)
    level = NoiseLevel(0.1)
    draws = sample_noise(level, rng, size=256)
    assert np.all(np.abs(draws) <= 0.1)
    draws2 = sample_noise(level, rng, size=256, dim=2)
    assert np.all(draws2[:, 0] ** 2 + draws2[:, 1] ** 2 <= 0.1 ** 2 + 1e-18)


def test_sample_noise_empirical_mean():
    # standard error of the mean of uniform[-eps, eps] is eps/sqrt(3N)
    eps, n = 0.1, 10 ** 6
    bound = 3.0 * eps / np.sqrt(3.0 * n)
    rng = stream(123, ORBIT_STREAM, 0)
    draws = sample_noise(NoiseLevel(eps), rng, size=n)
    assert abs(draws.mean()) <= bound
    rng = stream(123, ORBIT_STREAM, 1)
    draws2 = sample_noise(NoiseLevel(eps), rng, size=n, dim=2)
    # disc coordinates have std eps/2 < eps/sqrt(3): same bound is conservative
    assert np.all(np.abs(draws2.mean(axis=0)) <= bound)


def test_random_orbit_rational_rotation():
    sys = rotation_system(0.25)
    orbit = random_orbit(sys, 0.1, NoiseLevel(0.0), 4, seed=0)
    np.testing.assert_allclose(orbit.states, [0.1, 0.35, 0.6, 0.85, 0.1], atol=1e-12)


def test_random_orbit_zero_steps():
    sys = rotation_system(0.25)
    orbit = random_orbit(sys, 0.42, NoiseLevel(0.1), 0, seed=5)
    assert orbit.states.shape == (1,)
    assert orbit.states[0] == pytest.approx(0.42)


def test_random_orbit_contracts_to_sink():
    model = build_model("north_south", a=0.05)
    sys = PerturbedSystem(space=circle, base_map=model.map, name="ns")
    orbit = random_orbit(sys, 0.1, NoiseLevel(0.0), 200, seed=0)
    # independent oracle: plain deterministic iteration
    x = 0.1
    for _ in range(200):
        x = float(np.asarray(north_south_map(np.array([x]), 0.05))[0])
    assert min(abs(x), 1 - abs(x)) <= 1e-6
    assert min(abs(orbit.states[-1]), 1 - abs(orbit.states[-1])) <= 1e-6
    assert orbit.states[-1] == pytest.approx(x)


def test_random_orbit_is_deterministic():
    sys = rotation_system(0.13)
    a = random_orbit(sys, 0.2, NoiseLevel(0.05), 300, seed=42, orbit_index=3)
    b = random_orbit(sys, 0.2, NoiseLevel(0.05), 300, seed=42, orbit_index=3)
    assert np.array_equal(a.states, b.states)
    c = random_orbit(sys, 0.2, NoiseLevel(0.05), 300, seed=42, orbit_index=4)
    assert not np.array_equal(a.states, c.states)


def test_orbit_sample_replays_from_seed():
    # states[j+1] = wrap(f(states[j]) + t_{j+1}) for the stream's draws
    sys = rotation_system(0.31)
    level = NoiseLevel(0.07)
    n = 2 * NOISE_BLOCK + 17  # cross block boundaries
    orbit = random_orbit(sys, 0.9, level, n, seed=9, orbit_index=2)
    rng = stream(9, ORBIT_STREAM, 2)
    x = 0.9
    done = 0
    while done < n:
        block = min(NOISE_BLOCK, n - done)
        noise = sample_noise(level, rng, size=block)
        for s in range(block):
            x = circle.wrap(rotation_map(np.asarray(x), 0.31) + noise[s])
            assert orbit.states[done + s + 1] == pytest.approx(float(x), abs=1e-15)
        done += block


def test_monotone_reach_nested_in_level():
    # every one-step image at level eps stays inside the reach ball of eps' >= eps
    sys = rotation_system(0.0)
    rng = stream(1, ORBIT_STREAM, 0)
    x = 0.3
    fx = 0.3
    for eps, eps_big in [(0.02, 0.05), (0.05, 0.2)]:
        draws = sample_noise(NoiseLevel(eps), rng, size=500)
        images = circle.wrap(fx + draws)
        assert np.all(circle.dist(images, fx) <= eps + 1e-12)
        assert np.all(circle.dist(images, fx) <= eps_big + 1e-12)


def test_coverage_report_additive():
    sys = rotation_system(0.4)
    rep = coverage_report(sys, NoiseLevel(0.05))
    assert rep.k_steps == 1
    assert rep.xi == pytest.approx(0.05)
    assert rep.reach_is_ball
    assert rep.kernel_absolutely_continuous
    rep2 = coverage_report(sys, NoiseLevel(0.01))
    assert (rep2.k_steps, rep2.xi) == (1, 0.01)


def test_coverage_report_rejects_zero_noise():
    with pytest.raises(DegenerateNoiseError, match="degenerate noise"):
        coverage_report(rotation_system(0.1), NoiseLevel(0.0))


def test_condition_one_exact_for_all_models():
    # perturbed_step with t = 0 equals the deterministic image bit-for-bit
    for name in ("rotation", "north_south", "asym_two_sink", "example1"):
        model = build_model(name)
        sys = PerturbedSystem(space=model.space, base_map=model.map, name=name)
        xs = np.linspace(0.0, 1.0, 100, endpoint=False)
        direct = np.asarray(model.map(xs))
        stepped = np.asarray([perturbed_step(sys, float(x), 0.0) for x in xs])
        assert np.array_equal(direct, stepped)
    model = build_model("bowen")
    sys = PerturbedSystem(space=model.space, base_map=model.map, name="bowen")
    pts = np.column_stack([np.linspace(0, 1, 10, endpoint=False),
                           np.linspace(-0.9, 0.9, 10)])
    direct = np.asarray(model.map(pts))
    stepped = np.vstack([perturbed_step(sys, p, np.zeros(2)) for p in pts])
    assert np.array_equal(direct, stepped)
