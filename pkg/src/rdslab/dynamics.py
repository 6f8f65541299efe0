"""Additive random perturbations of deterministic maps and seeded random orbits.

A perturbed system iterates x -> wrap(f(x) + t) where the noise vector t is
drawn uniformly from the radius-epsilon ball (an interval in 1d, a disc in 2d,
sampled by rejection from the bounding square).  For this additive family the
one-step reachable set of any point is exactly the closed epsilon-ball around
the deterministic image, and the one-step transition kernel has a bounded
density, so the usual coverage/smoothing conditions hold with one step and
reach radius equal to epsilon.

Reproducibility contract
------------------------
Every random stream in the package is a PCG64 generator keyed by
``SeedSequence(seed, spawn_key=(namespace, index))``.  Orbit ``k`` of an
ensemble uses namespace ORBIT_STREAM and index ``k``, so per-orbit streams are
pure functions of (seed, k): ensembles may be computed in any order or split
across workers and merged by addition without changing a single bit.  Noise
for an n-step orbit is drawn in blocks of NOISE_BLOCK steps (the 2d rejection
resampling is batched per block, so the block size is part of the contract).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateNoiseError, NoiseExceedsLevelError
from .spaces import StateSpace

# SeedSequence spawn-key namespaces
INIT_STREAM = 0    # initial-condition draws for global sojourn estimates
ORBIT_STREAM = 1   # per-orbit noise
CELL_STREAM = 2    # per-cell sampling in the 2d transition-matrix builder

NOISE_BLOCK = 1024

EPS_MAX = 0.25  # noise levels are always below a quarter of the circle


def stream(seed: int, namespace: int, index: int) -> np.random.Generator:
    """The package-wide reproducible stream for (seed, namespace, index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(namespace, index)))


@dataclass(frozen=True)
class NoiseLevel:
    """A noise level epsilon with the uniform distribution on the epsilon-ball."""

    epsilon: float

    def __post_init__(self):
        if not (0.0 <= self.epsilon < EPS_MAX):
            raise ValueError(f"noise level must satisfy 0 <= eps < {EPS_MAX}, got {self.epsilon}")

    def require_positive(self) -> None:
        if self.epsilon == 0.0:
            raise DegenerateNoiseError("degenerate noise")


@dataclass(frozen=True)
class PerturbedSystem:
    """A deterministic base map together with its additive-noise family.

    ``base_map`` must send canonical points to canonical points and accept
    arrays of points (shape (m,) in 1d, (m, 2) on the cylinder).
    """

    space: StateSpace
    base_map: Callable
    name: str = "anonymous"

    @property
    def noise_dim(self) -> int:
        return self.space.ndim


@dataclass(frozen=True)
class OrbitSample:
    """A realized random orbit: states[j] = f^j(x0, t) for the seeded noise draws."""

    states: np.ndarray
    seed: int
    orbit_index: int
    epsilon: float

    @property
    def steps(self) -> int:
        return len(self.states) - 1


def sample_noise(level: NoiseLevel, rng: np.random.Generator, size: int | None = None, dim: int = 1):
    """Uniform draw(s) on the radius-epsilon ball; advances ``rng`` deterministically.

    1d: uniform on [-eps, eps].  2d: uniform on the closed disc, by rejection
    from the bounding square (rejected rows are redrawn in batches until none
    remain, in a fixed order).  eps = 0 returns zeros without consuming draws.
    """
    eps = level.epsilon
    m = 1 if size is None else int(size)
    if dim == 1:
        out = np.zeros(m) if eps == 0.0 else rng.uniform(-eps, eps, m)
    else:
        out = np.zeros((m, 2))
        if eps > 0.0:
            out = rng.uniform(-eps, eps, (m, 2))
            bad = np.flatnonzero(out[:, 0] ** 2 + out[:, 1] ** 2 > eps * eps)
            while bad.size:
                out[bad] = rng.uniform(-eps, eps, (bad.size, 2))
                bad = bad[out[bad, 0] ** 2 + out[bad, 1] ** 2 > eps * eps]
    if size is None:
        return out[0]
    return out


def _noise_norm(t, dim: int):
    t = np.asarray(t, dtype=float)
    if dim == 1:
        return np.abs(t)
    return np.sqrt(t[..., 0] ** 2 + t[..., 1] ** 2)


def perturbed_step(sys: PerturbedSystem, x, t, level: NoiseLevel | None = None):
    """One perturbed iterate wrap(f(x) + t); with t = 0 this is the deterministic image.

    If ``level`` is given the noise vector is validated against it.
    """
    if level is not None:
        if np.any(_noise_norm(t, sys.noise_dim) > level.epsilon * (1.0 + 1e-12) + 1e-300):
            raise NoiseExceedsLevelError("noise exceeds level")
    return sys.space.wrap(np.asarray(sys.base_map(x)) + np.asarray(t))


def _noise_block(level: NoiseLevel, rng: np.random.Generator, block: int, dim: int):
    return sample_noise(level, rng, size=block, dim=dim)


def random_orbit(sys: PerturbedSystem, x0, level: NoiseLevel, n: int, seed: int,
                 orbit_index: int = 0) -> OrbitSample:
    """The length n+1 random orbit of x0 for the stream (seed, orbit_index).

    Identical arguments give bit-identical orbits; eps = 0 gives the
    deterministic orbit.  The orbit equals member ``orbit_index`` of any
    ensemble run with the same seed.
    """
    if n < 0:
        raise ValueError("orbit length must be nonnegative")
    dim = sys.noise_dim
    x = sys.space.wrap(x0)
    states = np.empty((n + 1,) if dim == 1 else (n + 1, 2))
    states[0] = x
    rng = stream(seed, ORBIT_STREAM, orbit_index)
    done = 0
    while done < n:
        block = min(NOISE_BLOCK, n - done)
        noise = _noise_block(level, rng, block, dim)
        for s in range(block):
            x = sys.space.wrap(np.asarray(sys.base_map(x)) + noise[s])
            states[done + s + 1] = x
        done += block
    states.setflags(write=False)
    return OrbitSample(states=states, seed=seed, orbit_index=orbit_index, epsilon=level.epsilon)


@dataclass(frozen=True)
class CoverageReport:
    """One-step coverage constants for an additive family, plus the sampled check."""

    k_steps: int
    xi: float
    grid_points: int
    reach_is_ball: bool
    kernel_absolutely_continuous: bool


def coverage_report(sys: PerturbedSystem, level: NoiseLevel, grid_points: int = 100,
                    samples: int = 256, seed: int = 0) -> CoverageReport:
    """Coverage constants (K, xi) = (1, eps) for the additive family.

    Verifies on a sample grid that one-step images f(x) + t stay inside the
    eps-ball around f(x) and that boundary directions are reachable (for
    additive noise the reachable set IS the ball; the sampled check guards the
    wrap/clamp plumbing).  The one-step kernel is the uniform density on that
    ball, hence absolutely continuous; the report records this.
    """
    level.require_positive()
    eps = level.epsilon
    sp = sys.space
    rng = stream(seed, ORBIT_STREAM, 0)
    if sp.ndim == 1:
        xs = sp.wrap(np.linspace(0.0, 1.0, grid_points, endpoint=False)
                     if sp.kind == "circle" else np.linspace(sp.a, sp.b, grid_points))
    else:
        g = int(np.sqrt(grid_points))
        gx, gy = np.meshgrid((np.arange(g) + 0.5) / g, -1.0 + (np.arange(g) + 0.5) * 2.0 / g)
        xs = np.column_stack([gx.ravel(), gy.ravel()])
    fx = sp.wrap(np.asarray(sys.base_map(xs)))
    ok = True
    for _ in range(4):
        t = sample_noise(level, rng, size=samples, dim=sp.ndim)
        for ti in t[: max(8, samples // 32)]:
            img = sp.wrap(np.asarray(fx) + ti)
            # clamped axes can only shrink distances, so <= eps must hold
            if np.any(sp.dist(img, fx) > eps * (1.0 + 1e-9)):
                ok = False
    return CoverageReport(k_steps=1, xi=eps, grid_points=len(np.atleast_1d(fx)),
                          reach_is_ball=ok, kernel_absolutely_continuous=True)
