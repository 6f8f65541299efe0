"""Discretized measures, sojourn-time estimators, and comparison metrics.

Measures live on a uniform partition as nonnegative cell histograms summing to
one.  Sojourn estimators accumulate integer visit counts over seeded orbit
ensembles, so half-ensembles merge into the full ensemble by exact integer
addition.  Weak* closeness is measured by the exact Wasserstein-1 distance on
1d spaces and by a bounded-Lipschitz surrogate on the cylinder: the maximum,
over a fixed dictionary of 32 Lipschitz-1 test functions, of the difference of
integrals.  The dictionary resolution (a Lipschitz-times-cell-diameter bound)
is exposed so every 2d distance can be reported alongside its resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import INIT_STREAM, NOISE_BLOCK, ORBIT_STREAM, NoiseLevel, PerturbedSystem, sample_noise, stream
from .errors import EmptySupportError, SpaceMismatchError
from .spaces import CIRCLE, CYLINDER, INTERVAL, Partition, StateSpace, check_same_partition

SUPPORT_THRESHOLD = 1e-6  # relative to the largest cell mass


@dataclass(frozen=True)
class MeasureVector:
    """A probability vector over the cells of a partition (renormalized on construction)."""

    part: Partition
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float).copy()
        if mass.shape != (self.part.ncells,):
            raise ValueError(f"mass vector has shape {mass.shape}, expected ({self.part.ncells},)")
        if np.any(mass < -1e-10):
            raise ValueError("negative cell mass")
        np.clip(mass, 0.0, None, out=mass)
        total = mass.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise ValueError("measure has no mass")
        mass /= total
        mass.setflags(write=False)
        object.__setattr__(self, "mass", mass)

    @staticmethod
    def from_counts(part: Partition, counts) -> "MeasureVector":
        return MeasureVector(part, np.asarray(counts, dtype=float))

    @staticmethod
    def delta(part: Partition, point) -> "MeasureVector":
        mass = np.zeros(part.ncells)
        mass[part.cell_of(part.space.wrap(point))] = 1.0
        return MeasureVector(part, mass)

    @staticmethod
    def uniform(part: Partition) -> "MeasureVector":
        return MeasureVector(part, np.ones(part.ncells))

    @staticmethod
    def point_masses(part: Partition, points, weights) -> "MeasureVector":
        mass = np.zeros(part.ncells)
        for p, w in zip(points, weights):
            mass[part.cell_of(part.space.wrap(p))] += w
        return MeasureVector(part, mass)

    def integrate(self, values) -> float:
        """Integral of a function given by its values at cell centers."""
        return float(np.dot(np.asarray(values, dtype=float), self.mass))


@dataclass(frozen=True)
class SupportSet:
    """Cells carrying mass above a relative threshold of the maximum cell mass."""

    part: Partition
    cells: np.ndarray
    threshold: float

    def __len__(self):
        return len(self.cells)

    def centers(self):
        return self.part.cell_center(self.cells)


def support_of(mu: MeasureVector, threshold: float = SUPPORT_THRESHOLD) -> SupportSet:
    cut = threshold * mu.mass.max()
    cells = np.flatnonzero(mu.mass > cut)
    cells.setflags(write=False)
    return SupportSet(part=mu.part, cells=cells, threshold=threshold)


# ---------------------------------------------------------------------------
# sojourn estimators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SojournCounts:
    """Integer visit counts for an orbit ensemble; merges across ensembles by addition."""

    part: Partition
    counts: np.ndarray
    orbits: int
    visits_per_orbit: int
    clamp_events: int

    def merged(self, other: "SojournCounts") -> "SojournCounts":
        check_same_partition(self.part, other.part)
        if self.visits_per_orbit != other.visits_per_orbit:
            raise ValueError("cannot merge ensembles with different orbit lengths")
        return SojournCounts(self.part, self.counts + other.counts,
                             self.orbits + other.orbits, self.visits_per_orbit,
                             self.clamp_events + other.clamp_events)

    def measure(self) -> MeasureVector:
        return MeasureVector.from_counts(self.part, self.counts)


def sojourn_counts(sys: PerturbedSystem, x0s, level: NoiseLevel, n: int, part: Partition,
                   seed: int, orbit_start: int = 0) -> SojournCounts:
    """Visit counts over cells for one orbit per row of ``x0s``, steps j = 0 .. n-1.

    Orbit ``orbit_start + j`` consumes the noise stream (seed, orbit_start + j),
    so disjoint index ranges computed separately merge exactly.
    """
    if n < 1:
        raise ValueError("need at least one visit per orbit")
    sp = sys.space
    dim = sp.ndim
    states = sp.wrap(np.array(x0s, dtype=float, ndmin=1 if dim == 1 else 2))
    if dim == 2:
        states = np.atleast_2d(states)
    m = states.shape[0]
    eps = level.epsilon
    base_map = sys.base_map

    counts = np.bincount(part.cell_of(states), minlength=part.ncells).astype(np.int64)
    clamps = 0
    rngs = [stream(seed, ORBIT_STREAM, orbit_start + j) for j in range(m)]
    steps_left = n - 1
    idx_buf = np.empty((min(NOISE_BLOCK, max(steps_left, 1)), m), dtype=np.int64)

    # lean per-kind stepping: the generic wrap() (with its finiteness guard)
    # runs once per block, the per-step path only does what the kind needs
    kind = sp.kind
    n1 = part.shape[0]
    if kind == CYLINDER:
        n2 = part.shape[1]
    while steps_left > 0:
        block = min(NOISE_BLOCK, steps_left)
        if eps > 0.0:
            noise = np.stack([sample_noise(level, rng, size=block, dim=dim) for rng in rngs], axis=1)
        for s in range(block):
            x = np.asarray(base_map(states))
            if kind == CIRCLE:
                if eps > 0.0:
                    x = x + noise[s]
                    x[x < 0.0] += 1.0   # |noise| < 1, so one fixup pass wraps
                    x[x >= 1.0] -= 1.0
                idx = (x * n1).astype(np.int64)
                np.minimum(idx, n1 - 1, out=idx)
            elif kind == CYLINDER:
                if eps > 0.0:
                    x = x + noise[s]
                    cx = x[:, 0]
                    cx[cx < 0.0] += 1.0
                    cx[cx >= 1.0] -= 1.0
                    y = x[:, 1]
                    clamps += int(np.count_nonzero(np.abs(y) > 1.0))
                    np.clip(y, -1.0, 1.0, out=y)
                idx = (x[:, 0] * n1).astype(np.int64)
                np.minimum(idx, n1 - 1, out=idx)
                iy = ((x[:, 1] + 1.0) * (0.5 * n2)).astype(np.int64)
                np.minimum(iy, n2 - 1, out=iy)
                idx *= n2
                idx += iy
            else:
                if eps > 0.0:
                    x = x + noise[s]
                    np.clip(x, sp.a, sp.b, out=x)
                idx = part.cell_of(x)
            states = x
            idx_buf[s] = idx
        states = sp.wrap(states)  # canonicalize mod-1.0 round-off, check finiteness
        counts += np.bincount(idx_buf[:block].ravel(), minlength=part.ncells)
        steps_left -= block
    counts.setflags(write=False)
    return SojournCounts(part=part, counts=counts, orbits=m, visits_per_orbit=n,
                         clamp_events=clamps)


def sojourn_point(sys: PerturbedSystem, x, level: NoiseLevel, n: int, samples: int,
                  part: Partition, seed: int, orbit_start: int = 0) -> MeasureVector:
    """Monte Carlo estimate of the mean sojourn measure of the random orbits of x.

    Averages the visit frequency to each cell over ``samples`` independent
    noise realizations and n visit slots per orbit.
    """
    if samples < 1:
        raise ValueError("need at least one sample orbit")
    if sys.space.ndim == 1:
        x0s = np.full(samples, float(sys.space.wrap(x)))
    else:
        x0s = np.tile(np.asarray(sys.space.wrap(x), dtype=float), (samples, 1))
    return sojourn_counts(sys, x0s, level, n, part, seed, orbit_start).measure()


def sojourn_global(sys: PerturbedSystem, level: NoiseLevel, n: int, x_samples: int,
                   samples: int, part: Partition, seed: int) -> MeasureVector:
    return global_sojourn_counts(sys, level, n, x_samples, samples, part, seed).measure()


def global_sojourn_counts(sys: PerturbedSystem, level: NoiseLevel, n: int, x_samples: int,
                          samples: int, part: Partition, seed: int,
                          orbit_start: int = 0, total_orbits: int | None = None) -> SojournCounts:
    """Sojourn counts averaged over both volume-distributed initial points and noise.

    One orbit per initial point, x_samples * samples orbits in total.  On 1d
    spaces the initial points form a jittered stratified sample of the volume
    measure (orbit k starts uniformly inside stratum k): each draw is uniform
    on the space, and stratification removes the sampling noise of the basin
    split that plain independent draws carry at these budgets.  On the
    cylinder the draws are plain uniform.  Orbit k draws its initial jitter
    from stream (seed, INIT_STREAM, k) and its noise from
    (seed, ORBIT_STREAM, k), so index sub-ranges merge exactly.
    """
    if x_samples < 1 or samples < 1:
        raise ValueError("need at least one initial point and one sample orbit")
    m = x_samples * samples
    total = m if total_orbits is None else int(total_orbits)
    sp = sys.space
    jitter = np.array([stream(seed, INIT_STREAM, orbit_start + k).uniform(size=sp.ndim)
                       for k in range(m)])
    ks = np.arange(orbit_start, orbit_start + m)
    if sp.ndim == 1:
        u = (ks + jitter[:, 0]) / total
        x0s = sp.a + (sp.b - sp.a) * u if sp.kind == INTERVAL else u
    else:
        x0s = np.column_stack([jitter[:, 0], 2.0 * jitter[:, 1] - 1.0])
    return sojourn_counts(sys, x0s, level, n, part, seed, orbit_start=orbit_start)


# ---------------------------------------------------------------------------
# the Lipschitz test-function dictionary (shared with the sweep diagnostics)
# ---------------------------------------------------------------------------

def lipschitz_dictionary():
    """32 test functions on the cylinder, each Lipschitz-1 for max(d_circle, |dy|/2).

    Modes: 8 pure x-harmonics, 4 pure y-modes, 12 x-harmonic times y-cosine
    products, 8 x-harmonic times linear-y products; each scaled by (an upper
    bound on) its Lipschitz constant in the sup metric.
    """
    funcs = []

    def xmode(k, trig, name):
        funcs.append((f"{name}(2pi*{k}x)/(2pi*{k})",
                      lambda x, y, k=k, trig=trig: trig(2.0 * np.pi * k * x) / (2.0 * np.pi * k)))

    for k in range(1, 5):
        xmode(k, np.cos, "cos")
        xmode(k, np.sin, "sin")

    funcs.append(("y/2", lambda x, y: 0.5 * y))
    for m in range(1, 4):
        funcs.append((f"cos({m}pi(y+1)/2)/({m}pi)",
                      lambda x, y, m=m: np.cos(0.5 * m * np.pi * (y + 1.0)) / (m * np.pi)))

    for k in range(1, 4):
        for m in range(1, 3):
            for trig, name in ((np.cos, "cos"), (np.sin, "sin")):
                scale = 2.0 * np.pi * k + m * np.pi
                funcs.append((f"{name}(2pi*{k}x)cos({m}pi(y+1)/2)/{scale:.6g}",
                              lambda x, y, k=k, m=m, trig=trig, scale=scale:
                              trig(2.0 * np.pi * k * x) * np.cos(0.5 * m * np.pi * (y + 1.0)) / scale))

    for k in range(1, 5):
        for trig, name in ((np.cos, "cos"), (np.sin, "sin")):
            scale = 1.0 + np.pi * k
            funcs.append((f"{name}(2pi*{k}x)(y/2)/{scale:.6g}",
                          lambda x, y, k=k, trig=trig, scale=scale:
                          trig(2.0 * np.pi * k * x) * 0.5 * y / scale))

    assert len(funcs) == 32
    return funcs


@lru_cache(maxsize=16)
def dictionary_matrix(part: Partition) -> np.ndarray:
    """Values of every dictionary function at the cell centers, shape (32, ncells)."""
    centers = part.centers
    x, y = centers[:, 0], centers[:, 1]
    rows = [f(x, y) for _, f in lipschitz_dictionary()]
    out = np.asarray(rows)
    out.setflags(write=False)
    return out


def dictionary_at_point(point) -> np.ndarray:
    x, y = float(point[0]), float(point[1])
    return np.array([f(x, y) for _, f in lipschitz_dictionary()])


def dictionary_resolution(part: Partition) -> float:
    """Integration-against-centers error bound: one metric cell diameter."""
    return part.metric_width


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def w1_distance(mu: MeasureVector, nu: MeasureVector) -> float:
    """Wasserstein-1 distance between two measures on the same partition.

    Interval: exact Kantorovich distance (integrated CDF difference).  Circle:
    exact, as the minimum over a scalar shift of the integrated CDF difference;
    the optimal shift is the median of the cumulative differences, with cell
    masses treated as atoms at cell centers.  Cylinder: bounded-Lipschitz
    surrogate over the fixed test-function dictionary.
    """
    check_same_partition(mu.part, nu.part)
    kind = mu.part.space.kind
    diff = mu.mass - nu.mass
    if kind == INTERVAL:
        cdf = np.cumsum(diff)
        return float(np.abs(cdf[:-1]).sum() / mu.part.shape[0])
    if kind == CIRCLE:
        cdf = np.cumsum(diff)
        shift = np.median(cdf)
        return float(np.abs(cdf - shift).sum() / mu.part.shape[0])
    values = dictionary_matrix(mu.part) @ diff
    return float(np.abs(values).max())


def _min_dist_to_set(space: StateSpace, pa, pb):
    """For each point of pa, the minimum metric distance to the points pb."""
    pa = np.atleast_1d(pa) if space.ndim == 1 else np.atleast_2d(pa)
    pb = np.atleast_1d(pb) if space.ndim == 1 else np.atleast_2d(pb)
    out = np.empty(len(pa))
    chunk = max(1, int(4_000_000 // max(len(pb), 1)))
    for i in range(0, len(pa), chunk):
        seg = pa[i:i + chunk]
        if space.ndim == 1:
            t = np.abs(seg[:, None] - pb[None, :])
            d = np.minimum(t, 1.0 - t) if space.kind == CIRCLE else t / (space.b - space.a)
        else:
            tx = np.abs(seg[:, None, 0] - pb[None, :, 0])
            dx = np.minimum(tx, 1.0 - tx)
            dy = 0.5 * np.abs(seg[:, None, 1] - pb[None, :, 1])
            d = np.maximum(dx, dy)
        out[i:i + chunk] = d.min(axis=1)
    return out


def hausdorff(space: StateSpace, a: SupportSet, b: SupportSet) -> float:
    """Symmetrized max-min distance between the cell centers of two supports.

    The supports may live on different partitions of the same space (used to
    compare supports across sweep resolutions).
    """
    if a.part.space != space or b.part.space != space:
        raise SpaceMismatchError("space mismatch")
    if len(a) == 0 or len(b) == 0:
        raise EmptySupportError("empty support")
    ca, cb = a.centers(), b.centers()
    forward = _min_dist_to_set(space, ca, cb).max()
    backward = _min_dist_to_set(space, cb, ca).max()
    return float(max(forward, backward))
