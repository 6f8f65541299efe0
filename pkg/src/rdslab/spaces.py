"""Phase spaces, canonical coordinates, normalized metrics, and uniform partitions.

Three spaces are supported: the circle R/Z of circumference 1, a closed
interval [a, b], and the flat cylinder (R/Z) x [-1, 1].  Every space carries a
probability volume (Lebesgue rescaled to total mass 1) and a metric normalized
so that the diameter is at most 1/2 on the circle axis.

Conventions used everywhere in the package:

* circle coordinates are canonical in [0, 1);
* interval coordinates are clamped to [a, b]; the cylinder's second coordinate
  is clamped to [-1, 1] (additive noise projects onto the boundary);
* partition cells are half-open boxes [c, c + w), with the last cell of a
  closed axis (interval, cylinder y) closed on the right;
* the cylinder metric is the sup of the per-axis normalized distances
  max(d_circle(x, x'), |y - y'| / 2), chosen so cell-level Hausdorff
  computations are exact maxima over axes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonFiniteCoordinateError, PartitionMismatchError, SpaceMismatchError

CIRCLE = "circle"
INTERVAL = "interval"
CYLINDER = "cylinder"


def _wrap_unit(x):
    """Reduce mod 1 into [0, 1); guards against mod returning 1.0 for tiny negatives."""
    r = np.mod(x, 1.0)
    return np.where(r >= 1.0, 0.0, r)


@dataclass(frozen=True)
class StateSpace:
    """One of the three phase spaces, with normalized volume and metric."""

    kind: str
    a: float = 0.0
    b: float = 1.0

    @staticmethod
    def circle() -> "StateSpace":
        return StateSpace(CIRCLE)

    @staticmethod
    def interval(a: float, b: float) -> "StateSpace":
        if not (np.isfinite(a) and np.isfinite(b) and a < b):
            raise ValueError(f"invalid interval bounds ({a}, {b})")
        return StateSpace(INTERVAL, a, b)

    @staticmethod
    def cylinder() -> "StateSpace":
        return StateSpace(CYLINDER)

    @property
    def ndim(self) -> int:
        return 2 if self.kind == CYLINDER else 1

    def wrap(self, raw):
        """Canonicalize raw coordinates (mod 1 on circle axes, clamp on closed axes).

        Accepts scalars, 1d arrays of 1d-space coordinates, a pair, or an
        (m, 2) array of cylinder coordinates.  Non-finite input is an error.
        """
        arr = np.asarray(raw, dtype=float)
        if not np.all(np.isfinite(arr)):
            raise NonFiniteCoordinateError("non-finite coordinate")
        if self.kind == CIRCLE:
            out = _wrap_unit(arr)
        elif self.kind == INTERVAL:
            out = np.clip(arr, self.a, self.b)
        else:
            out = np.empty_like(arr)
            out[..., 0] = _wrap_unit(arr[..., 0])
            out[..., 1] = np.clip(arr[..., 1], -1.0, 1.0)
        return float(out) if np.ndim(out) == 0 else out

    def dist(self, p, q):
        """Normalized distance; elementwise over arrays of canonical points."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if self.kind == CIRCLE:
            t = np.abs(p - q)
            d = np.minimum(t, 1.0 - t)
        elif self.kind == INTERVAL:
            d = np.abs(p - q) / (self.b - self.a)
        else:
            tx = np.abs(p[..., 0] - q[..., 0])
            dx = np.minimum(tx, 1.0 - tx)
            dy = 0.5 * np.abs(p[..., 1] - q[..., 1])
            d = np.maximum(dx, dy)
        return float(d) if np.ndim(d) == 0 else d

    def uniform_points(self, rng, size: int):
        """Draw ``size`` points from the normalized volume measure."""
        if self.kind == CIRCLE:
            return rng.uniform(0.0, 1.0, size)
        if self.kind == INTERVAL:
            return rng.uniform(self.a, self.b, size)
        pts = np.empty((size, 2))
        pts[:, 0] = rng.uniform(0.0, 1.0, size)
        pts[:, 1] = rng.uniform(-1.0, 1.0, size)
        return pts


def check_same_space(s1: StateSpace, s2: StateSpace) -> None:
    if s1 != s2:
        raise SpaceMismatchError("space mismatch")


def dist(space: StateSpace, p, q, space_q: StateSpace | None = None):
    """Module-level distance; raises on mismatched space kinds."""
    if space_q is not None:
        check_same_space(space, space_q)
    return space.dist(p, q)


def wrap(space: StateSpace, raw):
    return space.wrap(raw)


@dataclass(frozen=True)
class Partition:
    """Uniform grid over a state space: n1 cells per circle/interval, n1 x n2 on the cylinder.

    Cells are indexed 0 .. ncells-1; on the cylinder the flat index is
    ix * n2 + iy (x-major).  Cell volumes are all exactly 1/ncells.
    """

    space: StateSpace
    shape: tuple

    def __post_init__(self):
        if len(self.shape) != self.space.ndim:
            raise ValueError(f"partition shape {self.shape} does not match {self.space.kind}")
        if any(int(n) <= 0 or int(n) != n for n in self.shape):
            raise ValueError(f"resolution must be positive integers, got {self.shape}")
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))

    @property
    def ncells(self) -> int:
        n = 1
        for s in self.shape:
            n *= s
        return n

    @property
    def cell_volume(self) -> float:
        return 1.0 / self.ncells

    def total_volume(self) -> float:
        # computed from counts, not by summing floats
        return self.ncells / self.ncells

    @property
    def widths(self):
        """Raw per-axis cell extents (circle: 1/n; interval: (b-a)/n; cylinder: (1/n1, 2/n2))."""
        sp = self.space
        if sp.kind == CIRCLE:
            return (1.0 / self.shape[0],)
        if sp.kind == INTERVAL:
            return ((sp.b - sp.a) / self.shape[0],)
        return (1.0 / self.shape[0], 2.0 / self.shape[1])

    @property
    def metric_width(self) -> float:
        """Largest per-axis cell extent measured in the space's normalized metric."""
        if self.space.kind == CYLINDER:
            return max(1.0 / self.shape[0], 1.0 / self.shape[1])
        return 1.0 / self.shape[0]

    def cell_of(self, points):
        """Flat cell index of each canonical point (vectorized)."""
        sp = self.space
        if sp.kind == CIRCLE:
            x = np.asarray(points, dtype=float)
            idx = np.minimum((x * self.shape[0]).astype(np.int64), self.shape[0] - 1)
        elif sp.kind == INTERVAL:
            x = np.asarray(points, dtype=float)
            rel = (x - sp.a) / (sp.b - sp.a)
            idx = np.clip((rel * self.shape[0]).astype(np.int64), 0, self.shape[0] - 1)
        else:
            pts = np.asarray(points, dtype=float)
            n1, n2 = self.shape
            ix = np.minimum((pts[..., 0] * n1).astype(np.int64), n1 - 1)
            iy = np.clip(((pts[..., 1] + 1.0) * 0.5 * n2).astype(np.int64), 0, n2 - 1)
            idx = ix * n2 + iy
        return int(idx) if np.ndim(idx) == 0 else idx

    def cell_center(self, index):
        """Center coordinates of one or many flat cell indices."""
        sp = self.space
        idx = np.asarray(index, dtype=np.int64)
        if sp.kind == CIRCLE:
            c = (idx + 0.5) / self.shape[0]
            return float(c) if np.ndim(c) == 0 else c
        if sp.kind == INTERVAL:
            c = sp.a + (idx + 0.5) * (sp.b - sp.a) / self.shape[0]
            return float(c) if np.ndim(c) == 0 else c
        n1, n2 = self.shape
        ix, iy = np.divmod(idx, n2)
        out = np.stack([(ix + 0.5) / n1, -1.0 + (iy + 0.5) * 2.0 / n2], axis=-1)
        return out

    @cached_property
    def centers(self):
        """Centers of every cell, shape (ncells,) or (ncells, 2)."""
        c = self.cell_center(np.arange(self.ncells))
        c.setflags(write=False)
        return c


def check_same_partition(p1: Partition, p2: Partition) -> None:
    if p1 != p2:
        raise PartitionMismatchError("partition mismatch")
