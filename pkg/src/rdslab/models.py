"""Built-in systems with reference attractor data found by root-finding oracles.

* ``rotation``: rigid circle rotation (unique stationary measure, used for
  exactness checks).
* ``north_south``: x - a*sin(4*pi*x), two sinks at {0, 1/2} with equal basins;
  a desk-scale uniformly hyperbolic instance.
* ``asym_two_sink``: x - a*sin(2*pi*x) - b*sin(4*pi*x), two sinks with
  unequal basin lengths (nontrivial limit weights).
* ``example1``: time-one map of the 1d flow ds/dt = -phi'(s) for
  phi(s) = s^4 sin(1/s) on [-1/pi, 1/pi] with endpoints glued; infinitely many
  sinks and sources accumulating at the degenerate point s = 0.
* ``bowen``: time-one map of an explicit planar field on the cylinder with two
  saddles joined by heteroclinic loops enclosing two sources; every orbit off
  the sources approaches the loop set, so time averages fail to exist there.

Reference data (sink positions, basin intervals, saddles) is computed at load
time by bracketed bisection / Newton oracles, never hardcoded, and each model
self-checks its references against the actual time-one map before use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, PhasePortraitError
from .spaces import Partition, StateSpace

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi
CHART_HALF = 1.0 / math.pi  # example1 chart is [-1/pi, 1/pi]


# ---------------------------------------------------------------------------
# attractor references and model specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AttractorRef:
    """Reference data for one attractor: carrier cells and a reference measure.

    ``kind == 'point'``: the carrier is the cell(s) of the anchor points and
    the reference measure puts equal mass on them (a Dirac at a sink).
    ``kind == 'level_set'``: the carrier is the set of cells crossed by a level
    curve given through ``level_fn``/``level_value`` (the heteroclinic loop
    set); the reference measure is the even mixture over the anchor points.
    """

    ref_id: str
    description: str
    kind: str
    points: tuple
    basin_arc: tuple | None = None      # circle arc (lo, hi), counterclockwise
    basin_volume: float | None = None
    level_fn: Callable | None = None
    level_value: float | None = None

    def carrier_cells(self, part: Partition) -> np.ndarray:
        if self.kind == "point":
            cells = np.unique([part.cell_of(part.space.wrap(np.asarray(p))) for p in self.points])
            return cells.astype(np.int64)
        return level_set_cells(part, self.level_fn, self.level_value)

    def reference_measure(self, part: Partition):
        from .measures import MeasureVector
        k = len(self.points)
        return MeasureVector.point_masses(part, [np.asarray(p) for p in self.points],
                                          [1.0 / k] * k)


def level_set_cells(part: Partition, fn, value) -> np.ndarray:
    """Cells whose corners straddle the level {fn = value} (vectorized corner test)."""
    n1, n2 = part.shape
    xs = np.arange(n1 + 1) / n1
    ys = -1.0 + 2.0 * np.arange(n2 + 1) / n2
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    corner = fn(gx, gy) - value
    lo = np.minimum.reduce([corner[:-1, :-1], corner[1:, :-1], corner[:-1, 1:], corner[1:, 1:]])
    hi = np.maximum.reduce([corner[:-1, :-1], corner[1:, :-1], corner[:-1, 1:], corner[1:, 1:]])
    mask = (lo <= 0.0) & (hi >= 0.0)
    cells = np.flatnonzero(mask.reshape(-1))
    return cells.astype(np.int64)


@dataclass(frozen=True)
class ModelSpec:
    """A named deterministic map plus its phase space and reference data."""

    name: str
    space: StateSpace
    params: dict
    map: Callable
    eps_max: float
    refs: tuple = ()
    extras: dict = field(default_factory=dict)

    @property
    def noise_dim(self) -> int:
        return self.space.ndim


# ---------------------------------------------------------------------------
# root-finding oracles
# ---------------------------------------------------------------------------

def bisect_root(fn, lo, hi, iterations: int = 200) -> float:
    """Plain bracketed bisection; the bracket must have a sign change."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fhi > 0):
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-300:
            break
    return 0.5 * (lo + hi)


def circle_delta(a, b):
    return (b - a + 0.5) % 1.0 - 0.5


def map_derivative(f, x, h: float = 1e-7, circle: bool = True) -> float:
    """Central finite-difference derivative, circle-aware."""
    fp = float(np.asarray(f(np.array([(x + h) % 1.0 if circle else x + h])))[0])
    fm = float(np.asarray(f(np.array([(x - h) % 1.0 if circle else x - h])))[0])
    d = circle_delta(fm, fp) if circle else fp - fm
    return d / (2.0 * h)


# ---------------------------------------------------------------------------
# rotation and the two synthetic sink maps
# ---------------------------------------------------------------------------

def _wrap_small_displacement(y):
    """Wrap values in (-1, 2) back into [0, 1); cheaper than mod in hot loops."""
    if y.ndim == 0:
        y = float(y)
        return y + 1.0 if y < 0.0 else (y - 1.0 if y >= 1.0 else y)
    y[y < 0.0] += 1.0
    y[y >= 1.0] -= 1.0
    return y


def rotation_map(x, alpha: float = 0.25):
    return _wrap_small_displacement(np.asarray(x, dtype=float) + alpha)


def north_south_map(x, a: float = 0.05):
    """x - a*sin(4*pi*x) mod 1; a diffeomorphism for 0 < a < 1/(4*pi)."""
    if not 0.0 < a < 1.0 / FOUR_PI:
        raise ValueError(f"parameter a must lie in (0, 1/(4*pi)), got {a}")
    x = np.asarray(x, dtype=float)
    return _wrap_small_displacement(x - a * np.sin(FOUR_PI * x))


def asym_two_sink_map(x, a: float = 0.03, b: float = 0.05):
    """x - a*sin(2*pi*x) - b*sin(4*pi*x) mod 1; two sinks with unequal basins."""
    x = np.asarray(x, dtype=float)
    return _wrap_small_displacement(x - a * np.sin(TWO_PI * x) - b * np.sin(FOUR_PI * x))


def _circle_fixed_points(f, grid: int = 4096):
    """All fixed points of a circle map, by bisection on the displacement."""
    xs = np.arange(grid + 1) / grid
    disp = circle_delta(xs % 1.0, np.asarray(f(xs % 1.0)))
    roots = []
    for k in range(grid):
        d0, d1 = disp[k], disp[k + 1]
        if d0 == 0.0:
            roots.append(xs[k])
        elif (d0 > 0) != (d1 > 0):
            root = bisect_root(lambda t: circle_delta(t % 1.0, float(np.asarray(f(np.array([t % 1.0])))[0])),
                               xs[k], xs[k + 1])
            roots.append(root % 1.0)
    uniq = []
    for r in sorted(roots):
        if not uniq or min(abs(r - uniq[-1]), 1.0 - abs(r - uniq[-1])) > 1e-9:
            uniq.append(r)
    if len(uniq) > 1 and min(abs(uniq[0] - uniq[-1]), 1.0 - abs(uniq[0] - uniq[-1])) <= 1e-9:
        uniq.pop()
    return uniq


def _sink_refs_from_fixed_points(f, fixed_points, prefix: str):
    """Classify alternating fixed points into sinks with flanking-source basins."""
    stab = [abs(map_derivative(f, p)) < 1.0 for p in fixed_points]
    refs = []
    npts = len(fixed_points)
    for i, (p, is_sink) in enumerate(zip(fixed_points, stab)):
        if not is_sink:
            continue
        left = fixed_points[(i - 1) % npts]
        right = fixed_points[(i + 1) % npts]
        if stab[(i - 1) % npts] or stab[(i + 1) % npts]:
            raise PhasePortraitError("unexpected phase portrait: sinks are not isolated by sources")
        length = (right - left) % 1.0
        refs.append(AttractorRef(
            ref_id=f"{prefix}_{len(refs)}",
            description=f"sink at x={p:.12g}",
            kind="point",
            points=((p,),),
            basin_arc=(left, right),
            basin_volume=length))
    return refs


# ---------------------------------------------------------------------------
# example1: the s^4 sin(1/s) gradient-flow circle map
# ---------------------------------------------------------------------------

def _phi_prime(s):
    """Derivative of s^4 sin(1/s), extended by 0 at the degenerate point s = 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    nz = np.abs(s) > 1e-12
    sn = s[nz]
    inv = 1.0 / sn
    out[nz] = sn * sn * (4.0 * sn * np.sin(inv) - np.cos(inv))
    return out


def chart_from_circle(u):
    """Circle coordinate in [0,1) -> chart coordinate s in [-1/pi, 1/pi)."""
    return (2.0 * np.asarray(u, dtype=float) - 1.0) * CHART_HALF


def circle_from_chart(s):
    return np.mod((np.asarray(s, dtype=float) / CHART_HALF + 1.0) * 0.5, 1.0)


def _chart_wrap(s):
    return np.mod(s + CHART_HALF, 2.0 * CHART_HALF) - CHART_HALF


def example1_map_chart(s, substeps: int = 64):
    """Time-one map of ds/dt = -phi'(s) in chart coordinates, classical RK4."""
    s = np.asarray(s, dtype=float)
    h = 1.0 / substeps
    y = s.copy()
    for _ in range(substeps):
        k1 = -_phi_prime(_chart_wrap(y))
        k2 = -_phi_prime(_chart_wrap(y + 0.5 * h * k1))
        k3 = -_phi_prime(_chart_wrap(y + 0.5 * h * k2))
        k4 = -_phi_prime(_chart_wrap(y + h * k3))
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return _chart_wrap(y)


def example1_map(u, substeps: int = 64):
    """The infinitely-many-sinks circle map, in circle coordinates.

    The sign of the flow is chosen so local minima of s^4 sin(1/s) are sinks
    and local maxima are sources of the time-one map.
    """
    scalar = np.ndim(u) == 0
    s = chart_from_circle(np.atleast_1d(np.asarray(u, dtype=float)))
    out = circle_from_chart(example1_map_chart(s, substeps=substeps))
    return float(out[0]) if scalar else out


SINK_BRANCH_CAP = int(1e8 / math.pi)  # beyond u ~ 1e8 double precision cannot separate roots


def _branch_roots(count: int):
    """Roots u_k of tan(u) = u/4 on branches (k*pi, k*pi + pi/2), k = 1..count."""
    if count > SINK_BRANCH_CAP:
        raise ValueError(f"requested {count} branches, resolvable cap is {SINK_BRANCH_CAP}")
    roots = []
    for k in range(1, count + 1):
        lo = k * math.pi + 1e-9
        hi = k * math.pi + 0.5 * math.pi - 1e-9
        roots.append(bisect_root(lambda u: math.tan(u) - 0.25 * u, lo, hi))
    return roots


@dataclass(frozen=True)
class SinkInfo:
    """One resolved sink of example1 and its basin between flanking sources."""

    position_chart: float
    position_circle: float
    basin_arc: tuple      # circle (lo, hi), counterclockwise through the sink
    basin_volume: float
    sources_chart: tuple  # flanking sources (outer, inner) in chart coordinates


def example1_sinks(count: int):
    """The ``count`` outermost sinks of example1 with their basin intervals.

    The critical points of phi at |s| > 0 are s = +-1/u_k for the branch roots
    u_k; classification alternates (on the positive side odd branches are
    sinks, on the negative side even branches are), so consecutive sinks lie
    on opposite sides of the degenerate point.  Basin endpoints are the
    flanking sources, the outermost basin wrapping through the glued endpoint.
    """
    if count < 1:
        raise ValueError("need count >= 1")
    us = _branch_roots(count + 1)
    sinks = []
    for j in range(1, count + 1):
        u = us[j - 1]
        side = 1.0 if j % 2 == 1 else -1.0
        s_sink = side / u
        inner = side / us[j]           # branch j+1, same side: a source
        if j == 1:
            outer = -side / us[0]      # across the glued endpoint: branch-1 source, other side
        else:
            outer = side / us[j - 2]   # branch j-1, same side: a source
        c_sink = float(circle_from_chart(s_sink))
        c_inner = float(circle_from_chart(inner))
        c_outer = float(circle_from_chart(outer))
        if side > 0:
            arc = (c_inner, c_outer)   # counterclockwise from inner source over the sink
        else:
            arc = (c_outer, c_inner)
        length = (arc[1] - arc[0]) % 1.0
        sinks.append(SinkInfo(position_chart=s_sink, position_circle=c_sink,
                              basin_arc=arc, basin_volume=length,
                              sources_chart=(outer, inner)))
    return sinks


def _classify_chart_point(s, h_scale: float = 1e-3) -> str:
    """'sink' if phi' goes - to + through s (a local minimum of phi)."""
    h = h_scale * abs(s)
    left = float(_phi_prime(np.array([s - h]))[0])
    right = float(_phi_prime(np.array([s + h]))[0])
    if left < 0.0 < right:
        return "sink"
    if left > 0.0 > right:
        return "source"
    return "degenerate"


# ---------------------------------------------------------------------------
# bowen: explicit planar field with a heteroclinic double loop on the cylinder
# ---------------------------------------------------------------------------

def bowen_energy(x, y):
    """Two-well pendulum-type energy H(x, y) = y^2/2 + (1 + cos(4*pi*x))/(4*pi)^2."""
    return 0.5 * np.asarray(y, dtype=float) ** 2 + (1.0 + np.cos(FOUR_PI * np.asarray(x, dtype=float))) / FOUR_PI ** 2


BOWEN_H_SEP = 2.0 / FOUR_PI ** 2  # energy of both saddles (cos = 1 at x in {0, 1/2})


def _bowen_field(x, y, c):
    """V = J grad(H) + c (H_sep - H) grad(H): rotation along level sets plus
    a transversal push onto the separatrix level."""
    s4 = np.sin(FOUR_PI * x)
    c4 = np.cos(FOUR_PI * x)
    hx = -s4 / FOUR_PI
    hy = y
    h = 0.5 * y * y + (1.0 + c4) / FOUR_PI ** 2
    g = c * (BOWEN_H_SEP - h)
    return -hy + g * hx, hx + g * hy


def bowen_map(z, c: float = 4.0, substeps: int = 128):
    """Time-one map of the Bowen-type field, classical RK4 with fixed substeps."""
    z = np.asarray(z, dtype=float)
    scalar = z.ndim == 1
    pts = np.atleast_2d(z)
    x = pts[:, 0].copy()
    y = pts[:, 1].copy()
    h = 1.0 / substeps
    for _ in range(substeps):
        k1x, k1y = _bowen_field(x, y, c)
        k2x, k2y = _bowen_field(x + 0.5 * h * k1x, y + 0.5 * h * k1y, c)
        k3x, k3y = _bowen_field(x + 0.5 * h * k2x, y + 0.5 * h * k2y, c)
        k4x, k4y = _bowen_field(x + h * k3x, y + h * k3y, c)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
    out = np.column_stack([np.mod(x, 1.0), np.clip(y, -1.0, 1.0)])
    return out[0] if scalar else out


def _bowen_equilibria():
    """Newton on grad(H) = 0 from a coarse grid, classified by Hessian signature."""
    found = []
    for x0 in (np.arange(8) + 0.12) / 8.0:
        x, y = float(x0), 0.05
        ok = False
        for _ in range(100):
            gx = -math.sin(FOUR_PI * x) / FOUR_PI
            gy = y
            hxx = -math.cos(FOUR_PI * x)
            if abs(hxx) < 1e-8:
                break
            x -= gx / hxx
            y -= gy  # Hyy = 1
            if abs(math.sin(FOUR_PI * x) / FOUR_PI) < 1e-13 and abs(y) < 1e-13:
                ok = True
                break
        if not ok:
            continue
        x %= 1.0
        if x >= 1.0:  # mod of a tiny negative rounds to 1.0
            x = 0.0
        hxx = -math.cos(FOUR_PI * x)
        kind = "saddle" if hxx < 0.0 else "source"
        if not any(abs(circle_delta(x, fx)) < 1e-8 and k == kind for fx, _, k in found):
            found.append((x, y, kind))
    saddles = sorted([(x, y) for x, y, k in found if k == "saddle"])
    sources = sorted([(x, y) for x, y, k in found if k == "source"])
    if len(saddles) != 2 or len(sources) != 2:
        raise ConvergenceError(
            f"Newton found {len(saddles)} saddles / {len(sources)} sources, expected 2 + 2")
    return tuple(saddles), tuple(sources)


def bowen_saddles():
    """The two saddle points of the energy, to 1e-10, with certified signature."""
    saddles, _ = _bowen_equilibria()
    return saddles


def separatrix_polyline(samples: int = 512):
    """The level curve H = H_sep: y = +-sin(2*pi*x)/(2*pi), sampled for plotting."""
    x = np.arange(samples + 1) / samples
    y = np.sin(TWO_PI * x) / TWO_PI
    return np.column_stack([x, y]), np.column_stack([x, -y])


# ---------------------------------------------------------------------------
# registry, load-time self-checks, caching
# ---------------------------------------------------------------------------

def _self_check(model: ModelSpec) -> None:
    """Verify reference fixed points against the actual map (load-time oracle)."""
    f = model.map
    for ref in model.refs:
        for p in ref.points:
            pt = np.asarray(p, dtype=float)
            if model.space.ndim == 1:
                image = float(np.asarray(f(np.array([pt[0]])))[0])
                err = abs(circle_delta(pt[0], image))
                deriv = abs(map_derivative(f, pt[0]))
                if ref.kind == "point" and deriv >= 1.0:
                    raise PhasePortraitError(
                        f"{model.name}: reference sink {pt[0]:.6g} is not attracting (|f'|={deriv:.4g})")
            else:
                image = np.asarray(f(pt[None, :]))[0]
                err = float(np.max(np.abs(image - pt)))
            if err > 1e-10:
                raise PhasePortraitError(
                    f"{model.name}: reference point {pt} moves by {err:.3g} under the map")


def _build_rotation(alpha: float = 0.25) -> ModelSpec:
    return ModelSpec(name="rotation", space=StateSpace.circle(), params={"alpha": alpha},
                     map=lambda x, alpha=alpha: rotation_map(x, alpha), eps_max=0.24)


def _build_north_south(a: float = 0.05) -> ModelSpec:
    f = lambda x, a=a: north_south_map(x, a)
    fps = _circle_fixed_points(f)
    if len(fps) != 4:
        raise PhasePortraitError(f"north_south: expected 4 fixed points, found {len(fps)}")
    refs = _sink_refs_from_fixed_points(f, fps, "sink")
    sources = [p for p in fps if abs(map_derivative(f, p)) >= 1.0]
    return ModelSpec(name="north_south", space=StateSpace.circle(), params={"a": a},
                     map=f, eps_max=0.2, refs=tuple(refs),
                     extras={"sources": sources, "fixed_points": fps})


def _build_asym_two_sink(a: float = 0.03, b: float = 0.05) -> ModelSpec:
    f = lambda x, a=a, b=b: asym_two_sink_map(x, a, b)
    fps = _circle_fixed_points(f)
    if len(fps) != 4:
        raise PhasePortraitError(f"unexpected phase portrait: {len(fps)} fixed points, expected 4")
    refs = _sink_refs_from_fixed_points(f, fps, "sink")
    if len(refs) != 2:
        raise PhasePortraitError(f"unexpected phase portrait: {len(refs)} sinks, expected 2")
    sources = [p for p in fps if abs(map_derivative(f, p)) >= 1.0]
    return ModelSpec(name="asym_two_sink", space=StateSpace.circle(), params={"a": a, "b": b},
                     map=f, eps_max=0.2, refs=tuple(refs),
                     extras={"sources": sources, "fixed_points": fps})


def _build_example1(ref_sinks: int = 10) -> ModelSpec:
    sinks = example1_sinks(ref_sinks)
    refs = []
    for i, s in enumerate(sinks):
        kind = _classify_chart_point(s.position_chart)
        if kind != "sink":
            raise PhasePortraitError(f"example1: oracle critical point {i} classified as {kind}")
        refs.append(AttractorRef(
            ref_id=f"sink_{i}",
            description=f"sink at s={s.position_chart:.12g} (circle {s.position_circle:.12g})",
            kind="point",
            points=((s.position_circle,),),
            basin_arc=s.basin_arc,
            basin_volume=s.basin_volume))
    return ModelSpec(name="example1", space=StateSpace.circle(), params={"ref_sinks": ref_sinks},
                     map=example1_map, eps_max=0.2, refs=tuple(refs),
                     extras={"degenerate_point_circle": float(circle_from_chart(0.0)),
                             "sinks": sinks})


def _build_bowen(c: float = 4.0) -> ModelSpec:
    if c <= 0.0:
        raise ValueError("bowen parameter c must be positive")
    saddles, sources = _bowen_equilibria()
    f = lambda z, c=c: bowen_map(z, c)
    ref = AttractorRef(
        ref_id="loop_set",
        description="heteroclinic loop set through both saddles",
        kind="level_set",
        points=tuple(saddles),
        basin_volume=1.0,
        level_fn=bowen_energy,
        level_value=BOWEN_H_SEP)
    return ModelSpec(name="bowen", space=StateSpace.cylinder(), params={"c": c},
                     map=f, eps_max=0.2, refs=(ref,),
                     extras={"saddles": saddles, "sources": sources,
                             "h_sep": BOWEN_H_SEP})


_BUILDERS = {
    "rotation": _build_rotation,
    "north_south": _build_north_south,
    "asym_two_sink": _build_asym_two_sink,
    "example1": _build_example1,
    "bowen": _build_bowen,
}

_CACHE: dict = {}


def model_names():
    return sorted(_BUILDERS)


def build_model(name: str, **params) -> ModelSpec:
    """Build (and self-check) a named model; results are cached per parameter set."""
    if name not in _BUILDERS:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(model_names())}")
    key = (name, tuple(sorted(params.items())))
    if key not in _CACHE:
        model = _BUILDERS[name](**params)
        _self_check(model)
        _CACHE[key] = model
    return _CACHE[key]
