"""Grid discretization of the one-step transition kernel and its chain analysis.

The kernel x -> wrap(f(x) + t), t uniform on the eps-ball, is approximated by
a sparse row-stochastic matrix over partition cells.  In 1d the entries are
computed in closed form: each cell is split into monotone pieces of the map
(extrema bracketed to 1e-10), each piece into short linear segments, and the
push-forward of a linear segment convolved with uniform noise is a trapezoid
whose mass per target cell is an exact CDF difference.  On the cylinder the
entries are estimated from seeded stratified (position, noise) samples.

Chain analysis: recurrent classes are the strongly connected components of the
support digraph with no outgoing edges; each carries a unique stationary
probability vector; absorption probabilities of transient cells solve the
linear system (I - Q) A = B.  The number of recurrent classes is the
discretized count of coexisting physical measures at this noise level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from .dynamics import CELL_STREAM, NoiseLevel, PerturbedSystem, sample_noise, stream
from .errors import ConvergenceError, PartitionTooCoarseError
from .measures import MeasureVector
from .spaces import CIRCLE, Partition

COARSE_FACTOR_1D = 4.0   # cell width must be <= eps/4 (noise spans >= 8 cells)
COARSE_FACTOR_2D = 2.0   # relaxed to eps/2 on the cylinder (grid sizes are capped)
DIRECT_SOLVE_LIMIT = 25_000


@dataclass(frozen=True)
class MarkovModel:
    """Sparse row-stochastic approximation of the perturbed one-step kernel."""

    part: Partition
    matrix: sp.csr_matrix
    build_mode: str            # "exact-1d" or "sampled-2d"
    prune_tol: float
    epsilon: float
    seed: int
    samples_per_cell: int
    clamp_events: int = 0

    def row_sums(self):
        return np.asarray(self.matrix.sum(axis=1)).ravel()


@dataclass(frozen=True)
class RecurrentDecomposition:
    """Recurrent classes (no-exit strongly connected components) and transient cells."""

    classes: tuple
    transient: np.ndarray
    class_of: np.ndarray   # per cell: class index, or -1 for transient

    @property
    def count(self) -> int:
        return len(self.classes)


@dataclass(frozen=True)
class AbsorptionTable:
    """alpha[x, i] = probability that the chain from cell x is absorbed in class i."""

    part: Partition
    alpha: np.ndarray
    residual: float


def _metric_noise_radius(part: Partition, eps: float) -> float:
    space = part.space
    if space.kind == "interval":
        return eps / (space.b - space.a)
    return eps


def _check_resolution(part: Partition, level: NoiseLevel) -> None:
    level.require_positive()
    factor = COARSE_FACTOR_2D if part.space.ndim == 2 else COARSE_FACTOR_1D
    limit = _metric_noise_radius(part, level.epsilon) / factor
    if part.metric_width > limit * (1.0 + 1e-12):
        raise PartitionTooCoarseError(
            f"partition too coarse for noise level: cell width {part.metric_width:.6g} "
            f"> {limit:.6g} (eps/{factor:g})")


def build_ulam(sys: PerturbedSystem, level: NoiseLevel, part: Partition,
               prune_tol: float = 1e-12, samples_per_cell: int = 256, seed: int = 0,
               segments_per_cell: int = 8, enforce_resolution: bool = True) -> MarkovModel:
    """Build the discretized kernel; exact piecewise integration in 1d, sampled in 2d.

    Requires eps > 0 and cell width small enough that the noise spans several
    cells (this keeps the discrete chain as smoothing as the true kernel and
    prevents spurious recurrent classes).  ``enforce_resolution=False`` lifts
    the width check for closed-form oracle tests on deliberately coarse grids.
    """
    level.require_positive()
    if enforce_resolution:
        _check_resolution(part, level)
    if part.space.ndim == 1:
        rows, cols, vals = _entries_exact_1d(sys, level, part, segments_per_cell)
        mode, clamps = "exact-1d", 0
    else:
        rows, cols, vals, clamps = _entries_sampled_2d(sys, level, part, samples_per_cell, seed)
        mode = "sampled-2d"
    n = part.ncells
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    mat.data[mat.data < prune_tol] = 0.0
    mat.eliminate_zeros()
    row_sums = np.asarray(mat.sum(axis=1)).ravel()
    if np.any(row_sums <= 0.0):
        raise ConvergenceError("a row lost all mass during pruning")
    mat = sp.diags(1.0 / row_sums) @ mat
    mat = mat.tocsr()
    return MarkovModel(part=part, matrix=mat, build_mode=mode, prune_tol=prune_tol,
                       epsilon=level.epsilon, seed=seed,
                       samples_per_cell=samples_per_cell if mode == "sampled-2d" else 0,
                       clamp_events=clamps)


# ---------------------------------------------------------------------------
# exact 1d entries
# ---------------------------------------------------------------------------

def _uniform_conv_cdf(c, u, v, eps):
    """CDF at points c of (uniform on [u, v]) + (uniform on [-eps, eps]), u <= v."""
    c = np.asarray(c, dtype=float)
    length = v - u
    if length < 1e-300:
        return np.clip((c - u + eps) / (2.0 * eps), 0.0, 1.0)
    flat = 2.0 * eps * np.clip(np.minimum(v, c - eps) - u, 0.0, None)
    x1 = np.maximum(u, c - eps)
    x2 = np.minimum(v, c + eps)
    ramp = np.where(x2 > x1, (c + eps) * (x2 - x1) - 0.5 * (x2 * x2 - x1 * x1), 0.0)
    return (flat + ramp) / (2.0 * eps * length)


def _circle_delta(a, b):
    """Signed shortest displacement from a to b on the circle."""
    return (b - a + 0.5) % 1.0 - 0.5


def _golden_extremum(f, lo, hi, find_max, tol=1e-10):
    """Golden-section search for an interior extremum; returns its abscissa."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if (fc > fd) == find_max:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _monotone_nodes(sys, x_nodes, f_unwrapped):
    """Insert breakpoints at interior extrema so every segment is monotone.

    Local extrema of the (unwrapped) image are bracketed between nodes of
    opposite slope and located by golden-section search to 1e-10.
    """
    d = np.diff(f_unwrapped)
    signs = np.sign(d)
    if np.all(signs >= 0) or np.all(signs <= 0):
        return x_nodes, f_unwrapped
    space = sys.space
    base = float(f_unwrapped[0])
    circle = space.kind == CIRCLE

    def f_cont(x):
        # image unwrapped near the cell: valid because the image of one short
        # cell spans much less than half the circle
        v = float(np.asarray(sys.base_map(space.wrap(np.array([x]))))[0])
        return base + _circle_delta(base % 1.0, v) if circle else v

    xs = [x_nodes[0]]
    fs = [f_unwrapped[0]]
    for k in range(len(d) - 1):
        xs.append(x_nodes[k + 1])
        fs.append(f_unwrapped[k + 1])
        if signs[k] != 0 and signs[k + 1] != 0 and signs[k] != signs[k + 1]:
            x_star = _golden_extremum(f_cont, x_nodes[k], x_nodes[k + 2], find_max=signs[k] > 0)
            xs.append(x_star)
            fs.append(f_cont(x_star))
    xs.append(x_nodes[-1])
    fs.append(f_unwrapped[-1])
    order = np.argsort(xs)
    return np.asarray(xs)[order], np.asarray(fs)[order]


def _entries_exact_1d(sys, level, part, segments):
    eps = level.epsilon
    n = part.shape[0]
    space = part.space
    w = part.widths[0]
    circle = space.kind == CIRCLE
    origin = 0.0 if circle else space.a

    # evaluate the map once on every node of every cell
    k_nodes = segments + 1
    offsets = np.linspace(0.0, w, k_nodes)
    starts = origin + w * np.arange(n)
    grid = (starts[:, None] + offsets[None, :]).ravel()
    fvals = np.asarray(sys.base_map(space.wrap(grid))).reshape(n, k_nodes)

    rows_out, cols_out, vals_out = [], [], []
    buf = np.zeros(n)
    for i in range(n):
        xv = grid[i * k_nodes:(i + 1) * k_nodes].copy()
        fv = fvals[i]
        if circle:
            unwrapped = np.empty_like(fv)
            unwrapped[0] = fv[0]
            for k in range(1, k_nodes):
                unwrapped[k] = unwrapped[k - 1] + _circle_delta(fv[k - 1] % 1.0, fv[k] % 1.0)
            fv = unwrapped
        xv, fv = _monotone_nodes(sys, xv, fv)
        buf[:] = 0.0
        cell_width_total = xv[-1] - xv[0]
        for k in range(len(xv) - 1):
            seg_w = xv[k + 1] - xv[k]
            if seg_w <= 0.0:
                continue
            frac = seg_w / cell_width_total
            u, v = sorted((fv[k], fv[k + 1]))
            lo, hi = u - eps, v + eps
            j0 = int(np.floor((lo - origin) / w))
            j1 = int(np.floor((hi - origin) / w)) + 1
            edges = origin + w * np.arange(j0, j1 + 1)
            gvals = _uniform_conv_cdf(edges, u, v, eps)
            masses = np.diff(gvals) * frac
            cols = np.arange(j0, j1)
            if circle:
                cols = cols % n
            else:
                cols = np.clip(cols, 0, n - 1)
            np.add.at(buf, cols, masses)
        nz = np.flatnonzero(buf)
        rows_out.append(np.full(nz.size, i, dtype=np.int64))
        cols_out.append(nz)
        vals_out.append(buf[nz].copy())
    return np.concatenate(rows_out), np.concatenate(cols_out), np.concatenate(vals_out)


# ---------------------------------------------------------------------------
# sampled 2d entries
# ---------------------------------------------------------------------------

def _entries_sampled_2d(sys, level, part, samples_per_cell, seed, batch_cells=1024):
    g = int(round(np.sqrt(samples_per_cell)))
    if g * g != samples_per_cell or g < 2:
        raise ValueError("samples_per_cell must be a perfect square >= 4")
    n1, n2 = part.shape
    ncells = part.ncells
    wx, wy = part.widths
    s = samples_per_cell
    sub = np.indices((g, g)).reshape(2, -1).T  # stratification lattice

    rows_out, cols_out, vals_out = [], [], []
    clamps = 0
    for start in range(0, ncells, batch_cells):
        cells = np.arange(start, min(start + batch_cells, ncells))
        pts = np.empty((cells.size * s, 2))
        noise = np.empty((cells.size * s, 2))
        for k, cell in enumerate(cells):
            rng = stream(seed, CELL_STREAM, int(cell))
            jitter = rng.uniform(0.0, 1.0, (s, 2))
            t = sample_noise(level, rng, size=s, dim=2)
            ix, iy = divmod(int(cell), n2)
            pts[k * s:(k + 1) * s, 0] = ix * wx + (sub[:, 0] + jitter[:, 0]) * (wx / g)
            pts[k * s:(k + 1) * s, 1] = -1.0 + iy * wy + (sub[:, 1] + jitter[:, 1]) * (wy / g)
            noise[k * s:(k + 1) * s] = t
        raw = np.asarray(sys.base_map(part.space.wrap(pts))) + noise
        clamps += int(np.count_nonzero(np.abs(raw[:, 1]) > 1.0))
        images = part.space.wrap(raw)
        idx = part.cell_of(images).reshape(cells.size, s)
        for k, cell in enumerate(cells):
            cols, counts = np.unique(idx[k], return_counts=True)
            rows_out.append(np.full(cols.size, cell, dtype=np.int64))
            cols_out.append(cols)
            vals_out.append(counts / s)
    return (np.concatenate(rows_out), np.concatenate(cols_out),
            np.concatenate(vals_out), clamps)


# ---------------------------------------------------------------------------
# chain analysis
# ---------------------------------------------------------------------------

METASTABLE_FLUX_TOL = 1e-8
METASTABLE_SCAN_STEPS = 512


def recurrent_classes(model: MarkovModel,
                      metastable_flux_tol: float = METASTABLE_FLUX_TOL) -> RecurrentDecomposition:
    """Strongly connected components of the support digraph with no exits,
    plus almost-invariant transient pockets promoted to classes.

    Near the resolution edge a barely-nontrapping sink can leave a transient
    set whose weighted escape flux per step is far below machine precision
    (the kernel's escape slivers vanish under the drift); such a set is
    indistinguishable from invariant in double arithmetic and would make the
    absorption system numerically singular.  Any transient pocket that still
    retains most of its mass after the retained-mass scan and whose
    quasi-stationary escape flux is at most ``metastable_flux_tol`` is
    therefore counted as a recurrent class of the discretized chain.
    """
    mat = model.matrix
    n = model.part.ncells
    _, labels = connected_components(mat, directed=True, connection="strong")
    coo = mat.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    open_labels = set(np.unique(labels[coo.row[leaving]]))
    closed = [lab for lab in np.unique(labels) if lab not in open_labels]
    classes = [np.flatnonzero(labels == lab) for lab in closed]
    transient_mask = np.ones(n, dtype=bool)
    for cells in classes:
        transient_mask[cells] = False
    transient = np.flatnonzero(transient_mask)
    classes.extend(_metastable_pockets(mat, transient, metastable_flux_tol))
    classes.sort(key=lambda cells: int(cells[0]))
    class_of = np.full(n, -1, dtype=np.int64)
    for i, cells in enumerate(classes):
        class_of[cells] = i
    transient = np.flatnonzero(class_of < 0)
    return RecurrentDecomposition(classes=tuple(classes), transient=transient, class_of=class_of)


def _metastable_pockets(mat, transient, flux_tol):
    """Transient subsets whose mass essentially never escapes.

    A cheap retained-mass scan (d <- Q d from d = 1, a few hundred steps)
    rules out the common case; if mass survives it, the leading left
    eigenvectors of the transient block localize the candidate pockets
    (eigenvalue within flux_tol of 1 means the set is invariant at working
    precision), and each weakly connected candidate is kept only if its
    quasi-stationary escape flux is below flux_tol.
    """
    if transient.size < 3:
        return []
    q = mat[transient][:, transient].tocsr()
    d = np.ones(transient.size)
    for _ in range(METASTABLE_SCAN_STEPS):
        d = q @ d
    if d.max() < 0.5:
        return []
    from scipy.sparse.linalg import ArpackNoConvergence, eigs
    k_eigs = min(6, transient.size - 2)
    try:
        vals, vecs = eigs(q.T, k=k_eigs, which="LM", maxiter=10_000)
    except ArpackNoConvergence:
        return []
    candidate_mask = np.zeros(transient.size, dtype=bool)
    for i in range(k_eigs):
        lam = vals[i]
        if abs(lam.imag) > 1e-12 or lam.real < 1.0 - flux_tol:
            continue
        profile = np.abs(vecs[:, i].real)
        candidate_mask |= profile > 1e-12 * profile.max()
    if not np.any(candidate_mask):
        return []
    cells = transient[candidate_mask]
    ncomp, labels = connected_components(mat[cells][:, cells], directed=False)
    pockets = []
    for comp in range(ncomp):
        pocket = cells[labels == comp]
        block = mat[pocket][:, pocket].tocsr()
        keep = np.asarray(block.sum(axis=1)).ravel()
        if np.any(keep <= 0.5):
            continue
        if pocket.size == 1:
            pi = np.ones(1)
        else:
            norm = sp.diags(1.0 / keep) @ block
            pi = _small_stationary(norm.tocsr())
        flux = float(pi @ (1.0 - keep))
        if flux <= flux_tol:
            pockets.append(pocket)
    return pockets


def _small_stationary(p_csr) -> np.ndarray:
    m = p_csr.shape[0]
    a = (p_csr.T - sp.identity(m, format="csr")).tolil()
    a[m - 1, :] = np.ones(m)
    b = np.zeros(m)
    b[m - 1] = 1.0
    pi = splu(a.tocsc()).solve(b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _restrict(model: MarkovModel, cells: np.ndarray) -> sp.csr_matrix:
    return model.matrix[cells][:, cells].tocsr()


def stationary_measure(model: MarkovModel, cells, method: str = "direct",
                       tol: float = 1e-12, max_iter: int = 1_000_000) -> MeasureVector:
    """The unique stationary probability vector of one recurrent class.

    ``method='direct'`` solves the singular linear system (with one equation
    replaced by normalization) by sparse LU and polishes with the chain until
    the sup-norm fixed-point residual is below ``tol``; ``method='power'`` is
    plain power iteration from the uniform vector with the same stopping rule.
    The result is embedded as a measure with zero mass off the class.
    """
    cells = np.asarray(cells, dtype=np.int64)
    if cells.size == 0:
        raise ValueError("empty class")
    sub = _restrict(model, cells)
    row_sums = np.asarray(sub.sum(axis=1)).ravel()
    if np.any(row_sums <= 0.5):
        raise ValueError("class is not recurrent: mass leaves the class")
    leaky = np.any(row_sums != 1.0)
    if leaky:
        # promoted almost-invariant pockets carry fringe rows with visible
        # leaks; the quasi-stationary vector weights them out, which the flux
        # check below verifies after the solve
        sub = (sp.diags(1.0 / row_sums) @ sub).tocsr()
    pt = sub.T.tocsr()
    m = cells.size
    pi = np.full(m, 1.0 / m)
    if method == "direct" and m > 1:
        a = (pt - sp.identity(m, format="csr")).tolil()
        a[m - 1, :] = np.ones(m)
        b = np.zeros(m)
        b[m - 1] = 1.0
        try:
            pi = splu(a.tocsc()).solve(b)
        except RuntimeError as exc:
            raise ConvergenceError(f"stationary solve failed: {exc}") from exc
        pi = np.clip(pi, 0.0, None)
        total = pi.sum()
        if total <= 0.0:
            raise ConvergenceError("stationary solve returned a zero vector")
        pi /= total
    elif method not in ("direct", "power"):
        raise ValueError(f"unknown method {method!r}")
    residual = np.inf
    for it in range(max_iter):
        nxt = pt @ pi
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).max())
        pi = nxt
        if residual <= tol:
            break
    else:
        raise ConvergenceError(
            f"stationary iteration did not reach residual {tol:g} in {max_iter} steps "
            f"(class size {m}, last residual {residual:.3g})")
    if leaky:
        flux = float(pi @ (1.0 - row_sums))
        if flux > 1e-6:
            raise ValueError("class is not recurrent: mass leaves the class")
    mass = np.zeros(model.part.ncells)
    mass[cells] = pi
    return MeasureVector(model.part, mass)


def absorption(model: MarkovModel, decomp: RecurrentDecomposition,
               tol: float = 1e-10, max_iter: int = 2_000_000) -> AbsorptionTable:
    """Absorption probabilities into each recurrent class, for every cell.

    Class cells carry the indicator of their own class.  Transient cells solve
    (I - Q) A = B; solved by sparse LU plus iterative refinement when the
    transient block is small, and by monotone fixed-point iteration
    A <- Q A + B (checked against the same residual) when it is large.
    """
    ncells = model.part.ncells
    l = decomp.count
    alpha = np.zeros((ncells, l))
    for i, cells in enumerate(decomp.classes):
        alpha[cells, i] = 1.0
    tcells = decomp.transient
    residual = 0.0
    if tcells.size:
        q = model.matrix[tcells][:, tcells].tocsr()
        bmat = np.column_stack([
            np.asarray(model.matrix[tcells][:, cells].sum(axis=1)).ravel()
            for cells in decomp.classes])
        nt = tcells.size
        if nt <= DIRECT_SOLVE_LIMIT:
            ident = sp.identity(nt, format="csc")
            try:
                lu = splu((ident - q).tocsc())
            except RuntimeError as exc:
                raise ConvergenceError(
                    f"absorption system singular ({nt} transient cells): {exc}") from exc
            a = np.column_stack([lu.solve(bmat[:, i]) for i in range(l)])
            for _ in range(10):
                r = bmat - (a - q @ a)
                residual = float(np.abs(r).max())
                if residual <= tol:
                    break
                a += np.column_stack([lu.solve(r[:, i]) for i in range(l)])
            else:
                raise ConvergenceError(
                    f"absorption refinement stalled at residual {residual:.3g}")
        else:
            a = np.zeros((nt, l))
            for it in range(max_iter):
                nxt = q @ a + bmat
                residual = float(np.abs(nxt - a).max())
                a = nxt
                if residual <= tol:
                    break
            else:
                raise ConvergenceError(
                    f"absorption iteration did not reach residual {tol:g} in {max_iter} steps "
                    f"(last residual {residual:.3g})")
        alpha[tcells] = np.clip(a, 0.0, 1.0)
    return AbsorptionTable(part=model.part, alpha=alpha, residual=residual)


def weights(table: AbsorptionTable, part: Partition) -> np.ndarray:
    """Volume-weighted column sums of the absorption table: beta_i = sum vol * alpha_i."""
    if table.part != part:
        raise ValueError("absorption table belongs to a different partition")
    return table.alpha.sum(axis=0) * part.cell_volume


def assemble_mean_sojourn(measures, beta) -> MeasureVector:
    """Convex combination sum_i beta_i * mu_i of per-class stationary measures."""
    beta = np.asarray(beta, dtype=float)
    if len(measures) != beta.size or beta.size == 0:
        raise ValueError("weight mismatch")
    if np.any(beta < -1e-12) or abs(beta.sum() - 1.0) > 1e-9:
        raise ValueError("weight mismatch")
    part = measures[0].part
    mass = np.zeros(part.ncells)
    for mu, b in zip(measures, beta):
        if mu.part != part:
            raise ValueError("weight mismatch")
        mass += b * mu.mass
    return MeasureVector(part, mass)
