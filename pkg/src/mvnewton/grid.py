"""One-dimensional node families and non-tensorial unisolvent grids.

A grid pairs a downward-closed multi-index set ``A`` with one ordered node
tuple per dimension; the node attached to ``alpha`` is
``(p[alpha_1, 1], ..., p[alpha_m, m])``.  The *order* of each axis is
semantic: position ``j`` holds the node used by every index with
``alpha_i = j``, which is why Leja ordering matters in more than one
dimension.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .multi_index import MultiIndexSet, is_downward_closed

__all__ = [
    "Nodes1D",
    "UnisolventGrid",
    "chebyshev_lobatto",
    "leja_order",
    "leja_points",
    "build_grid",
    "axes_for",
    "monomial_vandermonde",
    "vandermonde_unisolvence_check",
]

NODE_FAMILIES = ("chebyshev_lobatto", "leja_ordered_chebyshev_lobatto", "leja", "custom")

DEFAULT_LEJA_RESOLUTION = 100_000

# Relative smallest-singular-value threshold separating "singular" from
# "merely ill-conditioned" at desk scale.
UNISOLVENCE_RTOL = 1e-10
UNISOLVENCE_SIZE_CAP = 600

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Nodes1D:
    """An ordered tuple of pairwise-distinct points in ``[-1, 1]``."""

    points: np.ndarray
    family: str = "custom"

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("nodes must be a non-empty 1-d sequence")
        if not np.isfinite(pts).all() or np.abs(pts).max() > 1.0:
            raise ValueError("nodes must lie within [-1, 1]")
        if len(np.unique(pts)) != pts.size:
            raise ValueError("nodes must be pairwise distinct")
        if self.family not in NODE_FAMILIES:
            raise ValueError(f"unknown node family {self.family!r}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.size


def chebyshev_lobatto(n: int) -> Nodes1D:
    """The ``n + 1`` points ``cos(k*pi/n)``, ``k = 0..n``, in natural order.

    For even ``n`` the midpoint is snapped to exactly ``0.0``, the only value
    forced by symmetry that plain ``cos`` evaluation misses.
    """
    if n < 0:
        raise ValueError("degree must be non-negative")
    if n == 0:
        return Nodes1D(np.array([1.0]), family="chebyshev_lobatto")
    pts = np.cos(np.pi * np.arange(n + 1) / n)
    if n % 2 == 0:
        pts[n // 2] = 0.0
    return Nodes1D(pts, family="chebyshev_lobatto")


def _leja_greedy_order(points: np.ndarray) -> np.ndarray:
    """Greedy Leja permutation of ``points``; ties go to the larger value."""
    pts = np.asarray(points, dtype=np.float64)
    count = pts.size
    chosen = np.empty(count, dtype=np.int64)
    remaining = np.ones(count, dtype=bool)

    absvals = np.abs(pts)
    ties = absvals == absvals.max()
    first = int(np.flatnonzero(ties)[np.argmax(pts[ties])])
    chosen[0] = first
    remaining[first] = False

    # Running sum of log-distances to everything chosen so far; logs keep
    # long products from overflowing and leave ties between symmetric
    # candidates exact (identical summands in identical order).
    logdist = np.full(count, -np.inf)
    with np.errstate(divide="ignore"):
        logdist[remaining] = np.log(np.abs(pts[remaining] - pts[first]))
    for step in range(1, count):
        best = logdist[remaining].max()
        ties = remaining & (logdist == best)
        pick = int(np.flatnonzero(ties)[np.argmax(pts[ties])])
        chosen[step] = pick
        remaining[pick] = False
        logdist[pick] = -np.inf
        if step < count - 1:
            with np.errstate(divide="ignore"):
                logdist[remaining] += np.log(np.abs(pts[remaining] - pts[pick]))
    return chosen


def leja_order(nodes) -> Nodes1D:
    """Reorder ``nodes`` greedily: ``|p_0|`` maximal, then each ``p_l``
    maximizing ``prod_{j<l} |p_l - p_j|`` over the remaining candidates.

    The output is a permutation of the input; applying it twice is a no-op.
    """
    if isinstance(nodes, Nodes1D):
        pts, family = nodes.points, nodes.family
    else:
        pts, family = np.asarray(nodes, dtype=np.float64), "custom"
    order = _leja_greedy_order(pts)
    out_family = (
        "leja_ordered_chebyshev_lobatto" if family == "chebyshev_lobatto" else family
    )
    return Nodes1D(pts[order], family=out_family)


def _golden_section_max(fun, lo: float, hi: float, tol: float = 1e-13) -> float:
    a, b = float(lo), float(hi)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def leja_points(n: int, resolution: int = DEFAULT_LEJA_RESOLUTION) -> Nodes1D:
    """The first ``n + 1`` Leja points of ``[-1, 1]``, starting at ``1``.

    Each point maximizes ``prod_j |p - p_j|`` over the interval.  The search
    is deterministic: an exhaustive scan over a Chebyshev-distributed
    candidate grid of size ``resolution`` followed by golden-section
    refinement of the winning candidate's bracketing interval (abscissa
    tolerance ``1e-13``).  The sequence is nested, so a prefix of the result
    is itself a valid Leja set.
    """
    if n < 0:
        raise ValueError("degree must be non-negative")
    if resolution < 10 * (n + 1):
        raise ValueError(f"resolution must be at least 10*(n+1) = {10 * (n + 1)}")
    chosen = [1.0]
    if n == 0:
        return Nodes1D(np.array(chosen), family="leja")

    grid = np.cos(np.pi * np.arange(resolution) / (resolution - 1))  # 1 down to -1
    with np.errstate(divide="ignore"):
        logprod = np.log(np.abs(grid - 1.0))

    def objective(p: float) -> float:
        with np.errstate(divide="ignore"):
            return float(np.log(np.abs(p - np.asarray(chosen))).sum())

    # The distance product often has exactly tied maxima (e.g. +-1/sqrt(3)
    # after {1, -1, 0}), so every near-tied local peak is refined and the
    # documented tie rule (prefer the larger point) decides among refined
    # values, keeping the result stable under resolution changes.  The
    # preselect band must cover discretization offsets between mirrored
    # regions; the decision band only the float noise of the log objective.
    preselect_tol = 1e-4
    decide_tol = 1e-12
    for _ in range(n):
        top = logprod.max()
        tied = np.flatnonzero(logprod >= top - preselect_tol)
        peaks = [
            int(k)
            for k in tied
            if (k == 0 or logprod[k] >= logprod[k - 1])
            and (k == resolution - 1 or logprod[k] >= logprod[k + 1])
        ]
        candidates = []
        for k in peaks:
            lo = grid[min(k + 1, resolution - 1)]
            hi = grid[max(k - 1, 0)]
            refined = _golden_section_max(objective, lo, hi)
            for q in (grid[k], refined, lo, hi):
                candidates.append((objective(q), float(q)))
        best_val = max(v for v, _ in candidates)
        tie = [(v, q) for v, q in candidates if v >= best_val - decide_tol]
        # Largest tied abscissa wins, but within its cluster the best
        # objective value is kept, so a refinement point a few ulps inside
        # an interval end cannot shadow the exact endpoint.
        q_max = max(q for _, q in tie)
        best = max(
            (v, q) for v, q in tie if abs(q - q_max) <= 1e-9 * (1.0 + abs(q_max))
        )[1]
        # The distance product is flat to float precision around a maximum,
        # so a winner this close to zero is the symmetric step whose true
        # maximizer is exactly 0 (same snap rationale as the Lobatto
        # midpoint); leaving the offset in would flip later tie-breaks.
        if abs(best) < 1e-7:
            best = 0.0
        chosen.append(best)
        with np.errstate(divide="ignore"):
            logprod += np.log(np.abs(grid - best))
    return Nodes1D(np.array(chosen), family="leja")


@dataclass(frozen=True)
class UnisolventGrid:
    """A downward-closed index set plus one ordered node tuple per axis."""

    index_set: MultiIndexSet
    axes: tuple[Nodes1D, ...]

    @property
    def dim(self) -> int:
        return self.index_set.dim

    @property
    def node_family(self) -> str:
        families = {ax.family for ax in self.axes}
        return families.pop() if len(families) == 1 else "custom"

    @cached_property
    def node_coordinates(self) -> np.ndarray:
        """All grid nodes as a ``(|A|, m)`` array, rows in canonical order."""
        exps = self.index_set.exponents
        coords = np.column_stack(
            [self.axes[i].points[exps[:, i]] for i in range(self.dim)]
        )
        coords.setflags(write=False)
        return coords

    def node(self, alpha) -> tuple[float, ...]:
        alpha = tuple(int(v) for v in alpha)
        if len(alpha) != self.dim:
            raise ValueError(f"expected {self.dim} entries, got {len(alpha)}")
        return tuple(float(self.axes[i].points[a]) for i, a in enumerate(alpha))

    def __len__(self) -> int:
        return len(self.index_set)

    def to_csv(self, path) -> None:
        """Columns ``a1..am, x1..xm`` (index then coordinates), canonical order."""
        dim = self.dim
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [f"a{i + 1}" for i in range(dim)] + [f"x{i + 1}" for i in range(dim)]
            )
            coords = self.node_coordinates
            for row, xyz in zip(self.index_set.exponents, coords):
                writer.writerow(
                    [str(int(v)) for v in row] + [format(v, ".17g") for v in xyz]
                )

    @classmethod
    def from_csv(cls, path, family: str = "custom") -> "UnisolventGrid":
        """Rebuild a grid from :meth:`to_csv` output.

        Axis points beyond the largest exponent used per dimension are not
        recoverable from the file; the reconstructed axes are exactly as
        long as the index set requires.
        """
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if len(header) % 2 != 0:
                raise ValueError(f"malformed grid file {path}")
            dim = len(header) // 2
            exps, coords = [], []
            for row in reader:
                if not row:
                    continue
                exps.append([int(v) for v in row[:dim]])
                coords.append([float(v) for v in row[dim:]])
        index_set = MultiIndexSet(np.asarray(exps, dtype=np.int64))
        exp_arr = index_set.exponents
        coord_arr = np.asarray(coords)[np.lexsort(np.asarray(exps, dtype=np.int64).T)]
        axes = []
        for i in range(dim):
            size = index_set.max_exponent(i) + 1
            pts = np.full(size, np.nan)
            pts[exp_arr[:, i]] = coord_arr[:, i]
            if np.isnan(pts).any():
                raise ValueError(f"grid file {path} misses axis levels in dim {i + 1}")
            axes.append(Nodes1D(pts, family=family))
        return build_grid(index_set, axes)


def build_grid(index_set: MultiIndexSet, axes) -> UnisolventGrid:
    """Assemble the node set ``{(p[a_1,1], ..., p[a_m,m]) : alpha in A}``.

    Requires a downward-closed index set and, per dimension ``i``, at least
    ``max_exponent(A, i) + 1`` pairwise-distinct axis points.  Distinct axis
    points make all ``|A|`` grid nodes distinct, and the resulting grid is
    unisolvent for the polynomial space spanned by ``A``.
    """
    axes = tuple(
        ax if isinstance(ax, Nodes1D) else Nodes1D(np.asarray(ax, dtype=np.float64))
        for ax in axes
    )
    if len(axes) != index_set.dim:
        raise ValueError(
            f"need {index_set.dim} axes for dimension {index_set.dim}, got {len(axes)}"
        )
    for i, ax in enumerate(axes):
        needed = index_set.max_exponent(i) + 1
        if len(ax) < needed:
            raise ValueError(
                f"axis {i + 1} has {len(ax)} points but the index set needs {needed}"
            )
    if not is_downward_closed(index_set):
        raise ValueError("grid construction requires a downward-closed index set")
    return UnisolventGrid(index_set=index_set, axes=axes)


def axes_for(
    index_set: MultiIndexSet,
    family: str,
    leja_resolution: int = DEFAULT_LEJA_RESOLUTION,
) -> tuple[Nodes1D, ...]:
    """Per-dimension axes of the requested family, sized for ``index_set``.

    ``family`` is ``"lcl"`` (Leja-ordered Chebyshev-Lobatto) or ``"leja"``
    (Leja points of the interval).
    """
    axes = []
    for i in range(index_set.dim):
        n_i = index_set.max_exponent(i)
        if family == "lcl":
            axes.append(leja_order(chebyshev_lobatto(n_i)))
        elif family == "leja":
            axes.append(leja_points(n_i, resolution=max(leja_resolution, 10 * (n_i + 1))))
        else:
            raise ValueError(f"unknown grid family {family!r} (expected 'lcl' or 'leja')")
    return tuple(axes)


def monomial_vandermonde(points: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Generalized Vandermonde matrix ``V[a, b] = points[a] ** exponents[b]``."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    exps = np.asarray(exponents, dtype=np.int64)
    if pts.shape[1] != exps.shape[1]:
        raise ValueError("points and exponents disagree on dimension")
    out = np.ones((pts.shape[0], exps.shape[0]))
    for i in range(pts.shape[1]):
        out *= pts[:, i, None] ** exps[None, :, i]
    return out


def vandermonde_unisolvence_check(
    nodes,
    exponents=None,
    *,
    size_cap: int = UNISOLVENCE_SIZE_CAP,
    rel_threshold: float = UNISOLVENCE_RTOL,
) -> bool:
    """Numerically decide unisolvence of a node set (desk-scale oracle).

    Builds the ``|A| x |A|`` monomial Vandermonde matrix and reports whether
    the smallest singular value exceeds ``rel_threshold`` times the largest.
    Accepts an :class:`UnisolventGrid`, or raw ``(nodes, exponents)`` arrays
    so degenerate inputs that the constructors forbid can still be probed.
    The O(|A|^3) cost is capped at ``size_cap`` rows.
    """
    if isinstance(nodes, UnisolventGrid):
        coords = nodes.node_coordinates
        exps = nodes.index_set.exponents
    else:
        coords = np.atleast_2d(np.asarray(nodes, dtype=np.float64))
        if exponents is None:
            raise ValueError("raw node input requires the exponents argument")
        exps = np.asarray(exponents, dtype=np.int64)
    if coords.shape[0] != exps.shape[0]:
        raise ValueError("node count must match index count")
    if coords.shape[0] > size_cap:
        raise ValueError(
            f"instance size {coords.shape[0]} exceeds the oracle cap {size_cap}"
        )
    vmat = monomial_vandermonde(coords, exps)
    singular = np.linalg.svd(vmat, compute_uv=False)
    return bool(singular[-1] > rel_threshold * singular[0])
