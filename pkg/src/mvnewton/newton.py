"""Multivariate Newton interpolation: divided differences, evaluation,
differentiation, and Lagrange <-> Newton transforms.

The divided-difference transform runs *in place* on a single length-``|A|``
buffer: the sample vector becomes the coefficient vector.  Dimensions are
eliminated from the last coordinate down to the first; within one dimension
every grid line (indices differing only in that coordinate) receives a
standard triangular 1D divided-difference sweep.  All lines of one sweep are
batched into one gather/scatter per pass, so the result is independent of
any line scheduling by construction.  Total work is bounded by
``C * |A|**2`` arithmetic operations with O(|A|) auxiliary storage.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import UnisolventGrid
from .multi_index import MultiIndexSet

__all__ = [
    "NewtonPolynomial",
    "LagrangeCoefficients",
    "DegenerateNodesError",
    "NonFiniteSampleError",
    "divided_differences",
    "interpolate",
    "eval_iterative",
    "eval_recursive",
    "eval_derivative",
    "newton_to_lagrange",
    "lagrange_basis_in_newton",
    "lagrange_newton_matrix",
    "newton_basis_values",
    "save_bundle",
    "load_bundle",
]

# Divided differences divide by axis-point differences; anything below this
# is treated as a degenerate (effectively duplicated) node pair.
MIN_NODE_SEPARATION = 1e-14

# Soft bound on the number of floats held by one evaluation intermediate.
_CHUNK_BUDGET = 4_000_000


class DegenerateNodesError(RuntimeError):
    """Axis points too close for a stable divided-difference divisor."""


class NonFiniteSampleError(ValueError):
    """A sample value is NaN or infinite."""


@dataclass(frozen=True)
class NewtonPolynomial:
    """A polynomial in the Newton basis of ``grid``: ``sum_a c_a * N_a``."""

    grid: UnisolventGrid
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.float64, copy=True)
        if arr.shape != (len(self.grid),):
            raise ValueError(
                f"coefficient vector must have length {len(self.grid)}, got {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise ValueError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    def __call__(self, x):
        return eval_iterative(self, x)


@dataclass(frozen=True)
class LagrangeCoefficients:
    """Function values at the grid nodes, aligned to canonical order."""

    grid: UnisolventGrid
    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.shape != (len(self.grid),):
            raise ValueError(
                f"value vector must have length {len(self.grid)}, got {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise NonFiniteSampleError("sample values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)


def _axis_sweep(index_set: MultiIndexSet, axis: int, points: np.ndarray, values, inverse):
    """Triangular divided-difference sweep along one coordinate, in place.

    ``values`` may be ``(|A|,)`` or ``(|A|, k)``; the same passes apply to
    every column.  The forward sweep at pass ``j`` maps, for every index at
    level ``a_i = l >= j``,

        v[alpha] <- (v[alpha] - v[alpha - e_i]) / (p[l] - p[l - j]),

    gathering the right-hand side before any write, which performs the
    classical in-place triangle of every grid line at once.  The inverse
    sweep unwinds the passes in reverse.
    """
    levels = index_set.exponents[:, axis]
    top = int(levels.max())
    if top == 0:
        return
    order = np.argsort(levels, kind="stable")
    sorted_levels = levels[order]
    # starts[j-1] = first slot (in level-sorted order) whose level is >= j
    starts = np.searchsorted(sorted_levels, np.arange(1, top + 2))
    sub = order[starts[0] :]
    sub_levels = sorted_levels[starts[0] :]
    parent_exps = index_set.exponents[sub].copy()
    parent_exps[:, axis] -= 1
    try:
        parents = index_set.positions(parent_exps)
    except KeyError as exc:
        raise ValueError(
            "divided differences require a downward-closed index set"
        ) from exc

    pts = points[: top + 1]
    column = values.ndim == 2
    if not inverse:
        # The divisors used across all passes are exactly the pairwise
        # differences of the first top+1 axis points, so one sorted-gap
        # scan covers the degenerate-node guard for the whole sweep.
        if np.diff(np.sort(pts)).min() < MIN_NODE_SEPARATION:
            raise DegenerateNodesError(
                f"axis {axis + 1} has node separation below {MIN_NODE_SEPARATION}"
            )
    # When every line is one contiguous run in storage order (always true in
    # 1D) the sweep can stream over slices instead of gather indices.
    contiguous = (
        np.array_equal(sub, np.arange(sub[0], sub[0] + sub.size))
        and np.array_equal(parents, sub - 1)
        and np.array_equal(
            sub_levels, np.arange(sub_levels[0], sub_levels[0] + sub_levels.size)
        )
    )
    if not inverse:
        if contiguous and not column:
            # Streaming path over slices, in cache-sized blocks so the
            # per-element cost stays uniform across problem sizes.  Blocks
            # run right to left: the left neighbour a block reads still
            # holds its pre-pass value, exactly as in the scalar triangle.
            block = 8192
            base = int(sub[0])
            lev0 = int(sub_levels[0])
            total = sub.size
            gap_buf = np.empty(min(block, top))
            num_buf = np.empty(min(block, total))
            subtract, divide = np.subtract, np.divide
            for j in range(1, top + 1):
                lo = base + j - lev0
                width = base + total - lo
                for stop in range(width, 0, -block):
                    start = max(stop - block, 0)
                    size = stop - start
                    gaps = subtract(
                        pts[j + start : j + stop],
                        pts[start:stop],
                        out=gap_buf[:size],
                    )
                    num = subtract(
                        values[lo + start : lo + stop],
                        values[lo + start - 1 : lo + stop - 1],
                        out=num_buf[:size],
                    )
                    divide(num, gaps, out=values[lo + start : lo + stop])
            return
        for j in range(1, top + 1):
            gaps = pts[j:] - pts[: top + 1 - j]
            off = starts[j - 1] - starts[0]
            tgt = sub[off:]
            src = parents[off:]
            div = gaps[sub_levels[off:] - j]
            if column:
                values[tgt] = (values[tgt] - values[src]) / div[:, None]
            else:
                values[tgt] = (values[tgt] - values[src]) / div
    else:
        rel = starts - starts[0]
        for j in range(top, 0, -1):
            gaps = pts[j:] - pts[: top + 1 - j]
            # Levels must be rebuilt bottom-up: level l reads level l - 1
            # as it stood *before* the forward pass, i.e. after this loop
            # already restored it.
            for level in range(j, top + 1):
                blk = slice(rel[level - 1], rel[level])
                tgt = sub[blk]
                src = parents[blk]
                values[tgt] = values[tgt] * gaps[level - j] + values[src]


def _transform(grid: UnisolventGrid, values: np.ndarray, inverse: bool = False):
    dim = grid.dim
    axis_order = range(dim) if inverse else range(dim - 1, -1, -1)
    for axis in axis_order:
        _axis_sweep(grid.index_set, axis, grid.axes[axis].points, values, inverse)
    return values


def divided_differences(samples: LagrangeCoefficients) -> NewtonPolynomial:
    """Newton coefficients of the unique interpolant of ``samples``.

    This is the multivariate divided-difference scheme; evaluating the
    result at every grid node reproduces the input values.
    """
    values = np.array(samples.values, dtype=np.float64, copy=True)
    with np.errstate(over="ignore", invalid="ignore"):
        _transform(samples.grid, values, inverse=False)
    if not np.isfinite(values).all():
        # roundoff in a divided-difference triangle is amplified roughly
        # like 2**depth on [-1, 1]; past depth ~1000 generic data leaves
        # the double range no matter how the nodes are ordered
        raise FloatingPointError(
            "divided differences overflowed; the per-axis degree is too "
            "high for floating-point interpolation of this data"
        )
    return NewtonPolynomial(samples.grid, values)


def newton_to_lagrange(poly: NewtonPolynomial) -> LagrangeCoefficients:
    """Values of ``poly`` at the grid nodes; inverse of divided differences."""
    values = np.array(poly.coeffs, dtype=np.float64, copy=True)
    _transform(poly.grid, values, inverse=True)
    return LagrangeCoefficients(poly.grid, values)


def interpolate(f, grid: UnisolventGrid) -> NewtonPolynomial:
    """Sample ``f`` at the ``|A|`` grid nodes and run divided differences.

    ``f`` is tried first as a vectorized callable on the full ``(|A|, m)``
    node array; if that fails (or returns the wrong shape) it is called once
    per node with a length-``m`` coordinate array.
    """
    nodes = grid.node_coordinates
    values = None
    # A (|A|, m) result could also be a row-wise broadcast when |A| == m,
    # so the vectorized path is skipped in that ambiguous square case.
    if len(grid) != grid.dim:
        try:
            candidate = np.asarray(f(nodes), dtype=np.float64)
            if candidate.shape == (len(grid),):
                values = candidate
        except Exception:
            values = None
    if values is None:
        values = np.fromiter(
            (float(f(nodes[i])) for i in range(len(grid))),
            dtype=np.float64,
            count=len(grid),
        )
    bad = ~np.isfinite(values)
    if bad.any():
        where = int(np.flatnonzero(bad)[0])
        raise NonFiniteSampleError(
            f"f returned {values[where]!r} at node {tuple(nodes[where])}"
        )
    return divided_differences(LagrangeCoefficients(grid, values))


def lagrange_basis_in_newton(grid: UnisolventGrid, alpha) -> NewtonPolynomial:
    """Newton coefficients of the Lagrange polynomial ``L_alpha``.

    ``L_alpha`` is 1 at the node of ``alpha`` and 0 at every other node,
    i.e. the divided differences of a Kronecker-delta sample vector.
    """
    try:
        pos = grid.index_set.position(alpha)
    except KeyError:
        raise ValueError(f"{tuple(alpha)} is not a member of the index set") from None
    delta = np.zeros(len(grid))
    delta[pos] = 1.0
    return divided_differences(LagrangeCoefficients(grid, delta))


def lagrange_newton_matrix(grid: UnisolventGrid) -> np.ndarray:
    """Matrix whose column at position(alpha) holds Newton coefficients of
    ``L_alpha``; one batched divided-difference run on the identity.

    Storage is O(|A|^2); callers enforcing desk-scale caps do so themselves.
    """
    mat = np.eye(len(grid))
    _transform(grid, mat, inverse=False)
    return mat


# -- evaluation ------------------------------------------------------------


def _as_points(x, dim):
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"points must have shape (m,) or (k, m) with m={dim}")
    return arr, single


def _prefix_products(points: np.ndarray, top: int, x_col: np.ndarray) -> np.ndarray:
    """``out[:, k] = prod_{j<k} (x - p_j)`` for ``k = 0..top``."""
    out = np.empty((x_col.size, top + 1))
    out[:, 0] = 1.0
    for k in range(1, top + 1):
        out[:, k] = out[:, k - 1] * (x_col - points[k - 1])
    return out


def _prefix_derivatives(
    points: np.ndarray, top: int, x_col: np.ndarray, order: int
) -> np.ndarray:
    """Derivatives 0..order of the prefix products, ``(npts, top+1, order+1)``.

    Maintained left to right by the product rule: appending the factor
    ``(x - p_k)`` maps ``d_l <- d_l * (x - p_k) + l * d_{l-1}``.
    """
    out = np.zeros((x_col.size, top + 1, order + 1))
    out[:, 0, 0] = 1.0
    for k in range(1, top + 1):
        t = x_col - points[k - 1]
        for l in range(order, 0, -1):
            out[:, k, l] = out[:, k - 1, l] * t + l * out[:, k - 1, l - 1]
        out[:, k, 0] = out[:, k - 1, 0] * t
    return out


def newton_basis_values(grid: UnisolventGrid, x, order=None) -> np.ndarray:
    """All Newton basis functions (or a partial derivative of them) at ``x``.

    Returns ``(k, |A|)`` for ``(k, m)`` input, aligned to canonical order.
    """
    pts, single = _as_points(x, grid.dim)
    exps = grid.index_set.exponents
    if order is None:
        order = (0,) * grid.dim
    order = tuple(int(v) for v in order)
    if len(order) != grid.dim or any(v < 0 for v in order):
        raise ValueError("derivative order must be a multi-index of the grid dimension")

    tables = []
    for i in range(grid.dim):
        top = grid.index_set.max_exponent(i)
        if order[i] == 0:
            tables.append(_prefix_products(grid.axes[i].points, top, pts[:, i]))
        else:
            tables.append(
                _prefix_derivatives(grid.axes[i].points, top, pts[:, i], order[i])[
                    :, :, order[i]
                ]
            )
    # Fusing adjacent dimensions into one outer-product table halves the
    # number of (k, |A|) gathers, the dominant cost for large index sets.
    out = None
    i = 0
    while i < grid.dim:
        width = tables[i].shape[1]
        if i + 1 < grid.dim and width * tables[i + 1].shape[1] <= 65536:
            fused = (tables[i + 1][:, :, None] * tables[i][:, None, :]).reshape(
                pts.shape[0], -1
            )
            idx = exps[:, i] + width * exps[:, i + 1]
            factor = fused[:, idx]
            i += 2
        else:
            factor = tables[i][:, exps[:, i]]
            i += 1
        out = factor if out is None else out * factor
    return out[0] if single else out


def _eval_chunked(poly: NewtonPolynomial, pts: np.ndarray, order) -> np.ndarray:
    count = pts.shape[0]
    out = np.empty(count)
    step = max(1, _CHUNK_BUDGET // max(len(poly.grid), 1))
    for start in range(0, count, step):
        sl = slice(start, min(start + step, count))
        basis = newton_basis_values(poly.grid, pts[sl], order)
        out[sl] = basis @ poly.coeffs
    return out


def eval_iterative(poly: NewtonPolynomial, x):
    """Evaluate via cumulative per-axis products ``q[i, k]``.

    Accepts a single point ``(m,)`` or a batch ``(k, m)``; O(m |A|) work per
    point, embarrassingly parallel over points.
    """
    pts, single = _as_points(x, poly.grid.dim)
    out = _eval_chunked(poly, pts, None)
    return float(out[0]) if single else out


def eval_derivative(poly: NewtonPolynomial, order, x):
    """Evaluate the partial derivative of multi-index ``order`` at ``x``.

    Each univariate factor product is differentiated by the product-rule
    recurrence of :func:`_prefix_derivatives`; order ``(0, ..., 0)`` reduces
    exactly to :func:`eval_iterative`.
    """
    order = tuple(int(v) for v in np.atleast_1d(order))
    if len(order) != poly.grid.dim or any(v < 0 for v in order):
        raise ValueError("derivative order must be a multi-index of the grid dimension")
    if all(v == 0 for v in order):
        return eval_iterative(poly, x)
    pts, single = _as_points(x, poly.grid.dim)
    out = _eval_chunked(poly, pts, order)
    return float(out[0]) if single else out


def eval_recursive(poly: NewtonPolynomial, x) -> float:
    """Evaluate one point by the recursive splitting ``Q = Q1 + (x_i - p) Q2``.

    A nested Horner walk over the canonical layout: contiguous runs sharing
    all trailing exponents are collapsed one dimension at a time.  O(|A|)
    arithmetic operations.
    """
    pts, single = _as_points(x, poly.grid.dim)
    if not single:
        raise ValueError("eval_recursive evaluates a single point")
    point = pts[0]
    exps = poly.grid.index_set.exponents
    coeffs = poly.coeffs
    axes = poly.grid.axes

    def walk(axis: int, lo: int, hi: int) -> float:
        if axis < 0:
            return float(coeffs[lo])
        column = exps[lo:hi, axis]
        top = int(column[-1])
        bounds = lo + np.searchsorted(column, np.arange(top + 2))
        nodes = axes[axis].points
        acc = walk(axis - 1, int(bounds[top]), int(bounds[top + 1]))
        for level in range(top - 1, -1, -1):
            inner = walk(axis - 1, int(bounds[level]), int(bounds[level + 1]))
            acc = inner + (point[axis] - nodes[level]) * acc
        return acc

    return walk(poly.grid.dim - 1, 0, len(poly.grid))


# -- polynomial bundles ------------------------------------------------------


def save_bundle(poly: NewtonPolynomial, directory) -> None:
    """Write ``header.json``, ``grid.csv`` and ``coefficients.csv``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    grid = poly.grid
    header = {
        "m": grid.dim,
        "num_coeffs": len(grid),
        "node_family": grid.node_family,
        "provenance": _provenance_json(grid.index_set.provenance),
    }
    with open(directory / "header.json", "w") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")
    grid.to_csv(directory / "grid.csv")
    with open(directory / "coefficients.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"a{i + 1}" for i in range(grid.dim)] + ["c"])
        for row, c in zip(grid.index_set.exponents, poly.coeffs):
            writer.writerow([str(int(v)) for v in row] + [format(c, ".17g")])


def load_bundle(directory) -> NewtonPolynomial:
    directory = Path(directory)
    with open(directory / "header.json") as fh:
        header = json.load(fh)
    family = header.get("node_family", "custom")
    if family not in ("chebyshev_lobatto", "leja_ordered_chebyshev_lobatto", "leja"):
        family = "custom"
    grid = UnisolventGrid.from_csv(directory / "grid.csv", family=family)
    with open(directory / "coefficients.csv", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = [row for row in reader if row]
    if len(rows) != len(grid):
        raise ValueError(
            f"coefficient file has {len(rows)} rows, grid has {len(grid)} nodes"
        )
    dim = grid.dim
    exps = np.asarray([[int(v) for v in row[:dim]] for row in rows], dtype=np.int64)
    coeffs = np.asarray([float(row[dim]) for row in rows])
    pos = grid.index_set.positions(exps)
    if np.unique(pos).size != len(grid):
        raise ValueError("coefficient file does not cover every index exactly once")
    ordered = np.empty(len(grid))
    ordered[pos] = coeffs
    return NewtonPolynomial(grid, ordered)


def _provenance_json(tag):
    if tag is None:
        return None
    m, n, p = tag
    return {"m": int(m), "n": int(n), "p": "inf" if p == float("inf") else p}
