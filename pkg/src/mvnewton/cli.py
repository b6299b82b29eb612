"""Command-line front end: grid generation, interpolation, evaluation,
differentiation, Lebesgue sweeps, and convergence experiments.

Every command validates its numeric inputs before any computation starts,
writes files atomically (temp then rename, so nonzero exits leave no
partial outputs), and prints floats with 17 significant digits so files
round-trip losslessly.  Exit codes: 0 success, 2 validation error,
1 internal numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, grid as grid_mod
from .analysis import (
    BenchmarkFunction,
    convergence_run,
    fit_rate,
    lebesgue_estimate,
    make_benchmark,
    optimal_rho,
)
from .grid import axes_for, build_grid
from .multi_index import make_lp_set
from .newton import (
    DegenerateNodesError,
    LagrangeCoefficients,
    divided_differences,
    eval_derivative,
    interpolate,
    load_bundle,
    save_bundle,
)

DEFAULT_SAMPLES = 10_000

_FUNCTION_PARAM_FLAGS = ("r", "s", "a", "k1", "k2")


@dataclass
class RunConfig:
    """Validated inputs of one CLI invocation."""

    subcommand: str
    m: int | None = None
    p: float | None = None
    family: str = "lcl"
    degrees: list[int] = field(default_factory=list)
    function: str | None = None
    params: dict[str, float] = field(default_factory=dict)
    samples: int = DEFAULT_SAMPLES
    seed: int = 0
    deriv: tuple[int, ...] | None = None
    out: Path | None = None
    fmt: str = "csv"
    leja_resolution: int = grid_mod.DEFAULT_LEJA_RESOLUTION
    lebesgue_order: int = 0
    lebesgue_cap: int = analysis.LEBESGUE_SIZE_CAP


class UsageError(ValueError):
    """Invalid flags or files; maps to exit code 2."""


def parse_p(text: str) -> float:
    """``1``, ``2``, ``inf``, or a positive decimal literal."""
    text = text.strip().lower()
    if text == "inf":
        return math.inf
    try:
        value = int(text)
    except ValueError:
        try:
            value = float(text)
        except ValueError:
            raise UsageError(f"cannot parse degree selector p={text!r}") from None
    if value <= 0:
        raise UsageError(f"degree selector p must be positive, got {text}")
    return value


def _p_text(p: float) -> str:
    if p == math.inf:
        return "inf"
    if float(p).is_integer():
        return str(int(p))
    return format(p, ".17g")


def parse_degrees(text: str) -> list[int]:
    """``lo:hi``, ``lo:hi:step``, or a comma list of degrees."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            if len(parts) == 2:
                lo, hi, step = parts[0], parts[1], 1
            elif len(parts) == 3:
                lo, hi, step = parts
            else:
                raise ValueError
            if step < 1 or hi < lo:
                raise ValueError
            return list(range(lo, hi + 1, step))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse degree range {text!r}") from None


def parse_deriv(text: str, m: int) -> tuple[int, ...]:
    try:
        order = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"cannot parse derivative order {text!r}") from None
    if len(order) != m or any(v < 0 for v in order):
        raise UsageError(f"derivative order must be {m} non-negative integers")
    return order


def _atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows_text(header: list[str], rows: list[list], fmt: str) -> str:
    """Tabular output; CSV floats carry 17 significant digits, JSON uses
    native numbers (shortest round-trip repr, also lossless)."""
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [_fmt(v) if isinstance(v, float) else v for v in row]
        )
    return buf.getvalue()


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _build_function(cfg: RunConfig) -> BenchmarkFunction:
    if cfg.function is None:
        raise UsageError("a builtin function id is required (--function)")
    try:
        return make_benchmark(cfg.function, cfg.m, **cfg.params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _grid_for(cfg: RunConfig, n: int):
    index_set = make_lp_set(cfg.m, n, cfg.p)
    axes = axes_for(index_set, cfg.family, leja_resolution=cfg.leja_resolution)
    return build_grid(index_set, axes)


# -- subcommands ---------------------------------------------------------------


def cmd_nodes(cfg: RunConfig) -> int:
    the_grid = _grid_for(cfg, cfg.degrees[0])
    dim = the_grid.dim
    header = [f"a{i + 1}" for i in range(dim)] + [f"x{i + 1}" for i in range(dim)]
    rows = [
        [int(v) for v in exp] + [float(x) for x in coord]
        for exp, coord in zip(the_grid.index_set.exponents, the_grid.node_coordinates)
    ]
    _atomic_write_text(cfg.out, _rows_text(header, rows, cfg.fmt))
    print(f"num_indices={len(the_grid)}")
    for i, axis in enumerate(the_grid.axes):
        print(f"axis{i + 1}: " + " ".join(_fmt(v) for v in axis.points))
    return 0


def cmd_interpolate(cfg: RunConfig, values_file: Path | None) -> int:
    the_grid = _grid_for(cfg, cfg.degrees[0])
    if values_file is not None:
        values = _read_values(values_file)
        if len(values) != len(the_grid):
            raise UsageError(
                f"sample file has {len(values)} rows but the grid expects "
                f"{len(the_grid)} (one per index, canonical order)"
            )
        poly = divided_differences(LagrangeCoefficients(the_grid, values))
    else:
        poly = interpolate(_build_function(cfg), the_grid)
    out = Path(cfg.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=out.parent, prefix=out.name + "."))
    try:
        save_bundle(poly, tmp)
        if out.exists():
            shutil.rmtree(out) if out.is_dir() else out.unlink()
        os.replace(tmp, out)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    print(f"num_coeffs={len(poly.coeffs)}")
    return 0


def _read_values(path: Path) -> np.ndarray:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read sample file: {exc}") from None
    vals = []
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            vals.append(float(line))
        except ValueError:
            raise UsageError(f"malformed sample line {line!r}") from None
    return np.asarray(vals)


def _read_points(path: Path, dim: int) -> np.ndarray:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read points file: {exc}") from None
    rows = []
    for idx, line in enumerate(lines):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [v for v in line.replace(",", " ").split() if v]
        if idx == 0:
            try:
                [float(v) for v in parts]
            except ValueError:
                continue  # header row
        try:
            row = [float(v) for v in parts]
        except ValueError:
            raise UsageError(f"malformed point line {line!r}") from None
        if len(row) != dim:
            raise UsageError(
                f"point line {line!r} has {len(row)} coordinates, expected {dim}"
            )
        rows.append(row)
    return np.asarray(rows).reshape(-1, dim)


def cmd_eval(cfg: RunConfig, bundle: Path, points_file: Path) -> int:
    poly = load_bundle(bundle)
    dim = poly.grid.dim
    points = _read_points(points_file, dim)
    order = cfg.deriv if cfg.deriv is not None else (0,) * dim
    if len(order) != dim:
        raise UsageError(f"derivative order must have {dim} entries")
    header = [f"x{i + 1}" for i in range(dim)] + ["value"]
    rows: list[list] = []
    if points.size:
        if np.abs(points).max() > 1.0:
            print(
                "warning: some points lie outside [-1,1]^m; the polynomial "
                "extends globally but no approximation claim holds there",
                file=sys.stderr,
            )
        values = eval_derivative(poly, order, points)
        rows = [
            [float(x) for x in pt] + [float(v)] for pt, v in zip(points, values)
        ]
    _atomic_write_text(cfg.out, _rows_text(header, rows, cfg.fmt))
    print(f"num_points={len(rows)}")
    return 0


def cmd_convergence(cfg: RunConfig) -> int:
    if len(cfg.degrees) < 4:
        raise UsageError("convergence needs at least 4 degrees to fit a rate")
    func = _build_function(cfg)
    deriv = cfg.deriv if cfg.deriv is not None else (0,) * cfg.m
    if not func.supports_order(deriv):
        raise UsageError(f"{func.kind} does not support derivative order {deriv}")
    record = convergence_run(
        func,
        cfg.p,
        cfg.family,
        cfg.degrees,
        num_samples=cfg.samples,
        seed=cfg.seed,
        deriv_order=deriv,
        leja_resolution=cfg.leja_resolution,
    )
    fit = fit_rate(record)
    out = Path(cfg.out)
    _atomic_write_text(out, record.to_csv_text())
    fit_path = out.with_suffix(".fit.json")
    _atomic_write_text(fit_path, json.dumps(fit.to_json_dict(), indent=2) + "\n")
    reference = optimal_rho(func, cfg.p)
    print(f"c={_fmt(fit.c)} rho={_fmt(fit.rho)} r_squared={_fmt(fit.r_squared)}")
    print(f"reference_rho={'unknown' if reference is None else _fmt(reference)}")
    print(f"record={out} fit={fit_path}")
    return 0


def cmd_lebesgue(cfg: RunConfig, p_values: list[float]) -> int:
    header = ["m", "p", "n", "num_coeffs", "lambda"]
    rows: list[list] = []
    for p in p_values:
        for n in cfg.degrees:
            index_set = make_lp_set(cfg.m, n, p)
            if len(index_set) > cfg.lebesgue_cap:
                print(
                    f"warning: skipping m={cfg.m} p={_p_text(p)} n={n}: "
                    f"|A|={len(index_set)} exceeds cap {cfg.lebesgue_cap}",
                    file=sys.stderr,
                )
                continue
            axes = axes_for(index_set, cfg.family, leja_resolution=cfg.leja_resolution)
            the_grid = build_grid(index_set, axes)
            lam = lebesgue_estimate(
                the_grid,
                num_samples=cfg.samples,
                seed=cfg.seed,
                k=cfg.lebesgue_order,
                size_cap=cfg.lebesgue_cap,
            )
            rows.append([cfg.m, _p_text(p), n, len(index_set), float(lam)])
            print(f"m={cfg.m} p={_p_text(p)} n={n} lambda={_fmt(lam)}")
    _atomic_write_text(cfg.out, _rows_text(header, rows, cfg.fmt))
    return 0


# -- argument parsing ----------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser, *, samples_default=DEFAULT_SAMPLES):
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument(
        "--samples", type=int, default=samples_default, help="number of sample points"
    )
    parser.add_argument("--out", required=True, help="output path")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_space_args(parser: argparse.ArgumentParser):
    parser.add_argument("-m", "--dim", type=int, required=True, help="dimension m >= 1")
    parser.add_argument("-p", default="2", help="degree selector: 1, 2, inf, or a decimal")
    parser.add_argument(
        "--family", choices=analysis.GRID_FAMILIES, default="lcl", help="node family"
    )
    parser.add_argument(
        "--leja-resolution",
        type=int,
        default=grid_mod.DEFAULT_LEJA_RESOLUTION,
        help="candidate grid size for continuum Leja points",
    )


def _add_function_args(parser: argparse.ArgumentParser):
    parser.add_argument(
        "--function",
        help="builtin function id: runge, f1, f3, f4, f5 (or long names)",
    )
    for name in _FUNCTION_PARAM_FLAGS:
        parser.add_argument(f"--{name}", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvnewton",
        description=(
            "Multivariate Newton interpolation on downward-closed index sets "
            "with Leja-ordered nodes"
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_nodes = sub.add_parser("nodes", help="generate an interpolation grid")
    _add_space_args(p_nodes)
    p_nodes.add_argument("-n", "--degree", type=int, required=True)
    _add_common(p_nodes)

    p_int = sub.add_parser("interpolate", help="interpolate samples or a builtin")
    _add_space_args(p_int)
    p_int.add_argument("-n", "--degree", type=int, required=True)
    _add_function_args(p_int)
    p_int.add_argument("--values", help="file with one sample per line, grid order")
    _add_common(p_int)

    p_eval = sub.add_parser("eval", help="evaluate a polynomial bundle at points")
    p_eval.add_argument("--bundle", required=True, help="bundle directory")
    p_eval.add_argument("--points", required=True, help="CSV of query points")
    p_eval.add_argument("--deriv", help="derivative multi-index, e.g. 1,0")
    _add_common(p_eval)

    p_conv = sub.add_parser("convergence", help="run a degree sweep and fit the rate")
    _add_space_args(p_conv)
    p_conv.add_argument("--degrees", required=True, help="lo:hi[:step] or comma list")
    _add_function_args(p_conv)
    p_conv.add_argument("--deriv", help="derivative multi-index, e.g. 1,0")
    _add_common(p_conv)

    p_leb = sub.add_parser("lebesgue", help="sweep Lebesgue-constant estimates")
    p_leb.add_argument("-m", "--dim", type=int, required=True)
    p_leb.add_argument("-p", default="2", help="comma list of selectors, e.g. 1,2,inf")
    p_leb.add_argument("--family", choices=analysis.GRID_FAMILIES, default="lcl")
    p_leb.add_argument(
        "--leja-resolution", type=int, default=grid_mod.DEFAULT_LEJA_RESOLUTION
    )
    p_leb.add_argument("--degrees", required=True, help="lo:hi[:step] or comma list")
    p_leb.add_argument("-k", "--order", type=int, default=0, help="Lebesgue order k")
    p_leb.add_argument("--cap", type=int, default=analysis.LEBESGUE_SIZE_CAP)
    _add_common(p_leb)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(subcommand=args.subcommand)
    cfg.out = Path(args.out)
    cfg.fmt = args.format
    cfg.seed = args.seed
    cfg.samples = args.samples
    if cfg.samples < 1:
        raise UsageError("--samples must be positive")
    if hasattr(args, "dim"):
        cfg.m = args.dim
        if cfg.m < 1:
            raise UsageError(f"dimension must be at least 1, got {cfg.m}")
    if hasattr(args, "family"):
        cfg.family = args.family
    if hasattr(args, "leja_resolution"):
        cfg.leja_resolution = args.leja_resolution
    if args.subcommand == "lebesgue":
        cfg.degrees = parse_degrees(args.degrees)
        cfg.lebesgue_order = args.order
        cfg.lebesgue_cap = args.cap
        if not 0 <= cfg.lebesgue_order <= analysis.LEBESGUE_MAX_ORDER:
            raise UsageError(
                f"Lebesgue order must be 0..{analysis.LEBESGUE_MAX_ORDER}"
            )
    elif args.subcommand in ("nodes", "interpolate"):
        if args.degree < 0:
            raise UsageError("degree must be non-negative")
        cfg.degrees = [args.degree]
    elif args.subcommand == "convergence":
        cfg.degrees = parse_degrees(args.degrees)
        if not cfg.degrees:
            raise UsageError("empty degree list")
    if hasattr(args, "p") and args.subcommand != "lebesgue":
        cfg.p = parse_p(args.p)
    if getattr(args, "function", None) is not None:
        cfg.function = args.function
        cfg.params = {
            name: getattr(args, name)
            for name in _FUNCTION_PARAM_FLAGS
            if getattr(args, name, None) is not None
        }
    if getattr(args, "deriv", None) is not None:
        if args.subcommand == "eval":
            cfg.deriv = tuple(int(v) for v in args.deriv.split(","))
        else:
            cfg.deriv = parse_deriv(args.deriv, cfg.m)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_from_args(args)
        if args.subcommand == "nodes":
            return cmd_nodes(cfg)
        if args.subcommand == "interpolate":
            if (args.values is None) == (cfg.function is None):
                raise UsageError("provide exactly one of --function or --values")
            return cmd_interpolate(cfg, Path(args.values) if args.values else None)
        if args.subcommand == "eval":
            return cmd_eval(cfg, Path(args.bundle), Path(args.points))
        if args.subcommand == "convergence":
            return cmd_convergence(cfg)
        if args.subcommand == "lebesgue":
            p_values = [parse_p(v) for v in str(args.p).split(",") if v.strip()]
            if not p_values:
                raise UsageError("empty p list")
            return cmd_lebesgue(cfg, p_values)
        raise UsageError(f"unknown subcommand {args.subcommand}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DegenerateNodesError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
