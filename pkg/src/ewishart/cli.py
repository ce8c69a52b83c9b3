"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 bad parameters or usage,
3 numerical failure (bracketing, monotonicity, convergence).
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import zonal
from .eigdist import (
    BracketError,
    LargestEigenvalueCdf,
    NonMonotoneError,
    WishartSpec,
    cdf_lmax_kotz,
    cdf_lmax_t_model,
)
from .generators import ModelError, parse_model
from .linalg import ConvergenceError, DefinitenessError, SpdMatrix
from .montecarlo import SimConfig, empirical_cdf_lmax, simulate_lmax
from .verify import SUITES, run_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_NUMERIC = 3

log = logging.getLogger("ewishart")


class UsageError(ValueError):
    pass


def fmt(v) -> str:
    """17 significant digits, enough to round-trip a double."""
    if v is None:
        return ""
    return format(float(v), ".17g")


def parse_floats(text, name) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise UsageError(f"--{name}: empty list")
    return vals


def parse_grid(text) -> np.ndarray:
    """``a:b:count`` (inclusive linspace) or a comma-separated list."""
    if ":" in text:
        try:
            a, b, count = text.split(":")
            grid = np.linspace(float(a), float(b), int(count))
        except ValueError:
            raise UsageError(f"--grid: expected start:stop:count, got {text!r}") from None
    else:
        grid = np.array(parse_floats(text, "grid"))
    if grid.size == 0 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise UsageError("--grid: values must be positive and strictly increasing")
    return grid


def parse_sigma(text, m) -> SpdMatrix:
    if os.path.exists(text):
        sigma = SpdMatrix.from_file(text)
    else:
        sigma = SpdMatrix.diagonal(parse_floats(text, "sigma"))
    if m is not None and sigma.order != m:
        raise UsageError(f"--sigma has order {sigma.order} but --m is {m}")
    return sigma


def build_spec(args) -> WishartSpec:
    sigma = parse_sigma(args.sigma, args.m)
    m = args.m or sigma.order
    return WishartSpec(m, args.n, sigma, parse_model(args.model, m, args.n))


def open_output(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def write_csv(args, header, rows):
    fh, close = open_output(args.output)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    finally:
        if close:
            fh.close()


# -- commands ---------------------------------------------------------------


def cmd_cdf(args):
    spec = build_spec(args)
    grid = parse_grid(args.grid)
    rows = []
    if args.path == "explicit":
        if spec.model.kind == "t":
            fn = cdf_lmax_t_model
        elif spec.model.kind == "kotz1":
            fn = cdf_lmax_kotz
        else:
            raise UsageError("--path explicit exists for the t and kotz1 models only")
        for x in grid:
            p, rep = fn(spec, x, args.K, rel_tol=args.rel_tol)
            rows.append((x, p, rep.value, None, rep.degrees_used))
    else:
        dist = LargestEigenvalueCdf(spec, args.K, form=args.form, rel_tol=args.rel_tol)
        for x in grid:
            raw, rep = dist.evaluate(x, with_tail=not args.no_tail)
            rows.append((x, min(1.0, max(0.0, raw)), raw, rep.tail_bound, rep.degrees_used))
    write_csv(args, ["x", "cdf", "raw", "tail_bound", "degrees_used"], rows)
    return EXIT_OK


def cmd_quantile(args):
    spec = build_spec(args)
    probs = parse_floats(args.p, "p")
    if any(not 0 < p < 1 for p in probs):
        raise UsageError("--p: probabilities must lie in (0, 1)")
    dist = LargestEigenvalueCdf(spec, args.K, rel_tol=args.rel_tol)
    write_csv(args, ["p", "quantile"], [(p, dist.quantile(p, args.tol)) for p in probs])
    return EXIT_OK


def cmd_table(args):
    spec = build_spec(args)
    alphas = parse_floats(args.alphas, "alphas")
    if any(not 0 < a < 1 for a in alphas):
        raise UsageError("--alphas: levels must lie in (0, 1)")
    dist = LargestEigenvalueCdf(spec, args.K, rel_tol=args.rel_tol)
    analytic = [dist.quantile(a, args.tol) for a in alphas]
    header = ["alpha", "quantile_analytic"]
    rows = [[a, q] for a, q in zip(alphas, analytic)]
    if args.with_mc:
        samples = simulate_lmax(spec, args.replications, args.seed, args.workers)
        header.append("quantile_mc")
        for row, a in zip(rows, alphas):
            row.append(np.quantile(samples, a))
    write_csv(args, header, rows)
    return EXIT_OK


def cmd_simulate(args):
    spec = build_spec(args)
    config = SimConfig(spec, args.replications, args.seed, parse_grid(args.grid))
    x, p, se = empirical_cdf_lmax(config, workers=args.workers)
    write_csv(args, ["x", "p_hat", "stderr"], zip(x, p, se))
    return EXIT_OK


def cmd_verify(args):
    names = args.suite or list(SUITES)
    store = zonal.get_store()
    failed = 0
    for name in names:
        res = run_suite(name, max_degree=args.max_degree, replications=args.replications, seed=args.seed)
        print(res.line(), flush=True)
        failed += not res.passed
    for key in store.rebuilt:
        print(f"notice: zonal table degree={key[0]} max_length={key[1]} was corrupted and has been rebuilt")
    print(f"{len(names) - failed}/{len(names)} suites passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def _cache_files(directory):
    if directory is None or not directory.exists():
        return []
    return sorted(directory.glob("zonal-d*-l*.bin"))


def cmd_cache(args):
    store = zonal.get_store()
    directory = store.directory
    if args.action == "info":
        files = _cache_files(directory)
        size = sum(f.stat().st_size for f in files)
        print(f"directory: {directory}")
        print(f"tables: {len(files)}, {size / 1e6:.1f} MB")
        for f in files:
            print(f"  {f.name}")
        return EXIT_OK
    if args.action == "clear":
        files = _cache_files(directory)
        for f in files:
            f.unlink()
        print(f"removed {len(files)} tables from {directory}")
        return EXIT_OK
    if args.action == "build":
        if directory is None:
            raise UsageError("no cache directory configured")
        for k in range(args.max_degree + 1):
            zonal.save_table(store.table(k, args.max_length), directory)
        print(f"stored degrees 0..{args.max_degree} (length <= {args.max_length}) in {directory}")
        return EXIT_OK
    if args.action == "export":
        text = zonal.export_table(store.table(args.degree, args.max_length))
        fh, close = open_output(args.output)
        try:
            fh.write(text + "\n")
        finally:
            if close:
                fh.close()
        return EXIT_OK
    raise UsageError(f"unknown cache action {args.action!r}")


# -- parser -----------------------------------------------------------------


def _model_args(p):
    p.add_argument("--model", default="gaussian", help="gaussian | t:rho=R | kotz1:theta=T,q=Q")
    p.add_argument("--m", type=int, help="dimension (defaults to the order of sigma)")
    p.add_argument("--n", type=int, required=True, help="degrees of freedom")
    p.add_argument("--sigma", required=True, help="diagonal as 'a,b,c' or a path to a matrix file")
    p.add_argument("-o", "--output", help="output file (default stdout)")


def _series_args(p, K=100):
    p.add_argument("--K", type=int, default=K, help="truncation degree (default %(default)s)")
    p.add_argument("--rel-tol", type=float, default=1e-16, help="early-stop tolerance of the degree sum")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewishart", description="Largest-eigenvalue distribution of elliptical Wishart matrices."
    )
    parser.add_argument("--zonal-cache", help="zonal table cache directory (env EWISHART_ZONAL_CACHE)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cdf", help="evaluate the truncated CDF on a grid")
    _model_args(p)
    _series_args(p)
    p.add_argument("--grid", default="1:60:60", help="start:stop:count or a comma list")
    p.add_argument("--form", choices=("kummer", "series", "heterogeneous"), default="kummer")
    p.add_argument("--path", choices=("generic", "explicit"), default="generic",
                   help="explicit: model-specific closed form (t, kotz1)")
    p.add_argument("--no-tail", action="store_true", help="skip the tail bound column")
    p.set_defaults(func=cmd_cdf)

    p = sub.add_parser("quantile", help="invert the truncated CDF")
    _model_args(p)
    _series_args(p)
    p.add_argument("--p", required=True, help="comma-separated probabilities")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_quantile)

    p = sub.add_parser("table", help="percentile table (analytic, optionally Monte Carlo)")
    _model_args(p)
    _series_args(p)
    p.add_argument("--alphas", default="0.05,0.10,0.50,0.90,0.95")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--with-mc", action="store_true")
    p.add_argument("--replications", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("simulate", help="empirical CDF of the largest eigenvalue")
    _model_args(p)
    p.add_argument("--grid", default="1:60:60")
    p.add_argument("--replications", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the self-check suites")
    p.add_argument("--suite", action="append", choices=SUITES, help="run only this suite (repeatable)")
    p.add_argument("--max-degree", type=int, default=10, help="degree limit of the zonal suite")
    p.add_argument("--replications", type=int, help="override Monte Carlo sample sizes")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cache", help="inspect or manage the zonal table cache")
    p.add_argument("action", choices=("info", "build", "clear", "export"))
    p.add_argument("--max-degree", type=int, default=100)
    p.add_argument("--max-length", type=int, default=3)
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_cache)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.zonal_cache:
        zonal.set_store(zonal.ZonalStore(Path(args.zonal_cache)))
    try:
        return args.func(args)
    except (UsageError, ModelError, DefinitenessError, zonal.ZonalDegreeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NonMonotoneError, BracketError, ConvergenceError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
