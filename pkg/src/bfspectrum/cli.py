"""Command-line driver: `bfspectrum <subcommand> ...`."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .assembly import assemble, write_coordinate
from .config import ConfigError, load_config
from .curved import (
    RadialBump,
    ball_growth_entropy,
    lower_bound_grid,
    quartic_angle_integral,
    radial_test_rayleigh,
    write_bound_csv,
    write_growth_csv,
)
from .eigensolve import smallest_eigenpairs
from .experiments import LengthRefusal, build_metric, run_lengths, run_sweep, sweep_csv_text
from .grid import PeriodicGrid
from .symbol import AngleQuadrature, build_symbol_field, density_field

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _open_out(path):
    return open(path, "w", newline="") if path else None


def _load(args):
    try:
        return load_config(args.config)
    except ConfigError as exc:
        for line in exc.errors:
            print(f"{args.config}: {line}", file=sys.stderr)
        return None
    except OSError as exc:
        print(f"cannot read {args.config}: {exc}", file=sys.stderr)
        return None


def cmd_spectrum(args) -> int:
    cfg = _load(args)
    if cfg is None:
        return EXIT_CONFIG
    q = AngleQuadrature(cfg.quad_q)
    failures = 0
    for idx, point in enumerate(cfg.points):
        label = f"t={point.t:g}" + ("" if point.eps is None else f" eps={point.eps:g}") + f" N={point.grid_n}"
        try:
            m = build_metric(cfg, point)
            pair = assemble(build_symbol_field(m, PeriodicGrid(point.grid_n), q), descriptor=label)
            spec = smallest_eigenpairs(pair, cfg.eigen_k, cfg.tol)
        except (ArithmeticError, RuntimeError, ValueError) as exc:
            failures += 1
            print(f"{label}: {type(exc).__name__}: {exc}", file=sys.stderr)
            continue
        if args.export_matrices:
            out = Path(args.export_matrices)
            out.mkdir(parents=True, exist_ok=True)
            write_coordinate(pair.K, out / f"K_{idx}.txt")
            write_coordinate(pair.M, out / f"M_{idx}.txt")
        print(f"{label}  iterations={spec.iterations}  max_residual={spec.max_residual:.3g}")
        for i, lam in enumerate(spec.eigenvalues):
            print(f"  lambda{i} = {lam:.12g}  ({lam / (4 * np.pi**2):.6f} x 4pi^2)")
        for c in spec.clusters:
            if len(c) > 1:
                print(f"  cluster {list(c)}")
    return EXIT_SOLVER if failures == len(cfg.points) else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg is None:
        return EXIT_CONFIG
    rows = run_sweep(cfg, jobs=args.jobs, path=args.output)
    if not (args.output or cfg.output):
        sys.stdout.write(sweep_csv_text(rows, cfg.eigen_k))
    for r in rows:
        if r.error:
            print(f"t={r.t:g}: {r.error}", file=sys.stderr)
    return EXIT_SOLVER if rows and all(r.error for r in rows) else EXIT_OK


def cmd_lengths(args) -> int:
    cfg = _load(args)
    if cfg is None:
        return EXIT_CONFIG
    try:
        report = run_lengths(cfg)
    except LengthRefusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    fh = _open_out(args.output)
    report.write_csv(fh or sys.stdout)
    if fh:
        fh.close()
    print(f"max deviation from flat lengths: {report.max_deviation:.3g}", file=sys.stderr)
    return EXIT_OK


def cmd_volume(args) -> int:
    cfg = _load(args)
    if cfg is None:
        return EXIT_CONFIG
    q = AngleQuadrature(cfg.quad_q)
    fh = _open_out(args.output)
    w = csv.writer(fh or sys.stdout, lineterminator="\n")
    w.writerow(["t", "eps", "grid_n", "quad_q", "min_density", "max_density", "volume"])
    for point in cfg.points:
        dens = density_field(build_metric(cfg, point), PeriodicGrid(point.grid_n), q)
        eps = "" if point.eps is None else f"{point.eps:.12g}"
        w.writerow([f"{point.t:.12g}", eps, point.grid_n, cfg.quad_q,
                    f"{dens.min():.12g}", f"{dens.max():.12g}", f"{dens.mean():.12g}"])
    if fh:
        fh.close()
    return EXIT_OK


def cmd_symbol_dump(args) -> int:
    cfg = _load(args)
    if cfg is None:
        return EXIT_CONFIG
    if not 0 <= args.point < len(cfg.points):
        print(f"--point must lie in [0, {len(cfg.points) - 1}]", file=sys.stderr)
        return EXIT_CONFIG
    point = cfg.points[args.point]
    field = build_symbol_field(build_metric(cfg, point), PeriodicGrid(point.grid_n), AngleQuadrature(cfg.quad_q))
    field.to_csv(args.output)
    return EXIT_OK


def cmd_curved_check(args) -> int:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    q = AngleQuadrature(args.quad_q)

    dh = np.linspace(0.0, 0.99, 34)
    psi = np.linspace(0.0, 2 * np.pi, 25)
    df = np.array([0.1, 1.0, 10.0])
    lhs, rhs, margin = lower_bound_grid(dh, psi, df, q)
    params = [f"dh={a:.4g};psi={b:.4g};df={c:.4g}" for a in dh for b in psi for c in df]
    write_bound_csv(out / "symbol_bound.csv", params, lhs.ravel(), rhs.ravel(), margin.ravel())
    quartic = quartic_angle_integral(q)
    print(f"symbol bound: min margin {margin.min():.3g}; quartic integral - pi/4 = {quartic - np.pi / 4:.3g}")

    bump = RadialBump()
    ss = (0.51, 0.6, 0.8, 1.0)
    rows = []
    for s in ss:
        for name, prof in (("none", None), ("bump", bump)):
            val = radial_test_rayleigh(s, beta_profile=prof, q=q)
            rows.append((f"s={s};perturbation={name}", val, 2 * s * s, 2 * s * s - val))
    write_bound_csv(out / "radial_rayleigh.csv", *zip(*rows))
    worst = min(r[3] for r in rows)
    status = "holds" if worst >= -1e-6 else "FAILS"
    print(f"weak inequality R(exp(-s r)) <= n s^2: {status} (min slack {worst:.3g})")

    radii = np.linspace(5.0, 15.0, 11)
    probe = RadialBump(1.5, 3.0, 0.5, 0.5)
    fwd = ball_growth_entropy(2, radii, probe, "forward")
    bwd = ball_growth_entropy(2, radii, probe, "backward")
    write_growth_csv(out / "growth_forward.csv", fwd)
    write_growth_csv(out / "growth_backward.csv", bwd)
    print(f"entropy slopes: forward {fwd.slope:.5f}, backward {bwd.slope:.5f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bfspectrum", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", help="print the lowest eigenvalues for each config point")
    s.add_argument("config")
    s.add_argument("--export-matrices", metavar="DIR", help="write K and M in coordinate format")
    s.set_defaults(func=cmd_spectrum)

    s = sub.add_parser("sweep", help="run the (t, eps) sweep and emit CSV")
    s.add_argument("config")
    s.add_argument("-o", "--output", help="CSV path (overrides the config's output key)")
    s.add_argument("-j", "--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("lengths", help="marked length table for an exact form")
    s.add_argument("config")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_lengths)

    s = sub.add_parser("volume", help="Holmes-Thompson density range and torus area")
    s.add_argument("config")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_volume)

    s = sub.add_parser("symbol-dump", help="write the symbol field x,y,s11,s12,s22")
    s.add_argument("config")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--point", type=int, default=0, help="index into the sweep points")
    s.set_defaults(func=cmd_symbol_dump)

    s = sub.add_parser("curved-check", help="hyperbolic symbol bound, radial quotients, ball growth")
    s.add_argument("--outdir", default="curved")
    s.add_argument("--quad-q", type=int, default=256)
    s.set_defaults(func=cmd_curved_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
