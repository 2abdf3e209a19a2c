"""Sweep and length-spectrum drivers behind the command line."""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .assembly import assemble
from .config import SweepConfig, SweepPoint
from .eigensolve import smallest_eigenpairs
from .geodesics import HomotopyClass, class_length
from .grid import PeriodicGrid
from .metric import (
    RandersMetric,
    make_closed_irrational_form,
    make_constant_form,
    make_h_eps,
    randers,
)
from .symbol import AngleQuadrature, build_symbol_field, torus_volume


class LengthRefusal(ValueError):
    """Length invariance only holds for exact forms."""


@dataclass(frozen=True)
class SweepRow:
    t: float
    eps: float | None
    grid_n: int
    quad_q: int
    eigenvalues: tuple
    volume: float
    max_residual: float
    wall_ms: float
    error: str = ""


def build_metric(cfg: SweepConfig, point: SweepPoint) -> RandersMetric:
    if cfg.form == "h_eps":
        form = make_h_eps(point.eps, cfg.rho)
    elif cfg.form == "closed_irrational":
        form = make_closed_irrational_form(cfg.rho)
    else:
        form = make_constant_form(cfg.amplitude * np.cos(cfg.rho), cfg.amplitude * np.sin(cfg.rho))
    return randers(form, point.t)


def run_point(cfg: SweepConfig, point: SweepPoint) -> SweepRow:
    start = time.perf_counter()
    q = AngleQuadrature(cfg.quad_q)
    lams: tuple = ()
    volume = float("nan")
    resid = float("nan")
    error = ""
    try:
        m = build_metric(cfg, point)
        grid = PeriodicGrid(point.grid_n)
        volume = torus_volume(m, grid, q)
        pair = assemble(build_symbol_field(m, grid, q), descriptor=m.form.label)
        spec = smallest_eigenpairs(pair, cfg.eigen_k, cfg.tol)
        lams = tuple(float(v) for v in spec.eigenvalues[1:])
        resid = spec.max_residual
    except (ArithmeticError, RuntimeError, ValueError) as exc:
        error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    wall = 1e3 * (time.perf_counter() - start)
    return SweepRow(point.t, point.eps, point.grid_n, cfg.quad_q, lams, volume, resid, wall, error)


def _run_indexed(args):
    cfg, i = args
    return run_point(cfg, cfg.points[i])


def run_sweep(cfg: SweepConfig, jobs: int = 1, path=None) -> list[SweepRow]:
    """Solve every (t, eps, N) point in input order; optionally write the CSV."""
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_indexed, [(cfg, i) for i in range(len(cfg.points))]))
    else:
        rows = [run_point(cfg, p) for p in cfg.points]
    target = path or cfg.output
    if target:
        with open(target, "w", newline="") as fh:
            write_sweep_csv(fh, rows, cfg.eigen_k)
    return rows


def _g(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return f"{x:.12g}"


def sweep_header(k: int) -> list[str]:
    return (["t", "eps", "grid_n", "quad_q"]
            + [f"lambda{i}" for i in range(1, k + 1)]
            + ["volume", "max_residual", "wall_ms", "error"])


def write_sweep_csv(fh, rows, k: int) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(sweep_header(k))
    for r in rows:
        lam = [_g(v) for v in r.eigenvalues] + [""] * (k - len(r.eigenvalues))
        w.writerow([_g(r.t), _g(r.eps), r.grid_n, r.quad_q, *lam,
                    _g(r.volume), _g(r.max_residual), f"{r.wall_ms:.1f}", r.error])


def sweep_csv_text(rows, k: int) -> str:
    buf = io.StringIO()
    write_sweep_csv(buf, rows, k)
    return buf.getvalue()


@dataclass(frozen=True)
class LengthRow:
    t: float
    eps: float | None
    p: int
    q: int
    length: float
    flat_length: float

    @property
    def deviation(self) -> float:
        return abs(self.length - self.flat_length)


@dataclass(frozen=True)
class LengthReport:
    rows: tuple

    @property
    def max_deviation(self) -> float:
        return max((r.deviation for r in self.rows), default=0.0)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "eps", "p", "q", "length", "flat_length", "deviation"])
        for r in self.rows:
            w.writerow([_g(r.t), _g(r.eps), r.p, r.q, _g(r.length), _g(r.flat_length), _g(r.deviation)])


def run_lengths(cfg: SweepConfig) -> LengthReport:
    if not cfg.exact_form:
        raise LengthRefusal(
            f"form {cfg.form!r} is not exact: adding a closed but non-exact form changes the "
            "length of non-contractible loops by t times its period, so the marked length "
            "spectrum is only preserved for exact forms (use form = h_eps)"
        )
    W = cfg.length_window
    rows = []
    for point in cfg.points:
        m = build_metric(cfg, point)
        for p in range(-W, W + 1):
            for q in range(-W, W + 1):
                if p == 0 and q == 0:
                    continue
                length = class_length(m, HomotopyClass(p, q))
                rows.append(LengthRow(point.t, point.eps, p, q, length, float(np.hypot(p, q))))
    return LengthReport(tuple(rows))
