"""End-to-end acceptance gate, one test per criterion at the stated tolerances."""
import time

import numpy as np
import pytest

from acceptance_log import record
from oracles import descend_polygon, sampled_dual_norm

from bfspectrum.assembly import assemble
from bfspectrum.config import parse_config
from bfspectrum.curved import (
    HyperbolicSample,
    RadialBump,
    ball_growth_entropy,
    lower_bound_grid,
    quartic_angle_integral,
    radial_test_rayleigh,
    symbol_lower_bound_check,
)
from bfspectrum.eigensolve import rayleigh_quotient, smallest_eigenpairs
from bfspectrum.experiments import run_lengths
from bfspectrum.geodesics import (
    GeodesicState,
    HomotopyClass,
    class_length,
    curve_length,
    integrate_geodesic,
    line_fit_residual,
)
from bfspectrum.grid import PeriodicGrid
from bfspectrum.metric import (
    SmoothedTent,
    eval_F,
    dual_norm,
    make_closed_irrational_form,
    make_constant_form,
    make_h_eps,
    randers,
    smoothed_tent,
    zero_form,
)
from bfspectrum.symbol import (
    AngleQuadrature,
    build_symbol_field,
    density_field,
    fiber_average_of_form,
    symbol_at,
)

FOUR_PI2 = 4 * np.pi**2
TOL = 1e-8


def solve(form, t, n, q=256, k=5, tol=TOL):
    pair = assemble(build_symbol_field(randers(form, t), PeriodicGrid(n), AngleQuadrature(q)))
    return pair, smallest_eigenpairs(pair, k, tol)


@pytest.fixture(scope="module")
def flat_n64():
    start = time.perf_counter()
    _, spec = solve(zero_form(), 0.0, 64)
    return spec, time.perf_counter() - start


def test_c01_flat_baseline(flat_n64):
    spec, secs = flat_n64
    lam = spec.eigenvalues[1:5]
    spread = (lam.max() - lam.min()) / lam.min()
    err = abs(lam[0] / FOUR_PI2 - 1)
    ok = err < 0.01 and spread < 0.01 and (1, 2, 3, 4) in spec.clusters and secs < 10
    record(1, "flat baseline", ok,
           f"lambda1={lam[0]:.6f} (rel err {err:.2e}), fourfold spread {spread:.1e}, {secs:.2f}s")


def test_c02_constant_form_cross_check():
    a = 0.5
    s11 = (2 / a**2) * (1 / np.sqrt(1 - a**2) - 1)
    s22 = 2 / np.sqrt(1 - a**2) - s11
    _, spec = solve(make_constant_form(a, 0.0), 1.0, 64, k=2)
    target = FOUR_PI2 * s22
    err = abs(spec.eigenvalues[1] / target - 1)
    record(2, "constant-form cross-check", err < 0.01,
           f"lambda1={spec.eigenvalues[1]:.6f} vs 4pi^2*s22={target:.6f} (s22={s22:.6f}), rel err {err:.2e}")


def test_c03_strict_spectral_increase():
    start = time.perf_counter()
    ts = (0.0, 0.3, 0.6, 0.9)
    lams = np.array([solve(make_h_eps(0.05), t, 64)[1].eigenvalues[1:6] for t in ts])
    secs = time.perf_counter() - start
    nondecreasing = bool(np.all(np.diff(lams, axis=0) >= 0))
    gains = (lams[1:] - lams[0]) / lams[0]
    strict = bool(np.all(gains > 10 * TOL))
    table = "; ".join(f"t={t}: " + ",".join(f"{v:.4f}" for v in row) for t, row in zip(ts, lams))
    record(3, "strict spectral increase", nondecreasing and strict and secs < 120,
           f"min relative gain {gains.min():.3e} (> {10 * TOL:g}), {secs:.1f}s; {table}")


BLOWUP_PATH = ((0.9, 0.05, 64), (0.99, 0.02, 128), (0.999, 0.01, 256))


@pytest.fixture(scope="module")
def blowup_trend():
    rows = []
    for t, eps, n in BLOWUP_PATH:
        pair, spec = solve(make_h_eps(eps), t, n, q=2048, k=1)
        rows.append((t, eps, n, spec.eigenvalues[1], pair))
    return rows


def test_c04_blowup_trend(flat_n64, blowup_trend):
    flat = flat_n64[0].eigenvalues[1]
    lam = np.array([r[3] for r in blowup_trend])
    increasing = bool(np.all(np.diff(lam) > 0))
    table = "; ".join(f"(t={t}, eps={e}, N={n}) lambda1={v:.3f}" for t, e, n, v, _ in blowup_trend)
    record(4, "blow-up trend", increasing and lam[-1] > 3 * flat,
           f"increasing={increasing}, final/flat={lam[-1] / flat:.3f} (needs > 3); {table}")


def test_blowup_path_is_capped_by_core_aligned_test_function(blowup_trend):
    # k = sin(rho) f(x) - cos(rho) f(y) has dk orthogonal to grad h on the core
    # region, so its quotient bounds lambda1 along the whole path
    rho = 1.0
    for t, eps, n, lam1, pair in blowup_trend:
        x, y = pair.grid.nodes().T
        tent = SmoothedTent(eps)
        k = np.sin(rho) * smoothed_tent(tent, x)[0] - np.cos(rho) * smoothed_tent(tent, y)[0]
        ones = np.ones_like(k)
        k = k - (ones @ (pair.M @ k)) / (ones @ (pair.M @ ones))
        cap = rayleigh_quotient(pair, k)
        assert lam1 <= cap
        assert cap < 3 * FOUR_PI2


def test_c05_volume_invariance():
    rng = np.random.default_rng(20240611)
    worst = 0.0
    pairs = []
    for _ in range(5):
        t = rng.uniform(0, 0.999)
        eps = rng.uniform(0.01, 0.2)
        pairs.append((t, eps))
        dens = density_field(randers(make_h_eps(eps), t), PeriodicGrid(64), AngleQuadrature(256))
        worst = max(worst, float(np.max(np.abs(dens - 1))))
    desc = ", ".join(f"({t:.3f},{e:.3f})" for t, e in pairs)
    record(5, "volume invariance", worst < 1e-6, f"max |density-1| = {worst:.2e} over N=64 nodes for {desc}")


def test_c06_marked_length_spectrum():
    report = run_lengths(parse_config("form = h_eps\neps = 0.05\nt_list = 0.9\nlength_window = 3\n"))
    m = randers(make_h_eps(0.05), 0.9)
    shortfall = 0.0
    for p, q in ((1, 0), (0, 1), (1, 1), (2, 1), (1, -2), (3, 2)):
        for seed in range(3):
            _, _, poly = descend_polygon(m, p, q, iterations=300, seed=seed)
            shortfall = max(shortfall, np.hypot(p, q) - curve_length(m, poly))
    ok = report.max_deviation < 1e-6 and len(report.rows) == 48 and shortfall <= 1e-6
    record(6, "marked length spectrum", ok,
           f"max |l_F - sqrt(p^2+q^2)| = {report.max_deviation:.2e} over 48 classes; "
           f"descent found nothing shorter (worst shortfall {shortfall:.2e})")


def test_c07_time_change():
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(20):
        if i % 2:
            m = randers(make_h_eps(rng.uniform(0.02, 0.2), rng.uniform(0, 2 * np.pi)), rng.uniform(0, 0.99))
        else:
            m = randers(make_closed_irrational_form(rng.uniform(0, 2 * np.pi)), rng.uniform(0, 0.99))
        th = rng.uniform(0, 2 * np.pi)
        tr = integrate_geodesic(m, GeodesicState(tuple(rng.random(2)), (np.cos(th), np.sin(th))), 5.0)
        worst = max(worst, line_fit_residual(tr.positions))
    record(7, "time change", worst < 1e-6, f"max line-fit residual {worst:.2e} over 20 geodesics, T=5")


def test_c08_pointwise_bound():
    dh = np.linspace(0, 0.99, 50)
    psi = np.linspace(0, np.pi, 50)
    df = np.linspace(0.1, 10, 19)
    _, _, margin = lower_bound_grid(dh, psi, df, AngleQuadrature(256))
    quartic = quartic_angle_integral(AngleQuadrature(256))
    lhs, rhs, _ = symbol_lower_bound_check(HyperbolicSample(0.6, 1.0, np.pi / 2))
    ok = margin.min() >= -1e-10 and abs(quartic - np.pi / 4) < 1e-14 and lhs >= rhs
    record(8, "pointwise symbol bound", ok,
           f"min margin {margin.min():.3e} over 50x50x19; |quartic - pi/4| = {abs(quartic - np.pi / 4):.1e}")


def test_c09_weak_inequality():
    bump = RadialBump()
    worst = np.inf
    parts = []
    for s in (0.51, 0.6, 0.8, 1.0):
        for label, prof in (("h=0", None), ("bump", bump)):
            val = radial_test_rayleigh(s, n=2, beta_profile=prof)
            worst = min(worst, 2 * s * s + 1e-6 - val)
            parts.append(f"s={s} {label}: {val:.4f}")
    record(9, "weak inequality surrogate", worst >= 0, f"min slack {worst:.3e}; " + ", ".join(parts))


def test_c10_entropy():
    radii = np.linspace(5, 15, 11)
    flat = ball_growth_entropy(2, radii)
    h = RadialBump(1.5, 3.0, 0.5, 0.5)
    fwd = ball_growth_entropy(2, radii, h, "forward")
    bwd = ball_growth_entropy(2, radii, h, "backward")
    ok = (abs(flat.slope - 1) <= 0.05 and abs(fwd.slope - 1) <= 0.05 and abs(bwd.slope - 1) <= 0.05
          and abs(fwd.slope - bwd.slope) < 0.01)
    record(10, "entropy estimate", ok,
           f"slopes flat {flat.slope:.5f}, forward {fwd.slope:.5f}, backward {bwd.slope:.5f} "
           f"(|h|_inf = {h.sup_norm:g})")


def test_c11_property_suites():
    start = time.perf_counter()
    rng = np.random.default_rng(11)
    form = make_h_eps(0.05)
    grid = PeriodicGrid(32)
    q = AngleQuadrature(256)

    x = rng.random((500, 2))
    v = rng.normal(size=(500, 2))
    lam = rng.uniform(0.01, 100, size=500)
    m = randers(form, 0.95)
    homog = float(np.max(np.abs(eval_F(m, x, lam[:, None] * v) - lam * eval_F(m, x, v)) / (lam * np.hypot(*v.T))))

    dual = 0.0
    for _ in range(200):
        b = rng.uniform(0, 0.95)
        phi = rng.uniform(0, 2 * np.pi)
        mm = randers(make_constant_form(b * np.cos(phi), b * np.sin(phi)), 1.0)
        ell = rng.normal(size=2)
        dual = max(dual, abs(dual_norm(mm, (0, 0), ell) - sampled_dual_norm(mm, (0, 0), ell)))

    nodes = grid.nodes()
    fiber = max(abs(fiber_average_of_form(m, p, q)) for p in nodes[::7])

    ts = (0.0, 0.3, 0.6, 0.9)
    fields = [build_symbol_field(randers(form, t), grid, q).matrices() for t in ts]
    psd = min(float(np.linalg.eigvalsh(b - a).min()) for a, b in zip(fields, fields[1:]))
    sample = symbol_at(randers(form, 0.9), (0.25, 0.3), q).as_array() - symbol_at(randers(form, 0.3), (0.25, 0.3), q).as_array()
    strict = float(np.linalg.eigvalsh(sample).max())

    resid = 0.0
    gram = 0.0
    for t in ts:
        pair = assemble(build_symbol_field(randers(form, t), grid, q))
        spec = smallest_eigenpairs(pair, 5, TOL)
        V = spec.eigenvectors
        resid = max(resid, spec.max_residual)
        gram = max(gram, float(np.max(np.abs(V.T @ (pair.M @ V) - np.eye(V.shape[1])))))
    secs = time.perf_counter() - start
    ok = (homog < 1e-12 and dual < 1e-6 and fiber <= 1e-12 and psd >= -1e-13 and strict > 0
          and resid <= TOL and gram < 1e-8 and secs < 60)
    record(11, "property suites", ok,
           f"homogeneity {homog:.1e}, dual oracle {dual:.1e}, fiber avg {fiber:.1e}, "
           f"symbol ordering min eig {psd:.1e}, residual {resid:.1e}, M-gram {gram:.1e}, {secs:.1f}s")
