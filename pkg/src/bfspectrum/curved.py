"""Pointwise and radial checks for Randers perturbations of hyperbolic metrics.

Everything here works in geodesic polar coordinates (rho, phi) around a base
point O of the hyperbolic plane, where the area element is sinh(rho) drho dphi
and |d rho| = 1.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .symbol import AngleQuadrature, _symbol_entries

TAIL_FRACTION = 1e-8


@dataclass(frozen=True)
class HyperbolicSample:
    dh: float
    df: float
    psi: float

    def __post_init__(self):
        if not 0.0 <= self.dh < 1.0:
            raise ValueError("need 0 <= |dh| < 1")
        if not self.df > 0:
            raise ValueError("need |df| > 0")


@dataclass(frozen=True)
class EntropyEstimate:
    radii: np.ndarray
    log_volumes: np.ndarray
    slope: float
    residual: float

    def rows(self):
        return list(zip(self.radii, self.log_volumes))


def _lower_bound_terms(dh, df, psi, q: AngleQuadrature, n: int = 2):
    dh, df, psi = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (dh, df, psi)))
    th = q.angles
    w = q.weights
    dfv = df[..., None] * np.cos(th - psi[..., None])
    dhv = dh[..., None] * np.cos(th)
    lhs = (n / (2.0 * np.pi)) * np.sum(w * dfv**2 / (1.0 - dhv**2), axis=-1)
    rhs = df**2 * (1.0 + n * dh**2 / 8.0)
    return lhs, rhs, lhs - rhs


def symbol_lower_bound_check(s: HyperbolicSample, q: AngleQuadrature | None = None):
    """Return (lhs, rhs, margin) for |df|_sigma^2 >= |df|^2 (1 + n |dh|^2 / 8), n = 2.

    ``psi`` is the angle between the gradients of f and h; theta is measured
    from the gradient of h.
    """
    q = q or AngleQuadrature()
    lhs, rhs, margin = _lower_bound_terms(s.dh, s.df, s.psi, q)
    return float(lhs), float(rhs), float(margin)


def lower_bound_grid(dh_values, psi_values, df_values, q: AngleQuadrature | None = None):
    """Vectorised check over the tensor grid; arrays shaped (len dh, len psi, len df)."""
    q = q or AngleQuadrature()
    dh, psi, df = np.meshgrid(dh_values, psi_values, df_values, indexing="ij")
    return _lower_bound_terms(dh, df, psi, q)


def quartic_angle_integral(q: AngleQuadrature | None = None, integrand: Optional[Callable] = None) -> float:
    q = q or AngleQuadrature()
    if q.q < 8:
        raise ValueError("quartic angle integral needs Q >= 8")
    th = q.angles
    vals = (np.cos(th) ** 2 * np.sin(th) ** 2) if integrand is None else integrand(th)
    return float(q.weights @ vals)


# -- radial potentials -------------------------------------------------------


@dataclass(frozen=True)
class RadialBump:
    """Radial potential h(rho) with h' = amplitude on [inner, outer].

    The slope ramps in and out with sin^2 profiles of width ``ramp``, so h is
    C^2 in rho, constant near O and constant beyond outer + ramp.  Its total
    rise is amplitude * (outer - inner + ramp).
    """

    inner: float = 2.0
    outer: float = 5.5
    amplitude: float = 0.5
    ramp: float = 0.5

    def __post_init__(self):
        if not abs(self.amplitude) < 1:
            raise ValueError("|h'| must stay below 1")
        if not (self.ramp > 0 and self.inner - self.ramp >= 0 and self.outer >= self.inner):
            raise ValueError("need 0 <= inner - ramp <= inner <= outer")

    @property
    def sup_norm(self) -> float:
        return abs(self.amplitude) * (self.outer - self.inner + self.ramp)

    @property
    def support(self) -> tuple:
        return (self.inner - self.ramp, self.outer + self.ramp)

    def slope(self, rho):
        rho = np.asarray(rho, dtype=float)
        a, w = self.amplitude, self.ramp
        up = (rho - self.inner + w) / w
        down = (rho - self.outer) / w
        out = np.zeros_like(rho)
        m_up = (up > 0) & (up < 1)
        m_flat = (rho >= self.inner) & (rho <= self.outer)
        m_down = (down > 0) & (down < 1)
        out[m_up] = a * np.sin(0.5 * np.pi * up[m_up]) ** 2
        out[m_flat] = a
        out[m_down] = a * np.cos(0.5 * np.pi * down[m_down]) ** 2
        return out

    def __call__(self, rho, phi=None):
        rho = np.asarray(rho, dtype=float)
        a, w = self.amplitude, self.ramp
        r0 = self.inner - w
        u = np.clip(rho - r0, 0.0, w)
        h = a * (0.5 * u - w / (2 * np.pi) * np.sin(np.pi * u / w))
        h = h + a * np.clip(rho - self.inner, 0.0, self.outer - self.inner)
        v = np.clip(rho - self.outer, 0.0, w)
        h = h + a * (0.5 * v + w / (2 * np.pi) * np.sin(np.pi * v / w))
        return h


def _parallel_symbol_factor(b, q: AngleQuadrature) -> np.ndarray:
    """sigma(d rho, d rho) when the form is b * d rho, from the symbol quadrature."""
    b = np.atleast_1d(np.asarray(b, dtype=float))
    bhat = np.column_stack([b, np.zeros_like(b)])
    s11, _, _ = _symbol_entries(bhat, q)
    return s11


def _weight(rho, s, n):
    """e^{-2 s rho} sinh^{n-1}(rho), overflow-free."""
    rho = np.asarray(rho, dtype=float)
    return 2.0 ** (1 - n) * np.exp((n - 1 - 2 * s) * rho) * (-np.expm1(-2 * rho)) ** (n - 1)


def _tail_fraction(R, s, n):
    """Upper bound on the share of the weight integral beyond R."""
    total = integrate.quad(lambda r: _weight(r, s, n), 0, np.inf, limit=400)[0]
    tail = 2.0 ** (1 - n) * np.exp((n - 1 - 2 * s) * R) / (2 * s - (n - 1))
    return tail / total


def radial_test_rayleigh(
    s: float,
    n: int = 2,
    R_max: float | None = None,
    beta_profile: RadialBump | None = None,
    distance: str = "base",
    q: AngleQuadrature | None = None,
) -> float:
    """BF Rayleigh quotient of f = exp(-s*r) on the hyperbolic plane.

    ``distance="base"`` takes r = rho, the hyperbolic distance to O;
    ``distance="forward"`` takes the Randers forward distance
    rho + h(rho) - h(0), which is exact for F = g + dh.
    """
    if not 2 * s > n - 1:
        raise ValueError(f"exp(-s rho) is not in L^2 unless 2s > n - 1 (s={s}, n={n})")
    if distance not in ("base", "forward"):
        raise ValueError("distance must be 'base' or 'forward'")
    if beta_profile is not None and n != 2:
        raise NotImplementedError("perturbed radial quotients are computed for n = 2")
    q = q or AngleQuadrature()

    far = 0.0 if beta_profile is None else beta_profile.support[1]
    if R_max is None:
        R_max = far + (np.log(1.0 / TAIL_FRACTION) + 5.0) / (2 * s - (n - 1))
    if R_max <= far or _tail_fraction(R_max - far, s, n) >= TAIL_FRACTION:
        raise ValueError(f"R_max={R_max} leaves more than {TAIL_FRACTION:g} of the mass in the tail")

    if beta_profile is None:
        # |d rho| = 1 and the symbol is the base dual metric
        def shift(r):
            return 0.0

        def gain(r):
            return 1.0

        pts = []
    else:
        h0 = float(beta_profile(0.0))

        def shift(r):
            return 0.0 if distance == "base" else float(beta_profile(r)) - h0

        def gain(r):
            b = float(beta_profile.slope(r))
            chain = 1.0 if distance == "base" else (1.0 + b) ** 2
            return chain * float(_parallel_symbol_factor(abs(b), q)[0])

        lo, hi = beta_profile.support
        pts = [p for p in (lo, beta_profile.inner, beta_profile.outer, hi) if 0 < p < R_max]

    def w(r):
        return float(_weight(r, s, n)) * np.exp(-2 * s * shift(r))

    den = integrate.quad(w, 0, R_max, points=pts, limit=400, epsabs=0, epsrel=1e-13)[0]
    num = integrate.quad(lambda r: w(r) * gain(r), 0, R_max, points=pts, limit=400, epsabs=0, epsrel=1e-13)[0]
    return float(s * s * num / den)


# -- ball growth -------------------------------------------------------------


def _as_polar_potential(h):
    if h is None:
        return None, True
    if isinstance(h, RadialBump):
        return (lambda rho, phi: h(rho)), True
    return h, False


def _reach(R, h, phi, sign, h0):
    """Largest rho with rho + sign*(h(rho, phi) - h0) <= R along a ray."""
    def g(r):
        return r + sign * (float(h(r, phi)) - h0) - R

    hi = R + 1.0
    while g(hi) < 0:
        hi *= 2.0
    lo = 0.0
    if g(lo) > 0:
        return 0.0
    return optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-15)


def ball_log_volume(R: float, perturbation=None, direction: str = "forward", n_angles: int = 64) -> float:
    """log of the hyperbolic area of the forward or backward ball of radius R.

    Uses d_F(O, y) = d(O, y) + h(y) - h(O) for F = g + dh; the backward
    distance flips the sign of the potential difference.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    h, radial = _as_polar_potential(perturbation)
    if h is None:
        return float(np.log(2 * np.pi) + np.log(np.cosh(R) - 1.0))
    sign = 1.0 if direction == "forward" else -1.0
    h0 = float(h(0.0, 0.0))
    phis = [0.0] if radial else 2 * np.pi * np.arange(n_angles) / n_angles
    reach = np.array([_reach(R, h, phi, sign, h0) for phi in phis])
    area = 2 * np.pi * np.mean(np.cosh(reach) - 1.0)
    return float(np.log(area))


def ball_growth_entropy(
    n: int,
    radii,
    perturbation=None,
    direction: str = "forward",
    n_angles: int = 64,
) -> EntropyEstimate:
    """Least-squares slope of log vol B(O, R) against R."""
    if n != 2:
        raise NotImplementedError("ball growth is computed on the hyperbolic plane (n = 2)")
    radii = np.asarray(radii, dtype=float)
    if radii.size < 3:
        raise ValueError("need at least 3 radii to fit a growth rate")
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be strictly increasing")
    if radii[0] < 2 or radii[-1] > 15:
        raise ValueError("radii must lie in [2, 15]")
    logs = np.array([ball_log_volume(R, perturbation, direction, n_angles) for R in radii])
    coef, res, *_ = np.polyfit(radii, logs, 1, full=True)
    rms = float(np.sqrt(res[0] / radii.size)) if res.size else 0.0
    return EntropyEstimate(radii, logs, float(coef[0]), rms)


def write_bound_csv(path, params, lhs, rhs, margin) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "lhs", "rhs", "margin"])
        for p, a, b, c in zip(params, lhs, rhs, margin):
            w.writerow([p, f"{a:.12g}", f"{b:.12g}", f"{c:.12g}"])


def write_growth_csv(path, estimate: EntropyEstimate) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["R", "log_volume"])
        for r, lv in estimate.rows():
            w.writerow([f"{r:.12g}", f"{lv:.12g}"])
