"""Symbol metric of the BF-Laplacian and Holmes-Thompson density by fiber quadrature.

For F = F_bar + t*beta over a Riemannian base, in a base-orthonormal frame,

    <l1, l2>_sigma = (n / vol S^1) * int_{S^1} l1(v) l2(v) / (1 - (t beta(v))^2) dtheta

with n = 2, vol S^1 = 2 pi.  The integrand is even under v -> -v, so the whole
circle is used instead of the half-fiber where beta(v) >= 0.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid import PeriodicGrid
from .metric import RandersMetric, dual_norm

DENOMINATOR_FLOOR = 1e-12
DIM = 2


class SingularWeightError(ArithmeticError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class AngleQuadrature:
    """Uniform trapezoidal rule on the circle with an even node count."""

    q: int = 256

    def __post_init__(self):
        if int(self.q) != self.q or self.q < 4 or self.q % 2:
            raise ValueError(f"angle quadrature needs an even Q >= 4, got {self.q}")

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.q) / self.q

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.q, 2.0 * np.pi / self.q)

    @property
    def directions(self) -> np.ndarray:
        th = self.angles
        return np.column_stack([np.cos(th), np.sin(th)])


class SymbolMatrix(NamedTuple):
    s11: float
    s12: float
    s22: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.as_array())

    def quadratic(self, ell) -> float:
        a1, a2 = ell
        return self.s11 * a1 * a1 + 2 * self.s12 * a1 * a2 + self.s22 * a2 * a2


def _orthonormal_beta(m: RandersMetric, x) -> np.ndarray:
    """t*beta expressed in the base-orthonormal frame at x."""
    lam = m.base.conformal_factor(x)
    return m.beta(x) / lam[..., None]


def _symbol_entries(bhat: np.ndarray, q: AngleQuadrature, points=None):
    """Vectorised symbol over a batch of orthonormal-frame forms (K, 2)."""
    dirs = q.directions
    w = q.weights
    bv = bhat @ dirs.T  # (K, Q)
    denom = 1.0 - bv * bv
    bad = denom < DENOMINATOR_FLOOR
    if np.any(bad):
        k = int(np.argwhere(bad.any(axis=1))[0, 0])
        where = None if points is None else tuple(np.asarray(points)[k])
        raise SingularWeightError(
            f"symbol quadrature weight 1/(1 - (t beta(v))^2) is singular at {where}",
            point=where,
        )
    kern = w / denom  # (K, Q)
    scale = DIM / (2.0 * np.pi)
    c, s = dirs[:, 0], dirs[:, 1]
    s11 = scale * kern @ (c * c)
    s12 = scale * kern @ (c * s)
    s22 = scale * kern @ (s * s)
    return s11, s12, s22


def symbol_at(m: RandersMetric, x, q: AngleQuadrature | None = None) -> SymbolMatrix:
    """Symbol matrix at a single point, in the base-orthonormal frame."""
    q = q or AngleQuadrature()
    x = np.asarray(x, dtype=float)
    bhat = _orthonormal_beta(m, x).reshape(1, 2)
    s11, s12, s22 = _symbol_entries(bhat, q, points=x.reshape(1, 2))
    return SymbolMatrix(float(s11[0]), float(s12[0]), float(s22[0]))


def symbol_at_half_fiber(m: RandersMetric, x, q: AngleQuadrature | None = None) -> SymbolMatrix:
    """Same symbol written over the half-fiber {beta(v) >= 0} with doubled weight.

    Kept as an independent check of the full-circle form: nodes with
    beta(v) = 0 up to rounding sit on the boundary and count with half weight.
    """
    q = q or AngleQuadrature()
    bhat = _orthonormal_beta(m, np.asarray(x, dtype=float))
    dirs = q.directions
    bv = dirs @ bhat
    edge = 1e-13 * max(float(np.hypot(*bhat)), 1.0)
    mask = np.where(bv > edge, 1.0, np.where(np.abs(bv) <= edge, 0.5, 0.0))
    kern = mask * q.weights / (1.0 - bv * bv)
    scale = 2 * DIM / (2.0 * np.pi)
    c, s = dirs[:, 0], dirs[:, 1]
    return SymbolMatrix(
        float(scale * kern @ (c * c)),
        float(scale * kern @ (c * s)),
        float(scale * kern @ (s * s)),
    )


def fiber_average_of_form(m: RandersMetric, x, q: AngleQuadrature | None = None) -> float:
    """Sum_j w_j t*beta_x(v_j) over the unit circle; vanishes by the flip symmetry."""
    q = q or AngleQuadrature()
    bhat = _orthonormal_beta(m, np.asarray(x, dtype=float))
    return float(q.weights @ (q.directions @ bhat))


def holmes_thompson_density(m: RandersMetric, x, q: AngleQuadrature | None = None):
    """Density of the Holmes-Thompson volume against the base Riemannian area.

    Area of the dual unit ball in polar form, (1/2) int F*(u_theta)^-2 dtheta,
    divided by pi.  Broadcasts over leading axes of ``x``.
    """
    q = q or AngleQuadrature()
    x = np.asarray(x, dtype=float)
    lam = m.base.conformal_factor(x)[..., None]
    # orthonormal-frame covector u_theta is lam*u_theta in coordinates
    u = q.directions
    ell = lam[..., None] * u  # (..., Q, 2)
    fstar = dual_norm(m, x[..., None, :], ell)
    return (0.5 * (fstar**-2.0) @ q.weights) / np.pi


@dataclass(frozen=True)
class SymbolField:
    grid: PeriodicGrid
    s11: np.ndarray
    s12: np.ndarray
    s22: np.ndarray

    def matrices(self) -> np.ndarray:
        """(N^2, 2, 2) stacked symbol matrices."""
        out = np.empty((self.grid.size, 2, 2))
        out[:, 0, 0] = self.s11
        out[:, 0, 1] = out[:, 1, 0] = self.s12
        out[:, 1, 1] = self.s22
        return out

    def eigenvalues(self) -> np.ndarray:
        """(N^2, 2) ascending eigenvalues per node, closed form for 2x2."""
        mean = 0.5 * (self.s11 + self.s22)
        rad = np.hypot(0.5 * (self.s11 - self.s22), self.s12)
        return np.column_stack([mean - rad, mean + rad])

    def at(self, index: int) -> SymbolMatrix:
        return SymbolMatrix(float(self.s11[index]), float(self.s12[index]), float(self.s22[index]))

    def to_csv(self, path) -> None:
        nodes = self.grid.nodes()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "s11", "s12", "s22"])
            for k in range(self.grid.size):
                w.writerow([
                    f"{nodes[k, 0]:.12g}", f"{nodes[k, 1]:.12g}",
                    f"{self.s11[k]:.12g}", f"{self.s12[k]:.12g}", f"{self.s22[k]:.12g}",
                ])


def build_symbol_field(
    m: RandersMetric,
    grid: PeriodicGrid,
    q: AngleQuadrature | None = None,
    chunk: int = 4096,
) -> SymbolField:
    q = q or AngleQuadrature()
    nodes = grid.nodes()
    bhat = _orthonormal_beta(m, nodes)
    out = [np.empty(grid.size) for _ in range(3)]
    for start in range(0, grid.size, chunk):
        sl = slice(start, start + chunk)
        for dst, src in zip(out, _symbol_entries(bhat[sl], q, points=nodes[sl])):
            dst[sl] = src
    return SymbolField(grid, *out)


def density_field(m: RandersMetric, grid: PeriodicGrid, q: AngleQuadrature | None = None, chunk: int = 2048) -> np.ndarray:
    """Holmes-Thompson density at every grid node."""
    q = q or AngleQuadrature()
    nodes = grid.nodes()
    out = np.empty(grid.size)
    for start in range(0, grid.size, chunk):
        out[start:start + chunk] = holmes_thompson_density(m, nodes[start:start + chunk], q)
    return out


def torus_volume(m: RandersMetric, grid: PeriodicGrid, q: AngleQuadrature | None = None) -> float:
    """Holmes-Thompson area of the unit torus by the periodic trapezoidal rule."""
    return float(np.mean(density_field(m, grid, q)))
