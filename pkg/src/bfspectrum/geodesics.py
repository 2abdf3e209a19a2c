"""Randers geodesics on the flat torus, curve lengths and the marked length spectrum.

For F = |v| + t*beta(v) the Euler-Lagrange equations reduce to

    d/ds (v/|v|) = t * d(beta) * (v_2, -v_1),

so on the direction angle phi of v we get phi' = -t*dbeta / (1 + t*beta(u_phi))
with position speed u_phi / (1 + t*beta(u_phi)), which keeps F(x, x') = 1.
Closed beta gives phi' = 0: the paths are base geodesics run at another speed.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .metric import FLAT_TORUS, RandersMetric, eval_F

DRIFT_LIMIT = 1e-6
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(12)


class GeodesicStepError(RuntimeError):
    pass


class OpenCurveError(ValueError):
    pass


@dataclass(frozen=True)
class GeodesicState:
    position: tuple
    velocity: tuple
    time: float = 0.0


@dataclass(frozen=True)
class GeodesicTrace:
    """Sampled F-unit-speed geodesic; positions are lifted to the universal cover."""

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray

    @property
    def end(self) -> np.ndarray:
        return self.positions[-1]

    def speed_drift(self, m: RandersMetric) -> float:
        return float(np.max(np.abs(eval_F(m, self.positions, self.velocities) - 1.0)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y", "vx", "vy"])
            for s, p, v in zip(self.times, self.positions, self.velocities):
                w.writerow([f"{s:.12g}", f"{p[0]:.12g}", f"{p[1]:.12g}", f"{v[0]:.12g}", f"{v[1]:.12g}"])


@dataclass(frozen=True)
class HomotopyClass:
    p: int
    q: int

    def __post_init__(self):
        if int(self.p) != self.p or int(self.q) != self.q:
            raise ValueError("winding numbers must be integers")
        if self.p == 0 and self.q == 0:
            raise ValueError("the trivial class (0, 0) has no closed geodesic")

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.p, self.q], dtype=float)


def _require_flat(m: RandersMetric):
    if m.base.kind != FLAT_TORUS:
        raise NotImplementedError("geodesics are implemented on the flat torus only")


def _rhs(m: RandersMetric, state: np.ndarray) -> np.ndarray:
    x, phi = state[:2], state[2]
    u = np.array([np.cos(phi), np.sin(phi)])
    denom = 1.0 + float(m.beta(x) @ u)
    dphi = -m.t * float(m.form.d(x)) / denom
    return np.array([u[0] / denom, u[1] / denom, dphi])


def _velocity(m: RandersMetric, state: np.ndarray) -> np.ndarray:
    x, phi = state[:2], state[2]
    u = np.array([np.cos(phi), np.sin(phi)])
    return u / (1.0 + float(m.beta(x) @ u))


def integrate_geodesic(m: RandersMetric, s0: GeodesicState, T: float, dt: float = 1e-2) -> GeodesicTrace:
    """Classical RK4 on (position, direction angle) for F-arclength T."""
    _require_flat(m)
    if not 0 < dt <= 1e-2:
        raise ValueError("step dt must lie in (0, 1e-2]")
    v0 = np.asarray(s0.velocity, dtype=float)
    if not np.any(v0):
        raise ValueError("initial velocity must be non-zero")
    state = np.array([s0.position[0], s0.position[1], np.arctan2(v0[1], v0[0])], dtype=float)

    steps = int(np.ceil(T / dt - 1e-12))
    times = s0.time + np.minimum(np.arange(steps + 1) * dt, T)
    pos = np.empty((steps + 1, 2))
    vel = np.empty((steps + 1, 2))
    pos[0] = state[:2]
    vel[0] = _velocity(m, state)
    for n in range(steps):
        h = times[n + 1] - times[n]
        k1 = _rhs(m, state)
        k2 = _rhs(m, state + 0.5 * h * k1)
        k3 = _rhs(m, state + 0.5 * h * k2)
        k4 = _rhs(m, state + h * k3)
        state = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        pos[n + 1] = state[:2]
        vel[n + 1] = _velocity(m, state)
        # F = 1 holds by construction of the velocity, so this mostly catches
        # non-finite states and a form that misbehaves between samples
        drift = abs(float(eval_F(m, pos[n + 1], vel[n + 1])) - 1.0)
        if not drift <= DRIFT_LIMIT:
            raise GeodesicStepError(f"unit-speed drift {drift:.3g} at step {n + 1}; reduce dt")
    return GeodesicTrace(times, pos, vel)


def unwrap(points) -> np.ndarray:
    """Lift torus points to the cover by nearest-image continuation."""
    pts = np.asarray(points, dtype=float)
    jumps = np.diff(pts, axis=0)
    jumps -= np.round(jumps)
    return np.vstack([pts[:1], pts[0] + np.cumsum(jumps, axis=0)])


def line_fit_residual(points) -> float:
    """Largest distance from the total-least-squares line through the points."""
    pts = np.asarray(points, dtype=float)
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    normal = vt[-1]
    return float(np.max(np.abs(centred @ normal)))


def _split_params(a, b, breakpoints) -> np.ndarray:
    """Parameters in (0, 1) where segment a->b crosses a coordinate breakpoint mod 1."""
    cuts = [0.0, 1.0]
    for axis in (0, 1):
        lo, hi = sorted((a[axis], b[axis]))
        span = b[axis] - a[axis]
        if span == 0:
            continue
        for bp in breakpoints[axis]:
            k0 = np.ceil(lo - bp)
            k1 = np.floor(hi - bp)
            for k in np.arange(k0, k1 + 1):
                s = (bp + k - a[axis]) / span
                if 0.0 < s < 1.0:
                    cuts.append(float(s))
    return np.unique(cuts)


def curve_length(m: RandersMetric, curve, check_closed: bool = True) -> float:
    """F-length of a polygon given by lifted vertices.

    The last vertex must equal the first modulo Z^2.  Each edge is integrated
    with Gauss-Legendre after splitting where the form loses smoothness, so an
    exact form contributes zero to machine precision.
    """
    _require_flat(m)
    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("curve must be an (M, 2) array of vertices")
    if check_closed:
        gap = pts[-1] - pts[0]
        if np.max(np.abs(gap - np.round(gap))) > 1e-9:
            raise OpenCurveError("curve endpoint does not match its start modulo Z^2")

    base = 0.0
    form_part = 0.0
    bps = m.form.breakpoints
    for a, b in zip(pts[:-1], pts[1:]):
        d = b - a
        base += float(np.hypot(d[0], d[1]))
        if m.t == 0.0:
            continue
        cuts = _split_params(a, b, bps)
        lo, hi = cuts[:-1], cuts[1:]
        half = 0.5 * (hi - lo)
        s = (0.5 * (hi + lo))[:, None] + half[:, None] * _GL_NODES[None, :]
        x = a + s.reshape(-1, 1) * d
        vals = (m.beta(x) @ d).reshape(s.shape)
        form_part += float(np.sum(half[:, None] * _GL_WEIGHTS[None, :] * vals))
    return base + form_part


def straight_loop(c: HomotopyClass, start=(0.0, 0.0), samples: int = 2) -> np.ndarray:
    s = np.linspace(0.0, 1.0, samples)[:, None]
    return np.asarray(start, dtype=float) + s * c.vector


def class_length(m: RandersMetric, c: HomotopyClass, start=(0.123, 0.456)) -> float:
    """F-length of the closed F-geodesic in class (p, q) for a closed form.

    With closed beta the geodesics are straight, so the straight loop is the
    closed geodesic; with exact beta this equals the flat length sqrt(p^2+q^2).
    Only the forward orientation of the loop is measured.
    """
    if not m.form.closed:
        raise ValueError("class lengths via straight loops need a closed form")
    return curve_length(m, straight_loop(c, start))
