"""Base metrics, one-form fields and Randers metrics F = F_bar + t*beta.

Points, vectors and covectors are plain arrays whose last axis has length 2;
every evaluator broadcasts over leading axes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

ADMISSIBILITY_MARGIN = 1e-9

FLAT_TORUS = "flat-torus"
HYPERBOLIC_DISK = "hyperbolic-disk"


class InadmissibleMetricError(ValueError):
    """Raised when t * sup|beta| reaches 1, i.e. F stops being strongly convex."""


class Covector(NamedTuple):
    a1: float
    a2: float


class Vector(NamedTuple):
    v1: float
    v2: float


@dataclass(frozen=True)
class BaseMetric:
    """Reversible Riemannian base metric, conformally flat in the chart.

    ``flat-torus`` is the unit-square torus R^2/Z^2; ``hyperbolic-disk`` is the
    Poincare disk with conformal factor 2 / (1 - |x|^2).
    """

    kind: str = FLAT_TORUS

    def __post_init__(self):
        if self.kind not in (FLAT_TORUS, HYPERBOLIC_DISK):
            raise ValueError(f"unknown base metric kind {self.kind!r}")

    def conformal_factor(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == FLAT_TORUS:
            return np.ones(x.shape[:-1])
        r2 = np.sum(x * x, axis=-1)
        if np.any(r2 >= 1.0):
            raise ValueError("point outside the Poincare disk")
        return 2.0 / (1.0 - r2)

    def norm(self, x, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.conformal_factor(x) * np.hypot(v[..., 0], v[..., 1])

    def dual_inner(self, x, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lam = self.conformal_factor(x)
        return np.sum(a * b, axis=-1) / lam**2

    def dual_norm(self, x, a) -> np.ndarray:
        return np.sqrt(self.dual_inner(x, a, a))


@dataclass(frozen=True)
class OneFormField:
    """A 1-form x -> beta_x on the base.

    ``b_max`` is the supremum over the domain of the base-dual norm of beta.
    ``breakpoints`` lists, per coordinate, the positions mod 1 where the
    components lose smoothness; line integrals split there.
    ``curl`` returns d(beta) as the scalar d_x beta_2 - d_y beta_1 and defaults
    to central differences when absent.
    """

    evaluator: Callable[[np.ndarray], np.ndarray]
    b_max: float
    exact: bool = False
    closed: bool = False
    potential: Optional[Callable[[np.ndarray], np.ndarray]] = None
    curl: Optional[Callable[[np.ndarray], np.ndarray]] = None
    breakpoints: tuple = ((), ())
    label: str = "form"

    def __post_init__(self):
        if self.exact and self.potential is None:
            raise ValueError("an exact form needs its potential")
        if not self.exact and self.potential is not None:
            raise ValueError("potential given for a form marked non-exact")
        if self.exact and not self.closed:
            object.__setattr__(self, "closed", True)
        if not np.isfinite(self.b_max) or self.b_max < 0:
            raise ValueError("b_max must be a finite non-negative number")

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)

    def d(self, x, step: float = 1e-6) -> np.ndarray:
        """Scalar exterior derivative d_x beta_2 - d_y beta_1."""
        x = np.asarray(x, dtype=float)
        if self.curl is not None:
            return np.asarray(self.curl(x), dtype=float)
        ex = np.array([step, 0.0])
        ey = np.array([0.0, step])
        db2_dx = (self(x + ex)[..., 1] - self(x - ex)[..., 1]) / (2 * step)
        db1_dy = (self(x + ey)[..., 0] - self(x - ey)[..., 0]) / (2 * step)
        return db2_dx - db1_dy


@dataclass(frozen=True)
class RandersMetric:
    base: BaseMetric
    form: OneFormField
    t: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.t) and self.t >= 0.0):
            raise InadmissibleMetricError(f"scale t={self.t} must be finite and >= 0")
        tb = self.t * self.form.b_max
        if tb >= 1.0 - ADMISSIBILITY_MARGIN:
            raise InadmissibleMetricError(
                f"t*b_max = {tb:.12g} must stay below 1 - {ADMISSIBILITY_MARGIN:g}"
            )

    @property
    def strength(self) -> float:
        """Supremum of the base-dual norm of t*beta."""
        return self.t * self.form.b_max

    def beta(self, x) -> np.ndarray:
        """The scaled form t*beta at x, coordinate components."""
        return self.t * self.form(x)


def randers(form: OneFormField, t: float, base: BaseMetric | None = None) -> RandersMetric:
    return RandersMetric(base=base or BaseMetric(), form=form, t=float(t))


def eval_F(m: RandersMetric, x, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return m.base.norm(x, v) + np.sum(m.beta(x) * v, axis=-1)


def dual_norm(m: RandersMetric, x, ell) -> np.ndarray:
    """Closed-form dual norm F*(x, ell) = sup{ell(v) : F(x, v) = 1}.

    The dual unit ball of a Randers norm is the base-dual unit ball translated
    by t*beta, which gives the root of |ell/r - t*beta|_{g*} = 1.
    """
    ell = np.asarray(ell, dtype=float)
    tb = m.beta(x)
    b2 = m.base.dual_inner(x, tb, tb)
    bl = m.base.dual_inner(x, tb, ell)
    ll = m.base.dual_inner(x, ell, ell)
    one_minus = 1.0 - b2
    return (np.sqrt(one_minus * ll + bl**2) - bl) / one_minus


# -- smoothed tent ---------------------------------------------------------


@dataclass(frozen=True)
class SmoothedTent:
    """C^2 periodic smoothing of the tent f0(u) = min(u, 1 - u) on R/Z.

    Inside the windows |u| < eps and |u - 1/2| < eps the slope follows the odd
    ramp sin(pi w / 2), w = offset / eps; outside it is exactly +-1.  The
    function is pinned by f(eps) = eps, so f0 is missed by eps(1 - 2/pi) at
    u = 0 and u = 1/2.
    """

    eps: float
    profile: str = "sine"

    def __post_init__(self):
        if not 0.0 < self.eps < 0.25:
            raise ValueError(f"eps={self.eps} must lie in (0, 1/4)")
        if self.profile != "sine":
            raise ValueError(f"unknown ramp profile {self.profile!r}")

    @property
    def breakpoints(self) -> tuple:
        e = self.eps
        return (-e % 1.0, e, 0.5 - e, 0.5 + e)

    def __call__(self, u):
        return smoothed_tent(self, u)


def smoothed_tent(s: SmoothedTent, u):
    """Return (value, derivative) of f_eps at u (any real, taken mod 1)."""
    eps = s.eps
    u = np.mod(np.asarray(u, dtype=float), 1.0)
    value = np.empty_like(u)
    deriv = np.empty_like(u)
    amp = 2.0 * eps / np.pi

    c0 = np.where(u > 0.5, u - 1.0, u)  # centred offset from 0
    c1 = u - 0.5  # offset from 1/2
    near0 = np.abs(c0) <= eps
    near1 = np.abs(c1) <= eps
    rising = ~near0 & ~near1 & (u < 0.5)
    falling = ~near0 & ~near1 & (u > 0.5)

    w0 = c0[near0] / eps
    value[near0] = eps - amp * np.cos(0.5 * np.pi * w0)
    deriv[near0] = np.sin(0.5 * np.pi * w0)

    w1 = c1[near1] / eps
    value[near1] = 0.5 - eps + amp * np.cos(0.5 * np.pi * w1)
    deriv[near1] = -np.sin(0.5 * np.pi * w1)

    value[rising] = u[rising]
    deriv[rising] = 1.0
    value[falling] = 1.0 - u[falling]
    deriv[falling] = -1.0
    return value, deriv


def smoothed_tent_second_derivative(s: SmoothedTent, u):
    eps = s.eps
    u = np.mod(np.asarray(u, dtype=float), 1.0)
    out = np.zeros_like(u)
    c0 = np.where(u > 0.5, u - 1.0, u)
    c1 = u - 0.5
    near0 = np.abs(c0) <= eps
    near1 = np.abs(c1) <= eps
    k = 0.5 * np.pi / eps
    out[near0] = k * np.cos(k * c0[near0])
    out[near1] = -k * np.cos(k * c1[near1])
    return out


# -- form constructors -----------------------------------------------------


def make_h_eps(eps: float, rho: float = 1.0) -> OneFormField:
    """beta_eps = d h_eps with h_eps(x, y) = cos(rho) f_eps(x) + sin(rho) f_eps(y)."""
    tent = SmoothedTent(eps)
    c, s = np.cos(rho), np.sin(rho)

    def evaluator(x):
        _, fx = smoothed_tent(tent, x[..., 0])
        _, fy = smoothed_tent(tent, x[..., 1])
        return np.stack([c * fx, s * fy], axis=-1)

    def potential(x):
        x = np.asarray(x, dtype=float)
        hx, _ = smoothed_tent(tent, x[..., 0])
        hy, _ = smoothed_tent(tent, x[..., 1])
        return c * hx + s * hy

    def curl(x):
        return np.zeros(np.shape(x)[:-1])

    bp = tent.breakpoints
    return OneFormField(
        evaluator=evaluator,
        b_max=1.0,
        exact=True,
        potential=potential,
        curl=curl,
        breakpoints=(bp, bp),
        label=f"h_eps(eps={eps:g},rho={rho:g})",
    )


def make_constant_form(a1: float, a2: float) -> OneFormField:
    """Constant covector field; closed, and exact only when zero."""
    a = np.array([a1, a2], dtype=float)
    zero = not np.any(a)

    def evaluator(x):
        return np.broadcast_to(a, np.shape(x)[:-1] + (2,)).copy()

    def curl(x):
        return np.zeros(np.shape(x)[:-1])

    potential = None
    if zero:
        def potential(x):
            return np.zeros(np.shape(x)[:-1])

    return OneFormField(
        evaluator=evaluator,
        b_max=float(np.hypot(a1, a2)),
        exact=zero,
        closed=True,
        potential=potential,
        curl=curl,
        label=f"constant({a1:g},{a2:g})",
    )


def make_closed_irrational_form(rho: float = 1.0) -> OneFormField:
    form = make_constant_form(np.cos(rho), np.sin(rho))
    return OneFormField(
        evaluator=form.evaluator,
        b_max=1.0,
        exact=False,
        closed=True,
        curl=form.curl,
        label=f"closed_irrational(rho={rho:g})",
    )


def zero_form() -> OneFormField:
    return make_constant_form(0.0, 0.0)


def in_core_region(x, eps: float) -> np.ndarray:
    """True on C_eps: both coordinates at distance >= eps from 0 and 1/2 mod 1."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    d0 = np.minimum(x, 1.0 - x)
    d1 = np.abs(x - 0.5)
    ok = (d0 >= eps) & (d1 >= eps)
    return ok[..., 0] & ok[..., 1]
