"""Independent reference computations used only by the tests.

None of these reuse the package's closed forms: the dual norm is found by
maximising over the sampled unit circle, the energy by looping over cells
with explicit Gauss points, and minimal lengths by polygon descent.
"""
import numpy as np
from scipy import optimize

from bfspectrum.metric import eval_F


def sampled_dual_norm(m, x, ell, samples=4096):
    """max l(v) over {F(x, v) = 1}, by sampling then a bounded 1-D refinement."""
    x = np.asarray(x, dtype=float)
    ell = np.asarray(ell, dtype=float)

    def value(theta):
        v = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return (v @ ell) / eval_F(m, x, v)

    th = 2 * np.pi * np.arange(samples) / samples
    j = int(np.argmax(value(th)))
    h = 2 * np.pi / samples
    res = optimize.minimize_scalar(
        lambda a: -float(value(np.array(a))),
        bounds=(th[j] - 2 * h, th[j] + 2 * h),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return max(-res.fun, float(value(th[j])))


def dense_energy(grid, cell_sigma, f):
    """sum over cells of int grad(f)^T Sigma grad(f) with 2x2 Gauss points."""
    n = grid.n
    h = 1.0 / n
    g = 0.5 + np.array([-1, 1]) / (2 * np.sqrt(3))
    total = 0.0
    for j in range(n):
        for i in range(n):
            f00 = f[(j % n) * n + i % n]
            f10 = f[(j % n) * n + (i + 1) % n]
            f11 = f[((j + 1) % n) * n + (i + 1) % n]
            f01 = f[((j + 1) % n) * n + i % n]
            s11, s12, s22 = cell_sigma[j * n + i]
            sig = np.array([[s11, s12], [s12, s22]])
            for a in g:
                for b in g:
                    dfx = ((f10 - f00) * (1 - b) + (f11 - f01) * b) / h
                    dfy = ((f01 - f00) * (1 - a) + (f11 - f10) * a) / h
                    grad = np.array([dfx, dfy])
                    total += 0.25 * h * h * grad @ sig @ grad
    return total


def _polygon_length(m, pts, shift):
    nxt = np.vstack([pts[1:], pts[:1] + shift])
    d = nxt - pts
    mid = 0.5 * (pts + nxt)
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])) + np.sum(m.beta(mid) * d))


def _polygon_gradient(m, pts, shift, fd=1e-6):
    nxt = np.vstack([pts[1:], pts[:1] + shift])
    d = nxt - pts
    mid = 0.5 * (pts + nxt)
    unit = d / np.hypot(d[:, 0], d[:, 1])[:, None]
    grad = np.roll(unit, 1, axis=0) - unit

    b = m.beta(mid)
    jac = np.empty((len(mid), 2, 2))
    for k in range(2):
        e = np.zeros(2)
        e[k] = fd
        jac[:, :, k] = (m.beta(mid + e) - m.beta(mid - e)) / (2 * fd)
    # d/dx of beta(mid_i) . d_i, split between the two ends of segment i
    half = 0.5 * np.einsum("ikl,ik->il", jac, d)
    grad += np.roll(half, 1, axis=0) + half
    grad += np.roll(b, 1, axis=0) - b
    return grad


def descend_polygon(m, p, q, vertices=200, step=1e-3, iterations=10_000, amplitude=0.05, seed=0):
    """Gradient descent on the F-length of a closed polygon in class (p, q).

    Starts from the straight loop with a random smooth transverse wiggle and
    returns (initial_length, final_length, final_vertices) measured with the
    midpoint rule used during descent.
    """
    rng = np.random.default_rng(seed)
    shift = np.array([p, q], dtype=float)
    s = np.arange(vertices)[:, None] / vertices
    normal = np.array([-q, p], dtype=float) / np.hypot(p, q)
    modes = np.arange(1, 4)
    coef = rng.normal(size=modes.size) * amplitude
    wiggle = (np.sin(2 * np.pi * s * modes) @ coef)[:, None]
    pts = rng.random(2) + s * shift + wiggle * normal

    start = _polygon_length(m, pts, shift)
    length = start
    for _ in range(iterations):
        trial = pts - step * _polygon_gradient(m, pts, shift)
        new = _polygon_length(m, trial, shift)
        if new > length - 1e-14:
            break
        pts, length = trial, new
    return start, length, np.vstack([pts, pts[:1] + shift])
