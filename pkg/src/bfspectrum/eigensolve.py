"""Smallest generalised eigenpairs of K v = lambda M v.

Block subspace iteration preconditioned by a sparse LU factorisation of the
shifted pencil K + sigma*M, with a Rayleigh-Ritz projection every sweep.  The
start block comes from a fixed linear congruential stream so results are
reproducible run to run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import OperatorPair

CLUSTER_RTOL = 1e-6


class ConvergenceError(RuntimeError):
    def __init__(self, message, eigenvalues=None, residuals=None, iterations=0):
        super().__init__(message)
        self.eigenvalues = eigenvalues
        self.residuals = residuals
        self.iterations = iterations


class IndefiniteMassError(ValueError):
    pass


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    clusters: tuple = field(default=())

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals))

    def __len__(self):
        return len(self.eigenvalues)


def lcg_block(n: int, p: int, seed: int = 20240611) -> np.ndarray:
    """Deterministic (n, p) block in [-1, 1) from a 64-bit LCG (Knuth MMIX constants)."""
    a = np.uint64(6364136223846793005)
    c = np.uint64(1442695040888963407)
    count = n * p
    out = np.empty(count, dtype=np.uint64)
    state = np.uint64(seed)
    # jump-ahead in chunks to keep this vectorised
    chunk = 1024
    mults = np.empty(chunk, dtype=np.uint64)
    adds = np.empty(chunk, dtype=np.uint64)
    with np.errstate(over="ignore"):
        am, ad = np.uint64(1), np.uint64(0)
        for k in range(chunk):
            am, ad = am * a, ad * a + c
            mults[k], adds[k] = am, ad
        for start in range(0, count, chunk):
            stop = min(start + chunk, count)
            seg = mults[: stop - start] * state + adds[: stop - start]
            out[start:stop] = seg
            state = seg[-1]
    return ((out >> np.uint64(11)).astype(np.float64) / 2.0**53 * 2.0 - 1.0).reshape(n, p)


def _sign_normalise(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))
        if big.size and col[big[0]] < 0:
            out[:, j] = -col
    return out


def find_clusters(values, rtol: float = CLUSTER_RTOL) -> tuple:
    groups = []
    current = [0]
    for i in range(1, len(values)):
        scale = max(abs(values[i]), abs(values[current[0]]), 1e-300)
        if abs(values[i] - values[current[-1]]) <= rtol * scale:
            current.append(i)
        else:
            groups.append(tuple(current))
            current = [i]
    groups.append(tuple(current))
    return tuple(groups)


def _default_shift(K, M) -> float:
    scale = float(K.diagonal().sum() / M.diagonal().sum()) / K.shape[0]
    return scale if scale > 0 else 1.0


def relative_residuals(K, M, vecs, vals, sigma: float) -> np.ndarray:
    """||K v - lam M v|| / max(||K v||, sigma ||M v||) for each column.

    The sigma floor keeps the near-null constant mode from dividing by ~0;
    for every other mode ||K v|| dominates.
    """
    kv = K @ vecs
    mv = M @ vecs
    res = np.linalg.norm(kv - mv * vals, axis=0)
    denom = np.maximum(np.linalg.norm(kv, axis=0), sigma * np.linalg.norm(mv, axis=0))
    return res / denom


def smallest_eigenpairs(
    pair: OperatorPair,
    k: int,
    tol: float = 1e-8,
    max_iter: int = 500,
    block: int | None = None,
    shift: float | None = None,
    seed: int = 20240611,
) -> SpectrumResult:
    """Return the k+1 smallest eigenpairs (lambda_0 ~ 0 is the constant mode)."""
    K = sp.csr_matrix(pair.K)
    M = sp.csr_matrix(pair.M)
    n = K.shape[0]
    want = k + 1
    if k < 1 or want > n:
        raise ValueError(f"need 1 <= k and k + 1 <= {n}, got k={k}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    mdiag = M.diagonal()
    if np.any(mdiag <= 0):
        raise IndefiniteMassError("mass matrix has a non-positive diagonal entry")

    p = min(n, block or max(2 * want, want + 8))
    sigma = _default_shift(K, M) if shift is None else float(shift)
    try:
        lu = spla.splu((K + sigma * M).tocsc(), permc_spec="MMD_AT_PLUS_A")
    except RuntimeError as exc:
        raise IndefiniteMassError(f"shifted pencil is singular: {exc}") from exc

    X = lcg_block(n, p, seed)
    vals = np.zeros(p)
    res = np.full(want, np.inf)
    for it in range(1, max_iter + 1):
        Y = lu.solve(M @ X)
        Q, _ = np.linalg.qr(Y)
        A = Q.T @ (K @ Q)
        B = Q.T @ (M @ Q)
        A = 0.5 * (A + A.T)
        B = 0.5 * (B + B.T)
        try:
            vals, C = sla.eigh(A, B)
        except np.linalg.LinAlgError as exc:
            raise IndefiniteMassError(f"projected mass matrix is not positive definite: {exc}") from exc
        X = Q @ C
        res = relative_residuals(K, M, X[:, :want], vals[:want], sigma)
        if np.all(res <= tol):
            vecs = _sign_normalise(X[:, :want])
            lam = vals[:want].copy()
            return SpectrumResult(lam, vecs, res, it, find_clusters(lam))
    raise ConvergenceError(
        f"subspace iteration did not reach tol={tol:g} in {max_iter} sweeps "
        f"(worst residual {np.max(res):.3g})",
        eigenvalues=vals[:want].copy(),
        residuals=res,
        iterations=max_iter,
    )


def rayleigh_quotient(pair: OperatorPair, f) -> float:
    f = np.asarray(f, dtype=float)
    den = float(f @ (pair.M @ f))
    if not den > 0:
        raise ValueError("Rayleigh quotient of a vector with zero mass norm")
    return float(f @ (pair.K @ f)) / den


def max_rayleigh_on_span(pair: OperatorPair, basis) -> float:
    """Largest Rayleigh quotient over span(basis columns), via the projected pencil."""
    V = np.asarray(basis, dtype=float)
    A = V.T @ (pair.K @ V)
    B = V.T @ (pair.M @ V)
    return float(sla.eigh(0.5 * (A + A.T), 0.5 * (B + B.T), eigvals_only=True)[-1])
