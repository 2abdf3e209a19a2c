"""Bilinear (Q1) Galerkin discretisation of the BF energy on the periodic grid.

K realises f -> int (grad f)^T Sigma (grad f) dx with Sigma the per-cell
symbol, M the L^2 pairing.  The Holmes-Thompson density of a Randers metric
over the flat torus is 1, so M is the flat mass matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .grid import PeriodicGrid
from .symbol import SymbolField

_GAUSS = 0.5 + np.array([-1.0, 1.0]) / (2.0 * np.sqrt(3.0))
# local node order: (0,0), (1,0), (1,1), (0,1)
_CORNERS = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])


def _reference_blocks():
    """Reference-cell integrals of products of Q1 shape functions and gradients.

    Returns (Axx, Axy, Ayy, B) with A.. the gradient blocks (independent of the
    cell size in 2-D) and B the mass block on the unit cell.
    """
    axx = np.zeros((4, 4))
    axy = np.zeros((4, 4))
    ayy = np.zeros((4, 4))
    mass = np.zeros((4, 4))
    for xi in _GAUSS:
        for eta in _GAUSS:
            px = np.where(_CORNERS[:, 0] == 1, xi, 1.0 - xi)
            py = np.where(_CORNERS[:, 1] == 1, eta, 1.0 - eta)
            sx = np.where(_CORNERS[:, 0] == 1, 1.0, -1.0)
            sy = np.where(_CORNERS[:, 1] == 1, 1.0, -1.0)
            phi = px * py
            dx = sx * py
            dy = px * sy
            axx += 0.25 * np.outer(dx, dx)
            axy += 0.25 * np.outer(dx, dy)
            ayy += 0.25 * np.outer(dy, dy)
            mass += 0.25 * np.outer(phi, phi)
    return axx, axy, ayy, mass


AXX, AXY, AYY, MASS = _reference_blocks()


@dataclass(frozen=True)
class OperatorPair:
    K: sp.csr_matrix
    M: sp.csr_matrix
    grid: PeriodicGrid
    descriptor: str = ""

    @property
    def dimension(self) -> int:
        return self.K.shape[0]


def cell_symbols(symbols: SymbolField) -> np.ndarray:
    """(ncell, 3) per-cell (s11, s12, s22): mean of the four corner nodes."""
    corners = symbols.grid.cell_corners()
    stacked = np.stack([symbols.s11, symbols.s12, symbols.s22], axis=-1)
    return stacked[corners].mean(axis=1)


def _scatter(grid: PeriodicGrid, local: np.ndarray) -> sp.csr_matrix:
    corners = grid.cell_corners()
    rows = np.repeat(corners, 4, axis=1).ravel()
    cols = np.tile(corners, (1, 4)).ravel()
    n = grid.size
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n))
    return mat.tocsr()


def assemble(
    symbols: SymbolField,
    grid: PeriodicGrid | None = None,
    lumped: bool = False,
    descriptor: str = "",
) -> OperatorPair:
    grid = grid or symbols.grid
    if symbols.grid.n != grid.n or symbols.s11.shape != (grid.size,):
        raise ValueError("symbol field and grid have different dimensions")

    sig = cell_symbols(symbols)
    s11, s12, s22 = sig[:, 0], sig[:, 1], sig[:, 2]
    bad = (s11 <= 0) | (s11 * s22 - s12 * s12 <= 0)
    if np.any(bad):
        cell = int(np.flatnonzero(bad)[0])
        raise ValueError(f"cell {cell} has a symbol that is not positive definite")

    cross = AXY + AXY.T
    k_local = (
        s11[:, None, None] * AXX
        + s12[:, None, None] * cross
        + s22[:, None, None] * AYY
    )
    h2 = grid.spacing**2
    m_local = np.broadcast_to(h2 * MASS, (grid.size, 4, 4))
    if lumped:
        m_local = np.broadcast_to(np.diag(h2 * MASS.sum(axis=1)), (grid.size, 4, 4))

    return OperatorPair(_scatter(grid, k_local), _scatter(grid, m_local), grid, descriptor)


def energy(pair: OperatorPair, f) -> float:
    f = np.asarray(f, dtype=float)
    if f.shape != (pair.dimension,):
        raise ValueError(f"vector of length {f.shape} does not match grid dimension {pair.dimension}")
    return float(f @ (pair.K @ f))


def mass_norm2(pair: OperatorPair, f) -> float:
    f = np.asarray(f, dtype=float)
    if f.shape != (pair.dimension,):
        raise ValueError(f"vector of length {f.shape} does not match grid dimension {pair.dimension}")
    return float(f @ (pair.M @ f))


def write_coordinate(matrix, path) -> None:
    """Write a sparse matrix as `row col value` lines, 0-based, row-major order."""
    coo = sp.csr_matrix(matrix).tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")


def read_coordinate(path, n: int) -> sp.csr_matrix:
    data = np.loadtxt(path, ndmin=2)
    if data.size == 0:
        return sp.csr_matrix((n, n))
    return sp.coo_matrix((data[:, 2], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n, n)).tocsr()
