from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    """N x N nodes on the unit-square torus, node (i, j) at (i/N, j/N).

    Nodes are numbered row-major: index = j*N + i, so x varies fastest.
    """

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise ValueError(f"grid needs N >= 8 nodes per side, got {self.n}")

    @property
    def spacing(self) -> float:
        return 1.0 / self.n

    @property
    def size(self) -> int:
        return self.n * self.n

    def index(self, i, j):
        n = self.n
        return np.mod(j, n) * n + np.mod(i, n)

    def nodes(self) -> np.ndarray:
        """(N^2, 2) array of node coordinates in index order."""
        u = np.arange(self.n) / self.n
        xx, yy = np.meshgrid(u, u, indexing="xy")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def cell_corners(self) -> np.ndarray:
        """(N^2, 4) node indices of each cell, counter-clockwise from lower left."""
        n = self.n
        j, i = np.divmod(np.arange(n * n), n)
        return np.column_stack([
            self.index(i, j),
            self.index(i + 1, j),
            self.index(i + 1, j + 1),
            self.index(i, j + 1),
        ])

    def sample(self, fn) -> np.ndarray:
        """Evaluate fn(x, y) at every node."""
        p = self.nodes()
        return np.asarray(fn(p[:, 0], p[:, 1]), dtype=float)
