"""Cubical complexes over pixel/voxel grids, in doubled coordinates.

A grid of shape (n0, ..., n_{d-1}) induces one cell per coordinate tuple
c with c[i] in [0, 2*(n_i - 1)]: even entries pin a vertex position, odd
entries span the interval between two grid lines.  The number of odd
entries is the cell dimension, so vertices, edges, squares and cubes all
share a single integer encoding and incidence is O(1) coordinate
arithmetic: the (p-1)-faces of a cell replace one odd entry by its two
even neighbours, cofaces do the reverse.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator, Literal

import numpy as np

from .field_io import ScalarField

Cell = tuple[int, ...]
Polarity = Literal["superlevel", "sublevel"]

_POLARITIES = ("superlevel", "sublevel")


@dataclass(frozen=True)
class CubicalComplex:
    """The full cubical complex of a 2D/3D grid."""

    shape: tuple[int, ...]

    def __post_init__(self):
        shape = tuple(int(n) for n in self.shape)
        if len(shape) not in (2, 3):
            raise ValueError(f"grid must be 2D or 3D, got {shape}")
        if any(n < 1 for n in shape):
            raise ValueError(f"grid extents must be >= 1, got {shape}")
        object.__setattr__(self, "shape", shape)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def doubled_shape(self) -> tuple[int, ...]:
        return tuple(2 * n - 1 for n in self.shape)

    def contains(self, cell: Cell) -> bool:
        return len(cell) == self.ndim and all(
            0 <= c <= m - 1 for c, m in zip(cell, self.doubled_shape)
        )

    def _check(self, cell: Cell) -> None:
        if not self.contains(cell):
            raise ValueError(f"cell {cell} outside doubled grid of {self.shape}")

    def dim(self, cell: Cell) -> int:
        self._check(cell)
        return sum(c & 1 for c in cell)

    def faces(self, cell: Cell) -> list[Cell]:
        """Codimension-1 faces, 2*dim of them."""
        self._check(cell)
        out = []
        for axis, c in enumerate(cell):
            if c & 1:
                out.append(cell[:axis] + (c - 1,) + cell[axis + 1 :])
                out.append(cell[:axis] + (c + 1,) + cell[axis + 1 :])
        return out

    def cofaces(self, cell: Cell) -> list[Cell]:
        """In-bounds codimension-1 cofaces."""
        self._check(cell)
        out = []
        for axis, c in enumerate(cell):
            if c & 1:
                continue
            if c - 1 >= 0:
                out.append(cell[:axis] + (c - 1,) + cell[axis + 1 :])
            if c + 1 <= self.doubled_shape[axis] - 1:
                out.append(cell[:axis] + (c + 1,) + cell[axis + 1 :])
        return out

    def cell_vertices(self, cell: Cell) -> list[Cell]:
        """The 2^dim vertex cells spanned by `cell`."""
        self._check(cell)
        spans = [(c,) if c % 2 == 0 else (c - 1, c + 1) for c in cell]
        return [tuple(v) for v in product(*spans)]

    def cells(self) -> Iterator[Cell]:
        """All cells in lexicographic (row-major doubled) order."""
        yield from product(*(range(m) for m in self.doubled_shape))

    def cell_counts(self) -> tuple[int, ...]:
        """Number of cells per dimension."""
        counts = [0] * (self.ndim + 1)
        n_edges_per_axis = [n - 1 for n in self.shape]
        for p in range(self.ndim + 1):
            for odd_axes in combinations(range(self.ndim), p):
                k = 1
                for axis in range(self.ndim):
                    k *= n_edges_per_axis[axis] if axis in odd_axes else self.shape[axis]
                counts[p] += k
        return tuple(counts)

    def n_cells(self) -> int:
        return int(np.prod(self.doubled_shape))

    def euler_characteristic(self) -> int:
        return sum((-1) ** p * k for p, k in enumerate(self.cell_counts()))


def rho(field: ScalarField, cell: Cell, polarity: Polarity) -> float:
    """Extend vertex values to a cell: min over its vertices under the
    superlevel polarity, max under sublevel.

    Either way every face of a cell enters the filtration no later than
    the cell itself.
    """
    if polarity not in _POLARITIES:
        raise ValueError(f"polarity must be one of {_POLARITIES}, got {polarity!r}")
    K = CubicalComplex(field.shape)
    corners = [field.values[tuple(c // 2 for c in v)] for v in K.cell_vertices(cell)]
    return float(min(corners) if polarity == "superlevel" else max(corners))


def _interleave(table: np.ndarray, axis: int, op) -> np.ndarray:
    """Expand one grid axis of length n to 2n-1, filling odd slots with
    op(left, right) of the neighbouring even slots."""
    shape = list(table.shape)
    n = shape[axis]
    shape[axis] = 2 * n - 1
    out = np.empty(shape, dtype=table.dtype)
    even = [slice(None)] * table.ndim
    even[axis] = slice(0, 2 * n - 1, 2)
    out[tuple(even)] = table
    if n > 1:
        odd = [slice(None)] * table.ndim
        odd[axis] = slice(1, 2 * n - 1, 2)
        lo = [slice(None)] * table.ndim
        lo[axis] = slice(0, n - 1)
        hi = [slice(None)] * table.ndim
        hi[axis] = slice(1, n)
        out[tuple(odd)] = op(table[tuple(lo)], table[tuple(hi)])
    return out


def rho_grid(field: ScalarField, polarity: Polarity) -> np.ndarray:
    """rho for every cell at once, as an array over the doubled grid."""
    if polarity not in _POLARITIES:
        raise ValueError(f"polarity must be one of {_POLARITIES}, got {polarity!r}")
    op = np.minimum if polarity == "superlevel" else np.maximum
    table = field.values
    for axis in range(table.ndim):
        table = _interleave(table, axis, op)
    return table


def occupancy_grid(bits: np.ndarray) -> np.ndarray:
    """Doubled-grid table that is True exactly for cells all of whose
    vertices are foreground (the closed subcomplex of a binary mask)."""
    table = np.asarray(bits, dtype=bool)
    for axis in range(table.ndim):
        table = _interleave(table, axis, np.logical_and)
    return table
