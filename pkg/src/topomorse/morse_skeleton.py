"""Discrete gradient fields and persistence-pruned ridge skeletons.

Ridges of a scalar field are recovered from the superlevel filtration in
its vertex-edge form: maxima are critical vertices, the cols between
them are the edges that merge superlevel components.  Cancelling every
sub-threshold (vertex, edge) persistence pair rewires the gradient so
that only significant extrema stay critical; the 1-skeleton is then the
union, over surviving saddle edges, of the two V-paths that flow from
the saddle's endpoints up to critical maxima.

A V-pair (edge, vertex) points the gradient from the vertex into the
edge.  V-paths alternate edge, endpoint, matched edge, endpoint, ...;
since every vertex carries at most one match the continuation from a
saddle endpoint is deterministic, and a pair is cancellable exactly when
one endpoint chain (not both) terminates at the pair's birth vertex.
Cancellation reverses that unique chain, which preserves the matching
(each cell in at most one pair) and acyclicity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Literal

import numpy as np

from ._unionfind import grid_sweep, vertex_strides
from .cubical import Cell, CubicalComplex
from .field_io import BinaryMask, ScalarField
from .persistence import PersistencePair

StructureKind = Literal["skeleton1", "boundary2"]


class GradientField:
    """A partial matching of grid cells into V-pairs (edge, vertex).

    Immutable from the outside; cancellation returns a new instance.
    Cells in no pair are critical.  Edges are encoded internally as
    axis * n_vertices + tail so the matching is a single int array.
    """

    __slots__ = ("complex", "_vmatch", "n_cancelled", "n_skipped")

    def __init__(
        self,
        complex_: CubicalComplex,
        vmatch: np.ndarray | None = None,
        n_cancelled: int = 0,
        n_skipped: int = 0,
    ):
        self.complex = complex_
        n = int(np.prod(complex_.shape))
        if vmatch is None:
            vmatch = np.full(n, -1, dtype=np.int64)
        if vmatch.shape != (n,):
            raise ValueError("matching array does not fit the grid")
        vmatch.flags.writeable = False
        self._vmatch = vmatch
        self.n_cancelled = n_cancelled
        self.n_skipped = n_skipped

    @property
    def n_pairs(self) -> int:
        return int((self._vmatch >= 0).sum())

    def _vertex_cell(self, flat: int) -> Cell:
        coords = []
        for s in vertex_strides(self.complex.shape):
            coords.append(2 * (flat // s))
            flat %= s
        return tuple(coords)

    def _edge_cell(self, code: int) -> Cell:
        n = int(np.prod(self.complex.shape))
        axis, tail = divmod(code, n)
        cell = list(self._vertex_cell(tail))
        cell[axis] += 1
        return tuple(cell)

    def _vertex_flat(self, cell: Cell) -> int:
        return sum(
            (c // 2) * s for c, s in zip(cell, vertex_strides(self.complex.shape))
        )

    def _edge_code(self, cell: Cell) -> int:
        axis = next(i for i, c in enumerate(cell) if c & 1)
        tail = tuple(c - 1 if i == axis else c for i, c in enumerate(cell))
        return axis * int(np.prod(self.complex.shape)) + self._vertex_flat(tail)

    def pairs(self) -> Iterator[tuple[Cell, Cell]]:
        """All V-pairs as (edge cell, vertex cell)."""
        for v in np.flatnonzero(self._vmatch >= 0).tolist():
            yield self._edge_cell(int(self._vmatch[v])), self._vertex_cell(v)

    def vertex_partner(self, vertex: Cell) -> Cell | None:
        """The edge matched with `vertex`, or None if the vertex is critical."""
        if self.complex.dim(vertex) != 0:
            raise ValueError(f"{vertex} is not a vertex cell")
        code = int(self._vmatch[self._vertex_flat(vertex)])
        return None if code < 0 else self._edge_cell(code)

    def is_critical(self, cell: Cell) -> bool:
        p = self.complex.dim(cell)
        if p == 0:
            return int(self._vmatch[self._vertex_flat(cell)]) < 0
        if p == 1:
            code = self._edge_code(cell)
            n = int(np.prod(self.complex.shape))
            axis, tail = divmod(code, n)
            head = tail + vertex_strides(self.complex.shape)[axis]
            return not (self._vmatch[tail] == code or self._vmatch[head] == code)
        return True  # only vertex-edge pairs are ever formed

    def critical_counts(self) -> tuple[int, ...]:
        counts = list(self.complex.cell_counts())
        counts[0] -= self.n_pairs
        counts[1] -= self.n_pairs
        return tuple(counts)


@dataclass(frozen=True)
class MorseStructure:
    """One traced structure: a saddle and the cells flowing through it."""

    saddle: Cell
    persistence: float
    cells: frozenset[Cell]
    kind: StructureKind


def init_trivial_field(complex_: CubicalComplex) -> GradientField:
    """The trivial gradient: every cell critical."""
    return GradientField(complex_)


def _chase(vmatch: list[int], strides: tuple[int, ...], n: int, start: int) -> list[int]:
    """Follow matches from a vertex to the critical vertex ending its chain;
    returns the visited vertices (start first, critical terminal last)."""
    verts = [start]
    u = start
    limit = n + 1
    while True:
        code = vmatch[u]
        if code < 0:
            return verts
        axis, tail = divmod(code, n)
        u = tail + strides[axis] if u == tail else tail
        verts.append(u)
        if len(verts) > limit:
            raise RuntimeError("cyclic V-path: gradient invariant broken")


def _cancel_core(
    vmatch: np.ndarray,
    births: np.ndarray,
    edge_codes: np.ndarray,
    pers: np.ndarray,
    eps: float,
    shape: tuple[int, ...],
) -> tuple[int, int]:
    """Cancel all cancellable sub-eps pairs in increasing persistence.

    Ties are ordered by (persistence, death edge, birth vertex).  Returns
    (cancelled, skipped) counts; `vmatch` is updated in place.
    """
    # deferred import: numba is slow to load
    from ._kernels import cancel_pairs, pair_argsort

    n = int(np.prod(shape))
    sub = pers < eps
    b = np.ascontiguousarray(births[sub])
    c = np.ascontiguousarray(edge_codes[sub])
    p = np.ascontiguousarray(pers[sub])
    # np.lexsort((b, c, p)) in two stable radix stages: edge code and birth
    # pack into one word (codes < 4n fit beside 31-bit vertex ids), and
    # non-negative persistence orders by its raw float bits
    packed = (c.view(np.uint64) << np.uint64(31)) | b.view(np.uint64)
    order = pair_argsort(packed, np.arange(b.size, dtype=np.int64),
                         31 + int(len(shape) * n).bit_length())
    order = pair_argsort(p.view(np.uint64)[order], order, 64)
    cancelled, skipped = cancel_pairs(
        vmatch,
        np.ascontiguousarray(b[order]),
        np.ascontiguousarray(c[order]),
        np.asarray(vertex_strides(shape), dtype=np.int64),
        n,
    )
    if cancelled < 0:
        raise RuntimeError("cyclic V-path: gradient invariant broken")
    return cancelled, skipped


def _vertex_edge_pair_arrays(
    complex_: CubicalComplex, pairs: list[PersistencePair]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat (birth vertex, edge code, persistence) arrays of the finite
    dimension-0 pairs in `pairs`; other pairs are irrelevant here."""
    strides = vertex_strides(complex_.shape)
    n = int(np.prod(complex_.shape))
    births, codes, pers = [], [], []
    for pair in pairs:
        if pair.dim != 0 or pair.death is None:
            continue
        births.append(sum((c // 2) * s for c, s in zip(pair.birth, strides)))
        axis = next(i for i, c in enumerate(pair.death) if c & 1)
        tail = sum(
            ((c - (i == axis)) // 2) * s for i, (c, s) in enumerate(zip(pair.death, strides))
        )
        codes.append(axis * n + tail)
        pers.append(pair.persistence)
    return (
        np.asarray(births, dtype=np.int64),
        np.asarray(codes, dtype=np.int64),
        np.asarray(pers, dtype=np.float64),
    )


def cancel_below(
    field: GradientField, pairs: list[PersistencePair], eps: float
) -> GradientField:
    """Cancel every cancellable (vertex, edge) pair with persistence < eps.

    Pairs are processed in increasing persistence; a pair whose cells are
    no longer both critical, or that lacks a unique connecting V-path, is
    skipped and counted in the result's `n_skipped`.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    births, codes, pers = _vertex_edge_pair_arrays(field.complex, pairs)
    work = field._vmatch.copy()
    cancelled, skipped = _cancel_core(
        work, births, codes, pers, eps, field.complex.shape
    )
    return GradientField(
        field.complex,
        work,
        n_cancelled=field.n_cancelled + cancelled,
        n_skipped=field.n_skipped + skipped,
    )


def _trace_core(
    vmatch: list[int],
    shape: tuple[int, ...],
    edge_codes: list[int],
    pers: list[float],
    record_cells: bool,
) -> tuple[np.ndarray, list[tuple[int, float, list[list[int]]]]]:
    """Rasterise the V-paths of the given saddle edges; optionally keep
    the chase vertex lists so callers can rebuild full cell sets."""
    strides = vertex_strides(shape)
    n = int(np.prod(shape))
    bits = np.zeros(n, dtype=bool)
    traces = []
    for code, p in zip(edge_codes, pers):
        axis, tail = divmod(code, n)
        head = tail + strides[axis]
        path_t = _chase(vmatch, strides, n, tail)
        path_h = _chase(vmatch, strides, n, head)
        bits[path_t] = True
        bits[path_h] = True
        traces.append((code, p, [path_t, path_h] if record_cells else []))
    return bits, traces


def trace_skeleton(
    field: GradientField, pairs: list[PersistencePair], eps: float
) -> list[MorseStructure]:
    """One structure per critical saddle edge with persistence >= eps.

    From each endpoint of the saddle the V-paths are followed through the
    matching up to their critical maxima; the structure's cells are the
    saddle plus everything visited.  Expects `field` to come out of
    ``cancel_below`` with the same eps.
    """
    births, codes, pers = _vertex_edge_pair_arrays(field.complex, pairs)
    keep = pers >= eps
    vmatch = field._vmatch.tolist()
    strides = vertex_strides(field.complex.shape)
    n = int(np.prod(field.complex.shape))
    _, traces = _trace_core(
        vmatch, field.complex.shape, codes[keep].tolist(), pers[keep].tolist(), True
    )
    structures = []
    for code, p, chase_lists in traces:
        cells = {field._edge_cell(code)}
        for verts in chase_lists:
            for u in verts:
                cells.add(field._vertex_cell(u))
            for u in verts[:-1]:
                cells.add(field._edge_cell(vmatch[u]))
        structures.append(
            MorseStructure(
                saddle=field._edge_cell(code),
                persistence=p,
                cells=frozenset(cells),
                kind="skeleton1",
            )
        )
    return structures


def rasterize(structures: list[MorseStructure], shape: tuple[int, ...]) -> BinaryMask:
    """Mask every vertex belonging to (or bounding a cell of) a structure."""
    K = CubicalComplex(shape)
    bits = np.zeros(shape, dtype=bool)
    for s in structures:
        for cell in s.cells:
            for v in K.cell_vertices(cell):
                bits[tuple(c // 2 for c in v)] = True
    return BinaryMask(bits)


def _skeleton_bits(values: np.ndarray, eps: float) -> tuple[np.ndarray, int]:
    """Array fast path behind ``skeleton_mask``: sweep, cancel, trace."""
    from ._kernels import trace_bits

    shape = values.shape
    n = int(values.size)
    sweep = grid_sweep(values, "superlevel", want_pairs=True)
    codes = sweep.pair_axis * n + sweep.pair_tail
    vmatch = np.full(n, -1, dtype=np.int64)
    _cancel_core(vmatch, sweep.pair_birth, codes, sweep.pair_pers, eps, shape)
    keep = sweep.pair_pers >= eps
    bits, ok = trace_bits(
        vmatch,
        np.asarray(vertex_strides(shape), dtype=np.int64),
        n,
        np.ascontiguousarray(codes[keep]),
    )
    if not ok:
        raise RuntimeError("cyclic V-path: gradient invariant broken")
    return bits.reshape(shape), int(keep.sum())


def skeleton_mask(field: ScalarField, eps: float) -> BinaryMask:
    """Pixel mask of the persistence-pruned ridge skeleton of `field`.

    Pipeline: superlevel dimension-0 pairs, cancellation below eps, then
    V-path tracing from every surviving saddle with persistence >= eps.
    """
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    bits, _ = _skeleton_bits(field.values, eps)
    return BinaryMask(bits)
