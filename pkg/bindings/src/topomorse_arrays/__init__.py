"""In-process float32 array interface to the topomorse core.

Training loops call these two functions once per step; everything stays
in memory (no file round trips) and the caller keeps ownership of its
buffers.  The boundary is float32 -- the core computes in float64 and
truncates results on return -- so parity with the file-based CLI is
exact: widening a float32 buffer to float64 produces the same values the
core sees after reading that buffer back from a ``.dmtf`` file.

The functions hold no shared mutable state, so concurrent calls on
distinct arrays are safe; no locking is added beyond the interpreter's
own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from topomorse.field_io import ScalarField
from topomorse.topo_loss import LossConfig, bce, dmt_loss, loss_gradient, morse_mask

__version__ = "0.1.0"

__all__ = ["ArrayView", "DtypeMismatchError", "compute_mask", "loss_and_grad"]


class DtypeMismatchError(TypeError):
    """A buffer reached the boundary with an element type other than float32."""


@dataclass(frozen=True)
class ArrayView:
    """A contiguous row-major float32 buffer plus a provenance flag.

    ``copied`` records whether construction had to copy the caller's
    buffer (set by :meth:`wrap` for non-contiguous or unaligned input).
    Arrays returned by this module always own a fresh buffer and carry
    ``copied=False``.
    """

    data: np.ndarray
    copied: bool = False

    def __post_init__(self):
        a = self.data
        if not isinstance(a, np.ndarray) or a.dtype != np.float32:
            got = getattr(a, "dtype", type(a).__name__)
            raise DtypeMismatchError(f"ArrayView holds float32, got {got}")
        if not (a.flags.c_contiguous and a.flags.aligned):
            raise ValueError("buffer must be contiguous and aligned; use ArrayView.wrap")

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @classmethod
    def wrap(cls, buffer) -> "ArrayView":
        """View ``buffer`` without copying when possible.

        A C-contiguous, aligned float32 array is wrapped zero-copy
        (``copied=False``); a float32 array laid out any other way is
        copied once (``copied=True``); any other dtype raises
        :class:`DtypeMismatchError`.
        """
        a = np.asarray(buffer)
        if a.dtype != np.float32:
            raise DtypeMismatchError(f"expected a float32 buffer, got {a.dtype}")
        if a.flags.c_contiguous and a.flags.aligned:
            return cls(a, copied=False)
        return cls(np.ascontiguousarray(a), copied=True)


def _as_view(x) -> ArrayView:
    return x if isinstance(x, ArrayView) else ArrayView.wrap(x)


def _field(view: ArrayView) -> ScalarField:
    # float32 -> float64 widening is exact
    return ScalarField(view.data.astype(np.float64))


def compute_mask(
    f, eps: float = 0.2, include_s1: bool = True, include_s2: bool = True
) -> ArrayView:
    """0/1 structural mask of ``f``, bit-identical to the CLI ``mask`` output.

    ``f`` may be an ArrayView or any float32 array; it must be 2D or 3D
    with finite values.  The mask is recomputed from scratch on every call.
    """
    view = _as_view(f)
    cfg = LossConfig(eps=eps, include_s1=include_s1, include_s2=include_s2)
    bits = morse_mask(_field(view), cfg).bits
    return ArrayView(bits.astype(np.float32))


def loss_and_grad(
    f, g, eps: float = 0.2, beta: float = 3.0
) -> tuple[float, float, float, ArrayView]:
    """``(total, l_bce, l_dmt, grad)`` of the structural loss of ``f`` vs ``g``.

    ``g`` must be binary (exact 0/1 values) and shaped like ``f``.  The
    mask is recomputed from ``f`` on each call and held frozen for the
    gradient; the gradient comes back truncated to float32.
    """
    fv, gv = _as_view(f), _as_view(g)
    if fv.shape != gv.shape:
        raise ValueError(f"shape mismatch: {fv.shape} vs {gv.shape}")
    gvals = gv.data.astype(np.float64)
    if not np.all((gvals == 0.0) | (gvals == 1.0)):
        raise ValueError("ground truth must be binary (exact 0/1 values)")
    field, truth = _field(fv), ScalarField(gvals)
    cfg = LossConfig(eps=eps, beta=beta)
    mask = morse_mask(field, cfg)
    l_bce = bce(field, truth, cfg.clamp)
    l_dmt = dmt_loss(field, truth, mask, cfg.clamp)
    grad = loss_gradient(field, truth, mask, cfg)
    total = l_bce + beta * l_dmt
    return total, l_bce, l_dmt, ArrayView(grad.values.astype(np.float32))
