"""Scalar rasters, binary masks, and their on-disk formats.

Two file formats are supported:

* ``dmtf`` -- the canonical little-endian container with bit-exact round
  trips: magic ``DMTF``, version u8 = 1, ndim u8 in {2, 3}, reserved
  u16 = 0, one u32 extent per axis, then float32 values row-major (last
  axis fastest).  Masks reuse the container with values exactly 0.0/1.0.
* ``pgm`` -- binary (P5) 8-bit PGM, 2D only; pixel value v maps to v/255.

In-memory fields are float64 and immutable; files reject extents below 2
(one edge per axis is the minimum useful complex), while the in-memory
types also accept degenerate extent-1 axes so thin synthetic fields can
be built directly in tests and experiments.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

_MAGIC = b"DMTF"
_VERSION = 1


class FormatError(ValueError):
    """A file does not conform to the advertised format."""


@dataclass(frozen=True)
class ScalarField:
    """An ndim-2/3 raster of finite float64 values, immutable once built."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim not in (2, 3):
            raise ValueError(f"field must be 2D or 3D, got ndim={vals.ndim}")
        if any(n < 1 for n in vals.shape):
            raise ValueError(f"field extents must be >= 1, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def ndim(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape


@dataclass(frozen=True)
class BinaryMask:
    """A boolean raster with the same axis conventions as ScalarField."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.ascontiguousarray(self.bits, dtype=bool)
        if bits.ndim not in (2, 3):
            raise ValueError(f"mask must be 2D or 3D, got ndim={bits.ndim}")
        if any(n < 1 for n in bits.shape):
            raise ValueError(f"mask extents must be >= 1, got {bits.shape}")
        bits.flags.writeable = False
        object.__setattr__(self, "bits", bits)

    @property
    def ndim(self) -> int:
        return self.bits.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.bits.shape

    @property
    def density(self) -> float:
        return float(self.bits.mean())


def _infer_format(path) -> str:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".dmtf":
        return "dmtf"
    if ext in (".pgm", ".pnm"):
        return "pgm"
    raise FormatError(f"cannot infer format from extension {ext!r}; pass fmt")


def read_field(path, fmt: str | None = None) -> ScalarField:
    """Load a scalar field from a dmtf or pgm file.

    Raises FormatError (with the byte offset of the offending datum) on
    malformed headers, extents below 2, or non-finite values.
    """
    if fmt is None:
        fmt = _infer_format(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if fmt == "dmtf":
        return _parse_dmtf(raw)
    if fmt == "pgm":
        return _parse_pgm(raw)
    raise FormatError(f"unknown format {fmt!r}")


def _parse_dmtf(raw: bytes) -> ScalarField:
    if len(raw) < 8:
        raise FormatError("truncated header at byte offset 0")
    if raw[:4] != _MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r} at byte offset 0")
    version, ndim, reserved = struct.unpack_from("<BBH", raw, 4)
    if version != _VERSION:
        raise FormatError(f"unsupported version {version} at byte offset 4")
    if ndim not in (2, 3):
        raise FormatError(f"ndim must be 2 or 3, got {ndim} at byte offset 5")
    if reserved != 0:
        raise FormatError(f"reserved field must be 0, got {reserved} at byte offset 6")
    header_end = 8 + 4 * ndim
    if len(raw) < header_end:
        raise FormatError(f"truncated extents at byte offset {len(raw)}")
    shape = struct.unpack_from(f"<{ndim}I", raw, 8)
    for axis, extent in enumerate(shape):
        if extent < 2:
            raise FormatError(
                f"extent {extent} < 2 on axis {axis} at byte offset {8 + 4 * axis}"
            )
    count = int(np.prod(shape))
    expected = header_end + 4 * count
    if len(raw) != expected:
        raise FormatError(
            f"payload has {len(raw) - header_end} bytes, expected {4 * count}"
            f" at byte offset {header_end}"
        )
    values = np.frombuffer(raw, dtype="<f4", count=count, offset=header_end)
    finite = np.isfinite(values)
    if not finite.all():
        bad = int(np.flatnonzero(~finite)[0])
        raise FormatError(f"non-finite value at byte offset {header_end + 4 * bad}")
    return ScalarField(values.reshape(shape).astype(np.float64))


def _parse_pgm(raw: bytes) -> ScalarField:
    # P5 header: three whitespace-separated tokens (width, height, maxval),
    # '#' comments allowed, then a single whitespace byte before the pixels.
    if raw[:2] != b"P5":
        raise FormatError(f"bad magic {raw[:2]!r} at byte offset 0")
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"truncated header at byte offset {start}")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace separating header from pixels
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise FormatError(f"non-numeric header token at byte offset {pos}") from None
    if width < 2 or height < 2:
        raise FormatError(f"extent {min(width, height)} < 2 at byte offset 2")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval} at byte offset 2")
    if len(raw) - pos != width * height:
        raise FormatError(
            f"payload has {len(raw) - pos} bytes, expected {width * height}"
            f" at byte offset {pos}"
        )
    pixels = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
    return ScalarField(pixels.reshape(height, width).astype(np.float64) / 255.0)


def _atomic_write(path, payload: bytes) -> None:
    # No partial artifacts on failure: write a sibling temp file, then rename.
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def _dmtf_bytes(values: np.ndarray) -> bytes:
    shape = values.shape
    header = _MAGIC + struct.pack("<BBH", _VERSION, values.ndim, 0)
    header += struct.pack(f"<{values.ndim}I", *shape)
    return header + np.ascontiguousarray(values, dtype="<f4").tobytes()


def write_field(field: ScalarField, path) -> None:
    """Write a scalar field as dmtf (values truncated to float32)."""
    _atomic_write(path, _dmtf_bytes(field.values))


def write_mask(mask: BinaryMask, path, fmt: str | None = None) -> None:
    """Write a binary mask as dmtf (0.0/1.0) or pgm (0/255, 2D only)."""
    if fmt is None:
        fmt = _infer_format(path)
    if fmt == "dmtf":
        _atomic_write(path, _dmtf_bytes(mask.bits.astype(np.float64)))
    elif fmt == "pgm":
        if mask.ndim != 2:
            raise FormatError("pgm output is 2D only")
        h, w = mask.shape
        payload = b"P5\n%d %d\n255\n" % (w, h)
        payload += (mask.bits.astype(np.uint8) * 255).tobytes()
        _atomic_write(path, payload)
    else:
        raise FormatError(f"unknown format {fmt!r}")


def binarize(field: ScalarField, threshold: float) -> BinaryMask:
    """Threshold a field: bit set exactly where value > threshold."""
    return BinaryMask(field.values > threshold)
