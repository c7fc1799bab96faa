"""Deterministic synthetic fields for demos, benchmarks, and tests."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .field_io import ScalarField


def two_bump_field(
    size: int = 64,
    peaks: tuple[tuple[int, int], tuple[int, int]] = ((32, 20), (32, 44)),
    peak_value: float = 1.0,
    dip_value: float = 0.6,
    background: float = 0.1,
) -> ScalarField:
    """Two radial bumps whose connecting ridge dips to `dip_value` exactly
    halfway between the peaks; the far field flattens at `background`."""
    (r0, c0), (r1, c1) = peaks
    half_gap = 0.5 * float(np.hypot(r1 - r0, c1 - c0))
    # Solve background + a * exp(-(r/s)^2) for peak at r=0 and dip at half_gap.
    a = peak_value - background
    s2 = half_gap**2 / np.log(a / (dip_value - background))
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    d0 = (rows - r0) ** 2 + (cols - c0) ** 2
    d1 = (rows - r1) ** 2 + (cols - c1) ** 2
    bump = background + a * np.exp(-np.minimum(d0, d1) / s2)
    return ScalarField(np.maximum(background, bump))


def gapped_line_field(
    shape: tuple[int, int] = (32, 64),
    row: int = 16,
    line_value: float = 0.9,
    gap_value: float = 0.4,
    gap_width: int = 6,
    background: float = 0.1,
) -> ScalarField:
    """A bright horizontal line spanning the full width, interrupted by a
    dimmer gap of `gap_width` pixels in the middle."""
    values = np.full(shape, background, dtype=np.float64)
    values[row, :] = line_value
    start = (shape[1] - gap_width) // 2
    values[row, start : start + gap_width] = gap_value
    return ScalarField(values)


def gap_columns(shape: tuple[int, int] = (32, 64), gap_width: int = 6) -> slice:
    """Column span of the gap produced by gapped_line_field."""
    start = (shape[1] - gap_width) // 2
    return slice(start, start + gap_width)


def smoothed_noise_field(shape: tuple[int, ...], seed: int, sigma: float = 4.0) -> ScalarField:
    """Gaussian-smoothed white noise rescaled into [0, 1]."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(shape)
    smooth = ndimage.gaussian_filter(noise, sigma=sigma, mode="reflect")
    lo, hi = smooth.min(), smooth.max()
    return ScalarField((smooth - lo) / (hi - lo))
