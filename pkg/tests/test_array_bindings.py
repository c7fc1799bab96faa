"""Parity of the in-process array interface with the CLI, plus its
buffer-handling contract.  Skipped entirely when the bindings package is
not installed, so the core suite stands alone."""

from __future__ import annotations

import json
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

ta = pytest.importorskip("topomorse_arrays")

import topomorse
from topomorse.field_io import ScalarField, read_field, write_field

from conftest import criterion


def run_cli(*argv):
    return subprocess.run(
        [sys.executable, "-m", "topomorse", *argv],
        capture_output=True,
        text=True,
    )


def _shared_inputs(count=20):
    """Random float32 (field, binary ground truth, eps) triples, mixing 2D
    and 3D shapes."""
    rng = np.random.default_rng(2030)
    cases = []
    for i in range(count):
        if i % 4 == 3:
            shape = tuple(int(rng.integers(4, 7)) for _ in range(3))
        else:
            shape = tuple(int(rng.integers(8, 25)) for _ in range(2))
        f = rng.random(shape, dtype=np.float32)
        g = (rng.random(shape) < 0.5).astype(np.float32)
        cases.append((f, g, (0.1, 0.2, 0.5)[i % 3]))
    return cases


def test_s1_cli_parity_and_thread_determinism(tmp_path):
    with criterion(
        "S1",
        "on 20 shared random inputs (2D and 3D): compute_mask is "
        "bit-identical to the CLI mask artifact and loss_and_grad matches "
        "the CLI loss JSON within 1e-12; 4 worker threads on distinct "
        "arrays reproduce the serial results exactly",
    ):
        cases = _shared_inputs()
        serial = []
        for i, (f, g, eps) in enumerate(cases):
            fpath, gpath = tmp_path / f"f{i}.dmtf", tmp_path / f"g{i}.dmtf"
            mpath = tmp_path / f"m{i}.dmtf"
            write_field(ScalarField(f.astype(np.float64)), fpath)
            write_field(ScalarField(g.astype(np.float64)), gpath)

            proc = run_cli("mask", "--in", str(fpath), "--out", str(mpath),
                           "--eps", str(eps))
            assert proc.returncode == 0, proc.stderr
            cli_bits = read_field(mpath).values != 0.0
            view = ta.compute_mask(f, eps=eps)
            assert view.data.dtype == np.float32 and view.shape == f.shape
            assert np.array_equal(view.data != 0.0, cli_bits)

            proc = run_cli("loss", "--pred", str(fpath), "--gt", str(gpath),
                           "--eps", str(eps), "--beta", "3.0")
            assert proc.returncode == 0, proc.stderr
            report = json.loads(proc.stdout)
            total, l_bce, l_dmt, grad = ta.loss_and_grad(f, g, eps=eps, beta=3.0)
            assert abs(total - report["total"]) <= 1e-12
            assert abs(l_bce - report["l_bce"]) <= 1e-12
            assert abs(l_dmt - report["l_dmt"]) <= 1e-12
            serial.append((view.data, total, l_bce, l_dmt, grad.data))

        with ThreadPoolExecutor(max_workers=4) as pool:
            masks = list(pool.map(lambda c: ta.compute_mask(c[0], eps=c[2]), cases))
            losses = list(pool.map(
                lambda c: ta.loss_and_grad(c[0], c[1], eps=c[2], beta=3.0), cases))
        for (bits, total, l_bce, l_dmt, grad), mv, (t, b, d, gr) in zip(
                serial, masks, losses):
            assert np.array_equal(mv.data, bits)
            assert (t, b, d) == (total, l_bce, l_dmt)
            assert np.array_equal(gr.data, grad)


def test_version_matches_core():
    assert ta.__version__ == topomorse.__version__


def test_wrap_is_zero_copy_for_contiguous_buffers():
    src = np.zeros((6, 8), dtype=np.float32)
    view = ta.ArrayView.wrap(src)
    assert not view.copied
    assert np.shares_memory(view.data, src)


def test_wrap_copies_non_contiguous_buffers_once():
    src = np.zeros((6, 8), dtype=np.float32)
    view = ta.ArrayView.wrap(src.T)
    assert view.copied
    assert view.data.flags.c_contiguous
    assert not np.shares_memory(view.data, src)


def test_wrap_rejects_wrong_dtype():
    with pytest.raises(ta.DtypeMismatchError):
        ta.ArrayView.wrap(np.zeros((4, 4), dtype=np.float64))
    with pytest.raises(TypeError):  # the error is an ordinary TypeError too
        ta.compute_mask(np.zeros((4, 4)))


def test_loss_rejects_bad_ground_truth():
    f = np.full((5, 5), 0.5, dtype=np.float32)
    with pytest.raises(ValueError, match="shape mismatch"):
        ta.loss_and_grad(f, np.zeros((5, 6), dtype=np.float32))
    with pytest.raises(ValueError, match="binary"):
        ta.loss_and_grad(f, np.full((5, 5), 0.25, dtype=np.float32))


def test_mask_empty_when_everything_prunes():
    rng = np.random.default_rng(9)
    f = rng.random((12, 12), dtype=np.float32)
    eps = float(f.max() - f.min()) * 1.1 + 0.01
    view = ta.compute_mask(f, eps=eps, include_s2=False)
    assert not view.data.any()


def test_3d_shape_is_preserved():
    f = np.random.default_rng(3).random((4, 4, 4), dtype=np.float32)
    assert ta.compute_mask(f).shape == (4, 4, 4)


def test_beta_zero_gradient_is_plain_bce_gradient():
    rng = np.random.default_rng(21)
    f32 = (0.05 + 0.9 * rng.random((10, 10))).astype(np.float32)
    g32 = (rng.random((10, 10)) < 0.5).astype(np.float32)
    _, _, _, grad = ta.loss_and_grad(f32, g32, beta=0.0)

    f, g = f32.astype(np.float64), g32.astype(np.float64)
    fh = np.clip(f, 1e-7, 1.0 - 1e-7)
    plain = (fh - g) / (fh * (1.0 - fh)) / f.size
    assert np.array_equal(grad.data, plain.astype(np.float32))
