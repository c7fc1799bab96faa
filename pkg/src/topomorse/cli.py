"""Command-line front end.

Subcommands: skeleton, basins, mask, loss, metrics, persistence.  Exit
codes: 0 success, 1 usage error, 2 data error (missing/malformed file,
shape mismatch, non-binary ground truth).  Given identical inputs every
invocation writes byte-identical artifacts; JSON goes to stdout with a
fixed key order, diagnostics to stderr.  The DMT_THREADS environment
variable caps internal parallelism (defaults to the machine's cores).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .basin_boundary import basin_labels, boundary_mask
from .field_io import (
    FormatError,
    ScalarField,
    binarize,
    read_field,
    write_field,
    write_mask,
)
from .morse_skeleton import skeleton_mask
from .persistence import build_filtration, reduce as _reduce, zero_dim_pairs
from .seg_metrics import (
    ari,
    betti_error,
    dice_and_accuracy,
    region_labeling,
    voi,
)
from .topo_loss import LossConfig, total_loss


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; here usage errors must exit 1.
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="topomorse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--eps", type=float, default=0.2,
                       help="persistence threshold (default 0.2)")
        p.add_argument("--format", choices=("dmtf", "pgm"), default=None,
                       help="input format (default: by extension)")

    p = sub.add_parser("skeleton", help="write the ridge skeleton mask")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    add_common(p)

    p = sub.add_parser("basins", help="write basin labels and wall mask")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--labels-out", dest="labels_out")
    p.add_argument("--mask-out", dest="mask_out")
    add_common(p)

    p = sub.add_parser("mask", help="write the structural mask (skeleton + walls)")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--no-s1", action="store_true", help="drop the ridge skeleton")
    p.add_argument("--no-s2", action="store_true", help="drop the basin walls")
    add_common(p)

    p = sub.add_parser("loss", help="report the structural loss as JSON")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--clamp", type=float, default=1e-7)
    p.add_argument("--no-s1", action="store_true")
    p.add_argument("--no-s2", action="store_true")
    add_common(p)

    p = sub.add_parser("metrics", help="report segmentation metrics as JSON")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--seed", type=int, required=True,
                   help="seed for Betti-error patch sampling")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--patch", type=int, nargs="+", default=None,
                   help="patch extents for the Betti error")
    p.add_argument("--n-patches", type=int, default=100)
    p.add_argument("--format", choices=("dmtf", "pgm"), default=None)

    p = sub.add_parser("persistence", help="dump persistence pairs as JSON lines")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--polarity", choices=("superlevel", "sublevel"),
                   default="superlevel")
    p.add_argument("--all-dims", action="store_true",
                   help="full reduction instead of the dimension-0 fast path")
    p.add_argument("--format", choices=("dmtf", "pgm"), default=None)

    return parser


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _cmd_skeleton(args) -> None:
    field = read_field(args.infile, args.format)
    write_mask(skeleton_mask(field, args.eps), args.outfile)


def _cmd_basins(args) -> None:
    if not (args.labels_out or args.mask_out):
        raise _UsageError("basins needs --labels-out and/or --mask-out")
    field = read_field(args.infile, args.format)
    labeling = basin_labels(field, args.eps)
    if args.labels_out:
        # Compact float ids, 1..k by ascending minimum position, so the
        # float32 payload is exact.
        compact = {int(m): i + 1 for i, m in enumerate(labeling.minima)}
        ids = np.vectorize(compact.__getitem__, otypes=[np.float64])(labeling.labels)
        write_field(ScalarField(ids), args.labels_out)
    if args.mask_out:
        write_mask(boundary_mask(labeling), args.mask_out)


def _cmd_mask(args) -> None:
    field = read_field(args.infile, args.format)
    cfg = LossConfig(eps=args.eps, include_s1=not args.no_s1,
                     include_s2=not args.no_s2)
    from .topo_loss import morse_mask

    write_mask(morse_mask(field, cfg), args.outfile)


def _cmd_loss(args) -> None:
    pred = read_field(args.pred, args.format)
    gt = read_field(args.gt, args.format)
    cfg = LossConfig(eps=args.eps, beta=args.beta, clamp=args.clamp,
                     include_s1=not args.no_s1, include_s2=not args.no_s2)
    report = total_loss(pred, gt, cfg)
    _emit({
        "l_bce": report.l_bce,
        "l_dmt": report.l_dmt,
        "beta": report.beta,
        "total": report.total,
        "mask_density": report.mask_density,
        "n_s1": report.n_s1,
        "n_basins": report.n_basins,
    })


def _cmd_metrics(args) -> None:
    pred = binarize(read_field(args.pred, args.format), args.threshold)
    gt = binarize(read_field(args.gt, args.format), args.threshold)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    patch = tuple(args.patch) if args.patch else None
    dice, accuracy = dice_and_accuracy(pred, gt)
    pred_regions = region_labeling(pred)
    gt_regions = region_labeling(gt)
    _emit({
        "dice": dice,
        "accuracy": accuracy,
        "ari": ari(pred_regions, gt_regions),
        "voi": voi(pred_regions, gt_regions),
        "betti_error": betti_error(pred, gt, seed=args.seed, patch_shape=patch,
                                   n_patches=args.n_patches),
        "seed": args.seed,
        "n_patches": args.n_patches,
    })


def _cmd_persistence(args) -> None:
    field = read_field(args.infile, args.format)
    if args.all_dims:
        pairs = _reduce(build_filtration(field, args.polarity))
    else:
        pairs = zero_dim_pairs(field, args.polarity)
    for pair in pairs:
        _emit({
            "birth": list(pair.birth),
            "death": None if pair.death is None else list(pair.death),
            # JSON has no +inf; essential classes carry null persistence.
            "pers": None if math.isinf(pair.persistence) else pair.persistence,
            "dim": pair.dim,
        })


_COMMANDS = {
    "skeleton": _cmd_skeleton,
    "basins": _cmd_basins,
    "mask": _cmd_mask,
    "loss": _cmd_loss,
    "metrics": _cmd_metrics,
    "persistence": _cmd_persistence,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"topomorse: {exc}", file=sys.stderr)
        return 1
    try:
        _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"topomorse: {exc}", file=sys.stderr)
        return 1
    except (FormatError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"topomorse: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
