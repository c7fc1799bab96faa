"""Wall-time scaling of morse_mask across grid sizes.

Prints the median of N runs per side plus the per-cell rate, then the
time ratio between consecutive sides (a 4x side step is a 16x cell step,
so near-linear scaling keeps those ratios well under the cell factor).
Sizes are interleaved within each repetition so CPU frequency drift hits
all of them equally.
"""

from __future__ import annotations

import argparse
import time
from statistics import median

from topomorse.synthetic import smoothed_noise_field
from topomorse.topo_loss import LossConfig, morse_mask


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sides", type=int, nargs="+", default=[256, 512, 1024])
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--eps", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    cfg = LossConfig(eps=args.eps)
    morse_mask(smoothed_noise_field((64, 64), seed=7), cfg)  # JIT warm-up

    fields = {s: smoothed_noise_field((s, s), seed=args.seed) for s in args.sides}
    times: dict[int, list[float]] = {s: [] for s in args.sides}
    density: dict[int, float] = {}
    for side, f in fields.items():
        density[side] = morse_mask(f, cfg).density  # untimed shakedown
    for _ in range(args.runs):
        for side, f in fields.items():
            t0 = time.perf_counter()
            morse_mask(f, cfg)
            times[side].append(time.perf_counter() - t0)

    med = {s: median(t) for s, t in times.items()}
    for side in args.sides:
        cells = side * side
        print(f"{side:5d}^2  {med[side] * 1e3:9.2f} ms  "
              f"{med[side] / cells * 1e9:7.2f} ns/cell  "
              f"density={density[side]:.4f}")
    for small, big in zip(args.sides, args.sides[1:]):
        factor = (big / small) ** 2
        print(f"{small}^2 -> {big}^2: {med[big] / med[small]:5.1f}x time "
              f"for {factor:.0f}x cells")


if __name__ == "__main__":
    main()
