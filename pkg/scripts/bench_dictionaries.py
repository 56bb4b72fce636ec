#!/usr/bin/env python3
"""Time the dictionary learners against each other on synthetic descriptors.

Draws a Gaussian-mixture descriptor cloud and times deep, flat, and k-means
dictionary learning on identical input. The deep learner only ever runs the
neighborhood search on shrinking prototype sets, so it scales far better
than a flat search with a large neighborhood cap.
"""

import argparse

import numpy as np

from opf_forge.bench import BenchConfig, bench_dictionaries
from opf_forge.dictionary import LayerSchedule


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10000, help="descriptor count")
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--flat-kmax", type=int, default=1500)
    ap.add_argument("--schedule", default="100,0.01,0.1,0.1")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    centers = rng.normal(0, 5, (50, args.dim))
    data = centers[rng.integers(0, 50, args.n)] + rng.normal(0, 1, (args.n, args.dim))

    parts = args.schedule.split(",")
    schedule = LayerSchedule(
        n_layers=len(parts),
        layer1_kmax=int(parts[0]),
        fractions=tuple(float(p) for p in parts[1:]),
    )
    entries = bench_dictionaries(data, [
        BenchConfig(method="dopf", schedule=schedule),
        BenchConfig(method="kmeans"),
        BenchConfig(method="opf", kmax=args.flat_kmax),
    ])
    print(f"{args.n} descriptors of dimension {args.dim}")
    for e in entries:
        print(f"  {e.method:<8} {e.seconds:8.2f}s  {e.n_words:5d} words  {e.params}")


if __name__ == "__main__":
    main()
