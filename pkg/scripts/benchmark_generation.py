#!/usr/bin/env python3
"""Measure corruption throughput per task kind on square phantoms."""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from synthanom.rng import RngStream
from synthanom.tasks import ALL_TASKS, BLEND_TASKS, DonorPool, GeneratorConfig, apply_random_anomalies


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=128)
    parser.add_argument("--per-task", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    shape = (args.size, args.size)
    gen = RngStream(args.seed, 1).generator()
    images = [np.abs(gen.normal(size=shape)) + 0.1 for _ in range(8)]
    donors = DonorPool([(f"d{i}", img) for i, img in enumerate(images)])
    cfg = GeneratorConfig()

    print(f"{args.per_task} samples per task at {args.size}x{args.size}")
    total = 0.0
    for task in ALL_TASKS:
        pool = donors if task in BLEND_TASKS else None
        start = time.perf_counter()
        anomalies = 0
        for i in range(args.per_task):
            _, records = apply_random_anomalies(
                images[i % len(images)], task, pool, RngStream(args.seed, 100 + i), cfg
            )
            anomalies += len(records)
        elapsed = time.perf_counter() - start
        total += elapsed
        print(f"  {task.value:<17} {elapsed / args.per_task * 1000:7.1f} ms/sample "
              f"({anomalies} anomalies)")
    print(f"total {total:.2f}s for {5 * args.per_task} samples")


if __name__ == "__main__":
    main()
