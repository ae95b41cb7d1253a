#!/usr/bin/env python3
"""End-to-end demo on synthetic phantoms.

Creates a small dataset, plans the cross-validation splits, generates
corrupted samples with labels for one iteration, evaluates the labels
against themselves (a perfect oracle), and renders a preview montage.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from synthanom import ndt
from synthanom.cli import main as cli
from synthanom.rng import RngStream


def make_phantoms(directory: Path, count: int, shape, seed: int) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    coords = np.stack(np.meshgrid(*[np.arange(n, dtype=float) for n in shape], indexing="ij"))
    center = np.array([n / 2 for n in shape]).reshape(-1, *([1] * len(shape)))
    for i in range(count):
        gen = RngStream(seed, i).generator()
        radius = min(shape) * gen.uniform(0.3, 0.45)
        dist = np.sqrt(((coords - center) ** 2).sum(axis=0))
        body = np.clip(1.0 - dist / radius, 0.0, 1.0)
        img = np.where(body > 0, 0.4 + body + gen.normal(scale=0.1, size=shape), -1.0)
        ndt.write(directory / f"sample{i:03d}.ndt", img.astype(np.float32))


def run(step: str, args: list[str]) -> None:
    print(f"\n== {step}: synthanom {' '.join(args)}")
    code = cli(args)
    if code != 0:
        sys.exit(f"{step} failed with exit code {code}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo_run", help="where to put everything")
    parser.add_argument("--samples", type=int, default=15)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    work = Path(args.workdir)
    data = work / "data"
    external = work / "external"
    out = work / "out"
    make_phantoms(data, args.samples, (args.size, args.size), args.seed)
    make_phantoms(external, 4, (args.size + 16, args.size + 16), args.seed + 1000)
    print(f"wrote {args.samples} phantoms to {data} and 4 externals to {external}")

    base = [
        "--seed", str(args.seed),
        "--input_dir", str(data),
        "--output_dir", str(out),
        "--external_dir", str(external),
    ]
    run("plan", ["plan", *base])
    manifest = out / "manifest.json"
    run("generate", ["generate", *base, "--manifest", str(manifest),
                     "--iteration", "0", "--role", "val"])

    labels = out / "iter-000" / "val" / "labels"
    run("eval", ["eval", *base, "--predictions", str(labels), "--labels", str(labels),
                 "--level", "pixel", "--report", str(out / "oracle_report.json")])

    log = out / "iter-000" / "val" / "records.jsonl"
    entry = next(
        json.loads(line) for line in log.read_text().splitlines()
        if "anomalies" in json.loads(line)
    )
    run("preview", ["preview", *base,
                    "--sample", str(data / f"{entry['sample']}.ndt"),
                    "--log", str(log), "--entry", "0", "--out", str(work / "previews")])
    print(f"\ndone; inspect {work / 'previews'} for montage and profile images")


if __name__ == "__main__":
    main()
