"""Binarize MNIST-style IDX files at several bit depths and time both backends.

Expects the four standard IDX files (gzip or plain) in --data. Produces one
report with a column pair per bit depth and a row per clause count.

    python scripts/mnist_sweep.py --data ~/mnist --bits 1,2,3,4 --clauses 1000,2000 --out mnist.md
"""

import argparse
import logging
from pathlib import Path

from tsetlin_index.bench import Experiment, Variant, emit_report, run_experiment
from tsetlin_index.data_pipeline import BinarizeSpec, binarize_images, load_idx_images, load_labels


def _find(root: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        if (root / name).exists():
            return root / name
    raise SystemExit(f"{stem}[.gz] not found in {root}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--data", type=Path, required=True)
    ap.add_argument("--bits", default="1,2,3,4")
    ap.add_argument("--clauses", default="1000,2000,5000,10000,20000")
    ap.add_argument("--epochs", type=int, default=1)
    ap.add_argument("--reps", type=int, default=1)
    ap.add_argument("--limit", type=int, default=None, help="use only the first N train/test images")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="mnist_report.md")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO)

    splits = {}
    for split, prefix in (("train", "train"), ("test", "t10k")):
        images = load_idx_images(_find(args.data, f"{prefix}-images-idx3-ubyte"))
        labels = load_labels(_find(args.data, f"{prefix}-labels-idx1-ubyte"), m=10)
        splits[split] = (images[: args.limit], labels[: args.limit])

    variants = []
    for bits in (int(b) for b in args.bits.split(",")):
        spec = BinarizeSpec(bits)
        train, test = (binarize_images(splits[s][0], spec, splits[s][1], m=10, source=s)
                       for s in ("train", "test"))
        variants.append(Variant(train, test, f"{bits}-bit"))

    exp = Experiment("mnist", variants, clauses=tuple(int(c) for c in args.clauses.split(",")),
                     epochs=args.epochs, reps=args.reps, seed=args.seed)
    report = run_experiment(exp)
    fmt = "markdown" if args.out.endswith(".md") else "csv"
    print(emit_report(report, args.out, fmt).read_text())


if __name__ == "__main__":
    main()
