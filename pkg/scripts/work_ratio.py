"""Measured literal visits, indexed vs direct, on synthetic list profiles.

Builds a single-class bank whose inclusion lists have a chosen mean length
and compares the counted work of both scoring paths with the closed form
(o * mean) / (n * 2o).

    python scripts/work_ratio.py --clauses 20000 --literals 1568 --mean 740
"""

import argparse

import numpy as np

from tsetlin_index import ClauseBank, TMConfig, WorkCounters, build_index, indexed_class_scores
from tsetlin_index.tm_core import class_scores


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--clauses", type=int, default=20000)
    ap.add_argument("--literals", type=int, default=1568, help="2o")
    ap.add_argument("--mean", type=float, default=740, help="mean inclusion list length")
    ap.add_argument("--inputs", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    n, L = args.clauses, args.literals
    cfg = TMConfig(m=1, n=n, o=L // 2)
    states = np.full((1, n, L), cfg.N, dtype=np.uint8)
    for k, size in enumerate(np.clip(rng.poisson(args.mean, L), 0, n)):
        states[0, rng.choice(n, size, replace=False), k] = cfg.N + 1
    bank = ClauseBank(cfg, states)
    idx = build_index(bank)

    indexed, direct = WorkCounters(), WorkCounters()
    for x in rng.integers(0, 2, (args.inputs, cfg.o)):
        indexed_class_scores(idx, x, indexed)
        class_scores(bank, x, direct)
    print(f"n={n} 2o={L} mean list={idx.sizes.mean():.1f}")
    print(f"indexed visits {indexed.literal_visits}  direct visits {direct.literal_visits}")
    print(f"measured ratio {indexed.literal_visits / direct.literal_visits:.5f}  "
          f"closed form {(L // 2) * args.mean / (n * L):.5f}")


if __name__ == "__main__":
    main()
