"""Train both backends on noisy XOR and show they stay in lockstep.

    python scripts/noisy_xor_demo.py --epochs 50 --clauses 20
"""

import argparse
import time

import numpy as np

from tsetlin_index import TMConfig, TsetlinMachine
from tsetlin_index.data_pipeline import noisy_xor


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--clauses", type=int, default=20)
    ap.add_argument("--features", type=int, default=12)
    ap.add_argument("--examples", type=int, default=5000)
    ap.add_argument("--noise", type=float, default=0.1)
    ap.add_argument("--T", type=int, default=15)
    ap.add_argument("--s", type=float, default=3.9)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    train = noisy_xor(args.examples, o=args.features, noise=args.noise, rng=args.seed)
    test = noisy_xor(args.examples, o=args.features, noise=0.0, rng=args.seed + 1)
    cfg = TMConfig(m=2, n=args.clauses, o=args.features, T=args.T, s=args.s, seed=args.seed)
    machines = {b: TsetlinMachine(cfg, b) for b in ("direct", "indexed")}
    elapsed = dict.fromkeys(machines, 0.0)
    for epoch in range(1, args.epochs + 1):
        accs = {}
        for backend, tm in machines.items():
            t0 = time.perf_counter()
            tm.fit_epoch(train.features, train.labels)
            elapsed[backend] += time.perf_counter() - t0
            accs[backend] = tm.accuracy(test.features, test.labels)
        same = np.array_equal(machines["direct"].bank.states, machines["indexed"].bank.states)
        print(f"epoch {epoch:3d}  acc {accs['indexed']:.4f}  states identical: {same}")
    for backend, tm in machines.items():
        print(f"{backend:8s} train {elapsed[backend]:.2f}s  flips {tm.flips}  visits {tm.counters.literal_visits}")


if __name__ == "__main__":
    main()
