"""Command line: ``tsetlin-index {train,bench,verify,binarize}``.

Every flag can also come from a ``--config`` file of ``key=value`` lines or
from an environment variable ``TSETLIN_INDEX_<FLAG>`` (e.g.
``TSETLIN_INDEX_CLAUSES=1000,2000``). Precedence: command line, then
environment, then config file.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench import Experiment, Variant, emit_report, run_experiment, verify_mode
from .clause_index import save_bank
from .data_pipeline import (BinarizeSpec, binarize_images, build_vocabulary, load_dataset,
                            load_idx_images, load_labels, load_vocabulary, noisy_xor, save_dataset,
                            save_vocabulary, vectorize_text)
from .machine import TsetlinMachine
from .tm_core import TMConfig

ENV_PREFIX = "TSETLIN_INDEX_"
log = logging.getLogger("tsetlin_index")


def _int_list(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in str(text).split(",") if v.strip()]


def read_config(path) -> dict[str, str]:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--T", type=int, default=None, help="threshold (default: 15 for noisy-xor, n/25 otherwise)")
    p.add_argument("--s", type=float, default=3.9)
    p.add_argument("--N", type=int, default=100, help="states per action side")
    p.add_argument("--boost", action="store_true", help="boost true positive feedback")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsetlin-index", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file mirroring the flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one machine and report per-epoch accuracy")
    p.add_argument("--dataset", help="dataset file, or noisy-xor")
    p.add_argument("--test-dataset", help="held-out dataset file (default: the training set)")
    p.add_argument("--clauses", type=int, default=2000, help="clauses per class")
    p.add_argument("--features", type=int, default=12, help="width of the noisy-xor dataset")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--backend", choices=("direct", "indexed"), default="indexed")
    p.add_argument("--out", help="write the trained bank here")
    _common(p)

    p = sub.add_parser("bench", help="time both backends over a clause grid")
    p.add_argument("--dataset", help="comma-separated dataset files (one per feature variant) or noisy-xor")
    p.add_argument("--test-dataset", help="comma-separated test files matching --dataset")
    p.add_argument("--clauses", type=_int_list, default="1000,2000,5000,10000,20000")
    p.add_argument("--features", type=_int_list, default="12", help="widths for noisy-xor variants")
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--backend", choices=("direct", "indexed", "both"), default="both")
    p.add_argument("--name", help="dataset label in the report")
    p.add_argument("--out", default="report.csv")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    _common(p)

    p = sub.add_parser("verify", help="run the equivalence and integrity checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--inject-corruption", action="store_true", help=argparse.SUPPRESS)

    p = sub.add_parser("binarize", help="IDX images or labelled text to a dataset file")
    p.add_argument("--images", help="IDX3 image file (gzip allowed)")
    p.add_argument("--labels", help="IDX1 label file")
    p.add_argument("--bits", type=int, default=1)
    p.add_argument("--thresholds", type=_int_list, help="grey levels, ascending")
    p.add_argument("--text", help="one document per line: <label><TAB><text>")
    p.add_argument("--features", type=int, default=5000, help="vocabulary size for --text")
    p.add_argument("--vocab", help="existing vocabulary file (one token per line)")
    p.add_argument("--vocab-out", help="write the vocabulary built from --text here")
    p.add_argument("--classes", type=int, help="class count (default: max label + 1)")
    p.add_argument("--out", required=False)
    return parser


def _apply_overrides(parser: argparse.ArgumentParser, argv: list[str], environ) -> argparse.Namespace:
    pre, _ = parser.parse_known_args(argv)
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    sub = sub_action.choices[pre.command]
    dests = {a.dest.lower(): a.dest for a in sub._actions if a.dest != "help"}
    overrides = {}
    if pre.config:
        for key, value in read_config(pre.config).items():
            if key.lower() in dests:
                overrides[dests[key.lower()]] = value
            elif key.lower() not in ("config", "verbose"):
                raise SystemExit(f"{pre.config}: unknown key {key!r}")
    for low, dest in dests.items():
        env = environ.get(ENV_PREFIX + low.upper())
        if env is not None:
            overrides[dest] = env
    for dest, value in overrides.items():
        action = next(a for a in sub._actions if a.dest == dest)
        if isinstance(action, argparse._StoreTrueAction):
            value = str(value).lower() in ("1", "true", "yes", "on")
        sub.set_defaults(**{dest: value})
    return parser.parse_args(argv)


def _load_split(spec: str | None, features: int, seed: int, test: bool):
    if spec is None:
        raise SystemExit("--dataset is required")
    if spec.startswith("noisy-xor"):
        rng = np.random.default_rng(seed + (1 if test else 0))
        return noisy_xor(5000, o=features, noise=0.0 if test else 0.1, rng=rng)
    if not Path(spec).exists():
        raise SystemExit(f"dataset {spec} not found")
    return load_dataset(spec)


def cmd_train(args) -> int:
    xor = bool(args.dataset) and args.dataset.startswith("noisy-xor")
    train = _load_split(args.dataset, args.features, args.seed, False)
    if args.test_dataset:
        test = _load_split(args.test_dataset, args.features, args.seed, True)
    elif xor:
        test = _load_split(args.dataset, args.features, args.seed, True)
    else:
        test = train
    m = max(train.m, test.m)
    if args.T is not None:
        T = args.T
    else:
        T = 15 if xor else max(1, round(args.clauses / 25))
    cfg = TMConfig(m=m, n=args.clauses, o=train.o, N=args.N, T=T, s=args.s, seed=args.seed,
                   boost_true_positive=args.boost)
    tm = TsetlinMachine(cfg, args.backend)
    for epoch in range(1, args.epochs + 1):
        t0 = time.perf_counter()
        tm.fit_epoch(train.features, train.labels)
        t1 = time.perf_counter()
        acc = tm.accuracy(test.features, test.labels)
        t2 = time.perf_counter()
        print(f"epoch {epoch}: accuracy {acc:.4f} train {t1 - t0:.3f}s test {t2 - t1:.3f}s")
    if args.out:
        save_bank(args.out, tm.bank)
        print(f"bank written to {args.out}")
    return 0


def cmd_bench(args) -> int:
    names = _str_list(args.dataset or "")
    if not names:
        raise SystemExit("--dataset is required")
    variants = []
    if names == ["noisy-xor"]:
        for o in args.features:
            variants.append(Variant(_load_split("noisy-xor", o, args.seed, False),
                                    _load_split("noisy-xor", o, args.seed, True), f"o={o}"))
    else:
        tests = _str_list(args.test_dataset) if args.test_dataset else names
        if len(tests) != len(names):
            raise SystemExit("--test-dataset needs one file per --dataset entry")
        for tr, te in zip(names, tests):
            variants.append(Variant(_load_split(tr, 0, args.seed, False), _load_split(te, 0, args.seed, True), tr))
    exp = Experiment(dataset=args.name or (names[0] if len(names) == 1 else Path(names[0]).stem),
                     variants=variants, clauses=tuple(args.clauses), epochs=args.epochs, reps=args.reps,
                     backend=args.backend, T=args.T, s=args.s, N=args.N, seed=args.seed,
                     boost_true_positive=args.boost)
    report = run_experiment(exp)
    path = emit_report(report, args.out, args.format)
    for r in report.records:
        sp = "" if r.speedup is None else f" speedup {r.speedup:.2f}"
        print(f"{r.dataset} o={r.features} n={r.clauses} {r.backend:7s} {r.phase:5s} "
              f"{r.epoch_s_mean:.4f}s visits {r.literal_visits}{sp}")
    if report.metadata["trajectory_mismatches"]:
        print("backends diverged:", ", ".join(report.metadata["trajectory_mismatches"]), file=sys.stderr)
        return 1
    print(f"report written to {path}")
    return 0


def cmd_verify(args) -> int:
    result = verify_mode(seed=args.seed, instances=args.instances, corrupt=args.inject_corruption)
    for failure in result.failures:
        print("FAIL", failure)
    status = "PASS" if result.ok else "FAIL"
    print(f"{status}: {result.checks} checks, {len(result.failures)} failures")
    return 0 if result.ok else 1


def cmd_binarize(args) -> int:
    if not args.out:
        raise SystemExit("--out is required")
    if args.images:
        pixels = load_idx_images(args.images)
        labels = load_labels(args.labels, args.classes) if args.labels else None
        if labels is not None and len(labels) != len(pixels):
            raise SystemExit("image and label counts differ")
        spec = BinarizeSpec(args.bits, tuple(args.thresholds) if args.thresholds else None)
        ds = binarize_images(pixels, spec, labels, args.classes, source=str(args.images))
    elif args.text:
        labels, docs = [], []
        for line in Path(args.text).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            label, _, doc = line.partition("\t")
            labels.append(int(label))
            docs.append(doc)
        vocab = load_vocabulary(args.vocab) if args.vocab else build_vocabulary(docs, args.features)
        if args.vocab_out:
            save_vocabulary(args.vocab_out, vocab)
        ds = vectorize_text(docs, vocab, labels, args.classes, source=str(args.text))
    else:
        raise SystemExit("give --images or --text")
    save_dataset(args.out, ds)
    print(f"{len(ds)} rows, o={ds.o}, m={ds.m} -> {args.out}")
    return 0


COMMANDS = {"train": cmd_train, "bench": cmd_bench, "verify": cmd_verify, "binarize": cmd_binarize}


def main(argv=None, environ=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = _apply_overrides(parser, argv, os.environ if environ is None else environ)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
