"""Timing sweeps over clause counts and feature variants, plus self-checks."""

from __future__ import annotations

import csv
import io
import logging
import platform
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .clause_index import (WorkCounters, apply_flips, build_index, index_insert, index_remove,
                           indexed_class_scores)
from .data_pipeline import BoolDataset
from .errors import ConfigError, IntegrityError
from .machine import GENERATOR, TsetlinMachine
from .tm_core import ClauseBank, TMConfig, class_scores, train_step

log = logging.getLogger(__name__)

BACKEND_CHOICES = ("direct", "indexed", "both")
CSV_COLUMNS = ("dataset", "features", "clauses", "backend", "phase",
               "epoch_s_mean", "epoch_s_std", "literal_visits", "speedup")


@dataclass
class Variant:
    """One feature variant (one table column pair): a train and a test split."""

    train: BoolDataset
    test: BoolDataset
    label: str = ""

    @property
    def o(self) -> int:
        return self.train.o


@dataclass
class Experiment:
    dataset: str
    variants: list[Variant]
    clauses: tuple[int, ...] = (1000, 2000, 5000, 10000, 20000)
    epochs: int = 1
    reps: int = 1
    backend: str = "both"
    T: int | None = None
    s: float = 3.9
    N: int = 100
    seed: int = 0
    boost_true_positive: bool = False

    def __post_init__(self):
        self.clauses = tuple(int(c) for c in self.clauses)
        if not self.clauses or any(c <= 0 or c % 2 for c in self.clauses):
            raise ConfigError(f"clause grid must hold positive even values, got {self.clauses}")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.backend not in BACKEND_CHOICES:
            raise ConfigError(f"backend must be one of {BACKEND_CHOICES}")
        for v in self.variants:
            if v.train.o != v.test.o:
                raise ConfigError("train and test widths differ")

    @property
    def backends(self) -> tuple[str, ...]:
        return ("direct", "indexed") if self.backend == "both" else (self.backend,)

    def threshold(self, n: int) -> int:
        if self.T is not None:
            return int(self.T)
        if self.dataset.startswith("noisy-xor"):
            return 15
        return max(1, round(n / 25))


@dataclass
class Record:
    dataset: str
    features: int
    clauses: int
    backend: str
    phase: str
    epoch_s_mean: float
    epoch_s_std: float
    literal_visits: int
    speedup: float | None = None


@dataclass
class BenchReport:
    records: list[Record] = field(default_factory=list)
    # "dataset/features/clauses/backend/rep" -> per-epoch test accuracy
    curves: dict[str, list[float]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def find(self, **match) -> list[Record]:
        return [r for r in self.records if all(getattr(r, k) == v for k, v in match.items())]


def host_descriptor() -> str:
    return f"{platform.node()} {platform.machine()} {platform.system()} python-{platform.python_version()}"


def _warm_up(N: int, m: int) -> None:
    # compile kernels for the dtypes in play so timings exclude JIT
    cfg = TMConfig(m=m, n=2, o=1, N=N, T=1)
    X = np.zeros((1, 1), np.uint8)
    Y = np.zeros(1, np.int64)
    for backend in ("direct", "indexed"):
        tm = TsetlinMachine(cfg, backend)
        tm.fit_epoch(X, Y)
        tm.class_scores(X)


def _stats(xs: list[float]) -> tuple[float, float]:
    if not xs:
        return float("nan"), float("nan")
    return statistics.fmean(xs), statistics.pstdev(xs)


def run_experiment(exp: Experiment) -> BenchReport:
    report = BenchReport(metadata={
        "seed": exp.seed, "host": host_descriptor(), "generator": GENERATOR,
        "parallel_cells": False, "epochs": exp.epochs, "reps": exp.reps,
        "s": exp.s, "N": exp.N, "trajectory_mismatches": [],
    })
    for variant in exp.variants:
        m = max(variant.train.m, variant.test.m)
        _warm_up(exp.N, m)
        for n in exp.clauses:
            cfg = TMConfig(m=m, n=n, o=variant.o, N=exp.N, T=exp.threshold(n), s=exp.s,
                           seed=exp.seed, boost_true_positive=exp.boost_true_positive)
            cell = {}
            final_states = {}
            for rep in range(exp.reps):
                for backend in exp.backends:
                    tm = TsetlinMachine(replace(cfg, seed=exp.seed + rep), backend)
                    times = {"train": [], "test": []}
                    visits = {"train": [], "test": []}
                    curve = []
                    for _ in range(max(exp.epochs, 1)):
                        if exp.epochs:
                            before = tm.counters.literal_visits
                            t0 = time.perf_counter()
                            tm.fit_epoch(variant.train.features, variant.train.labels)
                            times["train"].append(time.perf_counter() - t0)
                            visits["train"].append(tm.counters.literal_visits - before)
                        counters = WorkCounters()
                        t0 = time.perf_counter()
                        acc = tm.accuracy(variant.test.features, variant.test.labels, counters)
                        times["test"].append(time.perf_counter() - t0)
                        visits["test"].append(counters.literal_visits)
                        curve.append(acc)
                    key = f"{exp.dataset}/{variant.o}/{n}/{backend}/{rep}"
                    report.curves[key] = curve
                    final_states[(backend, rep)] = tm.bank.states
                    for phase in ("train", "test"):
                        slot = cell.setdefault((backend, phase), {"t": [], "v": []})
                        slot["t"] += times[phase]
                        slot["v"] += visits[phase]
                    log.info("%s o=%d n=%d %s rep=%d acc=%.4f", exp.dataset, variant.o, n, backend, rep, curve[-1])
                if len(exp.backends) == 2:
                    same = (np.array_equal(final_states[("direct", rep)], final_states[("indexed", rep)])
                            and report.curves[f"{exp.dataset}/{variant.o}/{n}/direct/{rep}"]
                            == report.curves[f"{exp.dataset}/{variant.o}/{n}/indexed/{rep}"])
                    if not same:
                        report.metadata["trajectory_mismatches"].append(f"{exp.dataset}/{variant.o}/{n}/{rep}")
            for phase in ("train", "test"):
                means = {}
                for backend in exp.backends:
                    slot = cell[(backend, phase)]
                    if not slot["t"]:
                        continue
                    mean, std = _stats(slot["t"])
                    means[backend] = mean
                    report.records.append(Record(exp.dataset, variant.o, n, backend, phase, mean, std,
                                                 int(round(statistics.fmean(slot["v"])))))
                cell_key = f"{exp.dataset}/{variant.o}/{n}/"
                diverged = any(k.startswith(cell_key) for k in report.metadata["trajectory_mismatches"])
                if len(means) == 2 and not diverged:
                    speedup = means["direct"] / means["indexed"]
                    for r in report.records[-2:]:
                        r.speedup = speedup
    return report


# --- reporting --------------------------------------------------------------


def _csv_text(report: BenchReport) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in report.records:
        row = asdict(r)
        row["speedup"] = "" if r.speedup is None else repr(r.speedup)
        row["epoch_s_mean"] = repr(r.epoch_s_mean)
        row["epoch_s_std"] = repr(r.epoch_s_std)
        writer.writerow(row)
    return buf.getvalue()


def _markdown_text(report: BenchReport) -> str:
    """One table per dataset: rows are clause counts, column pairs are Train/Test per width."""
    out = []
    datasets = list(dict.fromkeys(r.dataset for r in report.records))
    for ds in datasets:
        recs = [r for r in report.records if r.dataset == ds]
        widths = sorted({r.features for r in recs})
        clauses = sorted({r.clauses for r in recs})

        def cell(n, o, phase):
            rows = [r for r in recs if r.clauses == n and r.features == o and r.phase == phase]
            if not rows:
                return ""
            if rows[0].speedup is not None:
                return f"{rows[0].speedup:.2f}"
            return f"{rows[0].epoch_s_mean:.3g}s"

        out.append(f"### {ds}\n")
        out.append("| Features | " + "".join(f"{o} | | " for o in widths).rstrip() + "\n")
        out.append("|---|" + "---|---|" * len(widths) + "\n")
        out.append("| Clauses | " + " | ".join("Train | Test" for _ in widths) + " |\n")
        for n in clauses:
            cells = " | ".join(f"{cell(n, o, 'train')} | {cell(n, o, 'test')}" for o in widths)
            out.append(f"| {n} | {cells} |\n")
        out.append("\n")
    return "".join(out)


def emit_report(report: BenchReport, path, fmt: str = "csv") -> Path:
    if fmt == "csv":
        text = _csv_text(report)
    elif fmt == "markdown":
        text = _markdown_text(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path = Path(path)
    path.write_text(text)
    return path


def read_report_csv(path) -> list[Record]:
    records = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            records.append(Record(
                dataset=row["dataset"], features=int(row["features"]), clauses=int(row["clauses"]),
                backend=row["backend"], phase=row["phase"],
                epoch_s_mean=float(row["epoch_s_mean"]), epoch_s_std=float(row["epoch_s_std"]),
                literal_visits=int(row["literal_visits"]),
                speedup=float(row["speedup"]) if row["speedup"] else None,
            ))
    return records


# --- verify -----------------------------------------------------------------


@dataclass
class VerifyResult:
    checks: int = 0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def random_bank(rng: np.random.Generator, m: int, n: int, o: int, N: int = 100,
                density: float | None = None) -> ClauseBank:
    """Bank with TA states drawn uniformly on each side of the boundary."""
    cfg = TMConfig(m=m, n=n, o=o, N=N)
    if density is None:
        density = rng.uniform(0.0, 0.5)
    include = rng.random((m, n, 2 * o)) < density
    states = np.where(include, rng.integers(N + 1, 2 * N + 1, include.shape),
                      rng.integers(1, N + 1, include.shape))
    return ClauseBank(cfg, states)


def all_inputs(o: int) -> np.ndarray:
    codes = np.arange(2 ** o, dtype=np.int64)
    return ((codes[:, None] >> np.arange(o)) & 1).astype(np.uint8)


def verify_mode(seed: int = 0, instances: int = 100, corrupt: bool = False) -> VerifyResult:
    """Indexed-vs-direct equivalence, maintenance-vs-rebuild and learning checks.

    Each failure names the instance seed that reproduces it. ``corrupt``
    drops the tail of one inclusion list in every instance before checking.
    """
    result = VerifyResult()
    for t in range(instances):
        inst_seed = seed * 1_000_003 + t
        rng = np.random.default_rng(inst_seed)
        m = int(rng.integers(1, 4))
        n = 2 * int(rng.integers(1, 11))
        o = int(rng.integers(1, 7))
        bank = random_bank(rng, m, n, o)
        idx = build_index(bank)
        if corrupt:
            i, k = np.unravel_index(np.argmax(idx.sizes), idx.sizes.shape)
            if idx.sizes[i, k] == 0:
                bank.set_include(0, 0, 0, True)
                idx = build_index(bank)
                i, k = 0, 0
            idx.sizes[i, k] -= 1
        where = f"instance {t} (seed={inst_seed}, m={m}, n={n}, o={o})"

        result.checks += 1
        try:
            idx.verify(bank)
        except IntegrityError as exc:
            result.failures.append(f"{where}: {exc}")

        result.checks += 1
        for x in all_inputs(o):
            got = indexed_class_scores(idx, x)
            want = class_scores(bank, x)
            if not np.array_equal(got, want):
                result.failures.append(f"{where}: scores differ at x={x.tolist()}: indexed={got.tolist()} direct={want.tolist()}")
                break
        if corrupt:
            continue

        # random flips maintained in place, compared against a rebuild
        result.checks += 1
        for _ in range(50):
            i, j, k = int(rng.integers(m)), int(rng.integers(n)), int(rng.integers(2 * o))
            if bank.states[i, j, k] > bank.N:
                bank.set_include(i, j, k, False)
                index_remove(idx, i, k, j)
            else:
                bank.set_include(i, j, k, True)
                index_insert(idx, i, k, j)
        if idx.as_sets() != build_index(bank).as_sets():
            result.failures.append(f"{where}: maintained index differs from rebuild after flips")

        # indexed learning keeps the index coherent and matches direct learning
        result.checks += 1
        cfg = replace(bank.config, T=3, seed=inst_seed, m=max(m, 2))
        twin_a = ClauseBank(cfg)
        twin_b = ClauseBank(cfg)
        idx_a = build_index(twin_a)
        idx_b = build_index(twin_b)
        rng_a = np.random.default_rng(inst_seed)
        rng_b = np.random.default_rng(inst_seed)
        for _ in range(20):
            x = rng.integers(0, 2, o).astype(np.uint8)
            y = int(rng.integers(cfg.m))
            apply_flips(idx_a, train_step(twin_a, x, y, rng_a))
            train_step(twin_b, x, y, rng_b, index=idx_b)
        for name, b, ix in (("replayed", twin_a, idx_a), ("in-step", twin_b, idx_b)):
            try:
                ix.verify(b)
            except IntegrityError as exc:
                result.failures.append(f"{where}: {name} index after learning: {exc}")
        if not np.array_equal(twin_a.states, twin_b.states):
            result.failures.append(f"{where}: direct and indexed learning diverged")
    return result
