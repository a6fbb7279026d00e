"""Epoch-level training and batch inference on either backend."""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .clause_index import InclusionIndex, WorkCounters, build_index
from .errors import ShapeError
from .tm_core import ClauseBank, TMConfig

BACKENDS = ("direct", "indexed")
GENERATOR = "numpy.random.Generator(PCG64)"


class TsetlinMachine:
    """A clause bank, its random stream and (for ``indexed``) its index.

    Both backends consume the random stream identically, so two machines
    built from the same config and fed the same data end up with the same
    TA states; only the cost of computing clause outputs differs.
    """

    def __init__(self, config: TMConfig, backend: str = "indexed", bank: ClauseBank | None = None):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}, expected one of {BACKENDS}")
        self.config = config
        self.backend = backend
        self.bank = bank if bank is not None else ClauseBank(config)
        self.rng = np.random.default_rng(config.seed)
        self.index: InclusionIndex | None = build_index(self.bank) if backend == "indexed" else None
        self.counters = WorkCounters()
        self.flips = 0

    def _check(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.uint8)
        if X.ndim != 2 or X.shape[1] != self.config.o:
            raise ShapeError(f"expected (examples, {self.config.o}) bits, got {X.shape}")
        return X

    def fit_epoch(self, X, Y, shuffle: bool = True) -> None:
        X = self._check(X)
        Y = np.ascontiguousarray(Y, dtype=np.int64)
        if Y.shape != (X.shape[0],):
            raise ShapeError("one label per example required")
        limit = 2 if self.config.m == 1 else self.config.m
        if len(Y) and (Y.min() < 0 or Y.max() >= limit):
            raise ValueError(f"labels must lie in [0, {limit})")
        order = self.rng.permutation(X.shape[0]) if shuffle else np.arange(X.shape[0])
        cfg = self.config
        if self.index is None:
            lists, sizes, positions = (np.zeros((0, 0, 0), np.uint16), np.zeros((0, 0), np.int64),
                                       np.zeros((0, 0, 0), np.uint16))
        else:
            lists, sizes, positions = self.index.lists, self.index.sizes, self.index.positions
        visits, flips = K.fit_epoch(self.bank.states, cfg.N, int(cfg.T), float(cfg.s),
                                    bool(cfg.boost_true_positive), X, Y, order, self.rng,
                                    self.index is not None, lists, sizes, positions)
        self.counters.literal_visits += int(visits)
        self.flips += int(flips)

    def fit(self, X, Y, epochs: int = 1, shuffle: bool = True) -> None:
        for _ in range(epochs):
            self.fit_epoch(X, Y, shuffle)

    def class_scores(self, X, counters: WorkCounters | None = None) -> np.ndarray:
        X = self._check(X)
        scores = np.empty((X.shape[0], self.config.m), dtype=np.int64)
        if self.index is None:
            visits, falsified = K.direct_batch_scores(self.bank.states, self.config.N, X, scores)
        else:
            idx = self.index
            visits, falsified = K.indexed_batch_scores(idx.lists, idx.sizes, idx._stamp, idx._epoch,
                                                       idx.n // 2, X, scores)
        if counters is not None:
            counters.add(visits, falsified)
        return scores

    def predict(self, X, counters: WorkCounters | None = None) -> np.ndarray:
        scores = self.class_scores(X, counters)
        if self.config.m == 1:
            return (scores[:, 0] >= 0).astype(np.int64)
        return np.argmax(scores, axis=1)

    def accuracy(self, X, Y, counters: WorkCounters | None = None) -> float:
        Y = np.asarray(Y)
        if len(Y) == 0:
            return float("nan")
        return float(np.mean(self.predict(X, counters) == Y))
