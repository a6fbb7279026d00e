"""Tsetlin automata, clause banks, direct evaluation and learning."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import ConfigError, ShapeError


class Signal(enum.IntEnum):
    REWARD = K.REWARD
    PENALTY = K.PENALTY


class Flip(NamedTuple):
    """A TA crossed the include/exclude boundary during a train step."""

    cls: int
    clause: int
    literal: int
    direction: int  # +1 exclude -> include, -1 include -> exclude


@dataclass(frozen=True)
class TMConfig:
    m: int
    n: int
    o: int
    N: int = 100
    T: int = 15
    s: float = 3.9
    seed: int = 0
    boost_true_positive: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError(f"need at least one class, got m={self.m}")
        if self.n < 2 or self.n % 2:
            raise ConfigError(f"clauses per class must be even and >= 2, got n={self.n}")
        if self.o < 1:
            raise ConfigError(f"need at least one feature, got o={self.o}")
        if self.N < 1 or 2 * self.N > np.iinfo(np.uint16).max:
            raise ConfigError(f"N={self.N} out of range")
        if int(self.T) != self.T or self.T < 1:
            raise ConfigError(f"T must be a positive integer, got {self.T}")
        if not self.s > 1:
            raise ConfigError(f"s must exceed 1, got {self.s}")

    @property
    def literals(self) -> int:
        return 2 * self.o

    @property
    def state_dtype(self):
        return np.uint8 if 2 * self.N <= np.iinfo(np.uint8).max else np.uint16


def ta_action(value: int, N: int) -> bool:
    """True when the automaton includes its literal."""
    return value > N


def ta_apply(value: int, N: int, signal: Signal) -> tuple[int, bool]:
    """Apply one reward or penalty; returns (new value, action flipped)."""
    new = int(K.ta_transition(int(value), int(N), int(signal)))
    return new, ta_action(new, N) != ta_action(value, N)


class ClauseBank:
    """TA states for m classes of n clauses over 2*o literals.

    ``states[i, j, k]`` is the automaton deciding literal ``k`` of clause
    ``j`` in class ``i``. Clauses ``j < n // 2`` vote for their class, the
    rest vote against it.
    """

    def __init__(self, config: TMConfig, states: np.ndarray | None = None):
        self.config = config
        shape = (config.m, config.n, config.literals)
        if states is None:
            # every TA one step on the exclude side of the boundary
            states = np.full(shape, config.N, dtype=config.state_dtype)
        else:
            states = np.ascontiguousarray(states, dtype=config.state_dtype)
            if states.shape != shape:
                raise ShapeError(f"states shape {states.shape} != {shape}")
            if states.min() < 1 or states.max() > 2 * config.N:
                raise ConfigError("TA states outside [1, 2N]")
        self.states = states

    @property
    def m(self) -> int:
        return self.config.m

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def o(self) -> int:
        return self.config.o

    @property
    def N(self) -> int:
        return self.config.N

    def include(self) -> np.ndarray:
        return self.states > self.config.N

    def team(self, i: int, j: int) -> np.ndarray:
        return self.states[i, j]

    def copy(self) -> "ClauseBank":
        return ClauseBank(self.config, self.states.copy())

    def set_include(self, i: int, j: int, k: int, include: bool) -> None:
        """Place a TA just across the boundary on the requested side."""
        self.states[i, j, k] = self.N + 1 if include else self.N


def as_bits(x, o: int) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.uint8)
    if x.ndim != 1 or x.shape[0] != o:
        raise ShapeError(f"expected a bit vector of length {o}, got shape {x.shape}")
    return x


def literal_values(x: np.ndarray) -> np.ndarray:
    lits = np.empty(2 * x.shape[0], dtype=np.uint8)
    K.fill_literals(x, lits)
    return lits


def evaluate_clause(team: np.ndarray, x, N: int = 100) -> int:
    """Conjunction of the included literals of one TA team; empty clause is 1."""
    team = np.asarray(team)
    if team.ndim != 1 or team.shape[0] % 2:
        raise ShapeError(f"team must hold 2*o states, got shape {team.shape}")
    x = as_bits(x, team.shape[0] // 2)
    out = np.empty(1, dtype=np.uint8)
    K.direct_clause_outputs(team[None, :], N, literal_values(x), out)
    return int(out[0])


def _check_class(bank: ClauseBank, i: int) -> None:
    if not 0 <= i < bank.m:
        raise IndexError(f"class {i} out of range for m={bank.m}")


def class_scores(bank: ClauseBank, x, counters=None) -> np.ndarray:
    """Scores of every class by direct evaluation; ``counters`` gets m*n*2o visits."""
    x = as_bits(x, bank.o)
    scores = np.empty(bank.m, dtype=np.int64)
    visits, falsified = K.direct_scores(bank.states, bank.N, literal_values(x), scores)
    if counters is not None:
        counters.add(visits, falsified)
    return scores


def class_score(bank: ClauseBank, i: int, x) -> int:
    """Positive-polarity clause outputs minus negative ones for class i."""
    _check_class(bank, i)
    x = as_bits(x, bank.o)
    out = np.empty(bank.n, dtype=np.uint8)
    K.direct_clause_outputs(bank.states[i], bank.N, literal_values(x), out)
    half = bank.n // 2
    return int(out[:half].sum(dtype=np.int64) - out[half:].sum(dtype=np.int64))


def predict_binary(bank: ClauseBank, x) -> int:
    if bank.m != 1:
        raise ConfigError("predict_binary needs a single-class bank; use predict_multiclass")
    return int(class_score(bank, 0, x) >= 0)


def argmax_lowest(scores: np.ndarray) -> int:
    # np.argmax returns the first maximum, i.e. the lowest class index on ties
    return int(np.argmax(scores))


def predict_multiclass(bank: ClauseBank, x) -> int:
    return argmax_lowest(class_scores(bank, x))


_EMPTY_LISTS = np.zeros((0, 0, 0), dtype=np.uint16)
_EMPTY_SIZES = np.zeros((0, 0), dtype=np.int64)


def train_step(bank: ClauseBank, x, y: int, rng: np.random.Generator, index=None) -> list[Flip]:
    """Apply Type I/II feedback for one example and report boundary crossings.

    With a single-class bank ``y`` is the binary target; otherwise it is the
    class index and one other class receives the negative update. When
    ``index`` is given it is kept in sync and its lists provide the clause
    outputs; the resulting TA states are identical either way.
    """
    cfg = bank.config
    limit = 2 if cfg.m == 1 else cfg.m
    if not 0 <= int(y) < limit:
        raise ValueError(f"label {y} outside [0, {limit})")
    x = as_bits(x, cfg.o)
    lits = literal_values(x)
    events = np.empty((2 * cfg.n * cfg.literals, 4), dtype=np.int64)
    n_events = np.zeros(1, dtype=np.int64)
    out_a = np.empty(cfg.n, dtype=np.uint8)
    out_b = np.empty(cfg.n, dtype=np.uint8)
    if index is None:
        lists, sizes, positions = _EMPTY_LISTS, _EMPTY_SIZES, np.zeros((0, 0, 0), np.uint16)
    else:
        lists, sizes, positions = index.lists, index.sizes, index.positions
    K.train_step(bank.states, cfg.N, int(cfg.T), float(cfg.s), bool(cfg.boost_true_positive),
                 lits, int(y), rng, index is not None, lists, sizes, positions,
                 out_a, out_b, events, n_events)
    return [Flip(*map(int, row)) for row in events[: n_events[0]]]
