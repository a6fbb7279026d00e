"""Falsification index over the clauses of a bank.

For every (class, literal) pair the index keeps the clauses that include the
literal. A clause is false as soon as any of its included literals is false,
so scoring an input only needs the lists of the false literals. A position
matrix records where each clause sits in each list, which makes insertion
and deletion constant time.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from . import _kernels as K
from .errors import DatasetFormatError, IntegrityError, ShapeError
from .tm_core import ClauseBank, Flip, TMConfig, argmax_lowest, as_bits, literal_values


@dataclass
class WorkCounters:
    literal_visits: int = 0
    clauses_falsified: int = 0

    def add(self, visits: int, falsified: int) -> None:
        self.literal_visits += int(visits)
        self.clauses_falsified += int(falsified)


def _id_dtype(n: int):
    return np.uint16 if n <= np.iinfo(np.uint16).max else np.int32


class InclusionIndex:
    """Inclusion lists ``lists[i, k, :sizes[i, k]]`` plus the position matrix.

    ``positions[i, j, k]`` is the 1-based slot of clause ``j`` in
    ``lists[i, k]`` or 0 when the clause does not include literal ``k``.
    ``access_count`` accumulates element reads/writes done by insert/remove.
    """

    _INTEGRITY_CODES = {
        1: "list size out of range",
        2: "list slot and position matrix disagree",
        3: "clause listed but its TA excludes the literal",
        4: "clause includes the literal but is not listed",
        5: "position matrix entry without a matching list slot",
    }

    def __init__(self, m: int, n: int, literals: int):
        if n % 2:
            raise ShapeError(f"n must be even, got {n}")
        self.m, self.n, self.literals = m, n, literals
        dtype = _id_dtype(n)
        self.lists = np.zeros((m, literals, n), dtype=dtype)
        self.sizes = np.zeros((m, literals), dtype=np.int64)
        self.positions = np.zeros((m, n, literals), dtype=dtype)
        # private scoring arena, see indexed_class_scores
        self._stamp = np.zeros((m, n), dtype=np.int64)
        self._epoch = np.zeros(1, dtype=np.int64)
        self.access_count = 0

    @property
    def o(self) -> int:
        return self.literals // 2

    def members(self, i: int, k: int) -> list[int]:
        return self.lists[i, k, : self.sizes[i, k]].tolist()

    def as_sets(self) -> list[list[frozenset]]:
        return [[frozenset(self.members(i, k)) for k in range(self.literals)] for i in range(self.m)]

    def position(self, i: int, j: int, k: int) -> int | None:
        p = int(self.positions[i, j, k])
        return p or None

    def verify(self, bank: ClauseBank) -> None:
        """Raise IntegrityError at the first violated invariant."""
        if (bank.m, bank.n, 2 * bank.o) != (self.m, self.n, self.literals):
            raise IntegrityError("index shape does not match bank")
        code, i, j, k = K.check_index(bank.states, bank.N, self.lists, self.sizes, self.positions)
        if code:
            raise IntegrityError(f"{self._INTEGRITY_CODES[code]} at class={i} clause={j} literal={k}")

    def copy(self) -> "InclusionIndex":
        other = InclusionIndex(self.m, self.n, self.literals)
        other.lists[...] = self.lists
        other.sizes[...] = self.sizes
        other.positions[...] = self.positions
        return other

    def scoring_view(self) -> "InclusionIndex":
        """Share the lists but own a fresh stamp arena, for concurrent readers."""
        other = object.__new__(InclusionIndex)
        other.__dict__.update(self.__dict__)
        other._stamp = np.zeros_like(self._stamp)
        other._epoch = np.zeros(1, dtype=np.int64)
        return other


def build_index(bank: ClauseBank) -> InclusionIndex:
    idx = InclusionIndex(bank.m, bank.n, 2 * bank.o)
    K.build_lists(bank.states, bank.N, idx.lists, idx.sizes, idx.positions)
    return idx


def index_insert(idx: InclusionIndex, i: int, k: int, j: int) -> int:
    """Append clause j to the list of literal k in class i; returns the slot."""
    acc = K.index_insert(idx.lists, idx.sizes, idx.positions, i, k, j)
    if acc < 0:
        raise IntegrityError(f"clause {j} already in list class={i} literal={k}")
    idx.access_count += acc
    return int(idx.sizes[i, k])


def index_remove(idx: InclusionIndex, i: int, k: int, j: int) -> None:
    acc = K.index_remove(idx.lists, idx.sizes, idx.positions, i, k, j)
    if acc < 0:
        raise IntegrityError(f"clause {j} not in list class={i} literal={k}")
    idx.access_count += acc


def apply_flips(idx: InclusionIndex, events: Iterable[Flip]) -> None:
    for cls, clause, literal, direction in events:
        if direction > 0:
            index_insert(idx, cls, literal, clause)
        else:
            index_remove(idx, cls, literal, clause)


def _lits(idx: InclusionIndex, x) -> np.ndarray:
    return literal_values(as_bits(x, idx.o))


def indexed_class_scores(idx: InclusionIndex, x, counters: WorkCounters | None = None) -> np.ndarray:
    """Class scores from the falsified clause sets of each class.

    Every clause starts out true; each clause fetched from the list of a
    false literal is falsified once (repeat fetches are ignored), and the
    score is the number of falsified negative clauses minus the number of
    falsified positive ones.
    """
    lits = _lits(idx, x)
    scores = np.empty(idx.m, dtype=np.int64)
    visits, falsified = K.indexed_scores(idx.lists, idx.sizes, idx._stamp, idx._epoch,
                                         idx.n // 2, lits, scores)
    if counters is not None:
        counters.add(visits, falsified)
    return scores


def indexed_clause_outputs(idx: InclusionIndex, i: int, x, counters: WorkCounters | None = None) -> np.ndarray:
    out = np.empty(idx.n, dtype=np.uint8)
    visits, falsified = K.indexed_clause_outputs(idx.lists, idx.sizes, i, _lits(idx, x), out)
    if counters is not None:
        counters.add(visits, falsified)
    return out


def indexed_predict(idx: InclusionIndex, x, counters: WorkCounters | None = None) -> int:
    return argmax_lowest(indexed_class_scores(idx, x, counters))


class MemoryEstimate(NamedTuple):
    tm_bytes: int
    index_bytes: int
    total: int
    saturated: bool = False


_INT64_MAX = np.iinfo(np.int64).max


def estimate_memory(m: int, n: int, o: int) -> MemoryEstimate:
    """Bytes for 8-bit TAs plus two 2-byte index tables of m*o rows by n."""
    if min(m, n, o) < 1:
        raise ValueError("dimensions must be positive")
    tm = 2 * m * n * o
    index = 2 * tm
    total = tm + index
    if total > _INT64_MAX:
        return MemoryEstimate(min(tm, _INT64_MAX), min(index, _INT64_MAX), _INT64_MAX, True)
    return MemoryEstimate(tm, index, total)


# --- bank files -------------------------------------------------------------

BANK_MAGIC = b"TMBK"
BANK_VERSION = 1
_BANK_HEADER = struct.Struct("<4sHIIII")


def save_bank(path, bank: ClauseBank) -> None:
    """Header {magic, version, m, n, o, N} then little-endian states (class, clause, literal).

    States are one byte wide when 2N fits in a byte, two bytes otherwise.
    """
    cfg = bank.config
    header = _BANK_HEADER.pack(BANK_MAGIC, BANK_VERSION, cfg.m, cfg.n, cfg.o, cfg.N)
    with open(path, "wb") as f:
        f.write(header)
        f.write(bank.states.astype(np.dtype(cfg.state_dtype).newbyteorder("<"), copy=False).tobytes())


def load_bank(path, **config) -> tuple[ClauseBank, InclusionIndex]:
    """Read a bank file and rebuild its index; ``config`` overrides T, s, seed..."""
    data = Path(path).read_bytes()
    if len(data) < _BANK_HEADER.size:
        raise DatasetFormatError(f"{path}: truncated header")
    magic, version, m, n, o, N = _BANK_HEADER.unpack_from(data)
    if magic != BANK_MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}")
    if version != BANK_VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    cfg = TMConfig(m=m, n=n, o=o, N=N, **config)
    dtype = np.dtype(cfg.state_dtype).newbyteorder("<")
    count = m * n * 2 * o
    body = data[_BANK_HEADER.size:]
    if len(body) != count * dtype.itemsize:
        raise DatasetFormatError(f"{path}: expected {count} states, file holds {len(body) // dtype.itemsize}")
    states = np.frombuffer(body, dtype=dtype).reshape(m, n, 2 * o)
    bank = ClauseBank(cfg, states)
    return bank, build_index(bank)
