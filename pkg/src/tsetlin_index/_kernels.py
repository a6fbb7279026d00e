"""Numba kernels shared by the direct and the indexed backend.

Array layout used throughout::

    states     (m, n, 2o)  TA states in 1..2N, literal k < o reads x_k,
                           literal k >= o reads not x_{k-o}
    lists      (m, 2o, n)  inclusion lists; slots [0, sizes[i, k]) are live
    sizes      (m, 2o)
    positions  (m, n, 2o)  1-based slot of clause j in lists[i, k], 0 = NA
    stamp      (m, n)      epoch stamp of the last falsification of a clause

Clause ids are class-local; ids below n // 2 have positive polarity.
"""

import numpy as np
from numba import njit

REWARD = 0
PENALTY = 1


@njit(cache=True)
def ta_transition(value, N, signal):
    if value > N:
        if signal == REWARD:
            return value + 1 if value < 2 * N else value
        return value - 1
    if signal == REWARD:
        return value - 1 if value > 1 else value
    return value + 1


@njit(cache=True)
def fill_literals(x, lits):
    o = x.shape[0]
    for k in range(o):
        lits[k] = x[k]
        lits[k + o] = 1 - x[k]


# --- direct evaluation ------------------------------------------------------


@njit(cache=True)
def direct_clause_outputs(team_states, N, lits, out):
    """Scan every literal of every clause of one class, no early exit.

    Returns (literal inspections, clauses evaluating to 0).
    """
    n, L = team_states.shape
    falsified = 0
    for j in range(n):
        ok = 1
        for k in range(L):
            ok &= (team_states[j, k] <= N) | lits[k]
        out[j] = ok
        falsified += 1 - ok
    return n * L, falsified


@njit(cache=True)
def direct_scores(states, N, lits, scores):
    m, n, L = states.shape
    half = n // 2
    falsified = 0
    for i in range(m):
        total = 0
        for j in range(n):
            ok = 1
            for k in range(L):
                ok &= (states[i, j, k] <= N) | lits[k]
            falsified += 1 - ok
            if j < half:
                total += ok
            else:
                total -= ok
        scores[i] = total
    return m * n * L, falsified


@njit(cache=True)
def direct_batch_scores(states, N, X, scores):
    L = states.shape[2]
    lits = np.empty(L, np.uint8)
    visits = 0
    falsified = 0
    for e in range(X.shape[0]):
        fill_literals(X[e], lits)
        v, f = direct_scores(states, N, lits, scores[e])
        visits += v
        falsified += f
    return visits, falsified


# --- inclusion index --------------------------------------------------------


@njit(cache=True)
def index_insert(lists, sizes, positions, i, k, j):
    """Append clause j to lists[i, k]. Returns element accesses, -1 if listed."""
    acc = 1
    if positions[i, j, k] != 0:
        return -1
    size = sizes[i, k] + 1
    acc += 1
    sizes[i, k] = size
    acc += 1
    lists[i, k, size - 1] = j
    acc += 1
    positions[i, j, k] = size
    acc += 1
    return acc


@njit(cache=True)
def index_remove(lists, sizes, positions, i, k, j):
    """Swap-with-last removal of clause j. Returns element accesses, -1 if absent."""
    p = positions[i, j, k]
    acc = 1
    if p == 0:
        return -1
    size = sizes[i, k]
    acc += 1
    last = lists[i, k, size - 1]
    acc += 1
    lists[i, k, p - 1] = last
    acc += 1
    sizes[i, k] = size - 1
    acc += 1
    positions[i, last, k] = p
    acc += 1
    # last == j is possible, so NA is written after the move
    positions[i, j, k] = 0
    acc += 1
    return acc


@njit(cache=True)
def build_lists(states, N, lists, sizes, positions):
    m, n, L = states.shape
    for i in range(m):
        for j in range(n):
            for k in range(L):
                if states[i, j, k] > N:
                    index_insert(lists, sizes, positions, i, k, j)


@njit(cache=True)
def check_index(states, N, lists, sizes, positions):
    """Locate the first broken invariant.

    Returns (code, i, j, k); code 0 means coherent, 1 size out of range,
    2 slot/position disagreement, 3 listed but excluded, 4 included but not
    listed, 5 position entry without a matching list slot.
    """
    m, n, L = states.shape
    listed = 0
    for i in range(m):
        for k in range(L):
            size = sizes[i, k]
            if size < 0 or size > n:
                return 1, i, -1, k
            listed += size
            for p in range(size):
                j = lists[i, k, p]
                if j < 0 or j >= n or positions[i, j, k] != p + 1:
                    return 2, i, j, k
                if states[i, j, k] <= N:
                    return 3, i, j, k
    nonzero = 0
    for i in range(m):
        for j in range(n):
            for k in range(L):
                if positions[i, j, k] != 0:
                    nonzero += 1
                    p = positions[i, j, k]
                    if p > sizes[i, k] or lists[i, k, p - 1] != j:
                        return 5, i, j, k
                elif states[i, j, k] > N:
                    return 4, i, j, k
    if nonzero != listed:
        return 2, -1, -1, -1
    return 0, -1, -1, -1


@njit(cache=True)
def indexed_clause_outputs(lists, sizes, i, lits, out):
    """Clause outputs of class i by falsification; out doubles as visited set."""
    L = lists.shape[1]
    out[:] = 1
    visits = 0
    falsified = 0
    for k in range(L):
        if lits[k] == 0:
            for p in range(sizes[i, k]):
                j = lists[i, k, p]
                visits += 1
                if out[j]:
                    out[j] = 0
                    falsified += 1
    return visits, falsified


@njit(cache=True)
def indexed_scores(lists, sizes, stamp, epoch, half, lits, scores):
    m, L = sizes.shape
    epoch[0] += 1
    e = epoch[0]
    visits = 0
    falsified = 0
    for i in range(m):
        f_pos = 0
        f_neg = 0
        for k in range(L):
            if lits[k] == 0:
                for p in range(sizes[i, k]):
                    j = lists[i, k, p]
                    visits += 1
                    if stamp[i, j] != e:
                        stamp[i, j] = e
                        if j < half:
                            f_pos += 1
                        else:
                            f_neg += 1
        falsified += f_pos + f_neg
        scores[i] = f_neg - f_pos
    return visits, falsified


@njit(cache=True)
def indexed_batch_scores(lists, sizes, stamp, epoch, half, X, scores):
    L = sizes.shape[1]
    lits = np.empty(L, np.uint8)
    visits = 0
    falsified = 0
    for e in range(X.shape[0]):
        fill_literals(X[e], lits)
        v, f = indexed_scores(lists, sizes, stamp, epoch, half, lits, scores[e])
        visits += v
        falsified += f
    return visits, falsified


# --- learning ---------------------------------------------------------------


@njit(cache=True)
def _push(states, N, i, j, k, toward_include, indexed, lists, sizes, positions,
          events, n_events):
    value = states[i, j, k]
    included = value > N
    if toward_include:
        signal = REWARD if included else PENALTY
    else:
        signal = PENALTY if included else REWARD
    new = ta_transition(value, N, signal)
    states[i, j, k] = new
    now = new > N
    if now != included:
        if indexed:
            if now:
                index_insert(lists, sizes, positions, i, k, j)
            else:
                index_remove(lists, sizes, positions, i, k, j)
        c = n_events[0]
        if c < events.shape[0]:
            events[c, 0] = i
            events[c, 1] = j
            events[c, 2] = k
            events[c, 3] = 1 if now else -1
        n_events[0] = c + 1


@njit(cache=True)
def _type_i(states, N, s, boost, i, j, c, lits, rng, indexed, lists, sizes,
            positions, events, n_events):
    L = states.shape[2]
    p_include = (s - 1.0) / s
    p_exclude = 1.0 / s
    for k in range(L):
        if c == 1 and lits[k] == 1:
            if boost or rng.random() < p_include:
                _push(states, N, i, j, k, True, indexed, lists, sizes,
                      positions, events, n_events)
        elif rng.random() < p_exclude:
            _push(states, N, i, j, k, False, indexed, lists, sizes,
                  positions, events, n_events)


@njit(cache=True)
def _type_ii(states, N, i, j, c, lits, indexed, lists, sizes, positions,
             events, n_events):
    if c == 0:
        return
    L = states.shape[2]
    for k in range(L):
        if lits[k] == 0 and states[i, j, k] <= N:
            _push(states, N, i, j, k, True, indexed, lists, sizes, positions,
                  events, n_events)


@njit(cache=True)
def _feedback_class(states, N, s, boost, i, out, p, positive_gets_type_i, lits,
                    rng, indexed, lists, sizes, positions, events, n_events):
    n = states.shape[1]
    half = n // 2
    for j in range(n):
        if rng.random() < p:
            if (j < half) == positive_gets_type_i:
                _type_i(states, N, s, boost, i, j, out[j], lits, rng, indexed,
                        lists, sizes, positions, events, n_events)
            else:
                _type_ii(states, N, i, j, out[j], lits, indexed, lists, sizes,
                         positions, events, n_events)


@njit(cache=True)
def _class_outputs(states, N, i, lits, indexed, lists, sizes, out):
    if indexed:
        v, _ = indexed_clause_outputs(lists, sizes, i, lits, out)
    else:
        v, _ = direct_clause_outputs(states[i], N, lits, out)
    half = out.shape[0] // 2
    total = 0
    for j in range(out.shape[0]):
        if j < half:
            total += out[j]
        else:
            total -= out[j]
    return v, total


@njit(cache=True)
def train_step(states, N, T, s, boost, lits, y, rng, indexed, lists, sizes,
               positions, out_a, out_b, events, n_events):
    """One supervised update. Returns literal visits spent on clause outputs.

    With m == 1 the label is binary (y in {0, 1}); otherwise one negative
    class is drawn uniformly among the m - 1 others.
    """
    m = states.shape[0]
    if m == 1:
        visits, v = _class_outputs(states, N, 0, lits, indexed, lists, sizes,
                                   out_a)
        v = min(max(v, -T), T)
        if y == 1:
            _feedback_class(states, N, s, boost, 0, out_a, (T - v) / (2.0 * T),
                            True, lits, rng, indexed, lists, sizes, positions,
                            events, n_events)
        else:
            _feedback_class(states, N, s, boost, 0, out_a, (T + v) / (2.0 * T),
                            False, lits, rng, indexed, lists, sizes, positions,
                            events, n_events)
        return visits

    q = rng.integers(0, m - 1)
    if q >= y:
        q += 1
    va, vy = _class_outputs(states, N, y, lits, indexed, lists, sizes, out_a)
    vb, vq = _class_outputs(states, N, q, lits, indexed, lists, sizes, out_b)
    vy = min(max(vy, -T), T)
    vq = min(max(vq, -T), T)
    _feedback_class(states, N, s, boost, y, out_a, (T - vy) / (2.0 * T), True,
                    lits, rng, indexed, lists, sizes, positions, events, n_events)
    _feedback_class(states, N, s, boost, q, out_b, (T + vq) / (2.0 * T), False,
                    lits, rng, indexed, lists, sizes, positions, events, n_events)
    return va + vb


@njit(cache=True)
def fit_epoch(states, N, T, s, boost, X, Y, order, rng, indexed, lists, sizes,
              positions):
    n = states.shape[1]
    L = states.shape[2]
    lits = np.empty(L, np.uint8)
    out_a = np.empty(n, np.uint8)
    out_b = np.empty(n, np.uint8)
    events = np.empty((0, 4), np.int64)
    n_events = np.zeros(1, np.int64)
    visits = 0
    for e in order:
        fill_literals(X[e], lits)
        visits += train_step(states, N, T, s, boost, lits, Y[e], rng, indexed,
                             lists, sizes, positions, out_a, out_b, events,
                             n_events)
    return visits, n_events[0]
