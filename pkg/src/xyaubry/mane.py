"""Mañé potential and Peierls barrier, on letters and on eventually periodic points.

Letter level
    ``D(a, b)`` is the least reduced weight of a path a -> b with at least one
    edge. It is computed on the reweighted (nonnegative) graph and then
    un-reweighted. The barrier ``H(a, b) = min_c D(a, c) + D(c, b)`` over
    Aubry letters c is cross-checked against the windowed liminf of minimal
    n-edge path weights.

Sequence level
    For a 2-locally constant potential, forcing ``z`` to stay close to ``x``
    pins the first K letters of z to those of x, and forcing ``sigma^n z``
    close to ``y`` pins ``z_n`` to ``y_0``. The cheapest such orbit segment
    costs ``P_K(x) + D(x_K, y_0)`` where ``P_K`` is the reduced Birkhoff sum
    along the prefix of x. Letting K grow along an eventually periodic x
    either diverges (positive reduced period sum) or cycles through one value
    per phase of the period; the reported value is the minimum over phases.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm

import numpy as np

from .lettergraph import minplus_identity, minplus_multiply, minplus_power

DIVERGENCE_TOL = 1e-9
REWEIGHT_TOL = 1e-12


class StaleSubactionError(ValueError):
    """The reweighted graph has a negative edge: the subaction does not match r."""


@dataclass(frozen=True)
class BarrierMatrix:
    closed_form: np.ndarray
    window: tuple[int, int] | None = None
    windowed_tail_min: np.ndarray | None = None
    agreement: float | None = None
    aubry: tuple[int, ...] = ()


@dataclass(frozen=True)
class EventuallyPeriodicPoint:
    """The point ``preperiod + period period period ...`` of the shift space."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(int(i) for i in self.preperiod))
        object.__setattr__(self, "period", tuple(int(i) for i in self.period))
        if not self.period:
            raise ValueError("period must be non-empty")
        if any(i < 0 for i in self.preperiod + self.period):
            raise ValueError("letters must be non-negative node indices")

    @classmethod
    def fixed(cls, letter: int) -> EventuallyPeriodicPoint:
        return cls((), (letter,))

    @classmethod
    def periodic(cls, word) -> EventuallyPeriodicPoint:
        return cls((), tuple(word))

    def letter(self, i: int) -> int:
        k = len(self.preperiod)
        if i < k:
            return self.preperiod[i]
        return self.period[(i - k) % len(self.period)]

    def prefix(self, k: int) -> list[int]:
        return [self.letter(i) for i in range(k)]

    def shift(self, n: int = 1) -> EventuallyPeriodicPoint:
        k = len(self.preperiod)
        if n <= k:
            return EventuallyPeriodicPoint(self.preperiod[n:], self.period)
        j = (n - k) % len(self.period)
        return EventuallyPeriodicPoint((), self.period[j:] + self.period[:j])

    def canonical(self) -> EventuallyPeriodicPoint:
        """Minimal period and shortest preperiod describing the same sequence."""
        per = self.period
        for p in range(1, len(per) + 1):
            if len(per) % p == 0 and per == per[:p] * (len(per) // p):
                per = per[:p]
                break
        pre = list(self.preperiod)
        while pre and pre[-1] == per[-1]:
            pre.pop()
            per = per[-1:] + per[:-1]
        return EventuallyPeriodicPoint(tuple(pre), per)

    def max_letter(self) -> int:
        return max(self.preperiod + self.period)


@dataclass(frozen=True)
class SequenceBarrierResult:
    value: float | None
    divergent: bool
    growth_rate: float
    prefix_trace: tuple[float, ...] = field(repr=False)
    phase_values: tuple[float, ...] = ()
    phase_dependent: bool = False
    self_overlap: bool = False
    overlap_value: float | None = None

    def to_record(self) -> dict:
        rec = {"status": "DIVERGENT" if self.divergent else "FINITE"}
        if self.divergent:
            rec["growth_rate"] = self.growth_rate
        else:
            rec["value"] = self.value
            rec["phase_dependent"] = self.phase_dependent
        rec["self_overlap"] = self.self_overlap
        if self.self_overlap:
            rec["overlap_value"] = self.overlap_value
        return rec


# -- letter level -----------------------------------------------------------


def shortest_paths_nonempty(m: np.ndarray) -> np.ndarray:
    """Least weight of paths with at least one edge, for a nonnegative matrix.

    ``m (x) (I (+) m)^k`` with ``k >= n - 1`` covers every path of at most n
    edges, which suffices for nonnegative weights.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    closure = np.minimum(minplus_identity(n), m)
    reach = 1
    while reach < n - 1:
        closure = minplus_multiply(closure, closure)
        reach *= 2
    return minplus_multiply(m, closure)


def mane_matrix(r_u: np.ndarray, v) -> np.ndarray:
    """Letter-level Mañé potential from the reweighted graph and its subaction."""
    r_u = np.asarray(r_u, dtype=float)
    values = np.asarray(getattr(v, "values", v), dtype=float)
    worst = float(np.min(r_u))
    if worst < -REWEIGHT_TOL:
        raise StaleSubactionError(f"reweighted edge {worst:.3e} < 0")
    dist_u = shortest_paths_nonempty(np.maximum(r_u, 0.0))
    d = dist_u - values[:, None] + values[None, :]
    d.setflags(write=False)
    return d


def barrier_closed_form(mane: np.ndarray, aubry) -> np.ndarray:
    aubry = list(aubry)
    if not aubry:
        raise ValueError("empty Aubry set")
    d = np.asarray(mane)
    return minplus_multiply(d[:, aubry], d[aubry, :])


def default_window(n_nodes: int, multiplier: int = 4) -> tuple[int, int]:
    return n_nodes, multiplier * n_nodes


def windowed_tail_min(r: np.ndarray, window: tuple[int, int]) -> np.ndarray:
    """Entrywise min of ``r^n`` over the second half of ``window = (lo, hi)``."""
    lo, hi = window
    if not 1 <= lo <= hi:
        raise ValueError("window must satisfy 1 <= lo <= hi")
    start = lo + (hi - lo + 1) // 2
    r = np.asarray(r, dtype=float)
    power = minplus_power(r, start)
    best = power.copy()
    for _ in range(start, hi):
        power = minplus_multiply(power, r)
        np.minimum(best, power, out=best)
    return best


def peierls_letter(r: np.ndarray, mane: np.ndarray, aubry_letters,
                   window: tuple[int, int] | None = None) -> BarrierMatrix:
    """Letter-level Peierls barrier, closed form and (optionally) windowed.

    ``window=None`` skips the windowed liminf cross-check.
    """
    aubry = tuple(sorted(int(a) for a in aubry_letters))
    closed = barrier_closed_form(mane, aubry)
    closed.setflags(write=False)
    if window is None:
        return BarrierMatrix(closed_form=closed, aubry=aubry)
    tail = windowed_tail_min(r, window)
    agreement = float(np.max(np.abs(closed - tail)))
    return BarrierMatrix(closed_form=closed, window=tuple(window), windowed_tail_min=tail,
                         agreement=agreement, aubry=aubry)


# -- sequence level ---------------------------------------------------------


def prefix_sums(x: EventuallyPeriodicPoint, r: np.ndarray, k_max: int) -> np.ndarray:
    """``P_K(x) = sum_{i<K} r(x_i, x_{i+1})`` for K = 0..k_max."""
    letters = x.prefix(k_max + 1)
    steps = np.array([r[letters[i], letters[i + 1]] for i in range(k_max)])
    return np.concatenate(([0.0], np.cumsum(steps)))


def period_sum(x: EventuallyPeriodicPoint, r: np.ndarray) -> float:
    per = x.period
    return float(sum(r[per[i], per[(i + 1) % len(per)]] for i in range(len(per))))


def _same_point(a: EventuallyPeriodicPoint, b: EventuallyPeriodicPoint) -> bool:
    return a.canonical() == b.canonical()


def _overlap(x, y, trace):
    # n >= 1 with sigma^n x == y; beyond preperiod + lcm of periods nothing new appears
    horizon = len(x.preperiod) + lcm(len(x.period), len(y.period))
    hits = [n for n in range(1, min(horizon, len(trace) - 1) + 1) if _same_point(x.shift(n), y)]
    if not hits:
        return False, None
    return True, float(min(trace[n] for n in hits))


def _sequence_value(x, y, r, table, check_overlap):
    r = np.asarray(r, dtype=float)
    table = np.asarray(table, dtype=float)
    n_nodes = r.shape[0]
    if max(x.max_letter(), y.max_letter()) >= n_nodes:
        raise ValueError("point uses letters outside the grid")
    pre, per = len(x.preperiod), len(x.period)
    k_max = pre + max(2 * per, lcm(per, len(y.period))) + 1
    trace = prefix_sums(x, r, k_max)
    overlap, overlap_value = _overlap(x, y, trace) if check_overlap else (False, None)
    s = period_sum(x, r)
    if s > DIVERGENCE_TOL:
        return SequenceBarrierResult(value=None, divergent=True, growth_rate=s / per,
                                     prefix_trace=tuple(trace), self_overlap=overlap,
                                     overlap_value=overlap_value)
    y0 = y.letter(0)
    phases = tuple(float(trace[k] + table[x.letter(k), y0]) for k in range(pre, pre + per))
    value = min(phases)
    return SequenceBarrierResult(
        value=value, divergent=False, growth_rate=s / per, prefix_trace=tuple(trace),
        phase_values=phases, phase_dependent=(max(phases) - value) > DIVERGENCE_TOL,
        self_overlap=overlap, overlap_value=overlap_value)


def sequence_mane(x: EventuallyPeriodicPoint, y: EventuallyPeriodicPoint,
                  r: np.ndarray, mane: np.ndarray) -> SequenceBarrierResult:
    """Mañé potential between two eventually periodic grid points.

    When y is a forward shift of x the segment of x itself is admissible for
    small n; that candidate is reported separately as ``overlap_value``.
    """
    return _sequence_value(x, y, r, mane, check_overlap=True)


def sequence_barrier(x: EventuallyPeriodicPoint, y: EventuallyPeriodicPoint,
                     r: np.ndarray, barrier) -> SequenceBarrierResult:
    """Peierls barrier between two eventually periodic grid points."""
    table = barrier.closed_form if isinstance(barrier, BarrierMatrix) else barrier
    return _sequence_value(x, y, r, table, check_overlap=False)


def shift_metric(x: EventuallyPeriodicPoint, y: EventuallyPeriodicPoint, nodes) -> float:
    """``d(x, y) = sum_i |x_i - y_i| / 2^i`` evaluated exactly via the periodic tail."""
    nodes = np.asarray(nodes, dtype=float)
    start = max(len(x.preperiod), len(y.preperiod))
    period = lcm(len(x.period), len(y.period))
    head = sum(abs(nodes[x.letter(i)] - nodes[y.letter(i)]) / 2.0 ** i for i in range(start))
    cyc = sum(abs(nodes[x.letter(i)] - nodes[y.letter(i)]) / 2.0 ** i
              for i in range(start, start + period))
    return float(head + cyc / (1.0 - 2.0 ** (-period)))
