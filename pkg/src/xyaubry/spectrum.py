"""Optimal ergodic average on the letter graph, three ways.

* :func:`karp_min_mean_cycle` -- exact minimum cycle mean of the weight
  matrix (Karp's recurrence) with a witness cycle.
* :func:`diagonal_min` -- the minimum of g(a) = h(a, a), scanned on the grid
  and refined by golden-section search inside each cell. Under the twist
  condition this equals the optimal average.
* :func:`jenkinson_estimate` -- minimal n-step path means ``min W^n / n``,
  whose liminf is the optimal average.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .lettergraph import build_graph, cycle_weight, minplus_vecmat
from .potential import PotentialSpec, _raw_eval

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
M_SET_TOL = 1e-9
M_SET_MERGE = 1e-6
INTERVAL_FRACTION = 0.25


class KarpConsistencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiagonalMinimum:
    grid_min: float
    grid_argmin: tuple[int, ...]
    h_star: float
    m_set: tuple[float, ...]
    m_intervals: tuple[tuple[float, float], ...] = ()

    @property
    def degenerate(self) -> bool:
        return bool(self.m_intervals)

    def distance(self, a) -> np.ndarray | float:
        """Distance from ``a`` to the minimizer set m."""
        return distance_to_set(a, self.m_set, self.m_intervals)


@dataclass(frozen=True)
class SpectralResult:
    alpha_grid: float
    witness_cycle: tuple[int, ...]
    alpha_diag: float
    h_star: float
    m_set: tuple[float, ...]
    m_intervals: tuple[tuple[float, float], ...]
    karp_value: float
    nodes: np.ndarray = field(repr=False)

    @property
    def agreement_gap(self) -> float:
        return self.alpha_grid - self.alpha_diag

    @property
    def witness_abscissae(self) -> tuple[float, ...]:
        return tuple(float(self.nodes[i]) for i in self.witness_cycle)

    def distance_to_m(self, a):
        return distance_to_set(a, self.m_set, self.m_intervals)


@dataclass(frozen=True)
class JenkinsonEstimate:
    per_n: tuple[tuple[int, float], ...]
    liminf_estimate: float


def distance_to_set(a, points, intervals=()):
    a = np.asarray(a, dtype=float)
    best = np.full(a.shape, np.inf)
    for p in points:
        best = np.minimum(best, np.abs(a - p))
    for lo, hi in intervals:
        best = np.minimum(best, np.maximum(0.0, np.maximum(lo - a, a - hi)))
    return float(best) if best.ndim == 0 else best


# -- Karp -------------------------------------------------------------------


def _canonical(cycle) -> tuple[int, ...]:
    cycle = list(cycle)
    k = cycle.index(min(cycle))
    return tuple(cycle[k:] + cycle[:k])


def _walk_cycles(walk):
    """Simple cycles obtained by peeling loops off a walk with a stack.

    The mean of any closed sub-walk is a weighted average of the means of
    these simple cycles, so the minimum is always among them.
    """
    stack, where, out = [], {}, []
    for v in walk:
        if v in where:
            start = where[v]
            out.append(tuple(stack[start:]))
            for u in stack[start + 1:]:
                del where[u]
            del stack[start + 1:]
        else:
            where[v] = len(stack)
            stack.append(v)
    return out


def karp_min_mean_cycle(w) -> tuple[float, tuple[int, ...], float]:
    """Minimum cycle mean of a complete weighted digraph.

    Returns ``(alpha, witness, karp_value)``. ``karp_value`` is Karp's
    ``min_v max_k (d_n(v) - d_k(v)) / (n - k)``; ``alpha`` is the mean of
    the reported witness recomputed from ``w``, so the witness attains it
    exactly. Among cycles of minimal mean the witness is the one whose
    smallest node index is smallest, then the shortest.
    """
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    if w.ndim != 2 or w.shape[1] != n or n == 0:
        raise ValueError("weight matrix must be square and non-empty")
    if not np.all(np.isfinite(w)):
        raise ValueError("weight matrix must be finite")
    d = np.empty((n + 1, n))
    pred = np.zeros((n + 1, n), dtype=np.int64)
    d[0] = 0.0
    cols = np.arange(n)
    for k in range(1, n + 1):
        tmp = d[k - 1][:, None] + w
        pred[k] = np.argmin(tmp, axis=0)
        d[k] = tmp[pred[k], cols]
    ks = np.arange(n)[:, None]
    ratios = (d[n][None, :] - d[:n]) / (n - ks)
    karp_value = float(np.min(np.max(ratios, axis=0)))
    v_star = int(np.argmin(np.max(ratios, axis=0)))

    walk = [v_star]
    for k in range(n, 0, -1):
        walk.append(int(pred[k][walk[-1]]))
    walk.reverse()

    candidates = {(_canonical(c)) for c in _walk_cycles(walk)}
    candidates.update((i,) for i in range(n))
    means = {c: cycle_weight(w, c) / len(c) for c in candidates}
    alpha = min(means.values())
    witness = min((c for c, m in means.items() if m == alpha), key=lambda c: (c[0], len(c), c))
    scale = max(1.0, float(np.max(np.abs(w))))
    if abs(alpha - karp_value) > 1e-9 * scale:
        raise KarpConsistencyError(
            f"witness mean {alpha!r} disagrees with Karp value {karp_value!r}")
    return alpha, witness, karp_value


# -- diagonal ---------------------------------------------------------------


def golden_section(f, lo: float, hi: float, iters: int) -> tuple[float, float]:
    """Golden-section search for a minimum of ``f`` on ``[lo, hi]``.

    Returns the best point seen (endpoints included) and its value.
    """
    best_x, best_f = lo, f(lo)
    fh = f(hi)
    if fh < best_f:
        best_x, best_f = hi, fh
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    for x, fx in ((c, fc), (d, fd)):
        if fx < best_f:
            best_x, best_f = x, fx
    return best_x, best_f


def _merge_points(points, tol):
    out = []
    for p in sorted(points):
        if not out or p - out[-1] > tol:
            out.append(p)
    return out


def diagonal_min(spec: PotentialSpec, n_cells: int, refine_iters: int = 60) -> DiagonalMinimum:
    """Grid scan of g(a) = h(a, a) plus golden-section refinement.

    Every grid local minimum is refined inside the two cells around it. The
    minimizer set collects refined points within ``1e-9`` of the best value,
    merged at ``1e-6``. When more than a quarter of the grid nodes attain the
    minimum the set is reported as intervals of consecutive qualifying nodes.
    """
    if refine_iters < 0:
        raise ValueError("refine_iters must be >= 0")
    a = np.arange(n_cells + 1) / n_cells
    g = np.asarray(_raw_eval(spec, a, a), dtype=float)
    grid_min = float(np.min(g))
    grid_argmin = tuple(int(i) for i in np.flatnonzero(g == grid_min))

    def gf(t):
        return float(_raw_eval(spec, t, t))

    n = len(a)
    left = np.concatenate(([np.inf], g[:-1]))
    right = np.concatenate((g[1:], [np.inf]))
    local = np.flatnonzero((g <= left) & (g <= right))
    refined = []
    for i in local:
        lo, hi = a[max(i - 1, 0)], a[min(i + 1, n - 1)]
        if refine_iters > 0:
            x, fx = golden_section(gf, float(lo), float(hi), refine_iters)
            if not fx < g[i]:
                x, fx = float(a[i]), float(g[i])
        else:
            x, fx = float(a[i]), float(g[i])
        refined.append((x, fx))
    h_star = min(min(fx for _, fx in refined), grid_min)

    qualifying = np.flatnonzero(g <= h_star + M_SET_TOL)
    if len(qualifying) > INTERVAL_FRACTION * n:
        intervals = []
        start = prev = int(qualifying[0])
        for i in qualifying[1:]:
            if i != prev + 1:
                intervals.append((float(a[start]), float(a[prev])))
                start = int(i)
            prev = int(i)
        intervals.append((float(a[start]), float(a[prev])))
        return DiagonalMinimum(grid_min, grid_argmin, h_star,
                               tuple(float(a[i]) for i in qualifying), tuple(intervals))
    pts = [x for x, fx in refined if fx <= h_star + M_SET_TOL]
    return DiagonalMinimum(grid_min, grid_argmin, h_star, tuple(_merge_points(pts, M_SET_MERGE)))


# -- Jenkinson windowed averages ------------------------------------------


def jenkinson_estimate(w, n_max: int) -> JenkinsonEstimate:
    """Minimal n-edge path mean for n = 1..n_max.

    ``per_n(n) = min over all n-edge paths of total weight / n``, computed as
    the min-plus product of the zero row vector with ``w^n``. The liminf
    proxy is the minimum over the second half of the window.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    w = np.asarray(w, dtype=float)
    d = np.zeros(w.shape[0])
    per_n = []
    for n in range(1, n_max + 1):
        d = minplus_vecmat(d, w)
        per_n.append((n, float(np.min(d)) / n))
    tail = per_n[n_max // 2:]
    return JenkinsonEstimate(tuple(per_n), min(m for _, m in tail))


# -- combined ---------------------------------------------------------------


def spectral_analysis(spec: PotentialSpec, n_cells: int, refine_iters: int = 60,
                      w: np.ndarray | None = None) -> SpectralResult:
    if w is None:
        _, w = build_graph(spec, n_cells)
    alpha, witness, karp_value = karp_min_mean_cycle(w)
    dm = diagonal_min(spec, n_cells, refine_iters)
    return SpectralResult(
        alpha_grid=alpha, witness_cycle=witness, alpha_diag=dm.grid_min, h_star=dm.h_star,
        m_set=dm.m_set, m_intervals=dm.m_intervals, karp_value=karp_value,
        nodes=np.arange(n_cells + 1) / n_cells,
    )
