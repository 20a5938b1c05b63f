"""Grid discretization of the alphabet [0, 1] and min-plus kernels.

The letter graph on ``N + 1`` equally spaced nodes is the complete digraph
with edge weight ``w[a, b] = h(a, b)`` (self-loops included). A closed walk
of length n is a period-n configuration of the shift, and its weight is the
Birkhoff sum of the potential along it.

Min-plus products use ``+inf`` as the additive zero: it absorbs under
addition with finite numbers and loses every min. ``-inf`` and NaN are
rejected. Every output entry is a min over the same finite set of sums
regardless of how rows are blocked, so products are bit-identical for any
blocking or thread schedule.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .potential import PotentialSpec, _raw_eval

INF = np.inf
MEMORY_BUDGET = 1 << 29  # bytes available to minplus_power_trace
_BLOCK_ELEMS = 1 << 22


class MemoryBudgetError(ValueError):
    pass


@dataclass(frozen=True)
class LetterGrid:
    n_cells: int
    nodes: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)

    @property
    def size(self) -> int:
        return self.n_cells + 1

    @property
    def spacing(self) -> float:
        return 1.0 / self.n_cells

    def nearest(self, a: float) -> int:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"abscissa {a} outside [0, 1]")
        return int(np.argmin(np.abs(self.nodes - a)))


def make_grid(n_cells: int) -> LetterGrid:
    if int(n_cells) != n_cells or n_cells < 1:
        raise ValueError("n_cells must be a positive integer")
    n_cells = int(n_cells)
    return LetterGrid(n_cells, np.arange(n_cells + 1) / n_cells)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def build_graph(spec: PotentialSpec, n_cells: int) -> tuple[LetterGrid, np.ndarray]:
    """Grid and weight matrix ``w[i, j] = h(i/N, j/N)``."""
    grid = make_grid(n_cells)
    a = grid.nodes
    w = np.asarray(_raw_eval(spec, a[:, None], a[None, :]), dtype=float)
    w = np.array(np.broadcast_to(w, (grid.size, grid.size)))
    if not np.all(np.isfinite(w)):
        raise ValueError("potential produced non-finite weights")
    return grid, _frozen(w)


def reduce(w: np.ndarray, alpha: float) -> np.ndarray:
    """Reduced weights ``w - alpha``."""
    if not np.isfinite(alpha):
        raise ValueError("alpha must be finite")
    return _frozen(np.asarray(w, dtype=float) - alpha)


def _check_minplus_operand(m):
    m = np.asarray(m, dtype=float)
    if np.isnan(m).any() or np.isneginf(m).any():
        raise ValueError("min-plus operands must not contain NaN or -inf")
    return m


def minplus_identity(n: int) -> np.ndarray:
    e = np.full((n, n), INF)
    np.fill_diagonal(e, 0.0)
    return e


def minplus_multiply(a, b) -> np.ndarray:
    """``out[i, j] = min_k a[i, k] + b[k, j]``."""
    a = _check_minplus_operand(a)
    b = _check_minplus_operand(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"non-conformable shapes {a.shape} and {b.shape}")
    n, k = a.shape
    m = b.shape[1]
    out = np.empty((n, m))
    rows = max(1, _BLOCK_ELEMS // max(1, k * m))
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        out[start:stop] = np.min(a[start:stop, :, None] + b[None, :, :], axis=1)
    return out


def minplus_vecmat(v, m) -> np.ndarray:
    """``out[j] = min_i v[i] + m[i, j]`` (a row vector times a matrix)."""
    v = np.asarray(v, dtype=float)
    m = np.asarray(m, dtype=float)
    return np.min(v[:, None] + m, axis=0)


def minplus_matvec(m, v) -> np.ndarray:
    """``out[i] = min_j m[i, j] + v[j]``."""
    v = np.asarray(v, dtype=float)
    m = np.asarray(m, dtype=float)
    return np.min(m + v[None, :], axis=1)


def minplus_power_trace(m, n_max: int, memory_budget: int = MEMORY_BUDGET) -> np.ndarray:
    """Stack of min-plus powers ``m^1 .. m^n_max`` (shape ``(n_max, n, n)``)."""
    m = _check_minplus_operand(m)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    need = n_max * m.shape[0] * m.shape[1] * 8
    if need > memory_budget:
        raise MemoryBudgetError(
            f"power trace needs {need} bytes, budget is {memory_budget}")
    out = np.empty((n_max,) + m.shape)
    out[0] = m
    for k in range(1, n_max):
        out[k] = minplus_multiply(out[k - 1], m)
    return out


def minplus_power(m, n: int) -> np.ndarray:
    """``m^n`` by repeated squaring (n >= 1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = _check_minplus_operand(m)
    result = None
    base = m
    while n:
        if n & 1:
            result = base if result is None else minplus_multiply(result, base)
        n >>= 1
        if n:
            base = minplus_multiply(base, base)
    return result


def walk_weight(w: np.ndarray, walk) -> float:
    """Sum of ``w`` along consecutive letters of ``walk``."""
    walk = list(walk)
    return float(sum(w[walk[i], walk[i + 1]] for i in range(len(walk) - 1)))


def cycle_weight(w: np.ndarray, cycle) -> float:
    cycle = list(cycle)
    return walk_weight(w, cycle + cycle[:1])


def write_matrix_csv(path, m, header: str | None = None) -> Path:
    path = Path(path)
    kw = {"header": header, "comments": ""} if header else {}
    np.savetxt(path, np.asarray(m, dtype=float), delimiter=",", fmt="%.17g", **kw)
    return path


def read_matrix_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)
