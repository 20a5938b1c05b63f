"""Discrete calibrated subactions on the letter graph.

With reduced weights ``r = w - alpha`` (minimum cycle mean zero), a
calibrated subaction is a grid function ``v`` with

    v(b) = min_a r(a, b) + v(a)        for every letter b,

i.e. a min-plus eigenvector for eigenvalue 0. It satisfies the subaction
inequality ``v(b) - v(a) <= r(a, b)`` on every edge, so the reweighted graph
``r(a, b) + v(a) - v(b)`` is nonnegative and has the same cycle sums as r.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import connected_components

from .lettergraph import minplus_identity, minplus_multiply, minplus_vecmat

ZERO_SNAP = 1e-12
CALIBRATION_TOL = 1e-9


class SubactionConvergenceError(RuntimeError):
    """Value iteration did not settle; usually alpha is not the exact cycle mean."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"value iteration did not converge after {iterations} sweeps "
            f"(calibration residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class Subaction:
    values: np.ndarray
    alpha: float
    residual: float
    iterations: int
    critical_nodes: tuple[int, ...]
    alt_sup_difference: float | None = None
    method: str = "value_iteration"


@dataclass(frozen=True)
class CalibrationReport:
    per_node: np.ndarray
    max_residual: float
    max_inequality_violation: float

    @property
    def calibrated(self) -> bool:
        return (self.max_residual <= CALIBRATION_TOL
                and self.max_inequality_violation <= CALIBRATION_TOL)


def bellman_operator(r: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``(T v)(b) = min_a r(a, b) + v(a)``."""
    return minplus_vecmat(v, r)


def _iterate(r, v0, tol, max_iters):
    v = v0 - np.min(v0)
    residual = np.inf
    for it in range(1, max_iters + 1):
        tv = bellman_operator(r, v)
        residual = float(np.max(np.abs(tv - v)))
        if residual < tol:
            return tv, residual, it
        v = tv - np.min(tv)
    raise SubactionConvergenceError(residual, max_iters)


def _path_closure(r):
    # least weight of paths with >= 1 edge; exact when r has no negative cycle
    n = r.shape[0]
    closure = np.minimum(minplus_identity(n), r)
    reach = 1
    while reach < n - 1:
        closure = minplus_multiply(closure, closure)
        reach *= 2
    return minplus_multiply(r, closure)


def _star_eigenvector(r, tol):
    """Min over critical c of the closure rows ``D(c, .)``; calibrated at exact alpha."""
    d = _path_closure(r)
    loops = np.diag(d)
    slack = ZERO_SNAP * r.shape[0] * max(1.0, float(np.max(np.abs(r))))
    crit = np.flatnonzero(np.abs(loops) <= slack)
    if not crit.size or np.min(loops) < -slack:
        return None, np.inf
    v = np.min(d[crit], axis=0)
    v = v - np.min(v)
    residual = float(np.max(np.abs(bellman_operator(r, v) - v)))
    return v, residual


def _solve(r, v0, tol, max_iters):
    try:
        v, residual, iters = _iterate(r, v0, tol, max_iters)
        return v, residual, iters, "value_iteration"
    except SubactionConvergenceError as err:
        # plain iteration cycles when every critical cycle is longer than one edge
        v, residual = _star_eigenvector(r, tol)
        if residual >= tol:
            raise SubactionConvergenceError(min(err.residual, residual), max_iters) from None
        return v, residual, max_iters, "path_closure"


def critical_nodes(r: np.ndarray, v: np.ndarray, tol: float = ZERO_SNAP) -> tuple[int, ...]:
    """Letters lying on a cycle of calibrated (zero reweighted) edges."""
    ru = np.asarray(r) + v[:, None] - v[None, :]
    tight = np.abs(ru) <= tol * max(1.0, float(np.max(np.abs(r))))
    n_comp, labels = connected_components(tight.astype(np.int8), directed=True,
                                          connection="strong")
    sizes = np.bincount(labels, minlength=n_comp)
    on_cycle = (sizes[labels] > 1) | np.diag(tight)
    return tuple(int(i) for i in np.flatnonzero(on_cycle))


def solve_subaction(r, tol: float = 1e-12, max_iters: int | None = None,
                    second_init: bool = False, anchor=None,
                    alpha: float = float("nan")) -> Subaction:
    """Value iteration for the calibrated subaction of reduced weights ``r``.

    Starting from ``v = 0`` the sweep ``v <- T v - min(T v)`` is repeated
    until the unnormalized calibration residual ``max |T v - v|`` drops below
    ``tol``. At a wrong alpha that residual stays near the error in alpha,
    so the solver raises :class:`SubactionConvergenceError`.

    Plain iteration cycles forever when the critical cycles all have length
    > 1 (e.g. a single zero-mean 2-cycle). If the sweep budget runs out, the
    fallback builds ``v(b) = min_c D(c, b)`` over critical letters c from the
    shortest-path closure D of r, and accepts it under the same residual
    test; ``Subaction.method`` records which route was taken.

    The result is shifted so that its minimum over ``anchor`` (default: the
    critical letters) is zero. With ``second_init`` a second solve from
    ``v0 = row-min of r`` is run and the sup-distance between the two
    normalized solutions is recorded; subactions need not be unique.
    """
    r = np.asarray(r, dtype=float)
    n = r.shape[0]
    if r.ndim != 2 or r.shape[1] != n:
        raise ValueError("reduced matrix must be square")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters is None:
        max_iters = 64 * n
    v, residual, iters, method = _solve(r, np.zeros(n), tol, max_iters)
    crit = critical_nodes(r, v)
    anchor = crit if anchor is None else tuple(anchor)
    if anchor:
        v = v - np.min(v[list(anchor)])
    alt = None
    if second_init:
        v2, _, _, _ = _solve(r, np.min(r, axis=1), tol, max_iters)
        if anchor:
            v2 = v2 - np.min(v2[list(anchor)])
        alt = float(np.max(np.abs(v2 - v)))
    v.setflags(write=False)
    return Subaction(values=v, alpha=float(alpha), residual=residual, iterations=iters,
                     critical_nodes=crit, alt_sup_difference=alt, method=method)


def reweight(r, v) -> np.ndarray:
    """``r_u(a, b) = r(a, b) + v(a) - v(b)``, tiny entries snapped to exact zero."""
    r = np.asarray(r, dtype=float)
    values = np.asarray(getattr(v, "values", v), dtype=float)
    if values.shape != (r.shape[0],) or r.shape[0] != r.shape[1]:
        raise ValueError("subaction and reduced matrix sizes do not match")
    ru = r + values[:, None] - values[None, :]
    scale = max(1.0, float(np.max(np.abs(r))))
    ru[np.abs(ru) <= ZERO_SNAP * scale] = 0.0
    ru.setflags(write=False)
    return ru


def verify_calibration(r, v) -> CalibrationReport:
    """Per-node calibration residual and worst subaction-inequality violation."""
    r = np.asarray(r, dtype=float)
    values = np.asarray(getattr(v, "values", v), dtype=float)
    if values.shape != (r.shape[0],):
        raise ValueError("subaction and reduced matrix sizes do not match")
    per_node = bellman_operator(r, values) - values
    violation = float(np.max(values[None, :] - values[:, None] - r))
    return CalibrationReport(per_node=per_node,
                             max_residual=float(np.max(np.abs(per_node))),
                             max_inequality_violation=max(0.0, violation))


def write_subaction_csv(path, nodes, v) -> Path:
    path = Path(path)
    values = np.asarray(getattr(v, "values", v), dtype=float)
    np.savetxt(path, np.column_stack([nodes, values]), delimiter=",", fmt="%.17g",
               header="abscissa,value", comments="")
    return path
