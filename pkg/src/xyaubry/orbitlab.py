"""Continuous-space experiments with periodic configurations.

* :func:`orbit_descent` minimizes the period-n action ``sum h(x_i, x_{i+1})``
  by cyclic coordinate descent; under the twist condition minimizers are
  constant orbits sitting on the diagonal minimizers.
* :func:`crossing_surgery` replaces two orbits by their pointwise min and
  max, which never raises the total action under the twist condition.
* :func:`gap_phi` tabulates the least reduced action of period-n grid orbits
  that visit a letter at distance >= delta from m.
* :func:`tpo_experiment` perturbs a twist potential by ``eps (x - a)^2`` and
  checks that the diagonal minimizer becomes a single nondegenerate point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lettergraph import build_graph, minplus_multiply, reduce
from .potential import (PotentialSpec, _raw_eval, builtin, certify_twist, perturb, polynomial,
                        polynomial_coeffs)
from .spectrum import GOLDEN, diagonal_min, distance_to_set, spectral_analysis

SCAN_POINTS = 65
GOLDEN_ITERS = 40
FD_SECOND_STEP = 1e-3
BOUNDARY_TOL = 1e-9


class TwistRequiredError(ValueError):
    pass


@dataclass(frozen=True)
class OrbitDescentTrace:
    n: int
    iterates: tuple[np.ndarray, ...] = field(repr=False)
    energies: tuple[float, ...]
    converged: bool
    final_spread: float
    optimality_residual: float
    sweeps: int

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def final_energy(self) -> float:
        return self.energies[-1]


@dataclass(frozen=True)
class GapTable:
    delta: float
    per_n: tuple[tuple[int, float], ...]
    phi_delta: float
    far_nodes: tuple[int, ...]
    empty_far_set: bool


@dataclass(frozen=True)
class TPOReport:
    base: PotentialSpec
    a: float
    epsilon: float
    unique_min: bool
    minimizer: float | None
    second_derivative: float | None
    aubry_letters: tuple[int, ...]
    nearest_node: int
    robustness_radius: float
    trials: int
    noise_levels: tuple[float, ...]
    n_cells: int = 128

    @property
    def passed(self) -> bool:
        """Unique nondegenerate minimizer and a single Aubry letter next to it."""
        if not (self.unique_min and self.second_derivative is not None
                and self.second_derivative > 0 and len(self.aubry_letters) == 1):
            return False
        return abs(self.aubry_letters[0] / self.n_cells - self.minimizer) <= 1.0 / self.n_cells


def orbit_action(spec: PotentialSpec, x) -> float:
    """``sum_i h(x_i, x_{i+1})`` over one period (indices mod n)."""
    x = np.asarray(x, dtype=float)
    return float(np.sum(_raw_eval(spec, x, np.roll(x, -1))))


def _require_twist(spec):
    if not certify_twist(spec).passed:
        raise TwistRequiredError("potential does not pass the twist certificate")


def _golden_batch(f, lo, hi, iters):
    # elementwise golden-section search; best point seen, endpoints included
    best_x, best_f = lo.copy(), f(lo)
    fh = f(hi)
    take = fh < best_f
    best_x[take], best_f[take] = hi[take], fh[take]
    a, b = lo.copy(), hi.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc <= fd
        right = ~left
        b = np.where(left, d, b)
        a = np.where(right, c, a)
        new_c = np.where(left, c, d)
        new_fc = np.where(left, fc, fd)
        d, fd = np.where(left, new_c, d), np.where(left, new_fc, fd)
        c, fc = np.where(right, new_c, c), np.where(right, new_fc, fc)
        probe = np.where(left, b - GOLDEN * (b - a), a + GOLDEN * (b - a))
        fp = f(probe)
        c, fc = np.where(left, probe, c), np.where(left, fp, fc)
        d, fd = np.where(right, probe, d), np.where(right, fp, fd)
    for x, fx in ((c, fc), (d, fd)):
        take = fx < best_f
        best_x[take], best_f[take] = x[take], fx[take]
    return best_x, best_f


def _local_objective(spec, left, right):
    # left/right of None means period 1: the site is its own neighbour
    def f(t):
        if left is None:
            return _raw_eval(spec, t, t)
        lt = left if t.ndim == 1 else left[:, None]
        rt = right if t.ndim == 1 else right[:, None]
        return _raw_eval(spec, lt, t) + _raw_eval(spec, t, rt)
    return f


def _batch_argmin(f, rows):
    scan = np.linspace(0.0, 1.0, SCAN_POINTS)
    vals = np.asarray(f(np.broadcast_to(scan, (rows, SCAN_POINTS))), dtype=float)
    k = np.argmin(vals, axis=1)
    lo = scan[np.maximum(k - 1, 0)]
    hi = scan[np.minimum(k + 1, SCAN_POINTS - 1)]
    t, ft = _golden_batch(f, lo, hi, GOLDEN_ITERS)
    base = vals[np.arange(rows), k]
    better = ft < base
    return np.where(better, t, scan[k]), np.where(better, ft, base)


def _site_objective(spec, x, i):
    n = x.shape[1]
    if n == 1:
        return _local_objective(spec, None, None)
    return _local_objective(spec, x[:, (i - 1) % n], x[:, (i + 1) % n])


def orbit_descent(spec: PotentialSpec, n: int, init=None, tol: float = 1e-10,
                  max_sweeps: int = 2000, seed: int | None = None,
                  random_order: bool = False) -> OrbitDescentTrace:
    """Cyclic coordinate descent on period-n orbits in [0, 1]^n.

    Each coordinate moves to the minimizer of ``h(x_{i-1}, t) + h(t, x_{i+1})``
    found by a 65-point scan plus golden-section refinement; a move is taken
    only if it strictly lowers that local action, so energies never increase.
    Stops once a full sweep moves no coordinate by ``tol`` or more. Without
    ``init`` the start is uniform on [0, 1]^n drawn from ``seed``.
    """
    if init is None:
        init = np.random.default_rng(seed).random(n)
    init = np.array(init, dtype=float)
    if init.shape != (n,):
        raise ValueError("init must have length n")
    order_rng = np.random.default_rng(seed) if random_order else None
    return orbit_descent_batch(spec, init[None, :], tol, max_sweeps, order_rng)[0]


def orbit_descent_batch(spec: PotentialSpec, inits, tol: float = 1e-10,
                        max_sweeps: int = 2000, order_rng=None) -> list[OrbitDescentTrace]:
    """Run :func:`orbit_descent` on every row of ``inits`` at once.

    Rows are independent and every arithmetic step is elementwise, so each
    trace is identical to the one a single-row call would produce. A row
    stops moving once it has converged. ``order_rng`` switches to a random
    site order per sweep, shared by all rows.
    """
    x = np.array(inits, dtype=float)
    if x.ndim != 2 or x.shape[1] < 1:
        raise ValueError("inits must be a (batch, n) array with n >= 1")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("initial orbits must lie in [0, 1]^n")
    _require_twist(spec)
    batch, n = x.shape
    iterates = [[row.copy()] for row in x]
    energies = [[e] for e in _actions(spec, x)]
    sweeps = np.zeros(batch, dtype=int)
    active = np.ones(batch, dtype=bool)
    for sweep in range(1, max_sweeps + 1):
        rows = np.flatnonzero(active)
        if len(rows) == 0:
            break
        sub = x[rows]
        moved = np.zeros(len(rows))
        order = order_rng.permutation(n) if order_rng is not None else range(n)
        for i in order:
            f = _site_objective(spec, sub, i)
            t, ft = _batch_argmin(f, len(rows))
            current = f(sub[:, i])
            upd = ft < current
            moved[upd] = np.maximum(moved[upd], np.abs(t[upd] - sub[upd, i]))
            sub[upd, i] = t[upd]
        x[rows] = sub
        for k, e in zip(rows, _actions(spec, sub)):
            iterates[k].append(x[k].copy())
            energies[k].append(float(e))
        sweeps[rows] = sweep
        active[rows[moved < tol]] = False
    residual = _optimality_residual(spec, x)
    out = []
    for k in range(batch):
        out.append(OrbitDescentTrace(
            n=n, iterates=tuple(iterates[k]), energies=tuple(energies[k]),
            converged=bool(not active[k] and residual[k] <= 1e-8),
            final_spread=float(np.max(x[k]) - np.min(x[k])),
            optimality_residual=float(residual[k]), sweeps=int(sweeps[k])))
    return out


def _actions(spec, x):
    return np.sum(_raw_eval(spec, x, np.roll(x, -1, axis=1)), axis=1)


def _optimality_residual(spec, x):
    worst = np.zeros(x.shape[0])
    for i in range(x.shape[1]):
        f = _site_objective(spec, x, i)
        _, best = _batch_argmin(f, x.shape[0])
        worst = np.maximum(worst, f(x[:, i]) - best)
    return worst


def grid_orbit_minimum(spec: PotentialSpec, n: int, n_cells: int = 32) -> float:
    """Least action over period-n grid orbits: ``min_a (W^n)[a, a]``."""
    _, w = build_graph(spec, n_cells)
    p = w
    for _ in range(n - 1):
        p = minplus_multiply(p, w)
    return float(np.min(np.diag(p)))


def properly_cross(x, y) -> bool:
    """True if the cyclic sequences swap strict order between consecutive sites."""
    dx = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return bool(np.any(dx * np.roll(dx, -1) < 0))


def crossing_surgery(x, y, spec: PotentialSpec):
    """Pointwise min/max exchange ``(w, z)`` and the action change it causes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("orbits must have equal length")
    w = np.minimum(x, y)
    z = np.maximum(x, y)
    delta = (orbit_action(spec, w) + orbit_action(spec, z)) - (orbit_action(spec, x)
                                                                 + orbit_action(spec, y))
    return w, z, float(delta)


def gap_phi(spec: PotentialSpec, n_cells: int, delta: float, n_max: int,
            spectral=None) -> GapTable:
    """Least reduced action of period-n grid orbits leaving m by at least delta.

    A closed walk that visits a far letter can be rotated to start there, so
    ``phi(delta; n) = min over far letters a of (R^n)[a, a]`` with R the
    reduced weights. Distances use the refined continuous minimizer set.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    grid, w = build_graph(spec, n_cells)
    if spectral is None:
        spectral = spectral_analysis(spec, n_cells, w=w)
    r = reduce(w, spectral.alpha_grid)
    dist = distance_to_set(grid.nodes, spectral.m_set, spectral.m_intervals)
    far = np.flatnonzero(dist >= delta)
    if len(far) == 0:
        rows = tuple((n, float("inf")) for n in range(1, n_max + 1))
        return GapTable(delta, rows, float("inf"), (), True)
    rows = []
    p = r[far, :]
    for n in range(1, n_max + 1):
        rows.append((n, float(np.min(p[np.arange(len(far)), far]))))
        if n < n_max:
            p = minplus_multiply(p, r)
    return GapTable(delta=delta, per_n=tuple(rows), phi_delta=min(v for _, v in rows),
                    far_nodes=tuple(int(a) for a in far), empty_far_set=False)


def diagonal_second_derivative(spec: PotentialSpec, t: float, step: float = FD_SECOND_STEP) -> float:
    """Central second difference of g(a) = h(a, a), shifted inside [0, 1]."""
    c = min(max(t, step), 1.0 - step)
    g = np.asarray(_raw_eval(spec, np.array([c - step, c, c + step]),
                             np.array([c - step, c, c + step])))
    return float((g[0] - 2 * g[1] + g[2]) / (step * step))


def _unique_nondegenerate(spec, n_cells):
    # a boundary minimizer counts as strict when the slope points inward
    dm = diagonal_min(spec, n_cells)
    if dm.degenerate or len(dm.m_set) != 1:
        return False, None, None
    t = dm.m_set[0]
    d2 = diagonal_second_derivative(spec, t)
    if t <= BOUNDARY_TOL or t >= 1.0 - BOUNDARY_TOL:
        inward = 1.0 if t <= BOUNDARY_TOL else -1.0
        g = np.asarray(_raw_eval(spec, np.array([t, t + inward * FD_SECOND_STEP]),
                                 np.array([t, t + inward * FD_SECOND_STEP])))
        if g[1] - g[0] > 0:
            return True, t, d2
    return d2 > 0, t, d2


def tpo_experiment(base: PotentialSpec, a: float, epsilon: float, trials: int = 20,
                   noise: float = 0.01, n_cells: int = 128, seed: int = 0,
                   levels: int = 10) -> TPOReport:
    """Perturb ``base`` by ``epsilon (x - a)^2`` and probe the result.

    Uniqueness and nondegeneracy of the diagonal minimizer are checked, the
    full pipeline is run to obtain the Aubry letters, and then the polynomial
    coefficients of the perturbed potential are jittered uniformly at
    ``levels`` noise magnitudes up to ``noise`` (``trials`` draws each). The
    largest magnitude below which every draw stayed twist, unique and
    nondegenerate is reported as ``robustness_radius``; it is a lower-bound
    estimate from random search, not a proof.
    """
    from .pipeline import analyze

    if not 0.0 < a < 1.0:
        raise ValueError("target a must lie in (0, 1)")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    _require_twist(base)
    h_eps = perturb(base, builtin("well", a), epsilon)
    grid_nearest = int(np.argmin(np.abs(np.arange(n_cells + 1) / n_cells - a)))
    unique, t, d2 = _unique_nondegenerate(h_eps, n_cells)
    dm = diagonal_min(h_eps, n_cells)
    unique_min = not dm.degenerate and len(dm.m_set) == 1
    analysis = analyze(h_eps, n_cells, window_multiplier=None)
    letters = analysis.aubry.aubry_letters

    coeffs = polynomial_coeffs(h_eps)
    rng = np.random.default_rng(seed)
    radius = 0.0
    tested = tuple(noise * k / levels for k in range(1, levels + 1))
    if coeffs is not None and unique:
        for level in tested:
            ok = True
            for _ in range(trials):
                jitter = rng.uniform(-level, level, size=coeffs.shape)
                cand = polynomial(coeffs + jitter)
                if not certify_twist(cand).passed:
                    ok = False
                    break
                u, _, _ = _unique_nondegenerate(cand, n_cells)
                if not u:
                    ok = False
                    break
            if not ok:
                break
            radius = level
    return TPOReport(base=base, a=a, epsilon=epsilon, unique_min=unique_min,
                     minimizer=dm.m_set[0] if unique_min else None,
                     second_derivative=d2 if unique_min else None,
                     aubry_letters=letters, nearest_node=grid_nearest,
                     robustness_radius=radius, trials=trials, noise_levels=tested,
                     n_cells=n_cells)
