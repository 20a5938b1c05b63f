"""End-to-end analysis of one potential on one grid.

``analyze`` chains graph -> spectrum -> subaction -> Mañé -> barrier ->
Aubry report, computing each intermediate once.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import aubry as _aubry
from . import mane as _mane
from .lettergraph import LetterGrid, build_graph, reduce
from .potential import (LipschitzBound, PotentialSpec, TwistCertificate, certify_twist,
                        lipschitz_bound)
from .spectrum import SpectralResult, spectral_analysis
from .subaction import Subaction, reweight, solve_subaction


@dataclass(frozen=True)
class Analysis:
    spec: PotentialSpec
    grid: LetterGrid
    weights: np.ndarray
    twist: TwistCertificate
    lipschitz: LipschitzBound
    spectral: SpectralResult
    reduced: np.ndarray
    subaction: Subaction
    reweighted: np.ndarray
    mane: np.ndarray
    barrier: _mane.BarrierMatrix
    aubry: _aubry.AubryReport

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    def point(self, preperiod=(), period=(0,)) -> _mane.EventuallyPeriodicPoint:
        return _mane.EventuallyPeriodicPoint(preperiod, period)

    def fixed_point(self, a: float) -> _mane.EventuallyPeriodicPoint:
        return _mane.EventuallyPeriodicPoint.fixed(self.grid.nearest(a))

    def sequence_mane(self, x, y) -> _mane.SequenceBarrierResult:
        return _mane.sequence_mane(x, y, self.reduced, self.mane)

    def sequence_barrier(self, x, y) -> _mane.SequenceBarrierResult:
        return _mane.sequence_barrier(x, y, self.reduced, self.barrier)

    def static_check(self, word, tol: float = 1e-9) -> _aubry.StaticCertificate:
        return _aubry.static_check(word, self.reduced, self.mane, tol)

    def mather_support(self) -> _aubry.ContainmentReport:
        return _aubry.mather_support(self.spectral, self.aubry.aubry_letters, self.reduced,
                                     twist=self.twist.passed, mane=self.mane)


class Session:
    """Lazily evaluated pipeline stages for one potential and grid.

    Each stage is computed on first access and cached, so asking for the
    Aubry report alone computes the spectrum, subaction and Mañé matrix
    once and nothing else.
    """

    def __init__(self, spec: PotentialSpec, n_cells: int = 128, *, tol_zero: float | None = None,
                 solver_tol: float = 1e-12, max_iters: int | None = None,
                 window_multiplier: int | None = 4, refine_iters: int = 60,
                 second_init: bool = False, certify_density: int = 128):
        self.spec = spec
        self.n_cells = n_cells
        self.tol_zero = _aubry.default_tol_zero(n_cells) if tol_zero is None else tol_zero
        self.solver_tol = solver_tol
        self.max_iters = max_iters
        self.window_multiplier = window_multiplier
        self.refine_iters = refine_iters
        self.second_init = second_init
        self.certify_density = certify_density

    @cached_property
    def graph(self) -> tuple[LetterGrid, np.ndarray]:
        return build_graph(self.spec, self.n_cells)

    @cached_property
    def twist(self) -> TwistCertificate:
        return certify_twist(self.spec, self.certify_density)

    @cached_property
    def lipschitz(self) -> LipschitzBound:
        return lipschitz_bound(self.spec, self.certify_density)

    @cached_property
    def spectral(self) -> SpectralResult:
        return spectral_analysis(self.spec, self.n_cells, self.refine_iters, w=self.graph[1])

    @cached_property
    def reduced(self) -> np.ndarray:
        return reduce(self.graph[1], self.spectral.alpha_grid)

    @cached_property
    def subaction(self) -> Subaction:
        return solve_subaction(self.reduced, tol=self.solver_tol, max_iters=self.max_iters,
                               second_init=self.second_init, alpha=self.spectral.alpha_grid)

    @cached_property
    def reweighted(self) -> np.ndarray:
        return reweight(self.reduced, self.subaction)

    @cached_property
    def mane(self) -> np.ndarray:
        return _mane.mane_matrix(self.reweighted, self.subaction)

    @cached_property
    def barrier(self) -> _mane.BarrierMatrix:
        letters = _aubry.aubry_letters(self.mane, self.tol_zero)
        window = None
        if self.window_multiplier is not None:
            window = _mane.default_window(self.graph[0].size, self.window_multiplier)
        return _mane.peierls_letter(self.reduced, self.mane, letters, window)

    @cached_property
    def aubry(self) -> _aubry.AubryReport:
        b = self.barrier
        diag = None if b.windowed_tail_min is None else np.diag(b.windowed_tail_min)
        return _aubry.build_report(self.mane, b.closed_form, self.spectral, self.tol_zero, diag)

    def analysis(self) -> Analysis:
        grid, w = self.graph
        return Analysis(spec=self.spec, grid=grid, weights=w, twist=self.twist,
                        lipschitz=self.lipschitz, spectral=self.spectral, reduced=self.reduced,
                        subaction=self.subaction, reweighted=self.reweighted, mane=self.mane,
                        barrier=self.barrier, aubry=self.aubry)


def analyze(spec: PotentialSpec, n_cells: int = 128, *, tol_zero: float | None = None,
            solver_tol: float = 1e-12, max_iters: int | None = None,
            window_multiplier: int | None = 4, refine_iters: int = 60,
            second_init: bool = False, certify_density: int = 128) -> Analysis:
    """Run the whole letter-graph pipeline for ``spec``.

    ``window_multiplier=None`` skips the windowed barrier cross-check (it is
    the most expensive step: ``multiplier * (N + 1)`` min-plus products).
    """
    return Session(spec, n_cells, tol_zero=tol_zero, solver_tol=solver_tol, max_iters=max_iters,
                   window_multiplier=window_multiplier, refine_iters=refine_iters,
                   second_init=second_init, certify_density=certify_density).analysis()
