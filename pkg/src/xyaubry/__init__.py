"""Ergodic optimization for two-coordinate potentials on the XY model.

The letter graph on a uniform grid of [0, 1] turns optimal averages,
subactions, Mañé potentials, Peierls barriers and Aubry sets into min-plus
matrix computations; :mod:`xyaubry.orbitlab` holds the continuous-space
experiments and :mod:`xyaubry.cli` the command-line runner.
"""
__version__ = "0.1.0"

from .potential import (PotentialSpec, builtin, certify_twist, lipschitz_bound, perturb,
                        polynomial)
from .lettergraph import build_graph, make_grid, minplus_multiply, reduce
from .spectrum import diagonal_min, jenkinson_estimate, karp_min_mean_cycle, spectral_analysis
from .subaction import reweight, solve_subaction, verify_calibration
from .mane import (EventuallyPeriodicPoint, mane_matrix, peierls_letter, sequence_barrier,
                   sequence_mane)
from .aubry import aubry_letters, equivalence_classes, mather_support, static_check
from .pipeline import Analysis, Session, analyze
from .orbitlab import crossing_surgery, gap_phi, orbit_descent, tpo_experiment

__all__ = [
    "Analysis", "EventuallyPeriodicPoint", "PotentialSpec", "Session", "analyze",
    "aubry_letters", "build_graph", "builtin", "certify_twist", "crossing_surgery",
    "diagonal_min", "equivalence_classes", "gap_phi", "jenkinson_estimate",
    "karp_min_mean_cycle", "lipschitz_bound", "make_grid", "mane_matrix", "mather_support",
    "minplus_multiply", "orbit_descent", "peierls_letter", "perturb", "polynomial", "reduce",
    "reweight", "sequence_barrier", "sequence_mane", "solve_subaction", "spectral_analysis",
    "static_check", "tpo_experiment", "verify_calibration",
]
