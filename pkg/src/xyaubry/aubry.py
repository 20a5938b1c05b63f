"""Aubry letters, Peierls classes and static-orbit certificates."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.sparse.csgraph import connected_components


class AubryConsistencyError(RuntimeError):
    pass


class TransitivityError(AubryConsistencyError):
    def __init__(self, triple, message):
        super().__init__(message)
        self.triple = triple


class ContainmentError(AubryConsistencyError):
    pass


@dataclass(frozen=True)
class AubryReport:
    aubry_letters: tuple[int, ...]
    classes: tuple[tuple[int, ...], ...]
    m_distance: tuple[float, ...]
    tol_zero: float


@dataclass(frozen=True)
class StaticCertificate:
    word: tuple[int, ...]
    is_static: bool
    is_semistatic: bool
    worst_violation: float
    worst_semistatic_violation: float
    checked_pairs: int


@dataclass(frozen=True)
class ContainmentReport:
    witness_in_aubry: bool
    zero_selfloop_letters: tuple[int, ...]
    m_trace: tuple[int, ...]
    trace_matches: bool | None
    zero_cycles_are_self_loops: bool | None


def default_tol_zero(n_cells: int) -> float:
    return max(1e-9, 10.0 * np.finfo(float).eps * n_cells)


def aubry_letters(mane: np.ndarray, tol_zero: float, barrier_diag=None) -> tuple[int, ...]:
    """Letters a with ``|D(a, a)| <= tol_zero``.

    If ``barrier_diag`` (the diagonal of an independently computed barrier,
    e.g. the windowed liminf) is given, the zero set of the barrier diagonal
    must coincide; otherwise :class:`AubryConsistencyError` is raised.
    """
    diag = np.diag(np.asarray(mane))
    letters = tuple(int(a) for a in np.flatnonzero(np.abs(diag) <= tol_zero))
    if barrier_diag is not None:
        other = tuple(int(a) for a in np.flatnonzero(np.abs(np.asarray(barrier_diag)) <= tol_zero))
        if other != letters:
            raise AubryConsistencyError(
                f"Mañé zero set {letters} differs from barrier zero set {other}")
    return letters


def equivalence_classes(barrier: np.ndarray, aubry, tol_zero: float):
    """Partition Aubry letters by ``H(a, b) + H(b, a) <= tol_zero``.

    Classes are the connected components of the relation; each component is
    then checked to be a clique, so transitivity is verified rather than
    imposed.
    """
    aubry = list(aubry)
    if not aubry:
        raise ValueError("empty Aubry set")
    h = np.asarray(barrier)[np.ix_(aubry, aubry)]
    related = (h + h.T) <= tol_zero
    _, labels = connected_components(related.astype(np.int8), directed=False)
    classes = []
    for lab in sorted(set(labels.tolist()), key=lambda k: int(np.flatnonzero(labels == k)[0])):
        members = np.flatnonzero(labels == lab)
        block = related[np.ix_(members, members)]
        if not block.all():
            a, c, b = _broken_triple(block)
            a, c, b = aubry[members[a]], aubry[members[c]], aubry[members[b]]
            raise TransitivityError(
                (a, c, b), f"relation not transitive: {a} ~ {c} and {c} ~ {b} but {a} !~ {b}")
        classes.append(tuple(aubry[k] for k in members))
    return tuple(classes)


def _broken_triple(block):
    # a connected relation that is not total contains an induced path a - c - b
    n = block.shape[0]
    for c in range(n):
        nbrs = [k for k in range(n) if k != c and block[c, k]]
        for a, b in combinations(nbrs, 2):
            if not block[a, b]:
                return a, c, b
    raise AssertionError("component is a clique")  # pragma: no cover


def class_of(classes, letter: int) -> int:
    for k, cls in enumerate(classes):
        if letter in cls:
            return k
    raise KeyError(letter)


def static_check(word, r: np.ndarray, mane: np.ndarray, tol: float = 1e-9) -> StaticCertificate:
    """Check the periodic orbit of ``word`` for the static and semi-static identities.

    For ``0 <= i < j <= 2 len(word)`` the reduced sum along the orbit from i
    to j is compared with ``-D(p_j, p_i)`` (static) and ``D(p_i, p_j)``
    (semi-static).
    """
    word = tuple(int(a) for a in word)
    if not word:
        raise ValueError("word must be non-empty")
    r = np.asarray(r)
    d = np.asarray(mane)
    k = len(word)
    steps = [r[word[t % k], word[(t + 1) % k]] for t in range(2 * k)]
    partial = np.concatenate(([0.0], np.cumsum(steps)))
    worst_static = 0.0
    worst_semi = 0.0
    pairs = 0
    for i in range(2 * k + 1):
        for j in range(i + 1, 2 * k + 1):
            s = partial[j] - partial[i]
            pi, pj = word[i % k], word[j % k]
            worst_static = max(worst_static, abs(s + d[pj, pi]))
            worst_semi = max(worst_semi, abs(s - d[pi, pj]))
            pairs += 1
    return StaticCertificate(word=word, is_static=worst_static <= tol,
                             is_semistatic=worst_semi <= tol,
                             worst_violation=float(worst_static),
                             worst_semistatic_violation=float(worst_semi),
                             checked_pairs=pairs)


def subaction_identity_gap(word, r: np.ndarray, v) -> float:
    """Max over the orbit of ``|v(p_{k+1}) - v(p_k) - r(p_k, p_{k+1})|``."""
    values = np.asarray(getattr(v, "values", v), dtype=float)
    word = list(word)
    k = len(word)
    return float(max(abs(values[word[(t + 1) % k]] - values[word[t]] - r[word[t], word[(t + 1) % k]])
                     for t in range(k)))


def mather_support(spectral, aubry, r: np.ndarray, twist: bool, tol: float = 1e-9,
                   mane: np.ndarray | None = None) -> ContainmentReport:
    """Check that optimal periodic orbits live on Aubry letters.

    Always: the witness cycle's letters are Aubry letters. Under ``twist``:
    the letters with zero reduced self-loop match the grid trace of the
    minimizer set m within one cell, and (when ``mane`` is given) no two
    distinct Aubry letters close a zero-weight cycle, so the only optimal
    periodic orbits are fixed points.
    """
    aubry = tuple(aubry)
    aset = set(aubry)
    nodes = np.asarray(spectral.nodes)
    spacing = float(nodes[1] - nodes[0]) if len(nodes) > 1 else 1.0
    witness_ok = set(spectral.witness_cycle) <= aset
    if not witness_ok:
        raise ContainmentError(
            f"witness cycle {spectral.witness_cycle} not inside Aubry letters {aubry}")
    zero_loops = tuple(int(a) for a in np.flatnonzero(np.abs(np.diag(r)) <= tol))
    dist = np.asarray(spectral.distance_to_m(nodes))
    m_trace = tuple(int(a) for a in np.flatnonzero(dist <= spacing * (1 + 1e-9)))
    trace_ok = None
    loops_only = None
    if twist:
        near = all(dist[a] <= spacing * (1 + 1e-9) for a in zero_loops)
        covered = all(
            any(abs(nodes[a] - p) <= spacing * (1 + 1e-9) for a in zero_loops)
            for p in spectral.m_set)
        trace_ok = near and covered and set(zero_loops) == aset
        if not trace_ok:
            raise ContainmentError(
                f"zero self-loops {zero_loops} do not match the grid trace of m {m_trace}")
        if mane is not None:
            d = np.asarray(mane)
            loops_only = all(d[a, b] + d[b, a] > tol for a, b in combinations(aubry, 2))
            if not loops_only:
                raise ContainmentError("a zero-weight cycle joins two distinct Aubry letters")
    return ContainmentReport(witness_in_aubry=witness_ok, zero_selfloop_letters=zero_loops,
                             m_trace=m_trace, trace_matches=trace_ok,
                             zero_cycles_are_self_loops=loops_only)


def build_report(mane: np.ndarray, barrier: np.ndarray, spectral, tol_zero: float,
                 barrier_diag=None) -> AubryReport:
    letters = aubry_letters(mane, tol_zero, barrier_diag)
    classes = equivalence_classes(barrier, letters, tol_zero)
    nodes = np.asarray(spectral.nodes)
    dist = tuple(float(spectral.distance_to_m(nodes[a])) for a in letters)
    return AubryReport(aubry_letters=letters, classes=classes, m_distance=dist,
                       tol_zero=tol_zero)
