import numpy as np
import pytest

import oracles
from samples import double_well
from xyaubry.aubry import (AubryConsistencyError, ContainmentError, TransitivityError,
                           aubry_letters, class_of, equivalence_classes, mather_support,
                           static_check, subaction_identity_gap)
from xyaubry.pipeline import analyze
from xyaubry.potential import builtin


def test_product_one_cell():
    an = analyze(builtin("product"), 1)
    assert an.aubry.aubry_letters == (1,)
    assert an.aubry.classes == ((1,),)


def test_squared_difference_every_letter():
    an = analyze(builtin("squared_difference"), 4)
    assert an.aubry.aubry_letters == tuple(range(5))


def test_squared_difference_classes_are_singletons():
    an = analyze(builtin("squared_difference"), 2)
    assert an.aubry.classes == ((0,), (1,), (2,))
    # the same relation by path enumeration on the three-node graph
    d = oracles.min_walk_upto(an.reduced, 3)
    assert all(d[a, b] + d[b, a] > 0 for a in range(3) for b in range(3) if a != b)


def test_well_single_letter():
    an = analyze(builtin("squared_difference_plus_well", 0.5), 8)
    assert an.aubry.aubry_letters == (4,)
    assert an.aubry.m_distance == (0.0,)


def test_double_well_two_classes():
    an = analyze(double_well(), 8)
    assert an.aubry.aubry_letters == (2, 6)
    assert an.aubry.classes == ((2,), (6,))
    assert class_of(an.aubry.classes, 6) == 1
    with pytest.raises(KeyError):
        class_of(an.aubry.classes, 3)


def test_nontransitive_relation_reported():
    h = np.array([[0.0, 0.0, 1.0],
                  [0.0, 0.0, 0.0],
                  [1.0, 0.0, 0.0]])
    with pytest.raises(TransitivityError) as info:
        equivalence_classes(h, (0, 1, 2), 1e-9)
    assert info.value.triple == (0, 1, 2)


def test_transitive_relation_matches_closure():
    h = np.array([[0.0, 0.0, 2.0],
                  [0.0, 0.0, 3.0],
                  [1.0, 1.0, 0.0]])
    classes = equivalence_classes(h, (0, 1, 2), 1e-9)
    assert classes == ((0, 1), (2,))
    rel = (h + h.T) <= 1e-9
    np.testing.assert_array_equal(oracles.transitive_closure(rel), rel)


def test_empty_aubry_set_rejected():
    with pytest.raises(ValueError):
        equivalence_classes(np.zeros((2, 2)), (), 1e-9)


def test_barrier_diagonal_must_agree():
    d = np.array([[0.0, 1.0], [1.0, 0.5]])
    assert aubry_letters(d, 1e-9, barrier_diag=[0.0, 0.5]) == (0,)
    with pytest.raises(AubryConsistencyError):
        aubry_letters(d, 1e-9, barrier_diag=[0.0, 0.0])


def test_static_examples():
    an = analyze(builtin("product"), 1)
    assert an.static_check((1,)).is_static
    cert = an.static_check((0,))
    assert not cert.is_static
    assert cert.worst_violation >= 1.0


def test_static_words_are_semistatic_and_calibrated():
    an = analyze(builtin("squared_difference"), 4)
    for word in [(0,), (2, 2), (1, 1, 1), (3,)]:
        cert = an.static_check(word)
        assert cert.is_static and cert.is_semistatic
        assert subaction_identity_gap(word, an.reduced, an.subaction) <= 1e-9
    assert not an.static_check((0, 1)).is_static


def test_static_word_validation():
    with pytest.raises(ValueError):
        static_check((), np.zeros((1, 1)), np.zeros((1, 1)))


def test_mather_support_examples():
    rep = analyze(builtin("product"), 8).mather_support()
    assert rep.witness_in_aubry and rep.trace_matches
    rep = analyze(builtin("squared_difference_plus_well", 0.5), 8).mather_support()
    assert rep.zero_selfloop_letters == (4,)
    assert rep.zero_cycles_are_self_loops


def test_mather_support_rejects_inconsistent_input():
    an = analyze(builtin("squared_difference_plus_well", 0.5), 8)
    with pytest.raises(ContainmentError):
        mather_support(an.spectral, (3,), an.reduced, twist=True)
