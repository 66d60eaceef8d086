from __future__ import annotations

import numpy as np
import pytest

from stardil.ckt import CKTFamily, check_restricted_orthogonality, induce_representation, validate_ckt
from stardil.dilation import dilate, representation_residuals, verify_dilation
from stardil.errors import NotFlat, ShapeError, ValidationFailed
from stardil.free import DirectedGraph
from stardil.maps import CoherentMap, check_psd
from stardil.semigroupoid import pair_groupoid


def unit(n, i):
    v = np.zeros((n, 1))
    v[i] = 1
    return v


def edge_family(scale: float = 1.0) -> CKTFamily:
    """v0 --f--> v1 on C^2 with S_f = e1 e0*."""
    g = DirectedGraph(2, ((0, 1),))
    e0, e1 = unit(2, 0), unit(2, 1)
    return CKTFamily(g, 2, (e0 @ e0.T, e1 @ e1.T), (scale * e1 @ e0.T,))


def two_loops() -> CKTFamily:
    g = DirectedGraph(1, ((0, 0), (0, 0)))
    return CKTFamily(g, 1, (np.eye(1),), (np.eye(1), -np.eye(1)))


def fork_family() -> CKTFamily:
    """v0 with two edges f, g into v1 on C^3; v1 is exactly covered."""
    g = DirectedGraph(2, ((0, 1), (0, 1)))
    e = [unit(3, i) for i in range(3)]
    return CKTFamily(g, 3, (e[0] @ e[0].T, e[1] @ e[1].T + e[2] @ e[2].T),
                     (e[1] @ e[0].T, e[2] @ e[0].T))


def test_edge_family_is_exact():
    rep = validate_ckt(edge_family())
    assert rep.passed and rep.CK_ok and rep.nondegenerate_ok
    vals = [*rep.idempotent.values(), *rep.hermitian.values(), rep.cross,
            *rep.condition_I.values(), *rep.condition_CK.values(), rep.nondegenerate]
    assert max(vals) < 1e-12
    assert min(rep.condition_CKT.values()) > -1e-12
    # only v1 receives an edge
    assert set(rep.condition_CK) == {1}


def test_scaled_edge_fails_condition_I():
    rep = validate_ckt(edge_family(1.001))
    assert not rep.I_ok
    # |1.001^2 - 1| = 2.001e-3
    assert rep.condition_I[0] == pytest.approx(1.001 ** 2 - 1, rel=1e-9)


def test_two_unitary_loops_fail_ckt():
    rep = validate_ckt(two_loops())
    assert rep.I_ok and not rep.CKT_ok
    assert rep.condition_CKT[0] == pytest.approx(-1.0, abs=1e-12)


def test_fork_family_is_cuntz_krieger():
    rep = validate_ckt(fork_family())
    assert rep.passed and rep.CK_ok and rep.nondegenerate_ok
    assert max(rep.ranges.values()) < 1e-12


def test_proper_toeplitz_family_fails_only_ck():
    # drop one edge of the fork: v1 is no longer covered
    g = DirectedGraph(2, ((0, 1),))
    fam = fork_family()
    rep = validate_ckt(CKTFamily(g, 3, fam.P, fam.S[:1]))
    assert rep.passed and not rep.CK_ok
    assert rep.condition_CK[1] == pytest.approx(1.0)


def test_shapes_are_checked():
    g = DirectedGraph(1, ((0, 0),))
    with pytest.raises(ShapeError):
        CKTFamily(g, 2, (np.eye(2),), (np.eye(3),))
    with pytest.raises(ShapeError):
        CKTFamily(g, 2, (np.eye(2),), ())


@pytest.mark.parametrize("family", [edge_family, fork_family], ids=["edge", "fork"])
@pytest.mark.parametrize("L", [2, 3])
def test_induced_representation(family, L):
    fam = family()
    T = induce_representation(fam, L)
    for name, (v, _) in representation_residuals(T.table, T.mats).items():
        assert v < 1e-12, name
    orth = check_restricted_orthogonality(T)
    assert orth.passed and orth.pairs_checked > 0
    assert check_psd(T).passed
    assert verify_dilation(T, dilate(T)).passed


def test_length_one_truncation_is_not_flat():
    T = induce_representation(edge_family(), 1)
    assert check_restricted_orthogonality(T).passed
    with pytest.raises(NotFlat):
        dilate(T)


def test_starred_words_are_excluded_from_orthogonality():
    T = induce_representation(fork_family(), 2)
    orth = check_restricted_orthogonality(T)
    n_starred = sum(1 for w in T.table.words if not w.star_free)
    assert orth.excluded_starred == n_starred > 0


def test_induce_rejects_invalid_families():
    with pytest.raises(ValidationFailed):
        induce_representation(two_loops(), 2)


def test_orthogonality_needs_a_free_table():
    T = CoherentMap.scalar(pair_groupoid(1), [1])
    with pytest.raises(TypeError):
        check_restricted_orthogonality(T)


def test_orthogonality_rejects_a_different_graph():
    T = induce_representation(edge_family(), 2)
    with pytest.raises(ValueError):
        check_restricted_orthogonality(T, graph=DirectedGraph(2, ((1, 0),)))
