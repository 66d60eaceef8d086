from __future__ import annotations

import numpy as np
import pytest

from stardil.dilation import (
    check_partial_isometries,
    conjugate,
    dilate,
    direct_sum,
    embed_unital,
    minimalize,
    pad,
    structure_matrix,
    unitary_equivalence,
    verify_dilation,
)
from stardil.errors import DimensionMismatch, NotFlat, NotInverseSemigroupoid, NotPSD, NotUnital, StructureError
from stardil.free import DirectedGraph, free_semigroupoid, free_star_semigroupoid
from stardil.linalg import max_abs
from stardil.maps import CoherentMap, check_psd, fiber_gram
from stardil.semigroupoid import cyclic_group, pair_groupoid
from pullbacks import (
    free_groupoid_pullback,
    free_star_pullback,
    pair_groupoid_pullback,
    perturbed,
    random_unitary,
    unital_free_star_pullback,
    unital_pair_groupoid_pullback,
)

BUILDERS = {
    "pair": pair_groupoid_pullback,
    "free_star": free_star_pullback,
    "free_groupoid": free_groupoid_pullback,
}


def instance(kind: str, seed: int):
    return BUILDERS[kind](np.random.default_rng(seed))


@pytest.mark.parametrize("kind", sorted(BUILDERS))
@pytest.mark.parametrize("seed", range(8))
def test_round_trip(kind, seed):
    pb = instance(kind, seed)
    D = dilate(pb.T)
    rep = verify_dilation(pb.T, D)
    assert rep.passed, rep.residuals
    assert rep.max_residual < 1e-8
    assert all(v == 0 for v in rep.minimality_defect.values())


@pytest.mark.parametrize("seed", range(6))
def test_block_sizes_are_gram_ranks(seed):
    pb = instance("pair" if seed % 2 else "free_star", seed)
    D = dilate(pb.T)
    for s in range(pb.T.table.n_objects):
        g = fiber_gram(pb.T, s).gram
        assert D.block_sizes[s] == np.linalg.matrix_rank(g, tol=1e-8 * max(1, np.abs(g).max()))


def test_scalar_pair_groupoid_all_ones():
    T = CoherentMap.scalar(pair_groupoid(2), [1, 1, 1, 1], tau=[0, 1])
    D = dilate(T)
    assert D.block_sizes == (1, 1) and D.kdims == (1, 1)
    for a in range(4):
        assert abs(abs(D.rep[a][0, 0]) - 1) < 1e-12


def test_non_psd_raises_with_fiber():
    t = pair_groupoid(2)
    T = CoherentMap.scalar(t, [1, 2, 2, 1])
    with pytest.raises(NotPSD) as exc:
        dilate(T)
    assert exc.value.fiber == 0
    assert exc.value.lambda_min == pytest.approx(-1.0, abs=1e-9)


@pytest.mark.parametrize("seed", range(12))
def test_psd_check_and_dilate_agree(seed):
    rng = np.random.default_rng(100 + seed)
    pb = pair_groupoid_pullback(rng) if seed % 2 else free_star_pullback(rng)
    T = perturbed(rng, pb, size=float(rng.uniform(0.1, 2.0)))
    failed = not check_psd(T).passed
    raised = False
    try:
        dilate(T)
    except NotFlat:
        pass
    except NotPSD:
        raised = True
    assert failed == raised


def test_dilate_needs_units_and_star():
    t = free_semigroupoid(DirectedGraph(1, ((0, 0),)), 2)
    T = CoherentMap(t, (1,), (0,), tuple(np.eye(1) for _ in range(t.n_elements)))
    with pytest.raises(StructureError):
        dilate(T)


@pytest.mark.parametrize("seed", range(6))
def test_permuted_orderings_are_equivalent(seed):
    rng = np.random.default_rng(seed)
    pb = pair_groupoid_pullback(rng) if seed % 2 else free_star_pullback(rng)
    n = pb.T.table.n_elements
    D1 = dilate(pb.T, order=rng.permutation(n))
    D2 = dilate(pb.T, order=rng.permutation(n))
    w = unitary_equivalence(D1, D2, pb.T)
    assert w.passed, w.residuals


def test_conjugated_dilation_recovers_the_unitary():
    rng = np.random.default_rng(7)
    pb = pair_groupoid_pullback(rng, n=3, k=2, hmax=3)
    D = dilate(pb.T)
    us = [random_unitary(rng, k) for k in D.block_sizes]
    D2 = conjugate(D, us)
    assert verify_dilation(pb.T, D2).passed
    w = unitary_equivalence(D, D2, pb.T)
    assert w.passed
    for s in range(3):
        assert max_abs(w.U[D.tau[s]][D2.block(s), D.block(s)] - us[s]) < 1e-9


def test_zero_padding_is_not_a_dilation():
    rng = np.random.default_rng(3)
    pb = pair_groupoid_pullback(rng, n=2)
    P = pad(dilate(pb.T), 0, 2)
    rep = verify_dilation(pb.T, P)
    assert rep.residuals["reconstruction"] < 1e-10
    assert rep.residuals["unit_sum"] == pytest.approx(1.0)


def test_idle_summand_breaks_minimality_and_minimalize_restores_it():
    rng = np.random.default_rng(3)
    pb = pair_groupoid_pullback(rng, n=2)
    D = dilate(pb.T)
    idle = type(D)(D.table, D.tau, D.hdims, D.block_sizes, D.rep, tuple(np.zeros_like(v) for v in D.V))
    S = direct_sum(D, idle)
    rep = verify_dilation(pb.T, S)
    assert rep.is_dilation and not rep.minimal
    assert rep.minimality_defect == {x: D.kdims[x] for x in range(D.n_points)}
    with pytest.raises(DimensionMismatch):
        unitary_equivalence(D, S, pb.T)
    M = minimalize(S, pb.T)
    assert M.block_sizes == D.block_sizes
    assert unitary_equivalence(D, M, pb.T).passed


def test_direct_sum_doubles_the_compression():
    rng = np.random.default_rng(4)
    pb = free_star_pullback(rng)
    D = dilate(pb.T)
    S = direct_sum(D, D)
    rep = verify_dilation(pb.T.scaled(2), S)
    assert rep.residuals["reconstruction"] < 1e-9
    assert not rep.minimal
    M = minimalize(S)
    assert verify_dilation(pb.T.scaled(2), M).passed


def test_tampered_dilation_is_rejected():
    rng = np.random.default_rng(9)
    pb = pair_groupoid_pullback(rng, n=2, k=2)
    D = dilate(pb.T)
    rep = list(D.rep)
    rep[1] = rep[1] * 1.5
    bad = type(D)(D.table, D.tau, D.hdims, D.block_sizes, tuple(rep), D.V)
    res = verify_dilation(pb.T, bad)
    assert not res.passed
    assert res.residuals["multiplicativity"] > 1e-3 or res.residuals["reconstruction"] > 1e-3


@pytest.mark.parametrize("seed", range(6))
def test_groupoid_images_are_partial_isometries(seed):
    rng = np.random.default_rng(seed)
    pb = free_groupoid_pullback(rng) if seed % 2 else pair_groupoid_pullback(rng)
    rep = check_partial_isometries(dilate(pb.T))
    assert rep.max_triple < 1e-8 and rep.max_norm <= 1 + 1e-8


def test_partial_isometry_check_is_gated():
    rng = np.random.default_rng(1)
    pb = free_star_pullback(rng, graph=DirectedGraph(1, ((0, 0),)))
    with pytest.raises(NotInverseSemigroupoid):
        check_partial_isometries(dilate(pb.T))


@pytest.mark.parametrize("injective", [True, False])
@pytest.mark.parametrize("seed", range(4))
def test_unit_sum_identity(injective, seed):
    rng = np.random.default_rng(seed)
    n = 3
    tau = tuple(range(n)) if injective else (0, 0, 1)
    pb = pair_groupoid_pullback(rng, n=n, tau=tau)
    D = dilate(pb.T)
    t = pb.T.table
    for x in range(D.n_points):
        acc = sum(D.rep[t.units[s]] for s in D.objects_at(x))
        assert max_abs(acc - np.eye(D.kdims[x])) < 1e-10


@pytest.mark.parametrize("seed", range(6))
def test_unital_embedding(seed):
    rng = np.random.default_rng(seed)
    pb = unital_pair_groupoid_pullback(rng) if seed % 2 else unital_free_star_pullback(rng)
    D = dilate(pb.T)
    e = embed_unital(pb.T, D)
    assert e.isometry < 1e-10 and e.compression < 1e-8


def test_embedding_rejects_non_unital_maps():
    rng = np.random.default_rng(0)
    pb = pair_groupoid_pullback(rng, n=2)
    T = pb.T.scaled(3.0)
    with pytest.raises(NotUnital):
        embed_unital(T, dilate(T))


def test_cyclic_group_character_sum():
    # T = sum of two characters of Z/4: the dilation has dimension 2
    k = 4
    w = np.exp(2j * np.pi / k)
    T = CoherentMap.scalar(cyclic_group(k), [1 + w ** (2 * g) for g in range(k)])
    D = dilate(T)
    assert D.kdims == (2,)
    assert verify_dilation(T, D).passed


def test_structure_matrix_counts_products():
    t = pair_groupoid(2)
    m = structure_matrix(t, 1)
    assert m.sum() == 2 and m.max() == 1
    t2 = free_star_semigroupoid(DirectedGraph(1, ((0, 0),)), 2)
    assert structure_matrix(t2, 0).shape == (t2.n_elements, t2.n_elements)
