from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stardil.free import (
    DirectedGraph,
    Word,
    free_groupoid,
    free_semigroupoid,
    free_star_semigroupoid,
    path_count,
    reduce_word,
)
from stardil.semigroupoid import UNDEF, classify, validate

LOOP = DirectedGraph(1, ((0, 0),))
EDGE = DirectedGraph(2, ((0, 1),))
THETA = DirectedGraph(2, ((0, 1), (0, 1), (1, 0)))


def brute_paths(graph: DirectedGraph, L: int, letters) -> int:
    """Count composable letter sequences of length 1..L by direct recursion."""
    def extend(word_source, k):
        if k == 0:
            return 1
        return sum(extend(graph.letter_ends(x)[0], k - 1)
                   for x in letters if graph.letter_ends(x)[1] == word_source)

    return sum(extend(v, k) for k in range(1, L + 1) for v in range(graph.n_vertices))


@pytest.mark.parametrize("graph", [LOOP, EDGE, THETA], ids=["loop", "edge", "theta"])
@pytest.mark.parametrize("L", [1, 2, 3])
def test_word_counts(graph, L):
    plain = free_semigroupoid(graph, L)
    star = free_star_semigroupoid(graph, L)
    nv = graph.n_vertices
    assert plain.n_elements == path_count(graph, L) == nv + brute_paths(graph, L, range(0, 2 * graph.n_edges, 2))
    assert star.n_elements == path_count(graph, L, starred=True) == nv + brute_paths(graph, L, range(2 * graph.n_edges))


def test_loop_counts_by_hand():
    assert free_star_semigroupoid(LOOP, 2).n_elements == 1 + 2 + 4
    # reduced words over {f, f^-1}: e, f^k, f^-k for k <= L
    assert free_groupoid(LOOP, 3).n_elements == 7
    assert free_semigroupoid(LOOP, 3, with_units=False).n_elements == 3


@pytest.mark.parametrize("build", [free_semigroupoid, free_star_semigroupoid, free_groupoid])
@pytest.mark.parametrize("graph", [LOOP, EDGE, THETA], ids=["loop", "edge", "theta"])
def test_free_tables_validate(build, graph):
    t = build(graph, 2)
    assert validate(t).ok


def test_truncation_leaves_long_products_undefined():
    t = free_semigroupoid(LOOP, 2)
    f = t.index_of(Word((0,), 0, 0))
    ff = t.index_of(Word((0, 0), 0, 0))
    assert t.mul[f, f] == ff
    assert t.mul[ff, f] == UNDEF and t.overflow_mask()[ff, f]


def test_groupoid_cancellation():
    t = free_groupoid(LOOP, 2)
    f = t.index_of(Word((0,), 0, 0))
    finv = t.index_of(Word((1,), 0, 0))
    assert t.mul[f, finv] == t.units[0]
    # f f defined, f f f is not but f f f^-1 reduces to f
    ff = t.mul[f, f]
    assert t.mul[ff, f] == UNDEF
    assert t.mul[ff, finv] == f
    assert classify(t).groupoid


def test_starred_flavor_does_not_cancel():
    t = free_star_semigroupoid(LOOP, 2)
    f = t.index_of(Word((0,), 0, 0))
    fs = t.index_of(Word((1,), 0, 0))
    p = t.mul[fs, f]
    assert p != t.units[0] and t.words[p].letters == (1, 0)
    assert t.star[f] == fs


def test_word_ends_and_labels():
    t = free_star_semigroupoid(EDGE, 2)
    w = t.index_of(Word((1, 0), 0, 0))  # f* f at vertex 0
    assert t.src[w] == 0 and t.tgt[w] == 0
    assert t.labels[w] == "f0*.f0"
    assert free_groupoid(EDGE, 1).labels[-1] == "f0^-1"


def test_order_is_length_then_lex():
    t = free_star_semigroupoid(THETA, 2)
    keys = [(w.length, w.letters) if w.length else (0, (w.source,)) for w in t.words]
    assert keys == sorted(keys)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 5), max_size=12), st.randoms(use_true_random=False))
def test_reduction_is_confluent(letters, rnd):
    """Cancelling pairs in a random order always reaches the stack result."""
    word = list(letters)
    while True:
        spots = [i for i in range(len(word) - 1) if word[i] == word[i + 1] ^ 1]
        if not spots:
            break
        i = rnd.choice(spots)
        del word[i:i + 2]
    assert tuple(word) == reduce_word(letters)


def test_adjacency_orientation():
    a = DirectedGraph(3, ((0, 1), (0, 1), (2, 0))).adjacency()
    assert a[1, 0] == 2 and a[0, 2] == 1 and a.sum() == 3
    assert np.array_equal(a, a.astype(int))


def test_bad_graph():
    from stardil.errors import StructureError

    with pytest.raises(StructureError):
        DirectedGraph(1, ((0, 1),))
