"""Directed graphs and their length-truncated free semigroupoids.

Letters are encoded as integers: ``2*i`` is edge ``i`` and ``2*i + 1`` its
companion (``f*`` in the starred flavor, ``f^-1`` in the groupoid flavor).
A word ``w_1 ... w_n`` composes right to left, so its source is the source of
``w_n`` and its range the range of ``w_1``.  Products whose (reduced) length
exceeds the bound are left undefined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import StructureError
from .semigroupoid import UNDEF, SemigroupoidTable

FLAVORS = ("plain", "starred", "groupoid")


@dataclass(frozen=True)
class DirectedGraph:
    n_vertices: int
    edges: tuple[tuple[int, int], ...]  # (source, range)
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        edges = tuple((int(s), int(r)) for s, r in self.edges)
        for i, (s, r) in enumerate(edges):
            if not (0 <= s < self.n_vertices and 0 <= r < self.n_vertices):
                raise StructureError(f"edge {i}={(s, r)} has an endpoint outside [0, {self.n_vertices})")
        object.__setattr__(self, "edges", edges)
        if self.names is not None:
            if len(self.names) != len(edges):
                raise StructureError("one name per edge required")
            object.__setattr__(self, "names", tuple(self.names))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_name(self, i: int) -> str:
        return self.names[i] if self.names is not None else f"f{i}"

    def letter_ends(self, letter: int) -> tuple[int, int]:
        """(source, range) of a letter."""
        s, r = self.edges[letter >> 1]
        return (r, s) if letter & 1 else (s, r)

    def into(self, v: int) -> list[int]:
        """Edges with range v."""
        return [i for i, (_, r) in enumerate(self.edges) if r == v]

    def adjacency(self) -> np.ndarray:
        """A[r, s] = number of edges s -> r."""
        a = np.zeros((self.n_vertices, self.n_vertices), dtype=np.int64)
        for s, r in self.edges:
            a[r, s] += 1
        return a


@dataclass(frozen=True)
class Word:
    letters: tuple[int, ...]
    source: int
    range: int

    @property
    def length(self) -> int:
        return len(self.letters)

    def star(self) -> "Word":
        return Word(tuple(x ^ 1 for x in reversed(self.letters)), self.range, self.source)

    @property
    def star_free(self) -> bool:
        return all(x % 2 == 0 for x in self.letters)

    def text(self, graph: DirectedGraph, flavor: str = "starred") -> str:
        if not self.letters:
            return f"e{self.source}"
        mark = "^-1" if flavor == "groupoid" else "*"
        return ".".join(graph.edge_name(x >> 1) + (mark if x & 1 else "") for x in self.letters)


def reduce_word(letters: Sequence[int]) -> tuple[int, ...]:
    """Free reduction: cancel adjacent f f^-1 and f^-1 f pairs."""
    out: list[int] = []
    for x in letters:
        if out and out[-1] == x ^ 1:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class TruncatedFreeTable(SemigroupoidTable):
    graph: DirectedGraph | None = None
    words: tuple[Word, ...] = ()
    flavor: str = "plain"

    @property
    def L_max(self) -> int:
        return int(self.max_length)

    def word_of(self, a: int) -> Word:
        return self.words[a]

    def index_of(self, word: Word) -> int:
        return self._index[(word.letters, word.source, word.range)]

    @property
    def _index(self) -> dict:
        cache = self.__dict__.get("_index_cache")
        if cache is None:
            cache = {(w.letters, w.source, w.range): i for i, w in enumerate(self.words)}
            object.__setattr__(self, "_index_cache", cache)
        return cache


def _enumerate(graph: DirectedGraph, L_max: int, flavor: str, with_units: bool) -> list[Word]:
    letters = range(2 * graph.n_edges) if flavor != "plain" else range(0, 2 * graph.n_edges, 2)
    ends = {x: graph.letter_ends(x) for x in letters}
    words: list[Word] = []
    if with_units:
        words.extend(Word((), v, v) for v in range(graph.n_vertices))
    layer = [Word((x,), *ends[x]) for x in letters]
    for k in range(1, L_max + 1):
        layer.sort(key=lambda w: w.letters)
        words.extend(layer)
        if k == L_max:
            break
        nxt = []
        for w in layer:
            for x in letters:
                s, r = ends[x]
                if r != w.source:
                    continue
                if flavor == "groupoid" and w.letters[-1] == x ^ 1:
                    continue
                nxt.append(Word(w.letters + (x,), s, w.range))
        layer = nxt
    return words


def _build(graph: DirectedGraph, L_max: int, flavor: str, with_units: bool) -> TruncatedFreeTable:
    if L_max < 1:
        raise ValueError("L_max must be at least 1")
    if flavor not in FLAVORS:
        raise ValueError(f"unknown flavor {flavor!r}")
    words = _enumerate(graph, L_max, flavor, with_units)
    index = {(w.letters, w.source, w.range): i for i, w in enumerate(words)}
    n = len(words)
    mul = np.full((n, n), UNDEF, dtype=np.int64)
    for i, a in enumerate(words):
        for j, b in enumerate(words):
            if a.source != b.range:
                continue
            letters = a.letters + b.letters
            if flavor == "groupoid":
                letters = reduce_word(letters)
            if len(letters) > L_max:
                continue
            k = index.get((letters, b.source, a.range))
            if k is not None:
                mul[i, j] = k
    star = None
    if flavor != "plain":
        star = [index[(w.star().letters, w.range, w.source)] for w in words]
    units = None
    if with_units:
        units = list(range(graph.n_vertices))
    return TruncatedFreeTable(
        n_objects=graph.n_vertices,
        src=[w.source for w in words],
        tgt=[w.range for w in words],
        mul=mul,
        star=star,
        units=units,
        labels=tuple(w.text(graph, flavor) for w in words),
        lengths=[w.length for w in words],
        max_length=L_max,
        graph=graph,
        words=tuple(words),
        flavor=flavor,
    )


def free_semigroupoid(graph: DirectedGraph, L_max: int, with_units: bool = True) -> TruncatedFreeTable:
    """Paths of length at most ``L_max``; units e_v are the length-0 paths."""
    return _build(graph, L_max, "plain", with_units)


def free_star_semigroupoid(graph: DirectedGraph, L_max: int) -> TruncatedFreeTable:
    """Paths over edges and companion edges, star reverses and swaps letters."""
    return _build(graph, L_max, "starred", True)


def free_groupoid(graph: DirectedGraph, L_max: int) -> TruncatedFreeTable:
    """Reduced words over edges and formal inverses."""
    return _build(graph, L_max, "groupoid", True)


def path_count(graph: DirectedGraph, L_max: int, starred: bool = False, with_units: bool = True) -> int:
    """Number of words of length <= L_max, via adjacency powers."""
    a = graph.adjacency()
    if starred:
        a = a + a.T
    total = graph.n_vertices if with_units else 0
    p = np.eye(graph.n_vertices, dtype=np.int64)
    for _ in range(L_max):
        p = a @ p
        total += int(p.sum())
    return total
