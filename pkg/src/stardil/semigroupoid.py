"""Finite *-semigroupoid tables: data model, axiom scans, fibers, classification.

Elements and objects are dense integer ids.  Composition is a dense
``(n, n)`` integer array with ``UNDEF`` marking undefined products, so every
axiom scan is a handful of vectorized lookups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iproduct
from typing import Iterable, Sequence

import numpy as np

from .errors import ActionError, NotTransitive, StructureError

UNDEF = -1


def _frozen(arr, name: str, shape: tuple[int, ...]) -> np.ndarray:
    out = np.array(arr, dtype=np.int64, copy=True)
    if out.shape != shape:
        raise StructureError(f"{name} has shape {out.shape}, expected {shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class SemigroupoidTable:
    """Finite semigroupoid with optional involution and unit.

    ``src[a]`` is the domain d(a), ``tgt[a]`` the codomain c(a) and
    ``mul[a, b]`` the product ab (or ``UNDEF``).  ``lengths`` and
    ``max_length`` are set only for length-truncated tables, where a
    composable pair whose lengths add past the bound may be undefined.
    """

    n_objects: int
    src: np.ndarray
    tgt: np.ndarray
    mul: np.ndarray
    star: np.ndarray | None = None
    units: np.ndarray | None = None
    labels: tuple[str, ...] | None = None
    lengths: np.ndarray | None = None
    max_length: int | None = None

    def __post_init__(self):
        n = len(np.asarray(self.src))
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        if self.n_objects < 0:
            raise StructureError("n_objects must be non-negative")
        set_("src", _frozen(self.src, "src", (n,)))
        set_("tgt", _frozen(self.tgt, "tgt", (n,)))
        set_("mul", _frozen(self.mul, "mul", (n, n)))
        for name in ("src", "tgt"):
            arr = getattr(self, name)
            if n and (arr.min() < 0 or arr.max() >= self.n_objects):
                bad = int(np.flatnonzero((arr < 0) | (arr >= self.n_objects))[0])
                raise StructureError(f"{name}[{bad}]={arr[bad]} is not an object id")
        if n and (self.mul.min() < UNDEF or self.mul.max() >= n):
            a, b = np.argwhere((self.mul < UNDEF) | (self.mul >= n))[0]
            raise StructureError(f"mul[{a},{b}]={self.mul[a, b]} is not an element id")
        if self.star is not None:
            set_("star", _frozen(self.star, "star", (n,)))
            if n and (self.star.min() < 0 or self.star.max() >= n):
                raise StructureError("star maps outside the element set")
        if self.units is not None:
            set_("units", _frozen(self.units, "units", (self.n_objects,)))
            if self.n_objects and (self.units.min() < 0 or self.units.max() >= n):
                raise StructureError("units map outside the element set")
        if self.lengths is not None:
            set_("lengths", _frozen(self.lengths, "lengths", (n,)))
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != n:
                raise StructureError(f"{len(labels)} labels for {n} elements")
            set_("labels", labels)

    # -- construction -------------------------------------------------------
    @classmethod
    def from_products(
        cls,
        n_objects: int,
        src: Sequence[int],
        tgt: Sequence[int],
        products: Iterable[tuple[int, int, int]],
        star: Sequence[int] | None = None,
        units: Sequence[int] | None = None,
        labels: Sequence[str] | None = None,
        **kw,
    ) -> "SemigroupoidTable":
        n = len(src)
        mul = np.full((n, n), UNDEF, dtype=np.int64)
        for a, b, ab in products:
            if not (0 <= a < n and 0 <= b < n and 0 <= ab < n):
                raise StructureError(f"product triple {[a, b, ab]} references an unknown element")
            if mul[a, b] != UNDEF and mul[a, b] != ab:
                raise StructureError(
                    f"conflicting products {[a, b, int(mul[a, b])]} and {[a, b, ab]}"
                )
            mul[a, b] = ab
        return cls(n_objects, src, tgt, mul, star=star, units=units,
                   labels=tuple(labels) if labels is not None else None, **kw)

    # -- queries -------------------------------------------------------------
    @property
    def n_elements(self) -> int:
        return len(self.src)

    @property
    def has_star(self) -> bool:
        return self.star is not None

    @property
    def has_unit(self) -> bool:
        return self.units is not None

    @property
    def is_truncated(self) -> bool:
        return self.max_length is not None

    def label(self, a: int) -> str:
        return self.labels[a] if self.labels is not None else str(a)

    def product(self, a: int, b: int) -> int | None:
        p = int(self.mul[a, b])
        return None if p == UNDEF else p

    def composable_mask(self) -> np.ndarray:
        return self.src[:, None] == self.tgt[None, :]

    def overflow_mask(self) -> np.ndarray:
        """Pairs whose product may be left undefined by truncation."""
        n = self.n_elements
        if self.max_length is None or self.lengths is None:
            return np.zeros((n, n), dtype=bool)
        return (self.lengths[:, None] + self.lengths[None, :]) > self.max_length

    def products(self) -> list[tuple[int, int, int]]:
        a, b = np.nonzero(self.mul != UNDEF)
        return [(int(x), int(y), int(self.mul[x, y])) for x, y in zip(a, b)]


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    axiom: str
    witness: tuple[int, ...]
    detail: str = ""


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.counts

    def by_axiom(self, axiom: str) -> list[Violation]:
        return [v for v in self.violations if v.axiom == axiom]

    def add(self, axiom: str, witness, detail: str, cap: int) -> None:
        self.counts[axiom] = self.counts.get(axiom, 0) + 1
        if self.counts[axiom] <= cap:
            self.violations.append(Violation(axiom, tuple(int(w) for w in witness), detail))


def _assoc_scan(t: SemigroupoidTable, chunk: int = 4096):
    """Yield (a, b, c) with (ab)c and a(bc) both defined and different."""
    mul = t.mul
    pa, pb = np.nonzero(mul != UNDEF)
    for start in range(0, len(pa), chunk):
        a = pa[start:start + chunk]
        b = pb[start:start + chunk]
        ab = mul[a, b]
        left = mul[ab]  # (ab)c over all c
        bc = mul[b]
        right = np.where(bc != UNDEF, mul[a[:, None], np.maximum(bc, 0)], UNDEF)
        bad = (left != UNDEF) & (right != UNDEF) & (left != right)
        for i, c in zip(*np.nonzero(bad)):
            yield int(a[i]), int(b[i]), int(c)


def validate(table: SemigroupoidTable, max_witnesses: int = 100) -> ValidationReport:
    """Scan every axiom exhaustively; violations carry witness tuples."""
    t = table
    rep = ValidationReport()
    n = t.n_elements
    if n == 0:
        return rep
    comp = t.composable_mask()
    defined = t.mul != UNDEF
    ovf = t.overflow_mask()
    cap = max_witnesses

    for a, b in np.argwhere(defined & ~comp):
        rep.add("SG3", (a, b), "product defined on a non-composable pair", cap)
    for a, b in np.argwhere(comp & ~defined & ~ovf):
        rep.add("SG3", (a, b), "composable pair without a product", cap)
    ok_pairs = defined & comp
    safe = np.maximum(t.mul, 0)
    wrong = ok_pairs & ((t.src[safe] != t.src[None, :]) | (t.tgt[safe] != t.tgt[:, None]))
    for a, b in np.argwhere(wrong):
        rep.add("SG3", (a, b), "product has the wrong domain or codomain", cap)

    for a, b, c in _assoc_scan(t):
        rep.add("SG4", (a, b, c), "(ab)c != a(bc)", cap)

    if t.star is not None:
        s = t.star
        for a in np.flatnonzero((t.src[s] != t.tgt) | (t.tgt[s] != t.src)):
            rep.add("I1", (a,), "star does not swap domain and codomain", cap)
        for a in np.flatnonzero(s[s] != np.arange(n)):
            rep.add("I3", (a,), "star is not an involution", cap)
        for a, b in np.argwhere(defined):
            lhs = s[t.mul[a, b]]
            rhs = t.mul[s[b], s[a]]
            if rhs == UNDEF and ovf[s[b], s[a]]:
                continue
            if lhs != rhs:
                rep.add("I2", (a, b), "(ab)* != b*a*", cap)

    if t.units is not None:
        u = t.units
        for sobj in range(t.n_objects):
            e = u[sobj]
            if t.src[e] != sobj or t.tgt[e] != sobj:
                rep.add("U1", (sobj, e), "unit is not a loop at its object", cap)
            if t.star is not None and t.star[e] != e:
                rep.add("U*", (sobj, e), "unit is not self-adjoint", cap)
            for a in np.flatnonzero(t.tgt == sobj):
                if t.mul[e, a] != a:
                    rep.add("U2", (sobj, a), "unit does not act as a left identity", cap)
            for a in np.flatnonzero(t.src == sobj):
                if t.mul[a, e] != a:
                    rep.add("U3", (sobj, a), "unit does not act as a right identity", cap)
        vals, cnt = np.unique(u, return_counts=True)
        for e in vals[cnt > 1]:
            objs = np.flatnonzero(u == e)
            rep.add("U1", (objs[0], objs[1]), "two objects share a unit", cap)
    return rep


# ---------------------------------------------------------------------------
# fibers and classification


@dataclass(frozen=True)
class Fibers:
    upper: tuple[int, ...]  # codomain s
    lower: tuple[int, ...]  # domain s
    between: dict[int, tuple[int, ...]]  # t -> elements with domain s, codomain t


def fibers(table: SemigroupoidTable, s: int) -> Fibers:
    up = tuple(int(a) for a in np.flatnonzero(table.tgt == s))
    low = tuple(int(a) for a in np.flatnonzero(table.src == s))
    between: dict[int, tuple[int, ...]] = {}
    for a in low:
        between.setdefault(int(table.tgt[a]), ())
        between[int(table.tgt[a])] += (a,)
    return Fibers(up, low, between)


@dataclass(frozen=True)
class ClassificationFlags:
    has_unit: bool
    has_star: bool
    transitive: bool
    principal: bool
    inverse_semigroupoid: bool
    groupoid: bool
    left_cancellative: bool
    star_is_inverse: bool = False
    isolated: tuple[int, ...] = ()


def generalized_inverses(table: SemigroupoidTable, a: int) -> list[int]:
    """All b with aba = a and bab = b (exhaustive)."""
    t = table
    cand = np.flatnonzero((t.src == t.tgt[a]) & (t.tgt == t.src[a]))
    out = []
    for b in cand:
        ab, ba = t.mul[a, b], t.mul[b, a]
        if ab == UNDEF or ba == UNDEF:
            continue
        if t.mul[ab, a] == a and t.mul[ba, b] == b:
            out.append(int(b))
    return out


def classify(table: SemigroupoidTable) -> ClassificationFlags:
    t = table
    n, m = t.n_elements, t.n_objects
    pairs = set(zip(t.tgt.tolist(), t.src.tolist()))
    transitive = len(pairs) == m * m
    principal = len(pairs) == n

    inverses = [generalized_inverses(t, a) for a in range(n)]
    inverse = n > 0 and all(len(c) == 1 for c in inverses)
    star_is_inverse = bool(
        inverse and t.star is not None and all(t.star[a] == inverses[a][0] for a in range(n))
    )

    groupoid = False
    if t.star is not None and t.units is not None and n > 0:
        ar = np.arange(n)
        groupoid = bool(
            np.all(t.mul[ar, t.star] == t.units[t.tgt])
            and np.all(t.mul[t.star, ar] == t.units[t.src])
        )

    left_canc = True
    for g in range(n):
        row = t.mul[g]
        row = row[row != UNDEF]
        if len(np.unique(row)) != len(row):
            left_canc = False
            break

    touched = np.zeros(m, dtype=bool)
    touched[t.src] = True
    touched[t.tgt] = True
    return ClassificationFlags(
        has_unit=t.units is not None,
        has_star=t.star is not None,
        transitive=transitive,
        principal=principal,
        inverse_semigroupoid=bool(inverse),
        groupoid=groupoid,
        left_cancellative=left_canc,
        star_is_inverse=star_is_inverse,
        isolated=tuple(int(s) for s in np.flatnonzero(~touched)),
    )


# ---------------------------------------------------------------------------
# canonical constructions


def from_relation(n_points: int, pairs: Iterable[tuple[int, int]]) -> SemigroupoidTable:
    """Relation semigroupoid: (s,t)(t,v) = (s,v), d(s,t) = t, c(s,t) = s."""
    elems: list[tuple[int, int]] = []
    index: dict[tuple[int, int], int] = {}
    for s, t in pairs:
        s, t = int(s), int(t)
        if not (0 <= s < n_points and 0 <= t < n_points):
            raise StructureError(f"pair {(s, t)} outside the point set")
        if (s, t) not in index:
            index[(s, t)] = len(elems)
            elems.append((s, t))
    products = []
    for (s, t) in elems:
        for (t2, v) in elems:
            if t2 != t:
                continue
            if (s, v) not in index:
                raise NotTransitive((s, t), (t, v))
            products.append((index[(s, t)], index[(t, v)], index[(s, v)]))
    units = None
    if all((s, s) in index for s in range(n_points)):
        units = [index[(s, s)] for s in range(n_points)]
    star = None
    if all((t, s) in index for (s, t) in elems):
        star = [index[(t, s)] for (s, t) in elems]
    return SemigroupoidTable.from_products(
        n_points,
        src=[t for (_, t) in elems],
        tgt=[s for (s, _) in elems],
        products=products,
        star=star,
        units=units,
        labels=[f"({s},{t})" for (s, t) in elems],
    )


def pair_groupoid(n: int) -> SemigroupoidTable:
    return from_relation(n, [(s, t) for s in range(n) for t in range(n)])


def _identity_of(cayley: np.ndarray) -> int | None:
    k = len(cayley)
    for e in range(k):
        if np.all(cayley[e] == np.arange(k)) and np.all(cayley[:, e] == np.arange(k)):
            return e
    return None


def _inverses_of(cayley: np.ndarray, e: int) -> list[int] | None:
    inv = []
    for g in range(len(cayley)):
        hits = np.flatnonzero((cayley[g] == e) & (cayley[:, g] == e))
        if len(hits) == 0:
            return None
        inv.append(int(hits[0]))
    return inv


def from_group(cayley) -> SemigroupoidTable:
    """One-object table of a finite group, star = inverse."""
    c = np.asarray(cayley, dtype=np.int64)
    e = _identity_of(c)
    if e is None:
        raise StructureError("Cayley table has no identity")
    inv = _inverses_of(c, e)
    if inv is None:
        raise StructureError("Cayley table is not a group")
    k = len(c)
    return SemigroupoidTable(1, np.zeros(k), np.zeros(k), c, star=inv, units=[e])


def cyclic_group(k: int) -> SemigroupoidTable:
    a = np.arange(k)
    return from_group((a[:, None] + a[None, :]) % k)


def transformation_semigroupoid(monoid_table, action) -> SemigroupoidTable:
    """Elements (x, g); d(x,g) = x.g, c(x,g) = x, (x,g)(x.g,h) = (x,gh).

    ``monoid_table[g, h]`` is the product gh and ``action[x, g]`` is x.g.
    Units are attached when the semigroup has an identity acting trivially;
    the star (x,g)* = (x.g, g^-1) when, in addition, it is a group.
    """
    G = np.asarray(monoid_table, dtype=np.int64)
    act = np.asarray(action, dtype=np.int64)
    k = len(G)
    nx = act.shape[0]
    if G.shape != (k, k) or act.shape != (nx, k):
        raise StructureError("monoid table must be (k,k) and action (|X|,k)")
    for x, g, h in iproduct(range(nx), range(k), range(k)):
        if act[act[x, g], h] != act[x, G[g, h]]:
            raise ActionError(x, g, h, "(x.g).h != x.(gh)")
    idx = lambda x, g: x * k + g  # noqa: E731
    src, tgt, labels, products = [], [], [], []
    for x in range(nx):
        for g in range(k):
            src.append(int(act[x, g]))
            tgt.append(x)
            labels.append(f"({x},{g})")
    for x in range(nx):
        for g in range(k):
            y = act[x, g]
            for h in range(k):
                products.append((idx(x, g), idx(y, h), idx(x, G[g, h])))
    e = _identity_of(G)
    units = None
    star = None
    if e is not None and all(act[x, e] == x for x in range(nx)):
        units = [idx(x, e) for x in range(nx)]
        inv = _inverses_of(G, e)
        if inv is not None:
            star = [idx(int(act[x, g]), inv[g]) for x in range(nx) for g in range(k)]
    return SemigroupoidTable.from_products(
        nx, src, tgt, products, star=star, units=units, labels=labels
    )
