"""Cuntz-Krieger-Toeplitz families of a directed graph."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError, ValidationFailed
from .free import DirectedGraph, TruncatedFreeTable, free_star_semigroupoid
from .linalg import VERIFY_TOL, hermitian_eig_min, max_abs
from .maps import CoherentMap


@dataclass(frozen=True, eq=False)
class CKTFamily:
    """Projections ``P[v]`` and operators ``S[f]`` on one space of dimension ``dim_H``."""

    graph: DirectedGraph
    dim_H: int
    P: tuple[np.ndarray, ...]
    S: tuple[np.ndarray, ...]

    def __post_init__(self):
        n = self.dim_H
        if len(self.P) != self.graph.n_vertices or len(self.S) != self.graph.n_edges:
            raise ShapeError("one projection per vertex and one operator per edge required")
        P = tuple(np.asarray(p, dtype=complex) for p in self.P)
        S = tuple(np.asarray(s, dtype=complex) for s in self.S)
        for name, seq in (("P", P), ("S", S)):
            for i, m in enumerate(seq):
                if m.shape != (n, n):
                    raise ShapeError(f"{name}[{i}] has shape {m.shape}, expected {(n, n)}")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "S", S)


@dataclass
class CKTReport:
    idempotent: dict[int, float]
    hermitian: dict[int, float]
    cross: float
    condition_I: dict[int, float]
    condition_CKT: dict[int, float]  # lambda_min of P_v - sum S_f S_f*
    condition_CK: dict[int, float]  # only vertices with 0 < |r^-1(v)|
    nondegenerate: float
    ranges: dict[int, float]
    tol: float

    @property
    def projections_ok(self) -> bool:
        vals = [*self.idempotent.values(), *self.hermitian.values(), self.cross]
        return all(v < self.tol for v in vals)

    @property
    def I_ok(self) -> bool:
        return all(v < self.tol for v in self.condition_I.values())

    @property
    def CKT_ok(self) -> bool:
        return all(v >= -self.tol for v in self.condition_CKT.values())

    @property
    def CK_ok(self) -> bool:
        return all(v < self.tol for v in self.condition_CK.values())

    @property
    def nondegenerate_ok(self) -> bool:
        return self.nondegenerate < self.tol

    @property
    def passed(self) -> bool:
        """The defining axioms of a CKT family: projections, (I), (CKT)."""
        return self.projections_ok and self.I_ok and self.CKT_ok

    def verdicts(self) -> dict[str, bool]:
        return {
            "projections": self.projections_ok,
            "condition_I": self.I_ok,
            "condition_CKT": self.CKT_ok,
            "condition_CK": self.CK_ok,
            "nondegenerate": self.nondegenerate_ok,
        }


def validate_ckt(fam: CKTFamily, tol: float = VERIFY_TOL) -> CKTReport:
    g = fam.graph
    eye = np.eye(fam.dim_H)
    idem = {v: max_abs(p @ p - p) for v, p in enumerate(fam.P)}
    herm = {v: max_abs(p - p.conj().T) for v, p in enumerate(fam.P)}
    cross = 0.0
    for v in range(g.n_vertices):
        for w in range(g.n_vertices):
            if v != w:
                cross = max(cross, max_abs(fam.P[v] @ fam.P[w]))
    cond_i = {f: max_abs(s.conj().T @ s - fam.P[g.edges[f][0]]) for f, s in enumerate(fam.S)}
    ckt, ck = {}, {}
    for v in range(g.n_vertices):
        inc = g.into(v)
        acc = sum((fam.S[f] @ fam.S[f].conj().T for f in inc), np.zeros_like(eye, dtype=complex))
        ckt[v] = hermitian_eig_min(fam.P[v] - acc)
        if inc:
            ck[v] = max_abs(fam.P[v] - acc)
    total = sum(fam.P, np.zeros_like(eye, dtype=complex))
    nondeg = max_abs(total - eye)
    ranges = {f: max_abs((eye - fam.P[g.edges[f][1]]) @ s) for f, s in enumerate(fam.S)}
    return CKTReport(idem, herm, cross, cond_i, ckt, ck, nondeg, ranges, tol)


def induce_representation(fam: CKTFamily, L_max: int, tol: float = VERIFY_TOL) -> CoherentMap:
    """Representation of the truncated free *-semigroupoid on one space.

    Units go to ``P[v]``, edges to ``S[f]``, companions to ``S[f]*`` and
    words to the corresponding products.
    """
    rep = validate_ckt(fam, tol)
    if not rep.passed:
        raise ValidationFailed(rep.verdicts())
    t = free_star_semigroupoid(fam.graph, L_max)
    letters = {}
    for f, s in enumerate(fam.S):
        letters[2 * f] = s
        letters[2 * f + 1] = s.conj().T
    mats = []
    for w in t.words:
        if not w.letters:
            mats.append(fam.P[w.source])
            continue
        m = letters[w.letters[0]]
        for x in w.letters[1:]:
            m = m @ letters[x]
        mats.append(m)
    return CoherentMap(t, (fam.dim_H,), (0,) * t.n_objects, tuple(mats))


@dataclass
class OrthogonalityReport:
    max_residual: float
    witness: tuple[int, int] | None
    pairs_checked: int
    excluded_starred: int
    tol: float
    notice: str = field(default="words containing companion letters are excluded by design")

    @property
    def passed(self) -> bool:
        return self.max_residual < self.tol


def check_restricted_orthogonality(rep: CoherentMap, graph: DirectedGraph | None = None,
                                   L_max: int | None = None, tol: float = VERIFY_TOL) -> OrthogonalityReport:
    """Ranges of star-free words with different ranges are orthogonal."""
    t = rep.table
    if not isinstance(t, TruncatedFreeTable):
        raise TypeError("restricted orthogonality needs a truncated free table")
    if graph is not None and graph != t.graph:
        raise ValueError("representation was induced from a different graph")
    keep = [a for a, w in enumerate(t.words)
            if w.star_free and (L_max is None or w.length <= L_max)]
    excluded = t.n_elements - len(keep)
    worst, wit, count = 0.0, None, 0
    for a in keep:
        for b in keep:
            if t.words[a].range == t.words[b].range:
                continue
            count += 1
            r = max_abs(rep.mats[b].conj().T @ rep.mats[a])
            if wit is None or r > worst:
                worst, wit = r, (a, b)
    return OrthogonalityReport(worst, wit, count, excluded, tol)
