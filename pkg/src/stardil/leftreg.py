"""Aggregated left regular representation and its multiplicity profile."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import max_abs, op_norm
from .semigroupoid import UNDEF, SemigroupoidTable, classify


@dataclass(frozen=True, eq=False)
class LeftRegularSpace:
    """``L[g]`` maps the space of ``tau(d(g))`` into that of ``tau(c(g))``.

    ``bases[x]`` lists the elements whose codomain lies over ``x``;
    ``flagged[g]`` lists basis elements b composable with ``g`` whose
    product was cut off by truncation (their column is zero).
    """

    table: SemigroupoidTable
    tau: tuple[int, ...]
    bases: tuple[tuple[int, ...], ...]
    L: tuple[np.ndarray, ...]
    flagged: tuple[tuple[int, ...], ...]

    def position(self, x: int) -> dict[int, int]:
        return {b: i for i, b in enumerate(self.bases[x])}


def left_regular(table: SemigroupoidTable, tau=None) -> LeftRegularSpace:
    t = table
    tau = tuple(range(t.n_objects)) if tau is None else tuple(int(x) for x in tau)
    npts = max(tau) + 1 if tau else 0
    bases = tuple(tuple(int(g) for g in range(t.n_elements) if tau[t.tgt[g]] == x) for x in range(npts))
    pos = [{b: i for i, b in enumerate(bs)} for bs in bases]
    mats, flagged = [], []
    for g in range(t.n_elements):
        xc, xd = tau[t.tgt[g]], tau[t.src[g]]
        m = np.zeros((len(bases[xc]), len(bases[xd])))
        cut = []
        for j, b in enumerate(bases[xd]):
            if t.tgt[b] != t.src[g]:
                continue
            p = t.mul[g, b]
            if p == UNDEF:
                cut.append(b)
            else:
                m[pos[xc][int(p)], j] = 1.0
        m.setflags(write=False)
        mats.append(m)
        flagged.append(tuple(cut))
    return LeftRegularSpace(t, tau, bases, tuple(mats), tuple(flagged))


@dataclass(frozen=True)
class MultiplicityProfile:
    max_multiplicity: int
    closable: bool
    partial_isometry_expected: bool


def is_invertible(table: SemigroupoidTable, g: int) -> bool:
    if table.units is None:
        return False
    ec, ed = table.units[table.tgt[g]], table.units[table.src[g]]
    return bool(np.any((table.mul[g] == ec) & (table.mul[:, g] == ed)))


def multiplicity_profile(table: SemigroupoidTable, g: int, left_cancellative: bool | None = None) -> MultiplicityProfile:
    """Largest number of solutions a of g a = b over b.

    ``closable`` is always true for a finite table.
    """
    row = table.mul[g]
    row = row[row != UNDEF]
    n = int(np.unique(row, return_counts=True)[1].max()) if len(row) else 0
    if left_cancellative is None:
        left_cancellative = classify(table).left_cancellative
    return MultiplicityProfile(n, True, bool(left_cancellative or is_invertible(table, g)))


@dataclass
class LRReport:
    partial_isometry: dict[int, float]
    projection: dict[int, float]
    multiplicativity: float
    multiplicativity_witness: tuple[int, ...]
    orthogonality: float
    orthogonality_witness: tuple[int, ...]
    norms: dict[int, float]
    bounds: dict[int, int]
    skipped_partial_isometry: tuple[int, ...]
    tol: float

    @property
    def norm_ok(self) -> bool:
        return all(self.norms[g] <= self.bounds[g] + self.tol for g in self.norms)

    def verdicts(self) -> dict[str, bool]:
        return {
            "partial_isometry": all(v < self.tol for v in self.partial_isometry.values()),
            "projection": all(v < self.tol for v in self.projection.values()),
            "multiplicativity": self.multiplicativity < self.tol,
            "orthogonality": self.orthogonality < self.tol,
            "norm_bound": self.norm_ok,
        }

    @property
    def passed(self) -> bool:
        return all(self.verdicts().values())


def check_lr_properties(space: LeftRegularSpace, tol: float = 1e-9) -> LRReport:
    """Residuals of the structural properties, on columns free of truncation effects."""
    t = space.table
    tau = space.tau
    L = space.L
    lc = classify(t).left_cancellative
    profiles = [multiplicity_profile(t, g, lc) for g in range(t.n_elements)]

    piso, skipped = {}, []
    for g, m in enumerate(L):
        if profiles[g].partial_isometry_expected:
            piso[g] = max_abs(m @ m.T @ m - m)
        else:
            skipped.append(g)
    proj = {}
    if t.units is not None:
        for s in range(t.n_objects):
            m = L[t.units[s]]
            proj[s] = max(max_abs(m @ m - m), max_abs(m - m.T))

    mult, mult_w = 0.0, ()
    for g, b in np.argwhere(t.mul != UNDEF):
        p = int(t.mul[g, b])
        basis = space.bases[tau[t.src[b]]]
        good = []
        for j, d in enumerate(basis):
            if t.tgt[d] != t.src[b]:
                good.append(j)
                continue
            bd = t.mul[b, d]
            if bd != UNDEF and t.mul[g, bd] != UNDEF and t.mul[p, d] != UNDEF:
                good.append(j)
        if not good:
            continue
        r = max_abs((L[p] - L[g] @ L[b])[:, good])
        if r > mult:
            mult, mult_w = r, (int(g), int(b))

    orth, orth_w = 0.0, ()
    for g in range(t.n_elements):
        for h in range(t.n_elements):
            if tau[t.tgt[g]] == tau[t.tgt[h]] and t.tgt[g] != t.tgt[h]:
                r = max_abs(L[g].T @ L[h])
                if r > orth:
                    orth, orth_w = r, (g, h)

    norms = {g: op_norm(m) for g, m in enumerate(L)}
    bounds = {g: profiles[g].max_multiplicity for g in range(t.n_elements)}
    return LRReport(piso, proj, mult, mult_w, orth, orth_w, norms, bounds, tuple(skipped), tol)
