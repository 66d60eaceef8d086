"""Minimal orthogonal dilations of partially positive semidefinite maps.

For every object ``s`` the fiber Gram ``G_s`` is factored as ``Q_s* Q_s``
with ``Q_s`` of full row rank ``r_s``; the factor space ``L_s = C^{r_s}``
is the block of ``s`` in ``K_x``, ``x = tau(s)``, and

* ``V(s)`` is the column block of ``Q_s`` at the unit ``e_s``;
* ``rep(a)`` solves ``rep(a) Q_{d(a)}[:, b] = Q_{c(a)}[:, ab]`` for the
  basis elements ``b`` whose product ``ab`` stays in the basis.

On length-truncated tables the Gram basis is a window of short words; an
element whose defining columns do not span ``L_{d(a)}`` is instead built
as a product of already determined elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .errors import (
    DimensionMismatch,
    IllConditioned,
    NotFlat,
    NotInverseSemigroupoid,
    NotPSD,
    NotUnital,
    ShapeError,
    StructureError,
)
from .linalg import (
    PSD_TOL,
    RANK_TOL,
    VERIFY_TOL,
    lstsq,
    max_abs,
    numerical_rank,
    op_norm,
    orthonormal_basis,
    psd_factor,
)
from .maps import CoherentMap, check_unital, fiber_basis, fiber_gram, psd_threshold
from .semigroupoid import UNDEF, SemigroupoidTable, classify

SOLVE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Dilation:
    """Representation ``rep`` on ``K_x = sum of L_s (tau(s) = x)`` plus maps ``V``.

    ``block_sizes[s]`` is ``dim L_s``; blocks of one ``x`` are stacked in
    increasing object order.
    """

    table: SemigroupoidTable
    tau: tuple[int, ...]
    hdims: tuple[int, ...]
    block_sizes: tuple[int, ...]
    rep: tuple[np.ndarray, ...]
    V: tuple[np.ndarray, ...]
    factors: tuple[np.ndarray, ...] | None = None
    bases: tuple[tuple[int, ...], ...] | None = None
    ordering: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tau", tuple(int(x) for x in self.tau))
        object.__setattr__(self, "hdims", tuple(int(x) for x in self.hdims))
        object.__setattr__(self, "block_sizes", tuple(int(x) for x in self.block_sizes))

    @property
    def n_points(self) -> int:
        return len(self.hdims)

    def objects_at(self, x: int) -> list[int]:
        return [s for s, y in enumerate(self.tau) if y == x]

    @property
    def offsets(self) -> tuple[int, ...]:
        off = [0] * len(self.tau)
        acc = [0] * self.n_points
        for s, x in enumerate(self.tau):
            off[s] = acc[x]
            acc[x] += self.block_sizes[s]
        return tuple(off)

    @property
    def kdims(self) -> tuple[int, ...]:
        acc = [0] * self.n_points
        for s, x in enumerate(self.tau):
            acc[x] += self.block_sizes[s]
        return tuple(acc)

    def layout(self, x: int) -> list[tuple[int, int, int]]:
        """(object, offset, size) triples of the blocks making up ``K_x``."""
        off = self.offsets
        return [(s, off[s], self.block_sizes[s]) for s in self.objects_at(x)]

    def block(self, s: int) -> slice:
        o = self.offsets[s]
        return slice(o, o + self.block_sizes[s])

    def column(self, a: int) -> np.ndarray:
        """rep(a) V(d(a)), a map from H_{tau(d(a))} into K_{tau(c(a))}."""
        return self.rep[a] @ self.V[int(self.table.src[a])]


# ---------------------------------------------------------------------------
# construction


@dataclass(frozen=True, eq=False)
class _Fiber:
    basis: tuple[int, ...]
    offsets: tuple[int, ...]
    Q: np.ndarray
    lambda_min: float

    @property
    def rank(self) -> int:
        return self.Q.shape[0]

    def cols(self, i: int) -> np.ndarray:
        return self.Q[:, self.offsets[i]:self.offsets[i + 1]]


def _factor_fiber(T: CoherentMap, s: int, window, order) -> _Fiber:
    fg = fiber_gram(T, s, window, order)
    if fg.lambda_min < psd_threshold(fg.gram, PSD_TOL):
        raise NotPSD(fg.lambda_min, s)
    fac = psd_factor(fg.gram, RANK_TOL, psd_tol=np.inf)
    return _Fiber(fg.ordering, fg.block_offsets, fac.Q, fg.lambda_min)


def structure_matrix(table: SemigroupoidTable, alpha: int, window="full", order=None) -> np.ndarray:
    """Integer matrix with entry (l, b) = number of basis b with alpha b = l.

    Rows follow the basis of the codomain fiber, columns that of the domain
    fiber.
    """
    rows = fiber_basis(table, int(table.tgt[alpha]), window, order)
    cols = fiber_basis(table, int(table.src[alpha]), window, order)
    pos = {a: i for i, a in enumerate(rows)}
    m = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for j, b in enumerate(cols):
        p = table.mul[alpha, b]
        if p != UNDEF and int(p) in pos:
            m[pos[int(p)], j] += 1
    return m


def _solve_direct(T: CoherentMap, a: int, fd: _Fiber, fc: _Fiber) -> np.ndarray | None:
    t = T.table
    pos = {b: i for i, b in enumerate(fc.basis)}
    A, B = [], []
    for j, b in enumerate(fd.basis):
        p = t.mul[a, b]
        if p != UNDEF and int(p) in pos:
            A.append(fd.cols(j))
            B.append(fc.cols(pos[int(p)]))
    if fd.rank == 0:
        return np.zeros((fc.rank, 0), dtype=complex)
    if not A:
        return None
    A = np.hstack(A)
    B = np.hstack(B)
    if numerical_rank(A, 1e-8) < fd.rank:
        return None
    xh, _ = lstsq(A.conj().T, B.conj().T)
    phi = xh.conj().T
    resid = max_abs(phi @ A - B)
    bound = SOLVE_TOL * max(1.0, max_abs(B))
    if resid > bound:
        raise IllConditioned(a, resid, bound)
    return phi


def _element_order(table: SemigroupoidTable) -> list[int]:
    ids = list(range(table.n_elements))
    if table.lengths is not None:
        ids.sort(key=lambda a: (int(table.lengths[a]), a))
    return ids


def _solve_all(T: CoherentMap, facs: Sequence[_Fiber]) -> list[np.ndarray]:
    t = T.table
    phis: list[np.ndarray | None] = [None] * t.n_elements
    pending = []
    for a in range(t.n_elements):
        phis[a] = _solve_direct(T, a, facs[t.src[a]], facs[t.tgt[a]])
        if phis[a] is None:
            pending.append(a)
    while pending:
        progress = []
        for a in sorted(pending, key=_element_order(t).index):
            for mu, nu in np.argwhere(t.mul == a):
                if phis[mu] is not None and phis[nu] is not None:
                    phis[a] = phis[mu] @ phis[nu]
                    progress.append(a)
                    break
        if not progress:
            a = pending[0]
            raise NotFlat(
                a,
                "the truncated data does not determine its representation: "
                f"no spanning defining columns in fiber {int(t.src[a])} "
                "and no factorization into determined elements",
            )
        pending = [a for a in pending if phis[a] is None]
    return phis  # type: ignore[return-value]


def _assemble(table, tau, hdims, sizes, phis, vblocks, **kw) -> Dilation:
    tmp = Dilation(table, tau, hdims, sizes, (), ())
    off, kd = tmp.offsets, tmp.kdims
    rep = []
    for a in range(table.n_elements):
        c, d = int(table.tgt[a]), int(table.src[a])
        m = np.zeros((kd[tau[c]], kd[tau[d]]), dtype=complex)
        m[off[c]:off[c] + sizes[c], off[d]:off[d] + sizes[d]] = phis[a]
        m.setflags(write=False)
        rep.append(m)
    V = []
    for s in range(table.n_objects):
        m = np.zeros((kd[tau[s]], hdims[tau[s]]), dtype=complex)
        m[off[s]:off[s] + sizes[s], :] = vblocks[s]
        m.setflags(write=False)
        V.append(m)
    return Dilation(table, tau, hdims, sizes, tuple(rep), tuple(V), **kw)


def dilate(T: CoherentMap, order: Sequence[int] | None = None, window="auto") -> Dilation:
    """Construct the minimal orthogonal dilation of ``T``.

    ``order`` permutes the element ordering used for Gram blocks; the result
    is unitarily equivalent for every choice.
    """
    t = T.table
    if t.units is None or t.star is None:
        raise StructureError("dilation needs a table with units and an involution")
    if order is not None:
        order = tuple(int(a) for a in order)
        if sorted(order) != list(range(t.n_elements)):
            raise ValueError("order must be a permutation of the element ids")
    facs = pmap(lambda s: _factor_fiber(T, s, window, order), range(t.n_objects))
    phis = _solve_all(T, facs)
    vblocks = []
    for s, f in enumerate(facs):
        i = f.basis.index(int(t.units[s]))
        vblocks.append(f.cols(i))
    return _assemble(
        t, T.tau, T.dims, tuple(f.rank for f in facs), phis, vblocks,
        factors=tuple(f.Q for f in facs),
        bases=tuple(f.basis for f in facs),
        ordering=order if order is not None else tuple(range(t.n_elements)),
    )


def factor_space_operator(T: CoherentMap, alpha: int, window="auto") -> tuple[np.ndarray, float]:
    """Factor-space matrix of ``alpha`` and its operator norm."""
    t = T.table
    d, c = int(t.src[alpha]), int(t.tgt[alpha])
    fd = _factor_fiber(T, d, window, None)
    fc = fd if c == d else _factor_fiber(T, c, window, None)
    phi = _solve_direct(T, alpha, fd, fc)
    if phi is None:
        D = dilate(T, window=window)
        phi = D.rep[alpha][D.block(c), D.block(d)]
    return phi, op_norm(phi)


# ---------------------------------------------------------------------------
# verification


def representation_residuals(table: SemigroupoidTable, mats: Sequence[np.ndarray]) -> dict[str, tuple[float, tuple]]:
    """Worst multiplicativity and adjoint deviations with their witnesses."""
    mult, mult_w = 0.0, ()
    for a, b in np.argwhere(table.mul != UNDEF):
        r = max_abs(mats[table.mul[a, b]] - mats[a] @ mats[b])
        if r > mult:
            mult, mult_w = r, (int(a), int(b))
    adj, adj_w = 0.0, ()
    if table.star is not None:
        for a in range(table.n_elements):
            r = max_abs(mats[table.star[a]] - mats[a].conj().T)
            if r > adj:
                adj, adj_w = r, (a,)
    return {"multiplicativity": (mult, mult_w), "adjoint": (adj, adj_w)}


@dataclass
class VerificationReport:
    residuals: dict[str, float]
    witnesses: dict[str, tuple]
    minimality_defect: dict[int, int]
    tol: float

    @property
    def is_dilation(self) -> bool:
        return all(v < self.tol for v in self.residuals.values())

    @property
    def minimal(self) -> bool:
        return all(v == 0 for v in self.minimality_defect.values())

    @property
    def passed(self) -> bool:
        return self.is_dilation and self.minimal

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


def _check_shapes(T: CoherentMap, D: Dilation) -> None:
    t = T.table
    kd = D.kdims
    for a in range(t.n_elements):
        want = (kd[D.tau[t.tgt[a]]], kd[D.tau[t.src[a]]])
        if D.rep[a].shape != want:
            raise ShapeError(f"rep[{a}] has shape {D.rep[a].shape}, expected {want}")
    for s in range(t.n_objects):
        want = (kd[D.tau[s]], T.dim_of(s))
        if D.V[s].shape != want:
            raise ShapeError(f"V[{s}] has shape {D.V[s].shape}, expected {want}")


def _worst(pairs):
    best, w = 0.0, ()
    for r, wit in pairs:
        if r > best:
            best, w = r, wit
    return best, w


def verify_dilation(T: CoherentMap, D: Dilation, tol: float = VERIFY_TOL) -> VerificationReport:
    t = T.table
    if tuple(T.tau) != D.tau:
        raise ShapeError("map and dilation use different aggregation maps")
    _check_shapes(T, D)
    n = t.n_elements
    res: dict[str, float] = {}
    wit: dict[str, tuple] = {}
    cols = [D.column(a) for a in range(n)]

    def put(name, pair):
        res[name], wit[name] = pair

    put("reconstruction", _worst(
        (max_abs(T.mats[a] - D.V[t.tgt[a]].conj().T @ cols[a]), (a,)) for a in range(n)
    ))
    rr = representation_residuals(t, D.rep)
    put("multiplicativity", rr["multiplicativity"])
    put("adjoint", rr["adjoint"])

    def outside(m, rows: slice, cs: slice | None):
        mask = np.ones(m.shape, dtype=bool)
        if cs is None:
            mask[rows, :] = False
        else:
            mask[rows, cs] = False
        return max_abs(m[mask]) if mask.any() else 0.0

    put("block_support", _worst(
        (outside(D.rep[a], D.block(t.tgt[a]), D.block(t.src[a])), (a,)) for a in range(n)
    ))
    put("v_range", _worst((outside(D.V[s], D.block(s), None), (s,)) for s in range(t.n_objects)))

    by_target: dict[int, np.ndarray] = {}
    for s in range(t.n_objects):
        mem = [cols[a] for a in range(n) if t.tgt[a] == s]
        by_target[s] = np.hstack(mem) if mem else np.zeros((D.kdims[D.tau[s]], 0), dtype=complex)
    orth = []
    for s in range(t.n_objects):
        for s2 in range(s + 1, t.n_objects):
            if D.tau[s] == D.tau[s2]:
                orth.append((max_abs(by_target[s].conj().T @ by_target[s2]), (s, s2)))
    put("orthogonality", _worst(orth))

    # rep(b) kills vectors sitting over an object other than d(b)
    lem = []
    for a in range(n):
        for b in range(n):
            if D.tau[t.tgt[a]] == D.tau[t.src[b]] and t.tgt[a] != t.src[b]:
                lem.append((max_abs(D.rep[b] @ cols[a]), (a, b)))
    put("mismatch_annihilation", _worst(lem))

    us = []
    if t.units is not None:
        for x in range(D.n_points):
            k = D.kdims[x]
            acc = np.zeros((k, k), dtype=complex)
            for s in D.objects_at(x):
                acc += D.rep[t.units[s]]
            us.append((max_abs(acc - np.eye(k)), (x,)))
    put("unit_sum", _worst(us))

    defect = {}
    for x in range(D.n_points):
        mem = [by_target[s] for s in D.objects_at(x)]
        span = np.hstack(mem) if mem else np.zeros((D.kdims[x], 0))
        defect[x] = D.kdims[x] - numerical_rank(span)
    return VerificationReport(res, wit, defect, tol)


# ---------------------------------------------------------------------------
# uniqueness, partial isometries, unital embedding, minimalization


@dataclass
class EquivalenceWitness:
    U: tuple[np.ndarray, ...]
    residuals: dict[str, float]
    tol: float

    @property
    def passed(self) -> bool:
        return all(v < self.tol for v in self.residuals.values())


def _span_block(D: Dilation, s: int) -> np.ndarray:
    t = D.table
    mem = [D.column(a)[D.block(s), :] for a in range(t.n_elements) if t.tgt[a] == s]
    return np.hstack(mem) if mem else np.zeros((D.block_sizes[s], 0), dtype=complex)


def unitary_equivalence(D1: Dilation, D2: Dilation, T: CoherentMap, tol: float = VERIFY_TOL) -> EquivalenceWitness:
    """Unitary U with U rep1 = rep2 U and U V1 = V2, built fiber by fiber."""
    t = T.table
    if D1.block_sizes != D2.block_sizes or D1.tau != D2.tau:
        raise DimensionMismatch(
            f"block dimensions differ: {D1.block_sizes} vs {D2.block_sizes}"
        )
    blocks = {}
    for s in range(t.n_objects):
        A1, A2 = _span_block(D1, s), _span_block(D2, s)
        xh, _ = lstsq(A1.conj().T, A2.conj().T)
        blocks[s] = xh.conj().T
    U = []
    for x in range(D1.n_points):
        k = D1.kdims[x]
        u = np.zeros((k, k), dtype=complex)
        for s in D1.objects_at(x):
            u[D2.block(s), D1.block(s)] = blocks[s]
        U.append(u)
    unit = max((max(max_abs(u.conj().T @ u - np.eye(len(u))), max_abs(u @ u.conj().T - np.eye(len(u))))
                for u in U), default=0.0)
    inter = max((max_abs(U[D1.tau[t.tgt[a]]] @ D1.rep[a] - D2.rep[a] @ U[D1.tau[t.src[a]]])
                 for a in range(t.n_elements)), default=0.0)
    vm = max((max_abs(U[D1.tau[s]] @ D1.V[s] - D2.V[s]) for s in range(t.n_objects)), default=0.0)
    return EquivalenceWitness(tuple(U), {"unitarity": unit, "intertwining": inter, "v_matching": vm}, tol)


@dataclass
class PartialIsometryReport:
    triple: dict[int, float]
    norms: dict[int, float]
    tol: float

    @property
    def max_triple(self) -> float:
        return max(self.triple.values(), default=0.0)

    @property
    def max_norm(self) -> float:
        return max(self.norms.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_triple < self.tol and self.max_norm <= 1 + self.tol


def check_partial_isometries(D: Dilation, tol: float = VERIFY_TOL) -> PartialIsometryReport:
    flags = classify(D.table)
    if not flags.inverse_semigroupoid:
        raise NotInverseSemigroupoid("table is not an inverse semigroupoid")
    if not flags.star_is_inverse:
        raise NotInverseSemigroupoid("the involution is not the generalized inverse")
    triple, norms = {}, {}
    for a, m in enumerate(D.rep):
        triple[a] = max_abs(m @ m.conj().T @ m - m)
        norms[a] = op_norm(m)
    return PartialIsometryReport(triple, norms, tol)


@dataclass
class EmbeddingReport:
    W: tuple[np.ndarray, ...]
    isometry: float
    compression: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.isometry < self.tol and self.compression < self.tol


def embed_unital(T: CoherentMap, D: Dilation, tol: float = VERIFY_TOL) -> EmbeddingReport:
    """W_x = sum of V(s) over tau(s) = x; an isometry when T is unital."""
    ur = check_unital(T, tol)
    if not ur.passed:
        raise NotUnital(f"map is not unital: {ur.witness()}")
    t = T.table
    W = []
    for x in range(D.n_points):
        w = np.zeros((D.kdims[x], D.hdims[x]), dtype=complex)
        for s in D.objects_at(x):
            w = w + D.V[s]
        W.append(w)
    iso = max((max_abs(w.conj().T @ w - np.eye(w.shape[1])) for w in W), default=0.0)
    comp = max((max_abs(T.mats[a] - W[D.tau[t.tgt[a]]].conj().T @ D.rep[a] @ W[D.tau[t.src[a]]])
                for a in range(t.n_elements)), default=0.0)
    return EmbeddingReport(tuple(W), iso, comp, tol)


def minimalize(D: Dilation, T: CoherentMap | None = None) -> Dilation:
    """Compress ``D`` onto the span of the vectors rep(a) V(d(a)) h."""
    t = D.table
    bases = {}
    for s in range(t.n_objects):
        mem = [D.column(a) for a in range(t.n_elements) if t.tgt[a] == s]
        k = D.kdims[D.tau[s]]
        bases[s] = orthonormal_basis(np.hstack(mem)) if mem else np.zeros((k, 0), dtype=complex)
    Bx = []
    for x in range(D.n_points):
        mem = [bases[s] for s in D.objects_at(x)]
        Bx.append(np.hstack(mem) if mem else np.zeros((D.kdims[x], 0), dtype=complex))
    sizes = tuple(bases[s].shape[1] for s in range(t.n_objects))
    tmp = Dilation(t, D.tau, D.hdims, sizes, (), ())
    off = tmp.offsets
    phis, vblocks = [], []
    for a in range(t.n_elements):
        c, d = int(t.tgt[a]), int(t.src[a])
        full = Bx[D.tau[c]].conj().T @ D.rep[a] @ Bx[D.tau[d]]
        phis.append(full[off[c]:off[c] + sizes[c], off[d]:off[d] + sizes[d]])
    for s in range(t.n_objects):
        full = Bx[D.tau[s]].conj().T @ D.V[s]
        vblocks.append(full[off[s]:off[s] + sizes[s], :])
    return _assemble(t, D.tau, D.hdims, sizes, phis, vblocks, ordering=D.ordering)


# ---------------------------------------------------------------------------
# constructions on dilations


def _blocks(D: Dilation):
    t = D.table
    phis = [D.rep[a][D.block(t.tgt[a]), D.block(t.src[a])] for a in range(t.n_elements)]
    vbl = [D.V[s][D.block(s), :] for s in range(t.n_objects)]
    return phis, vbl


def pad(D: Dilation, s: int, k: int = 1) -> Dilation:
    """Append ``k`` dimensions to the block of ``s`` on which everything vanishes."""
    t = D.table
    phis, vbl = _blocks(D)
    sizes = list(D.block_sizes)
    sizes[s] += k
    new_phis = []
    for a in range(t.n_elements):
        c, d = int(t.tgt[a]), int(t.src[a])
        m = np.zeros((sizes[c], sizes[d]), dtype=complex)
        m[:phis[a].shape[0], :phis[a].shape[1]] = phis[a]
        new_phis.append(m)
    new_v = [np.vstack([v, np.zeros((sizes[i] - v.shape[0], v.shape[1]))]) for i, v in enumerate(vbl)]
    return _assemble(t, D.tau, D.hdims, tuple(sizes), new_phis, new_v, ordering=D.ordering)


def direct_sum(D1: Dilation, D2: Dilation) -> Dilation:
    """Blockwise direct sum; the compressions of the two add up."""
    if D1.tau != D2.tau or D1.hdims != D2.hdims:
        raise ShapeError("direct sum needs matching bundles")
    t = D1.table
    p1, v1 = _blocks(D1)
    p2, v2 = _blocks(D2)
    sizes = tuple(a + b for a, b in zip(D1.block_sizes, D2.block_sizes))
    phis = []
    for a in range(t.n_elements):
        m = np.zeros((p1[a].shape[0] + p2[a].shape[0], p1[a].shape[1] + p2[a].shape[1]), dtype=complex)
        m[:p1[a].shape[0], :p1[a].shape[1]] = p1[a]
        m[p1[a].shape[0]:, p1[a].shape[1]:] = p2[a]
        phis.append(m)
    vbl = [np.vstack([a, b]) for a, b in zip(v1, v2)]
    return _assemble(t, D1.tau, D1.hdims, sizes, phis, vbl, ordering=D1.ordering)


def from_blocks(table: SemigroupoidTable, tau, hdims, phis, vblocks) -> Dilation:
    """Dilation from factor blocks: phis[a] is L_{d(a)} -> L_{c(a)}, vblocks[s] is H -> L_s."""
    sizes = tuple(int(np.shape(v)[0]) for v in vblocks)
    return _assemble(table, tuple(tau), tuple(hdims), sizes,
                     [np.asarray(p, dtype=complex) for p in phis],
                     [np.asarray(v, dtype=complex) for v in vblocks])


def conjugate(D: Dilation, unitaries: Sequence[np.ndarray]) -> Dilation:
    """Apply a unitary ``unitaries[s]`` on each block ``L_s``."""
    t = D.table
    phis, vbl = _blocks(D)
    u = [np.asarray(m, dtype=complex) for m in unitaries]
    new = [u[t.tgt[a]] @ phis[a] @ u[t.src[a]].conj().T for a in range(t.n_elements)]
    return _assemble(t, D.tau, D.hdims, D.block_sizes, new,
                     [u[s] @ vbl[s] for s in range(t.n_objects)], ordering=D.ordering)
