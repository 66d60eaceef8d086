"""Coherent Hermitian maps on *-semigroupoid tables and their fiber Grams."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._parallel import pmap
from .errors import MissingProduct, StructureError
from .linalg import HERM_TOL, PSD_TOL, VERIFY_TOL, hermitian_eig_min, max_abs
from .semigroupoid import UNDEF, SemigroupoidTable


@dataclass(frozen=True)
class HilbertBundle:
    dims: tuple[int, ...]

    @property
    def n_points(self) -> int:
        return len(self.dims)


@dataclass(frozen=True, eq=False)
class CoherentMap:
    """Matrix-valued map on the elements of ``table``.

    ``tau[s]`` assigns each object to a bundle index and ``dims[x]`` is the
    dimension of the space at that index.  ``mats[a]`` should have shape
    ``dims[tau[c(a)]] x dims[tau[d(a)]]``; this is checked by
    :func:`check_coherent`, not enforced here.
    """

    table: SemigroupoidTable
    dims: tuple[int, ...]
    tau: tuple[int, ...]
    mats: tuple[np.ndarray, ...]

    def __post_init__(self):
        t = self.table
        tau = tuple(int(x) for x in self.tau)
        dims = tuple(int(d) for d in self.dims)
        if len(tau) != t.n_objects:
            raise StructureError(f"tau has {len(tau)} entries for {t.n_objects} objects")
        if any(not 0 <= x < len(dims) for x in tau):
            raise StructureError("tau maps outside the bundle index set")
        if any(d < 0 for d in dims):
            raise StructureError("negative bundle dimension")
        if len(self.mats) != t.n_elements:
            raise StructureError(f"{len(self.mats)} matrices for {t.n_elements} elements")
        mats = []
        for m in self.mats:
            a = np.array(m, dtype=complex, copy=True)
            if a.ndim != 2:
                raise StructureError("every value must be a matrix")
            a.setflags(write=False)
            mats.append(a)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mats", tuple(mats))

    @property
    def bundle(self) -> HilbertBundle:
        return HilbertBundle(self.dims)

    @property
    def n_points(self) -> int:
        return len(self.dims)

    def dim_of(self, s: int) -> int:
        """Dimension of the space attached to object ``s``."""
        return self.dims[self.tau[s]]

    def scaled(self, c: complex) -> "CoherentMap":
        return CoherentMap(self.table, self.dims, self.tau, tuple(c * m for m in self.mats))

    @classmethod
    def scalar(cls, table: SemigroupoidTable, values: Sequence[complex], tau=None) -> "CoherentMap":
        """1x1 values, full aggregation unless ``tau`` is given."""
        tau = tuple(tau) if tau is not None else (0,) * table.n_objects
        npts = max(tau) + 1 if tau else 1
        return cls(table, (1,) * npts, tau, tuple(np.array([[v]], dtype=complex) for v in values))


@dataclass
class CoherenceReport:
    hm1: list[tuple[int, tuple[int, int], tuple[int, int]]] = field(default_factory=list)
    hm2: list[tuple[int, float]] = field(default_factory=list)
    max_hm2: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.hm1 and not self.hm2


def check_coherent(T: CoherentMap, tol: float = HERM_TOL) -> CoherenceReport:
    t = T.table
    rep = CoherenceReport()
    good = []
    for a in range(t.n_elements):
        want = (T.dim_of(int(t.tgt[a])), T.dim_of(int(t.src[a])))
        if T.mats[a].shape != want:
            rep.hm1.append((a, want, T.mats[a].shape))
        else:
            good.append(a)
    if t.star is not None:
        ok = set(good)
        for a in good:
            b = int(t.star[a])
            if b not in ok:
                continue
            dev = max_abs(T.mats[b] - T.mats[a].conj().T)
            rep.max_hm2 = max(rep.max_hm2, dev)
            if dev > tol * max(1.0, max_abs(T.mats[a])):
                rep.hm2.append((a, dev))
    return rep


# ---------------------------------------------------------------------------
# fibers


def fiber_basis(table: SemigroupoidTable, s: int, window="auto", order=None) -> tuple[int, ...]:
    """Elements with codomain ``s`` that index the Gram matrix of fiber ``s``.

    ``order`` is a permutation of element ids giving the block ordering
    (canonical id order when omitted).  On length-truncated tables the
    default window keeps words of length at most half the bound, so that
    every product b*a inside the window is defined; ``window="full"``
    keeps every element.
    """
    seq = range(table.n_elements) if order is None else order
    elems = [int(a) for a in seq if table.tgt[a] == s]
    if window == "full" or not table.is_truncated:
        return tuple(elems)
    w = table.max_length // 2 if window == "auto" else int(window)
    return tuple(a for a in elems if table.lengths[a] <= w)


@dataclass(frozen=True, eq=False)
class FiberGram:
    fiber: int
    ordering: tuple[int, ...]
    gram: np.ndarray
    block_offsets: tuple[int, ...]
    lambda_min: float

    def block(self, i: int) -> slice:
        return slice(self.block_offsets[i], self.block_offsets[i + 1])


def fiber_gram(T: CoherentMap, s: int, window="auto", order=None) -> FiberGram:
    t = T.table
    if t.star is None:
        raise StructureError("fiber Grams need an involution")
    basis = fiber_basis(t, s, window, order)
    sizes = [T.dim_of(int(t.src[a])) for a in basis]
    offs = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    g = np.zeros((offs[-1], offs[-1]), dtype=complex)
    for i, b in enumerate(basis):
        bs = int(t.star[b])
        for j, a in enumerate(basis):
            p = t.mul[bs, a]
            if p == UNDEF:
                raise MissingProduct(s, bs, a)
            g[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] = T.mats[p]
    return FiberGram(s, basis, g, tuple(int(o) for o in offs), hermitian_eig_min(g))


def psd_threshold(gram: np.ndarray, tol: float = PSD_TOL) -> float:
    return -tol * max(1.0, max_abs(gram))


@dataclass
class PSDReport:
    lambda_min: dict[int, float]
    thresholds: dict[int, float]
    unchecked: dict[int, str]
    witness: int | None
    tol: float

    @property
    def passed(self) -> bool:
        return self.witness is None and not self.unchecked


def check_psd(T: CoherentMap, tol: float = PSD_TOL, window="auto", order=None) -> PSDReport:
    def one(s):
        try:
            fg = fiber_gram(T, s, window, order)
        except MissingProduct as exc:
            return s, None, None, str(exc)
        return s, fg.lambda_min, psd_threshold(fg.gram, tol), None

    lam, thr, unchecked = {}, {}, {}
    for s, lm, th, err in pmap(one, range(T.table.n_objects)):
        if err is not None:
            unchecked[s] = err
        else:
            lam[s], thr[s] = lm, th
    failing = [s for s in lam if lam[s] < thr[s]]
    witness = min(failing, key=lambda s: (lam[s], s)) if failing else None
    return PSDReport(lam, thr, unchecked, witness, tol)


# ---------------------------------------------------------------------------
# boundedness and unitality


@dataclass
class BoundReport:
    constants: dict[int, float]
    finite: dict[int, bool]


def bound_constant(T: CoherentMap, alpha: int) -> float:
    """Squared norm of the factor-space operator attached to ``alpha``."""
    from .dilation import factor_space_operator

    return factor_space_operator(T, alpha)[1] ** 2


def bound_report(T: CoherentMap) -> BoundReport:
    from .dilation import dilate
    from .linalg import op_norm

    D = dilate(T)
    consts = {a: op_norm(D.rep[a]) ** 2 for a in range(T.table.n_elements)}
    return BoundReport(consts, {a: True for a in consts})


@dataclass
class UnitalReport:
    idempotent: dict[int, float]
    hermitian: dict[int, float]
    cross: dict[int, float]
    sum_identity: dict[int, float]
    tol: float

    @property
    def passed(self) -> bool:
        vals = [*self.idempotent.values(), *self.hermitian.values(),
                *self.cross.values(), *self.sum_identity.values()]
        return all(v < self.tol for v in vals)

    def witness(self):
        for name in ("idempotent", "hermitian", "cross", "sum_identity"):
            for k, v in getattr(self, name).items():
                if v >= self.tol:
                    return name, k, v
        return None


def check_unital(T: CoherentMap, tol: float = VERIFY_TOL) -> UnitalReport:
    t = T.table
    if t.units is None:
        raise StructureError("unitality needs units")
    idem, herm, cross, total = {}, {}, {}, {}
    for x in range(T.n_points):
        objs = [s for s in range(t.n_objects) if T.tau[s] == x]
        n = T.dims[x]
        acc = np.zeros((n, n), dtype=complex)
        worst = 0.0
        for s in objs:
            p = T.mats[t.units[s]]
            idem[s] = max_abs(p @ p - p)
            herm[s] = max_abs(p - p.conj().T)
            acc += p
            for s2 in objs:
                if s2 != s:
                    worst = max(worst, max_abs(p @ T.mats[t.units[s2]]))
        cross[x] = worst
        total[x] = max_abs(acc - np.eye(n))
    return UnitalReport(idem, herm, cross, total, tol)
