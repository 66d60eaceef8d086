"""Linear extension of coherent maps to formal linear combinations.

A :class:`FormalElement` is a finite combination of elements sharing one
domain ``s`` and codomain ``t``.  Amplified elements are ``n x n`` arrays of
them, entry ``(i, j)`` living over ``(s_j, t_i)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .dilation import Dilation, dilate, verify_dilation
from .errors import FiberMismatch, MissingProduct, NotStrictContraction, StructureError
from .linalg import PSD_TOL, VERIFY_TOL, hermitian_eig_min, max_abs, op_norm
from .maps import CoherentMap, fiber_basis
from .semigroupoid import UNDEF, SemigroupoidTable


@dataclass(frozen=True)
class FormalElement:
    fiber: tuple[int, int]  # (domain s, codomain t)
    coeffs: Mapping[int, complex] = field(default_factory=dict)

    def terms(self) -> list[tuple[int, complex]]:
        return sorted(self.coeffs.items())


@dataclass(frozen=True)
class AmplifiedElement:
    s_tuple: tuple[int, ...]
    t_tuple: tuple[int, ...]
    entries: tuple[tuple[FormalElement, ...], ...]

    @property
    def n(self) -> int:
        return len(self.s_tuple)


class StarAlgebroid:
    """Free *-algebroid spanned by the elements of a table."""

    def __init__(self, table: SemigroupoidTable):
        if table.star is None:
            raise StructureError("a *-algebroid needs an involution")
        self.table = table

    def element(self, s: int, t: int, coeffs: Mapping[int, complex] | None = None) -> FormalElement:
        coeffs = {int(k): complex(v) for k, v in (coeffs or {}).items()}
        for g in coeffs:
            if self.table.src[g] != s or self.table.tgt[g] != t:
                raise FiberMismatch(f"element {g} is not in the fiber (s={s}, t={t})")
        return FormalElement((int(s), int(t)), coeffs)

    def basis(self, g: int) -> FormalElement:
        return FormalElement((int(self.table.src[g]), int(self.table.tgt[g])), {int(g): 1 + 0j})

    def zero(self, s: int, t: int) -> FormalElement:
        return FormalElement((int(s), int(t)), {})

    def add(self, x: FormalElement, y: FormalElement) -> FormalElement:
        if x.fiber != y.fiber:
            raise FiberMismatch(f"cannot add across fibers {x.fiber} and {y.fiber}")
        out = dict(x.coeffs)
        for g, c in y.coeffs.items():
            out[g] = out.get(g, 0) + c
        return FormalElement(x.fiber, out)

    def scale(self, c: complex, x: FormalElement) -> FormalElement:
        return FormalElement(x.fiber, {g: c * v for g, v in x.coeffs.items()})

    def mul(self, x: FormalElement, y: FormalElement) -> FormalElement:
        """x y for y over (s, t) and x over (t, u)."""
        if x.fiber[0] != y.fiber[1]:
            raise FiberMismatch(f"fibers {x.fiber} and {y.fiber} are not composable")
        out: dict[int, complex] = {}
        for g, a in x.coeffs.items():
            for h, b in y.coeffs.items():
                p = self.table.mul[g, h]
                if p == UNDEF:
                    raise MissingProduct(x.fiber[0], g, h)
                out[int(p)] = out.get(int(p), 0) + a * b
        return FormalElement((y.fiber[0], x.fiber[1]), out)

    def star(self, x: FormalElement) -> FormalElement:
        return FormalElement(
            (x.fiber[1], x.fiber[0]),
            {int(self.table.star[g]): np.conj(c) for g, c in x.coeffs.items()},
        )

    # -- amplifications ------------------------------------------------------
    def amplified(self, s_tuple, t_tuple, entries) -> AmplifiedElement:
        s_tuple, t_tuple = tuple(s_tuple), tuple(t_tuple)
        n = len(s_tuple)
        if len(t_tuple) != n or len(entries) != n or any(len(r) != n for r in entries):
            raise FiberMismatch("amplified element must be n x n with tuples of length n")
        for i in range(n):
            for j in range(n):
                if entries[i][j].fiber != (s_tuple[j], t_tuple[i]):
                    raise FiberMismatch(
                        f"entry ({i},{j}) lies over {entries[i][j].fiber}, "
                        f"expected {(s_tuple[j], t_tuple[i])}"
                    )
        return AmplifiedElement(s_tuple, t_tuple, tuple(tuple(r) for r in entries))

    def amp_star(self, X: AmplifiedElement) -> AmplifiedElement:
        n = X.n
        entries = [[self.star(X.entries[j][i]) for j in range(n)] for i in range(n)]
        return AmplifiedElement(X.t_tuple, X.s_tuple, tuple(tuple(r) for r in entries))

    def amp_mul(self, X: AmplifiedElement, Y: AmplifiedElement) -> AmplifiedElement:
        if X.s_tuple != Y.t_tuple:
            raise FiberMismatch("amplified elements are not composable")
        n = X.n
        entries = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = self.zero(Y.s_tuple[j], X.t_tuple[i])
                for k in range(n):
                    acc = self.add(acc, self.mul(X.entries[i][k], Y.entries[k][j]))
                row.append(acc)
            entries.append(tuple(row))
        return AmplifiedElement(Y.s_tuple, X.t_tuple, tuple(entries))


def linear_extend(T: CoherentMap) -> Callable[[FormalElement], np.ndarray]:
    def apply(x: FormalElement) -> np.ndarray:
        s, t = x.fiber
        out = np.zeros((T.dim_of(t), T.dim_of(s)), dtype=complex)
        for g, c in x.coeffs.items():
            if T.table.src[g] != s or T.table.tgt[g] != t:
                raise FiberMismatch(f"element {g} is outside the fiber {x.fiber}")
            out += c * T.mats[g]
        return out

    return apply


def amplify_map(T: CoherentMap, n: int) -> Callable[[AmplifiedElement], np.ndarray]:
    """Blockwise application: the result has block (i, j) = T(x_ij)."""
    lin = linear_extend(T)

    def apply(X: AmplifiedElement) -> np.ndarray:
        if X.n != n:
            raise FiberMismatch(f"expected a {n}-fold amplification, got {X.n}")
        return np.block([[lin(X.entries[i][j]) for j in range(n)] for i in range(n)])

    return apply


# ---------------------------------------------------------------------------
# complete positivity by sampling


@dataclass
class CPReport:
    worst_lambda_min: float
    per_n: dict[int, float]
    first_failure_n: int | None
    witness: dict | None
    seed: int
    trials: int
    n_max: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.first_failure_n is None


def _random_entry(alg: StarAlgebroid, rng, s: int, t: int, window) -> FormalElement:
    tab = alg.table
    pool = [g for g in fiber_basis(tab, t, window) if tab.src[g] == s]
    coeffs = {}
    for g in pool:
        if rng.random() < 0.7:
            coeffs[g] = complex(rng.standard_normal(), rng.standard_normal())
    return FormalElement((s, t), coeffs)


def random_amplified(alg: StarAlgebroid, rng, n: int, window="auto") -> AmplifiedElement:
    m = alg.table.n_objects
    s_tuple = tuple(int(v) for v in rng.integers(0, m, size=n))
    t_tuple = tuple(int(v) for v in rng.integers(0, m, size=n))
    entries = tuple(
        tuple(_random_entry(alg, rng, s_tuple[j], t_tuple[i], window) for j in range(n))
        for i in range(n)
    )
    return AmplifiedElement(s_tuple, t_tuple, entries)


def sample_cp_check(T: CoherentMap, n_max: int = 3, trials: int = 100, seed: int = 0,
                    tol: float = PSD_TOL, window="auto") -> CPReport:
    """Apply the amplifications of ``T`` to random X*X and record lambda_min.

    Trial ``k`` at size ``n`` draws from ``default_rng([seed, n, k])``.  A
    pass is sampling evidence only.
    """
    alg = StarAlgebroid(T.table)
    worst, per_n, first, witness = np.inf, {}, None, None
    for n in range(1, n_max + 1):
        amp = amplify_map(T, n)
        per_n[n] = np.inf
        for k in range(trials):
            rng = np.random.default_rng([seed, n, k])
            X = random_amplified(alg, rng, n, window)
            M = amp(alg.amp_mul(alg.amp_star(X), X))
            lam = hermitian_eig_min(M)
            per_n[n] = min(per_n[n], lam)
            if lam < worst:
                worst = lam
            if lam < -tol * max(1.0, max_abs(M)) and first is None:
                first = n
                witness = {"n": n, "trial": k, "lambda_min": lam, "X": X}
        if not np.isfinite(per_n[n]):
            per_n[n] = 0.0
    if not np.isfinite(worst):
        worst = 0.0
    return CPReport(float(worst), per_n, first, witness, seed, trials, n_max, tol)


# ---------------------------------------------------------------------------
# square root series


def sqrt_coefficients(count: int) -> np.ndarray:
    """|binom(1/2, n)| for n = 1..count: 1/2, 1/8, 1/16, 5/128, ..."""
    c = np.empty(count)
    if count:
        c[0] = 0.5
    for n in range(1, count):
        c[n] = c[n - 1] * (2 * n - 1) / (2 * n + 2)
    return c


def series_length(norm: float, tol: float = 1e-12, cap: int = 100000) -> int:
    """First n with c_n norm^n / (1 - norm) < tol (``norm`` is |a*a| < 1)."""
    if norm <= 0:
        return 0
    c = 0.5
    for n in range(1, cap):
        if c * norm ** n / (1 - norm) < tol:
            return n
        c *= (2 * n - 1) / (2 * n + 2)
    return cap


def sqrt_one_minus(a, tol: float = 1e-12) -> np.ndarray:
    """b = I - sum c_n (a*a)^n, the square root of I - a*a for |a| < 1."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise StructureError("expected a matrix")
    nrm = op_norm(a)
    if nrm >= 1:
        raise NotStrictContraction(nrm)
    m = a.conj().T @ a
    k = m.shape[0]
    b = np.eye(k, dtype=complex)
    terms = series_length(nrm ** 2, tol)
    power = np.eye(k, dtype=complex)
    for c in sqrt_coefficients(terms):
        power = power @ m
        b -= c * power
    return b


# ---------------------------------------------------------------------------
# positive forms


@dataclass(frozen=True)
class PositiveForm:
    values: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(complex(v) for v in self.values))


@dataclass
class FormRepresentation:
    dilation: Dilation
    xi: tuple[np.ndarray, ...]
    residuals: dict[str, float]
    cyclicity_defect: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.cyclicity_defect == 0 and all(v < self.tol for v in self.residuals.values())


def positive_form_rep(omega: PositiveForm, table: SemigroupoidTable, tol: float = VERIFY_TOL) -> FormRepresentation:
    """Cyclic representation with omega(a) = <rep(a) xi_d(a), xi_c(a)>."""
    if len(omega.values) != table.n_elements:
        raise StructureError("one value per element required")
    if table.star is None:
        raise StructureError("forms need an involution")
    vals = np.array(omega.values)
    dev = max_abs(vals[table.star] - vals.conj())
    if dev > 1e-10 * max(1.0, max_abs(vals)):
        raise StructureError(f"form is not hermitian (deviation {dev:.3e})")
    T = CoherentMap.scalar(table, omega.values)
    D = dilate(T)
    xi = tuple(D.V[s][:, 0] for s in range(table.n_objects))
    formula = 0.0
    for g in range(table.n_elements):
        c, d = table.tgt[g], table.src[g]
        formula = max(formula, abs(omega.values[g] - np.vdot(xi[c], D.rep[g] @ xi[d])))
    ver = verify_dilation(T, D, tol)
    res = {"form_identity": formula, "orthogonality": ver.residuals["orthogonality"],
           "multiplicativity": ver.residuals["multiplicativity"], "adjoint": ver.residuals["adjoint"]}
    return FormRepresentation(D, xi, res, sum(ver.minimality_defect.values()), tol)
