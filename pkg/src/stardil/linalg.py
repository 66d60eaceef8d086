"""Dense complex matrix kernel: Hermitian spectra, PSD factors, lstsq, norms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPSD, ShapeError

RANK_TOL = 1e-10
PSD_TOL = 1e-9
HERM_TOL = 1e-10
VERIFY_TOL = 1e-8


def as_cmatrix(m, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim == 1 and rows is not None and cols is not None:
        a = a.reshape(rows, cols)
    if a.ndim != 2:
        raise ShapeError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ShapeError("matrix has non-finite entries")
    return a


def max_abs(m) -> float:
    m = np.asarray(m)
    return float(np.max(np.abs(m))) if m.size else 0.0


def _square(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermitian_part(m) -> np.ndarray:
    a = _square(m)
    return (a + a.conj().T) / 2


def hermitian_eig_min(m) -> float:
    """Smallest eigenvalue of the symmetrized matrix; 0.0 for an empty matrix."""
    a = hermitian_part(m)
    if a.shape[0] == 0:
        return 0.0
    return float(np.linalg.eigvalsh(a)[0])


def hermitian_defect(m) -> float:
    a = _square(m)
    return max_abs(a - a.conj().T)


@dataclass(frozen=True)
class FactorResult:
    Q: np.ndarray  # r x N with M ~ Q* Q
    rank: int
    residual: float
    lambda_min: float


def psd_factor(m, tol: float = RANK_TOL, psd_tol: float = PSD_TOL) -> FactorResult:
    """Factor a PSD matrix as Q* Q with Q of full row rank.

    Eigenvalues above ``tol * lambda_max`` are kept, in descending order.
    Raises ``NotPSD`` when lambda_min < -psd_tol * max(1, |M|_max).
    """
    a = hermitian_part(m)
    n = a.shape[0]
    if n == 0:
        return FactorResult(np.zeros((0, 0), dtype=complex), 0, 0.0, 0.0)
    w, v = np.linalg.eigh(a)
    scale = max(1.0, max_abs(a))
    if w[0] < -psd_tol * scale:
        raise NotPSD(w[0])
    lam_max = w[-1]
    keep = w > tol * lam_max if lam_max > 0 else np.zeros(n, dtype=bool)
    idx = np.flatnonzero(keep)[::-1]
    q = np.sqrt(w[idx])[:, None] * v[:, idx].conj().T
    resid = max_abs(a - q.conj().T @ q)
    return FactorResult(q, len(idx), resid, float(w[0]))


def lstsq(a, b) -> tuple[np.ndarray, float]:
    """Minimum-norm X minimizing |AX - B|_F, and that residual norm."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2 or a.shape[0] != b.shape[0]:
        raise ShapeError(f"lstsq shapes {a.shape} and {b.shape} are incompatible")
    if a.size == 0 or b.size == 0:
        x = np.zeros((a.shape[1], b.shape[1]), dtype=complex)
    else:
        x = np.linalg.lstsq(a, b, rcond=None)[0]
    resid = float(np.linalg.norm(a @ x - b)) if b.size else 0.0
    return x, resid


def op_norm(m) -> float:
    a = np.asarray(m, dtype=complex)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def numerical_rank(m, tol: float = RANK_TOL) -> int:
    a = np.asarray(m, dtype=complex)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))


def orthonormal_basis(m, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal columns spanning the column space of ``m``."""
    a = np.asarray(m, dtype=complex)
    if a.size == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s[0] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    return u[:, s > tol * max(1.0, s[0])]
