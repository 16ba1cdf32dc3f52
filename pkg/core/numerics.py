"""Dense linear algebra shared by every module. Matrices are small (d <= 32)."""

import logging
from typing import Sequence

import numpy as np

from core.errors import DecompositionError, SymmetryError

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


def identity(d: int) -> np.ndarray:
    return np.eye(d)


def diag(values: Sequence[float]) -> np.ndarray:
    return np.diag(np.asarray(values, dtype=float))


def is_symmetric(m: np.ndarray, tol: float = SYMMETRY_TOL) -> bool:
    m = np.asarray(m, dtype=float)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and bool(np.all(np.abs(m - m.T) <= tol))


def cholesky(m: np.ndarray) -> np.ndarray:
    """
    Lower-triangular L with L @ L.T == m.

    The input is symmetrized before factorization. On failure the error names
    the first leading principal minor that is not positive definite.
    """
    m = np.asarray(m, dtype=float)
    if not is_symmetric(m):
        raise SymmetryError(f"Matrix is not symmetric within {SYMMETRY_TOL}")
    sym = 0.5 * (m + m.T)
    try:
        return np.linalg.cholesky(sym)
    except np.linalg.LinAlgError:
        pass

    for k in range(1, sym.shape[0] + 1):
        try:
            np.linalg.cholesky(sym[:k, :k])
        except np.linalg.LinAlgError:
            value = float(np.linalg.det(sym[:k, :k]))
            raise DecompositionError(pivot=k - 1, value=value) from None
    # numpy rejected the full matrix but accepted every minor: treat the last pivot as failing
    raise DecompositionError(pivot=sym.shape[0] - 1, value=float(np.linalg.det(sym)))


def spectral_radius(m: np.ndarray) -> float:
    """Largest eigenvalue modulus."""
    m = np.asarray(m, dtype=float)
    if m.shape == (1, 1):
        return abs(float(m[0, 0]))
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def kron_power(a: np.ndarray, p: int) -> np.ndarray:
    """a ⊗ a ⊗ ... ⊗ a (p factors)."""
    result = np.asarray(a, dtype=float)
    for _ in range(p - 1):
        result = np.kron(result, a)
    return result
