"""Model spec validation, structural classification and coefficient draws."""

import hashlib
import json
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from core.errors import (
    BekkError, DimensionError, EmptyTermsError, NotPositiveDefiniteError, SpecValidationError,
)
from core.models import CoefficientDraw, ModelSpec, ParamClass, ParamLabel
from core.numerics import cholesky

logger = logging.getLogger(__name__)

CLASSIFY_TOL = 1e-10


def _as_matrix(value: Any, name: str) -> np.ndarray:
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as e:
        raise DimensionError(f"{name}: not a rectangular numeric matrix ({e})") from None
    if m.ndim != 2:
        raise DimensionError(f"{name}: expected a matrix (array of rows), got {m.ndim} dimension(s)")
    return m


def spec_from_dict(data: Dict[str, Any]) -> ModelSpec:
    """Builds a ModelSpec from the spec file layout. Does not validate."""
    if not isinstance(data, dict):
        raise SpecValidationError("Spec must be an object with keys d, l, A, C, A0")
    missing = [key for key in ("d", "l", "A", "C") if key not in data]
    if missing:
        raise SpecValidationError(f"Spec is missing key(s): {', '.join(missing)}")

    raw_terms = data["A"] or []
    if not isinstance(raw_terms, list):
        raise DimensionError("A: expected a list of matrices")
    A = [_as_matrix(a, f"A[{i}]") for i, a in enumerate(raw_terms)]
    A0 = data.get("A0")
    return ModelSpec(
        d=int(data["d"]),
        l=int(data["l"]),
        A=A,
        C=_as_matrix(data["C"], "C"),
        A0=None if A0 is None else _as_matrix(A0, "A0"),
    )


def validate_spec(raw: ModelSpec) -> ModelSpec:
    """Checks dimensions and positive definiteness of C; returns the spec unchanged."""
    if raw.l < 1 or len(raw.A) == 0:
        raise EmptyTermsError("Spec needs at least one coefficient matrix (l >= 1)")
    if raw.d < 1:
        raise DimensionError(f"Dimension d must be positive, got {raw.d}")
    if len(raw.A) != raw.l:
        raise DimensionError(f"l = {raw.l} but {len(raw.A)} coefficient matrices were given")

    shape = (raw.d, raw.d)
    named = [(f"A[{i}]", a) for i, a in enumerate(raw.A)] + [("C", raw.C)]
    if raw.A0 is not None:
        named.append(("A0", raw.A0))
    for name, m in named:
        if np.shape(m) != shape:
            raise DimensionError(f"{name} has shape {np.shape(m)}, expected {shape}")
        if not np.all(np.isfinite(m)):
            raise DimensionError(f"{name} has non-finite entries")

    try:
        cholesky(raw.C)
    except BekkError as e:
        raise NotPositiveDefiniteError(f"C is not symmetric positive definite: {e}") from None
    return raw


def spec_digest(spec: ModelSpec) -> str:
    """SHA-256 of the canonical JSON form."""
    canonical = json.dumps(spec.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _is_diagonal(m: np.ndarray) -> bool:
    return bool(np.all(np.abs(m - np.diag(np.diag(m))) <= CLASSIFY_TOL))


def similarity_scale(a: np.ndarray) -> Optional[float]:
    """Returns s > 0 when a = s * O with O orthogonal, else None."""
    d = a.shape[0]
    gram = a.T @ a
    s2 = float(np.trace(gram)) / d
    if s2 <= CLASSIFY_TOL:
        return None
    if np.all(np.abs(gram - s2 * np.eye(d)) <= CLASSIFY_TOL):
        return float(np.sqrt(s2))
    return None


def classify(spec: ModelSpec) -> ParamClass:
    """Assigns the structural labels Scalar/Diagonal/Similarity/IDCandidate/General."""
    result = ParamClass()
    d, l = spec.d, spec.l

    if l == 1:
        a = spec.A[0]
        if _is_diagonal(a):
            result.labels.add(ParamLabel.DIAGONAL)
            result.details[ParamLabel.DIAGONAL.value] = "l = 1 and A_1 is diagonal"
        scale = similarity_scale(a)
        if scale is not None:
            result.labels.add(ParamLabel.SIMILARITY)
            result.details[ParamLabel.SIMILARITY.value] = (
                f"l = 1 and A_1 = a*O with a = {scale:.12g} and O orthogonal"
            )
        diag_entries = np.diag(a)
        if (ParamLabel.DIAGONAL in result.labels and scale is not None
                and np.all(np.abs(diag_entries - diag_entries[0]) <= CLASSIFY_TOL)):
            result.labels.add(ParamLabel.SCALAR)
            result.details[ParamLabel.SCALAR.value] = f"A_1 = {diag_entries[0]:.12g} * I"

    if l == d * d:
        stacked = np.stack([a.reshape(-1) for a in spec.A])
        rank = int(np.linalg.matrix_rank(stacked, tol=CLASSIFY_TOL))
        if rank == d * d:
            result.labels.add(ParamLabel.ID_CANDIDATE)
            result.details[ParamLabel.ID_CANDIDATE.value] = (
                "l = d^2 and vec(A_i) are linearly independent, so m -> sum m_i A_i "
                "is a bijection onto M(d, R) (structural check only)"
            )

    if not result.labels:
        result.labels.add(ParamLabel.GENERAL)
        note = "no structural class matched"
        if 1 < l < d * d:
            note += "; l < d^2 specs may still have a density for long products, not decidable structurally"
        result.details[ParamLabel.GENERAL.value] = note

    if spec.A0 is not None:
        result.details["A0"] = "autoregressive term present: tail analysis not available"
    return result


def _stacked_terms(spec: ModelSpec) -> np.ndarray:
    return np.stack([np.asarray(a, dtype=float) for a in spec.A])


def assemble_coefficient(spec: ModelSpec, m: np.ndarray, z: np.ndarray,
                         chol: Optional[np.ndarray] = None) -> CoefficientDraw:
    """Deterministic part of a draw: Mtilde = A0 + sum m_i A_i, Q = L z."""
    m = np.asarray(m, dtype=float)
    z = np.asarray(z, dtype=float)
    L = cholesky(spec.C) if chol is None else chol
    mtilde = np.tensordot(m, _stacked_terms(spec), axes=1)
    if spec.A0 is not None:
        mtilde = mtilde + spec.A0
    return CoefficientDraw(m=m, Mtilde=mtilde, Q=L @ z)


def draw_coefficient(spec: ModelSpec, stream: np.random.Generator,
                     chol: Optional[np.ndarray] = None) -> CoefficientDraw:
    """One (Mtilde, Q) draw. Consumes l normals for m, then d normals for z."""
    normals = stream.standard_normal(spec.l + spec.d)
    return assemble_coefficient(spec, normals[:spec.l], normals[spec.l:], chol)


def draw_coefficients(spec: ModelSpec, stream: np.random.Generator, n: int,
                      chol: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """n draws at once: (Mtilde of shape (n, d, d), Q of shape (n, d)). Same per-step layout."""
    L = cholesky(spec.C) if chol is None else chol
    normals = stream.standard_normal((n, spec.l + spec.d))
    mtilde = np.einsum("nk,kij->nij", normals[:, :spec.l], _stacked_terms(spec))
    if spec.A0 is not None:
        mtilde += spec.A0
    return mtilde, normals[:, spec.l:] @ L.T


def draw_multipliers(spec: ModelSpec, stream: np.random.Generator, n: int) -> np.ndarray:
    """n draws of Mtilde only (no additive noise), shape (n, d, d)."""
    normals = stream.standard_normal((n, spec.l))
    mtilde = np.einsum("nk,kij->nij", normals, _stacked_terms(spec))
    if spec.A0 is not None:
        mtilde += spec.A0
    return mtilde
