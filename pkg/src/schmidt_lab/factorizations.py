"""Verified wrappers around the dense factorization backend.

Every factorization used for a structural decision is re-verified by
reconstructing the input; a residual above ``RECONSTRUCTION_RTOL`` times the
input norm raises ``NumericalError`` instead of silently propagating a bad
basis. Non-finite inputs are rejected up front as invalid arguments.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericalError

RECONSTRUCTION_RTOL = 1e-10

# Relative singular-value cutoff used wherever a numerical rank is needed.
RANK_RTOL = 1e-9


def _require_finite(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def svd(m: np.ndarray):
    """Full SVD ``m = u @ diag(s) @ vh`` with reconstruction check."""
    m = _require_finite(m, "svd input")
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    k = s.shape[0]
    residual = np.linalg.norm(u[:, :k] @ (s[:, None] * vh[:k]) - m)
    if residual > RECONSTRUCTION_RTOL * max(np.linalg.norm(m), 1e-300):
        raise NumericalError(f"svd reconstruction residual {residual:.3e} too large")
    return u, s, vh


def eigh(m: np.ndarray):
    """Hermitian eigendecomposition, eigenvalues ascending, verified."""
    m = _require_finite(m, "eigh input")
    w, v = np.linalg.eigh(m)
    residual = np.linalg.norm((v * w[None, :]) @ v.conj().T - m)
    if residual > RECONSTRUCTION_RTOL * max(np.linalg.norm(m), 1e-300):
        raise NumericalError(
            f"eigh reconstruction residual {residual:.3e} too large; "
            "input is likely not Hermitian"
        )
    return w, v


def qr_pivoted(m: np.ndarray):
    """Column-pivoted QR ``m[:, piv] = q @ r``, verified."""
    m = _require_finite(m, "qr input")
    q, r, piv = scipy.linalg.qr(m, pivoting=True)
    residual = np.linalg.norm(q @ r - m[:, piv])
    if residual > RECONSTRUCTION_RTOL * max(np.linalg.norm(m), 1e-300):
        raise NumericalError(f"qr reconstruction residual {residual:.3e} too large")
    return q, r, piv


def numerical_rank(singular_values: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > rtol * s[0]))


def _fix_column_phases(q: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is real positive."""
    q = q.copy()
    for j in range(q.shape[1]):
        col = q[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12 * max(np.linalg.norm(col), 1e-300))
        if idx.size:
            pivot = col[idx[0]]
            q[:, j] = col * (np.conj(pivot) / abs(pivot))
    return q


def orthonormal_columns(m: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``m`` (d x rank)."""
    m = _require_finite(m, "orthonormal_columns input")
    u, s, _ = svd(m)
    return u[:, : numerical_rank(s, rtol)]


def orthonormal_complement(m: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Deterministic orthonormal basis of the orthogonal complement of col(m).

    Built from pivoted QR of the complementary projector with the column-phase
    convention (first significant entry real positive), so repeated calls on
    equal inputs return identical bases.
    """
    m = _require_finite(m, "orthonormal_complement input")
    d = m.shape[0]
    basis = orthonormal_columns(m, rtol)
    r = basis.shape[1]
    if r == d:
        return np.zeros((d, 0), dtype=complex)
    proj = np.eye(d, dtype=complex) - basis @ basis.conj().T
    q, _, _ = qr_pivoted(proj)
    comp = q[:, : d - r]
    # QR columns can leak into col(m) at roundoff level; project out and renormalize.
    comp = comp - basis @ (basis.conj().T @ comp)
    comp, _ = np.linalg.qr(comp)
    return _fix_column_phases(comp)


def null_space(m: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of ``{x : m @ x = 0}`` as columns."""
    m = _require_finite(m, "null_space input")
    _, s, vh = svd(m)
    rank = numerical_rank(s, rtol)
    return vh[rank:].conj().T
