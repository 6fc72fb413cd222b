"""Dense complex-matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Every public
entry point passes its inputs through :func:`as_matrix`, which rejects
non-finite entries, so NaN/Inf never reach a decomposition.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

DEFAULT_REL_TOL = 1e-9
CLUSTER_GAP = 1e-9


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array.

    1-D input is promoted to a column vector.
    """
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"{name}: expected a non-empty 2-D array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name}: entries must be finite")
    return m


def _square(a, name: str = "matrix") -> np.ndarray:
    m = as_matrix(a, name)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"{name}: expected a square matrix, got shape {m.shape}")
    return m


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a, "a"), as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} @ {b.shape}")
    return a @ b


def adjoint(a) -> np.ndarray:
    return as_matrix(a).conj().T


def transpose_canonical(a) -> np.ndarray:
    """Transpose in the storage basis, without conjugation."""
    return as_matrix(a).T.copy()


def vec(a) -> np.ndarray:
    """Row-major flattening into a column vector: entry ``(r, c)`` lands at ``r * cols + c``."""
    return as_matrix(a).reshape(-1, 1)


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a, tol: float = 1e-10) -> bool:
    m = as_matrix(a)
    return m.shape[0] == m.shape[1] and max_abs(m - m.conj().T) <= tol


def normalize_phase(v: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Rotate ``v`` so its first component of modulus above ``tol`` is real positive."""
    idx = np.flatnonzero(np.abs(v) > tol)
    if idx.size == 0:
        return v
    z = v[idx[0]]
    return v * (abs(z) / z)


class EigenSystem(NamedTuple):
    values: np.ndarray  # real, descending
    vectors: np.ndarray  # columns match ``values``


def _canonical_cluster_basis(q: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(q), built from projected canonical vectors."""
    n, m = q.shape
    proj = q @ q.conj().T
    basis: list[np.ndarray] = []
    for k in range(n):
        v = proj[:, k].copy()
        for _ in range(2):
            for b in basis:
                v -= b * (b.conj() @ v)
        nrm = np.linalg.norm(v)
        if nrm > 1e-3:
            basis.append(v / nrm)
        if len(basis) == m:
            break
    if len(basis) < m:  # pragma: no cover - projector of rank m always yields m pivots
        raise np.linalg.LinAlgError("could not re-orthonormalize degenerate eigenspace")
    return np.column_stack(basis)


def hermitian_eig(a, hermiticity_tol: float = 1e-10) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix with deterministic output.

    Eigenvalues come back in descending order. Inside a cluster of
    eigenvalues closer than ``CLUSTER_GAP`` (relative to ``max(1, |a|)``) the
    eigenvectors are rebuilt by Gram-Schmidt on the projected canonical basis
    vectors, taken in index order; the cluster eigenvalue is the mean of its
    members. Only the spanned projector of a cluster is meaningful.
    """
    m = _square(a)
    if max_abs(m - m.conj().T) > hermiticity_tol:
        raise ValueError("hermitian_eig: matrix is not Hermitian within tolerance")
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    w, v = w[::-1].copy(), v[:, ::-1].copy()
    gap = CLUSTER_GAP * max(1.0, float(np.max(np.abs(w))))
    out_w = np.empty_like(w)
    out_v = np.empty_like(v)
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop - 1] - w[stop] < gap:
            stop += 1
        block = v[:, start:stop]
        if stop - start > 1:
            block = _canonical_cluster_basis(block)
            out_w[start:stop] = np.mean(w[start:stop])
        else:
            out_w[start] = w[start]
        for k in range(block.shape[1]):
            out_v[:, start + k] = normalize_phase(block[:, k])
        start = stop
    return EigenSystem(out_w, out_v)


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``a = U @ diag(s) @ W^dagger`` with ``s`` descending."""
    m = as_matrix(a)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return u, s, vh.conj().T


class RankResult(NamedTuple):
    rank: int
    smallest_kept: float
    largest_dropped: float
    sigma_max: float


def rank_with_tol(a, rel_tol: float = DEFAULT_REL_TOL) -> RankResult:
    """Numerical rank: singular values above ``rel_tol * sigma_max``.

    ``smallest_kept`` is 0 when the rank is 0; ``largest_dropped`` is 0 when
    no singular value was dropped (structural zeros of a wide or tall matrix
    count as dropped zeros).
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    s = np.linalg.svd(as_matrix(a), compute_uv=False)
    smax = float(s[0]) if s.size else 0.0
    if smax == 0.0:
        return RankResult(0, 0.0, 0.0, 0.0)
    keep = s > rel_tol * smax
    r = int(np.count_nonzero(keep))
    kept = float(s[r - 1])
    dropped = float(s[r]) if r < s.size else 0.0
    return RankResult(r, kept, dropped, smax)


def psd_sqrt(a, neg_tol: float = 1e-10) -> np.ndarray:
    """Hermitian positive square root; eigenvalues down to ``-neg_tol`` are clamped to 0."""
    m = _square(a)
    if max_abs(m - m.conj().T) > 1e-10 * max(1.0, max_abs(m)):
        raise ValueError("psd_sqrt: matrix is not Hermitian")
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    if w.min() < -neg_tol:
        raise ValueError(f"psd_sqrt: significantly negative eigenvalue {w.min():.3e}")
    root = np.sqrt(np.clip(w, 0.0, None))
    out = (v * root) @ v.conj().T
    return (out + out.conj().T) / 2


def is_unitary(u, tol: float = 1e-10) -> bool:
    m = as_matrix(u)
    if m.shape[0] != m.shape[1]:
        return False
    return max_abs(m.conj().T @ m - np.eye(m.shape[0])) <= tol


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph
