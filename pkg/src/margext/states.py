"""Single-system and bipartite states.

Storage convention: the product basis is ordered lexicographically, so
``|i> (x) |j>`` (0-based) sits at index ``i * d + j``. The first factor is
system 1, the side a map's output lives on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from margext.numerics import (
    DEFAULT_REL_TOL,
    as_matrix,
    hermitian_eig,
    is_unitary,
    max_abs,
    rank_with_tol,
)

STATE_TOL = 1e-10


def _check_density(m: np.ndarray, tol: float, what: str) -> None:
    if max_abs(m - m.conj().T) > tol:
        raise ValueError(f"{what}: not Hermitian within {tol:g}")
    tr = np.trace(m)
    if abs(tr - 1) > tol:
        raise ValueError(f"{what}: trace {tr.real:.12g} differs from 1")
    lo = float(np.linalg.eigvalsh((m + m.conj().T) / 2)[0])
    if lo < -tol:
        raise ValueError(f"{what}: negative eigenvalue {lo:.3e}")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dim: int
    mat: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.mat, "density matrix")
        if m.shape != (self.dim, self.dim):
            raise ValueError(f"density matrix: expected {self.dim}x{self.dim}, got {m.shape}")
        _check_density(m, STATE_TOL, "density matrix")
        object.__setattr__(self, "mat", m)

    @classmethod
    def from_matrix(cls, m) -> DensityMatrix:
        m = as_matrix(m)
        return cls(m.shape[0], m)

    @classmethod
    def maximally_mixed(cls, d: int) -> DensityMatrix:
        return cls(d, np.eye(d) / d)


@dataclass(frozen=True, eq=False)
class BipartiteState:
    d: int
    mat: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.mat, "bipartite state")
        n = self.d * self.d
        if m.shape != (n, n):
            raise ValueError(f"bipartite state: local dim {self.d} needs {n}x{n}, got {m.shape}")
        _check_density(m, STATE_TOL, "bipartite state")
        object.__setattr__(self, "mat", m)

    @classmethod
    def from_matrix(cls, m) -> BipartiteState:
        m = as_matrix(m)
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0]:
            raise ValueError(
                f"bipartite state: size {m.shape[0]} is not a square of a local dimension; "
                "pad unequal factors first"
            )
        return cls(d, m)

    @classmethod
    def pure(cls, psi) -> BipartiteState:
        v = as_matrix(psi).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls.from_matrix(np.outer(v, v.conj()))

    @classmethod
    def product(cls, sigma, tau) -> BipartiteState:
        s = sigma.mat if isinstance(sigma, DensityMatrix) else as_matrix(sigma)
        t = tau.mat if isinstance(tau, DensityMatrix) else as_matrix(tau)
        if s.shape != t.shape:
            raise ValueError("product: local dimensions differ")
        return cls(s.shape[0], np.kron(s, t))

    def tensor(self) -> np.ndarray:
        """View as a rank-4 tensor indexed ``[a, i, b, j]`` for ``<a i| rho |b j>``."""
        d = self.d
        return self.mat.reshape(d, d, d, d)


@dataclass(frozen=True, eq=False)
class MarginalPair:
    """Prescribed marginals plus the eigenbasis of ``rho2`` that fixes the duality.

    ``eigenbasis2`` columns are orthonormal eigenvectors of ``rho2``. The
    default is the storage basis when ``rho2`` is diagonal (in particular for
    the maximally mixed state), otherwise the output of :func:`hermitian_eig`.
    """

    rho1: DensityMatrix
    rho2: DensityMatrix
    eigenbasis2: np.ndarray

    def __post_init__(self):
        if self.rho1.dim != self.rho2.dim:
            raise ValueError(
                f"marginal dimensions differ ({self.rho1.dim} vs {self.rho2.dim}); pad first"
            )
        r = as_matrix(self.eigenbasis2, "eigenbasis2")
        d = self.rho1.dim
        if r.shape != (d, d) or not is_unitary(r):
            raise ValueError("eigenbasis2 must be a d x d unitary")
        diag = r.conj().T @ self.rho2.mat @ r
        if max_abs(diag - np.diag(np.diag(diag))) > 1e-9:
            raise ValueError("eigenbasis2 columns are not eigenvectors of rho2")
        object.__setattr__(self, "eigenbasis2", r)

    @classmethod
    def of(cls, rho1, rho2, eigenbasis2=None) -> MarginalPair:
        r1 = rho1 if isinstance(rho1, DensityMatrix) else DensityMatrix.from_matrix(rho1)
        r2 = rho2 if isinstance(rho2, DensityMatrix) else DensityMatrix.from_matrix(rho2)
        if eigenbasis2 is None:
            m = r2.mat
            if max_abs(m - np.diag(np.diag(m))) <= 1e-12:
                eigenbasis2 = np.eye(r2.dim, dtype=complex)
            else:
                eigenbasis2 = hermitian_eig(m).vectors
        return cls(r1, r2, eigenbasis2)

    @classmethod
    def maximally_mixed(cls, d: int, eigenbasis2=None) -> MarginalPair:
        mm = DensityMatrix.maximally_mixed(d)
        return cls.of(mm, mm, eigenbasis2)

    @classmethod
    def from_state(cls, rho: BipartiteState, eigenbasis2=None) -> MarginalPair:
        return cls.of(partial_trace_2(rho), partial_trace_1(rho), eigenbasis2)

    @property
    def d(self) -> int:
        return self.rho1.dim

    def rho2_in_eigenbasis(self) -> np.ndarray:
        r = self.eigenbasis2
        return r.conj().T @ self.rho2.mat @ r


@dataclass(frozen=True, eq=False)
class MaxEntangledVector:
    d: int
    vec: np.ndarray

    def projector(self) -> BipartiteState:
        v = self.vec.reshape(-1)
        return BipartiteState(self.d, np.outer(v, v.conj()))


def _mat(rho) -> tuple[int, np.ndarray]:
    if isinstance(rho, BipartiteState):
        return rho.d, rho.mat
    m = as_matrix(rho)
    d = int(round(np.sqrt(m.shape[0])))
    if d * d != m.shape[0] or m.shape[0] != m.shape[1]:
        raise ValueError(f"not a d^2 x d^2 matrix: {m.shape}")
    return d, m


def partial_trace_2(rho) -> DensityMatrix:
    """Trace out the second factor."""
    d, m = _mat(rho)
    return DensityMatrix(d, np.einsum("ajbj->ab", m.reshape(d, d, d, d)))


def partial_trace_1(rho) -> DensityMatrix:
    """Trace out the first factor."""
    d, m = _mat(rho)
    return DensityMatrix(d, np.einsum("aiaj->ij", m.reshape(d, d, d, d)))


def partial_transpose_2(rho) -> np.ndarray:
    d, m = _mat(rho)
    return m.reshape(d, d, d, d).transpose(0, 3, 2, 1).reshape(d * d, d * d).copy()


def max_entangled(d: int, basis=None) -> MaxEntangledVector:
    """``(1/sqrt d) sum_i |i> (x) basis|i>``."""
    u = np.eye(d, dtype=complex) if basis is None else as_matrix(basis, "basis")
    if u.shape != (d, d) or not is_unitary(u):
        raise ValueError("max_entangled: basis must be a d x d unitary")
    v = np.zeros(d * d, dtype=complex)
    for i in range(d):
        v += np.kron(np.eye(d)[:, i], u[:, i])
    return MaxEntangledVector(d, (v / np.sqrt(d)).reshape(-1, 1))


class Membership(NamedTuple):
    ok: bool
    residual1: float
    residual2: float


def in_C(rho: BipartiteState, marginals: MarginalPair, tol: float = 1e-9) -> Membership:
    """Whether both partial traces of ``rho`` match the prescribed marginals."""
    if rho.d != marginals.d:
        raise ValueError(f"dimension mismatch: state d={rho.d}, marginals d={marginals.d}")
    r1 = max_abs(partial_trace_2(rho).mat - marginals.rho1.mat)
    r2 = max_abs(partial_trace_1(rho).mat - marginals.rho2.mat)
    return Membership(r1 <= tol and r2 <= tol, r1, r2)


def is_max_entangled_projector(
    rho: BipartiteState, tol: float = 1e-9, rel_tol: float = DEFAULT_REL_TOL
) -> bool:
    if rank_with_tol(rho.mat, rel_tol).rank != 1:
        return False
    mm = np.eye(rho.d) / rho.d
    return (
        max_abs(partial_trace_2(rho).mat - mm) <= tol
        and max_abs(partial_trace_1(rho).mat - mm) <= tol
    )


def pad_bipartite(m, d1: int, d2: int, d: int | None = None) -> np.ndarray:
    """Embed an operator on C^d1 (x) C^d2 into C^d (x) C^d, ``d >= max(d1, d2)``.

    Each factor is embedded as the span of the first basis vectors.
    """
    m = as_matrix(m)
    if m.shape != (d1 * d2, d1 * d2):
        raise ValueError(f"expected {d1 * d2}x{d1 * d2}, got {m.shape}")
    d = max(d1, d2) if d is None else d
    if d < max(d1, d2):
        raise ValueError("target dimension smaller than a factor")
    e1 = np.eye(d)[:, :d1]
    e2 = np.eye(d)[:, :d2]
    iso = np.kron(e1, e2)
    return iso @ m @ iso.T


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix ``G G^dagger / tr`` with ``G`` a ``d x rank`` Ginibre matrix."""
    k = d if rank is None else rank
    g = rng.standard_normal((d, k)) + 1j * rng.standard_normal((d, k))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_bipartite(d: int, rng: np.random.Generator, rank: int | None = None) -> BipartiteState:
    return BipartiteState(d, random_density(d * d, rng, rank))
