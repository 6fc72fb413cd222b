"""Correspondence between bipartite states and completely positive maps.

A map ``Lam: L(H2) -> L(H1)`` is written ``Lam(x) = sum_j V_j^dagger x V_j``.
Its Choi matrix is ``(Lam (x) id)(|Omega><Omega|)`` with
``Omega = d^{-1/2} sum_i |i>|i>`` in the coordinates of the ``rho2``
eigenbasis; the normalisation ``tr Lam(1/d) = 1`` is ``tr(choi) = 1``.

The state attached to a map is the Choi matrix with its second factor
rotated back into the storage basis by ``eigenbasis2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from margext.numerics import (
    DEFAULT_REL_TOL,
    as_matrix,
    hermitian_eig,
    is_unitary,
    max_abs,
    rank_with_tol,
)
from margext.states import BipartiteState, MarginalPair


@dataclass(frozen=True, eq=False)
class KrausFamily:
    """Ordered Kraus operators, stored as an array of shape ``(ell, d, d)``.

    Linear independence is not enforced on construction; operations that
    need it check :meth:`is_independent`.
    """

    d: int
    ops: np.ndarray

    def __post_init__(self):
        ops = np.asarray(self.ops, dtype=np.complex128)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[1:] != (self.d, self.d) or ops.shape[0] == 0:
            raise ValueError(f"Kraus family: expected (ell, {self.d}, {self.d}), got {ops.shape}")
        if not np.all(np.isfinite(ops)):
            raise ValueError("Kraus family: entries must be finite")
        ops.setflags(write=False)
        object.__setattr__(self, "ops", ops)

    @classmethod
    def of(cls, ops) -> KrausFamily:
        ops = [as_matrix(v, "Kraus operator") for v in ops]
        return cls(ops[0].shape[0], np.stack(ops))

    @property
    def ell(self) -> int:
        return self.ops.shape[0]

    def __len__(self) -> int:
        return self.ell

    def __iter__(self):
        return iter(self.ops)

    def __getitem__(self, i) -> np.ndarray:
        return self.ops[i]

    def stacked(self) -> np.ndarray:
        """``ell x d^2`` matrix whose rows are the row-major flattened operators."""
        return self.ops.reshape(self.ell, -1)

    def is_independent(self, rel_tol: float = DEFAULT_REL_TOL) -> bool:
        return rank_with_tol(self.stacked(), rel_tol).rank == self.ell

    def left_sum(self) -> np.ndarray:
        """``sum_j V_j^dagger V_j``."""
        return np.einsum("kba,kbc->ac", self.ops.conj(), self.ops)

    def right_sum(self) -> np.ndarray:
        """``sum_j V_j V_j^dagger``."""
        return np.einsum("kab,kcb->ac", self.ops, self.ops.conj())

    def adjoints(self) -> KrausFamily:
        return KrausFamily(self.d, np.conj(np.transpose(self.ops, (0, 2, 1))))


def choi_from_kraus(k: KrausFamily) -> np.ndarray:
    """``(1/d) sum_j w_j w_j^dagger`` with ``w_j[(a, i)] = (V_j^dagger)[a, i]``."""
    d = k.d
    w = np.conj(np.transpose(k.ops, (0, 2, 1))).reshape(k.ell, d * d)
    return np.einsum("ka,kb->ab", w, w.conj()) / d


def _basis(marginals_basis, d: int) -> np.ndarray:
    if marginals_basis is None:
        return np.eye(d, dtype=complex)
    if isinstance(marginals_basis, MarginalPair):
        return marginals_basis.eigenbasis2
    r = as_matrix(marginals_basis, "basis")
    if r.shape != (d, d) or not is_unitary(r):
        raise ValueError("basis must be a d x d unitary")
    return r


def _rotate_second(m: np.ndarray, d: int, r: np.ndarray) -> np.ndarray:
    """``(1 (x) r) m (1 (x) r)^dagger``."""
    u = np.kron(np.eye(d), r)
    return u @ m @ u.conj().T


@dataclass(frozen=True, eq=False)
class CPMapRep:
    d: int
    choi: np.ndarray
    kraus: Optional[KrausFamily] = None

    def __post_init__(self):
        c = as_matrix(self.choi, "Choi matrix")
        n = self.d * self.d
        if c.shape != (n, n):
            raise ValueError(f"Choi matrix: expected {n}x{n}, got {c.shape}")
        if max_abs(c - c.conj().T) > 1e-10:
            raise ValueError("Choi matrix is not Hermitian")
        lo = float(np.linalg.eigvalsh((c + c.conj().T) / 2)[0])
        if lo < -1e-10:
            raise ValueError(f"Choi matrix is not positive (eigenvalue {lo:.3e}); map is not CP")
        if abs(np.trace(c) - 1) > 1e-10:
            raise ValueError("Choi matrix must have unit trace (tr Lam(1/d) = 1)")
        if self.kraus is not None and max_abs(choi_from_kraus(self.kraus) - c) > 1e-9:
            raise ValueError("cached Kraus family does not reproduce the Choi matrix")
        object.__setattr__(self, "choi", c)

    @classmethod
    def from_kraus(cls, k: KrausFamily) -> CPMapRep:
        return cls(k.d, choi_from_kraus(k), k)

    def kraus_family(self, rel_tol: float = DEFAULT_REL_TOL) -> KrausFamily:
        return self.kraus if self.kraus is not None else kraus_from_choi(self.choi, self.d, rel_tol)


def state_from_kraus(k: KrausFamily, marginals_basis=None) -> BipartiteState:
    """``(1/d) sum_{jik} V_j^dagger|r_i><r_k|V_j (x) |r_i><r_k|``."""
    r = _basis(marginals_basis, k.d)
    return BipartiteState(k.d, _rotate_second(choi_from_kraus(k), k.d, r))


def state_from_map(lam: CPMapRep, marginals_basis=None) -> BipartiteState:
    r = _basis(marginals_basis, lam.d)
    return BipartiteState(lam.d, _rotate_second(lam.choi, lam.d, r))


def map_from_state(rho: BipartiteState, marginals_basis=None) -> CPMapRep:
    """``Lam(sigma) = d tr_2[(1 (x) sigma^T) rho]`` with ``T`` taken in the eigenbasis."""
    r = _basis(marginals_basis, rho.d)
    choi = _rotate_second(rho.mat, rho.d, r.conj().T)
    return CPMapRep(rho.d, (choi + choi.conj().T) / 2)


def apply_map(lam: CPMapRep, x) -> np.ndarray:
    x = as_matrix(x, "x")
    d = lam.d
    if x.shape != (d, d):
        raise ValueError(f"apply_map: expected {d}x{d} input, got {x.shape}")
    if lam.kraus is not None:
        v = lam.kraus.ops
        return np.einsum("kba,bc,kcd->ad", v.conj(), x, v)
    c = lam.choi.reshape(d, d, d, d)
    return d * np.einsum("ji,ajbi->ab", x, c)


def kraus_from_choi(choi, d: int, rel_tol: float = DEFAULT_REL_TOL) -> KrausFamily:
    """Canonical Kraus family from the spectral decomposition of ``d * choi``.

    Each retained eigenpair ``(mu, chi)`` gives ``w = sqrt(mu) chi`` and the
    operator ``V[i, a] = conj(w[(a, i)])``. Operators are orthogonal in the
    trace inner product, and each is rotated so that its largest-modulus
    entry is real positive.
    """
    es = hermitian_eig(d * as_matrix(choi), hermiticity_tol=1e-9)
    mu_max = max(float(es.values[0]), 0.0)
    ops = []
    for mu, chi in zip(es.values, es.vectors.T):
        if mu_max == 0.0 or mu <= rel_tol * mu_max:
            continue
        w = np.sqrt(mu) * chi
        v = np.conj(w.reshape(d, d)).T
        ops.append(_fix_phase(v))
    if not ops:
        raise ValueError("Choi matrix is zero")
    return KrausFamily(d, np.stack(ops))


def _fix_phase(v: np.ndarray) -> np.ndarray:
    flat = v.reshape(-1)
    mag = np.abs(flat)
    idx = int(np.flatnonzero(mag >= mag.max() * (1 - 1e-9))[0])
    z = flat[idx]
    return v * (abs(z) / z)


def kraus_from_state(
    rho: BipartiteState, marginals_basis=None, rel_tol: float = DEFAULT_REL_TOL
) -> KrausFamily:
    return kraus_from_choi(map_from_state(rho, marginals_basis).choi, rho.d, rel_tol)


def dual_map(lam: CPMapRep, rel_tol: float = DEFAULT_REL_TOL) -> CPMapRep:
    """Trace-dual ``Lam'(y) = sum_j V_j y V_j^dagger``, i.e. Kraus operators ``V_j^dagger``."""
    return CPMapRep.from_kraus(lam.kraus_family(rel_tol).adjoints())


class MembershipConditions(NamedTuple):
    ok: bool
    residual1: float
    residual2: float


def check_membership_conditions(
    k: KrausFamily, marginals: MarginalPair, tol: float = 1e-9
) -> MembershipConditions:
    """``sum V^dagger V = d rho1`` and ``sum V V^dagger = d rho2``.

    ``rho2`` is read in ``marginals.eigenbasis2`` coordinates, the frame the
    Kraus operators act in.
    """
    if k.d != marginals.d:
        raise ValueError(f"dimension mismatch: Kraus d={k.d}, marginals d={marginals.d}")
    d = k.d
    r1 = max_abs(k.left_sum() - d * marginals.rho1.mat)
    r2 = max_abs(k.right_sum() - d * marginals.rho2_in_eigenbasis())
    return MembershipConditions(r1 <= tol and r2 <= tol, r1, r2)


def kraus_isometry(a: KrausFamily, b: KrausFamily, tol: float = 1e-9) -> Optional[np.ndarray]:
    """Isometry ``mu`` with ``b_p = sum_i mu[p, i] a_i`` if both families give the same map.

    Returns ``None`` when the maps differ or no isometric relation exists.
    """
    if a.d != b.d:
        raise ValueError("Kraus families act on different dimensions")
    if not a.is_independent():
        raise ValueError("reference family must be linearly independent")
    if max_abs(choi_from_kraus(a) - choi_from_kraus(b)) > tol:
        return None
    sa, sb = a.stacked(), b.stacked()
    # solve mu @ sa = sb in the least-squares sense
    mu = np.linalg.lstsq(sa.T, sb.T, rcond=None)[0].T
    if max_abs(mu @ sa - sb) > max(tol, 1e-9) * max(1.0, max_abs(sb)):
        return None
    if max_abs(mu.conj().T @ mu - np.eye(a.ell)) > 1e-9:
        return None
    return mu


def random_kraus(d: int, ell: int, rng: np.random.Generator) -> KrausFamily:
    """Gaussian Kraus family normalised so that ``tr(choi) = 1``."""
    ops = rng.standard_normal((ell, d, d)) + 1j * rng.standard_normal((ell, d, d))
    ops *= np.sqrt(d / np.sum(np.abs(ops) ** 2))
    return KrausFamily(d, ops)
