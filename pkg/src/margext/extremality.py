"""Extremality of states with fixed marginals, with non-extremality witnesses.

A Kraus family ``{V_j}`` of a map in the fixed-marginal set is extremal
exactly when the pair of families ``(V_i^dagger V_j)`` and ``(V_j V_i^dagger)``
is jointly linearly independent, i.e. when the ``ell^2`` stacked direct
sums are independent. A kernel vector of that stack yields two distinct
members of the set averaging to the input, which we return as a witness.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from margext.duality import (
    KrausFamily,
    check_membership_conditions,
    kraus_from_state,
    state_from_kraus,
)
from margext.numerics import DEFAULT_REL_TOL, RankResult, max_abs, psd_sqrt, rank_with_tol
from margext.states import BipartiteState, MarginalPair, in_C

ANNIHILATION_TOL = 1e-8
WITNESS_TOL = 1e-9
DISTINCT_TOL = 1e-6


class MembershipError(ValueError):
    """Input violates the marginal constraints; carries both residuals."""

    def __init__(self, message: str, residual1: float, residual2: float):
        super().__init__(f"{message} (residuals {residual1:.3e}, {residual2:.3e})")
        self.residual1 = residual1
        self.residual2 = residual2


class Verdict(str, enum.Enum):
    EXTREMAL = "extremal"
    NOT_EXTREMAL = "not_extremal"
    INCONCLUSIVE = "inconclusive"


class Lemma2Class(str, enum.Enum):
    LEFT_INDEPENDENT = "left_independent"
    RIGHT_INDEPENDENT = "right_independent"
    NEITHER_BUT_JOINT = "neither_but_joint"
    NOT_JOINT = "not_joint"


@dataclass(frozen=True, eq=False)
class JointFamily:
    ell: int
    left: np.ndarray  # (ell*ell, d, d), entry i*ell+j is V_i^dagger V_j
    right: np.ndarray  # (ell*ell, d, d), entry i*ell+j is V_j V_i^dagger
    stacked: np.ndarray  # (ell*ell, 2 d^2)

    @property
    def d(self) -> int:
        return self.left.shape[1]


def build_joint_family(k: KrausFamily) -> JointFamily:
    v = k.ops
    vh = np.conj(np.transpose(v, (0, 2, 1)))
    ell, d = k.ell, k.d
    left = np.einsum("iab,jbc->ijac", vh, v).reshape(ell * ell, d, d)
    right = np.einsum("jab,ibc->ijac", v, vh).reshape(ell * ell, d, d)
    stacked = np.hstack([left.reshape(ell * ell, -1), right.reshape(ell * ell, -1)])
    return JointFamily(ell, left, right, stacked)


class JointIndependence(NamedTuple):
    independent: bool
    joint_rank: int
    kernel: Optional[np.ndarray]  # ell x ell, unit Frobenius norm
    kernel_basis: Optional[np.ndarray]  # (nullity, ell, ell)
    rank: RankResult


def jointly_independent(jf: JointFamily, rel_tol: float = DEFAULT_REL_TOL) -> JointIndependence:
    """Rank test of the stacked family, with left-null coefficients when it fails.

    The null space is read off an SVD of ``stacked^T``; ``kernel`` is the
    right singular vector of the smallest singular value, reshaped so that
    ``kernel[i, j]`` multiplies row ``(i, j)``.
    """
    n = jf.ell * jf.ell
    rk = rank_with_tol(jf.stacked, rel_tol)
    if rk.rank == n:
        return JointIndependence(True, rk.rank, None, None, rk)
    _, _, vh = np.linalg.svd(jf.stacked.T, full_matrices=True)
    # rows of vh beyond the numerical rank span {c : stacked^T c = 0}
    null = vh[rk.rank:].conj()
    basis = null.reshape(-1, jf.ell, jf.ell)
    return JointIndependence(False, rk.rank, basis[-1], basis, rk)


def lemma2_check(jf: JointFamily, rel_tol: float = DEFAULT_REL_TOL) -> Lemma2Class:
    """Which sufficient condition for joint independence holds, if any.

    ``LEFT_INDEPENDENT`` takes precedence when both halves are independent.
    """
    n = jf.ell * jf.ell
    if rank_with_tol(jf.left.reshape(n, -1), rel_tol).rank == n:
        return Lemma2Class.LEFT_INDEPENDENT
    if rank_with_tol(jf.right.reshape(n, -1), rel_tol).rank == n:
        return Lemma2Class.RIGHT_INDEPENDENT
    if jointly_independent(jf, rel_tol).independent:
        return Lemma2Class.NEITHER_BUT_JOINT
    return Lemma2Class.NOT_JOINT


def check_rank_bounds(ell: int, d: int) -> tuple[bool, bool]:
    """``(ell^2 <= 2 d^2, ell^2 <= 2 d^2 - 1)`` in exact integer arithmetic."""
    if ell < 1 or d < 1:
        raise ValueError("ell and d must be positive")
    return ell * ell <= 2 * d * d, ell * ell <= 2 * d * d - 1


@dataclass(frozen=True, eq=False)
class WitnessDecomposition:
    lam: np.ndarray
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    kraus_plus: KrausFamily
    kraus_minus: KrausFamily
    state_plus: BipartiteState
    state_minus: BipartiteState


def _annihilation(jf: JointFamily, lam: np.ndarray) -> float:
    return max_abs(lam.reshape(-1) @ jf.stacked)


def build_witness(
    k: KrausFamily, kernel_raw, marginals: MarginalPair, jf: JointFamily | None = None
) -> WitnessDecomposition:
    """Split the state of ``k`` into two distinct members of the same set.

    The kernel is made Hermitian (both ``(l + l^dagger)/2`` and
    ``(l - l^dagger)/2i`` annihilate the family; the larger passing one is
    used), scaled to spectral norm 1, and factored as
    ``1 +- lam = alpha^dagger alpha`` with ``alpha`` the positive square
    root. The two halves have Kraus operators ``alpha_pm @ V``.
    """
    jf = build_joint_family(k) if jf is None else jf
    raw = np.asarray(kernel_raw, dtype=complex).reshape(k.ell, k.ell)
    if max_abs(raw) == 0:
        raise ValueError("kernel is zero")
    raw = raw / np.linalg.norm(raw)
    candidates = [(raw + raw.conj().T) / 2, (raw - raw.conj().T) / 2j]
    passing = [
        h
        for h in candidates
        if np.linalg.norm(h) > 1e-6 and _annihilation(jf, h / np.linalg.norm(h)) <= ANNIHILATION_TOL
    ]
    if not passing:
        raise ValueError("no Hermitian candidate annihilates the joint family")
    lam = max(passing, key=np.linalg.norm)
    lam = lam / np.linalg.norm(lam, 2)
    lam = (lam + lam.conj().T) / 2
    eye = np.eye(k.ell)
    alpha_p = psd_sqrt(eye + lam)
    alpha_m = psd_sqrt(eye - lam)
    kp = KrausFamily(k.d, np.einsum("pi,iab->pab", alpha_p, k.ops))
    km = KrausFamily(k.d, np.einsum("pi,iab->pab", alpha_m, k.ops))
    r = marginals.eigenbasis2
    return WitnessDecomposition(
        lam, alpha_p, alpha_m, kp, km, state_from_kraus(kp, r), state_from_kraus(km, r)
    )


def witness_defects(
    rho: BipartiteState, w: WitnessDecomposition, marginals: MarginalPair, jf: JointFamily | None
) -> list[str]:
    """Human-readable list of violated witness invariants; empty when sound."""
    bad = []
    if jf is not None and _annihilation(jf, w.lam) > ANNIHILATION_TOL:
        bad.append("lambda does not annihilate the joint family")
    if max_abs(rho.mat - (w.state_plus.mat + w.state_minus.mat) / 2) > WITNESS_TOL:
        bad.append("average of the halves differs from the state")
    for name, s in (("plus", w.state_plus), ("minus", w.state_minus)):
        if not in_C(s, marginals, WITNESS_TOL).ok:
            bad.append(f"state_{name} violates the marginals")
    if max_abs(w.state_plus.mat - w.state_minus.mat) <= DISTINCT_TOL:
        bad.append("halves are not distinct")
    return bad


@dataclass(frozen=True, eq=False)
class ExtremalityReport:
    verdict: Verdict
    d: int
    ell: int
    joint_rank: int
    rank_margins: tuple[float, float]
    sigma_max: float
    bound_sqrt2d: bool
    bound_parthasarathy: bool
    state_rank: int
    singular: bool
    kraus: KrausFamily
    rel_tol: float
    witness: Optional[WitnessDecomposition] = None
    notes: tuple[str, ...] = field(default_factory=tuple)


def _too_close(rk: RankResult, rel_tol: float, full: int) -> bool:
    if rk.sigma_max == 0:
        return True
    kept = rk.smallest_kept / rk.sigma_max
    dropped = rk.largest_dropped / rk.sigma_max
    return kept < 10 * rel_tol or (rk.rank < full and dropped > rel_tol / 10)


def is_extremal_kraus(
    k: KrausFamily,
    marginals: MarginalPair,
    rel_tol: float = DEFAULT_REL_TOL,
    membership_tol: float = 1e-9,
) -> ExtremalityReport:
    mc = check_membership_conditions(k, marginals, membership_tol)
    if not mc.ok:
        raise MembershipError("Kraus sums do not match the marginals", mc.residual1, mc.residual2)
    if not k.is_independent(rel_tol):
        raise ValueError("Kraus family must be linearly independent")
    ell, d = k.ell, k.d
    jf = build_joint_family(k)
    ji = jointly_independent(jf, rel_tol)
    b1, b2 = check_rank_bounds(ell, d)
    common = dict(
        d=d,
        ell=ell,
        joint_rank=ji.joint_rank,
        rank_margins=(ji.rank.smallest_kept, ji.rank.largest_dropped),
        sigma_max=ji.rank.sigma_max,
        bound_sqrt2d=b1,
        bound_parthasarathy=b2,
        state_rank=ell,
        singular=ell < d * d,
        kraus=k,
        rel_tol=rel_tol,
    )
    full = min(jf.stacked.shape)
    if _too_close(ji.rank, rel_tol, full):
        return ExtremalityReport(Verdict.INCONCLUSIVE, notes=("rank decision within 10x of rel_tol",), **common)
    if ji.independent:
        return ExtremalityReport(Verdict.EXTREMAL, **common)
    rho = state_from_kraus(k, marginals)
    try:
        w = build_witness(k, ji.kernel, marginals, jf)
    except ValueError as exc:
        return ExtremalityReport(Verdict.INCONCLUSIVE, notes=(f"witness failed: {exc}",), **common)
    defects = witness_defects(rho, w, marginals, jf)
    if defects:
        return ExtremalityReport(Verdict.INCONCLUSIVE, witness=w, notes=tuple(defects), **common)
    return ExtremalityReport(Verdict.NOT_EXTREMAL, witness=w, **common)


def is_extremal_state(
    rho: BipartiteState,
    marginals: MarginalPair,
    rel_tol: float = DEFAULT_REL_TOL,
    membership_tol: float = 1e-9,
) -> ExtremalityReport:
    mem = in_C(rho, marginals, membership_tol)
    if not mem.ok:
        raise MembershipError("state is not in C(rho1, rho2)", mem.residual1, mem.residual2)
    k = kraus_from_state(rho, marginals, rel_tol)
    return is_extremal_kraus(k, marginals, rel_tol, membership_tol)


def sqrt2d_limit(d: int) -> int:
    """Largest ``ell`` with ``ell^2 <= 2 d^2``."""
    return math.isqrt(2 * d * d)
