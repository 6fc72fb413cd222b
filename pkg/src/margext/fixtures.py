"""Concrete objects: qubit Bell-type projectors, the cyclic d=3 and d=4 Kraus
families and their states, and a randomised search for more of the same kind.

Fixture data is kept exact. A Kraus family is stored as a 0/1 pattern per
operator plus the rational square of the common scale, e.g. ``1/2`` for
entries ``1/sqrt(2)``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

import numpy as np

from margext.duality import KrausFamily, state_from_kraus
from margext.extremality import ExtremalityReport, Verdict, is_extremal_kraus
from margext.numerics import as_matrix, is_unitary
from margext.states import BipartiteState, MarginalPair, is_max_entangled_projector, max_entangled

# 1-based (row, col) pairs of |row><col| terms.
D3_PATTERN = (
    ((1, 1), (2, 3)),
    ((2, 2), (3, 1)),
    ((3, 3), (1, 2)),
)
D3_SCALE_SQ = Fraction(1, 2)

D4_PATTERN = (
    ((1, 1), (2, 4), (3, 2)),
    ((2, 2), (3, 1), (4, 3)),
    ((3, 3), (4, 2), (1, 4)),
    ((4, 4), (1, 3), (2, 1)),
)
D4_SCALE_SQ = Fraction(1, 3)

# 6 * rho for the d=3 state, 1-based (row, col) of the unit entries.
D3_STATE_SUPPORT = (
    (1, 1), (1, 8), (3, 3), (3, 5), (4, 4), (4, 9),
    (5, 3), (5, 5), (8, 1), (8, 8), (9, 4), (9, 9),
)
D3_STATE_SCALE = Fraction(1, 6)

FIXTURE_NAMES = ("qubit_bell", "d3_cyclic", "d3_state_matrix", "d4_cyclic")

_H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
QUBIT_BASES = {
    "identity": np.eye(2),
    "x": np.array([[0, 1], [1, 0]]),
    "y": np.array([[0, -1j], [1j, 0]]),
    "z": np.array([[1, 0], [0, -1]]),
    "h": _H,
}


def _pattern_family(d: int, pattern, scale_sq: Fraction) -> KrausFamily:
    s = np.sqrt(float(scale_sq))
    ops = np.zeros((len(pattern), d, d), dtype=complex)
    for k, terms in enumerate(pattern):
        for r, c in terms:
            ops[k, r - 1, c - 1] = s
    return KrausFamily(d, ops)


def d3_kraus() -> KrausFamily:
    return _pattern_family(3, D3_PATTERN, D3_SCALE_SQ)


def d4_kraus() -> KrausFamily:
    return _pattern_family(4, D4_PATTERN, D4_SCALE_SQ)


def d3_state_exact() -> list[list[Fraction]]:
    m = [[Fraction(0)] * 9 for _ in range(9)]
    for r, c in D3_STATE_SUPPORT:
        m[r - 1][c - 1] = D3_STATE_SCALE
    return m


def d3_state_matrix() -> BipartiteState:
    exact = d3_state_exact()
    return BipartiteState(3, np.array([[float(x) for x in row] for row in exact], dtype=complex))


def d4_state_matrix() -> BipartiteState:
    return state_from_kraus(d4_kraus())


def bell_projector(basis) -> BipartiteState:
    u = as_matrix(basis, "basis")
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("bell_projector: basis must be a 2x2 unitary")
    return max_entangled(2, u).projector()


def qubit_basis(name: str) -> np.ndarray:
    try:
        return np.asarray(QUBIT_BASES[name], dtype=complex)
    except KeyError:
        raise ValueError(f"unknown qubit basis {name!r}; choose from {sorted(QUBIT_BASES)}") from None


def _disjoint_permutations(d: int, m: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``m`` permutations of ``range(d)`` with pairwise distinct values at every row."""
    sigma = rng.permutation(d)
    shifts = rng.choice(d, size=m, replace=False)
    return [(sigma + s) % d for s in shifts]


def _group_positions(positions, ell: int, d: int, rng: np.random.Generator, tries: int = 50):
    """Random split of ``positions`` into ``ell`` nonempty partial permutations."""
    for _ in range(tries):
        order = rng.permutation(len(positions))
        groups: list[list[tuple[int, int]]] = [[] for _ in range(ell)]
        rows = [set() for _ in range(ell)]
        cols = [set() for _ in range(ell)]
        ok = True
        for idx in order:
            r, c = positions[idx]
            free = [g for g in range(ell) if r not in rows[g] and c not in cols[g]]
            if not free:
                ok = False
                break
            empty = [g for g in free if not groups[g]]
            g = int(rng.choice(empty)) if empty else int(rng.choice(free))
            groups[g].append((r, c))
            rows[g].add(r)
            cols[g].add(c)
        if ok and all(groups):
            return groups
    return None


def search_extremal_candidate(
    d: int, ell: int, attempts: int = 200, seed: int = 0
) -> Optional[tuple[KrausFamily, ExtremalityReport]]:
    """Search scaled partial-permutation families for an extremal state that
    is not a maximally entangled projector.

    Each attempt overlays ``m`` disjoint permutation patterns (``m`` random in
    ``[2, min(ell, d)]``) and splits the ``m d`` marked positions into ``ell``
    partial permutations; every operator carries weight ``1/sqrt(m)`` so both
    Kraus sums equal the identity. Attempt ``t`` draws from its own child of
    ``SeedSequence(seed)``. The first family whose report is Extremal is
    returned together with that report.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    if not 2 <= ell <= int(np.floor(np.sqrt(2) * d)):
        raise ValueError(f"ell must lie in [2, floor(sqrt(2) d)] = [2, {int(np.sqrt(2) * d)}]")
    marg = MarginalPair.maximally_mixed(d)
    for child in np.random.SeedSequence(seed).spawn(attempts):
        rng = np.random.default_rng(child)
        m_hi = min(ell, d)
        if m_hi < 2:
            continue
        m = int(rng.integers(2, m_hi + 1))
        perms = _disjoint_permutations(d, m, rng)
        positions = [(r, int(p[r])) for p in perms for r in range(d)]
        groups = _group_positions(positions, ell, d, rng)
        if groups is None:
            continue
        ops = np.zeros((ell, d, d), dtype=complex)
        for k, g in enumerate(groups):
            for r, c in g:
                ops[k, r, c] = 1 / np.sqrt(m)
        fam = KrausFamily(d, ops)
        if not fam.is_independent():
            continue
        rep = is_extremal_kraus(fam, marg)
        if rep.verdict is not Verdict.EXTREMAL:
            continue
        if is_max_entangled_projector(state_from_kraus(fam, marg)):
            continue
        return fam, rep
    return None
