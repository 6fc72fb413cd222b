"""Exact cross-checks for floating-point verdicts.

Ranks are computed over the Gaussian rationals Q(i): each row is cleared of
denominators into Gaussian integers, then reduced with Bareiss fraction-free
elimination, whose intermediate divisions are exact in Z[i].
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence

import numpy as np

from margext.duality import KrausFamily
from margext.extremality import (
    DISTINCT_TOL,
    ExtremalityReport,
    Verdict,
    WitnessDecomposition,
    build_joint_family,
)
from margext.numerics import max_abs
from margext.states import BipartiteState, MarginalPair, in_C

MAX_DENOMINATOR = 10**6
RATIONAL_TOL = 1e-12


@dataclass(frozen=True)
class RationalComplex:
    re: Fraction
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)


@dataclass(frozen=True)
class RationalMatrix:
    rows: int
    cols: int
    entries: tuple[RationalComplex, ...]

    def __post_init__(self):
        if len(self.entries) != self.rows * self.cols:
            raise ValueError("entries length must equal rows * cols")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> RationalMatrix:
        """Build from nested sequences of ints, Fractions, complex ints or RationalComplex."""
        out = []
        for row in rows:
            for x in row:
                if isinstance(x, RationalComplex):
                    out.append(x)
                elif isinstance(x, complex):
                    out.append(RationalComplex(Fraction(x.real), Fraction(x.imag)))
                else:
                    out.append(RationalComplex(Fraction(x)))
        n = len(rows)
        return cls(n, len(out) // n if n else 0, tuple(out))

    def row(self, r: int) -> tuple[RationalComplex, ...]:
        return self.entries[r * self.cols:(r + 1) * self.cols]


def _rationalize(x: float) -> Optional[Fraction]:
    f = Fraction(x).limit_denominator(MAX_DENOMINATOR)
    return f if abs(float(f) - x) <= RATIONAL_TOL else None


def rationalize(a) -> Optional[RationalMatrix]:
    """Exact counterpart of a float matrix, or ``None`` if some entry is not
    within ``1e-12`` of a rational with denominator at most ``10**6``."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    out = []
    for z in m.reshape(-1):
        re, im = _rationalize(float(z.real)), _rationalize(float(z.imag))
        if re is None or im is None:
            return None
        out.append(RationalComplex(re, im))
    return RationalMatrix(m.shape[0], m.shape[1], tuple(out))


# Gaussian integers as (real, imag) tuples of Python ints.

def _gmul(a, b):
    return (a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0])


def _gsub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _gdiv_exact(a, b):
    n = b[0] * b[0] + b[1] * b[1]
    re = a[0] * b[0] + a[1] * b[1]
    im = a[1] * b[0] - a[0] * b[1]
    if re % n or im % n:
        raise ArithmeticError("inexact Gaussian-integer division")
    return (re // n, im // n)


def _integer_rows(m: RationalMatrix) -> list[list[tuple[int, int]]]:
    rows = []
    for r in range(m.rows):
        row = m.row(r)
        den = 1
        for z in row:
            den = lcm(den, z.re.denominator, z.im.denominator)
        rows.append([(int(z.re * den), int(z.im * den)) for z in row])
    return rows


def exact_rank(m: RationalMatrix) -> int:
    a = _integer_rows(m)
    nrows, ncols = m.rows, m.cols
    prev = (1, 0)
    rank = 0
    for c in range(ncols):
        if rank == nrows:
            break
        piv = next((r for r in range(rank, nrows) if a[r][c] != (0, 0)), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        p = a[rank][c]
        for r in range(rank + 1, nrows):
            f = a[r][c]
            new = a[r]
            for cc in range(c, ncols):
                new[cc] = _gdiv_exact(_gsub(_gmul(p, a[r][cc]), _gmul(f, a[rank][cc])), prev)
            for cc in range(c):
                new[cc] = (0, 0)
        prev = p
        rank += 1
    return rank


class Certification(str, enum.Enum):
    CONFIRMED = "confirmed"
    REFUTED = "refuted"
    NOT_APPLICABLE = "not_applicable"


def certify_verdict(k: KrausFamily, report: ExtremalityReport) -> Certification:
    """Recompute the joint rank exactly and compare with the float report.

    Applicable only when every entry of the joint family is (within 1e-12)
    a rational with denominator at most ``10**6``.
    """
    exact = rationalize(build_joint_family(k).stacked)
    if exact is None:
        return Certification.NOT_APPLICABLE
    r = exact_rank(exact)
    full = k.ell * k.ell
    if r != report.joint_rank:
        return Certification.REFUTED
    if report.verdict is Verdict.EXTREMAL and r != full:
        return Certification.REFUTED
    if report.verdict is Verdict.NOT_EXTREMAL and r == full:
        return Certification.REFUTED
    return Certification.CONFIRMED


def verify_decomposition(
    rho: BipartiteState, w: WitnessDecomposition, marginals: MarginalPair, tol: float = 1e-9
) -> bool:
    """Independent check that ``w`` splits ``rho`` into two distinct members of C."""
    halves = (w.state_plus.mat, w.state_minus.mat)
    if max_abs(rho.mat - (halves[0] + halves[1]) / 2) > tol:
        return False
    for h in halves:
        if max_abs(h - h.conj().T) > tol or abs(np.trace(h) - 1) > tol:
            return False
        if np.linalg.eigvalsh((h + h.conj().T) / 2)[0] < -tol:
            return False
        try:
            s = BipartiteState(rho.d, h)
        except ValueError:
            return False
        if not in_C(s, marginals, tol).ok:
            return False
    return max_abs(halves[0] - halves[1]) > DISTINCT_TOL
