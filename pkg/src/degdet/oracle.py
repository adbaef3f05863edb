"""Brute-force ground truth for the degree-of-minors sequence.

The oracle realizes the defining formula directly: substitute independent
uniform nonzero field values for the block indeterminates, expand every
k x k submatrix determinant of the resulting 2mu x 2nu matrix of
monomials in t, and record the maximum degree.  The substitution makes
the test one-sided: the reported value never exceeds the true one, and
equals it with overwhelming probability per trial over a large field.

Determinants are computed by cofactor expansion with memoization shared
across all submatrices (expanding along the last chosen column), so the
whole minor lattice is swept once per trial.  A fraction-free elimination
determinant over the public `TPoly` type is provided as an internal
cross-check for small sizes.

Degrees use ``None`` as the minus-infinity sentinel throughout.
"""

from __future__ import annotations

import random
from itertools import combinations
from typing import Dict, Optional

import numpy as np

from degdet.field import Field, PrimeField, Scalar
from degdet.instance import Instance

#: The oracle refuses instances whose minor lattice would explode.
MAX_ORACLE_SIDE = 8

#: Dense coefficient arrays are used only while they stay small.
_DENSE_WINDOW_LIMIT = 4096


class OracleSizeError(ValueError):
    """Raised when min(2*mu, 2*nu) exceeds the brute-force size guard."""


# ---------------------------------------------------------------------------
# Laurent polynomials in t (sparse, exact)
# ---------------------------------------------------------------------------


class TPoly:
    """A Laurent polynomial in t over an exact field.

    Stored as a map from integer exponent (possibly negative) to a nonzero
    field scalar.  Instances are treated as immutable.
    """

    __slots__ = ("fld", "coeffs")

    def __init__(self, fld: Field, coeffs: Dict[int, Scalar]) -> None:
        self.fld = fld
        self.coeffs = {e: c for e, c in coeffs.items() if c != fld.zero}

    @classmethod
    def zero(cls, fld: Field) -> "TPoly":
        return cls(fld, {})

    @classmethod
    def monomial(cls, fld: Field, coeff: Scalar, exp: int) -> "TPoly":
        return cls(fld, {exp: coeff})

    @classmethod
    def one(cls, fld: Field) -> "TPoly":
        return cls.monomial(fld, fld.one, 0)

    @property
    def degree(self) -> Optional[int]:
        """Max exponent with nonzero coefficient, or None for the zero poly."""
        return max(self.coeffs) if self.coeffs else None

    def is_zero(self) -> bool:
        return not self.coeffs

    def add(self, other: "TPoly") -> "TPoly":
        fld = self.fld
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = fld.add(out.get(e, fld.zero), c)
        return TPoly(fld, out)

    def neg(self) -> "TPoly":
        fld = self.fld
        return TPoly(fld, {e: fld.neg(c) for e, c in self.coeffs.items()})

    def sub(self, other: "TPoly") -> "TPoly":
        return self.add(other.neg())

    def mul(self, other: "TPoly") -> "TPoly":
        fld = self.fld
        out: Dict[int, Scalar] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                out[e] = fld.add(out.get(e, fld.zero), fld.mul(c1, c2))
        return TPoly(fld, out)

    def divide_exact(self, other: "TPoly") -> "TPoly":
        """Exact division; raises ValueError if other does not divide self."""
        fld = self.fld
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        if self.is_zero():
            return TPoly.zero(fld)
        rem = dict(self.coeffs)
        quo: Dict[int, Scalar] = {}
        lead_exp = max(other.coeffs)
        lead_inv = fld.inv(other.coeffs[lead_exp])
        lo_self = min(self.coeffs)
        lo_other = min(other.coeffs)
        while rem:
            e = max(rem)
            if e - lead_exp < lo_self - lo_other:
                raise ValueError("inexact polynomial division")
            q_exp = e - lead_exp
            q_coeff = fld.mul(rem[e], lead_inv)
            quo[q_exp] = q_coeff
            for oe, oc in other.coeffs.items():
                t = oe + q_exp
                v = fld.sub(rem.get(t, fld.zero), fld.mul(oc, q_coeff))
                if v == fld.zero:
                    rem.pop(t, None)
                else:
                    rem[t] = v
        return TPoly(fld, quo)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, TPoly) and other.fld == self.fld
                and other.coeffs == self.coeffs)

    def __hash__(self) -> int:
        return hash((self.fld, frozenset(self.coeffs.items())))

    def __repr__(self) -> str:
        terms = " + ".join(f"{c}*t^{e}" for e, c in sorted(self.coeffs.items()))
        return f"TPoly({terms or '0'})"


def det_cofactor(mat: list[list[TPoly]]) -> TPoly:
    """Determinant of a square TPoly matrix by cofactor expansion."""
    n = len(mat)
    if any(len(row) != n for row in mat):
        raise ValueError("matrix is not square")
    if n == 0:
        raise ValueError("empty matrix")
    fld = mat[0][0].fld
    if n == 1:
        return mat[0][0]
    acc = TPoly.zero(fld)
    for i in range(n):
        if mat[i][0].is_zero():
            continue
        minor = [row[1:] for j, row in enumerate(mat) if j != i]
        term = mat[i][0].mul(det_cofactor(minor))
        acc = acc.add(term) if i % 2 == 0 else acc.sub(term)
    return acc


def det_fraction_free(mat: list[list[TPoly]]) -> TPoly:
    """Determinant of a square TPoly matrix by fraction-free elimination.

    Bareiss' algorithm: every division is exact by construction, which the
    TPoly division verifies.  Independent of det_cofactor; used to
    cross-check it on small sizes.
    """
    n = len(mat)
    if any(len(row) != n for row in mat):
        raise ValueError("matrix is not square")
    if n == 0:
        raise ValueError("empty matrix")
    fld = mat[0][0].fld
    m = [list(row) for row in mat]
    sign = False
    prev = TPoly.one(fld)
    for i in range(n - 1):
        if m[i][i].is_zero():
            pivot = next((j for j in range(i + 1, n) if not m[j][i].is_zero()),
                         None)
            if pivot is None:
                return TPoly.zero(fld)
            m[i], m[pivot] = m[pivot], m[i]
            sign = not sign
        for r in range(i + 1, n):
            for c in range(i + 1, n):
                num = m[i][i].mul(m[r][c]).sub(m[r][i].mul(m[i][c]))
                m[r][c] = num.divide_exact(prev)
            m[r][i] = TPoly.zero(fld)
        prev = m[i][i]
    result = m[n - 1][n - 1]
    return result.neg() if sign else result


# ---------------------------------------------------------------------------
# The oracle proper
# ---------------------------------------------------------------------------


def _check_oracle_field(inst: Instance) -> PrimeField:
    fld = inst.fld
    if not isinstance(fld, PrimeField) or fld.q < 2**31 - 1:
        raise ValueError(
            "the oracle requires a prime field with q >= 2**31 - 1")
    return fld


def _substituted_entries(inst: Instance, rng: random.Random):
    """Entries of the 2mu x 2nu scalar-monomial matrix for one trial.

    Each block is scaled by an independent uniform nonzero field element.
    Returns a dict (i, j) -> (coeff, exp) over nonzero entries, with i, j
    0-based indices into the expanded matrix.
    """
    fld = inst.fld
    entries: Dict[tuple[int, int], tuple[int, int]] = {}
    for (alpha, beta), blk in sorted(inst.blocks.items()):
        x = rng.randrange(1, fld.q)
        cells = ((0, 0, blk.mat.a11), (0, 1, blk.mat.a12),
                 (1, 0, blk.mat.a21), (1, 1, blk.mat.a22))
        for di, dj, a in cells:
            if a == 0:
                continue
            entries[(2 * (alpha - 1) + di, 2 * (beta - 1) + dj)] = (
                fld.mul(a, x), blk.weight)
    return entries


def _trial_max_degrees(inst: Instance, entries) -> list[Optional[int]]:
    """Per-k maximum minor degree for one substitution, k = 1..min side.

    Sweeps all (row set, column set) pairs once, sharing subdeterminants:
    det(R, C) is expanded along the last column of C, so the minors of
    size k reuse the stored size k-1 results.
    """
    q = inst.fld.q
    m2, n2 = 2 * inst.mu, 2 * inst.nu
    kmax = min(m2, n2)
    best: list[Optional[int]] = [None] * (kmax + 1)
    if kmax == 0:
        return best[1:]

    weights = [blk.weight for blk in inst.blocks.values()]
    lo1 = min(0, min(weights, default=0))
    hi1 = max(0, max(weights, default=0))
    dense = (kmax * (hi1 - lo1) + 1 <= _DENSE_WINDOW_LIMIT) and q <= 2**31

    # Level k-1 determinants keyed by (row tuple, col tuple); zero
    # determinants are simply absent.  Dense polys at level k are numpy
    # int64 arrays indexed by exponent - k*lo1; sparse polys are dicts.
    empty_minor = np.ones(1, dtype=np.int64) if dense else {0: 1}
    prev: Dict[tuple, object] = {((), ()): empty_minor}
    for k in range(1, kmax + 1):
        cur: Dict[tuple, object] = {}
        length = k * (hi1 - lo1) + 1
        for cols in combinations(range(n2), k):
            last = cols[-1]
            subcols = cols[:-1]
            for rows in combinations(range(m2), k):
                if dense:
                    acc = np.zeros(length, dtype=np.int64)
                else:
                    acc = {}
                nonzero = False
                for i, r in enumerate(rows):
                    cell = entries.get((r, last))
                    if cell is None:
                        continue
                    sub = prev.get((rows[:i] + rows[i + 1:], subcols))
                    if sub is None:
                        continue
                    coeff, exp = cell
                    if (i + k) % 2 != 0:
                        coeff = q - coeff
                    nonzero = True
                    if dense:
                        shift = exp - lo1
                        seg = slice(shift, shift + len(sub))
                        acc[seg] = (acc[seg] + coeff * sub) % q
                    else:
                        for e, c in sub.items():
                            t = e + exp
                            acc[t] = (acc.get(t, 0) + coeff * c) % q
                if not nonzero:
                    continue
                if dense:
                    nz = np.flatnonzero(acc)
                    if len(nz) == 0:
                        continue
                    deg = int(nz[-1]) + k * lo1
                else:
                    acc = {e: c for e, c in acc.items() if c}
                    if not acc:
                        continue
                    deg = max(acc)
                cur[(rows, cols)] = acc
                if best[k] is None or deg > best[k]:
                    best[k] = deg
        if not cur:
            break
        prev = cur
    return best[1:]


def oracle_sequence(inst: Instance, trials: int = 5,
                    seed: int = 0) -> list[Optional[int]]:
    """The sequence delta_0 .. delta_{min(2mu,2nu)} by brute force.

    Runs ``trials`` independent substitutions (seeds derived from ``seed``
    plus the trial index) and keeps the elementwise maximum.  None encodes
    minus infinity.
    """
    _check_oracle_field(inst)
    kmax = min(2 * inst.mu, 2 * inst.nu)
    if kmax > MAX_ORACLE_SIDE:
        raise OracleSizeError(
            f"oracle size guard: min(2mu, 2nu) = {kmax} > {MAX_ORACLE_SIDE}")
    if trials < 1:
        raise ValueError("trials must be positive")
    best: list[Optional[int]] = [None] * kmax
    for t in range(trials):
        rng = random.Random(seed * 1_000_003 + t)
        got = _trial_max_degrees(inst, _substituted_entries(inst, rng))
        for k in range(kmax):
            if got[k] is not None and (best[k] is None or got[k] > best[k]):
                best[k] = got[k]
    return [0] + best


def oracle_delta(inst: Instance, k: int, trials: int = 5,
                 seed: int = 0) -> Optional[int]:
    """delta_k by brute force; None encodes minus infinity."""
    kmax = min(2 * inst.mu, 2 * inst.nu)
    if not 0 <= k <= kmax:
        raise ValueError(f"k must lie in [0, {kmax}], got {k}")
    return oracle_sequence(inst, trials=trials, seed=seed)[k]
