"""Exact linear algebra in the plane F^2.

This module provides the small toolkit the whole algorithm is built on:
2x2 matrices over an exact field, 1-dimensional subspaces of F^2 in a
canonical normalization, exact ranks and kernels, and the bilinear
orthogonality operation that drives every labeling update.

A ``Line`` is the 1-dimensional subspace spanned by its ``direction``
vector, normalized so that the first nonzero coordinate is 1.  Two Lines
are therefore equal as subspaces exactly when they are equal as tuples,
which makes them hashable dictionary keys.

``orth`` returns either a Line or the ``FULL_PLANE`` sentinel.  The
sentinel case means the tested vector annihilates the block entirely
(u^T A = 0 or A v = 0), so *every* vector is orthogonal to it; callers in
the augmentation engine need to distinguish that case structurally.
"""

from __future__ import annotations

from typing import NamedTuple, Union

from degdet.field import Field, Scalar


class Mat2(NamedTuple):
    """A 2x2 matrix [[a11, a12], [a21, a22]] over the instance field."""

    a11: Scalar
    a12: Scalar
    a21: Scalar
    a22: Scalar


class Line(NamedTuple):
    """A 1-dimensional subspace of F^2, spanned by a normalized vector."""

    x0: Scalar
    x1: Scalar


class _FullPlane:
    """Singleton result of ``orth`` when the whole plane is orthogonal."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "FULL_PLANE"


FULL_PLANE = _FullPlane()

OrthResult = Union[Line, _FullPlane]


def line(fld: Field, x0: Scalar, x1: Scalar) -> Line:
    """Build the Line spanned by (x0, x1), canonically normalized.

    The representative is scaled so that its first nonzero coordinate is
    the field's 1.  Raises ValueError on the zero vector.
    """
    zero = fld.zero
    if x0 != zero:
        return Line(fld.one, fld.mul(fld.inv(x0), x1))
    if x1 != zero:
        return Line(zero, fld.one)
    raise ValueError("a Line cannot be spanned by the zero vector")


def mat2(rows) -> Mat2:
    """Build a Mat2 from a 2x2 nested sequence of raw field scalars."""
    (a11, a12), (a21, a22) = rows
    return Mat2(a11, a12, a21, a22)


def det(fld: Field, a: Mat2) -> Scalar:
    return fld.sub(fld.mul(a.a11, a.a22), fld.mul(a.a12, a.a21))


def is_zero_mat(fld: Field, a: Mat2) -> bool:
    zero = fld.zero
    return a.a11 == zero and a.a12 == zero and a.a21 == zero and a.a22 == zero


def rank(fld: Field, a: Mat2) -> int:
    """The exact rank of a, one of 0, 1, 2."""
    if det(fld, a) != fld.zero:
        return 2
    if is_zero_mat(fld, a):
        return 0
    return 1


def left_kernel(fld: Field, a: Mat2) -> Line:
    """The unique Line L with u^T a = 0 for u in L.  Requires rank 1."""
    if rank(fld, a) != 1:
        raise ValueError("left_kernel requires a rank-1 matrix")
    # u = (u0, u1) with u0*row1 + u1*row2 = 0.  Some row is nonzero; the
    # kernel is spanned by the coefficients that cancel it.
    zero = fld.zero
    if a.a11 != zero or a.a12 != zero:
        # u0 * (a11, a12) = -u1 * (a21, a22); rows are proportional.
        return line(fld, fld.neg(a.a21 if a.a11 != zero else a.a22),
                    a.a11 if a.a11 != zero else a.a12)
    return line(fld, fld.one, zero)


def right_kernel(fld: Field, a: Mat2) -> Line:
    """The unique Line L with a v = 0 for v in L.  Requires rank 1."""
    if rank(fld, a) != 1:
        raise ValueError("right_kernel requires a rank-1 matrix")
    zero = fld.zero
    if a.a11 != zero or a.a21 != zero:
        return line(fld, fld.neg(a.a12 if a.a11 != zero else a.a22),
                    a.a11 if a.a11 != zero else a.a21)
    return line(fld, fld.one, zero)


def apply_right(fld: Field, a: Mat2, v: Line) -> tuple[Scalar, Scalar]:
    """The (unnormalized) vector a * v for the normalized generator of v."""
    return (
        fld.add(fld.mul(a.a11, v.x0), fld.mul(a.a12, v.x1)),
        fld.add(fld.mul(a.a21, v.x0), fld.mul(a.a22, v.x1)),
    )


def apply_left(fld: Field, a: Mat2, u: Line) -> tuple[Scalar, Scalar]:
    """The (unnormalized) row vector u^T * a for the generator of u."""
    return (
        fld.add(fld.mul(u.x0, a.a11), fld.mul(u.x1, a.a21)),
        fld.add(fld.mul(u.x0, a.a12), fld.mul(u.x1, a.a22)),
    )


def pairing_nonzero(fld: Field, a: Mat2, x: Line, y: Line) -> bool:
    """Whether the bilinear pairing x^T a y is nonzero.

    Well-defined on Lines: scaling either generator scales the pairing by
    a nonzero factor.
    """
    w0, w1 = apply_right(fld, a, y)
    return fld.add(fld.mul(x.x0, w0), fld.mul(x.x1, w1)) != fld.zero


def orth(fld: Field, a: Mat2, x: Line, side: str) -> OrthResult:
    """The annihilator of x under the pairing of a, on the opposite side.

    Parameters
    ----------
    side: "left" when x pairs on the left (a row space Line; the result
        annihilates it among column vectors), "right" when x pairs on the
        right (a column space Line; the result is among row vectors).

    Returns the unique Line of opposite-side vectors z with pairing zero,
    or FULL_PLANE when x itself annihilates a (so every z qualifies).
    """
    if side == "left":
        w0, w1 = apply_left(fld, a, x)
    elif side == "right":
        w0, w1 = apply_right(fld, a, x)
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    zero = fld.zero
    if w0 == zero and w1 == zero:
        return FULL_PLANE
    # z must satisfy w0*z0 + w1*z1 = 0.
    return line(fld, fld.neg(w1), w0)
