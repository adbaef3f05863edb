"""Exact scalar arithmetic over a prime field GF(q) or over the rationals.

Scalars are plain Python values: integers in ``[0, q)`` for the prime
field and ``fractions.Fraction`` in lowest terms for the rational field.
A ``Field`` object supplies the operations and is chosen once per problem
instance, then threaded through the rest of the package explicitly.  All
arithmetic is exact; no floating point is used anywhere.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Union

Scalar = Union[int, Fraction]

#: Default prime modulus, 2**31 - 1 (a Mersenne prime).  Large enough for
#: high-confidence randomized identity testing while staying within a
#: machine word.
DEFAULT_PRIME = 2**31 - 1

_SCALAR_RE = re.compile(r"-?\d+(/\d+)?\Z")


class FieldMismatchError(ValueError):
    """Raised when scalars from different fields are combined."""


def _check_prime(q: int) -> None:
    if q == DEFAULT_PRIME:
        return
    # sympy is imported lazily; it is only needed to vet nonstandard moduli.
    from sympy import isprime

    if not isprime(q):
        raise ValueError(f"modulus {q} is not prime")


class PrimeField:
    """The field GF(q) for a prime q, with elements stored as ints in [0, q)."""

    __slots__ = ("q",)

    def __init__(self, q: int = DEFAULT_PRIME) -> None:
        if not isinstance(q, int) or q < 2:
            raise ValueError(f"modulus must be an integer >= 2, got {q!r}")
        _check_prime(q)
        self.q = q

    # -- arithmetic -------------------------------------------------------

    @staticmethod
    def _chk(a: int) -> None:
        if not isinstance(a, int):
            raise FieldMismatchError(
                f"expected a GF element (int), got {type(a).__name__}")

    def add(self, a: int, b: int) -> int:
        self._chk(a)
        self._chk(b)
        return (a + b) % self.q

    def sub(self, a: int, b: int) -> int:
        self._chk(a)
        self._chk(b)
        return (a - b) % self.q

    def mul(self, a: int, b: int) -> int:
        self._chk(a)
        self._chk(b)
        return (a * b) % self.q

    def neg(self, a: int) -> int:
        self._chk(a)
        return (-a) % self.q

    def inv(self, a: int) -> int:
        self._chk(a)
        if a % self.q == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, -1, self.q)

    # -- constants and conversions ----------------------------------------

    @property
    def zero(self) -> int:
        return 0

    @property
    def one(self) -> int:
        return 1

    def from_int(self, n: int) -> int:
        return n % self.q

    def parse(self, text: str) -> int:
        """Parse a decimal integer string, reduced into [0, q)."""
        if not _SCALAR_RE.match(text) or "/" in text:
            raise ValueError(f"invalid GF({self.q}) scalar: {text!r}")
        return int(text) % self.q

    def format(self, a: int) -> str:
        return str(a % self.q)

    # -- identity ----------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrimeField) and other.q == self.q

    def __hash__(self) -> int:
        return hash(("PrimeField", self.q))

    def __repr__(self) -> str:
        return f"PrimeField({self.q})"


class RationalField:
    """The field of rational numbers, with elements stored as Fractions."""

    __slots__ = ()

    @staticmethod
    def _chk(a: Fraction) -> None:
        if not isinstance(a, Fraction):
            raise FieldMismatchError(
                f"expected a rational (Fraction), got {type(a).__name__}")

    def add(self, a: Fraction, b: Fraction) -> Fraction:
        self._chk(a)
        self._chk(b)
        return a + b

    def sub(self, a: Fraction, b: Fraction) -> Fraction:
        self._chk(a)
        self._chk(b)
        return a - b

    def mul(self, a: Fraction, b: Fraction) -> Fraction:
        self._chk(a)
        self._chk(b)
        return a * b

    def neg(self, a: Fraction) -> Fraction:
        self._chk(a)
        return -a

    def inv(self, a: Fraction) -> Fraction:
        self._chk(a)
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        return Fraction(1) / a

    @property
    def zero(self) -> Fraction:
        return Fraction(0)

    @property
    def one(self) -> Fraction:
        return Fraction(1)

    def from_int(self, n: int) -> Fraction:
        return Fraction(n)

    def parse(self, text: str) -> Fraction:
        """Parse an integer or "num/den" string into a reduced Fraction."""
        if not _SCALAR_RE.match(text):
            raise ValueError(f"invalid rational scalar: {text!r}")
        try:
            return Fraction(text)
        except ZeroDivisionError:
            raise ValueError(f"zero denominator: {text!r}") from None

    def format(self, a: Fraction) -> str:
        if a.denominator == 1:
            return str(a.numerator)
        return f"{a.numerator}/{a.denominator}"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RationalField)

    def __hash__(self) -> int:
        return hash("RationalField")

    def __repr__(self) -> str:
        return "RationalField()"


Field = Union[PrimeField, RationalField]
