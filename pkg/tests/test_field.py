"""Tests for exact field arithmetic."""

import random
from fractions import Fraction

import pytest

from degdet.field import (
    DEFAULT_PRIME,
    FieldMismatchError,
    PrimeField,
    RationalField,
)


def test_gf7_examples():
    fld = PrimeField(7)
    assert fld.add(5, 4) == 2
    assert fld.sub(3, 3) == 0
    assert fld.inv(3) == 5
    assert fld.mul(3, fld.inv(3)) == 1


def test_rational_examples():
    fld = RationalField()
    assert fld.mul(Fraction(1, 2), Fraction(2, 3)) == Fraction(1, 3)
    assert fld.inv(Fraction(-2, 3)) == Fraction(-3, 2)


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        PrimeField(7).inv(0)
    with pytest.raises(ZeroDivisionError):
        PrimeField(7).inv(7)
    with pytest.raises(ZeroDivisionError):
        RationalField().inv(Fraction(0))


def test_default_prime_value():
    assert DEFAULT_PRIME == 2**31 - 1
    assert PrimeField().q == DEFAULT_PRIME


def test_nonprime_modulus_rejected():
    with pytest.raises(ValueError):
        PrimeField(10)
    with pytest.raises(ValueError):
        PrimeField(1)
    with pytest.raises(ValueError):
        PrimeField("7")


def test_field_mismatch_detected():
    gf = PrimeField(7)
    with pytest.raises(FieldMismatchError):
        gf.add(1, Fraction(1, 2))
    with pytest.raises(FieldMismatchError):
        RationalField().mul(Fraction(1), 2)


def test_algebraic_identities_gf():
    fld = PrimeField(DEFAULT_PRIME)
    rng = random.Random(0)
    for _ in range(200):
        a = rng.randrange(fld.q)
        b = rng.randrange(fld.q)
        c = rng.randrange(fld.q)
        assert fld.sub(fld.add(a, b), b) == a
        assert fld.mul(a, b) == fld.mul(b, a)
        assert fld.mul(fld.mul(a, b), c) == fld.mul(a, fld.mul(b, c))
        assert fld.mul(a, fld.add(b, c)) == fld.add(fld.mul(a, b),
                                                    fld.mul(a, c))
        if a != 0:
            assert fld.mul(a, fld.inv(a)) == 1


def test_algebraic_identities_rational():
    fld = RationalField()
    rng = random.Random(1)
    for _ in range(100):
        a = Fraction(rng.randint(-50, 50), rng.randint(1, 20))
        b = Fraction(rng.randint(-50, 50), rng.randint(1, 20))
        assert fld.sub(fld.add(a, b), b) == a
        assert fld.add(a, fld.neg(a)) == 0
        if a != 0:
            assert fld.mul(a, fld.inv(a)) == 1


def test_gf_parse_and_format():
    fld = PrimeField(7)
    assert fld.parse("12") == 5
    assert fld.parse("-1") == 6
    assert fld.format(5) == "5"
    assert fld.parse(fld.format(fld.from_int(-3))) == 4
    for bad in ("1/2", "a", "", "1.5", "1e3", "--2"):
        with pytest.raises(ValueError):
            fld.parse(bad)


def test_rational_parse_and_format():
    fld = RationalField()
    assert fld.parse("3/6") == Fraction(1, 2)
    assert fld.parse("-4") == Fraction(-4)
    assert fld.format(Fraction(1, 2)) == "1/2"
    assert fld.format(Fraction(-8, 4)) == "-2"
    assert fld.parse(fld.format(Fraction(-7, 3))) == Fraction(-7, 3)
    for bad in ("1/0", "1.5", "", "a/b", "1/-2"):
        with pytest.raises((ValueError, ZeroDivisionError)):
            fld.parse(bad)


def test_field_equality_and_hash():
    assert PrimeField(7) == PrimeField(7)
    assert PrimeField(7) != PrimeField(11)
    assert RationalField() == RationalField()
    assert PrimeField(7) != RationalField()
    assert hash(PrimeField(7)) == hash(PrimeField(7))
    assert len({PrimeField(7), PrimeField(7), RationalField()}) == 2