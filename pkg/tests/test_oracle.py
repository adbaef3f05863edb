"""Tests for the brute-force minor-degree oracle."""

import random

import pytest

import degdet.oracle as oracle_mod
from degdet.field import DEFAULT_PRIME, PrimeField, RationalField
from degdet.instance import Block, Instance, random_instance
from degdet.oracle import (
    OracleSizeError,
    TPoly,
    det_cofactor,
    det_fraction_free,
    oracle_delta,
    oracle_sequence,
)
from degdet.plane import mat2

FLD = PrimeField(DEFAULT_PRIME)


def _single_block(rows, weight):
    return Instance(FLD, 1, 1, {(1, 1): Block(mat2(rows), weight)})


def _random_tpoly(rng, max_terms=3):
    coeffs = {rng.randint(-4, 4): rng.randrange(0, FLD.q)
              for _ in range(rng.randint(0, max_terms))}
    return TPoly(FLD, coeffs)


# ---------------------------------------------------------------------------
# TPoly
# ---------------------------------------------------------------------------


def test_tpoly_drops_zero_coefficients():
    p = TPoly(FLD, {3: 0, 1: 5})
    assert p.coeffs == {1: 5}
    assert p.degree == 1


def test_tpoly_zero_degree_is_none():
    assert TPoly.zero(FLD).degree is None
    assert TPoly.one(FLD).degree == 0


def test_tpoly_mul_laurent():
    p = TPoly(FLD, {-2: 3, 0: 1})
    q = TPoly(FLD, {1: 2})
    assert p.mul(q).coeffs == {-1: 6, 1: 2}


def test_tpoly_add_cancellation():
    p = TPoly(FLD, {2: 7, 0: 1})
    q = TPoly(FLD, {2: FLD.neg(7)})
    assert p.add(q).coeffs == {0: 1}


def test_tpoly_divide_exact_roundtrip():
    rng = random.Random(11)
    for _ in range(60):
        a = _random_tpoly(rng)
        b = _random_tpoly(rng)
        if b.is_zero():
            continue
        assert a.mul(b).divide_exact(b) == a


def test_tpoly_divide_inexact_raises():
    p = TPoly(FLD, {1: 1, 0: 1})
    q = TPoly(FLD, {1: 1, 0: FLD.neg(1)})
    with pytest.raises(ValueError):
        p.divide_exact(q)


def test_tpoly_divide_by_zero_raises():
    with pytest.raises(ZeroDivisionError):
        TPoly.one(FLD).divide_exact(TPoly.zero(FLD))


# ---------------------------------------------------------------------------
# Determinants over TPoly
# ---------------------------------------------------------------------------


def test_det_2x2_known():
    t = TPoly.monomial(FLD, 1, 1)
    one = TPoly.one(FLD)
    mat = [[t, one], [one, t]]
    expect = TPoly(FLD, {2: 1, 0: FLD.neg(1)})
    assert det_cofactor(mat) == expect
    assert det_fraction_free(mat) == expect


def test_det_cofactor_matches_fraction_free():
    rng = random.Random(7)
    for n in range(1, 5):
        for _ in range(25):
            mat = [[_random_tpoly(rng) for _ in range(n)] for _ in range(n)]
            assert det_cofactor(mat) == det_fraction_free(mat)


def test_det_fraction_free_needs_pivot_search():
    # Leading principal minors vanish, forcing row swaps.
    z = TPoly.zero(FLD)
    one = TPoly.one(FLD)
    t = TPoly.monomial(FLD, 1, 1)
    mat = [[z, one, z], [one, z, z], [z, z, t]]
    expect = TPoly(FLD, {1: FLD.neg(1)})
    assert det_fraction_free(mat) == expect
    assert det_cofactor(mat) == expect


# ---------------------------------------------------------------------------
# Oracle values fixed by hand
# ---------------------------------------------------------------------------


def test_identity_block():
    inst = _single_block([[1, 0], [0, 1]], 5)
    assert oracle_sequence(inst) == [0, 5, 10]


def test_rank_one_block():
    inst = _single_block([[1, 0], [0, 0]], 3)
    assert oracle_sequence(inst) == [0, 3, None]


def test_rank_one_block_negative_weight():
    inst = _single_block([[1, 2], [2, 4]], -3)
    assert oracle_sequence(inst) == [0, -3, None]


def test_two_by_two_identity_blocks():
    blocks = {}
    for a in (1, 2):
        for b in (1, 2):
            blocks[(a, b)] = Block(mat2([[1, 0], [0, 1]]), 4 if a == b else 1)
    inst = Instance(FLD, 2, 2, blocks)
    assert oracle_sequence(inst) == [0, 4, 8, 12, 16]


def test_empty_instance():
    inst = Instance(FLD, 1, 2, {})
    assert oracle_sequence(inst) == [0, None, None]


def test_rectangular_instance():
    # One rank-2 block in a 1x2 instance: only two matrix columns are
    # nonzero, so delta_2 comes from that block and delta_k stops there.
    inst = Instance(FLD, 1, 2, {(1, 2): Block(mat2([[1, 0], [0, 1]]), -4)})
    assert oracle_sequence(inst) == [0, -4, -8]


def test_oracle_delta_indexing():
    inst = _single_block([[1, 0], [0, 1]], 5)
    assert oracle_delta(inst, 0) == 0
    assert oracle_delta(inst, 1) == 5
    assert oracle_delta(inst, 2) == 10
    with pytest.raises(ValueError):
        oracle_delta(inst, 3)
    with pytest.raises(ValueError):
        oracle_delta(inst, -1)


# ---------------------------------------------------------------------------
# Guards
# ---------------------------------------------------------------------------


def test_size_guard():
    blocks = {(a, b): Block(mat2([[1, 0], [0, 1]]), 0)
              for a in range(1, 6) for b in range(1, 6)}
    inst = Instance(FLD, 5, 5, blocks)
    with pytest.raises(OracleSizeError):
        oracle_sequence(inst)


def test_rational_field_refused():
    inst = Instance(RationalField(), 1, 1,
                    {(1, 1): Block(mat2([[1, 0], [0, 1]]), 0)})
    with pytest.raises(ValueError):
        oracle_sequence(inst)


def test_small_prime_refused():
    inst = Instance(PrimeField(101), 1, 1,
                    {(1, 1): Block(mat2([[1, 0], [0, 1]]), 0)})
    with pytest.raises(ValueError):
        oracle_sequence(inst)


def test_trials_must_be_positive():
    inst = _single_block([[1, 0], [0, 1]], 0)
    with pytest.raises(ValueError):
        oracle_sequence(inst, trials=0)


# ---------------------------------------------------------------------------
# Internal consistency
# ---------------------------------------------------------------------------


def test_dense_and_sparse_containers_agree(monkeypatch):
    for seed in range(25):
        inst = random_instance(2, 2, 0.8, 9, 0.4, seed=seed)
        rng = random.Random(1000 + seed)
        entries = oracle_mod._substituted_entries(inst, rng)
        dense = oracle_mod._trial_max_degrees(inst, entries)
        monkeypatch.setattr(oracle_mod, "_DENSE_WINDOW_LIMIT", 0)
        sparse = oracle_mod._trial_max_degrees(inst, entries)
        monkeypatch.undo()
        assert dense == sparse


def test_oracle_matches_direct_determinant_expansion():
    # Build the full 2mu x 2nu TPoly matrix and take determinants of all
    # submatrices directly; compare against the shared-expansion sweep.
    from itertools import combinations

    for seed in range(8):
        inst = random_instance(2, 2, 0.7, 5, 0.3, seed=seed)
        trial_rng = random.Random(500 + seed)
        entries = oracle_mod._substituted_entries(inst, trial_rng)
        got = oracle_mod._trial_max_degrees(inst, entries)
        full = [[TPoly.zero(FLD) for _ in range(4)] for _ in range(4)]
        for (i, j), (coeff, exp) in entries.items():
            full[i][j] = TPoly.monomial(FLD, coeff, exp)
        for k in range(1, 5):
            best = None
            for rows in combinations(range(4), k):
                for cols in combinations(range(4), k):
                    sub = [[full[r][c] for c in cols] for r in rows]
                    d = det_cofactor(sub).degree
                    if d is not None and (best is None or d > best):
                        best = d
            assert got[k - 1] == best


def test_large_weights_use_sparse_route():
    inst = random_instance(2, 2, 0.8, 10**6, 0.3, seed=5)
    seq = oracle_sequence(inst)
    assert seq[0] == 0
    assert len(seq) == 5
    assert all(v is None or abs(v) <= 4 * 10**6 for v in seq)


def test_sequence_concavity():
    # Max minor degree is concave in k wherever finite and contiguous.
    for seed in range(20):
        inst = random_instance(2, 3, 0.8, 8, 0.3, seed=seed)
        seq = oracle_sequence(inst)
        for k in range(1, len(seq) - 1):
            if seq[k - 1] is not None and seq[k + 1] is not None:
                assert seq[k] is not None
                assert 2 * seq[k] >= seq[k - 1] + seq[k + 1]
