import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import trapfind as tf
from trapfind.hurwitz_radon import dumps_family, loads_family


def pascal_parity_table(limit):
    """Rows of Pascal's triangle mod 2, the independent parity oracle."""
    rows = [[1]]
    for n in range(1, limit + 1):
        prev = rows[-1]
        row = [1]
        for m in range(1, n):
            row.append((prev[m - 1] + prev[m]) % 2)
        row.append(1)
        rows.append(row)
    return rows


def popcount(k):
    count = 0
    while k:
        k, digit = divmod(k, 2)
        count += digit
    return count


# -- decompose ---------------------------------------------------------------


def test_decompose_examples():
    assert (tf.decompose(1).rho, tf.decompose(1).gamma) == (1, 0)
    dec = tf.decompose(16)
    assert (dec.rho, dec.gamma) == (9, 4)
    assert 2 * 16 + 2**dec.gamma - 1 == 47
    for d, n in [(2, 5), (4, 11), (8, 23)]:
        assert 2 * d + tf.decompose(d).rho - 1 == n
    dec = tf.decompose(6)
    assert (dec.rho, dec.gamma) == (2, 1)


@pytest.mark.parametrize("bad", [0, -1, -17, 2.5, "4", True])
def test_decompose_rejects(bad):
    with pytest.raises(ValueError):
        tf.decompose(bad)


@given(st.integers(min_value=1, max_value=4096))
def test_decompose_invariants(d):
    dec = tf.decompose(d)
    assert dec.odd_part % 2 == 1
    assert 0 <= dec.b <= 3
    assert dec.d == dec.odd_part * 2 ** (4 * dec.a + dec.b)
    assert dec.rho == 2**dec.b + 8 * dec.a
    assert 2**dec.gamma >= dec.rho
    assert dec.gamma == 0 or 2 ** (dec.gamma - 1) < dec.rho


def test_rho_depends_only_on_dyadic_part():
    for odd in (1, 3, 5, 9, 15):
        for m in range(7):
            assert tf.decompose(odd * 2**m).rho == tf.decompose(2**m).rho


# -- digit arithmetic --------------------------------------------------------


def test_binary_ones_examples():
    assert tf.binary_ones(4) == 1
    assert tf.binary_ones(7) == 3
    assert tf.binary_ones(6) == 2
    with pytest.raises(ValueError):
        tf.binary_ones(0)


@given(st.integers(min_value=1, max_value=10**9))
def test_binary_ones_matches_divmod_oracle(k):
    assert tf.binary_ones(k) == popcount(k)


def test_shares_binary_one_examples():
    assert tf.shares_binary_one(4, 1) is False
    for q in range(20):
        assert tf.shares_binary_one(0, q) is False
    assert tf.shares_binary_one(3, 1) is True
    with pytest.raises(ValueError):
        tf.shares_binary_one(-1, 3)


def test_binomial_parity_examples():
    assert tf.binomial_parity(5, 1) == "odd"
    for n in range(20):
        assert tf.binomial_parity(n, 0) == "odd"
    assert tf.binomial_parity(2, 1) == "even"
    with pytest.raises(ValueError):
        tf.binomial_parity(3, 4)


def test_binomial_parity_against_pascal():
    table = pascal_parity_table(64)
    for n in range(65):
        for m in range(n + 1):
            want = "odd" if table[n][m] else "even"
            assert tf.binomial_parity(n, m) == want


def test_shares_one_equals_central_binomial_parity():
    table = pascal_parity_table(64)
    for m in range(65):
        for q in range(65 - m):
            even = table[m + q][m] == 0
            assert tf.shares_binary_one(m, q) == even


# -- sphere exponents --------------------------------------------------------


def test_sphere_exponents_examples():
    assert tf.sphere_exponents(2, "bilinear") == (4, 1)
    assert tf.sphere_exponents(16, "trilinear") == (7, 8, 32)
    assert tf.sphere_exponents(1, "bilinear") == (2,)
    with pytest.raises(ValueError):
        tf.sphere_exponents(2, "quadratic")


def test_sphere_exponents_pairwise_disjoint():
    for d in range(1, 513):
        for variant in ("bilinear", "trilinear"):
            exps = tf.sphere_exponents(d, variant)
            for a, b in itertools.combinations(exps, 2):
                assert a & b == 0


def test_sphere_exponents_trilinear_sum():
    # the two small factors fill the binary digits below 2^gamma exactly
    for d in (16, 32, 48, 64, 80):
        dec = tf.decompose(d)
        exps = tf.sphere_exponents(d, "trilinear")
        if dec.rho < 2**dec.gamma:
            assert exps[0] + exps[1] == 2**dec.gamma - 1


# -- family construction -----------------------------------------------------

FAMILY_GRID = (1, 2, 3, 4, 6, 8, 12, 16, 24, 32, 48)


def test_build_family_small_examples(family):
    assert family(1).matrices == ()
    fam2 = family(2)
    assert len(fam2.matrices) == 1
    rot = np.array([[0, -1], [1, 0]])
    assert (fam2.matrices[0] == rot).all() or (fam2.matrices[0] == -rot).all()


def test_family_d16_signed_permutations(family):
    fam = family(16)
    assert len(fam.matrices) == 8
    for mat in fam.matrices:
        assert set(np.unique(mat)) <= {-1, 0, 1}
        assert (np.abs(mat).sum(axis=0) == 1).all()
        assert (np.abs(mat).sum(axis=1) == 1).all()


@pytest.mark.parametrize("d", FAMILY_GRID)
def test_family_invariants(family, d):
    fam = family(d)
    report = tf.verify_family(fam, trials=50)
    assert report.size_ok and len(fam.matrices) == fam.rho - 1
    assert report.skew_ok
    assert report.orthogonal_ok
    assert report.anticommute_ok
    assert report.bilinear_norm_error <= 1e-10
    assert report.trilinear_norm_error <= 1e-10
    assert report.passed


def test_build_family_deterministic():
    a = tf.build_family(24)
    b = tf.build_family(24)
    assert len(a.matrices) == len(b.matrices)
    for m1, m2 in zip(a.matrices, b.matrices):
        assert (m1 == m2).all()


def test_family_odd_part_is_blockwise(family):
    # d = 3 * 2^2: each matrix repeats the d = 4 block three times
    fam12, fam4 = family(12), family(4)
    for big, small in zip(fam12.matrices, fam4.matrices):
        assert (big == np.kron(np.eye(3, dtype=np.int64), small)).all()


# -- bilinear and trilinear maps ---------------------------------------------


def test_bilinear_identity_slot(family):
    fam = family(8)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(8)
    e1 = np.zeros(8)
    e1[0] = 1.0
    assert np.array_equal(tf.bilinear_map(fam, e1, x), x)


def test_bilinear_vanishes_on_zero_arguments(family):
    fam = family(4)
    x = np.array([1.0, -2.0, 0.5, 3.0])
    assert np.array_equal(tf.bilinear_map(fam, np.zeros(4), x), np.zeros(4))
    assert np.array_equal(tf.bilinear_map(fam, np.ones(4), np.zeros(4)), np.zeros(4))


def test_bilinear_is_bilinear(family):
    fam = family(6)
    rng = np.random.default_rng(1)
    for _ in range(20):
        z, zp = rng.standard_normal((2, fam.rho))
        x, xp = rng.standard_normal((2, 6))
        a, b = rng.standard_normal(2)
        left = tf.bilinear_map(fam, a * z + b * zp, x)
        right = a * tf.bilinear_map(fam, z, x) + b * tf.bilinear_map(fam, zp, x)
        assert np.allclose(left, right, atol=1e-12)
        left = tf.bilinear_map(fam, z, a * x + b * xp)
        right = a * tf.bilinear_map(fam, z, x) + b * tf.bilinear_map(fam, z, xp)
        assert np.allclose(left, right, atol=1e-12)


def test_norm_multiplicativity_and_nonsingularity(family):
    fam = family(12)
    rng = np.random.default_rng(2)
    for _ in range(300):
        z = rng.standard_normal(fam.rho)
        x = rng.standard_normal(12)
        out = tf.bilinear_map(fam, z, x)
        expected = np.linalg.norm(z) * np.linalg.norm(x)
        assert abs(np.linalg.norm(out) - expected) <= 1e-10 * expected
        assert np.linalg.norm(out) > 0.0


def test_trilinear_examples(family):
    fam = family(16)
    rng = np.random.default_rng(3)
    x = rng.standard_normal(16)
    e1z = np.zeros(fam.rho)
    e1z[0] = 1.0
    e1w = np.zeros(fam.w_dim)
    e1w[0] = 1.0
    assert np.array_equal(tf.trilinear_map(fam, e1w, e1z, x), x)
    w = rng.standard_normal(fam.w_dim)
    z = rng.standard_normal(fam.rho)
    assert np.array_equal(tf.trilinear_map(fam, w, z, np.zeros(16)), np.zeros(16))
    expected = np.linalg.norm(w) * np.linalg.norm(z) * np.linalg.norm(x)
    got = np.linalg.norm(tf.trilinear_map(fam, w, z, x))
    assert abs(got - expected) <= 1e-10 * expected


def test_dimension_mismatches_raise(family):
    fam = family(4)
    with pytest.raises(ValueError):
        tf.bilinear_map(fam, np.ones(3), np.ones(4))
    with pytest.raises(ValueError):
        tf.bilinear_map(fam, np.ones(4), np.ones(5))
    with pytest.raises(ValueError):
        tf.trilinear_map(fam, np.ones(2), np.ones(4), np.ones(4))


# -- serialization ------------------------------------------------------------


@pytest.mark.parametrize("d", (1, 6, 16))
def test_family_roundtrip_exact(family, d):
    fam = family(d)
    text = dumps_family(fam)
    back = loads_family(text)
    assert (back.d, back.rho, back.gamma) == (fam.d, fam.rho, fam.gamma)
    assert len(back.matrices) == len(fam.matrices)
    for m1, m2 in zip(back.matrices, fam.matrices):
        assert m1.dtype.kind == "i"
        assert (m1 == m2).all()
    assert dumps_family(back) == text


def test_family_loads_rejects_corruption(family):
    text = dumps_family(family(2))
    with pytest.raises(ValueError):
        loads_family("nonsense\n" + text)
    with pytest.raises(ValueError):
        loads_family(text.replace("rho 2", "rho 3"))
    truncated = "\n".join(text.splitlines()[:-1])
    with pytest.raises(ValueError):
        loads_family(truncated)
