import math

import mpmath
import numpy as np
import pytest

from polarface.bessel import bessel_j, bessel_zeros, zero_table

from oracles import series_j, series_root


def test_values_at_zero():
    assert bessel_j(0, 0) == 1.0
    assert bessel_j(3, 0) == 0.0
    np.testing.assert_array_equal(bessel_j(2, np.zeros(3)), np.zeros(3))


def test_first_zero_of_j0_is_a_root():
    assert abs(bessel_j(0, 2.404825557695773)) < 1e-12


@pytest.mark.parametrize("n", [0, 1, 2, 5, 13, 30, 47, 64])
def test_against_series_oracle(n):
    rng = np.random.default_rng(n)
    xs = np.concatenate([[1e-6, 0.3, 1.0, 99.99, 100.0], rng.uniform(0, 100, 15)])
    got = bessel_j(n, xs)
    expected = np.array([float(series_j(n, x)) for x in xs])
    assert np.max(np.abs(got - expected)) <= 1e-12
    for x, e in zip(xs[:5], expected[:5]):
        assert abs(bessel_j(n, float(x)) - e) <= 1e-12


def test_vector_and_scalar_paths_agree(rng):
    xs = rng.uniform(0, 80, 50)
    for n in (0, 4, 31):
        vec = bessel_j(n, xs)
        scal = np.array([bessel_j(n, float(x)) for x in xs])
        np.testing.assert_allclose(vec, scal, rtol=0, atol=1e-14)


def test_recurrence_identity():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(1, 63))
        x = float(rng.uniform(0.05, 100))
        lhs = bessel_j(n - 1, x) + bessel_j(n + 1, x)
        rhs = 2 * n / x * bessel_j(n, x)
        assert abs(lhs - rhs) < 1e-9


@pytest.mark.parametrize("n, x", [(-1, 1.0), (0, -0.5), (65, 1.0), (1.5, 1.0), (0, math.inf)])
def test_domain_errors(n, x):
    with pytest.raises(ValueError):
        bessel_j(n, x)


@pytest.mark.parametrize(
    "n, i, expected, guess",
    [(0, 1, 2.404825557695773, 2.4), (1, 1, 3.831705970207512, 3.8), (0, 2, 5.520078110286311, 5.5)],
)
def test_tabulated_roots_match_oracle(zeros, n, i, expected, guess):
    oracle = series_root(n, guess)
    assert abs(float(oracle) - expected) < 1e-14
    assert abs(zeros.root(n, i) - expected) < 1e-12


def test_table_invariants(zeros):
    a = zeros.alpha
    assert a.shape == (31, 6)
    assert np.all(np.diff(a, axis=1) > 0)
    # interlacing alpha[n][i] < alpha[n+1][i] < alpha[n][i+1]
    assert np.all(a[:-1, :] < a[1:, :])
    assert np.all(a[1:, :-1] < a[:-1, 1:])
    for n in range(31):
        for i in range(6):
            root = a[n, i]
            assert abs(bessel_j(n, root)) < 1e-10
            assert bessel_j(n, root - 1e-6) * bessel_j(n, root + 1e-6) < 0


def test_table_against_mpmath_zeros(zeros):
    for n in (0, 7, 19, 30):
        for i in (1, 6):
            assert abs(zeros.root(n, i) - float(mpmath.besseljzero(n, i))) < 1e-12


def test_table_is_cached_and_read_only():
    t = zero_table(30, 6)
    assert t is zero_table(30, 6)
    with pytest.raises(ValueError):
        t.alpha[0, 0] = 1.0


def test_root_indexing_is_one_based(zeros):
    assert zeros.root(0, 1) == zeros.alpha[0, 0]
    with pytest.raises(IndexError):
        zeros.root(0, 0)


def test_small_tables():
    t = bessel_zeros(0, 1)
    assert t.alpha.shape == (1, 1)
    with pytest.raises(ValueError):
        bessel_zeros(-1, 3)
