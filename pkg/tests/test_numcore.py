import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shortcast.errors import EmptyInput, RankDeficient
from shortcast.numcore import companion_matrix, companion_spectral_radius, lstsq, mean_and_std


def test_lstsq_identity():
    np.testing.assert_allclose(lstsq(np.eye(3), [[1], [2], [3]]), [[1], [2], [3]])


def test_lstsq_exact_line():
    np.testing.assert_allclose(lstsq([[1, 0], [1, 1], [1, 2]], [[0], [1], [2]]), [[0], [1]], atol=1e-12)


def test_lstsq_recovers_known_coefficients():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 4))
    B = rng.normal(size=(4, 3))
    np.testing.assert_allclose(lstsq(X, X @ B), B, rtol=1e-8, atol=1e-10)


def test_lstsq_rank_deficient_names_columns():
    X = np.column_stack([np.ones(10), np.arange(10.0), 2 * np.arange(10.0)])
    with pytest.raises(RankDeficient) as info:
        lstsq(X, np.ones(10))
    assert info.value.columns == [2]


def test_lstsq_underdetermined():
    with pytest.raises(RankDeficient):
        lstsq(np.ones((2, 3)), np.ones(2))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(5, 40), st.integers(1, 5))
def test_lstsq_residual_orthogonal(seed, n, m):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n + m, m))
    Y = rng.normal(size=(n + m, 2))
    B = lstsq(X, Y)
    grad = X.T @ (X @ B - Y)
    assert np.abs(grad).max() <= 1e-6 * max(1.0, np.abs(X.T @ Y).max())


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_lstsq_recovery_property(seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 4))
    B = rng.normal(size=(4, 2)) * 10 ** rng.uniform(-3, 3)
    got = lstsq(X, X @ B)
    assert np.abs(got - B).max() <= 1e-8 * max(1.0, np.abs(B).max())


@pytest.mark.parametrize("coefs, expected", [
    ([[[0.5]]], 0.5),
    ([[[1.0]]], 1.0),
    # largest root of t^2 - 0.5 t - 0.3
    ([[[0.5]], [[0.3]]], (0.5 + math.sqrt(0.25 + 1.2)) / 2),
])
def test_spectral_radius_scalar_cases(coefs, expected):
    r = companion_spectral_radius(coefs)
    assert r.converged
    assert r.radius == pytest.approx(expected, abs=1e-9)


def test_spectral_radius_quadratic_value():
    assert companion_spectral_radius([[[0.5]], [[0.3]]]).radius == pytest.approx(0.852079729, abs=1e-8)


def test_spectral_radius_complex_pair():
    th = 1.0
    rot = 0.9 * np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    assert companion_spectral_radius([rot]).radius == pytest.approx(0.9, abs=1e-8)


def test_spectral_radius_zero():
    assert companion_spectral_radius([np.zeros((2, 2)), np.zeros((2, 2))]).radius == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_spectral_radius_matches_eigvals_and_permutation(seed):
    rng = np.random.default_rng(seed)
    k, p = 2, int(rng.integers(1, 4))
    coefs = [rng.normal(size=(k, k)) * 0.4 for _ in range(p)]
    oracle = np.abs(np.linalg.eigvals(companion_matrix(coefs))).max()
    base = companion_spectral_radius(coefs).radius
    assert base == pytest.approx(oracle, rel=1e-6)
    for perm in itertools.permutations(range(k)):
        P = np.eye(k)[list(perm)]
        permuted = [P @ a @ P.T for a in coefs]
        assert companion_spectral_radius(permuted).radius == pytest.approx(oracle, rel=1e-6)


def test_mean_and_std():
    assert mean_and_std([1, 2, 3]) == (2.0, 1.0)
    m, s = mean_and_std([0.0051, 0.0157])
    assert m == pytest.approx(0.0104, abs=1e-15)
    # |a - b| / sqrt(2)
    assert s == pytest.approx(0.0106 / math.sqrt(2), rel=1e-12)
    assert s == pytest.approx(0.0074953, abs=1e-7)


def test_mean_and_std_single_value():
    assert mean_and_std([5]) == (5.0, 0.0)


def test_mean_and_std_empty():
    with pytest.raises(EmptyInput):
        mean_and_std([])
