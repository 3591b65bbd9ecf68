import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import kron_loops, logdet_chol, random_spd
from tensorgm.matalg import (
    NotPositiveDefiniteError,
    cholesky,
    inverse,
    kron,
    logdet,
    norms,
    sqrt_pd,
    sym_eigen,
    symmetrize,
)


def test_cholesky_cases():
    np.testing.assert_array_equal(cholesky(np.eye(3)), np.eye(3))
    a = np.array([[4.0, 2.0], [2.0, 3.0]])
    L = cholesky(a)
    assert np.allclose(np.triu(L, 1), 0)
    np.testing.assert_allclose(L @ L.T, a, rtol=1e-12)
    with pytest.raises(NotPositiveDefiniteError):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_not_pd_error_is_linalg_error():
    assert issubclass(NotPositiveDefiniteError, np.linalg.LinAlgError)


def test_inverse_cases(rng):
    np.testing.assert_allclose(inverse(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(inverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))
    a = random_spd(rng, 5)
    assert np.abs(a @ inverse(a) - np.eye(5)).max() <= 1e-10
    with pytest.raises(NotPositiveDefiniteError):
        inverse(np.diag([1.0, -1.0]))


def test_logdet_matches_hand_cholesky(rng):
    a = random_spd(rng, 6)
    assert logdet(a) == pytest.approx(logdet_chol(a), rel=1e-12)


def test_sym_eigen_cases(rng):
    w, _ = sym_eigen(np.diag([1.0, 3.0, 2.0]))
    np.testing.assert_allclose(w, [1, 2, 3])
    np.testing.assert_allclose(sym_eigen(np.eye(4))[0], np.ones(4))
    a = symmetrize(rng.standard_normal((6, 6)))
    w, v = sym_eigen(a)
    assert np.all(np.diff(w) >= 0)
    assert np.abs(a @ v - v * w).max() <= 1e-9
    assert np.abs(v.T @ v - np.eye(6)).max() <= 1e-10
    np.testing.assert_allclose((v * w) @ v.T, a, atol=1e-12)


def test_sqrt_pd_cases(rng):
    np.testing.assert_allclose(sqrt_pd(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(sqrt_pd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)
    a = random_spd(rng, 4)
    r = sqrt_pd(a)
    np.testing.assert_array_equal(r, r.T)
    assert np.abs(r @ r - a).max() <= 1e-9
    assert np.linalg.eigvalsh(r).min() > 0


def test_kron_cases(rng):
    np.testing.assert_array_equal(kron(np.eye(2), np.eye(3)), np.eye(6))
    a, b = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    assert np.trace(kron(a, b)) == pytest.approx(np.trace(a) * np.trace(b))
    a, b = rng.standard_normal((2, 2)), rng.standard_normal((2, 3))
    np.testing.assert_array_equal(kron(a, b), kron_loops(a, b))


def test_kron_mixed_product_and_inverse(rng):
    a, b, c, d = (rng.standard_normal((3, 3)) for _ in range(4))
    np.testing.assert_allclose(kron(a, b) @ kron(c, d), kron(a @ c, b @ d), atol=1e-12)
    p, q = random_spd(rng, 3), random_spd(rng, 4)
    assert np.abs(inverse(kron(p, q)) - kron(inverse(p), inverse(q))).max() <= 1e-8


def test_kron_associative_layout(rng):
    # integer entries keep every product exact, so only the layout is compared
    a, b, c = (rng.integers(-9, 10, size=sh).astype(float) for sh in [(2, 3), (3, 2), (2, 2)])
    np.testing.assert_array_equal(kron(kron(a, b), c), kron(a, kron(b, c)))


def test_norms_cases(rng):
    assert norms(np.eye(3)) == pytest.approx((np.sqrt(3), 1, 0, 1))
    assert norms(np.array([[0.0, 2.0], [2.0, 0.0]])) == pytest.approx((2 * np.sqrt(2), 2, 4, 2))
    a = symmetrize(rng.standard_normal((5, 5)))
    assert norms(a).spectral == pytest.approx(np.abs(sym_eigen(a)[0]).max())


@settings(max_examples=25, deadline=None)
@given(p=st.integers(1, 30), seed=st.integers(0, 2**32 - 1))
def test_sqrt_pd_property(p, seed):
    a = random_spd(np.random.default_rng(seed), p)
    r = sqrt_pd(a)
    assert np.abs(r @ r - a).max() <= 1e-9
