import math

import numpy as np
import pytest

from oracles import random_spd
from tensorgm.matalg import kron
from tensorgm.metrics import (
    fdp_power,
    kron_error,
    kron_error_dense,
    mode_errors,
    selection_rates,
    selection_rates_dense,
    support,
)


def unit(a):
    return a / np.linalg.norm(a)


def test_kron_error_zero_and_materialized(rng):
    a = [unit(random_spd(rng, d)) for d in (3, 4)]
    b = [unit(random_spd(rng, d)) for d in (3, 4)]
    assert kron_error(a, a) == pytest.approx(0, abs=1e-9)
    want = np.linalg.norm(kron(*a) - kron(*b)) / 12
    assert kron_error(a, b) == pytest.approx(want, rel=1e-10)


def test_kron_error_orthogonal_factors():
    a = [np.diag([1.0, 0.0]), np.eye(2) / math.sqrt(2)]
    b = [np.diag([0.0, 1.0]), np.eye(2) / math.sqrt(2)]
    assert kron_error(a, b) == pytest.approx(math.sqrt(2) / 4)


def test_kron_error_factorized_vs_dense(rng):
    for _ in range(10):
        dims = [int(d) for d in rng.integers(2, 5, size=3)]
        a = [rng.standard_normal((d, d)) for d in dims]
        b = [rng.standard_normal((d, d)) for d in dims]
        dense = kron(*reversed(a))
        assert abs(kron_error(a, b) - kron_error_dense(dense, b)) <= 1e-10


def test_kron_error_mismatch():
    with pytest.raises(ValueError):
        kron_error([np.eye(2)], [np.eye(3)])
    with pytest.raises(ValueError):
        mode_errors([np.eye(2)], [np.eye(2), np.eye(2)])


def test_mode_errors_cases(rng):
    a = [np.eye(3), np.eye(4)]
    assert mode_errors(a, a) == (0, 0)
    eps = 0.3
    b = [np.eye(3), np.eye(4)]
    b[1] = b[1].copy()
    b[1][0, 2] = b[1][2, 0] = eps
    frob, mx = mode_errors(b, a)
    assert frob == pytest.approx(math.sqrt(2) * eps / 2)
    assert mx == pytest.approx(eps / 2)
    c = [rng.standard_normal((3, 3)), rng.standard_normal((4, 4))]
    f_loop = sum(math.sqrt(sum((c[k][i, j] - a[k][i, j]) ** 2 for i in range(len(a[k])) for j in range(len(a[k]))))
                 for k in range(2)) / 2
    m_loop = sum(max(abs(c[k][i, j] - a[k][i, j]) for i in range(len(a[k])) for j in range(len(a[k])))
                 for k in range(2)) / 2
    assert mode_errors(c, a) == pytest.approx((f_loop, m_loop))


def rand_support(rng, m, p=0.4):
    s = rng.uniform(size=(m, m)) < p
    s |= s.T
    np.fill_diagonal(s, True)
    return s


def test_selection_rates_identity_and_bruteforce(rng):
    t = [rand_support(rng, 2) | np.array([[1, 1], [1, 1]], bool), np.eye(2, dtype=bool)]
    assert selection_rates(t, t) == (1.0, 1.0)
    for _ in range(20):
        t = [rand_support(rng, 2), rand_support(rng, 2)]
        e = [rand_support(rng, 2), rand_support(rng, 2)]
        big_t = np.kron(t[1], t[0])
        big_e = np.kron(e[1], e[0])
        n_true, n_zero = big_t.sum(), (~big_t).sum()
        want = ((big_e & big_t).sum() / n_true if n_true else np.nan,
                (~big_e & ~big_t).sum() / n_zero if n_zero else np.nan)
        np.testing.assert_allclose(selection_rates(e, t), want, equal_nan=True)
        np.testing.assert_allclose(selection_rates_dense(big_e, t), want, equal_nan=True)


def test_selection_rates_degenerate_truth():
    full = [np.ones((2, 2), bool)]
    assert math.isnan(selection_rates(full, full)[1])


def test_selection_rates_scale_invariant(rng):
    t = [rand_support(rng, 4), rand_support(rng, 3)]
    est = [random_spd(rng, 4) * rand_support(rng, 4), random_spd(rng, 3)]
    a = selection_rates([support(o) for o in est], t)
    b = selection_rates([support(-2.5 * est[0]), support(7 * est[1])], t)
    assert a == b


def test_support_threshold():
    a = np.array([[1.0, 1e-10], [1e-10, 1.0]])
    assert support(a).all()
    assert not support(a, rtol=1e-8)[0, 1]


def test_fdp_power_cases(rng):
    tru = rand_support(rng, 6) | np.eye(6, dtype=bool)
    tru[0, 1] = tru[1, 0] = True
    assert fdp_power(np.eye(6, dtype=bool), tru) == (0.0, 0.0)
    assert fdp_power(tru, tru) == (0.0, 1.0)
    for _ in range(20):
        rej = rand_support(rng, 6, 0.5)
        pairs = [(i, j) for i in range(6) for j in range(i + 1, 6)]
        r = {p for p in pairs if rej[p]}
        h1 = {p for p in pairs if tru[p]}
        fdp = len(r - h1) / max(len(r), 1)
        power = len(r & h1) / len(h1)
        assert fdp_power(rej, tru) == pytest.approx((fdp, power))
