"""Self-contained oracle checks run by ``tensorgm check``.

Each check compares a library routine against an independent, slower
computation on random inputs and returns ``(name, ok, detail)``.
"""
import itertools
import math

import numpy as np
from scipy.special import ndtr

from . import glasso
from .inference import fdr_threshold
from .matalg import inverse, kron
from .metrics import kron_error, kron_error_dense, selection_rates, selection_rates_dense
from .tensor import mode_product, multi_mode_product, vectorize


def check_vec_kron(rng, trials=100):
    worst = 0.0
    for _ in range(trials):
        dims = tuple(rng.integers(1, 5, size=rng.integers(1, 4)))
        t = rng.standard_normal(dims)
        mats = [rng.standard_normal((int(rng.integers(1, 5)), d)) for d in dims]
        lhs = vectorize(multi_mode_product(t, mats))
        rhs = kron(*reversed(mats)) @ vectorize(t)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return "vec/mode-product/Kronecker identity", worst <= 1e-12, f"max abs diff {worst:.2e}"


def check_mode_product_loops(rng, trials=20):
    worst = 0.0
    for _ in range(trials):
        dims = tuple(int(d) for d in rng.integers(1, 4, size=3))
        k = int(rng.integers(0, 3))
        t = rng.standard_normal(dims)
        a = rng.standard_normal((2, dims[k]))
        got = mode_product(t, a, k)
        want = np.zeros(got.shape)
        for idx in itertools.product(*(range(s) for s in got.shape)):
            acc = 0.0
            for h in range(dims[k]):
                src = list(idx)
                src[k] = h
                acc += a[idx[k], h] * t[tuple(src)]
            want[idx] = acc
        worst = max(worst, float(np.abs(got - want).max()))
    return "mode product vs index loops", worst <= 1e-12, f"max abs diff {worst:.2e}"


def check_glasso_kkt(rng, trials=10):
    worst = 0.0
    for _ in range(trials):
        p = int(rng.integers(2, 31))
        x = rng.standard_normal((int(rng.integers(p // 2 + 1, 3 * p)), p))
        s = x.T @ x / x.shape[0]
        lam = float(rng.uniform(0.05, 0.5)) * np.abs(s - np.diag(np.diag(s))).max()
        res = glasso.solve(s, lam)
        worst = max(worst, glasso.kkt_violation(s, res.omega, lam))
    return "glasso optimality conditions", worst <= 1e-6, f"worst violation {worst:.2e}"


def check_glasso_unpenalized(rng, trials=10):
    worst = 0.0
    for _ in range(trials):
        p = int(rng.integers(2, 8))
        x = rng.standard_normal((4 * p, p))
        s = x.T @ x / x.shape[0]
        worst = max(worst, float(np.abs(glasso.solve(s, 0.0).omega - inverse(s)).max()))
    return "glasso with lam=0 equals inverse", worst <= 1e-8, f"max abs diff {worst:.2e}"


def _grid_threshold(stats, v):
    w = stats.size
    upper = math.sqrt(2 * math.log(w)) if w > 1 else 3.0
    grid = np.unique(np.concatenate([stats, np.linspace(1e-9, upper, 4001)]))
    for t in grid:
        r = max(int((stats >= t).sum()), 1)
        if 2 * (1 - ndtr(t)) * w / r <= v:
            return t
    return None


def check_fdr_threshold(rng, trials=200):
    bad = 0
    for _ in range(trials):
        w = int(rng.integers(5, 60))
        stats = np.abs(rng.standard_normal(w))
        stats[: int(rng.integers(0, w // 2 + 1))] += rng.uniform(2, 6)
        v = float(rng.choice([0.05, 0.1, 0.2]))
        t = fdr_threshold(stats, v)
        g = _grid_threshold(stats, v)
        if g is None:
            same = not np.any(stats >= t)
        else:
            same = np.array_equal(stats >= t, stats >= g)
        bad += not same
    return "FDR threshold vs grid scan", bad == 0, f"{bad} mismatched rejection sets"


def check_kron_metrics(rng, trials=20):
    worst, bad = 0.0, 0
    for _ in range(trials):
        dims = [int(d) for d in rng.integers(2, 4, size=int(rng.integers(2, 4)))]
        est = [rng.standard_normal((d, d)) for d in dims]
        tru = [rng.standard_normal((d, d)) for d in dims]
        dense = kron(*reversed(est))
        worst = max(worst, abs(kron_error(est, tru) - kron_error_dense(dense, tru)))
        es = [rng.uniform(size=(d, d)) < 0.5 for d in dims]
        ts = [rng.uniform(size=(d, d)) < 0.5 for d in dims]
        for s in es + ts:
            s |= s.T
            np.fill_diagonal(s, True)
        dense_s = np.ones((1, 1), dtype=bool)
        for s in es:
            dense_s = np.kron(s, dense_s)
        a, b = selection_rates(es, ts), selection_rates_dense(dense_s, ts)
        bad += not np.allclose(a, b, equal_nan=True)
    return ("Kronecker metrics vs materialized products", worst <= 1e-10 and bad == 0,
            f"error diff {worst:.2e}, {bad} rate mismatches")


CHECKS = (
    check_vec_kron,
    check_mode_product_loops,
    check_glasso_kkt,
    check_glasso_unpenalized,
    check_fdr_threshold,
    check_kron_metrics,
)


def run_checks(seed=0):
    rng = np.random.default_rng(seed)
    return [chk(rng) for chk in CHECKS]
