"""Slow, independent reference computations used by the tests.

Nothing here calls into the package except for building inputs.
"""
import itertools
import math

import numpy as np
from scipy.optimize import minimize
from scipy.special import ndtr


def vec_loops(t):
    """vec(T) from the linear-index formula, first index fastest."""
    dims = t.shape
    out = np.empty(t.size)
    for idx in itertools.product(*(range(d) for d in dims)):
        lin, stride = 0, 1
        for i, d in zip(idx, dims):
            lin += i * stride
            stride *= d
        out[lin] = t[idx]
    return out


def matricize_loops(t, k):
    dims = t.shape
    rest = [l for l in range(len(dims)) if l != k]
    out = np.empty((dims[k], t.size // dims[k]))
    for idx in itertools.product(*(range(d) for d in dims)):
        col, stride = 0, 1
        for l in rest:
            col += idx[l] * stride
            stride *= dims[l]
        out[idx[k], col] = t[idx]
    return out


def mode_product_loops(t, a, k):
    shape = list(t.shape)
    shape[k] = a.shape[0]
    out = np.zeros(shape)
    for idx in itertools.product(*(range(d) for d in shape)):
        acc = 0.0
        for h in range(t.shape[k]):
            src = list(idx)
            src[k] = h
            acc += t[tuple(src)] * a[idx[k], h]
        out[idx] = acc
    return out


def kron_loops(a, b):
    p, q = a.shape
    r, s = b.shape
    out = np.empty((p * r, q * s))
    for i in range(p):
        for j in range(q):
            for u in range(r):
                for w in range(s):
                    out[r * i + u, s * j + w] = a[i, j] * b[u, w]
    return out


def logdet_chol(a):
    """log det via a hand-written Cholesky factorization."""
    n = a.shape[0]
    L = np.zeros_like(a, dtype=float)
    for i in range(n):
        for j in range(i + 1):
            acc = a[i, j] - sum(L[i, k] * L[j, k] for k in range(j))
            if i == j:
                if acc <= 0:
                    raise ValueError("not PD")
                L[i, i] = math.sqrt(acc)
            else:
                L[i, j] = acc / L[j, j]
    return 2.0 * sum(math.log(L[i, i]) for i in range(n))


def glasso_objective(s, om, lam):
    off = np.abs(om).sum() - np.abs(np.diag(om)).sum()
    return float(np.sum(s * om)) - logdet_chol(om) + lam * off


# -- glasso 2x2: profile out the diagonal, golden-section on the off-diagonal

def _profile_2x2(s, lam, x):
    s11, s22, s12 = s[0, 0], s[1, 1], s[0, 1]
    d = (1.0 + math.sqrt(1.0 + 4.0 * s11 * s22 * x * x)) / (2.0 * s11 * s22)
    return 2.0 * s11 * s22 * d + 2.0 * s12 * x - math.log(d) + 2.0 * lam * abs(x), d


def glasso_2x2(s, lam, tol=1e-13):
    """Minimizer of the 2x2 objective.

    For a fixed off-diagonal ``x`` the optimal diagonal solves
    ``b = s11 D``, ``a = s22 D`` with ``D = ab - x^2``; the remaining convex
    function of ``x`` is minimized by golden-section search.
    """
    s = np.asarray(s, dtype=float)
    bound = 10.0 * np.abs(np.linalg.inv(s)).max() + 10.0
    lo, hi = -bound, bound
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = hi - g * (hi - lo), lo + g * (hi - lo)
    fc, fd = _profile_2x2(s, lam, c)[0], _profile_2x2(s, lam, d)[0]
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - g * (hi - lo)
            fc = _profile_2x2(s, lam, c)[0]
        else:
            lo, c, fc = c, d, fd
            d = lo + g * (hi - lo)
            fd = _profile_2x2(s, lam, d)[0]
    x = 0.5 * (lo + hi)
    # the kink at zero is where lasso solutions often sit
    if _profile_2x2(s, lam, 0.0)[0] <= _profile_2x2(s, lam, x)[0]:
        x = 0.0
    _, dd = _profile_2x2(s, lam, x)
    return np.array([[s[1, 1] * dd, x], [x, s[0, 0] * dd]])


# -- glasso for small p: the dual problem -----------------------------------

def glasso_dual(s, lam):
    """Solve ``max log det W`` s.t. ``W_ii = S_ii``, ``|W_ij - S_ij| <= lam``
    by L-BFGS-B over the off-diagonal box and return ``W^{-1}``."""
    s = np.asarray(s, dtype=float)
    p = s.shape[0]
    iu = np.triu_indices(p, 1)
    off = np.abs(s[iu]).max()
    t = 0.0 if off == 0 else min(1.0, lam / off)

    def build(z):
        w = s.copy()
        w[iu] = z
        w[iu[1], iu[0]] = z
        return w

    def fun(z):
        w = build(z)
        sign, ld = np.linalg.slogdet(w)
        if sign <= 0:
            return 1e300, np.zeros_like(z)
        wi = np.linalg.inv(w)
        return -ld, -2.0 * wi[iu]

    z0 = s[iu] * (1.0 - t)
    bounds = [(v - lam, v + lam) for v in s[iu]]
    res = minimize(fun, z0, jac=True, method="L-BFGS-B", bounds=bounds,
                   options={"ftol": 1e-16, "gtol": 1e-13, "maxiter": 10000})
    return np.linalg.inv(build(res.x))


# -- FDR threshold: dense grid scan -----------------------------------------

def threshold_grid(stats, v, step=1e-4, top=6.0):
    """Smallest grid point in (0, top] meeting the bound, or None."""
    stats = np.sort(np.abs(np.asarray(stats, dtype=float)))
    w = stats.size
    grid = np.arange(1, int(round(top / step)) + 1) * step
    r = w - np.searchsorted(stats, grid, side="left")
    crit = 2.0 * ndtr(-grid) * w / np.maximum(r, 1)
    ok = np.nonzero(crit <= v)[0]
    return float(grid[ok[0]]) if ok.size else None


# -- inference loops ----------------------------------------------------------

def rho_loops(x, omega):
    """Residual covariance for mode 0 by explicit loops over (l, i, j, rest)."""
    n = x.shape[0]
    m1 = x.shape[1]
    flat = x.reshape(n, m1, -1)
    r = flat.shape[2]
    m = m1 * r
    mean = flat.mean(axis=0)
    xi = np.zeros_like(flat)
    for l in range(n):
        for i in range(m1):
            others = [h for h in range(m1) if h != i]
            theta = [-omega[i, h] / omega[i, i] for h in others]
            for c in range(r):
                val = flat[l, i, c] - mean[i, c]
                for h, th in zip(others, theta):
                    val -= (flat[l, h, c] - mean[h, c]) * th
                xi[l, i, c] = val
    rho = np.zeros((m1, m1))
    for i in range(m1):
        for j in range(m1):
            acc = 0.0
            for l in range(n):
                for c in range(r):
                    acc += xi[l, i, c] * xi[l, j, c]
            rho[i, j] = acc * m1 / ((n - 1) * m)
    return rho


def tau_scalar(rho, omega, varcorr, n, m, i, j):
    """Standardized statistic for pair i < j, spelled out with named coefficients."""
    m1 = rho.shape[0]
    coef_i_in_j = -omega[j, i] / omega[j, j]   # variable i in the regression of j
    coef_j_in_i = -omega[i, j] / omega[i, i]   # variable j in the regression of i
    mu = rho[i, i] * coef_i_in_j + rho[j, j] * coef_j_in_i
    tau = (rho[i, j] + mu) / math.sqrt(varcorr)
    return tau, math.sqrt((n - 1) * m / (m1 * rho[i, i] * rho[j, j])) * tau


def knn_bruteforce(points, k, rule):
    n = len(points)
    near = []
    for i in range(n):
        ds = []
        for j in range(n):
            if j != i:
                ds.append((math.dist(points[i], points[j]), j))
        ds.sort()
        near.append({j for _, j in ds[:k]})
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = j in near[i], i in near[j]
            adj[i, j] = (a and b) if rule == "mutual" else (a or b)
    return adj


def random_spd(rng, p, shift=0.5):
    a = rng.standard_normal((p, p))
    return a @ a.T / p + shift * np.eye(p)
