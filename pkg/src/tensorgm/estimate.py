"""Alternating (Tlasso) estimation of per-mode precision matrices.

Also holds the two baselines used in the simulations: iterative penalized
MLE run to convergence, and the graphical lasso applied directly to
vectorized samples.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import glasso
from .matalg import check_pd, sqrt_pd, symmetrize
from .tensor import as_batch, batch_multi_mode_product

DIRECT_MAX_DIM = 1500


@dataclass
class PrecisionSet:
    """Per-mode precision matrices ``(Omega_1, ..., Omega_K)``."""

    mats: list
    normalized: bool = True
    converged: bool = True
    iterations: int = 0
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        self.mats = [symmetrize(m) for m in self.mats]

    def __len__(self):
        return len(self.mats)

    def __getitem__(self, k):
        return self.mats[k]

    def __iter__(self):
        return iter(self.mats)

    @property
    def dims(self):
        return tuple(m.shape[0] for m in self.mats)


@dataclass
class TlassoConfig:
    iterations: int = 1
    C: float = 20.0
    init: object = "identity"
    seed: int = 0
    max_sweeps: int = 200
    tol: float = 1e-6
    lambdas: tuple = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.C < 0:
            raise ValueError("C must be nonnegative")


def tuning_lambda(k, n, dims, C=20.0):
    """``C * sqrt(log m_k / (n m m_k))`` for mode ``k``."""
    mk = dims[k]
    if mk < 2:
        raise ValueError(f"mode {k} has dimension {mk}; the penalty rate needs m_k >= 2")
    if n < 1:
        raise ValueError("n must be positive")
    m = math.prod(dims)
    return C * math.sqrt(math.log(mk) / (n * m * mk))


def mode_covariance(samples, omegas, k, roots=None):
    """Sample covariance of mode ``k`` after whitening every other mode.

    ``S_k = m_k / (n m) * sum_i V_i V_i^T`` with ``V_i`` the mode-k unfolding
    of ``T_i x {Omega_1^{1/2}, ..., I, ..., Omega_K^{1/2}}``. ``roots`` may
    carry precomputed square roots (entry ``k`` is ignored).
    """
    x = as_batch(samples)
    n, dims = x.shape[0], x.shape[1:]
    if len(omegas) != len(dims):
        raise ValueError(f"need {len(dims)} precision matrices, got {len(omegas)}")
    if roots is None:
        roots = [None if j == k else sqrt_pd(o) for j, o in enumerate(omegas)]
    y = batch_multi_mode_product(x, roots, skip=k)
    v = np.moveaxis(y, k + 1, 1).reshape(n, dims[k], -1)
    m = math.prod(dims)
    s = np.einsum("nia,nja->ij", v, v) * (dims[k] / (n * m))
    return symmetrize(s)


def random_pd(dim, rng):
    a = rng.uniform(-1.0, 1.0, size=(dim, dim))
    a = symmetrize(a)
    lo = np.linalg.eigvalsh(a)[0]
    a += (abs(lo) + 1.0) * np.eye(dim)
    return a / np.linalg.norm(a)


def _initial(init, dims, seed):
    if isinstance(init, str):
        if init == "identity":
            return [np.eye(d) for d in dims]
        if init == "random_pd":
            rng = np.random.default_rng(seed)
            return [random_pd(d, rng) for d in dims]
        raise ValueError(f"unknown init {init!r}")
    mats = list(init.mats if isinstance(init, PrecisionSet) else init)
    if tuple(m.shape[0] for m in mats) != tuple(dims):
        raise ValueError("initial precision matrices do not match the data dims")
    for m in mats:
        check_pd(m)
    return [symmetrize(m) for m in mats]


def _update(x, omegas, roots, k, lam, cfg, warm=None):
    s = mode_covariance(x, omegas, k, roots=roots)
    res = glasso.solve(s, lam, max_sweeps=cfg.max_sweeps, tol=cfg.tol, warm_start=warm)
    om = res.omega / np.linalg.norm(res.omega)
    return om, res


def _lambdas(cfg, n, dims):
    if cfg.lambdas is not None:
        if len(cfg.lambdas) != len(dims):
            raise ValueError("one lambda per mode required")
        return list(cfg.lambdas)
    return [tuning_lambda(k, n, dims, cfg.C) for k in range(len(dims))]


def fit(samples, cfg=None, **kw):
    """Tlasso: ``cfg.iterations`` sweeps of per-mode glasso updates.

    Each mode is re-estimated from the freshest estimates of all other modes
    and rescaled to unit Frobenius norm right after its solve.
    """
    cfg = cfg or TlassoConfig(**kw)
    x = as_batch(samples)
    n, dims = x.shape[0], x.shape[1:]
    lams = _lambdas(cfg, n, dims)
    omegas = _initial(cfg.init, dims, cfg.seed)
    roots = [sqrt_pd(o) for o in omegas]
    diag = []
    for t in range(1, cfg.iterations + 1):
        for k in range(len(dims)):
            omegas[k], res = _update(x, omegas, roots, k, lams[k], cfg)
            roots[k] = sqrt_pd(omegas[k])
            diag.append({"iteration": t, "mode": k, "lam": lams[k],
                         "sweeps": res.sweeps, "converged": res.converged})
    return PrecisionSet(omegas, True, all(d["converged"] for d in diag), cfg.iterations, diag)


def fit_pmle(samples, cfg=None, max_iter=100, stop=1e-3, **kw):
    """Iterative penalized MLE: same updates as :func:`fit`, run until the
    mean per-mode Frobenius change drops to ``stop`` (or ``max_iter``)."""
    cfg = cfg or TlassoConfig(**kw)
    x = as_batch(samples)
    n, dims = x.shape[0], x.shape[1:]
    lams = _lambdas(cfg, n, dims)
    omegas = _initial(cfg.init, dims, cfg.seed)
    roots = [sqrt_pd(o) for o in omegas]
    K = len(dims)
    diag = []
    converged = False
    for t in range(1, max_iter + 1):
        prev = [o.copy() for o in omegas]
        for k in range(K):
            omegas[k], res = _update(x, omegas, roots, k, lams[k], cfg)
            roots[k] = sqrt_pd(omegas[k])
        change = sum(np.linalg.norm(a - b) for a, b in zip(omegas, prev)) / K
        diag.append({"iteration": t, "change": change})
        if change <= stop:
            converged = True
            break
    return PrecisionSet(omegas, True, converged, t, diag)


def vec_covariance(samples):
    """``(1/n) sum_i vec(T_i) vec(T_i)^T``."""
    x = as_batch(samples)
    n = x.shape[0]
    flat = np.stack([s.ravel(order="F") for s in x])
    return symmetrize(flat.T @ flat / n)


def fit_direct_glasso(samples, lam, *, max_dim=DIRECT_MAX_DIM, tol=1e-6, max_sweeps=200):
    """Graphical lasso on the vectorized samples (an ``m x m`` estimate).

    The result estimates ``Omega_K (x) ... (x) Omega_1`` and is not rescaled.
    """
    x = as_batch(samples)
    m = math.prod(x.shape[1:])
    if m > max_dim:
        raise ValueError(f"vectorized dimension {m} exceeds the dense limit {max_dim}")
    return glasso.solve(vec_covariance(x), lam, tol=tol, max_sweeps=max_sweeps).omega
