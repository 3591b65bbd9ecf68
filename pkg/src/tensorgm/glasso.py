"""Graphical lasso with an unpenalized diagonal.

Minimizes ``tr(S @ Omega) - log det(Omega) + lam * ||Omega||_{1,off}`` over
symmetric positive-definite ``Omega`` by block coordinate descent on the
covariance estimate ``W`` (one row/column at a time), each block being a
lasso solved by cyclic coordinate descent.
"""
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .matalg import NotPositiveDefiniteError, check_pd, inverse, is_pd, logdet, off_diag_l1, symmetrize


@dataclass
class GlassoConfig:
    lam: float = 0.0
    max_sweeps: int = 200
    tol: float = 1e-6
    warm_start: np.ndarray = None

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")


@dataclass
class GlassoResult:
    omega: np.ndarray
    w: np.ndarray
    sweeps: int
    converged: bool
    objective: float
    trace: list = field(default_factory=list)


def objective(s, omega, lam):
    """``tr(s @ omega) - log det(omega) + lam * ||omega||_{1,off}``."""
    s = np.asarray(s, dtype=float)
    omega = symmetrize(omega)
    return float(np.sum(s * omega) - logdet(omega) + lam * off_diag_l1(omega))


@njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def _sweep(s, w, beta, lam, inner_tol, max_inner):
    """One pass over all columns. Returns the largest change in ``w``."""
    p = s.shape[0]
    grad = np.empty(p)
    max_dw = 0.0
    for j in range(p):
        # grad = W11 @ beta_j, kept current while coordinates move
        for a in range(p):
            acc = 0.0
            if a != j:
                for b in range(p):
                    if b != j and beta[b, j] != 0.0:
                        acc += w[a, b] * beta[b, j]
            grad[a] = acc
        for _ in range(max_inner):
            dmax = 0.0
            for a in range(p):
                if a == j:
                    continue
                old = beta[a, j]
                r = s[a, j] - (grad[a] - w[a, a] * old)
                new = _soft(r, lam) / w[a, a]
                if new != old:
                    delta = new - old
                    beta[a, j] = new
                    for b in range(p):
                        if b != j:
                            grad[b] += w[b, a] * delta
                    if abs(delta) > dmax:
                        dmax = abs(delta)
            if dmax < inner_tol:
                break
        for a in range(p):
            if a == j:
                continue
            d = abs(grad[a] - w[a, j])
            if d > max_dw:
                max_dw = d
            w[a, j] = grad[a]
            w[j, a] = grad[a]
    return max_dw


def _omega_from(w, beta):
    p = w.shape[0]
    omega = np.empty((p, p))
    for j in range(p):
        b = beta[:, j].copy()
        b[j] = 0.0
        d = 1.0 / (w[j, j] - w[:, j] @ b)
        omega[:, j] = -b * d
        omega[j, j] = d
    both_zero = (omega == 0) & (omega.T == 0)
    omega = symmetrize(omega)
    omega[both_zero] = 0.0
    return omega


def _initial_w(s, lam, warm_start):
    p = s.shape[0]
    beta = np.zeros((p, p))
    if warm_start is not None:
        omega0 = symmetrize(warm_start)
        if omega0.shape != s.shape:
            raise ValueError("warm start has the wrong shape")
        w = inverse(omega0)
        np.fill_diagonal(w, np.diag(s))
        if is_pd(w) and np.all(np.abs(w - s) <= lam * (1 + 1e-12)):
            beta = -omega0 / np.diag(omega0)[None, :]
            np.fill_diagonal(beta, 0.0)
            return w, beta
        beta = np.zeros((p, p))
    # shrink the off-diagonal of s just enough to stay inside the dual box;
    # any t > 0 makes w positive definite even when s is singular
    off = np.abs(s - np.diag(np.diag(s))).max()
    t = 0.0 if off == 0 else min(1.0, lam / off)
    w = s.copy()
    w -= t * (s - np.diag(np.diag(s)))
    return w, beta


def solve(s, lam=0.0, *, max_sweeps=200, tol=1e-6, warm_start=None, track=False):
    """Estimate a sparse precision matrix from the covariance ``s``.

    Parameters
    ----------
    s : (p, p) array
        Symmetric matrix with positive diagonal (a sample covariance).
    lam : float
        Off-diagonal l1 penalty. ``lam == 0`` returns ``inverse(s)``.
    max_sweeps, tol :
        Stop once a full sweep moves no entry of ``W`` by more than ``tol``
        and the optimality conditions hold to ``tol``.
    warm_start : (p, p) array, optional
        Initial precision matrix.
    track : bool
        Record the objective after every sweep in ``result.trace``.

    Returns
    -------
    GlassoResult
        ``converged`` is False when ``max_sweeps`` was hit; the last iterate is
        still returned.
    """
    GlassoConfig(lam, max_sweeps, tol)
    s = symmetrize(s)
    if np.any(np.diag(s) <= 0):
        raise ValueError("s must have a strictly positive diagonal")
    p = s.shape[0]
    if lam == 0 or p == 1:
        omega = inverse(s)
        if p == 1 and lam > 0:
            omega = np.array([[1.0 / s[0, 0]]])
        return GlassoResult(omega, s.copy(), 0, True, objective(s, omega, lam))

    w, beta = _initial_w(s, lam, warm_start)
    inner_tol = tol * 1e-2
    trace = []
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        dw = _sweep(s, w, beta, float(lam), inner_tol, 1000)
        if track:
            om = _omega_from(w, beta)
            trace.append(objective(s, om, lam) if is_pd(om) else np.inf)
        if dw < tol:
            om = _omega_from(w, beta)
            if is_pd(om) and kkt_violation(s, om, lam) <= tol:
                converged = True
                break
            inner_tol = max(inner_tol * 1e-2, 1e-15)
    omega = _omega_from(w, beta)
    try:
        check_pd(omega)
    except NotPositiveDefiniteError:
        raise NotPositiveDefiniteError("graphical lasso produced an indefinite estimate")
    return GlassoResult(omega, w, sweeps, converged, objective(s, omega, lam), trace)


def solve_config(s, cfg):
    """Run :func:`solve` with the settings held in a :class:`GlassoConfig`."""
    return solve(s, cfg.lam, max_sweeps=cfg.max_sweeps, tol=cfg.tol, warm_start=cfg.warm_start)


def kkt_violation(s, omega, lam):
    """Largest violation of the optimality conditions, with ``W = omega^-1``."""
    s = symmetrize(s)
    omega = symmetrize(omega)
    w = inverse(omega)
    g = w - s
    viol = np.abs(np.diag(g)).max()
    off = ~np.eye(s.shape[0], dtype=bool)
    nz = off & (omega != 0)
    z = off & (omega == 0)
    if nz.any():
        # stationarity: W_ij = S_ij + lam * sign(Omega_ij)
        viol = max(viol, np.abs(g[nz] - lam * np.sign(omega[nz])).max())
    if z.any():
        viol = max(viol, (np.abs(g[z]) - lam).clip(min=0).max())
    return float(viol)
