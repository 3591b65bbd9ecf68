"""Entrywise tests on one mode's precision matrix and FDR-controlled support
recovery.

For the tested mode every fiber is regressed on the remaining coordinates of
the same fiber using the estimated precision matrix; the residual covariance,
bias-corrected and rescaled, gives an approximately standard normal statistic
for each off-diagonal entry under the null.
"""
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .estimate import mode_covariance
from .matalg import check_pd, symmetrize
from .tensor import as_batch


@dataclass
class RegressionFit:
    theta: np.ndarray      # (m-1, m); column i regresses variable i on the others
    residuals: np.ndarray  # same shape as the (mode-first) samples
    rho: np.ndarray        # (m, m) residual covariance


@dataclass
class InferenceReport:
    mode: int
    v: float
    tau: np.ndarray         # upper triangle used, NaN elsewhere
    tau_std: np.ndarray
    varcorr: float
    threshold: float
    rejected: np.ndarray    # symmetric boolean, diagonal True
    oracle: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.rejected.shape[0]

    def pairs(self):
        return list(zip(*np.triu_indices(self.dim, 1)))

    def flat_tau_std(self):
        return self.tau_std[np.triu_indices(self.dim, 1)]

    def discoveries(self):
        """Rejected off-diagonal entries, counted as ordered pairs."""
        return int(self.rejected.sum()) - self.dim

    def to_json(self):
        iu = np.triu_indices(self.dim, 1)
        rej = [[int(i), int(j)] for i, j in zip(*iu) if self.rejected[i, j]]
        return {
            "mode": self.mode,
            "v": self.v,
            "threshold": self.threshold,
            "varcorr": self.varcorr,
            "oracle": self.oracle,
            "tau_std": [float(t) for t in self.tau_std[iu]],
            "rejected": rej,
            **self.meta,
        }


def _mode_first(samples, mode):
    x = as_batch(samples)
    if not 0 <= mode < x.ndim - 1:
        raise ValueError(f"mode {mode} out of range")
    return np.moveaxis(x, mode + 1, 1)


def theta_matrix(omega):
    """Node-wise regression coefficients implied by a precision matrix.

    Column ``i`` is ``-Omega[i, -i] / Omega[i, i]``; in it, variable ``h``
    sits at row ``h`` when ``h < i`` and at row ``h - 1`` when ``h > i``.
    """
    omega = np.asarray(omega, dtype=float)
    m = omega.shape[0]
    theta = np.empty((m - 1, m))
    for i in range(m):
        theta[:, i] = -np.delete(omega[i], i) / omega[i, i]
    return theta


def regression_fit(samples, omega, mode=0):
    """Residuals of regressing each coordinate of a mode-``mode`` fiber on the
    rest of that fiber, and their covariance pooled over fibers and samples."""
    x = _mode_first(samples, mode)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    omega = symmetrize(omega)
    check_pd(omega)
    m1 = x.shape[1]
    m = math.prod(x.shape[1:])
    xc = x - x.mean(axis=0)
    flat = xc.reshape(n, m1, -1)
    # residual_i = xc_i - theta_i . xc_{-i} = sum_h (Omega_ih / Omega_ii) xc_h
    b = omega / np.diag(omega)[:, None]
    xi = np.einsum("ih,nhr->nir", b, flat)
    rho = np.einsum("nir,njr->ij", xi, xi) * (m1 / ((n - 1) * m))
    return RegressionFit(theta_matrix(omega), xi.reshape(xc.shape), symmetrize(rho))


def _varcorr_from(mats, m, m_mode):
    num = math.prod(float(np.sum(s * s)) for s in mats)
    tr = math.prod(float(np.trace(s)) for s in mats)
    if tr == 0:
        raise ValueError("degenerate covariance estimate (zero trace)")
    return m * num / (m_mode * tr * tr)


def variance_correction(samples, omegas, mode=0):
    """Frobenius/trace ratio of the non-tested modes' covariance estimates."""
    x = as_batch(samples)
    dims = x.shape[1:]
    if len(dims) == 1:
        return 1.0
    mats = [mode_covariance(x, list(omegas), j) for j in range(len(dims)) if j != mode]
    return _varcorr_from(mats, math.prod(dims), dims[mode])


def oracle_variance_correction(sigmas, mode=0):
    dims = [s.shape[0] for s in sigmas]
    if len(dims) == 1:
        return 1.0
    mats = [s for j, s in enumerate(sigmas) if j != mode]
    return _varcorr_from(mats, math.prod(dims), dims[mode])


def test_statistics(fit, varcorr, n, dims, mode=0):
    """Bias-corrected statistics ``tau`` and their standardized form.

    Only the strict upper triangle is filled; other entries are NaN.
    """
    rho, theta = fit.rho, fit.theta
    m1 = rho.shape[0]
    m = math.prod(dims)
    d = np.diag(rho)
    if np.any(d <= 0):
        raise ValueError("residual variances must be positive")
    if varcorr <= 0:
        raise ValueError("variance correction must be positive")
    i, j = np.triu_indices(m1, 1)
    # theta[i, j]: coefficient of i (< j) in the regression of j
    # theta[j - 1, i]: coefficient of j (> i) in the regression of i
    mu = d[i] * theta[i, j] + d[j] * theta[j - 1, i]
    tau = np.full((m1, m1), np.nan)
    tau_std = np.full((m1, m1), np.nan)
    tau[i, j] = (rho[i, j] + mu) / math.sqrt(varcorr)
    tau_std[i, j] = np.sqrt((n - 1) * m / (m1 * d[i] * d[j])) * tau[i, j]
    return tau, tau_std


# relative slack when comparing the criterion with v, for points where the
# bound holds with equality up to rounding
_CRIT_RTOL = 1e-12


def fdr_criterion(t, stats, w):
    """Estimated FDP bound ``2 (1 - Phi(t)) w / max(#{stats >= t}, 1)``."""
    r = int(np.count_nonzero(stats >= t))
    return 2.0 * ndtr(-t) * w / max(r, 1)


def fdr_threshold(tau_std, v):
    """``inf{t > 0 : 2 (1 - Phi(t)) w / max(#{|tau| >= t}, 1) <= v}``.

    ``w`` is the number of statistics. The rejection count ``R`` is constant
    between consecutive observed ``|tau|`` and the criterion decreases in
    ``t`` there, so the infimum is either an observed ``|tau|`` or a point
    ``Phi^{-1}(1 - v R / (2 w))`` where the bound holds with equality. Both
    families are scanned; ``R = 1`` always gives a feasible point.
    """
    if not 0 < v < 1:
        raise ValueError("v must lie in (0, 1)")
    stats = np.abs(np.asarray(tau_std, dtype=float).ravel())
    stats = stats[~np.isnan(stats)]
    w = stats.size
    if w == 0:
        raise ValueError("no statistics given")
    level = -ndtri(v * np.arange(1, w + 1) / (2.0 * w))
    cands = np.unique(np.concatenate([stats, level]))
    cands = cands[cands > 0]
    srt = np.sort(stats)
    r = w - np.searchsorted(srt, cands, side="left")
    crit = 2.0 * ndtr(-cands) * w / np.maximum(r, 1)
    ok = np.nonzero(crit <= v * (1 + _CRIT_RTOL))[0]
    return float(cands[ok[0]])


def recover_support(samples, omegas, mode=0, v=0.05, truth=None):
    """Test every off-diagonal entry of mode ``mode`` and threshold at level ``v``.

    With ``truth`` (a :class:`~tensorgm.simulate.GroundTruth`) the regression
    coefficients and the variance correction use the true matrices, while the
    residual covariance still comes from the data.
    """
    x = as_batch(samples)
    n, dims = x.shape[0], x.shape[1:]
    if truth is not None:
        fit = regression_fit(x, truth.omegas[mode], mode)
        varcorr = oracle_variance_correction(truth.sigmas, mode)
    else:
        fit = regression_fit(x, omegas[mode], mode)
        varcorr = variance_correction(x, omegas, mode)
    tau, tau_std = test_statistics(fit, varcorr, n, dims, mode)
    thr = fdr_threshold(tau_std[np.triu_indices(dims[mode], 1)], v)
    upper = np.nan_to_num(np.abs(tau_std), nan=-1.0) >= thr
    rejected = upper | upper.T
    np.fill_diagonal(rejected, True)
    meta = {"oracle_parts": ["theta", "varcorr"]} if truth is not None else {}
    return InferenceReport(mode, v, tau, tau_std, varcorr, thr, rejected, truth is not None, meta)


def false_discoveries(report, truth_support):
    """False discoveries of a report against a true support, as ordered pairs."""
    off = ~np.eye(report.dim, dtype=bool)
    return int(np.count_nonzero(report.rejected & ~truth_support & off))


def kron_fdp(reports, v, truth_supports=None):
    """Kronecker-level FDP estimate for three modes, plus the realized value.

    ``d_k`` (and ``f_k``) count rejected (false) off-diagonal entries of mode
    ``k`` as ordered pairs. Returns a dict with ``limit`` (the estimate built
    from ``f_k ~ v d_k``), the counts, and, when supports are given,
    ``fdp`` and ``power`` of the implied Kronecker support.
    """
    if len(reports) != 3:
        raise ValueError("the Kronecker FDP formula is stated for three modes")
    m1, m2, m3 = (r.dim for r in reports)
    d1, d2, d3 = (r.discoveries() for r in reports)
    alpha = (d1 + m1) * (d2 + m2) - m1 * m2
    denom = max((d1 + m1) * (d2 + m2) * (d3 + m3) - m1 * m2 * m3, 1)
    a0p = v * d1 * (m2 + 2 * d2) + (m1 - v * d1) * v * d2
    limit = (a0p * (m3 + d3) + (alpha - a0p + m1 * m2) * v * d3) / denom
    out = {"limit": limit, "d": [d1, d2, d3]}
    if truth_supports is not None:
        f1, f2, f3 = (false_discoveries(r, s) for r, s in zip(reports, truth_supports))
        a0 = f1 * (m2 + d2) + (d1 - f1 + m1) * f2
        out["f"] = [f1, f2, f3]
        out["fdp"] = (a0 * (m3 + d3) + (alpha - a0 + m1 * m2) * f3) / denom
        true_nz = math.prod(int(s.sum()) for s in truth_supports) - m1 * m2 * m3
        hit = math.prod(int((r.rejected & s).sum()) for r, s in zip(reports, truth_supports))
        out["power"] = (hit - m1 * m2 * m3) / true_nz if true_nz else float("nan")
    return out
