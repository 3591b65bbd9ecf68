"""Estimation-error and support-recovery metrics."""
import math
from dataclasses import dataclass

import numpy as np

from .matalg import kron

# zero test for matrices that come out of an inverse rather than a sparse solver
INVERSE_ZERO_RTOL = 1e-8


@dataclass
class EvalResult:
    kron_frob_err: float = float("nan")
    avg_frob_err: float = float("nan")
    avg_max_err: float = float("nan")
    tpr: float = float("nan")
    tnr: float = float("nan")
    fdp: float = float("nan")
    power: float = float("nan")


def _check_dims(est, truth):
    if len(est) != len(truth):
        raise ValueError("different number of modes")
    for a, b in zip(est, truth):
        if np.shape(a) != np.shape(b):
            raise ValueError(f"shape mismatch {np.shape(a)} vs {np.shape(b)}")


def kron_error(est, truth):
    """``||(x)_k est_k - (x)_k truth_k||_F / m`` without forming the product.

    Uses ``||A - B||^2 = ||A||^2 + ||B||^2 - 2 <A, B>`` together with the
    factorization of Frobenius norms and inner products over Kronecker
    factors.
    """
    _check_dims(est, truth)
    a2 = math.prod(float(np.sum(a * a)) for a in est)
    b2 = math.prod(float(np.sum(b * b)) for b in truth)
    ab = math.prod(float(np.sum(a * b)) for a, b in zip(est, truth))
    m = math.prod(np.shape(a)[0] for a in est)
    return math.sqrt(max(a2 + b2 - 2.0 * ab, 0.0)) / m


def kron_error_dense(est_full, truth):
    """Kronecker error when the estimate is a full ``m x m`` matrix.

    The product is taken in vectorization order, ``truth_K (x) ... (x) truth_1``.
    """
    t = kron(*reversed(list(truth)))
    return float(np.linalg.norm(np.asarray(est_full) - t)) / t.shape[0]


def mode_errors(est, truth):
    """Mean over modes of the Frobenius and the max-norm error."""
    _check_dims(est, truth)
    K = len(est)
    frob = sum(float(np.linalg.norm(np.asarray(a) - b)) for a, b in zip(est, truth)) / K
    mx = sum(float(np.abs(np.asarray(a) - b).max()) for a, b in zip(est, truth)) / K
    return frob, mx


def support(mat, rtol=0.0):
    """Nonzero pattern; ``rtol > 0`` treats entries below ``rtol * max|mat|`` as zero."""
    a = np.abs(np.asarray(mat, dtype=float))
    if rtol:
        return a >= rtol * a.max()
    return a != 0


def selection_rates(est_supports, truth_supports):
    """TPR and TNR of the Kronecker-product support.

    Both arguments are lists of per-mode boolean matrices. A Kronecker entry
    is nonzero iff every factor entry is, so counts factor over modes and
    nothing of size ``m x m`` is built.
    """
    _check_dims(est_supports, truth_supports)
    e = [np.asarray(s, dtype=bool) for s in est_supports]
    t = [np.asarray(s, dtype=bool) for s in truth_supports]
    total = math.prod(s.size for s in t)
    n_true = math.prod(int(s.sum()) for s in t)
    n_est = math.prod(int(s.sum()) for s in e)
    n_both = math.prod(int((a & b).sum()) for a, b in zip(e, t))
    n_zero = total - n_true
    tpr = n_both / n_true if n_true else float("nan")
    tnr = (total - (n_est + n_true - n_both)) / n_zero if n_zero else float("nan")
    return tpr, tnr


def selection_rates_dense(est_support, truth_supports):
    """TPR/TNR for a full ``m x m`` estimated support (direct baseline)."""
    t = np.ones((1, 1), dtype=bool)
    for s in truth_supports:
        t = np.kron(np.asarray(s, dtype=bool), t)
    e = np.asarray(est_support, dtype=bool)
    if e.shape != t.shape:
        raise ValueError("shape mismatch")
    n_true = int(t.sum())
    n_zero = t.size - n_true
    tpr = int((e & t).sum()) / n_true if n_true else float("nan")
    tnr = int((~e & ~t).sum()) / n_zero if n_zero else float("nan")
    return tpr, tnr


def fdp_power(rejected, truth_support):
    """FDP and power over the off-diagonal pairs ``i < j`` of one mode."""
    rej = np.asarray(rejected, dtype=bool)
    tru = np.asarray(truth_support, dtype=bool)
    iu = np.triu_indices(rej.shape[0], 1)
    r, s = rej[iu], tru[iu]
    fdp = int((r & ~s).sum()) / max(int(r.sum()), 1)
    power = int((r & s).sum()) / int(s.sum()) if s.any() else float("nan")
    return fdp, power
