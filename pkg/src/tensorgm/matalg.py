"""Symmetric-matrix linear algebra used by the estimators."""
from collections import namedtuple
from functools import reduce

import numpy as np
import scipy.linalg

# smallest eigenvalue must exceed this fraction of the largest
PD_RTOL = 1e-10

MatrixNorms = namedtuple("MatrixNorms", "frobenius max_abs off_diag_l1 spectral")


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.T)


def check_pd(a):
    """Raise :class:`NotPositiveDefiniteError` unless ``a`` is numerically PD."""
    w = np.linalg.eigvalsh(symmetrize(a))
    if w[-1] <= 0 or w[0] <= PD_RTOL * w[-1]:
        raise NotPositiveDefiniteError(
            f"matrix is not positive definite (eigenvalues in [{w[0]:.3g}, {w[-1]:.3g}])")
    return w


def is_pd(a):
    try:
        check_pd(a)
    except NotPositiveDefiniteError:
        return False
    return True


def cholesky(a):
    """Lower-triangular ``L`` with ``L @ L.T == a``."""
    a = symmetrize(a)
    check_pd(a)
    return np.linalg.cholesky(a)


def inverse(a):
    a = symmetrize(a)
    check_pd(a)
    c = scipy.linalg.cho_factor(a, lower=True)
    return symmetrize(scipy.linalg.cho_solve(c, np.eye(a.shape[0])))


def logdet(a):
    """log-determinant of a PD matrix via its Cholesky factor."""
    return 2.0 * float(np.sum(np.log(np.diag(cholesky(a)))))


def sym_eigen(a):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    return np.linalg.eigh(symmetrize(a))


def sqrt_pd(a):
    """Symmetric positive-definite square root."""
    a = symmetrize(a)
    check_pd(a)
    w, v = np.linalg.eigh(a)
    return symmetrize((v * np.sqrt(w)) @ v.T)


def kron(*mats):
    """Kronecker product ``mats[0] (x) mats[1] (x) ...``."""
    if not mats:
        raise ValueError("kron needs at least one matrix")
    return reduce(np.kron, (np.asarray(m, dtype=float) for m in mats))


def norms(a):
    a = np.asarray(a, dtype=float)
    off = np.abs(a).sum() - np.abs(np.diag(a)).sum() if a.shape[0] == a.shape[1] else np.abs(a).sum()
    return MatrixNorms(
        frobenius=float(np.linalg.norm(a, "fro")),
        max_abs=float(np.abs(a).max()),
        off_diag_l1=float(off),
        spectral=float(np.linalg.norm(a, 2)),
    )


def off_diag_l1(a):
    a = np.asarray(a, dtype=float)
    return float(np.abs(a).sum() - np.abs(np.diag(a)).sum())


def max_norm(a):
    return float(np.abs(np.asarray(a, dtype=float)).max())
