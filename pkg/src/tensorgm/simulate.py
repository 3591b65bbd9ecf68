"""Ground-truth graphs and tensor-normal sampling.

Random streams are numpy ``Generator`` objects backed by the counter-based
Philox-4x64 bit generator, keyed through ``SeedSequence(seed,
spawn_key=(stream,))``. The same ``(seed, stream)`` pair always yields the
same draws, and distinct streams are statistically independent, so replicate
``r`` of an experiment can be produced on any worker.
"""
from dataclasses import dataclass

import numpy as np

from .estimate import PrecisionSet
from .matalg import inverse, kron, sqrt_pd, symmetrize
from .tensor import batch_multi_mode_product

# |Omega_ij| below this fraction of max|Omega| counts as zero in a support
SUPPORT_RTOL = 1e-8
NN_SHIFT = 0.2
# "mutual": i ~ j when each is among the other's k nearest points;
# "union": when either is
NN_RULES = ("mutual", "union")
GRAPHS = ("triangle", "nn")


def make_rng(seed, stream=0):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def support_of(omega, rtol=SUPPORT_RTOL):
    omega = np.asarray(omega, dtype=float)
    s = np.abs(omega) >= rtol * np.abs(omega).max()
    np.fill_diagonal(s, True)
    return s


@dataclass
class GroundTruth:
    kind: str
    omegas: PrecisionSet
    sigmas: list
    supports: list

    @property
    def dims(self):
        return self.omegas.dims

    @property
    def sparsity(self):
        """Number of nonzero off-diagonal entries of each true precision matrix."""
        return [int(s.sum()) - s.shape[0] for s in self.supports]

    def kron_sigma(self):
        """Covariance of ``vec(T)``: ``Sigma_K (x) ... (x) Sigma_1``."""
        return kron(*reversed(self.sigmas))

    def to_json(self):
        return {
            "kind": self.kind,
            "dims": list(self.dims),
            "supports": [np.argwhere(np.triu(s, 1)).tolist() for s in self.supports],
            "omegas": [o.tolist() for o in self.omegas],
            "sigmas": [s.tolist() for s in self.sigmas],
        }


def gen_triangle(dim, rng, increments=None):
    """Chain graph: ``Sigma_ij = exp(-|h_i - h_j| / 2)`` with Unif(0.5, 1) gaps."""
    if dim < 2:
        raise ValueError("triangle graph needs dim >= 2")
    if increments is None:
        increments = rng.uniform(0.5, 1.0, size=dim - 1)
    increments = np.asarray(increments, dtype=float)
    if increments.shape != (dim - 1,):
        raise ValueError("need dim - 1 increments")
    h = np.concatenate([[0.0], np.cumsum(increments)])
    sigma = np.exp(-np.abs(h[:, None] - h[None, :]) / 2.0)
    return sigma, inverse(sigma)


def nearest_neighbor_adjacency(points, k=4, rule="mutual"):
    """Symmetric adjacency built from each point's ``k`` nearest others.

    With ``rule="mutual"`` a pair is linked when each point is among the
    other's ``k`` nearest; with ``rule="union"`` when either is. Distance ties
    go to the lower index.
    """
    if rule not in NN_RULES:
        raise ValueError(f"unknown neighbour rule {rule!r}; choose from {NN_RULES}")
    pts = np.asarray(points, dtype=float)
    d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
    np.fill_diagonal(d, np.inf)
    adj = np.zeros(d.shape, dtype=bool)
    for i in range(len(pts)):
        nbrs = np.argsort(d[i], kind="stable")[:k]
        adj[i, nbrs] = True
    return adj & adj.T if rule == "mutual" else adj | adj.T


def gen_nearest_neighbor(dim, rng, points=None, rule="mutual"):
    """Four-nearest-neighbour graph on random points of the unit square.

    Edge weights are drawn from Unif([-1, -0.5] U [0.5, 1]); the diagonal is
    then lifted to ``|lambda_min| + 0.2`` so the smallest eigenvalue is 0.2.
    """
    if dim < 5:
        raise ValueError("nearest-neighbour graph needs dim >= 5")
    if points is None:
        points = rng.uniform(size=(dim, 2))
    adj = nearest_neighbor_adjacency(points, rule=rule)
    omega = np.zeros((dim, dim))
    iu, ju = np.nonzero(np.triu(adj, 1))
    mag = rng.uniform(0.5, 1.0, size=iu.size)
    sign = np.where(rng.uniform(size=iu.size) < 0.5, -1.0, 1.0)
    omega[iu, ju] = mag * sign
    omega[ju, iu] = mag * sign
    lo = np.linalg.eigvalsh(omega)[0]
    omega = omega + (abs(lo) + NN_SHIFT) * np.eye(dim)
    return inverse(omega), omega


def make_truth(kind, dims, rng, nn_rule="mutual"):
    """Per-mode truths rescaled so every ``Omega*_k`` has unit Frobenius norm."""
    if kind not in GRAPHS:
        raise ValueError(f"unknown graph {kind!r}; choose from {GRAPHS}")
    omegas, sigmas, supports = [], [], []
    for d in dims:
        if kind == "triangle":
            _, om = gen_triangle(int(d), rng)
        else:
            _, om = gen_nearest_neighbor(int(d), rng, rule=nn_rule)
        supports.append(support_of(om))
        om = symmetrize(om / np.linalg.norm(om))
        omegas.append(om)
        sigmas.append(inverse(om))
    return GroundTruth(kind, PrecisionSet(omegas), sigmas, supports)


def sample_tensor_normal(sigmas, n, rng):
    """Draw ``n`` tensors with ``vec(T) ~ N(0, Sigma_K (x) ... (x) Sigma_1)``.

    ``sigmas`` is a list of per-mode covariances or a :class:`GroundTruth`.
    Returns an array of shape ``(n, m_1, ..., m_K)``.
    """
    if isinstance(sigmas, GroundTruth):
        sigmas = sigmas.sigmas
    if n < 1:
        raise ValueError("n must be positive")
    dims = tuple(s.shape[0] for s in sigmas)
    z = rng.standard_normal((n, *dims))
    return batch_multi_mode_product(z, [sqrt_pd(s) for s in sigmas])
