"""Dense K-way tensors: vectorization, mode-k unfolding and mode-k products.

A tensor is a plain :class:`numpy.ndarray`; its ``shape`` is the dimension
vector ``(m_1, ..., m_K)``. Linear layouts follow the Kolda-Bader
convention, i.e. the *first* index varies fastest. Modes are 0-based.

A batch of ``n`` samples is an array of shape ``(n, m_1, ..., m_K)``.
"""
import struct
from pathlib import Path

import numpy as np

_MAGIC = b"TGMT"


def _check_mode(t, k):
    if not 0 <= k < t.ndim:
        raise ValueError(f"mode {k} out of range for a {t.ndim}-way tensor")


def vectorize(t):
    """Stack the entries of ``t`` with the first index fastest."""
    return np.asarray(t, dtype=float).ravel(order="F")


def unvectorize(v, dims):
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=float)
    if v.size != int(np.prod(dims)):
        raise ValueError(f"vector of length {v.size} cannot fill dims {tuple(dims)}")
    return v.reshape(tuple(dims), order="F")


def matricize(t, k):
    """Mode-k unfolding, shape ``(m_k, m / m_k)``.

    Entry ``(i_1, ..., i_K)`` goes to row ``i_k``; the remaining indices are
    laid out along the columns with the lowest remaining mode fastest.
    """
    t = np.asarray(t, dtype=float)
    _check_mode(t, k)
    return np.reshape(np.moveaxis(t, k, 0), (t.shape[k], -1), order="F")


def fold(mat, k, dims):
    """Inverse of :func:`matricize`."""
    dims = tuple(int(d) for d in dims)
    if not 0 <= k < len(dims):
        raise ValueError(f"mode {k} out of range for a {len(dims)}-way tensor")
    front = (dims[k],) + dims[:k] + dims[k + 1:]
    t = np.reshape(np.asarray(mat, dtype=float), front, order="F")
    return np.moveaxis(t, 0, k)


def mode_product(t, a, k):
    """k-mode product ``t x_k a`` with ``a`` of shape ``(J, m_k)``."""
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    _check_mode(t, k)
    if a.ndim != 2 or a.shape[1] != t.shape[k]:
        raise ValueError(
            f"matrix of shape {a.shape} does not act on mode {k} of size {t.shape[k]}")
    return np.moveaxis(np.tensordot(a, t, axes=(1, k)), 0, k)


def multi_mode_product(t, mats, skip=None):
    """``t x {A_1, ..., A_K}``; mode ``skip`` (if given) is left untouched.

    ``mats[skip]`` may be ``None``.
    """
    t = np.asarray(t, dtype=float)
    if len(mats) != t.ndim:
        raise ValueError(f"need {t.ndim} matrices, got {len(mats)}")
    for k, a in enumerate(mats):
        if k == skip:
            continue
        t = mode_product(t, a, k)
    return t


def batch_multi_mode_product(samples, mats, skip=None):
    """Apply :func:`multi_mode_product` to every sample of a batch at once."""
    x = np.asarray(samples, dtype=float)
    if len(mats) != x.ndim - 1:
        raise ValueError(f"need {x.ndim - 1} matrices, got {len(mats)}")
    for k, a in enumerate(mats):
        if k == skip:
            continue
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[1] != x.shape[k + 1]:
            raise ValueError(
                f"matrix of shape {a.shape} does not act on mode {k} of size {x.shape[k + 1]}")
        x = np.moveaxis(np.tensordot(a, x, axes=(1, k + 1)), 0, k + 1)
    return x


def frobenius(t):
    return float(np.sqrt(np.sum(np.square(np.asarray(t, dtype=float)))))


def as_batch(samples):
    """Coerce a list of equally-shaped tensors (or a stacked array) to a batch."""
    x = np.asarray(samples, dtype=float)
    if x.ndim < 2:
        raise ValueError("samples must be a sequence of tensors")
    return x


# -- serialization -----------------------------------------------------------
#
# Binary layout (all little-endian):
#   magic "TGMT" | uint32 K | uint64 n | K x uint64 dims | n*m float64 data
# with each sample stored in vectorized (first-index-fastest) order.
# The text layout is a first line "K n d_1 ... d_K" followed by one line per
# sample holding its vectorization.

def save_tensors(path, samples, fmt="binary"):
    x = as_batch(samples)
    n, dims = x.shape[0], x.shape[1:]
    flat = np.stack([vectorize(s) for s in x]) if n else np.zeros((0, 0))
    path = Path(path)
    if fmt == "binary":
        with path.open("wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<IQ", len(dims), n))
            fh.write(struct.pack(f"<{len(dims)}Q", *dims))
            fh.write(flat.astype("<f8").tobytes())
    elif fmt == "text":
        with path.open("w") as fh:
            fh.write(" ".join(str(v) for v in (len(dims), n, *dims)) + "\n")
            for row in flat:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_tensors(path, fmt="binary"):
    path = Path(path)
    if fmt == "binary":
        raw = path.read_bytes()
        if raw[:4] != _MAGIC:
            raise ValueError(f"{path} is not a tensor file")
        K, n = struct.unpack_from("<IQ", raw, 4)
        off = 4 + struct.calcsize("<IQ")
        dims = struct.unpack_from(f"<{K}Q", raw, off)
        off += 8 * K
        flat = np.frombuffer(raw, dtype="<f8", offset=off).astype(float)
    elif fmt == "text":
        lines = path.read_text().splitlines()
        head = [int(v) for v in lines[0].split()]
        K, n, dims = head[0], head[1], tuple(head[2:])
        if len(dims) != K:
            raise ValueError("corrupt header")
        flat = np.array([[float(v) for v in ln.split()] for ln in lines[1:1 + n]])
    else:
        raise ValueError(f"unknown format {fmt!r}")
    m = int(np.prod(dims))
    flat = flat.reshape(n, m)
    return np.stack([unvectorize(row, dims) for row in flat]) if n else np.zeros((0, *dims))
