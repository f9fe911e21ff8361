"""Dense small-dimension tensor arithmetic: dyadic products, symmetrization
and the Euclidean/Frobenius norms used on level-2 objects.

Everything here operates on plain NumPy arrays; vectors are 1-d, second-level
objects are (d, d) matrices.  Dimensions are expected to be small (d <= 16),
so no sparse or structured machinery is provided.
"""

import numpy as np

from .errors import ShapeError

__all__ = [
    "outer",
    "sym",
    "anti",
    "frobenius_norm",
    "euclidean_norm",
    "identity",
]


def outer(v, w):
    """Dyadic product v w^T with entries (i, j) -> v[i] * w[j].

    Both arguments must be vectors of the same dimension.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.ndim != 1 or w.ndim != 1:
        raise ShapeError("outer expects two vectors, got shapes %s and %s" % (v.shape, w.shape))
    if v.shape[0] != w.shape[0]:
        raise ShapeError("dimension mismatch in outer: %d vs %d" % (v.shape[0], w.shape[0]))
    return np.outer(v, w)


def _require_square(M, who):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError("%s expects a square matrix, got shape %s" % (who, M.shape))
    return M


def sym(M):
    """Symmetric part (M + M^T) / 2."""
    M = _require_square(M, "sym")
    return (M + M.T) / 2.0


def anti(M):
    """Antisymmetric part (M - M^T) / 2."""
    M = _require_square(M, "anti")
    return (M - M.T) / 2.0


def frobenius_norm(M):
    return float(np.sqrt(np.sum(np.square(np.asarray(M, dtype=float)))))


def euclidean_norm(v):
    return float(np.sqrt(np.sum(np.square(np.asarray(v, dtype=float)))))


def identity(d):
    return np.eye(d)
