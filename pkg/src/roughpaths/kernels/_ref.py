"""NumPy reference implementation of the pairwise-scan kernels.

These are the hot loops of the library: discrete Hoelder-seminorm scans over
all grid pairs and the exhaustive consistency scan over grid triples.  The
compiled extension in ``_fast.pyx`` implements the same contracts; this module
is the always-available fallback and the correctness reference.

All inputs are C-contiguous float64 arrays.  ``times`` has length n+1,
one-parameter data has leading dimension n+1.
"""

import numpy as np

BACKEND = "numpy"


def pair_holder_max(times, values, alpha, hmax=np.inf):
    """max over pairs i<j with t_j - t_i <= hmax of |values_j - values_i|_2 / (t_j - t_i)^alpha.

    ``values`` is (n+1, m); the norm is Euclidean over the trailing axis.
    alpha = 0 gives the plain maximal pair oscillation.
    """
    times = np.ascontiguousarray(times, dtype=float)
    values = np.ascontiguousarray(values, dtype=float)
    n1 = times.shape[0]
    best = 0.0
    for i in range(n1 - 1):
        dt = times[i + 1 :] - times[i]
        diff = values[i + 1 :] - values[i]
        norms = np.sqrt(np.einsum("jm,jm->j", diff, diff))
        ratios = norms if alpha == 0.0 else norms / dt**alpha
        if hmax != np.inf:
            ratios = ratios[dt <= hmax]
            if ratios.size == 0:
                continue
        m = ratios.max()
        if m > best:
            best = m
    return float(best)


def level2_pair_max(times, x, xx0, alpha2):
    """max over pairs i<j of |XX_{i,j}|_F / (t_j - t_i)^alpha2.

    The two-parameter field is reconstructed from its initial-time values:
    XX_{i,j} = xx0[j] - xx0[i] - (x_i - x_0) (x_j - x_i)^T.
    """
    times = np.ascontiguousarray(times, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    xx0 = np.ascontiguousarray(xx0, dtype=float)
    n1 = times.shape[0]
    x0 = x[0]
    best = 0.0
    for i in range(n1 - 1):
        dt = times[i + 1 :] - times[i]
        xi0 = x[i] - x0
        dx = x[i + 1 :] - x[i]
        rows = xx0[i + 1 :] - xx0[i] - xi0[None, :, None] * dx[:, None, :]
        norms = np.sqrt(np.einsum("jab,jab->j", rows, rows))
        m = (norms / dt**alpha2).max()
        if m > best:
            best = m
    return float(best)


def level2_diff_pair_max(times, x1, xx01, x2, xx02, alpha2):
    """Like level2_pair_max but for the difference of two reconstructed fields."""
    times = np.ascontiguousarray(times, dtype=float)
    x1 = np.ascontiguousarray(x1, dtype=float)
    xx01 = np.ascontiguousarray(xx01, dtype=float)
    x2 = np.ascontiguousarray(x2, dtype=float)
    xx02 = np.ascontiguousarray(xx02, dtype=float)
    n1 = times.shape[0]
    best = 0.0
    for i in range(n1 - 1):
        dt = times[i + 1 :] - times[i]
        a = (
            xx01[i + 1 :]
            - xx01[i]
            - (x1[i] - x1[0])[None, :, None] * (x1[i + 1 :] - x1[i])[:, None, :]
        )
        b = (
            xx02[i + 1 :]
            - xx02[i]
            - (x2[i] - x2[0])[None, :, None] * (x2[i + 1 :] - x2[i])[:, None, :]
        )
        rows = a - b
        norms = np.sqrt(np.einsum("jab,jab->j", rows, rows))
        m = (norms / dt**alpha2).max()
        if m > best:
            best = m
    return float(best)


def remainder_pair_max(times, y, yp, x, alpha2):
    """max over pairs i<j of |y_j - y_i - yp_i (x_j - x_i)|_2 / (t_j - t_i)^alpha2.

    ``y`` is (n+1, p), ``yp`` is (n+1, p, d), ``x`` is (n+1, d).
    """
    times = np.ascontiguousarray(times, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    yp = np.ascontiguousarray(yp, dtype=float)
    x = np.ascontiguousarray(x, dtype=float)
    n1 = times.shape[0]
    best = 0.0
    for i in range(n1 - 1):
        dt = times[i + 1 :] - times[i]
        dx = x[i + 1 :] - x[i]
        rem = y[i + 1 :] - y[i] - dx @ yp[i].T
        norms = np.sqrt(np.einsum("jp,jp->j", rem, rem))
        m = (norms / dt**alpha2).max()
        if m > best:
            best = m
    return float(best)


def chen_defect_max_rp(x, xx0):
    """Exhaustive max over triples i<=u<=j of the Chen defect of a
    reconstructed field, |XX_{i,j} - XX_{i,u} - XX_{u,j} - X_{i,u} X_{u,j}^T|_F.

    Each XX value is reconstructed independently from ``xx0`` so the scan
    genuinely exercises the reconstruction identity instead of cancelling it
    symbolically.  O(n^3 d^2): intended for n <= 256.
    """
    x = np.ascontiguousarray(x, dtype=float)
    xx0 = np.ascontiguousarray(xx0, dtype=float)
    n1 = x.shape[0]
    x0 = x[0]
    best = 0.0
    for u in range(n1):
        xi0 = x[:u + 1] - x0            # X_{0,i} for i <= u
        xu0 = x[u] - x0
        dx_iu = x[u] - x[:u + 1]        # X_{i,u}
        dx_uj = x[u:] - x[u]            # X_{u,j}
        xx_iu = xx0[u] - xx0[:u + 1] - xi0[:, :, None] * dx_iu[:, None, :]
        xx_uj = xx0[u:] - xx0[u] - xu0[None, :, None] * dx_uj[:, None, :]
        # XX_{i,j} for the block i <= u <= j
        dx_ij = x[u:][None, :, :] - x[:u + 1][:, None, :]
        xx_ij = (
            xx0[u:][None, :, :, :]
            - xx0[:u + 1][:, None, :, :]
            - xi0[:, None, :, None] * dx_ij[:, :, None, :]
        )
        cross = dx_iu[:, None, :, None] * dx_uj[None, :, None, :]
        defect = xx_ij - xx_iu[:, None] - xx_uj[None, :] - cross
        m = np.sqrt(np.einsum("ijab,ijab->ij", defect, defect)).max()
        if m > best:
            best = float(m)
    return best


def chen_defect_max_raw(x, field):
    """Exhaustive Chen-defect max for an explicitly stored two-parameter field.

    ``field`` is (n+1, n+1, d, d) with field[i, j] the candidate XX_{i,j}.
    """
    x = np.ascontiguousarray(x, dtype=float)
    field = np.ascontiguousarray(field, dtype=float)
    n1 = x.shape[0]
    best = 0.0
    for u in range(n1):
        dx_iu = x[u] - x[:u + 1]
        dx_uj = x[u:] - x[u]
        cross = dx_iu[:, None, :, None] * dx_uj[None, :, None, :]
        defect = (
            field[: u + 1, u:]
            - field[: u + 1, u][:, None]
            - field[u, u:][None, :]
            - cross
        )
        m = np.sqrt(np.einsum("ijab,ijab->ij", defect, defect)).max()
        if m > best:
            best = float(m)
    return best
