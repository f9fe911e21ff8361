"""Level-2 rough paths over a grid.

A rough path stores its first-order samples X_{t_k} plus one level-2 block
per grid interval.  Values of the two-parameter process across arbitrary
node pairs are reconstructed through the algebraic consistency relation, so
that relation holds by construction rather than by numerical accident, and
storage stays O(n d^2).
"""

import json

import numpy as np

from . import kernels
from .errors import ChenDefectError, DataError, GridError, ShapeError
from .grids import SampledPath, TimeGrid, _scan_stride, _subsampled

__all__ = [
    "RoughPath",
    "RawLevel2",
    "second_level",
    "chen_defect",
    "lift_piecewise_linear",
    "perturbed_lift",
    "bracket_one_param",
    "bracket_two_param",
    "is_weakly_geometric",
    "rough_seminorm",
    "rough_norm",
    "rough_metric",
    "max_chen_defect",
    "to_json_dict",
    "from_json_dict",
    "save_json",
    "load_json",
    "brackets_to_csv",
    "defect_scan_to_csv",
]


class RoughPath:
    """Grid samples of X in R^d plus per-interval level-2 blocks in R^{dxd}."""

    __slots__ = ("grid", "values", "blocks", "_xx0", "_brackets")

    def __init__(self, grid, values, blocks):
        if not isinstance(grid, TimeGrid):
            grid = TimeGrid(grid)
        values = np.ascontiguousarray(values, dtype=float)
        blocks = np.ascontiguousarray(blocks, dtype=float)
        n1 = len(grid)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != n1:
            raise ShapeError("values must have one row per grid node")
        d = values.shape[1]
        if blocks.shape != (n1 - 1, d, d):
            raise ShapeError(
                "blocks must be (n, d, d) = %s, got %s" % ((n1 - 1, d, d), blocks.shape)
            )
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(blocks))):
            raise ShapeError("rough path data must be finite")
        values.flags.writeable = False
        blocks.flags.writeable = False
        self.grid = grid
        self.values = values
        self.blocks = blocks
        self._xx0 = None
        self._brackets = None

    @classmethod
    def from_initial_levels(cls, grid, values, xx0):
        """Rebuild a rough path from (X_{t_k}, XX_{0,t_k}).

        The consecutive blocks are recovered from the reconstruction
        identity XX_{s,t} = XX_{0,t} - XX_{0,s} - X_{0,s} (x) X_{s,t}.
        """
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        xx0 = np.asarray(xx0, dtype=float)
        x0k = values[:-1] - values[0]
        dx = np.diff(values, axis=0)
        blocks = xx0[1:] - xx0[:-1] - x0k[:, :, None] * dx[:, None, :]
        return cls(grid, values, blocks)

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def times(self):
        return self.grid.times

    @property
    def n(self):
        return self.grid.n

    def path(self):
        return SampledPath(self.grid, np.array(self.values))

    def initial_levels(self):
        """XX_{0,t_k} for every node k, shape (n+1, d, d)."""
        if self._xx0 is None:
            dx = np.diff(self.values, axis=0)
            x0k = self.values[:-1] - self.values[0]
            steps = self.blocks + x0k[:, :, None] * dx[:, None, :]
            xx0 = np.zeros((len(self.grid), self.dim, self.dim))
            np.cumsum(steps, axis=0, out=xx0[1:])
            xx0.flags.writeable = False
            self._xx0 = xx0
        return self._xx0

    def bracket_path(self):
        """One-parameter bracket at every node, shape (n+1, d, d).

        Accumulated cell-by-cell, which keeps geometric constructions at
        exactly zero in floating point.
        """
        if self._brackets is None:
            dx = np.diff(self.values, axis=0)
            cell = dx[:, :, None] * dx[:, None, :] - (
                self.blocks + np.swapaxes(self.blocks, 1, 2)
            )
            br = np.zeros((len(self.grid), self.dim, self.dim))
            np.cumsum(cell, axis=0, out=br[1:])
            br.flags.writeable = False
            self._brackets = br
        return self._brackets

    def restrict(self, i, j):
        """Sub-path on nodes i..j (absolute times are kept)."""
        if not 0 <= i < j <= self.n:
            raise GridError("restrict needs 0 <= i < j <= n")
        grid = TimeGrid._window(self.times[i : j + 1])
        return RoughPath(grid, np.array(self.values[i : j + 1]), np.array(self.blocks[i:j]))

    def __repr__(self):
        return "RoughPath(d=%d, n=%d, T=%g)" % (self.dim, self.n, self.times[-1])


def _check_node(R, i):
    if not 0 <= i <= R.n:
        raise GridError("node index %d out of range [0, %d]" % (i, R.n))


def second_level(R, i, j):
    """Level-2 value XX_{t_i, t_j} as a (d, d) matrix.

    For i <= j this is the cross-interval reconstruction; for j < i the
    value follows from XX_{s,t} = X_{s,t} (x) X_{s,t} - XX_{t,s}.
    """
    _check_node(R, i)
    _check_node(R, j)
    if i == j:
        return np.zeros((R.dim, R.dim))
    if j == i + 1:
        return np.array(R.blocks[i])
    if j < i:
        dx = R.values[j] - R.values[i]
        return np.outer(dx, dx) - second_level(R, j, i)
    xx0 = R.initial_levels()
    xi0 = R.values[i] - R.values[0]
    return xx0[j] - xx0[i] - np.outer(xi0, R.values[j] - R.values[i])


def chen_defect(X, level2_field, i, u, j):
    """Defect XX_{i,j} - XX_{i,u} - XX_{u,j} - X_{i,u} (x) X_{u,j} of a raw field.

    ``X`` is a SampledPath, ``level2_field`` either a RawLevel2 or a full
    (n+1, n+1, d, d) array.  Zero iff the consistency relation holds at the
    triple.
    """
    if not 0 <= i <= u <= j:
        raise GridError("need i <= u <= j, got (%d, %d, %d)" % (i, u, j))
    field = level2_field.field if isinstance(level2_field, RawLevel2) else np.asarray(level2_field)
    if j >= field.shape[0]:
        raise GridError("node index %d out of range" % j)
    xv = X.values if isinstance(X, SampledPath) else np.asarray(X, dtype=float)
    if xv.ndim == 1:
        xv = xv[:, None]
    return field[i, j] - field[i, u] - field[u, j] - np.outer(xv[u] - xv[i], xv[j] - xv[u])


class RawLevel2:
    """An unconstrained candidate level-2 field over all grid node pairs.

    Exists to test and ingest external data; promotion to a RoughPath keeps
    only the consecutive blocks and requires the consistency defect to be
    below tolerance.  No attempt is made to normalize the one-parameter
    freedom in the field; whatever the data carries is kept.
    """

    __slots__ = ("path", "field")

    def __init__(self, path, field):
        if not isinstance(path, SampledPath):
            raise ShapeError("RawLevel2 needs a SampledPath")
        field = np.ascontiguousarray(field, dtype=float)
        n1, d = path.values.shape
        if field.shape != (n1, n1, d, d):
            raise ShapeError("field must be (n+1, n+1, d, d), got %s" % (field.shape,))
        diag = field[np.arange(n1), np.arange(n1)]
        if np.max(np.abs(diag)) > 0:
            raise ShapeError("level-2 field must vanish on the diagonal")
        self.path = path
        self.field = field

    def chen_defect(self, i, u, j):
        return chen_defect(self.path, self.field, i, u, j)

    def max_defect(self, exhaustive_limit=257, n_samples=20000, seed=0):
        n1 = self.field.shape[0]
        if n1 <= exhaustive_limit:
            return float(kernels.chen_defect_max_raw(self.path.values, self.field))
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.integers(0, n1, size=(n_samples, 3)), axis=1)
        xv = self.path.values
        cross = (xv[idx[:, 1]] - xv[idx[:, 0]])[:, :, None] * (
            xv[idx[:, 2]] - xv[idx[:, 1]]
        )[:, None, :]
        defect = (
            self.field[idx[:, 0], idx[:, 2]]
            - self.field[idx[:, 0], idx[:, 1]]
            - self.field[idx[:, 1], idx[:, 2]]
            - cross
        )
        return float(np.sqrt(np.einsum("kab,kab->k", defect, defect)).max())

    def promote(self, tol=1e-10):
        """Validate and convert to a RoughPath (consecutive blocks only)."""
        defect = self.max_defect()
        if defect > tol:
            raise ChenDefectError(
                "level-2 field violates the consistency relation: max defect %.3e > %.1e"
                % (defect, tol)
            )
        n1 = self.field.shape[0]
        blocks = self.field[np.arange(n1 - 1), np.arange(1, n1)]
        return RoughPath(self.path.grid, np.array(self.path.values), np.array(blocks))


def lift_piecewise_linear(P):
    """Canonical lift of the piecewise-linear interpolant of a sampled path.

    Each block is the exact iterated integral of the linear segment,
    (1/2) dX (x) dX, which makes the lift weakly geometric.
    """
    if not isinstance(P, SampledPath):
        raise ShapeError("expected a SampledPath")
    dx = np.diff(P.values, axis=0)
    blocks = 0.5 * dx[:, :, None] * dx[:, None, :]
    return RoughPath(P.grid, np.array(P.values), blocks)


def perturbed_lift(R, G, eps):
    """Driver perturbation X + eps*G with level-2 data updated consistently.

    ``G`` is a smooth sampled path on the same grid; its cross iterated
    integrals against X are taken for the piecewise-linear interpolants, so
    eps -> 0 recovers the original rough path.
    """
    g = G.values if isinstance(G, SampledPath) else np.asarray(G, dtype=float)
    if g.shape != R.values.shape:
        raise ShapeError("perturbation must match the driver's samples")
    dx = np.diff(R.values, axis=0)
    dg = np.diff(g, axis=0)
    cross = 0.5 * (dg[:, :, None] * dx[:, None, :] + dx[:, :, None] * dg[:, None, :])
    gg = 0.5 * dg[:, :, None] * dg[:, None, :]
    blocks = R.blocks + eps * cross + eps * eps * gg
    return RoughPath(R.grid, R.values + eps * g, blocks)


def bracket_one_param(R, j):
    """[X]_j = X_{0,j} (x) X_{0,j} - 2 Sym(XX_{0,j})."""
    _check_node(R, j)
    return np.array(R.bracket_path()[j])


def bracket_two_param(R, i, j):
    """Two-parameter bracket, computed as the exact difference [X]_j - [X]_i."""
    _check_node(R, i)
    _check_node(R, j)
    br = R.bracket_path()
    return br[j] - br[i]


def is_weakly_geometric(R, tol=1e-12):
    """True iff max over node pairs of |Sym(XX_{i,j}) - X_{i,j} X_{i,j}^T / 2| <= tol.

    That maximum equals half the largest pairwise bracket difference.
    """
    if tol < 0:
        raise GridError("tolerance must be nonnegative")
    br = R.bracket_path().reshape(len(R.grid), -1)
    worst = kernels.pair_holder_max(R.times, np.ascontiguousarray(br), 0.0)
    return bool(0.5 * worst <= tol)


def _check_alpha(alpha):
    if not (1.0 / 3.0 < alpha <= 0.5):
        raise GridError("rough-path exponent must lie in (1/3, 1/2], got %g" % alpha)


def rough_seminorm(R, alpha, max_nodes=None):
    """||X||_alpha + ||XX||_{2 alpha} over grid pairs."""
    _check_alpha(alpha)
    times, values = R.times, R.values
    xx0 = R.initial_levels()
    stride = _scan_stride(times.shape[0], max_nodes)
    if stride > 1:
        times, values = _subsampled(R.times, R.values, stride)
        _, xx0 = _subsampled(R.times, xx0, stride)
    first = kernels.pair_holder_max(times, values, alpha)
    second = kernels.level2_pair_max(
        times, np.ascontiguousarray(values), np.ascontiguousarray(xx0), 2.0 * alpha
    )
    return first + second


def rough_norm(R, alpha, max_nodes=None):
    """|X_0| + ||X||_alpha + ||XX||_{2 alpha}."""
    return float(np.linalg.norm(R.values[0])) + rough_seminorm(R, alpha, max_nodes)


def rough_metric(R1, R2, alpha, max_nodes=None):
    """Distance |X - Y|_alpha between two rough paths on the same grid."""
    _check_alpha(alpha)
    if R1.grid != R2.grid:
        raise GridError("rough paths must share the grid")
    if R1.dim != R2.dim:
        raise ShapeError("rough paths must share the dimension")
    times = R1.times
    diff = R1.values - R2.values
    xx1, xx2 = R1.initial_levels(), R2.initial_levels()
    v1, v2 = R1.values, R2.values
    stride = _scan_stride(times.shape[0], max_nodes)
    if stride > 1:
        times, diff = _subsampled(R1.times, diff, stride)
        _, v1 = _subsampled(R1.times, R1.values, stride)
        _, xx1 = _subsampled(R1.times, xx1, stride)
        _, v2 = _subsampled(R1.times, R2.values, stride)
        _, xx2 = _subsampled(R1.times, xx2, stride)
    first = kernels.pair_holder_max(times, np.ascontiguousarray(diff), alpha)
    second = kernels.level2_diff_pair_max(
        times,
        np.ascontiguousarray(v1),
        np.ascontiguousarray(xx1),
        np.ascontiguousarray(v2),
        np.ascontiguousarray(xx2),
        2.0 * alpha,
    )
    return float(np.linalg.norm(diff[0])) + first + second


def max_chen_defect(R, exhaustive_limit=257, n_samples=20000, seed=0):
    """Largest consistency defect over grid triples of a rough path.

    Exhaustive for small grids, randomly sampled triples otherwise.  Every
    level-2 value is reconstructed independently, so this measures the
    floating-point quality of the structural identity.
    """
    n1 = len(R.grid)
    xx0 = R.initial_levels()
    if n1 <= exhaustive_limit:
        return float(
            kernels.chen_defect_max_rp(
                np.ascontiguousarray(R.values), np.ascontiguousarray(xx0)
            )
        )
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.integers(0, n1, size=(n_samples, 3)), axis=1)
    i, u, j = idx[:, 0], idx[:, 1], idx[:, 2]
    xv, x0 = R.values, R.values[0]

    def xx(a, b):
        return (
            xx0[b]
            - xx0[a]
            - (xv[a] - x0)[:, :, None] * (xv[b] - xv[a])[:, None, :]
        )

    cross = (xv[u] - xv[i])[:, :, None] * (xv[j] - xv[u])[:, None, :]
    defect = xx(i, j) - xx(i, u) - xx(u, j) - cross
    return float(np.sqrt(np.einsum("kab,kab->k", defect, defect)).max())


# ---------------------------------------------------------------------------
# serialization


def to_json_dict(R):
    return {
        "d": R.dim,
        "times": R.times.tolist(),
        "X": R.values.tolist(),
        "blocks": R.blocks.tolist(),
    }


def from_json_dict(obj):
    try:
        d = int(obj["d"])
        times = np.asarray(obj["times"], dtype=float)
        values = np.asarray(obj["X"], dtype=float)
        blocks = np.asarray(obj["blocks"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError("invalid rough-path JSON: %s" % exc) from None
    if values.ndim != 2 or values.shape[1] != d:
        raise DataError("rough-path JSON: X must be (n+1, d)")
    try:
        grid = TimeGrid(times) if times[0] == 0.0 else TimeGrid._window(times)
        return RoughPath(grid, values, blocks)
    except (ShapeError, GridError) as exc:
        raise DataError("invalid rough-path JSON: %s" % exc) from None


def save_json(R, path, metadata=None):
    obj = to_json_dict(R)
    if metadata:
        obj["metadata"] = metadata
    with open(path, "w") as fh:
        json.dump(obj, fh)


def load_json(path):
    with open(path) as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError("%s: %s" % (path, exc)) from None
    return from_json_dict(obj)


def brackets_to_csv(R, path):
    br = R.bracket_path()
    d = R.dim
    with open(path, "w") as fh:
        header = ["t"] + ["b%d%d" % (a + 1, b + 1) for a in range(d) for b in range(d)]
        fh.write(",".join(header) + "\n")
        for t, mat in zip(R.times, br):
            fh.write(",".join(["%.17g" % t] + ["%.17g" % v for v in mat.ravel()]) + "\n")


def defect_scan_to_csv(R, path, n_samples=2000, seed=0):
    """Sampled triple scan written as (i, u, j, t_i, t_u, t_j, defect) rows."""
    rng = np.random.default_rng(seed)
    n1 = len(R.grid)
    idx = np.sort(rng.integers(0, n1, size=(n_samples, 3)), axis=1)
    with open(path, "w") as fh:
        fh.write("i,u,j,t_i,t_u,t_j,defect\n")
        for i, u, j in idx:
            xx_ij = second_level(R, i, j)
            xx_iu = second_level(R, i, u)
            xx_uj = second_level(R, u, j)
            cr = np.outer(R.values[u] - R.values[i], R.values[j] - R.values[u])
            defect = float(np.linalg.norm(xx_ij - xx_iu - xx_uj - cr))
            fh.write(
                "%d,%d,%d,%.17g,%.17g,%.17g,%.17g\n"
                % (i, u, j, R.times[i], R.times[u], R.times[j], defect)
            )
