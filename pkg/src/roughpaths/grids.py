"""Time grids, sampled paths and discrete Hoelder-seminorm estimators.

All seminorms are computed over grid node pairs only, so they are lower
bounds of the continuum suprema.  That is the right surrogate for this
library: every inequality asserted by the test-suite survives restriction
to a finite set of pairs.
"""

import csv
import math

import numpy as np

from . import kernels
from .errors import DataError, GridError, ShapeError

__all__ = [
    "TimeGrid",
    "SampledPath",
    "increment",
    "holder_seminorm",
    "two_param_holder_seminorm",
    "localized_seminorm",
    "read_path_csv",
    "write_path_csv",
    "DEFAULT_MAX_SCAN_NODES",
]

# Pairwise scans are O(n^2); grids larger than this are subsampled (the
# result is then a coarse lower-bound estimate).
DEFAULT_MAX_SCAN_NODES = 4096


class TimeGrid:
    """Sorted sample times 0 = t_0 < t_1 < ... < t_n = T."""

    __slots__ = ("times",)

    def __init__(self, times):
        times = np.ascontiguousarray(times, dtype=float)
        if times.ndim != 1 or times.shape[0] < 2:
            raise GridError("a time grid needs at least two nodes")
        if not np.all(np.diff(times) > 0):
            raise GridError("grid times must be strictly increasing")
        if times[0] != 0.0:
            raise GridError("grid must start at t=0 (got t_0=%g)" % times[0])
        self.times = times

    @classmethod
    def _window(cls, times):
        """Internal: a grid slice keeping absolute times (t_0 may be nonzero).

        Used when restricting paths to subintervals; time-dependent
        coefficients must keep seeing absolute time.
        """
        obj = cls.__new__(cls)
        times = np.ascontiguousarray(times, dtype=float)
        if times.ndim != 1 or times.shape[0] < 2 or not np.all(np.diff(times) > 0):
            raise GridError("invalid window grid")
        obj.times = times
        return obj

    @classmethod
    def uniform(cls, horizon, n):
        if horizon <= 0 or n < 1:
            raise GridError("need horizon > 0 and n >= 1")
        return cls(np.linspace(0.0, float(horizon), n + 1))

    @property
    def n(self):
        return self.times.shape[0] - 1

    @property
    def horizon(self):
        return float(self.times[-1])

    @property
    def span(self):
        return float(self.times[-1] - self.times[0])

    def __len__(self):
        return self.times.shape[0]

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.times, other.times)

    def __repr__(self):
        return "TimeGrid(n=%d, [%g, %g])" % (self.n, self.times[0], self.times[-1])


class SampledPath:
    """A path sampled on a grid: one value row per node."""

    __slots__ = ("grid", "values")

    def __init__(self, grid, values):
        if not isinstance(grid, TimeGrid):
            grid = TimeGrid(grid)
        values = np.ascontiguousarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] != len(grid):
            raise ShapeError(
                "values must be (n+1, m) aligned with the grid, got %s for n+1=%d"
                % (values.shape, len(grid))
            )
        if not np.all(np.isfinite(values)):
            raise ShapeError("path values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def from_function(cls, fn, grid):
        vals = np.stack([np.atleast_1d(np.asarray(fn(t), dtype=float)) for t in grid.times])
        return cls(grid, vals)

    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def times(self):
        return self.grid.times

    def __len__(self):
        return len(self.grid)


def _check_index(P, i):
    if not 0 <= i < len(P):
        raise GridError("node index %d out of range [0, %d]" % (i, len(P) - 1))


def increment(P, i, j):
    """Increment values[j] - values[i]; antisymmetric in (i, j)."""
    _check_index(P, i)
    _check_index(P, j)
    return P.values[j] - P.values[i]


def _scan_stride(n1, max_nodes):
    if max_nodes is None:
        max_nodes = DEFAULT_MAX_SCAN_NODES
    if n1 <= max_nodes:
        return 1
    return math.ceil(n1 / max_nodes)


def _subsampled(times, values, stride):
    idx = np.arange(0, times.shape[0], stride)
    if idx[-1] != times.shape[0] - 1:
        idx = np.append(idx, times.shape[0] - 1)
    return times[idx], values[idx]


def holder_seminorm(P, alpha, max_nodes=None):
    """Discrete alpha-Hoelder seminorm: max over grid pairs of
    |increment| / (t_j - t_i)^alpha.

    For grids above the scan cap a strided subsample is scanned instead,
    which only weakens the (already one-sided) lower bound.
    """
    if not 0.0 < alpha <= 1.0:
        raise GridError("alpha must lie in (0, 1], got %g" % alpha)
    if len(P) < 2:
        raise GridError("degenerate grid: need at least one interval")
    times, values = P.times, P.values
    stride = _scan_stride(times.shape[0], max_nodes)
    if stride > 1:
        times, values = _subsampled(times, values, stride)
    return kernels.pair_holder_max(times, values, float(alpha))


def two_param_holder_seminorm(F, times, alpha):
    """Discrete seminorm of a full two-parameter field F[i, j] over grid pairs.

    ``F`` has shape (n+1, n+1, ...); the norm over the trailing axes is
    Euclidean/Frobenius.
    """
    if not 0.0 < alpha <= 2.0:
        raise GridError("alpha must lie in (0, 2], got %g" % alpha)
    times = np.asarray(times, dtype=float)
    F = np.asarray(F, dtype=float)
    n1 = times.shape[0]
    if F.shape[:2] != (n1, n1):
        raise ShapeError("field must be (n+1, n+1, ...), got %s" % (F.shape,))
    flat = F.reshape(n1, n1, -1)
    best = 0.0
    for i in range(n1 - 1):
        dt = times[i + 1 :] - times[i]
        norms = np.sqrt(np.einsum("jk,jk->j", flat[i, i + 1 :], flat[i, i + 1 :]))
        best = max(best, float((norms / dt**alpha).max()))
    return best


def localized_seminorm(P, alpha, h, max_nodes=None):
    """Hoelder seminorm restricted to pairs within subintervals of length <= h."""
    if not 0.0 < alpha <= 1.0:
        raise GridError("alpha must lie in (0, 1], got %g" % alpha)
    if not 0.0 < h <= P.grid.span:
        raise GridError("window must satisfy 0 < h <= T")
    times, values = P.times, P.values
    if h < np.min(np.diff(times)):
        raise GridError("window h=%g is smaller than the grid spacing" % h)
    stride = _scan_stride(times.shape[0], max_nodes)
    if stride > 1:
        times, values = _subsampled(times, values, stride)
    return kernels.pair_holder_max(times, values, float(alpha), float(h))


def read_path_csv(path):
    """Load a sampled path from CSV with header ``t,x1,...,xm``.

    Raises DataError naming the offending row on any parse or ordering
    problem.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("%s: empty file" % path) from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "t":
            raise DataError("%s: header must be 't,x1,...,xm', got %r" % (path, header))
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    "%s: row %d has %d fields, expected %d" % (path, lineno, len(row), len(header))
                )
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError("%s: row %d: %s" % (path, lineno, exc)) from None
    if len(rows) < 2:
        raise DataError("%s: need at least two data rows" % path)
    data = np.asarray(rows, dtype=float)
    times = data[:, 0]
    if times[0] != 0.0:
        raise DataError("%s: row 2: first sample time must be 0, got %g" % (path, times[0]))
    bad = np.nonzero(np.diff(times) <= 0)[0]
    if bad.size:
        raise DataError("%s: row %d: sample times must be strictly increasing" % (path, bad[0] + 3))
    return SampledPath(TimeGrid(times), data[:, 1:])


def write_path_csv(P, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + ["x%d" % (k + 1) for k in range(P.dim)])
        for t, row in zip(P.times, P.values):
            writer.writerow(["%.17g" % t] + ["%.17g" % v for v in row])
