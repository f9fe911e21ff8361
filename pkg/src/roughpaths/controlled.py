"""Controlled paths (Y, Y') and their calculus.

Two concrete layouts are used:

* ``ControlledPath`` carries state-valued data: Y is (n+1, p) and the
  derivative is (n+1, p, d) with the driver direction on the last axis,
  deriv[k, q, a] = (d/d e_a) Y_q.

* ``ControlledIntegrand`` carries operator-valued data ready for rough
  integration: Y is (n+1, p, d) and the derivative is (n+1, p, d, d) with
  deriv[k, q, a, b] = (d/d e_a) Y[q, b], so the level-2 contraction is
  sum_{a,b} deriv[q, a, b] * XX[a, b].

Remainders are always derived from (Y, Y', X) on demand, never stored.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import GridError, ShapeError
from .grids import _scan_stride, _subsampled

__all__ = [
    "ControlledPath",
    "ControlledIntegrand",
    "FunctionModel",
    "validate_function_model",
    "remainder",
    "controlled_seminorm",
    "controlled_norms",
    "compose_function",
    "compose_linear",
    "compose_bilinear",
    "pair",
    "project",
    "dump_csv",
]


class ControlledPath:
    """State-valued controlled data on a grid."""

    __slots__ = ("times", "values", "deriv")

    def __init__(self, times, values, deriv):
        times = np.ascontiguousarray(times, dtype=float)
        values = np.ascontiguousarray(values, dtype=float)
        deriv = np.ascontiguousarray(deriv, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        n1, p = values.shape
        if times.shape != (n1,):
            raise ShapeError("times and values are misaligned")
        if deriv.ndim != 3 or deriv.shape[:2] != (n1, p):
            raise ShapeError("derivative must be (n+1, p, d), got %s" % (deriv.shape,))
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(deriv))):
            raise ShapeError("controlled data must be finite")
        self.times = times
        self.values = values
        self.deriv = deriv

    @property
    def state_dim(self):
        return self.values.shape[1]

    @property
    def driver_dim(self):
        return self.deriv.shape[2]

    def __len__(self):
        return self.times.shape[0]


class ControlledIntegrand:
    """Operator-valued controlled data, the integrand type of the rough integral."""

    __slots__ = ("times", "values", "deriv")

    def __init__(self, times, values, deriv):
        times = np.ascontiguousarray(times, dtype=float)
        values = np.ascontiguousarray(values, dtype=float)
        deriv = np.ascontiguousarray(deriv, dtype=float)
        if values.ndim != 3:
            raise ShapeError("integrand values must be (n+1, p, d)")
        n1, p, d = values.shape
        if times.shape != (n1,):
            raise ShapeError("times and values are misaligned")
        if deriv.shape != (n1, p, d, d):
            raise ShapeError("integrand derivative must be (n+1, p, d, d)")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(deriv))):
            raise ShapeError("controlled data must be finite")
        self.times = times
        self.values = values
        self.deriv = deriv

    @property
    def state_dim(self):
        return self.values.shape[1]

    @property
    def driver_dim(self):
        return self.values.shape[2]

    def __len__(self):
        return self.times.shape[0]


@dataclass(frozen=True)
class FunctionModel:
    """A coefficient f(t, y) together with its spatial derivatives and the
    declared norm constants used by inequality tests.

    ``f`` maps (t, y) with y of shape (dim_in,) to an array of shape
    ``out_shape``; ``df`` returns the Jacobian of shape out_shape + (dim_in,).
    Norm constants are caller-declared, never estimated: suprema over the
    whole state space are not computable.
    """

    f: Callable
    dim_in: int
    out_shape: tuple
    df: Optional[Callable] = None
    d2f: Optional[Callable] = None
    bound: Optional[float] = None
    lip: Optional[float] = None
    name: str = ""

    def eval(self, t, y):
        out = np.asarray(self.f(t, y), dtype=float)
        if out.shape != self.out_shape:
            raise ShapeError(
                "%s: evaluator returned shape %s, declared %s"
                % (self.name or "f", out.shape, self.out_shape)
            )
        return out

    def jacobian(self, t, y):
        if self.df is None:
            raise ShapeError("%s: no derivative evaluator declared" % (self.name or "f"))
        out = np.asarray(self.df(t, y), dtype=float)
        want = self.out_shape + (self.dim_in,)
        if out.shape != want:
            raise ShapeError(
                "%s: derivative returned shape %s, expected %s"
                % (self.name or "f", out.shape, want)
            )
        return out


def validate_function_model(fm, n_probes=100, step=1e-5, tol=1e-4, t_range=(0.0, 1.0), seed=1234):
    """Finite-difference check of the declared derivative on random probes.

    Asserts |Df(t,y) h - (f(t,y+h) - f(t,y))| <= tol * |h| for random unit
    directions scaled to |h| = step.  Raises ShapeError on failure.
    """
    if fm.df is None:
        return
    rng = np.random.default_rng(seed)
    for _ in range(n_probes):
        t = rng.uniform(*t_range)
        y = rng.standard_normal(fm.dim_in)
        h = rng.standard_normal(fm.dim_in)
        h *= step / np.linalg.norm(h)
        lhs = fm.jacobian(t, y) @ h
        rhs = fm.eval(t, y + h) - fm.eval(t, y)
        err = np.linalg.norm(lhs - rhs)
        if err > tol * step:
            raise ShapeError(
                "%s: derivative inconsistent with evaluator at t=%g (FD error %.3e > %.1e)"
                % (fm.name or "f", t, err, tol * step)
            )


def _flat_pair(C):
    """(times, Y as (n+1, q), Yp as (n+1, q, d)) for either controlled layout."""
    if isinstance(C, ControlledPath):
        return C.times, C.values, C.deriv
    n1, p, d = C.values.shape
    y = C.values.reshape(n1, p * d)
    # deriv[k, q, a, b] -> rows indexed by (q, b), direction axis last
    yp = np.ascontiguousarray(np.swapaxes(C.deriv, 2, 3).reshape(n1, p * d, d))
    return C.times, y, yp


def _check_same_grid(C, X):
    if len(C) != X.values.shape[0] or not np.array_equal(C.times, X.times):
        raise GridError("controlled data and driver must share the grid")


def remainder(C, X, i, j):
    """R^Y_{i,j} = Y_j - Y_i - Y'_i X_{i,j} in the value shape of C."""
    _check_same_grid(C, X)
    n1 = len(C)
    if not (0 <= i < n1 and 0 <= j < n1):
        raise GridError("node index out of range")
    dx = X.values[j] - X.values[i]
    if isinstance(C, ControlledPath):
        return C.values[j] - C.values[i] - C.deriv[i] @ dx
    lin = np.einsum("qab,a->qb", C.deriv[i], dx)
    return C.values[j] - C.values[i] - lin


def controlled_seminorm(C, X, alpha, max_nodes=None):
    """||Y'||_alpha + ||R^Y||_{2 alpha} over grid pairs."""
    if not (1.0 / 3.0 < alpha <= 0.5):
        raise GridError("exponent must lie in (1/3, 1/2], got %g" % alpha)
    _check_same_grid(C, X)
    times, y, yp = _flat_pair(C)
    xv = X.values
    stride = _scan_stride(times.shape[0], max_nodes)
    if stride > 1:
        times, y = _subsampled(C.times, y, stride)
        _, yp = _subsampled(C.times, yp, stride)
        _, xv = _subsampled(C.times, X.values, stride)
    n1 = times.shape[0]
    dnorm = kernels.pair_holder_max(times, np.ascontiguousarray(yp.reshape(n1, -1)), alpha)
    rnorm = kernels.remainder_pair_max(
        times,
        np.ascontiguousarray(y),
        np.ascontiguousarray(yp),
        np.ascontiguousarray(xv),
        2.0 * alpha,
    )
    return dnorm + rnorm


def controlled_norms(C, X, alpha, max_nodes=None):
    """(seminorm, |.|-norm, full norm): the latter add |Y'_0| and |Y_0| + |Y'_0|."""
    semi = controlled_seminorm(C, X, alpha, max_nodes)
    d0 = float(np.linalg.norm(C.deriv[0]))
    y0 = float(np.linalg.norm(C.values[0]))
    return semi, d0 + semi, y0 + d0 + semi


def compose_function(fm, C):
    """Pointwise composition (f(t, Y_t), D_y f(t, Y_t) Y'_t).

    Returns a ControlledPath for vector-valued f and a ControlledIntegrand
    for matrix-valued f (output shape (q, d) with d the driver dimension).
    """
    if not isinstance(C, ControlledPath):
        raise ShapeError("compose_function expects a state-valued controlled path")
    if fm.dim_in != C.state_dim:
        raise ShapeError("function input dimension %d != state dimension %d" % (fm.dim_in, C.state_dim))
    n1 = len(C)
    d = C.driver_dim
    vals = np.empty((n1,) + fm.out_shape)
    jacs = np.empty((n1,) + fm.out_shape + (fm.dim_in,))
    for k in range(n1):
        t = C.times[k]
        y = C.values[k]
        vals[k] = fm.eval(t, y)
        jacs[k] = fm.jacobian(t, y)
    if len(fm.out_shape) == 1:
        deriv = np.einsum("kqc,kca->kqa", jacs, C.deriv)
        return ControlledPath(C.times, vals, deriv)
    if len(fm.out_shape) == 2 and fm.out_shape[1] == d:
        deriv = np.einsum("kqbc,kca->kqab", jacs, C.deriv)
        return ControlledIntegrand(C.times, vals, deriv)
    raise ShapeError("unsupported output shape %s for composition" % (fm.out_shape,))


def compose_linear(phi, C):
    """Composition with a constant linear map, applied to values and derivative."""
    phi = np.asarray(phi, dtype=float)
    if not isinstance(C, ControlledPath):
        raise ShapeError("compose_linear expects a state-valued controlled path")
    if phi.ndim != 2 or phi.shape[1] != C.state_dim:
        raise ShapeError("linear map must be (q, p) with p=%d" % C.state_dim)
    return ControlledPath(C.times, C.values @ phi.T, np.einsum("qp,kpa->kqa", phi, C.deriv))


def compose_bilinear(B, C1, C2):
    """Composition with a bilinear map; the derivative follows the Leibniz rule
    B(Y, Z') + B(Y', Z).
    """
    if not (isinstance(C1, ControlledPath) and isinstance(C2, ControlledPath)):
        raise ShapeError("compose_bilinear expects state-valued controlled paths")
    if len(C1) != len(C2) or not np.array_equal(C1.times, C2.times):
        raise GridError("controlled paths must share the grid")
    if C1.driver_dim != C2.driver_dim:
        raise ShapeError("controlled paths must share the driver dimension")
    n1, d = len(C1), C1.driver_dim
    probe = np.asarray(B(C1.values[0], C2.values[0]), dtype=float)
    vals = np.empty((n1,) + probe.shape)
    deriv = np.empty((n1,) + probe.shape + (d,))
    for k in range(n1):
        y, z = C1.values[k], C2.values[k]
        vals[k] = B(y, z)
        for a in range(d):
            deriv[k, ..., a] = np.asarray(B(y, C2.deriv[k, :, a])) + np.asarray(
                B(C1.deriv[k, :, a], z)
            )
    return ControlledPath(C1.times, vals, deriv)


def pair(C1, C2):
    """Concatenated state (Y, Z) with derivative (Y', Z')."""
    if len(C1) != len(C2) or not np.array_equal(C1.times, C2.times):
        raise GridError("controlled paths must share the grid")
    if C1.driver_dim != C2.driver_dim:
        raise ShapeError("controlled paths must share the driver dimension")
    values = np.concatenate([C1.values, C2.values], axis=1)
    deriv = np.concatenate([C1.deriv, C2.deriv], axis=1)
    return ControlledPath(C1.times, values, deriv)


def project(C, lo, hi):
    """Slice of the state axis, the inverse of ``pair``."""
    return ControlledPath(C.times, C.values[:, lo:hi], C.deriv[:, lo:hi])


def dump_csv(C, X, path):
    """Diagnostic dump: t, state, derivative and the one-step remainder scan."""
    _check_same_grid(C, X)
    times, y, yp = _flat_pair(C)
    n1, q = y.shape
    d = yp.shape[2]
    with open(path, "w") as fh:
        head = ["t"]
        head += ["y%d" % (i + 1) for i in range(q)]
        head += ["yp%d_%d" % (i + 1, a + 1) for i in range(q) for a in range(d)]
        head += ["r%d" % (i + 1) for i in range(q)]
        fh.write(",".join(head) + "\n")
        for k in range(n1):
            if k < n1 - 1:
                r = y[k + 1] - y[k] - yp[k] @ (X.values[k + 1] - X.values[k])
            else:
                r = np.zeros(q)
            row = [times[k], *y[k], *yp[k].ravel(), *r]
            fh.write(",".join("%.17g" % v for v in row) + "\n")
