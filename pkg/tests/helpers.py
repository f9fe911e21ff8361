"""Shared constructions for the test-suite."""

import numpy as np

from roughpaths.controlled import ControlledIntegrand, ControlledPath
from roughpaths.grids import SampledPath, TimeGrid


def brownian(rng, n, d=1, horizon=1.0):
    g = TimeGrid.uniform(horizon, n)
    vals = np.zeros((n + 1, d))
    vals[1:] = (rng.standard_normal((n, d)) * np.sqrt(horizon / n)).cumsum(axis=0)
    return SampledPath(g, vals)


def self_integrand(R):
    """The integrand of int X (x) dX against X's own lift, flattened to d^2
    states: value rows (i*d+j, b) = X_{0,u}[i] delta_{jb}, derivative
    delta_{ia} delta_{jb}.  Its remainder vanishes and its derivative is
    constant, so compensated sums are partition-independent.
    """
    n1 = len(R.grid)
    d = R.dim
    x0u = R.values - R.values[0]
    eye = np.eye(d)
    values = np.einsum("ki,jb->kijb", x0u, eye).reshape(n1, d * d, d)
    deriv = np.tile(
        np.einsum("ia,jb->ijab", eye, eye).reshape(d * d, d, d), (n1, 1, 1, 1)
    )
    return ControlledIntegrand(R.times, values, deriv)


def scalar_integrand(times, y, yp):
    """1-d integrand from plain arrays."""
    n1 = len(times)
    return ControlledIntegrand(
        times,
        np.asarray(y, dtype=float).reshape(n1, 1, 1),
        np.asarray(yp, dtype=float).reshape(n1, 1, 1, 1),
    )


def controlled_scalar(times, y, yp):
    n1 = len(times)
    return ControlledPath(
        times,
        np.asarray(y, dtype=float).reshape(n1, 1),
        np.asarray(yp, dtype=float).reshape(n1, 1, 1),
    )
